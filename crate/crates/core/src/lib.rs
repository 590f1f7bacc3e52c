//! Coordinated initial access for clustered millimeter-wave small cells.
//!
//! The crate models a cluster of mmWave small cells (mmSCs) that share
//! power-delay-profile measurement reports over backhaul so that, after one
//! UE transmit sweep, every cell can reorder its receive beams toward a
//! coarse UE position estimate. An uncoordinated exhaustive beam-pair search
//! is provided as the baseline.
//!
//! Layering, bottom-up:
//!
//! - [`geometry`]: cluster layout, UE placement, ground-truth angles/distances
//! - [`antenna`]: directional gain pattern and beam codebooks
//! - [`channel`]: pathloss, noise, blocking and the link budget
//! - [`preamble`]: Zadoff-Chu preambles, PDP correlation, detection thresholds
//! - [`estimation`]: angle/distance/position recovery and estimation areas
//! - [`protocol`]: exhaustive and coordinated IA state machines
//! - [`experiments`]: seeded Monte Carlo campaigns producing [`experiments::ResultTable`]s
//! - [`config`], [`output`], [`selftest`]: configuration, CSV/SVG emission, oracle checks

pub mod antenna;
pub mod channel;
pub mod config;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod geometry;
pub mod output;
pub mod preamble;
pub mod protocol;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};
