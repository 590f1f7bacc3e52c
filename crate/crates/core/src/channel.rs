//! Link budget: pathloss, thermal noise, and the single-reflector NLOS model.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::antenna::Beam;
use crate::error::{invalid, Result};
use crate::geometry::{Bearing, ClusterGeometry, Point2D};
use crate::rng;

/// Minimum NLOS penalty: a 0.7 power reflection coefficient, rounded up.
pub const NLOS_FLOOR_DB: f64 = 1.55;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudgetParams {
    /// UE transmit power, dBm.
    pub p_ue: f64,
    /// Noise power spectral density, dBm/Hz.
    pub n0: f64,
    /// Receiver bandwidth, Hz.
    pub bandwidth: f64,
    /// Carrier frequency, Hz. Informational only; pathloss is fitted at 28 GHz.
    pub carrier: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            p_ue: 0.0,
            n0: -171.0,
            bandwidth: 1.08e6,
            carrier: 28e9,
        }
    }
}

impl LinkBudgetParams {
    pub fn noise_power(&self) -> f64 {
        self.n0 + 10.0 * self.bandwidth.log10()
    }
}

/// Close-in pathloss in dB, valid from the 1 m reference distance outward.
pub fn pathloss(d: f64) -> Result<f64> {
    if !(d >= 1.0) {
        return Err(invalid("d", format!("pathloss needs d >= 1 m, got {d}")));
    }
    Ok(pathloss_unchecked(d))
}

fn pathloss_unchecked(d: f64) -> f64 {
    61.4 + 21.0 * d.max(1.0).log10()
}

/// Excess loss distribution for blocked links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlosModel {
    pub floor_db: f64,
    /// Mean of the exponential excess added on top of the floor.
    pub excess_mean_db: f64,
}

impl Default for NlosModel {
    fn default() -> Self {
        Self {
            floor_db: NLOS_FLOOR_DB,
            excess_mean_db: 10.0,
        }
    }
}

/// Per-(cell, UE) link realization for one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkState {
    Los,
    /// The direct path is blocked and energy arrives via one reflector that
    /// sits at `reflector` bearing from the UE, halfway out to the cell range.
    Blocked {
        reflector: Bearing,
        nlos_penalty_db: f64,
    },
}

impl LinkState {
    pub fn is_blocked(&self) -> bool {
        matches!(self, LinkState::Blocked { .. })
    }

    pub fn nlos_penalty_db(&self) -> f64 {
        match self {
            LinkState::Los => 0.0,
            LinkState::Blocked {
                nlos_penalty_db, ..
            } => *nlos_penalty_db,
        }
    }
}

/// Independent Bernoulli(`p_blk`) blocking for `n_sc` links.
pub fn sample_blocking(
    n_sc: usize,
    p_blk: f64,
    model: &NlosModel,
    seed: u64,
) -> Result<Vec<LinkState>> {
    if !(0.0..=1.0).contains(&p_blk) {
        return Err(invalid("p_blk", format!("probability out of range: {p_blk}")));
    }
    if !(model.excess_mean_db >= 0.0) {
        return Err(invalid("excess_mean_db", "must be non-negative"));
    }
    let mut rng = rng::stream(seed, &[rng::tag::BLOCKING]);
    let excess = (model.excess_mean_db > 0.0)
        .then(|| Exp::new(1.0 / model.excess_mean_db).expect("positive rate"));
    Ok((0..n_sc)
        .map(|_| {
            // Draw all variates unconditionally so each link consumes the
            // same stream regardless of p_blk.
            let u: f64 = rng.random();
            let reflector = Bearing::new(std::f64::consts::TAU * rng.random::<f64>());
            let extra = excess.map_or(0.0, |e| e.sample(&mut rng));
            if u < p_blk {
                LinkState::Blocked {
                    reflector,
                    nlos_penalty_db: model.floor_db + extra,
                }
            } else {
                LinkState::Los
            }
        })
        .collect())
}

/// Resolved propagation path between the UE and one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    /// Bearing at which energy leaves the UE.
    pub departure: Bearing,
    /// Bearing from the cell toward where energy arrives from.
    pub arrival: Bearing,
    /// Total travelled length, meters.
    pub length: f64,
    pub penalty_db: f64,
}

impl Path {
    pub fn resolve(geom: &ClusterGeometry, link: &LinkState, cell: usize) -> Path {
        let ue = geom.ue();
        let sc = geom.cells()[cell];
        let d = ue.distance(&sc);
        match *link {
            LinkState::Los => Path {
                departure: ue.bearing_to(&sc),
                arrival: sc.bearing_to(&ue),
                length: d,
                penalty_db: 0.0,
            },
            LinkState::Blocked {
                reflector,
                nlos_penalty_db,
            } => {
                let r: Point2D = ue.offset(reflector, d / 2.0);
                Path {
                    departure: reflector,
                    arrival: sc.bearing_to(&r),
                    length: d / 2.0 + r.distance(&sc),
                    penalty_db: nlos_penalty_db,
                }
            }
        }
    }

    /// Received power in dBm through the given UE and cell beams.
    pub fn received_power(&self, params: &LinkBudgetParams, ue_beam: &Beam, sc_beam: &Beam) -> f64 {
        params.p_ue + ue_beam.gain_toward(self.departure) + sc_beam.gain_toward(self.arrival)
            - pathloss_unchecked(self.length)
            - self.penalty_db
    }
}

/// Received power at `cell` in dBm for one beam pair.
pub fn received_power(
    params: &LinkBudgetParams,
    geom: &ClusterGeometry,
    link: &LinkState,
    ue_beam: &Beam,
    sc_beam: &Beam,
    cell: usize,
) -> Result<f64> {
    if cell >= geom.n_cells() {
        return Err(invalid("cell", format!("no cell {cell} in cluster")));
    }
    let path = Path::resolve(geom, link, cell);
    pathloss(path.length)?;
    Ok(path.received_power(params, ue_beam, sc_beam))
}
