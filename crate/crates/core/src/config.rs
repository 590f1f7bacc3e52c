//! Simulation configuration.
//!
//! Configs are TOML: `key = value` lines grouped under `[section]` headers.
//! Every key is optional; an empty file yields the defaults below. Unknown
//! keys are rejected. Values marked "model default" are not fixed by the
//! reference system parameters and were chosen for this simulator.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::antenna::default_beamwidth;
use crate::error::{Error, Result};
use crate::preamble::is_prime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub link: LinkSection,
    pub geometry: GeometrySection,
    pub antenna: AntennaSection,
    pub preamble: PreambleSection,
    pub detection: DetectionSection,
    pub blocking: BlockingSection,
    pub protocol: ProtocolSection,
    pub estimation: EstimationSection,
    pub experiments: ExperimentsSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n0_dbm_hz: f64,
    /// UE transmit power (model default).
    pub p_ue_dbm: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self {
            carrier_hz: 28e9,
            bandwidth_hz: 1.08e6,
            n0_dbm_hz: -171.0,
            p_ue_dbm: -20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    /// Inter-cell distance of the base triangle, meters.
    pub side_m: f64,
    pub n_sc: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            side_m: 200.0,
            n_sc: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaSection {
    pub n_tx: usize,
    /// Cell Rx codebook size (model default).
    pub n_rx: usize,
    /// UE half-power beamwidth; defaults to one beam spacing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ue_beamwidth_deg: Option<f64>,
    /// Cell half-power beamwidth; defaults to one beam spacing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sc_beamwidth_deg: Option<f64>,
}

impl Default for AntennaSection {
    fn default() -> Self {
        Self {
            n_tx: 8,
            n_rx: 8,
            ue_beamwidth_deg: None,
            sc_beamwidth_deg: None,
        }
    }
}

impl AntennaSection {
    pub fn ue_beamwidth(&self, n_tx: usize) -> f64 {
        self.ue_beamwidth_deg
            .map_or_else(|| default_beamwidth(n_tx), f64::to_radians)
    }

    pub fn sc_beamwidth(&self) -> f64 {
        self.sc_beamwidth_deg
            .map_or_else(|| default_beamwidth(self.n_rx), f64::to_radians)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreambleSection {
    pub n_zc: usize,
    pub root: usize,
    /// Map propagation delay to a PDP lag instead of arriving at lag 0.
    pub delay_from_distance: bool,
}

impl Default for PreambleSection {
    fn default() -> Self {
        Self {
            n_zc: 839,
            root: 1,
            delay_from_distance: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    FalseAlarm,
    Miss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    pub mode: ThresholdMode,
    pub p_fa: f64,
    pub p_miss: f64,
    pub calibration_trials: usize,
    /// Miss-mode reference link: UE-cell distance (model default).
    pub reference_distance_m: f64,
    /// Miss-mode reference link: both beams off boresight by half a beam
    /// spacing, i.e. the worst best-beam alignment (model default).
    pub reference_half_beam_offset: bool,
}

impl Default for DetectionSection {
    fn default() -> Self {
        Self {
            mode: ThresholdMode::Miss,
            p_fa: 0.01,
            p_miss: 0.01,
            calibration_trials: 4000,
            reference_distance_m: 200.0,
            reference_half_beam_offset: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockingSection {
    /// Per-link blocking probability during protocol runs (model default).
    pub p_blk: f64,
    pub nlos_floor_db: f64,
    /// Mean exponential excess loss of blocked links (model default).
    pub nlos_excess_mean_db: f64,
}

impl Default for BlockingSection {
    fn default() -> Self {
        Self {
            p_blk: 0.0,
            nlos_floor_db: crate::channel::NLOS_FLOOR_DB,
            nlos_excess_mean_db: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorChoice {
    Point,
    Refine,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    /// Beam-pair examination slot, seconds.
    pub t_ra_s: f64,
    pub backhaul_latency_s: f64,
    /// Round cap; defaults to N_rx (exhaustive) and N_rx + 1 (coordinated).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<usize>,
    pub estimator: EstimatorChoice,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            t_ra_s: 1e-3,
            backhaul_latency_s: 0.0,
            max_rounds: None,
            estimator: EstimatorChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationSection {
    pub grid_resolution_m: f64,
}

impl Default for EstimationSection {
    fn default() -> Self {
        Self {
            grid_resolution_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentsSection {
    pub seed: u64,
    /// Paired trials per grid point for protocol experiments.
    pub trials: usize,
    /// Trials per grid point for the LOS-probability experiment.
    pub p_los_trials: usize,
    pub p_los_cluster_sizes: Vec<usize>,
    pub p_los_p_blk: Vec<f64>,
    pub n_tx_values: Vec<usize>,
    pub power_grid_dbm: Vec<f64>,
    pub p_miss_grid: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
}

impl Default for ExperimentsSection {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 2000,
            p_los_trials: 10_000,
            p_los_cluster_sizes: vec![3, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22],
            p_los_p_blk: vec![0.1, 0.3, 0.5],
            n_tx_values: vec![4, 8],
            power_grid_dbm: vec![-45.0, -40.0, -35.0, -30.0, -25.0],
            p_miss_grid: vec![0.001, 0.01, 0.05, 0.1, 0.2],
            cluster_sizes: vec![1, 3, 4, 5, 6, 7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn check_open_probability(field: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("probability out of range (0, 1): {p}")))
    }
}

fn check_closed_probability(field: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(field_err(field, format!("probability out of range [0, 1]: {p}")))
    }
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive, got {v}")))
    }
}

fn check_beamwidth(field: &str, deg: Option<f64>) -> Result<()> {
    match deg {
        Some(d) if !(d > 0.0 && d < 180.0) => Err(field_err(field, format!("must lie in (0, 180) degrees, got {d}"))),
        _ => Ok(()),
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_owned()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization.
    /// The output directory does not take part.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        let digest = Sha256::digest(c.to_toml_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("link.bandwidth_hz", self.link.bandwidth_hz)?;
        check_positive("link.carrier_hz", self.link.carrier_hz)?;
        if !self.link.n0_dbm_hz.is_finite() || !self.link.p_ue_dbm.is_finite() {
            return Err(field_err("link", "power levels must be finite"));
        }
        check_positive("geometry.side_m", self.geometry.side_m)?;
        if self.geometry.n_sc == 0 || self.geometry.n_sc == 2 {
            return Err(field_err("geometry.n_sc", "must be 1 or at least 3"));
        }
        if self.antenna.n_tx == 0 || self.antenna.n_rx == 0 {
            return Err(field_err("antenna", "codebook sizes must be at least 1"));
        }
        check_beamwidth("antenna.ue_beamwidth_deg", self.antenna.ue_beamwidth_deg)?;
        check_beamwidth("antenna.sc_beamwidth_deg", self.antenna.sc_beamwidth_deg)?;
        if !is_prime(self.preamble.n_zc) {
            return Err(field_err("preamble.n_zc", format!("{} is not prime", self.preamble.n_zc)));
        }
        if self.preamble.root == 0 || self.preamble.root >= self.preamble.n_zc {
            return Err(field_err("preamble.root", format!("must lie in 1..{}", self.preamble.n_zc)));
        }
        check_open_probability("detection.p_fa", self.detection.p_fa)?;
        check_open_probability("detection.p_miss", self.detection.p_miss)?;
        if self.detection.calibration_trials < 10 {
            return Err(field_err("detection.calibration_trials", "must be at least 10"));
        }
        check_positive("detection.reference_distance_m", self.detection.reference_distance_m)?;
        if self.detection.reference_distance_m < 1.0 {
            return Err(field_err("detection.reference_distance_m", "must be at least 1 m"));
        }
        check_closed_probability("blocking.p_blk", self.blocking.p_blk)?;
        if !(self.blocking.nlos_floor_db >= 0.0 && self.blocking.nlos_excess_mean_db >= 0.0) {
            return Err(field_err("blocking", "NLOS losses must be non-negative"));
        }
        check_positive("protocol.t_ra_s", self.protocol.t_ra_s)?;
        if !(self.protocol.backhaul_latency_s >= 0.0) {
            return Err(field_err("protocol.backhaul_latency_s", "must be non-negative"));
        }
        if self.protocol.max_rounds == Some(0) {
            return Err(field_err("protocol.max_rounds", "must be at least 1"));
        }
        check_positive("estimation.grid_resolution_m", self.estimation.grid_resolution_m)?;

        let e = &self.experiments;
        if e.trials == 0 || e.p_los_trials == 0 {
            return Err(field_err("experiments", "trial counts must be at least 1"));
        }
        for (name, empty) in [
            ("experiments.p_los_cluster_sizes", e.p_los_cluster_sizes.is_empty()),
            ("experiments.p_los_p_blk", e.p_los_p_blk.is_empty()),
            ("experiments.n_tx_values", e.n_tx_values.is_empty()),
            ("experiments.power_grid_dbm", e.power_grid_dbm.is_empty()),
            ("experiments.p_miss_grid", e.p_miss_grid.is_empty()),
            ("experiments.cluster_sizes", e.cluster_sizes.is_empty()),
        ] {
            if empty {
                return Err(field_err(name, "grid must not be empty"));
            }
        }
        if e.p_los_cluster_sizes.iter().any(|&n| n < 3) {
            return Err(field_err("experiments.p_los_cluster_sizes", "cluster sizes must be at least 3"));
        }
        for &p in &e.p_los_p_blk {
            check_closed_probability("experiments.p_los_p_blk", p)?;
        }
        for &p in &e.p_miss_grid {
            check_open_probability("experiments.p_miss_grid", p)?;
        }
        if e.n_tx_values.contains(&0) {
            return Err(field_err("experiments.n_tx_values", "codebook sizes must be at least 1"));
        }
        if e.power_grid_dbm.iter().any(|p| !p.is_finite()) {
            return Err(field_err("experiments.power_grid_dbm", "powers must be finite"));
        }
        if e.cluster_sizes.iter().any(|&n| n == 0 || n == 2) {
            return Err(field_err(
                "experiments.cluster_sizes",
                "cluster sizes must be 1 (exhaustive baseline) or at least 3",
            ));
        }
        Ok(())
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    SimConfig::from_toml_str(&text)
}
