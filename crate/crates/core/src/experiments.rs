//! Seeded Monte Carlo campaigns.
//!
//! Each campaign sweeps one variable over a grid. Every random draw of a
//! trial is keyed by `(master seed, point index, trial index)`, and the two
//! schemes of a paired trial share the same key so their difference is not
//! sampling noise. Trials run in parallel and are reduced in index order, so
//! results do not depend on thread scheduling.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::antenna::{make_codebook, AntennaPattern, BeamCodebook, SweepOrder};
use crate::channel::{pathloss, sample_blocking, LinkBudgetParams, NlosModel, Path};
use crate::config::{EstimatorChoice, SimConfig, ThresholdMode};
use crate::error::{invalid, Result};
use crate::estimation::{select_top3, MeasurementReport};
use crate::geometry::{build_cluster, Bearing};
use crate::preamble::{calibrate_threshold, fill_rx, generate_zc, Correlator, DetectionConfig, Noise};
use crate::protocol::{
    run_coordinated, run_exhaustive, EstimatorConfig, EstimatorMode, IaTrialOutcome, SweepSchedule, TrialSetup,
};
use crate::rng::{self, derive_seed, tag};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    PLosVsCluster,
    ReductionVsPower,
    ReductionVsPmiss,
    TimeVsCluster,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::PLosVsCluster,
        ExperimentKind::ReductionVsPower,
        ExperimentKind::ReductionVsPmiss,
        ExperimentKind::TimeVsCluster,
    ];

    /// Output file stem.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PLosVsCluster => "p_los_vs_cluster",
            ExperimentKind::ReductionVsPower => "reduction_vs_power",
            ExperimentKind::ReductionVsPmiss => "reduction_vs_pmiss",
            ExperimentKind::TimeVsCluster => "time_vs_cluster",
        }
    }
}

/// Columns used for the convenience plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlotSpec {
    pub x: usize,
    pub y: usize,
    /// Column whose distinct values split the rows into separate curves.
    pub group: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub plot: PlotSpec,
}

impl ResultTable {
    fn new(kind: ExperimentKind, cfg: &SimConfig, columns: &[&str], plot: PlotSpec) -> Self {
        Self {
            name: kind.name().to_owned(),
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
            config_hash: cfg.hash(),
            seed: cfg.experiments.seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            plot,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Sample mean and its standard error (sample std / √n).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Fully resolved parameters for one grid point of a protocol experiment.
///
/// Building one calibrates the detection threshold; [`Scenario::trial`] then
/// draws independent trial realizations from it.
#[derive(Debug, Clone)]
pub struct Scenario {
    cfg: SimConfig,
    point: u64,
    correlator: Arc<Correlator>,
    threshold: f64,
    ue_pattern: AntennaPattern,
}

impl Scenario {
    /// `point` keys the random streams of this grid point.
    pub fn new(cfg: &SimConfig, point: u64) -> Result<Self> {
        cfg.validate()?;
        let seq = generate_zc(cfg.preamble.root, cfg.preamble.n_zc)?;
        let n_tx = cfg.antenna.n_tx;
        let ue_pattern = AntennaPattern::new(cfg.antenna.ue_beamwidth(n_tx))?;
        let sc_pattern = AntennaPattern::new(cfg.antenna.sc_beamwidth())?;
        let params = link_params(cfg);
        let det = match cfg.detection.mode {
            ThresholdMode::FalseAlarm => DetectionConfig::FalseAlarm { p_fa: cfg.detection.p_fa },
            ThresholdMode::Miss => {
                let (ue_off, sc_off) = if cfg.detection.reference_half_beam_offset {
                    (TAU / (2 * n_tx) as f64, TAU / (2 * cfg.antenna.n_rx) as f64)
                } else {
                    (0.0, 0.0)
                };
                let reference_rx_dbm = params.p_ue + ue_pattern.gain(ue_off)? + sc_pattern.gain(sc_off)?
                    - pathloss(cfg.detection.reference_distance_m)?;
                DetectionConfig::Miss {
                    p_miss: cfg.detection.p_miss,
                    reference_rx_dbm,
                    trials: cfg.detection.calibration_trials,
                    seed: derive_seed(cfg.experiments.seed, &[tag::CALIBRATION, point]),
                }
            }
        };
        let threshold = calibrate_threshold(&det, params.noise_power(), &seq)?;
        Ok(Self {
            cfg: cfg.clone(),
            point,
            correlator: Arc::new(Correlator::new(&seq)),
            threshold,
            ue_pattern,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn trial_seed(&self, trial: u64) -> u64 {
        derive_seed(self.cfg.experiments.seed, &[tag::TRIAL, self.point, trial])
    }

    /// Builds trial `trial` with `n_sc` cells. A single-cell cluster keeps
    /// the UE drawn inside the full three-cell triangle.
    pub fn trial(&self, trial: u64) -> Result<TrialSetup> {
        let cfg = &self.cfg;
        let seed = self.trial_seed(trial);
        let n_sc = cfg.geometry.n_sc;
        let n_tx = cfg.antenna.n_tx;
        let full = build_cluster(n_sc.max(3), cfg.geometry.side_m, derive_seed(seed, &[tag::LAYOUT]))?;
        let ue = full.place_ue(derive_seed(seed, &[tag::UE]))?;
        let geom = full.with_ue(ue).truncated(n_sc);
        let links = sample_blocking(n_sc, cfg.blocking.p_blk, &nlos_model(cfg), derive_seed(seed, &[tag::BLOCKING]))?;
        let (ue_codebook, cell_codebooks) = codebooks(cfg, seed)?;

        let bandwidth = cfg.link.bandwidth_hz;
        let n_zc = cfg.preamble.n_zc;
        let delay_lags = geom
            .cells()
            .iter()
            .map(|c| {
                if cfg.preamble.delay_from_distance {
                    (c.distance(&ue) / SPEED_OF_LIGHT * bandwidth).round() as usize % n_zc
                } else {
                    0
                }
            })
            .collect();
        let params = link_params(cfg);
        let n_rx = cfg.antenna.n_rx;
        Ok(TrialSetup {
            geom,
            ue_codebook,
            cell_codebooks,
            links,
            params,
            noise: Noise::Awgn { power_dbm: params.noise_power() },
            threshold: self.threshold,
            correlator: Arc::clone(&self.correlator),
            delay_lags,
            noise_seed: derive_seed(seed, &[tag::SLOT_NOISE]),
            schedule: SweepSchedule { t_ra: cfg.protocol.t_ra_s, n_tx },
            backhaul_latency: cfg.protocol.backhaul_latency_s,
            estimator: EstimatorConfig {
                mode: match cfg.protocol.estimator {
                    EstimatorChoice::Point => EstimatorMode::Point,
                    EstimatorChoice::Refine => EstimatorMode::Refine,
                    EstimatorChoice::Auto => EstimatorMode::Auto,
                },
                band_halfwidth: self.ue_pattern.phi_ml(),
                grid_resolution: cfg.estimation.grid_resolution_m,
            },
            max_rounds_exhaustive: cfg.protocol.max_rounds.unwrap_or(n_rx),
            max_rounds_coordinated: cfg.protocol.max_rounds.unwrap_or(n_rx + 1),
        })
    }

    /// Runs both schemes on the same realization of trial `trial`.
    pub fn run_pair(&self, trial: u64) -> Result<PairedOutcome> {
        let setup = self.trial(trial)?;
        Ok(PairedOutcome {
            exhaustive: run_exhaustive(&setup),
            coordinated: run_coordinated(&setup),
        })
    }

    fn run_pairs(&self, trials: usize) -> Result<Vec<PairedOutcome>> {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| self.run_pair(t))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedOutcome {
    pub exhaustive: IaTrialOutcome,
    pub coordinated: IaTrialOutcome,
}

fn link_params(cfg: &SimConfig) -> LinkBudgetParams {
    LinkBudgetParams {
        p_ue: cfg.link.p_ue_dbm,
        n0: cfg.link.n0_dbm_hz,
        bandwidth: cfg.link.bandwidth_hz,
        carrier: cfg.link.carrier_hz,
    }
}

fn nlos_model(cfg: &SimConfig) -> NlosModel {
    NlosModel {
        floor_db: cfg.blocking.nlos_floor_db,
        excess_mean_db: cfg.blocking.nlos_excess_mean_db,
    }
}

/// UE codebook at a random rotation, plus per-cell codebooks each with a
/// random rotation and a random sweep order.
fn codebooks(cfg: &SimConfig, seed: u64) -> Result<(BeamCodebook, Vec<BeamCodebook>)> {
    let n_tx = cfg.antenna.n_tx;
    let mut r = rng::stream(seed, &[tag::UE_CODEBOOK]);
    let ue = make_codebook(
        n_tx,
        cfg.antenna.ue_beamwidth(n_tx),
        Bearing::new(TAU * r.random::<f64>()),
        SweepOrder::Identity,
    )?;
    let cells = (0..cfg.geometry.n_sc as u64)
        .map(|c| {
            let cell_seed = derive_seed(seed, &[tag::CELL_CODEBOOK, c]);
            let start = rng::stream(cell_seed, &[]).random::<f64>() * TAU;
            make_codebook(
                cfg.antenna.n_rx,
                cfg.antenna.sc_beamwidth(),
                Bearing::new(start),
                SweepOrder::Shuffled { seed: cell_seed },
            )
        })
        .collect::<Result<_>>()?;
    Ok((ue, cells))
}

/// Aggregate of one reduction grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionPoint {
    pub n_tx: usize,
    /// Percentage change of mean IA time against exhaustive; negative is faster.
    pub reduction_pct: f64,
    pub stderr_pct: f64,
    pub mean_coordinated_s: f64,
    pub stderr_coordinated_s: f64,
    pub mean_exhaustive_s: f64,
    pub stderr_exhaustive_s: f64,
    pub success_coordinated: f64,
    pub success_exhaustive: f64,
    pub trials: usize,
}

impl ReductionPoint {
    /// Ratio of means, with a delta-method standard error computed from the
    /// paired per-trial differences.
    pub fn from_pairs(n_tx: usize, pairs: &[PairedOutcome]) -> Result<Self> {
        let t_new: Vec<f64> = pairs.iter().map(|p| p.coordinated.ia_time).collect();
        let t_con: Vec<f64> = pairs.iter().map(|p| p.exhaustive.ia_time).collect();
        let (m_new, se_new) = mean_stderr(&t_new);
        let (m_con, se_con) = mean_stderr(&t_con);
        let reduction_pct = crate::protocol::ia_time_reduction(m_new, m_con)?;
        let ratio = m_new / m_con;
        let resid: Vec<f64> = t_new.iter().zip(&t_con).map(|(a, b)| a - ratio * b).collect();
        let (_, se_resid) = mean_stderr(&resid);
        let frac = |ok: &dyn Fn(&PairedOutcome) -> bool| pairs.iter().filter(|p| ok(p)).count() as f64 / pairs.len() as f64;
        Ok(Self {
            n_tx,
            reduction_pct,
            stderr_pct: 100.0 * se_resid / m_con,
            mean_coordinated_s: m_new,
            stderr_coordinated_s: se_new,
            mean_exhaustive_s: m_con,
            stderr_exhaustive_s: se_con,
            success_coordinated: frac(&|p| p.coordinated.success),
            success_exhaustive: frac(&|p| p.exhaustive.success),
            trials: pairs.len(),
        })
    }
}

/// Runs `trials` paired trials of one grid point.
pub fn reduction_point(cfg: &SimConfig, point: u64, trials: usize) -> Result<ReductionPoint> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let scenario = Scenario::new(cfg, point)?;
    ReductionPoint::from_pairs(cfg.antenna.n_tx, &scenario.run_pairs(trials)?)
}

const REDUCTION_TAIL: [&str; 9] = [
    "reduction_pct",
    "stderr",
    "t_coordinated_ms",
    "t_coordinated_stderr_ms",
    "t_exhaustive_ms",
    "t_exhaustive_stderr_ms",
    "success_coordinated",
    "success_exhaustive",
    "trials",
];

fn reduction_row(lead: [f64; 2], p: &ReductionPoint) -> Vec<f64> {
    vec![
        lead[0],
        lead[1],
        p.reduction_pct,
        p.stderr_pct,
        p.mean_coordinated_s * 1e3,
        p.stderr_coordinated_s * 1e3,
        p.mean_exhaustive_s * 1e3,
        p.stderr_exhaustive_s * 1e3,
        p.success_coordinated,
        p.success_exhaustive,
        p.trials as f64,
    ]
}

fn reduction_columns(sweep: &str) -> Vec<&str> {
    let mut cols = vec!["n_tx", sweep];
    cols.extend(REDUCTION_TAIL);
    cols
}

/// IA time reduction against UE transmit power, per Tx codebook size.
pub fn run_reduction_vs_power(cfg: &SimConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let e = &cfg.experiments;
    let cols = reduction_columns("p_ue_dbm");
    let mut table = ResultTable::new(ExperimentKind::ReductionVsPower, cfg, &cols, PlotSpec { x: 1, y: 2, group: Some(0) });
    let mut point = 0u64;
    for &n_tx in &e.n_tx_values {
        for &p_ue in &e.power_grid_dbm {
            let mut c = cfg.clone();
            c.antenna.n_tx = n_tx;
            c.link.p_ue_dbm = p_ue;
            // A noise-referenced threshold; a miss-mode threshold would
            // scale with the swept power itself.
            c.detection.mode = ThresholdMode::FalseAlarm;
            let p = reduction_point(&c, point, e.trials)?;
            table.rows.push(reduction_row([n_tx as f64, p_ue], &p));
            point += 1;
        }
    }
    Ok(table)
}

/// IA time reduction against the miss-mode detection target.
pub fn run_reduction_vs_pmiss(cfg: &SimConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let e = &cfg.experiments;
    let cols = reduction_columns("p_miss");
    let mut table = ResultTable::new(ExperimentKind::ReductionVsPmiss, cfg, &cols, PlotSpec { x: 1, y: 2, group: Some(0) });
    let mut point = 0u64;
    for &n_tx in &e.n_tx_values {
        for &p_miss in &e.p_miss_grid {
            let mut c = cfg.clone();
            c.antenna.n_tx = n_tx;
            c.detection.mode = ThresholdMode::Miss;
            c.detection.p_miss = p_miss;
            let p = reduction_point(&c, point, e.trials)?;
            table.rows.push(reduction_row([n_tx as f64, p_miss], &p));
            point += 1;
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterPoint {
    pub n_sc: usize,
    pub normalized: f64,
    pub stderr: f64,
    pub mean_s: f64,
    pub stderr_s: f64,
    pub success: f64,
    pub trials: usize,
}

/// Mean IA time per cluster size, normalized by the single-cell exhaustive
/// mean. Sizes of three or more run the coordinated scheme.
pub fn time_vs_cluster(cfg: &SimConfig) -> Result<Vec<ClusterPoint>> {
    cfg.validate()?;
    let e = &cfg.experiments;
    if !e.cluster_sizes.contains(&1) {
        return Err(invalid("cluster_sizes", "grid must include the single-cell baseline"));
    }
    let mut raw = Vec::new();
    for (point, &n_sc) in e.cluster_sizes.iter().enumerate() {
        let mut c = cfg.clone();
        c.geometry.n_sc = n_sc;
        let scenario = Scenario::new(&c, point as u64)?;
        let outcomes: Vec<IaTrialOutcome> = (0..e.trials as u64)
            .into_par_iter()
            .map(|t| {
                let setup = scenario.trial(t)?;
                Ok(if n_sc == 1 { run_exhaustive(&setup) } else { run_coordinated(&setup) })
            })
            .collect::<Result<_>>()?;
        let times: Vec<f64> = outcomes.iter().map(|o| o.ia_time).collect();
        let (mean, se) = mean_stderr(&times);
        let success = outcomes.iter().filter(|o| o.success).count() as f64 / outcomes.len() as f64;
        raw.push((n_sc, mean, se, success));
    }
    let &(_, base, base_se, _) = raw.iter().find(|r| r.0 == 1).expect("checked above");
    Ok(raw
        .into_iter()
        .map(|(n_sc, mean, se, success)| {
            let normalized = mean / base;
            let stderr = if n_sc == 1 {
                base_se / base
            } else {
                normalized * ((se / mean).powi(2) + (base_se / base).powi(2)).sqrt()
            };
            ClusterPoint {
                n_sc,
                normalized,
                stderr,
                mean_s: mean,
                stderr_s: se,
                success,
                trials: e.trials,
            }
        })
        .collect())
}

pub fn run_time_vs_cluster(cfg: &SimConfig) -> Result<ResultTable> {
    let points = time_vs_cluster(cfg)?;
    let cols = ["n_sc", "normalized_time", "stderr", "t_mean_ms", "t_stderr_ms", "success", "trials"];
    let mut table = ResultTable::new(ExperimentKind::TimeVsCluster, cfg, &cols, PlotSpec { x: 0, y: 1, group: None });
    for p in points {
        table.rows.push(vec![
            p.n_sc as f64,
            p.normalized,
            p.stderr,
            p.mean_s * 1e3,
            p.stderr_s * 1e3,
            p.success,
            p.trials as f64,
        ]);
    }
    Ok(table)
}

/// Whether the three cells with the strongest noiseless best-pair PDP peaks
/// all have unblocked links in one trial.
fn p_los_trial(cfg: &SimConfig, correlator: &Correlator, seed: u64, buf: &mut [num_complex::Complex64]) -> Result<bool> {
    let n_sc = cfg.geometry.n_sc;
    let full = build_cluster(n_sc, cfg.geometry.side_m, derive_seed(seed, &[tag::LAYOUT]))?;
    let geom = full.clone().with_ue(full.place_ue(derive_seed(seed, &[tag::UE]))?);
    let links = sample_blocking(n_sc, cfg.blocking.p_blk, &nlos_model(cfg), derive_seed(seed, &[tag::BLOCKING]))?;
    let (ue_cb, cell_cbs) = codebooks(cfg, seed)?;
    let params = link_params(cfg);
    let mut no_rng = rng::stream(seed, &[]);
    let mut reports = Vec::with_capacity(n_sc);
    for (cell, cb) in cell_cbs.iter().enumerate() {
        let path = Path::resolve(&geom, &links[cell], cell);
        let mut best = (f64::NEG_INFINITY, 0);
        for tx in 0..ue_cb.len() {
            for rx in 0..cb.len() {
                let p = path.received_power(&params, &ue_cb.beam(tx), &cb.beam(rx));
                if p > best.0 {
                    best = (p, rx);
                }
            }
        }
        fill_rx(correlator.sequence(), best.0, Noise::Off, 0, &mut no_rng, buf);
        let (_, peak) = correlator.profile_in_place(buf)?;
        reports.push(MeasurementReport::new(cell, vec![peak], best.1)?);
    }
    let top = select_top3(&reports)?;
    Ok(top.iter().all(|r| !links[r.cell()].is_blocked()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PLosPoint {
    pub n_sc: usize,
    pub p_blk: f64,
    pub p_los: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// LOS probability of the three selected cells at one grid point.
pub fn p_los_point(cfg: &SimConfig, point: u64, n_sc: usize, p_blk: f64, trials: usize) -> Result<PLosPoint> {
    if n_sc < 3 {
        return Err(invalid("n_sc", "LOS selection needs at least three cells"));
    }
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let mut c = cfg.clone();
    c.geometry.n_sc = n_sc;
    c.blocking.p_blk = p_blk;
    c.validate()?;
    let seq = generate_zc(c.preamble.root, c.preamble.n_zc)?;
    let correlator = Correlator::new(&seq);
    let master = c.experiments.seed;
    let hits: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map_init(
            || vec![num_complex::Complex64::new(0.0, 0.0); seq.len()],
            |buf, t| {
                let seed = derive_seed(master, &[tag::TRIAL, point, t]);
                p_los_trial(&c, &correlator, seed, buf).map(|ok| if ok { 1.0 } else { 0.0 })
            },
        )
        .collect::<Result<_>>()?;
    let (p_los, stderr) = mean_stderr(&hits);
    Ok(PLosPoint {
        n_sc,
        p_blk,
        p_los,
        stderr,
        trials,
    })
}

pub fn run_p_los(cfg: &SimConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let e = &cfg.experiments;
    let mut table = ResultTable::new(
        ExperimentKind::PLosVsCluster,
        cfg,
        &["n_sc", "p_blk", "p_los", "stderr", "trials"],
        PlotSpec { x: 0, y: 2, group: Some(1) },
    );
    let mut point = 0u64;
    for &p_blk in &e.p_los_p_blk {
        for &n_sc in &e.p_los_cluster_sizes {
            let p = p_los_point(cfg, point, n_sc, p_blk, e.p_los_trials)?;
            table.rows.push(vec![p.n_sc as f64, p.p_blk, p.p_los, p.stderr, p.trials as f64]);
            point += 1;
        }
    }
    Ok(table)
}

pub fn run_experiment(kind: ExperimentKind, cfg: &SimConfig) -> Result<ResultTable> {
    match kind {
        ExperimentKind::PLosVsCluster => run_p_los(cfg),
        ExperimentKind::ReductionVsPower => run_reduction_vs_power(cfg),
        ExperimentKind::ReductionVsPmiss => run_reduction_vs_pmiss(cfg),
        ExperimentKind::TimeVsCluster => run_time_vs_cluster(cfg),
    }
}
