//! Initial-access state machines.
//!
//! Time advances in slots of `t_ra` seconds. In every slot the UE transmits
//! its preamble on one Tx beam and each cell correlates what it receives on
//! its current Rx beam. A round is one full UE Tx sweep with every cell
//! holding one Rx beam. The trial ends at the first slot in which any cell's
//! PDP peak clears the detection threshold.
//!
//! The exhaustive baseline walks each cell's own random Rx order. The
//! coordinated scheme shares round-1 reports over backhaul, estimates the UE
//! position and lets every cell sweep its Rx beams nearest-first toward it.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::antenna::BeamCodebook;
use crate::channel::{LinkBudgetParams, LinkState, Path};
use crate::error::Result;
use crate::estimation::{order_ccw, point_estimate, refine_location, select_top3, MeasurementReport};
use crate::geometry::{project_onto_triangle, ClusterGeometry, Point2D};
use crate::preamble::{fill_rx, Correlator, Noise};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Exhaustive,
    Coordinated,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Exhaustive => "exhaustive",
            Scheme::Coordinated => "coordinated",
        })
    }
}

/// How the coordinated scheme turns reports into a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    /// Cosine-rule solve plus trilateration on the three strongest reports.
    Point,
    /// Intersection of estimation areas over all reports.
    Refine,
    /// `Point` for three-cell clusters, `Refine` for larger ones.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    /// Half-width of each estimation-area angle band (the UE main-lobe width).
    pub band_halfwidth: f64,
    pub grid_resolution: f64,
}

/// Per-round UE Tx sweep timing. One Tx beam per slot, `n_tx` slots per round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSchedule {
    pub t_ra: f64,
    pub n_tx: usize,
}

impl SweepSchedule {
    pub fn slot(&self, round: usize, tx: usize) -> usize {
        round * self.n_tx + tx
    }

    pub fn round_slots(&self) -> usize {
        self.n_tx
    }
}

/// Trial-local report exchange between cells.
#[derive(Debug, Clone, Default)]
pub struct BackhaulBus {
    latency: f64,
    pending: Vec<(usize, MeasurementReport)>,
}

impl BackhaulBus {
    pub fn new(latency: f64) -> Self {
        Self {
            latency: latency.max(0.0),
            pending: Vec::new(),
        }
    }

    pub fn publish(&mut self, source: usize, report: MeasurementReport) {
        self.pending.push((source, report));
    }

    /// Hands every pending report to all cells, ordered by source cell.
    pub fn deliver(&mut self) -> Vec<MeasurementReport> {
        let mut out = std::mem::take(&mut self.pending);
        out.sort_by_key(|(src, _)| *src);
        out.into_iter().map(|(_, r)| r).collect()
    }

    /// Idle slots spent waiting for delivery.
    pub fn latency_slots(&self, t_ra: f64) -> usize {
        if self.latency <= 0.0 {
            0
        } else {
            (self.latency / t_ra).ceil() as usize
        }
    }
}

/// Everything two paired runs of one trial share.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub geom: ClusterGeometry,
    pub ue_codebook: BeamCodebook,
    pub cell_codebooks: Vec<BeamCodebook>,
    pub links: Vec<LinkState>,
    pub params: LinkBudgetParams,
    pub noise: Noise,
    pub threshold: f64,
    pub correlator: Arc<Correlator>,
    /// PDP lag at which each cell's preamble arrives.
    pub delay_lags: Vec<usize>,
    pub noise_seed: u64,
    pub schedule: SweepSchedule,
    pub backhaul_latency: f64,
    pub estimator: EstimatorConfig,
    pub max_rounds_exhaustive: usize,
    pub max_rounds_coordinated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IaTrialOutcome {
    pub scheme: Scheme,
    pub success: bool,
    pub slots_used: usize,
    pub ia_time: f64,
    pub rounds: usize,
    pub detecting_cell: Option<usize>,
    /// `(ue_tx_beam, cell_rx_beam)` of the detection.
    pub detecting_pair: Option<(usize, usize)>,
    pub estimated_ue: Option<Point2D>,
}

impl fmt::Display for IaTrialOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scheme: {}", self.scheme)?;
        writeln!(f, "success: {}", self.success)?;
        writeln!(f, "slots_used: {}", self.slots_used)?;
        writeln!(f, "ia_time_s: {}", self.ia_time)?;
        writeln!(f, "rounds: {}", self.rounds)?;
        match self.detecting_cell {
            Some(c) => writeln!(f, "detecting_cell: {c}")?,
            None => writeln!(f, "detecting_cell: none")?,
        }
        match self.detecting_pair {
            Some((t, r)) => writeln!(f, "detecting_pair: tx={t} rx={r}")?,
            None => writeln!(f, "detecting_pair: none")?,
        }
        match self.estimated_ue {
            Some(p) => write!(f, "estimated_ue: ({}, {})", p.x, p.y),
            None => write!(f, "estimated_ue: none"),
        }
    }
}

struct Detection {
    cell: usize,
    tx: usize,
    rx: usize,
}

/// Slot-level receiver shared by both schemes.
struct Receiver<'a> {
    setup: &'a TrialSetup,
    paths: Vec<Path>,
    buf: Vec<Complex64>,
}

impl<'a> Receiver<'a> {
    fn new(setup: &'a TrialSetup) -> Self {
        let paths = (0..setup.geom.n_cells())
            .map(|c| Path::resolve(&setup.geom, &setup.links[c], c))
            .collect();
        Self {
            setup,
            paths,
            buf: vec![Complex64::new(0.0, 0.0); setup.correlator.sequence().len()],
        }
    }

    /// PDP peak at `cell` when the UE uses Tx beam `tx` and the cell Rx beam
    /// `rx` during noise slot `slot`.
    fn peak(&mut self, cell: usize, tx: usize, rx: usize, slot: usize) -> f64 {
        let s = self.setup;
        let p = self.paths[cell].received_power(
            &s.params,
            &s.ue_codebook.beam(tx),
            &s.cell_codebooks[cell].beam(rx),
        );
        let mut rng = rng::stream(s.noise_seed, &[rng::tag::SLOT_NOISE, cell as u64, slot as u64]);
        let seq = s.correlator.sequence();
        fill_rx(seq, p, s.noise, s.delay_lags[cell], &mut rng, &mut self.buf);
        s.correlator
            .profile_in_place(&mut self.buf)
            .expect("buffer sized to the sequence")
            .1
    }

    /// Runs one slot across all cells; returns per-cell peaks and the
    /// strongest detecting cell, if any.
    fn slot(&mut self, tx: usize, rx_beams: &[usize], slot: usize, peaks: &mut [f64]) -> Option<Detection> {
        let mut best: Option<(Detection, f64)> = None;
        for (cell, &rx) in rx_beams.iter().enumerate() {
            let v = self.peak(cell, tx, rx, slot);
            peaks[cell] = v;
            if v > self.setup.threshold && best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((Detection { cell, tx, rx }, v));
            }
        }
        best.map(|(d, _)| d)
    }
}

impl TrialSetup {
    fn n_tx(&self) -> usize {
        self.ue_codebook.len()
    }

    fn outcome(&self, scheme: Scheme, slots_used: usize, rounds: usize, det: Option<Detection>, est: Option<Point2D>) -> IaTrialOutcome {
        IaTrialOutcome {
            scheme,
            success: det.is_some(),
            slots_used,
            ia_time: slots_used as f64 * self.schedule.t_ra,
            rounds,
            detecting_cell: det.as_ref().map(|d| d.cell),
            detecting_pair: det.as_ref().map(|d| (d.tx, d.rx)),
            estimated_ue: est,
        }
    }

    fn estimate(&self, reports: &[MeasurementReport]) -> Result<Point2D> {
        let mode = match self.estimator.mode {
            EstimatorMode::Auto if reports.len() > 3 => EstimatorMode::Refine,
            EstimatorMode::Auto => EstimatorMode::Point,
            m => m,
        };
        match mode {
            EstimatorMode::Refine => Ok(refine_location(
                reports,
                &self.geom,
                self.estimator.band_halfwidth,
                self.estimator.grid_resolution,
            )?
            .estimate),
            _ => {
                let top = order_ccw(select_top3(reports)?, &self.geom);
                let p = point_estimate(&top, &self.geom, self.n_tx())?;
                // The UE is known to lie inside the base triangle.
                Ok(project_onto_triangle(&p, &self.geom.triangle()))
            }
        }
    }
}

/// Uncoordinated search: every cell walks its own Rx sweep order while the
/// UE repeats full Tx sweeps.
pub fn run_exhaustive(setup: &TrialSetup) -> IaTrialOutcome {
    let n_cells = setup.geom.n_cells();
    let n_tx = setup.n_tx();
    let n_rx = setup.cell_codebooks.iter().map(BeamCodebook::len).min().unwrap_or(0);
    let max_rounds = setup.max_rounds_exhaustive.min(n_rx);
    let mut rx = vec![0; n_cells];
    let mut peaks = vec![0.0; n_cells];
    let mut recv = Receiver::new(setup);
    for round in 0..max_rounds {
        for (c, cb) in setup.cell_codebooks.iter().enumerate() {
            rx[c] = cb.sweep_order()[round];
        }
        for tx in 0..n_tx {
            let slot = setup.schedule.slot(round, tx);
            if let Some(d) = recv.slot(tx, &rx, slot, &mut peaks) {
                return setup.outcome(Scheme::Exhaustive, slot + 1, round + 1, Some(d), None);
            }
        }
    }
    setup.outcome(Scheme::Exhaustive, max_rounds * n_tx, max_rounds, None, None)
}

/// Rx beam order for `cell` nearest-first toward `estimate`.
pub fn reorder_rx_beams(codebook: &BeamCodebook, estimate: &Point2D, cell_position: &Point2D) -> Vec<usize> {
    codebook.order_toward(cell_position.bearing_to(estimate))
}

/// Coordinated search: measurement round, report exchange and estimation,
/// then nearest-first Rx sweeps.
pub fn run_coordinated(setup: &TrialSetup) -> IaTrialOutcome {
    let n_cells = setup.geom.n_cells();
    let n_tx = setup.n_tx();
    let mut peaks = vec![0.0; n_cells];
    let mut recv = Receiver::new(setup);

    // Measurement round: random Rx beams, full UE sweep, per-cell reports.
    let rx0: Vec<usize> = setup.cell_codebooks.iter().map(|cb| cb.sweep_order()[0]).collect();
    let mut per_tx = vec![vec![0.0; n_tx]; n_cells];
    for tx in 0..n_tx {
        let slot = setup.schedule.slot(0, tx);
        if let Some(d) = recv.slot(tx, &rx0, slot, &mut peaks) {
            return setup.outcome(Scheme::Coordinated, slot + 1, 1, Some(d), None);
        }
        for c in 0..n_cells {
            per_tx[c][tx] = peaks[c];
        }
    }

    let mut bus = BackhaulBus::new(setup.backhaul_latency);
    for (c, row) in per_tx.into_iter().enumerate() {
        let report = MeasurementReport::new(c, row, rx0[c]).expect("non-empty Tx codebook");
        bus.publish(c, report);
    }
    let idle = bus.latency_slots(setup.schedule.t_ra);
    let reports = bus.deliver();

    let estimate = if n_cells >= 3 { setup.estimate(&reports).ok() } else { None };
    let orders: Vec<Vec<usize>> = setup
        .cell_codebooks
        .iter()
        .enumerate()
        .map(|(c, cb)| match &estimate {
            Some(p) => reorder_rx_beams(cb, p, &setup.geom.cells()[c]),
            None => cb.sweep_order()[1..].to_vec(),
        })
        .collect();
    let available = orders.iter().map(Vec::len).min().unwrap_or(0);
    let extra_rounds = setup.max_rounds_coordinated.saturating_sub(1).min(available);

    let mut rx = vec![0; n_cells];
    for k in 0..extra_rounds {
        let round = k + 1;
        for c in 0..n_cells {
            rx[c] = orders[c][k];
        }
        for tx in 0..n_tx {
            let slot = setup.schedule.slot(round, tx);
            if let Some(d) = recv.slot(tx, &rx, slot, &mut peaks) {
                return setup.outcome(Scheme::Coordinated, idle + slot + 1, round + 1, Some(d), estimate);
            }
        }
    }
    let rounds = 1 + extra_rounds;
    setup.outcome(Scheme::Coordinated, idle + rounds * n_tx, rounds, None, estimate)
}

/// Percentage change of `t_new` relative to `t_con`; negative means faster.
pub fn ia_time_reduction(t_new: f64, t_con: f64) -> Result<f64> {
    if !(t_con > 0.0) {
        return Err(crate::error::invalid("t_con", "baseline IA time must be positive"));
    }
    Ok((t_new - t_con) / t_con * 100.0)
}
