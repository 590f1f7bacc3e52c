//! Analytic and brute-force oracle checks.
//!
//! Each check compares a production code path against an independent
//! computation or a closed form. The `selftest` CLI command runs the suite
//! at moderate sizes; the acceptance tests call the same checks at full size.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::antenna::{make_codebook, AntennaPattern, SweepOrder};
use crate::channel::{pathloss, LinkBudgetParams, LinkState, Path};
use crate::config::{SimConfig, ThresholdMode};
use crate::error::Result;
use crate::estimation::{
    angles_from_reports, locate_ue, order_ccw, select_top3, solve_distances_with_sides, ArcBand,
    MeasurementReport,
};
use crate::experiments::{run_experiment, ExperimentKind, Scenario};
use crate::geometry::{base_triangle, build_cluster, sample_in_triangle, Bearing};
use crate::output::csv_string;
use crate::preamble::{calibrate_threshold, compute_pdp, fill_rx, generate_zc, Correlator, DetectionConfig, Noise};
use crate::protocol::ia_time_reduction;
use crate::rng::{self, derive_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Direct O(N²) periodic correlation power, `|Σ y(n)·conj(x(n+l))|²`.
pub fn direct_pdp(y: &[Complex64], x: &[Complex64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|l| {
            (0..n)
                .map(|k| y[k] * x[(k + l) % n].conj())
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect()
}

/// Unit-power ZC sequence: PDP peak equals `N²` at lag 0 and every other lag
/// stays below `1e-9` of the peak.
pub fn zc_autocorrelation(u: usize, n_zc: usize) -> Result<Check> {
    let seq = generate_zc(u, n_zc)?;
    let pdp = compute_pdp(seq.samples(), &seq)?;
    let n2 = (n_zc * n_zc) as f64;
    let off = pdp
        .values()
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != 0)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let peak = pdp.values()[0];
    let ok = pdp.peak_lag() == 0 && (peak - n2).abs() <= 1e-9 * n2 && off < 1e-9 * peak;
    Ok(Check::new(
        format!("zc autocorrelation u={u} n={n_zc}"),
        ok,
        format!("peak={peak:.6} (expect {n2}), max off-peak/peak={:.2e}", off / peak),
    ))
}

/// FFT correlator against [`direct_pdp`] on noisy, shifted input.
pub fn correlator_matches_direct(u: usize, n_zc: usize, seed: u64) -> Result<Check> {
    let seq = generate_zc(u, n_zc)?;
    let corr = Correlator::new(&seq);
    let mut r = rng::stream(seed, &[]);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let delay = r.random_range(0..n_zc);
        let mut y = vec![Complex64::new(0.0, 0.0); n_zc];
        fill_rx(&seq, 0.0, Noise::Awgn { power_dbm: 3.0 }, delay, &mut r, &mut y);
        let fast = corr.profile(&y)?;
        let slow = direct_pdp(&y, seq.samples());
        let scale = slow.iter().cloned().fold(0.0, f64::max);
        for (a, b) in fast.values().iter().zip(&slow) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    Ok(Check::new(
        format!("fft correlator vs direct sum n={n_zc}"),
        worst < 1e-9,
        format!("max relative deviation {worst:.2e}"),
    ))
}

/// Empirical noise-only false-alarm rate against the target, within ±30%
/// relative.
pub fn false_alarm_rate(p_fa: f64, profiles: usize, seed: u64) -> Result<Check> {
    let seq = generate_zc(1, 839)?;
    let noise_dbm = LinkBudgetParams::default().noise_power();
    let gamma = calibrate_threshold(&DetectionConfig::FalseAlarm { p_fa }, noise_dbm, &seq)?;
    let corr = Correlator::new(&seq);
    let mut r = rng::stream(seed, &[rng::tag::CALIBRATION]);
    let mut buf = vec![Complex64::new(0.0, 0.0); seq.len()];
    let mut hits = 0usize;
    for _ in 0..profiles {
        // Signal far below noise so only noise can cross.
        fill_rx(&seq, -400.0, Noise::Awgn { power_dbm: noise_dbm }, 0, &mut r, &mut buf);
        if corr.profile_in_place(&mut buf)?.1 > gamma {
            hits += 1;
        }
    }
    let rate = hits as f64 / profiles as f64;
    let rel = (rate - p_fa).abs() / p_fa;
    Ok(Check::new(
        format!("false-alarm rate p_fa={p_fa}"),
        rel <= 0.30,
        format!("observed {rate:.5} over {profiles} profiles ({:.1}% off)", rel * 100.0),
    ))
}

/// Exact angles of random interior UEs solved back to positions.
pub fn triangulation_round_trip(trials: usize, side: f64, seed: u64) -> Result<Check> {
    let tri = base_triangle(side);
    let sides = [side; 3];
    let mut r = rng::stream(seed, &[rng::tag::UE]);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let ue = sample_in_triangle(&tri, &mut r);
        let geom = build_cluster(3, side, 0)?.with_ue(ue);
        let theta = geom.true_angles()?;
        let d = solve_distances_with_sides(&theta, &sides)?;
        worst = worst.max(locate_ue(&d, &tri).distance(&ue));
    }
    Ok(Check::new(
        "triangulation round trip",
        worst < 1e-6,
        format!("max error {worst:.2e} m over {trials} UEs"),
    ))
}

/// Noiseless LOS reports through the PDP chain; the three arc bands of the
/// quantized angles must contain the true UE.
pub fn containment(trials: usize, n_tx: usize, n_rx: usize, side: f64, seed: u64) -> Result<Check> {
    let seq = generate_zc(1, 839)?;
    let corr = Correlator::new(&seq);
    let params = LinkBudgetParams::default();
    let ue_pat = AntennaPattern::new(crate::antenna::default_beamwidth(n_tx))?;
    let mut buf = vec![Complex64::new(0.0, 0.0); seq.len()];
    let mut inside = 0usize;
    for t in 0..trials as u64 {
        let s = derive_seed(seed, &[t]);
        let base = build_cluster(3, side, 0)?;
        let geom = base.clone().with_ue(base.place_ue(s)?);
        let mut r = rng::stream(s, &[rng::tag::UE_CODEBOOK]);
        let ue_cb = make_codebook(n_tx, ue_pat.phi_3db(), Bearing::new(TAU * r.random::<f64>()), SweepOrder::Identity)?;
        let mut reports = Vec::new();
        for cell in 0..3 {
            let sc_cb = make_codebook(n_rx, crate::antenna::default_beamwidth(n_rx), Bearing::new(TAU * r.random::<f64>()), SweepOrder::Identity)?;
            let path = Path::resolve(&geom, &LinkState::Los, cell);
            let rx = sc_cb.best_beam_index(path.arrival);
            let peaks = (0..n_tx)
                .map(|tx| {
                    let p = path.received_power(&params, &ue_cb.beam(tx), &sc_cb.beam(rx));
                    fill_rx(&seq, p, Noise::Off, 0, &mut r, &mut buf);
                    corr.profile_in_place(&mut buf).map(|(_, v)| v)
                })
                .collect::<Result<Vec<f64>>>()?;
            reports.push(MeasurementReport::new(cell, peaks, rx)?);
        }
        let top = order_ccw(select_top3(&reports)?, &geom);
        let ok = match angles_from_reports(&top, n_tx) {
            Ok(est) => (0..3).all(|i| {
                ArcBand {
                    a: geom.cells()[est.cells[i]],
                    b: geom.cells()[est.cells[(i + 1) % 3]],
                    theta: est.theta[i],
                    halfwidth: ue_pat.phi_ml(),
                }
                .contains(&geom.ue())
            }),
            Err(_) => false,
        };
        inside += ok as usize;
    }
    let frac = inside as f64 / trials as f64;
    Ok(Check::new(
        format!("estimation-area containment n_tx={n_tx}"),
        frac >= 0.99,
        format!("true UE inside in {:.2}% of {trials} trials", frac * 100.0),
    ))
}

/// Mean coordinated slots never exceed mean exhaustive slots over paired trials.
pub fn paired_dominance(cfg: &SimConfig, trials: usize) -> Result<Check> {
    let scenario = Scenario::new(cfg, 0)?;
    let (mut sum_new, mut sum_con) = (0usize, 0usize);
    for t in 0..trials as u64 {
        let pair = scenario.run_pair(t)?;
        sum_new += pair.coordinated.slots_used;
        sum_con += pair.exhaustive.slots_used;
    }
    let (m_new, m_con) = (sum_new as f64 / trials as f64, sum_con as f64 / trials as f64);
    Ok(Check::new(
        format!("paired dominance p_ue={} dBm n_tx={}", cfg.link.p_ue_dbm, cfg.antenna.n_tx),
        m_new <= m_con,
        format!("mean slots coordinated {m_new:.3} vs exhaustive {m_con:.3} over {trials} pairs"),
    ))
}

/// Every experiment twice from the same config; CSVs must match byte for byte.
pub fn determinism(cfg: &SimConfig) -> Result<Check> {
    let mut mismatched = Vec::new();
    for kind in ExperimentKind::ALL {
        let a = csv_string(&run_experiment(kind, cfg)?);
        let b = csv_string(&run_experiment(kind, cfg)?);
        if a != b {
            mismatched.push(kind.name());
        }
    }
    Ok(Check::new(
        "byte-identical reruns",
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "all experiments reproduced".to_owned()
        } else {
            format!("differs: {}", mismatched.join(", "))
        },
    ))
}

/// Closed-form link-budget and reduction values.
pub fn closed_forms() -> Result<Check> {
    let mut bad = Vec::new();
    let mut expect = |name: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol {
            bad.push(format!("{name}={got} (want {want})"));
        }
    };
    expect("pathloss(200)", pathloss(200.0)?, 109.72163, 1e-4);
    expect("noise power", LinkBudgetParams::default().noise_power(), -110.6658, 1e-4);
    let p = AntennaPattern::new(45f64.to_radians())?;
    expect("G0(45deg)", p.g0(), 12.5131, 1e-4);
    expect("Gsl(45deg)", p.g_sl(), -12.1439, 1e-4);
    expect("reduction(78,100)", ia_time_reduction(78.0, 100.0)?, -22.0, 1e-12);
    expect("reduction(82,100)", ia_time_reduction(82.0, 100.0)?, -18.0, 1e-12);
    expect("reduction(100,100)", ia_time_reduction(100.0, 100.0)?, 0.0, 0.0);
    let zero_rejected = ia_time_reduction(1.0, 0.0).is_err();
    if !zero_rejected {
        bad.push("zero baseline accepted".to_owned());
    }
    Ok(Check::new(
        "closed forms",
        bad.is_empty(),
        if bad.is_empty() { "all match".to_owned() } else { bad.join("; ") },
    ))
}

/// The suite at CLI sizes.
pub fn run_all(cfg: &SimConfig) -> Result<Vec<Check>> {
    let seed = cfg.experiments.seed;
    let mut checks = vec![closed_forms()?];
    for (u, n) in [(1, 11), (1, 839), (25, 839)] {
        checks.push(zc_autocorrelation(u, n)?);
    }
    checks.push(correlator_matches_direct(7, 139, seed)?);
    for p_fa in [0.1, 0.01] {
        checks.push(false_alarm_rate(p_fa, 20_000, seed)?);
    }
    checks.push(triangulation_round_trip(1000, cfg.geometry.side_m, seed)?);
    checks.push(containment(1000, cfg.antenna.n_tx, cfg.antenna.n_rx, cfg.geometry.side_m, seed)?);
    let mut low = cfg.clone();
    low.detection.mode = ThresholdMode::FalseAlarm;
    low.link.p_ue_dbm = cfg.experiments.power_grid_dbm.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push(paired_dominance(&low, 200)?);

    let mut tiny = cfg.clone();
    tiny.experiments.trials = 8;
    tiny.experiments.p_los_trials = 50;
    tiny.experiments.power_grid_dbm.truncate(2);
    tiny.experiments.p_miss_grid.truncate(2);
    tiny.experiments.p_los_cluster_sizes.truncate(2);
    tiny.detection.calibration_trials = 200;
    checks.push(determinism(&tiny)?);
    Ok(checks)
}
