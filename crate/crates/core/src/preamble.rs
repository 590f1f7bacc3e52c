//! Zadoff-Chu preambles, received-signal synthesis, PDP correlation and
//! threshold detection.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::rng;

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut k = 3;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 2;
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZcSequence {
    root: usize,
    samples: Vec<Complex64>,
}

/// `x_u(n) = exp(-jπ·u·n·(n+1) / N_zc)` for `0 <= n < N_zc`.
pub fn generate_zc(u: usize, n_zc: usize) -> Result<ZcSequence> {
    if !is_prime(n_zc) {
        return Err(invalid("n_zc", format!("{n_zc} is not prime")));
    }
    if u == 0 || u >= n_zc {
        return Err(invalid("u", format!("root must lie in 1..{n_zc}, got {u}")));
    }
    // Reduce u·n·(n+1) mod 2·N_zc in integers so the phase stays exact for
    // long sequences.
    let m = 2 * n_zc as u128;
    let samples = (0..n_zc as u128)
        .map(|n| {
            let k = (u as u128 * n * (n + 1)) % m;
            Complex64::from_polar(1.0, -PI * k as f64 / n_zc as f64)
        })
        .collect();
    Ok(ZcSequence { root: u, samples })
}

impl ZcSequence {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }
}

/// Noise setting for [`synthesize_rx`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    /// Complex AWGN with the given per-sample power in dBm.
    Awgn { power_dbm: f64 },
    /// Noiseless limit.
    Off,
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Received preamble `y(n) = sqrt(P)·x_u(n + delay) + w(n)`.
///
/// The advance is chosen so that the PDP of `y` peaks at lag `delay_lag`.
pub fn synthesize_rx(
    seq: &ZcSequence,
    rx_power_dbm: f64,
    noise: Noise,
    delay_lag: usize,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let n = seq.len();
    if delay_lag >= n {
        return Err(invalid("delay_lag", format!("must be < {n}, got {delay_lag}")));
    }
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    let mut rng = rng::stream(seed, &[rng::tag::SLOT_NOISE]);
    fill_rx(seq, rx_power_dbm, noise, delay_lag, &mut rng, &mut y);
    Ok(y)
}

pub(crate) fn fill_rx<R: Rng>(
    seq: &ZcSequence,
    rx_power_dbm: f64,
    noise: Noise,
    delay_lag: usize,
    rng: &mut R,
    y: &mut [Complex64],
) {
    let n = seq.len();
    let amp = dbm_to_mw(rx_power_dbm).sqrt();
    for (k, out) in y.iter_mut().enumerate() {
        *out = seq.samples[(k + delay_lag) % n] * amp;
    }
    if let Noise::Awgn { power_dbm } = noise {
        let sigma = (dbm_to_mw(power_dbm) / 2.0).sqrt();
        for out in y.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *out += Complex64::new(re * sigma, im * sigma);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdpProfile {
    values: Vec<f64>,
    peak_lag: usize,
    peak_value: f64,
}

impl PdpProfile {
    pub fn from_values(values: Vec<f64>) -> Self {
        let mut peak_lag = 0;
        let mut peak_value = f64::NEG_INFINITY;
        for (l, &v) in values.iter().enumerate() {
            if v > peak_value {
                peak_value = v;
                peak_lag = l;
            }
        }
        if values.is_empty() {
            peak_value = 0.0;
        }
        Self {
            values,
            peak_lag,
            peak_value,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn peak_lag(&self) -> usize {
        self.peak_lag
    }

    pub fn peak_value(&self) -> f64 {
        self.peak_value
    }
}

/// Circular correlator against one ZC root, evaluated with FFTs.
///
/// `z(l) = Σ y(n)·conj(x((n + l) mod N))` equals the conjugate of
/// `IFFT(X·conj(Y))(l) / N`, so only the magnitude is needed.
#[derive(Clone)]
pub struct Correlator {
    seq: ZcSequence,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Correlator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Correlator")
            .field("root", &self.seq.root)
            .field("len", &self.seq.len())
            .finish()
    }
}

impl Correlator {
    pub fn new(seq: &ZcSequence) -> Self {
        let n = seq.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let mut spectrum = seq.samples.clone();
        forward.process(&mut spectrum);
        Self {
            seq: seq.clone(),
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn sequence(&self) -> &ZcSequence {
        &self.seq
    }

    pub fn profile(&self, y: &[Complex64]) -> Result<PdpProfile> {
        let mut buf = y.to_vec();
        self.profile_in_place(&mut buf)?;
        Ok(PdpProfile::from_values(buf.iter().map(|z| z.re).collect()))
    }

    /// Overwrites `buf` with the correlation power per lag (stored in `re`)
    /// and returns `(peak_lag, peak_value)`.
    pub(crate) fn profile_in_place(&self, buf: &mut [Complex64]) -> Result<(usize, f64)> {
        let n = self.seq.len();
        if buf.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: buf.len(),
            });
        }
        self.forward.process(buf);
        for (b, x) in buf.iter_mut().zip(&self.spectrum) {
            *b = *x * b.conj();
        }
        self.inverse.process(buf);
        let scale = 1.0 / (n as f64 * n as f64);
        let mut peak = (0, f64::NEG_INFINITY);
        for (l, b) in buf.iter_mut().enumerate() {
            let p = b.norm_sqr() * scale;
            *b = Complex64::new(p, 0.0);
            if p > peak.1 {
                peak = (l, p);
            }
        }
        Ok(peak)
    }
}

pub fn compute_pdp(y: &[Complex64], seq: &ZcSequence) -> Result<PdpProfile> {
    Correlator::new(seq).profile(y)
}

/// How the detection threshold is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionConfig {
    /// Probability that a noise-only profile has any lag above threshold.
    FalseAlarm { p_fa: f64 },
    /// Probability that the reference link's PDP peak stays at or below
    /// threshold, calibrated by Monte Carlo.
    Miss {
        p_miss: f64,
        reference_rx_dbm: f64,
        trials: usize,
        seed: u64,
    },
}

/// Threshold γ_ra for `cfg` given per-sample noise power and sequence.
pub fn calibrate_threshold(cfg: &DetectionConfig, noise_power_dbm: f64, seq: &ZcSequence) -> Result<f64> {
    let n = seq.len() as f64;
    let sigma2 = dbm_to_mw(noise_power_dbm);
    match *cfg {
        DetectionConfig::FalseAlarm { p_fa } => {
            check_probability("p_fa", p_fa)?;
            // Each lag is exponential with mean n·σ², independent across lags.
            let per_lag = -(-p_fa).ln_1p() / n;
            let tail = -(-per_lag).exp_m1();
            Ok(-n * sigma2 * tail.ln())
        }
        DetectionConfig::Miss {
            p_miss,
            reference_rx_dbm,
            trials,
            seed,
        } => {
            check_probability("p_miss", p_miss)?;
            if trials < 10 {
                return Err(invalid("trials", "miss-mode calibration needs at least 10 trials"));
            }
            let corr = Correlator::new(seq);
            let mut rng = rng::stream(seed, &[rng::tag::CALIBRATION]);
            let mut buf = vec![Complex64::new(0.0, 0.0); seq.len()];
            let noise = Noise::Awgn {
                power_dbm: noise_power_dbm,
            };
            let mut peaks: Vec<f64> = (0..trials)
                .map(|_| {
                    fill_rx(seq, reference_rx_dbm, noise, 0, &mut rng, &mut buf);
                    corr.profile_in_place(&mut buf).map(|(_, v)| v)
                })
                .collect::<Result<_>>()?;
            peaks.sort_by(f64::total_cmp);
            Ok(empirical_quantile(&peaks, p_miss))
        }
    }
}

/// Threshold splitting sorted `samples` so that a fraction `q` lies at or below it.
fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let k = ((q * sorted.len() as f64).round() as usize).clamp(1, sorted.len() - 1);
    0.5 * (sorted[k - 1] + sorted[k])
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("probability out of range (0, 1): {p}")))
    }
}

/// Strict threshold test; returns the peak lag on detection.
pub fn detect(pdp: &PdpProfile, gamma: f64) -> Option<usize> {
    (pdp.peak_value > gamma).then_some(pdp.peak_lag)
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Direct O(N²) evaluation of the periodic correlation power.
    pub fn brute_force_pdp(y: &[Complex64], x: &[Complex64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|l| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += y[k] * x[(k + l) % n].conj();
                }
                acc.norm_sqr()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::brute_force_pdp;
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn primes() {
        assert!(is_prime(839));
        assert!(is_prime(11));
        assert!(is_prime(2));
        assert!(!is_prime(840));
        assert!(!is_prime(1));
        assert!(!is_prime(841));
    }

    #[test]
    fn zc_basics() {
        let s = generate_zc(25, 839).unwrap();
        assert_eq!(s.samples()[0], Complex64::new(1.0, 0.0));
        assert!(s.samples().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(generate_zc(1, 840).is_err());
        assert!(generate_zc(0, 839).is_err());
        assert!(generate_zc(839, 839).is_err());
    }

    #[test]
    fn ideal_autocorrelation_small() {
        let s = generate_zc(1, 11).unwrap();
        let bf = brute_force_pdp(s.samples(), s.samples());
        assert_abs_diff_eq!(bf[0], 121.0, epsilon = 1e-9);
        for v in &bf[1..] {
            assert!(*v < 1e-9 * 121.0);
        }
        let fast = compute_pdp(s.samples(), &s).unwrap();
        assert_eq!(fast.peak_lag(), 0);
        assert_abs_diff_eq!(fast.peak_value(), 121.0, epsilon = 1e-9);
    }

    #[test]
    fn shifted_peak_lands_on_delay() {
        let s = generate_zc(1, 11).unwrap();
        let y = synthesize_rx(&s, 0.0, Noise::Off, 5, 0).unwrap();
        let bf = brute_force_pdp(&y, s.samples());
        let argmax = (0..11).max_by(|&a, &b| bf[a].total_cmp(&bf[b])).unwrap();
        assert_eq!(argmax, 5);
        assert_eq!(compute_pdp(&y, &s).unwrap().peak_lag(), 5);
        assert!(synthesize_rx(&s, 0.0, Noise::Off, 11, 0).is_err());
    }

    #[test]
    fn zero_input_and_length_mismatch() {
        let s = generate_zc(1, 11).unwrap();
        let pdp = compute_pdp(&vec![Complex64::new(0.0, 0.0); 11], &s).unwrap();
        assert!(pdp.values().iter().all(|&v| v == 0.0));
        assert_eq!(detect(&pdp, 1e-30), None);
        assert!(matches!(
            compute_pdp(&[Complex64::new(1.0, 0.0); 7], &s),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn detect_is_strict() {
        let p = PdpProfile::from_values(vec![0.5, 2.0, 1.0]);
        assert_eq!(detect(&p, 2.0), None);
        assert_eq!(detect(&p, 1.999), Some(1));
        let s = generate_zc(1, 11).unwrap();
        let clean = compute_pdp(&synthesize_rx(&s, 0.0, Noise::Off, 0, 0).unwrap(), &s).unwrap();
        assert_eq!(detect(&clean, 100.0), Some(0));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let s = generate_zc(1, 839).unwrap();
        let n = Noise::Awgn { power_dbm: -100.0 };
        assert_eq!(
            synthesize_rx(&s, -95.0, n, 3, 77).unwrap(),
            synthesize_rx(&s, -95.0, n, 3, 77).unwrap()
        );
        let clean = synthesize_rx(&s, 0.0, Noise::Off, 2, 1).unwrap();
        assert_eq!(clean[0], s.samples()[2]);
    }

    #[test]
    fn false_alarm_threshold_limits() {
        let s = generate_zc(1, 839).unwrap();
        let g = |p| calibrate_threshold(&DetectionConfig::FalseAlarm { p_fa: p }, 0.0, &s).unwrap();
        // γ decreases toward 0 as p_fa → 1 (only logarithmically fast).
        let ps = [0.001, 0.01, 0.1, 0.5, 0.9, 0.999_999, 1.0 - 1e-15];
        for w in ps.windows(2) {
            assert!(g(w[1]) < g(w[0]));
        }
        assert!(g(1.0 - 1e-15) < 0.35 * g(0.01));
        assert!(calibrate_threshold(&DetectionConfig::FalseAlarm { p_fa: 1.0 }, 0.0, &s).is_err());
        assert!(calibrate_threshold(&DetectionConfig::FalseAlarm { p_fa: 0.0 }, 0.0, &s).is_err());
    }

    #[test]
    fn processing_gain_at_zero_db_snr() {
        // Peak over the mean off-peak floor, averaged over noise draws.
        let s = generate_zc(1, 839).unwrap();
        let corr = Correlator::new(&s);
        let (mut peak, mut floor) = (0.0, 0.0);
        let draws = 2_000;
        for seed in 0..draws {
            let y = synthesize_rx(&s, 0.0, Noise::Awgn { power_dbm: 0.0 }, 0, seed).unwrap();
            let p = corr.profile(&y).unwrap();
            peak += p.values()[0];
            floor += p.values()[1..].iter().sum::<f64>() / 838.0;
        }
        let gain_db = 10.0 * (peak / floor).log10();
        // E[peak] = N² + N, E[floor] = N → 10·log10(N + 1)
        assert!((gain_db - 10.0 * 840f64.log10()).abs() < 0.1, "{gain_db}");
    }

    #[test]
    fn miss_mode_self_consistency() {
        let s = generate_zc(1, 839).unwrap();
        let reference = -125.0;
        let gamma = calibrate_threshold(
            &DetectionConfig::Miss { p_miss: 0.01, reference_rx_dbm: reference, trials: 20_000, seed: 4 },
            -110.67,
            &s,
        )
        .unwrap();
        let corr = Correlator::new(&s);
        let trials = 20_000;
        let hits = (0..trials)
            .filter(|&t| {
                let y = synthesize_rx(&s, reference, Noise::Awgn { power_dbm: -110.67 }, 0, 1_000_000 + t).unwrap();
                detect(&corr.profile(&y).unwrap(), gamma).is_some()
            })
            .count();
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.99).abs() < 0.005, "{rate}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fft_matches_brute_force_and_parseval(seed in any::<u64>(), root in 1usize..11, delay in 0usize..11) {
            let s = generate_zc(root, 11).unwrap();
            let y = synthesize_rx(&s, 3.0, Noise::Awgn { power_dbm: 0.0 }, delay, seed).unwrap();
            let bf = brute_force_pdp(&y, s.samples());
            let fast = compute_pdp(&y, &s).unwrap();
            for (a, b) in bf.iter().zip(fast.values()) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
            let energy: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            let total: f64 = fast.values().iter().sum();
            prop_assert!((total - 11.0 * energy).abs() <= 1e-6 * total);
        }
    }
}
