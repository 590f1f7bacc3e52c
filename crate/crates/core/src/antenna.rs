//! Sectored main-lobe/side-lobe gain pattern and uniform beam codebooks.

use std::f64::consts::{PI, TAU};

use rand::seq::SliceRandom;

use crate::error::{invalid, Result};
use crate::geometry::Bearing;
use crate::rng;

/// Ratio of main-lobe width to half-power beamwidth.
pub const MAIN_LOBE_FACTOR: f64 = 2.6;

/// Directional antenna gain pattern parameterized by its half-power beamwidth.
///
/// Inside the main lobe the gain falls off quadratically from `g0`; outside it
/// is the flat side-lobe level `g_sl`. The pattern is discontinuous at the
/// main-lobe edge, which is kept as-is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern {
    phi_3db: f64,
    phi_ml: f64,
    g0: f64,
    g_sl: f64,
}

impl AntennaPattern {
    pub fn new(phi_3db: f64) -> Result<Self> {
        if !(phi_3db > 0.0 && phi_3db < PI) {
            return Err(invalid(
                "phi_3db",
                format!("half-power beamwidth must lie in (0, π), got {phi_3db}"),
            ));
        }
        let g0 = 10.0 * (1.6162 / (phi_3db / 2.0).sin()).powi(2).log10();
        // The side-lobe fit takes the beamwidth in degrees; this is the only
        // place a degree value enters the link budget.
        let g_sl = -0.4111 * phi_3db.to_degrees().ln() - 10.579;
        Ok(Self {
            phi_3db,
            phi_ml: MAIN_LOBE_FACTOR * phi_3db,
            g0,
            g_sl,
        })
    }

    pub fn phi_3db(&self) -> f64 {
        self.phi_3db
    }

    pub fn phi_ml(&self) -> f64 {
        self.phi_ml
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    pub fn g_sl(&self) -> f64 {
        self.g_sl
    }

    /// Gain in dBi at angular `offset` (radians, `[0, π]`) from boresight.
    pub fn gain(&self, offset: f64) -> Result<f64> {
        if !(0.0..=PI).contains(&offset) {
            return Err(invalid(
                "offset",
                format!("angular offset must lie in [0, π], got {offset}"),
            ));
        }
        Ok(self.gain_at(offset))
    }

    /// Unchecked variant for offsets produced by [`Bearing::offset_to`].
    pub(crate) fn gain_at(&self, offset: f64) -> f64 {
        if offset <= self.phi_ml / 2.0 {
            self.g0 - 3.01 * (2.0 * offset / self.phi_3db).powi(2)
        } else {
            self.g_sl
        }
    }
}

/// How a codebook orders its beams for sweeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Identity,
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamCodebook {
    centers: Vec<Bearing>,
    pattern: AntennaPattern,
    sweep_order: Vec<usize>,
}

/// A single beam: its boresight and the shared pattern.
#[derive(Debug, Clone, Copy)]
pub struct Beam<'a> {
    pub center: Bearing,
    pub pattern: &'a AntennaPattern,
}

impl Beam<'_> {
    pub fn gain_toward(&self, target: Bearing) -> f64 {
        self.pattern.gain_at(self.center.offset_to(target))
    }
}

/// `n_beams` beams spaced `2π / n_beams` apart starting at `start`.
pub fn make_codebook(
    n_beams: usize,
    phi_3db: f64,
    start: Bearing,
    order: SweepOrder,
) -> Result<BeamCodebook> {
    if n_beams == 0 {
        return Err(invalid("n_beams", "codebook needs at least one beam"));
    }
    let pattern = AntennaPattern::new(phi_3db)?;
    let step = TAU / n_beams as f64;
    let centers = (0..n_beams)
        .map(|k| Bearing::new(start.radians() + k as f64 * step))
        .collect();
    let mut sweep_order: Vec<usize> = (0..n_beams).collect();
    if let SweepOrder::Shuffled { seed } = order {
        let mut rng = rng::stream(seed, &[rng::tag::CELL_CODEBOOK]);
        sweep_order.shuffle(&mut rng);
    }
    Ok(BeamCodebook {
        centers,
        pattern,
        sweep_order,
    })
}

/// Default beamwidth for a codebook of `n_beams` beams: one beam spacing,
/// capped just below π so single- and dual-beam codebooks stay valid.
pub fn default_beamwidth(n_beams: usize) -> f64 {
    (TAU / n_beams.max(1) as f64).min(PI * 0.999)
}

impl BeamCodebook {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Bearing] {
        &self.centers
    }

    pub fn pattern(&self) -> &AntennaPattern {
        &self.pattern
    }

    pub fn sweep_order(&self) -> &[usize] {
        &self.sweep_order
    }

    pub fn beam(&self, index: usize) -> Beam<'_> {
        Beam {
            center: self.centers[index],
            pattern: &self.pattern,
        }
    }

    pub fn with_sweep_order(mut self, order: Vec<usize>) -> Self {
        debug_assert!(is_permutation(&order, self.len()));
        self.sweep_order = order;
        self
    }

    /// Beam whose center is circularly closest to `target`; ties go to the
    /// lower index.
    pub fn best_beam_index(&self, target: Bearing) -> usize {
        let mut best = 0;
        let mut best_off = f64::INFINITY;
        for (k, c) in self.centers.iter().enumerate() {
            let off = c.offset_to(target);
            if off < best_off - 1e-12 {
                best = k;
                best_off = off;
            }
        }
        best
    }

    /// Beam indices sorted by ascending circular distance to `target`
    /// (stable, so ties keep index order).
    pub fn order_toward(&self, target: Bearing) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.centers[a]
                .offset_to(target)
                .total_cmp(&self.centers[b].offset_to(target))
        });
        idx
    }
}

pub fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &k in order {
        if k >= n || seen[k] {
            return false;
        }
        seen[k] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn pattern_closed_forms() {
        // Hand-evaluated: 20·log10(1.6162 / sin 22.5°) and -0.4111·ln 45 - 10.579.
        let p = AntennaPattern::new(45f64.to_radians()).unwrap();
        assert_abs_diff_eq!(p.g0(), 12.5128, epsilon = 1e-3);
        assert_abs_diff_eq!(p.g_sl(), -12.1439, epsilon = 1e-3);
        assert_abs_diff_eq!(p.phi_ml().to_degrees(), 117.0, epsilon = 1e-9);

        let p = AntennaPattern::new(22.5f64.to_radians()).unwrap();
        assert_abs_diff_eq!(p.g0(), 18.365, epsilon = 1e-3);
    }

    #[test]
    fn pattern_rejects_bad_beamwidth() {
        assert!(AntennaPattern::new(0.0).is_err());
        assert!(AntennaPattern::new(-0.1).is_err());
        assert!(AntennaPattern::new(PI).is_err());
    }

    #[test]
    fn gain_landmarks() {
        let p = AntennaPattern::new(45f64.to_radians()).unwrap();
        assert_eq!(p.gain(0.0).unwrap(), p.g0());
        assert_abs_diff_eq!(p.gain(p.phi_3db() / 2.0).unwrap(), p.g0() - 3.01, epsilon = 1e-12);
        assert_eq!(p.gain(PI).unwrap(), p.g_sl());
        assert!(p.gain(-0.01).is_err());
        assert!(p.gain(PI + 0.01).is_err());
    }

    #[test]
    fn codebook_centers() {
        let cb = make_codebook(4, PI / 2.0, Bearing::new(0.0), SweepOrder::Identity).unwrap();
        let deg: Vec<f64> = cb.centers().iter().map(|b| b.radians().to_degrees()).collect();
        for (d, e) in deg.iter().zip([0.0, 90.0, 180.0, 270.0]) {
            assert_abs_diff_eq!(*d, e, epsilon = 1e-9);
        }
        assert_eq!(cb.sweep_order(), &[0, 1, 2, 3]);

        let cb8 = make_codebook(8, PI / 4.0, Bearing::new(0.0), SweepOrder::Identity).unwrap();
        for w in cb8.centers().windows(2) {
            assert_abs_diff_eq!(w[0].offset_to(w[1]), PI / 4.0, epsilon = 1e-12);
        }
        assert!(make_codebook(0, 0.5, Bearing::new(0.0), SweepOrder::Identity).is_err());
    }

    #[test]
    fn shuffled_order_is_seeded_permutation() {
        let a = make_codebook(8, PI / 4.0, Bearing::new(0.0), SweepOrder::Shuffled { seed: 3 }).unwrap();
        let b = make_codebook(8, PI / 4.0, Bearing::new(0.0), SweepOrder::Shuffled { seed: 3 }).unwrap();
        assert_eq!(a.sweep_order(), b.sweep_order());
        assert!(is_permutation(a.sweep_order(), 8));
    }

    #[test]
    fn best_beam_selection() {
        let cb = make_codebook(4, PI / 2.0, Bearing::new(0.0), SweepOrder::Identity).unwrap();
        assert_eq!(cb.best_beam_index(Bearing::from_degrees(100.0)), 1);
        assert_eq!(cb.best_beam_index(Bearing::from_degrees(45.0)), 0);
        assert_eq!(cb.best_beam_index(Bearing::from_degrees(135.0)), 1);
        assert_eq!(cb.best_beam_index(Bearing::from_degrees(270.0)), 3);
    }

    proptest! {
        #[test]
        fn gain_is_monotone_then_flat(phi_deg in 5.0f64..170.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = AntennaPattern::new(phi_deg.to_radians()).unwrap();
            let half = (p.phi_ml() / 2.0).min(PI);
            let (lo, hi) = if a < b { (a * half, b * half) } else { (b * half, a * half) };
            prop_assert!(p.gain(lo).unwrap() >= p.gain(hi).unwrap());
            if half < PI {
                let out = half + (PI - half) * a;
                if out > half {
                    prop_assert_eq!(p.gain(out).unwrap(), p.g_sl());
                }
            }
            prop_assert!((p.phi_ml() / p.phi_3db() - 2.6).abs() < 1e-12);
        }

        #[test]
        fn codebook_invariants(n in 1usize..33, start in 0.0f64..TAU, target in 0.0f64..TAU) {
            let cb = make_codebook(n, default_beamwidth(n), Bearing::new(start), SweepOrder::Identity).unwrap();
            for k in 0..n {
                prop_assert_eq!(cb.best_beam_index(cb.centers()[k]), k);
            }
            let t = Bearing::new(target);
            let covering = cb.centers().iter()
                .filter(|c| c.offset_to(t) <= cb.pattern().phi_ml() / 2.0)
                .count();
            if cb.pattern().phi_ml() >= TAU / n as f64 {
                prop_assert!(covering >= 1);
            }
            prop_assert!(is_permutation(&cb.order_toward(t), n));
        }
    }
}
