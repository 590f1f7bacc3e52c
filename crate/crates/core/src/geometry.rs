//! Cluster layout and ground-truth UE geometry.
//!
//! Cells 0, 1, 2 always form the base equilateral triangle of side `D`,
//! listed counterclockwise. Angle `theta[i]` is the counterclockwise angle
//! seen from the UE between the directions to cell `i` and cell `i + 1`
//! (indices mod 3), so for an interior UE the three angles sum to 2π.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Direction from `self` toward `other`.
    pub fn bearing_to(&self, other: &Point2D) -> Bearing {
        Bearing::new((other.y - self.y).atan2(other.x - self.x))
    }

    /// Point reached by moving `dist` meters along `bearing`.
    pub fn offset(&self, bearing: Bearing, dist: f64) -> Point2D {
        let a = bearing.radians();
        Point2D::new(self.x + dist * a.cos(), self.y + dist * a.sin())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// An azimuth normalized to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Bearing(f64);

impl Bearing {
    pub fn new(radians: f64) -> Self {
        let mut a = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if a >= TAU {
            a = 0.0;
        }
        Bearing(a)
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::new(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Unsigned circular distance to `other`, in `[0, π]`.
    pub fn offset_to(self, other: Bearing) -> f64 {
        let d = (self.0 - other.0).abs();
        if d > PI {
            TAU - d
        } else {
            d
        }
    }

    /// Counterclockwise sweep from `self` to `other`, in `[0, 2π)`.
    pub fn ccw_to(self, other: Bearing) -> f64 {
        Bearing::new(other.0 - self.0).0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGeometry {
    cells: Vec<Point2D>,
    side: f64,
    ue: Point2D,
}

/// Vertices of the base triangle of side `d`, counterclockwise from the origin.
pub fn base_triangle(d: f64) -> [Point2D; 3] {
    [
        Point2D::new(0.0, 0.0),
        Point2D::new(d, 0.0),
        Point2D::new(d / 2.0, d * 3f64.sqrt() / 2.0),
    ]
}

/// Builds a cluster of `n_sc` cells.
///
/// Up to three cells take the base triangle vertices in order; any further
/// cells are drawn uniformly from the triangle's circumscribed disk using
/// `layout_seed`. The UE starts at the triangle centroid.
pub fn build_cluster(n_sc: usize, d: f64, layout_seed: u64) -> Result<ClusterGeometry> {
    if n_sc == 0 {
        return Err(invalid("n_sc", "cluster needs at least one cell"));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(invalid("d", format!("side length must be positive, got {d}")));
    }
    let tri = base_triangle(d);
    let mut cells: Vec<Point2D> = tri.iter().copied().take(n_sc).collect();
    if n_sc > 3 {
        let center = centroid(&tri);
        let radius = d / 3f64.sqrt();
        let mut rng = rng::stream(layout_seed, &[rng::tag::LAYOUT]);
        for _ in 3..n_sc {
            let r = radius * rng.random::<f64>().sqrt();
            let a = TAU * rng.random::<f64>();
            cells.push(center.offset(Bearing::new(a), r));
        }
    }
    Ok(ClusterGeometry {
        cells,
        side: d,
        ue: centroid(&tri),
    })
}

pub fn centroid(points: &[Point2D]) -> Point2D {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point2D::new(sx / n, sy / n)
}

/// Strict point-in-triangle test (boundary excluded up to `eps`).
pub fn inside_triangle(p: &Point2D, tri: &[Point2D; 3], eps: f64) -> bool {
    let cross = |a: &Point2D, b: &Point2D| (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    let c0 = cross(&tri[0], &tri[1]);
    let c1 = cross(&tri[1], &tri[2]);
    let c2 = cross(&tri[2], &tri[0]);
    (c0 > eps && c1 > eps && c2 > eps) || (c0 < -eps && c1 < -eps && c2 < -eps)
}

/// Nearest point of the closed triangle `tri` to `p`.
pub fn project_onto_triangle(p: &Point2D, tri: &[Point2D; 3]) -> Point2D {
    if inside_triangle(p, tri, 0.0) {
        return *p;
    }
    let on_segment = |a: &Point2D, b: &Point2D| {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
        Point2D::new(a.x + t * dx, a.y + t * dy)
    };
    [on_segment(&tri[0], &tri[1]), on_segment(&tri[1], &tri[2]), on_segment(&tri[2], &tri[0])]
        .into_iter()
        .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
        .expect("three candidates")
}

impl ClusterGeometry {
    pub fn cells(&self) -> &[Point2D] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn ue(&self) -> Point2D {
        self.ue
    }

    pub fn triangle(&self) -> [Point2D; 3] {
        base_triangle(self.side)
    }

    pub fn with_ue(mut self, ue: Point2D) -> Self {
        self.ue = ue;
        self
    }

    /// Keeps only the first `n` cells (used for single-cell baselines that
    /// still draw the UE from the base triangle).
    pub fn truncated(mut self, n: usize) -> Self {
        self.cells.truncate(n.max(1));
        self
    }

    /// Uniform draw from the interior of the base triangle.
    pub fn place_ue(&self, placement_seed: u64) -> Result<Point2D> {
        if self.cells.len() < 3 {
            return Err(Error::TooFewCells {
                needed: 3,
                got: self.cells.len(),
            });
        }
        let mut rng = rng::stream(placement_seed, &[rng::tag::UE]);
        Ok(sample_in_triangle(&self.triangle(), &mut rng))
    }

    /// Euclidean UE-to-cell distances, one per cell.
    pub fn true_distances(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.distance(&self.ue)).collect()
    }

    /// Counterclockwise angles subtended at the UE by consecutive base cells.
    pub fn true_angles(&self) -> Result<[f64; 3]> {
        if self.cells.len() < 3 {
            return Err(Error::TooFewCells {
                needed: 3,
                got: self.cells.len(),
            });
        }
        let mut bearings = [Bearing(0.0); 3];
        for (i, b) in bearings.iter_mut().enumerate() {
            if self.cells[i].distance(&self.ue) < 1e-9 * self.side {
                return Err(Error::CoincidentUe(i));
            }
            *b = self.ue.bearing_to(&self.cells[i]);
        }
        let mut theta = [0.0; 3];
        for i in 0..3 {
            theta[i] = bearings[i].ccw_to(bearings[(i + 1) % 3]);
        }
        Ok(theta)
    }
}

pub(crate) fn sample_in_triangle<R: Rng>(tri: &[Point2D; 3], rng: &mut R) -> Point2D {
    let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    Point2D::new(
        tri[0].x + u * (tri[1].x - tri[0].x) + v * (tri[2].x - tri[0].x),
        tri[0].y + u * (tri[1].y - tri[0].y) + v * (tri[2].y - tri[0].y),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn triangle_cluster_is_equilateral() {
        let g = build_cluster(3, 200.0, 0).unwrap();
        let c = g.cells();
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            assert_abs_diff_eq!(c[i].distance(&c[j]), 200.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn single_cell_sits_at_origin() {
        let g = build_cluster(1, 200.0, 0).unwrap();
        assert_eq!(g.cells(), &[Point2D::new(0.0, 0.0)]);
    }

    #[test]
    fn large_cluster_is_seed_reproducible() {
        let a = build_cluster(12, 200.0, 7).unwrap();
        let b = build_cluster(12, 200.0, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_cells(), 12);
        assert_eq!(&a.cells()[..3], &base_triangle(200.0));
        let center = centroid(&base_triangle(200.0));
        for c in &a.cells()[3..] {
            assert!(c.distance(&center) <= 200.0 / 3f64.sqrt() + 1e-9);
        }
        assert_ne!(a, build_cluster(12, 200.0, 8).unwrap());
    }

    #[test]
    fn rejects_bad_cluster_parameters() {
        assert!(build_cluster(0, 200.0, 0).is_err());
        assert!(build_cluster(3, 0.0, 0).is_err());
        assert!(build_cluster(3, -5.0, 0).is_err());
    }

    #[test]
    fn centroid_angles_and_distances() {
        let g = build_cluster(3, 200.0, 0).unwrap();
        for t in g.true_angles().unwrap() {
            assert_abs_diff_eq!(t, TAU / 3.0, epsilon = 1e-12);
        }
        for d in g.true_distances() {
            assert_abs_diff_eq!(d, 200.0 / 3f64.sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn side_midpoint_angles_and_distances() {
        let g = build_cluster(3, 200.0, 0)
            .unwrap()
            .with_ue(Point2D::new(100.0, 0.0));
        let t = g.true_angles().unwrap();
        assert_abs_diff_eq!(t[0], PI, epsilon = 1e-12);
        assert_abs_diff_eq!(t[1], PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[2], PI / 2.0, epsilon = 1e-12);
        let d = g.true_distances();
        assert_abs_diff_eq!(d[0], 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1], 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[2], 100.0 * 3f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn ue_on_a_cell_is_rejected() {
        let g = build_cluster(3, 200.0, 0)
            .unwrap()
            .with_ue(Point2D::new(200.0, 0.0));
        assert!(matches!(g.true_angles(), Err(Error::CoincidentUe(1))));
        assert_eq!(g.true_distances()[1], 0.0);
    }

    #[test]
    fn placement_is_deterministic() {
        let g = build_cluster(3, 200.0, 0).unwrap();
        assert_eq!(g.place_ue(42).unwrap(), g.place_ue(42).unwrap());
        assert!(build_cluster(1, 200.0, 0).unwrap().place_ue(1).is_err());
    }

    #[test]
    fn placement_centroid_converges() {
        let g = build_cluster(3, 200.0, 0).unwrap();
        let n = 100_000;
        let pts: Vec<_> = (0..n).map(|s| g.place_ue(s).unwrap()).collect();
        let c = centroid(&pts);
        assert!(c.distance(&centroid(&g.triangle())) < 2.0, "centroid {c:?}");
    }

    #[test]
    fn bearing_normalization() {
        assert_abs_diff_eq!(Bearing::new(-PI / 2.0).radians(), 1.5 * PI);
        assert_abs_diff_eq!(Bearing::new(5.0 * PI).radians(), PI, epsilon = 1e-12);
        assert_eq!(Bearing::new(-1e-18).radians(), 0.0);
        assert_abs_diff_eq!(
            Bearing::from_degrees(350.0).offset_to(Bearing::from_degrees(10.0)),
            20f64.to_radians(),
            epsilon = 1e-12
        );
    }

    proptest! {
        #[test]
        fn interior_angles_close_and_satisfy_cosine_rule(seed in any::<u64>()) {
            let g0 = build_cluster(3, 200.0, 0).unwrap();
            let ue = g0.place_ue(seed).unwrap();
            prop_assert!(inside_triangle(&ue, &g0.triangle(), 0.0));
            let g = g0.with_ue(ue);
            let t = g.true_angles().unwrap();
            prop_assert!((t.iter().sum::<f64>() - TAU).abs() < 1e-12);
            let d = g.true_distances();
            for i in 0..3 {
                let j = (i + 1) % 3;
                let lhs = d[i] * d[i] + d[j] * d[j] - 2.0 * d[i] * d[j] * t[i].cos();
                prop_assert!((lhs - 200.0f64.powi(2)).abs() < 1e-9 * 200.0f64.powi(2));
            }
        }
    }
}
