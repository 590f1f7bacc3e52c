//! UE position estimation from shared measurement reports.
//!
//! Each cell's report holds one PDP peak per UE Tx beam. The best Tx beam
//! index per cell gives the UE-side bearing of that cell up to codebook
//! quantization, so index differences between cells approximate the angles
//! the cell pairs subtend at the UE. Those angles pin the UE distances via
//! the cosine rule, and the distances pin the position by trilateration.
//! Alternatively every angle band defines a region bounded by circular arcs
//! through the two anchors; intersecting regions refines the estimate.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::antenna::{default_beamwidth, MAIN_LOBE_FACTOR};
use crate::error::{invalid, Error, Result};
use crate::geometry::{centroid, inside_triangle, Bearing, ClusterGeometry, Point2D};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    cell: usize,
    peak_per_tx_beam: Vec<f64>,
    best_tx: usize,
    rx_beam_used: usize,
}

impl MeasurementReport {
    pub fn new(cell: usize, peak_per_tx_beam: Vec<f64>, rx_beam_used: usize) -> Result<Self> {
        if peak_per_tx_beam.is_empty() {
            return Err(invalid("peak_per_tx_beam", "report needs at least one Tx beam"));
        }
        let mut best_tx = 0;
        for (k, &v) in peak_per_tx_beam.iter().enumerate() {
            if v > peak_per_tx_beam[best_tx] {
                best_tx = k;
            }
        }
        Ok(Self {
            cell,
            peak_per_tx_beam,
            best_tx,
            rx_beam_used,
        })
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    pub fn peaks(&self) -> &[f64] {
        &self.peak_per_tx_beam
    }

    pub fn best_tx(&self) -> usize {
        self.best_tx
    }

    pub fn best_peak(&self) -> f64 {
        self.peak_per_tx_beam[self.best_tx]
    }

    pub fn rx_beam_used(&self) -> usize {
        self.rx_beam_used
    }

    pub fn n_tx(&self) -> usize {
        self.peak_per_tx_beam.len()
    }
}

/// Counterclockwise angle from Tx beam `from` to Tx beam `to`, in `[0, 2π)`.
pub fn pair_angle(from: usize, to: usize, n_tx: usize) -> f64 {
    TAU * ((to + n_tx - from % n_tx) % n_tx) as f64 / n_tx as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimate {
    /// Cells in cyclic order; `theta[i]` spans `cells[i]` → `cells[(i+1) % 3]`.
    pub cells: [usize; 3],
    pub theta: [f64; 3],
    /// Angle uncertainty applied on each side of `theta` for estimation areas.
    pub band_halfwidth: f64,
}

impl AngleEstimate {
    pub fn with_band(mut self, halfwidth: f64) -> Self {
        self.band_halfwidth = halfwidth;
        self
    }
}

/// Angles from the best Tx beam indices of three reports taken in cyclic
/// (counterclockwise) order. The band defaults to the main-lobe width of the
/// default UE pattern for `n_tx` beams.
pub fn angles_from_reports(reports: &[MeasurementReport], n_tx: usize) -> Result<AngleEstimate> {
    if reports.len() != 3 {
        return Err(invalid("reports", format!("need exactly 3 reports, got {}", reports.len())));
    }
    for r in reports {
        if r.n_tx() != n_tx {
            return Err(Error::LengthMismatch {
                expected: n_tx,
                got: r.n_tx(),
            });
        }
    }
    let cells = [reports[0].cell, reports[1].cell, reports[2].cell];
    if cells[0] == cells[1] || cells[1] == cells[2] || cells[0] == cells[2] {
        return Err(invalid("reports", "reports must come from distinct cells"));
    }
    let mut theta = [0.0; 3];
    for i in 0..3 {
        let (a, b) = (&reports[i], &reports[(i + 1) % 3]);
        if a.best_tx == b.best_tx {
            return Err(Error::AnglesUnresolvable(a.cell, b.cell, a.best_tx));
        }
        theta[i] = pair_angle(a.best_tx, b.best_tx, n_tx);
    }
    Ok(AngleEstimate {
        cells,
        theta,
        band_halfwidth: MAIN_LOBE_FACTOR * default_beamwidth(n_tx),
    })
}

const SOLVER_MAX_ITER: usize = 100;
const SOLVER_GRID: usize = 50;

/// Distances to the three cells of an equilateral cluster of side `d_side`.
pub fn solve_distances(est: &AngleEstimate, d_side: f64) -> Result<[f64; 3]> {
    solve_distances_with_sides(&est.theta, &[d_side; 3])
}

/// Solves `d_i² + d_j² - 2·d_i·d_j·cos θ_i = s_i²` (with `j = i + 1 mod 3`)
/// for positive distances.
///
/// Damped Newton (Levenberg-Marquardt) from the symmetric start; when that
/// does not reach a residual below `1e-9·s²`, a coarse grid seeds a second
/// polish. The lower-cost least-squares point is returned either way, since
/// quantized angles rarely make the system exactly consistent.
pub fn solve_distances_with_sides(theta: &[f64; 3], sides: &[f64; 3]) -> Result<[f64; 3]> {
    if sides.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(invalid("sides", "side lengths must be positive"));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(invalid("theta", "angles must be finite"));
    }
    let s_max = sides.iter().copied().fold(0.0, f64::max);
    let tol = 1e-9 * s_max * s_max;
    let sys = CosineSystem::new(theta, sides);

    let start = Vector3::repeat(sides.iter().sum::<f64>() / 3.0 / 3f64.sqrt());
    let mut best = sys.polish(start);
    if sys.max_residual(&best) > tol {
        let step = s_max / SOLVER_GRID as f64;
        let mut seed = start;
        let mut seed_cost = f64::INFINITY;
        for i in 1..=SOLVER_GRID {
            for j in 1..=SOLVER_GRID {
                for k in 1..=SOLVER_GRID {
                    let d = Vector3::new(i as f64 * step, j as f64 * step, k as f64 * step);
                    let c = sys.cost(&d);
                    if c < seed_cost {
                        seed_cost = c;
                        seed = d;
                    }
                }
            }
        }
        let alt = sys.polish(seed);
        if sys.cost(&alt) < sys.cost(&best) {
            best = alt;
        }
    }
    if !best.iter().all(|d| d.is_finite()) {
        return Err(Error::TriangulationFailed("solver diverged".into()));
    }
    // The solver clamps at a tiny positive floor, so an inconsistent system
    // can return a boundary minimizer (UE on top of a cell); that is kept.
    if best.iter().any(|&d| d <= 0.0) {
        return Err(Error::TriangulationFailed(format!(
            "non-positive distance in solution {:?}",
            best.as_slice()
        )));
    }
    Ok([best[0], best[1], best[2]])
}

struct CosineSystem {
    cos: [f64; 3],
    sq: [f64; 3],
    floor: f64,
}

impl CosineSystem {
    fn new(theta: &[f64; 3], sides: &[f64; 3]) -> Self {
        let s_max = sides.iter().copied().fold(0.0, f64::max);
        Self {
            cos: theta.map(f64::cos),
            sq: sides.map(|s| s * s),
            floor: 1e-9 * s_max,
        }
    }

    fn residuals(&self, d: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| {
            let j = (i + 1) % 3;
            d[i] * d[i] + d[j] * d[j] - 2.0 * d[i] * d[j] * self.cos[i] - self.sq[i]
        })
    }

    fn jacobian(&self, d: &Vector3<f64>) -> Matrix3<f64> {
        let mut jac = Matrix3::zeros();
        for i in 0..3 {
            let j = (i + 1) % 3;
            jac[(i, i)] += 2.0 * d[i] - 2.0 * d[j] * self.cos[i];
            jac[(i, j)] += 2.0 * d[j] - 2.0 * d[i] * self.cos[i];
        }
        jac
    }

    fn cost(&self, d: &Vector3<f64>) -> f64 {
        self.residuals(d).norm_squared()
    }

    fn max_residual(&self, d: &Vector3<f64>) -> f64 {
        self.residuals(d).amax()
    }

    fn polish(&self, start: Vector3<f64>) -> Vector3<f64> {
        let mut d = start;
        let mut cost = self.cost(&d);
        let mut lambda = 1e-3;
        for _ in 0..SOLVER_MAX_ITER {
            let r = self.residuals(&d);
            let jac = self.jacobian(&d);
            let jtj = jac.transpose() * jac;
            let grad = jac.transpose() * r;
            let mut improved = false;
            for _ in 0..20 {
                let damped = jtj + Matrix3::from_diagonal(&jtj.diagonal().map(|v| lambda * v.max(1e-12)));
                let Some(step) = damped.lu().solve(&(-grad)) else {
                    lambda *= 10.0;
                    continue;
                };
                let cand = (d + step).map(|v| v.max(self.floor));
                let c = self.cost(&cand);
                if c < cost {
                    d = cand;
                    cost = c;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved || cost == 0.0 {
                break;
            }
        }
        d
    }
}

/// Least-squares trilateration: minimizes `Σ (|p - S_i| - d_i)²`.
///
/// Starts from the linearized solution and from the anchor centroid; when
/// both converge to near-equal costs the point inside the anchor triangle
/// wins.
pub fn locate_ue(distances: &[f64; 3], anchors: &[Point2D; 3]) -> Point2D {
    let cost = |p: &Point2D| -> f64 {
        anchors
            .iter()
            .zip(distances)
            .map(|(a, d)| (p.distance(a) - d).powi(2))
            .sum()
    };
    let c = centroid(anchors);
    let mut starts = vec![c];
    if let Some(p) = linearized_fix(distances, anchors) {
        starts.insert(0, p);
    }
    let mut best: Option<(Point2D, f64)> = None;
    for s in starts {
        let p = gauss_newton_fix(s, distances, anchors);
        let cp = cost(&p);
        best = match best {
            None => Some((p, cp)),
            Some((q, cq)) => {
                let near = (cp - cq).abs() <= 1e-9 * (1.0 + cp.min(cq));
                if near {
                    let p_in = inside_triangle(&p, anchors, 0.0);
                    let q_in = inside_triangle(&q, anchors, 0.0);
                    if p_in && !q_in {
                        Some((p, cp))
                    } else {
                        Some((q, cq))
                    }
                } else if cp < cq {
                    Some((p, cp))
                } else {
                    Some((q, cq))
                }
            }
        };
    }
    best.map(|(p, _)| p).unwrap_or(c)
}

fn linearized_fix(d: &[f64; 3], s: &[Point2D; 3]) -> Option<Point2D> {
    let a = Matrix2::new(
        2.0 * (s[1].x - s[0].x),
        2.0 * (s[1].y - s[0].y),
        2.0 * (s[2].x - s[0].x),
        2.0 * (s[2].y - s[0].y),
    );
    let n0 = s[0].x * s[0].x + s[0].y * s[0].y;
    let b = Vector2::new(
        d[0] * d[0] - d[1] * d[1] + s[1].x * s[1].x + s[1].y * s[1].y - n0,
        d[0] * d[0] - d[2] * d[2] + s[2].x * s[2].x + s[2].y * s[2].y - n0,
    );
    let p = a.lu().solve(&b)?;
    let p = Point2D::new(p[0], p[1]);
    p.is_finite().then_some(p)
}

fn gauss_newton_fix(start: Point2D, d: &[f64; 3], s: &[Point2D; 3]) -> Point2D {
    let mut p = Vector2::new(start.x, start.y);
    let cost = |p: &Vector2<f64>| -> f64 {
        s.iter()
            .zip(d)
            .map(|(a, di)| ((p - Vector2::new(a.x, a.y)).norm() - di).powi(2))
            .sum()
    };
    let mut cur = cost(&p);
    let mut lambda = 1e-6;
    for _ in 0..100 {
        let mut jtj = Matrix2::zeros();
        let mut grad = Vector2::zeros();
        for (a, di) in s.iter().zip(d) {
            let diff = p - Vector2::new(a.x, a.y);
            let norm = diff.norm().max(1e-12);
            let e = norm - di;
            let row = diff / norm;
            jtj += row * row.transpose();
            grad += row * e;
        }
        let mut improved = false;
        for _ in 0..20 {
            let damped = jtj + Matrix2::identity() * lambda;
            let Some(step) = damped.lu().solve(&(-grad)) else {
                lambda *= 10.0;
                continue;
            };
            let cand = p + step;
            let c = cost(&cand);
            if c < cur {
                let small = step.norm() < 1e-13 * (1.0 + p.norm());
                p = cand;
                cur = c;
                lambda = (lambda * 0.3).max(1e-15);
                improved = !small;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Point2D::new(p[0], p[1])
}

/// Axis-aligned raster over which estimation areas are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterGrid {
    origin: Point2D,
    resolution: f64,
    nx: usize,
    ny: usize,
}

impl RasterGrid {
    /// Covers the bounding box of `points` with square cells of `resolution`.
    pub fn covering(points: &[Point2D], resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(invalid("grid_resolution", "must be positive"));
        }
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in points {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let nx = (((x1 - x0) / resolution).ceil() as usize).max(1);
        let ny = (((y1 - y0) / resolution).ceil() as usize).max(1);
        Ok(Self {
            origin: Point2D::new(x0, y0),
            resolution,
            nx,
            ny,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn center(&self, index: usize) -> Point2D {
        let (ix, iy) = (index % self.nx, index / self.nx);
        Point2D::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }
}

/// Points from which the segment `a`–`b` subtends a counterclockwise angle
/// within `halfwidth` (circularly) of `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcBand {
    pub a: Point2D,
    pub b: Point2D,
    pub theta: f64,
    pub halfwidth: f64,
}

impl ArcBand {
    pub fn contains(&self, p: &Point2D) -> bool {
        let (ax, ay) = (self.a.x - p.x, self.a.y - p.y);
        let (bx, by) = (self.b.x - p.x, self.b.y - p.y);
        if (ax == 0.0 && ay == 0.0) || (bx == 0.0 && by == 0.0) {
            return false;
        }
        let angle = (ax * by - ay * bx).atan2(ax * bx + ay * by);
        Bearing::new(angle).offset_to(Bearing::new(self.theta)) <= self.halfwidth
    }
}

/// Rasterized intersection of one or more [`ArcBand`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationArea {
    bands: Vec<ArcBand>,
    grid: RasterGrid,
    mask: Vec<bool>,
    count: usize,
}

impl EstimationArea {
    pub fn new(band: ArcBand, grid: RasterGrid) -> Self {
        let mask: Vec<bool> = (0..grid.len()).map(|i| band.contains(&grid.center(i))).collect();
        let count = mask.iter().filter(|&&m| m).count();
        Self {
            bands: vec![band],
            grid,
            mask,
            count,
        }
    }

    /// Exact membership test against every constituent band.
    pub fn contains(&self, p: &Point2D) -> bool {
        self.bands.iter().all(|b| b.contains(p))
    }

    pub fn bands(&self) -> &[ArcBand] {
        &self.bands
    }

    pub fn cell_count(&self) -> usize {
        self.count
    }

    pub fn area_m2(&self) -> f64 {
        self.count as f64 * self.grid.resolution.powi(2)
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Mean of member cell centers; `None` when the raster is empty.
    pub fn centroid(&self) -> Option<Point2D> {
        if self.count == 0 {
            return None;
        }
        let (mut sx, mut sy) = (0.0, 0.0);
        for (i, _) in self.mask.iter().enumerate().filter(|(_, &m)| m) {
            let c = self.grid.center(i);
            sx += c.x;
            sy += c.y;
        }
        Some(Point2D::new(sx / self.count as f64, sy / self.count as f64))
    }

    /// Intersection with one more band, evaluated only on surviving cells.
    pub fn intersect_band(&self, band: ArcBand) -> Self {
        let mut mask = self.mask.clone();
        let mut count = 0;
        for (i, m) in mask.iter_mut().enumerate() {
            if *m {
                *m = band.contains(&self.grid.center(i));
                count += *m as usize;
            }
        }
        let mut bands = self.bands.clone();
        bands.push(band);
        Self {
            bands,
            grid: self.grid,
            mask,
            count,
        }
    }

    pub fn intersect(&self, other: &EstimationArea) -> Self {
        assert_eq!(self.grid, other.grid, "areas must share a raster");
        let mask: Vec<bool> = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        let count = mask.iter().filter(|&&m| m).count();
        let mut bands = self.bands.clone();
        bands.extend_from_slice(&other.bands);
        Self {
            bands,
            grid: self.grid,
            mask,
            count,
        }
    }
}

/// Estimation area for one anchor pair, rasterized over `grid`.
pub fn estimation_area(theta: f64, halfwidth: f64, pair: (Point2D, Point2D), grid: RasterGrid) -> EstimationArea {
    EstimationArea::new(
        ArcBand {
            a: pair.0,
            b: pair.1,
            theta,
            halfwidth,
        },
        grid,
    )
}

/// The three reports with the largest best-beam peaks, ties to lower cell.
pub fn select_top3(reports: &[MeasurementReport]) -> Result<[MeasurementReport; 3]> {
    if reports.len() < 3 {
        return Err(Error::TooFewCells {
            needed: 3,
            got: reports.len(),
        });
    }
    let mut sorted: Vec<&MeasurementReport> = reports.iter().collect();
    sorted.sort_by(|a, b| b.best_peak().total_cmp(&a.best_peak()).then(a.cell.cmp(&b.cell)));
    Ok([sorted[0].clone(), sorted[1].clone(), sorted[2].clone()])
}

/// Reorders three reports counterclockwise around their cells' centroid,
/// starting from the lowest cell index.
pub fn order_ccw(reports: [MeasurementReport; 3], geom: &ClusterGeometry) -> [MeasurementReport; 3] {
    let pts: Vec<Point2D> = reports.iter().map(|r| geom.cells()[r.cell]).collect();
    let c = centroid(&pts);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| {
        c.bearing_to(&pts[a])
            .radians()
            .total_cmp(&c.bearing_to(&pts[b]).radians())
    });
    let start = (0..3).min_by_key(|&k| reports[idx[k]].cell).unwrap_or(0);
    let pick = |k: usize| reports[idx[(start + k) % 3]].clone();
    [pick(0), pick(1), pick(2)]
}

/// Point estimate from exactly three cyclically ordered reports.
pub fn point_estimate(reports: &[MeasurementReport; 3], geom: &ClusterGeometry, n_tx: usize) -> Result<Point2D> {
    let est = angles_from_reports(reports, n_tx)?;
    let anchors = est.cells.map(|c| geom.cells()[c]);
    let sides = [
        anchors[0].distance(&anchors[1]),
        anchors[1].distance(&anchors[2]),
        anchors[2].distance(&anchors[0]),
    ];
    let d = solve_distances_with_sides(&est.theta, &sides)?;
    Ok(locate_ue(&d, &anchors))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub estimate: Point2D,
    pub area: EstimationArea,
    /// Number of arc bands in the final intersection.
    pub bands_used: usize,
    /// True when the intersection was empty and the point solve was used.
    pub fell_back: bool,
}

/// Intersects estimation areas from all usable reports.
///
/// The three strongest reports contribute their three cyclic pairs. Each
/// further report, strongest first, pairs with its two nearest selected
/// anchors; a band that would empty the intersection is skipped. The result
/// is the centroid of the intersection, or the three-report point solve when
/// even the base intersection is empty.
pub fn refine_location(
    reports: &[MeasurementReport],
    geom: &ClusterGeometry,
    phi_ml: f64,
    grid_resolution: f64,
) -> Result<Refinement> {
    let top = order_ccw(select_top3(reports)?, geom);
    let n_tx = top[0].n_tx();
    if reports.iter().any(|r| r.n_tx() != n_tx) {
        return Err(invalid("reports", "reports disagree on Tx codebook size"));
    }
    let grid = RasterGrid::covering(&geom.triangle(), grid_resolution)?;
    let anchor = |r: &MeasurementReport| geom.cells()[r.cell];

    let band = |from: &MeasurementReport, to: &MeasurementReport| ArcBand {
        a: anchor(from),
        b: anchor(to),
        theta: pair_angle(from.best_tx, to.best_tx, n_tx),
        halfwidth: phi_ml,
    };
    let mut area = EstimationArea::new(band(&top[0], &top[1]), grid);
    area = area.intersect_band(band(&top[1], &top[2]));
    area = area.intersect_band(band(&top[2], &top[0]));

    if area.is_empty() {
        let estimate = point_estimate(&top, geom, n_tx)?;
        return Ok(Refinement {
            estimate,
            bands_used: area.bands().len(),
            area,
            fell_back: true,
        });
    }

    let mut extras: Vec<&MeasurementReport> = reports
        .iter()
        .filter(|r| top.iter().all(|t| t.cell != r.cell))
        .collect();
    extras.sort_by(|a, b| b.best_peak().total_cmp(&a.best_peak()).then(a.cell.cmp(&b.cell)));
    for extra in extras {
        let here = anchor(extra);
        let mut near: Vec<&MeasurementReport> = top.iter().collect();
        near.sort_by(|a, b| {
            anchor(a)
                .distance(&here)
                .total_cmp(&anchor(b).distance(&here))
                .then(a.cell.cmp(&b.cell))
        });
        for t in near.into_iter().take(2) {
            let cand = area.intersect_band(band(extra, t));
            if !cand.is_empty() {
                area = cand;
            }
        }
    }
    let estimate = area.centroid().expect("non-empty area has a centroid");
    Ok(Refinement {
        estimate,
        bands_used: area.bands().len(),
        area,
        fell_back: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_cluster;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn report(cell: usize, best: usize, n_tx: usize, peak: f64) -> MeasurementReport {
        let mut v = vec![0.1; n_tx];
        v[best] = peak;
        MeasurementReport::new(cell, v, 0).unwrap()
    }

    #[test]
    fn eq6_branches() {
        let r = [report(0, 1, 8, 1.0), report(1, 3, 8, 1.0), report(2, 6, 8, 1.0)];
        let est = angles_from_reports(&r, 8).unwrap();
        assert_abs_diff_eq!(est.theta[0], PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.theta.iter().sum::<f64>(), TAU, epsilon = 1e-12);

        let r = [report(0, 7, 8, 1.0), report(1, 2, 8, 1.0), report(2, 4, 8, 1.0)];
        let est = angles_from_reports(&r, 8).unwrap();
        assert_abs_diff_eq!(est.theta[0], 3.0 * PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.theta.iter().sum::<f64>(), TAU, epsilon = 1e-12);
    }

    #[test]
    fn equal_indices_are_unresolvable() {
        let r = [report(0, 2, 8, 1.0), report(1, 2, 8, 1.0), report(2, 5, 8, 1.0)];
        assert!(matches!(angles_from_reports(&r, 8), Err(Error::AnglesUnresolvable(0, 1, 2))));
        let dup = [report(0, 1, 8, 1.0), report(0, 3, 8, 1.0), report(2, 5, 8, 1.0)];
        assert!(angles_from_reports(&dup, 8).is_err());
    }

    #[test]
    fn symmetric_and_midpoint_distances() {
        let est = AngleEstimate {
            cells: [0, 1, 2],
            theta: [TAU / 3.0; 3],
            band_halfwidth: 0.1,
        };
        for d in solve_distances(&est, 200.0).unwrap() {
            assert_abs_diff_eq!(d, 200.0 / 3f64.sqrt(), epsilon = 1e-6);
        }
        let est = AngleEstimate {
            theta: [PI, PI / 2.0, PI / 2.0],
            ..est
        };
        let d = solve_distances(&est, 200.0).unwrap();
        assert_abs_diff_eq!(d[0], 100.0, epsilon = 1e-6);
        assert_abs_diff_eq!(d[1], 100.0, epsilon = 1e-6);
        assert_abs_diff_eq!(d[2], 173.205_080_756_887_7, epsilon = 1e-6);
    }

    #[test]
    fn exact_angles_round_trip() {
        let g0 = build_cluster(3, 200.0, 0).unwrap();
        let tri = g0.triangle();
        for seed in 0..1000 {
            let g = g0.clone().with_ue(g0.place_ue(seed).unwrap());
            let theta = g.true_angles().unwrap();
            let est = AngleEstimate { cells: [0, 1, 2], theta, band_halfwidth: 0.0 };
            let d = solve_distances(&est, 200.0).unwrap();
            let truth = g.true_distances();
            for i in 0..3 {
                assert!((d[i] - truth[i]).abs() < 1e-6, "seed {seed}: {d:?} vs {truth:?}");
            }
            let p = locate_ue(&d, &tri);
            assert!(p.distance(&g.ue()) < 1e-6, "seed {seed}");
        }
    }

    #[test]
    fn trilateration_cases() {
        let tri = build_cluster(3, 200.0, 0).unwrap().triangle();
        let c = centroid(&tri);
        let p = locate_ue(&[200.0 / 3f64.sqrt(); 3], &tri);
        assert!(p.distance(&c) < 1e-6);

        // Brute-force oracle on a 0.01 m grid around the centroid.
        let d = [200.0 / 3f64.sqrt() + 1.0; 3];
        let cost = |q: &Point2D| tri.iter().zip(&d).map(|(a, di)| (q.distance(a) - di).powi(2)).sum::<f64>();
        let mut best = (c, f64::INFINITY);
        for i in -300..=300 {
            for j in -300..=300 {
                let q = Point2D::new(c.x + i as f64 * 0.01, c.y + j as f64 * 0.01);
                let v = cost(&q);
                if v < best.1 {
                    best = (q, v);
                }
            }
        }
        let p = locate_ue(&d, &tri);
        assert!(p.distance(&best.0) < 0.02);
        assert!(p.distance(&c) < 2.0);
    }

    #[test]
    fn inconsistent_angles_still_solve() {
        // Quantized angles that no interior point reproduces exactly.
        let d = solve_distances_with_sides(&[PI / 4.0, PI / 2.0, 1.25 * PI], &[200.0; 3]);
        if let Ok(d) = d {
            assert!(d.iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn area_membership_and_nesting() {
        let g = build_cluster(3, 200.0, 0).unwrap();
        let tri = g.triangle();
        let grid = RasterGrid::covering(&tri, 2.0).unwrap();
        let ue = g.clone().with_ue(Point2D::new(90.0, 60.0));
        let theta = ue.true_angles().unwrap();

        let on_arc = estimation_area(theta[0], 1e-9, (tri[0], tri[1]), grid);
        assert!(on_arc.contains(&ue.ue()));

        let mut prev = usize::MAX;
        for hw in [1.0, 0.5, 0.25, 0.1, 0.02] {
            let a = estimation_area(theta[0], hw, (tri[0], tri[1]), grid);
            assert!(a.cell_count() <= prev);
            prev = a.cell_count();
        }
        assert!(estimation_area(theta[0], 0.0, (tri[0], tri[1]), grid).cell_count() < 200);
    }

    #[test]
    fn top3_selection() {
        let rs: Vec<_> = [5.0, 9.0, 1.0, 7.0]
            .iter()
            .enumerate()
            .map(|(c, &p)| report(c, 0, 4, p))
            .collect();
        let top = select_top3(&rs).unwrap();
        assert_eq!(top.each_ref().map(|r| r.cell()), [1, 3, 0]);

        let eq: Vec<_> = (0..5).map(|c| report(c, 0, 4, 2.0)).collect();
        assert_eq!(select_top3(&eq).unwrap().each_ref().map(|r| r.cell()), [0, 1, 2]);
        assert_eq!(select_top3(&rs[..3]).unwrap().each_ref().map(|r| r.cell()), [1, 0, 2]);
        assert!(select_top3(&rs[..2]).is_err());
    }

    #[test]
    fn extra_reports_never_grow_the_intersection() {
        let g = build_cluster(6, 200.0, 3).unwrap();
        let g = g.clone().with_ue(g.place_ue(5).unwrap());
        let n_tx = 16;
        let ue = g.ue();
        let reps: Vec<_> = g
            .cells()
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let idx = (ue.bearing_to(s).radians() / (TAU / n_tx as f64)).round() as usize % n_tx;
                report(c, idx, n_tx, 10.0 - c as f64)
            })
            .collect();
        let phi_ml = MAIN_LOBE_FACTOR * default_beamwidth(n_tx);
        let three = refine_location(&reps[..3], &g, phi_ml, 2.0).unwrap();
        let all = refine_location(&reps, &g, phi_ml, 2.0).unwrap();
        assert!(three.area.contains(&ue));
        assert!(all.area.cell_count() <= three.area.cell_count());
        assert!(all.bands_used >= three.bands_used);
    }
}
