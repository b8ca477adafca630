//! Square service area, depot placement and the multi-median function.
//!
//! The multi-median value of a layout is the mean distance from a uniformly
//! distributed demand point to its nearest depot. For `L = k²` depots the
//! optimum splits the square into `k × k` identical cells with a depot at each
//! centroid, and the value is known in closed form. Other depot counts are
//! handled by Lloyd-style alternation with Weiszfeld median updates.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};

/// Mean distance from a uniform point of the unit square to its centre:
/// `(√2 + ln(1 + √2)) / 6`.
pub const MEDIAN_CONSTANT: f64 = 0.382_597_858_232_106_35;

/// Axis-aligned square `[0, side]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceArea {
    side: f64,
}

impl ServiceArea {
    pub fn new(side_km: f64) -> Result<Self> {
        if !(side_km.is_finite() && side_km > 0.0) {
            return Err(invalid_arg!("area side must be positive, got {side_km}"));
        }
        Ok(Self { side: side_km })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// Area in km².
    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.side).contains(&p.x) && (0.0..=self.side).contains(&p.y)
    }

    /// Uniformly distributed point in the area.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(rng.gen::<f64>() * self.side, rng.gen::<f64>() * self.side)
    }
}

/// A position in km.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        libm::sqrt(dx * dx + dy * dy)
    }

    /// Moves up to `step` km towards `target`. Returns the new position, the
    /// distance actually covered and whether the target was reached.
    pub fn advance(self, target: Point, step: f64) -> (Point, f64, bool) {
        let remaining = self.dist(target);
        if remaining <= step {
            (target, remaining, true)
        } else {
            let f = step / remaining;
            let p = Point::new(
                self.x + (target.x - self.x) * f,
                self.y + (target.y - self.y) * f,
            );
            (p, step, false)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementMethod {
    AnalyticGrid,
    Numeric,
}

/// Depot positions together with their multi-median value `H_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepotLayout {
    pub positions: Vec<Point>,
    /// Multi-median value in km.
    pub h_l: f64,
    pub method: PlacementMethod,
}

impl DepotLayout {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Index of the depot closest to `p`; ties go to the smaller index.
    pub fn nearest(&self, p: Point) -> usize {
        nearest_index(&self.positions, p)
    }
}

pub(crate) fn nearest_index(depots: &[Point], p: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, d) in depots.iter().enumerate() {
        let dist = d.dist(p);
        if dist < best_d {
            best = i;
            best_d = dist;
        }
    }
    best
}

/// Returns `k` when `n == k²`.
pub fn perfect_square_root(n: usize) -> Option<usize> {
    let k = libm::round(libm::sqrt(n as f64)) as usize;
    (k * k == n).then_some(k)
}

/// Closed-form multi-median value for the `k × k` centroid grid.
pub fn grid_multimedian(area: &ServiceArea, depots: usize) -> f64 {
    MEDIAN_CONSTANT * area.side() / libm::sqrt(depots as f64)
}

/// Centroids of the `k × k` subdivision, row-major by x then y.
pub fn grid_layout(area: &ServiceArea, k: usize) -> DepotLayout {
    let cell = area.side() / k as f64;
    let mut positions = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            positions.push(Point::new((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell));
        }
    }
    DepotLayout {
        positions,
        h_l: grid_multimedian(area, k * k),
        method: PlacementMethod::AnalyticGrid,
    }
}

/// Strict lower bound `(2/3)·√(A/(πL))` on the optimal multi-median value.
pub fn zemel_lower_bound(area_km2: f64, depots: usize) -> f64 {
    2.0 / 3.0 * libm::sqrt(area_km2 / (PI * depots as f64))
}

/// Optimal placement of `count` depots.
///
/// Perfect squares get the centroid grid. Anything else is optimised
/// numerically with `rng`, so a fixed seed gives a bit-identical layout.
pub fn place_depots<R: Rng + ?Sized>(
    area: &ServiceArea,
    count: usize,
    rng: &mut R,
) -> Result<DepotLayout> {
    if count == 0 {
        return Err(invalid_arg!("depot count must be at least 1"));
    }
    if let Some(k) = perfect_square_root(count) {
        return Ok(grid_layout(area, k));
    }
    Ok(lloyd_weiszfeld(area, count, &LloydParams::default(), rng))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Minimum sample count accepted by [`multimedian_value`].
pub const MIN_SAMPLES: usize = 10_000;

/// Monte Carlo estimate of `H_L(d)` using jittered stratified sampling: one
/// uniform point per cell of a `⌊√samples⌋²` grid.
///
/// The reported standard error is the plain i.i.d. one, which overstates the
/// error of a stratified estimator.
pub fn multimedian_value<R: Rng + ?Sized>(
    layout: &DepotLayout,
    area: &ServiceArea,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if layout.is_empty() {
        return Err(invalid_arg!("layout has no depots"));
    }
    if samples < MIN_SAMPLES {
        return Err(invalid_arg!("need at least {MIN_SAMPLES} samples, got {samples}"));
    }
    let g = libm::sqrt(samples as f64) as usize;
    let cell = area.side() / g as f64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for i in 0..g {
        for j in 0..g {
            let p = Point::new(
                (i as f64 + rng.gen::<f64>()) * cell,
                (j as f64 + rng.gen::<f64>()) * cell,
            );
            let d = nearest_distance(&layout.positions, p);
            sum += d;
            sum_sq += d * d;
        }
    }
    let n = (g * g) as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(Estimate {
        mean,
        std_error: libm::sqrt(var / n),
    })
}

fn nearest_distance(depots: &[Point], p: Point) -> f64 {
    depots
        .iter()
        .map(|d| d.dist(p))
        .fold(f64::INFINITY, f64::min)
}

/// Tuning for the numeric placement.
#[derive(Debug, Clone, Copy)]
pub struct LloydParams {
    /// Stratified sample grid is `grid × grid`.
    pub grid: usize,
    pub restarts: usize,
    /// Stop once `H` improves by less than `tolerance · side`.
    pub tolerance: f64,
    pub max_rounds: usize,
}

impl Default for LloydParams {
    fn default() -> Self {
        Self {
            grid: 96,
            restarts: 16,
            tolerance: 1e-4,
            max_rounds: 200,
        }
    }
}

const WEISZFELD_EPS: f64 = 1e-9;

/// Lloyd alternation: assign samples to their nearest depot, move every depot
/// to the geometric median of its cell, repeat. Best of `restarts` random
/// initialisations.
pub fn lloyd_weiszfeld<R: Rng + ?Sized>(
    area: &ServiceArea,
    count: usize,
    params: &LloydParams,
    rng: &mut R,
) -> DepotLayout {
    let side = area.side();
    let cell = side / params.grid as f64;
    let mut samples = Vec::with_capacity(params.grid * params.grid);
    for i in 0..params.grid {
        for j in 0..params.grid {
            samples.push(Point::new(
                (i as f64 + rng.gen::<f64>()) * cell,
                (j as f64 + rng.gen::<f64>()) * cell,
            ));
        }
    }

    let mut best: Option<(Vec<Point>, f64)> = None;
    let mut owner = alloc::vec![0usize; samples.len()];
    for _ in 0..params.restarts.max(1) {
        let mut depots: Vec<Point> = (0..count).map(|_| area.sample(rng)).collect();
        let mut h = f64::INFINITY;
        for _ in 0..params.max_rounds {
            let mut total = 0.0;
            for (o, &p) in owner.iter_mut().zip(&samples) {
                *o = nearest_index(&depots, p);
                total += depots[*o].dist(p);
            }
            let h_new = total / samples.len() as f64;
            let improved = h - h_new;
            h = h_new;
            if improved < params.tolerance * side {
                break;
            }
            let mut cells: Vec<Vec<Point>> = alloc::vec![Vec::new(); count];
            for (&o, &p) in owner.iter().zip(&samples) {
                cells[o].push(p);
            }
            for (depot, members) in depots.iter_mut().zip(&cells) {
                *depot = weiszfeld(*depot, members);
            }
        }
        if best.as_ref().map_or(true, |(_, bh)| h < *bh) {
            best = Some((depots, h));
        }
    }
    let (positions, h_l) = best.expect("at least one restart");
    DepotLayout {
        positions,
        h_l,
        method: PlacementMethod::Numeric,
    }
}

/// Geometric median of `points` by Weiszfeld iteration from `start`. Points
/// within 1e-9 km of the current iterate are skipped.
fn weiszfeld(start: Point, points: &[Point]) -> Point {
    let mut x = start;
    for _ in 0..100 {
        let (mut nx, mut ny, mut w) = (0.0, 0.0, 0.0);
        for p in points {
            let d = p.dist(x);
            if d < WEISZFELD_EPS {
                continue;
            }
            nx += p.x / d;
            ny += p.y / d;
            w += 1.0 / d;
        }
        if w == 0.0 {
            return x;
        }
        let next = Point::new(nx / w, ny / w);
        let moved = next.dist(x);
        x = next;
        if moved < 1e-7 {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::SQRT_2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn area4() -> ServiceArea {
        ServiceArea::new(4.0).unwrap()
    }

    #[test]
    fn median_constant_matches_closed_form() {
        let c0 = (SQRT_2 + libm::log(1.0 + SQRT_2)) / 6.0;
        assert!((c0 - MEDIAN_CONSTANT).abs() < 1e-15);
    }

    #[test]
    fn single_depot_sits_at_centre() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layout = place_depots(&area4(), 1, &mut rng).unwrap();
        assert_eq!(layout.positions, [Point::new(2.0, 2.0)]);
        assert!((layout.h_l - 1.53039).abs() < 1e-5);
    }

    #[test]
    fn four_depots_form_the_centroid_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layout = place_depots(&area4(), 4, &mut rng).unwrap();
        assert_eq!(layout.method, PlacementMethod::AnalyticGrid);
        assert_eq!(
            layout.positions,
            [
                Point::new(1.0, 1.0),
                Point::new(1.0, 3.0),
                Point::new(3.0, 1.0),
                Point::new(3.0, 3.0)
            ]
        );
    }

    #[test]
    fn zero_depots_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            place_depots(&area4(), 0, &mut rng),
            Err(crate::Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zemel_values() {
        assert!((zemel_lower_bound(16.0, 1) - 1.50450).abs() < 1e-5);
        assert!((zemel_lower_bound(16.0, 4) - 0.75225).abs() < 1e-5);
        assert!((zemel_lower_bound(1.0, 1) - 0.37613).abs() < 1e-5);
        assert!(zemel_lower_bound(1.0, 1) < MEDIAN_CONSTANT);
    }

    #[test]
    fn multimedian_rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empty = DepotLayout {
            positions: Vec::new(),
            h_l: 0.0,
            method: PlacementMethod::Numeric,
        };
        assert!(multimedian_value(&empty, &area4(), 10_000, &mut rng).is_err());
        let one = grid_layout(&area4(), 1);
        assert!(multimedian_value(&one, &area4(), 9_999, &mut rng).is_err());
    }

    #[test]
    fn grid_values_agree_with_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=4 {
            let layout = grid_layout(&area4(), k);
            let est = multimedian_value(&layout, &area4(), 250_000, &mut rng).unwrap();
            assert!(
                (est.mean - layout.h_l).abs() < 3.0 * est.std_error,
                "k={k}: {} vs {}",
                est.mean,
                layout.h_l
            );
        }
    }

    #[test]
    fn grid_is_invariant_under_reflections() {
        let a = area4();
        for k in 1..=4 {
            let layout = grid_layout(&a, k);
            let reflections: [fn(Point, f64) -> Point; 3] = [
                |p, s| Point::new(s - p.x, p.y),
                |p, s| Point::new(p.x, s - p.y),
                |p, _| Point::new(p.y, p.x),
            ];
            for r in reflections {
                for p in &layout.positions {
                    let q = r(*p, a.side());
                    assert!(layout.positions.iter().any(|d| d.dist(q) < 1e-12));
                }
            }
        }
    }

    #[test]
    fn numeric_placement_is_deterministic() {
        let a = area4();
        let params = LloydParams {
            grid: 32,
            restarts: 3,
            ..LloydParams::default()
        };
        let x = lloyd_weiszfeld(&a, 3, &params, &mut ChaCha8Rng::seed_from_u64(5));
        let y = lloyd_weiszfeld(&a, 3, &params, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(x, y);
        assert!(x.positions.iter().all(|p| a.contains(*p)));
    }

    #[test]
    fn advance_lands_exactly_on_target() {
        let (p, moved, arrived) = Point::new(0.0, 0.0).advance(Point::new(0.3, 0.4), 0.016);
        assert!(!arrived);
        assert!((moved - 0.016).abs() < 1e-15);
        assert!((p.dist(Point::new(0.0, 0.0)) - 0.016).abs() < 1e-12);
        let (p, moved, arrived) = Point::new(0.0, 0.0).advance(Point::new(0.003, 0.004), 0.016);
        assert!(arrived);
        assert_eq!(p, Point::new(0.003, 0.004));
        assert!((moved - 0.005).abs() < 1e-15);
    }
}
