//! Turns raw detection points into scored frontiers: flat-kernel mean-shift
//! clustering, information gain, and rejection of invalid or worthless
//! candidates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::gridmap::{CellIndex, CellState, OccupancyGrid};

pub const DEFAULT_MATCH_RADIUS: f64 = 1.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FilterError {
    #[error("mean shift needs at least one point")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilteredFrontier {
    pub position: Point2,
    /// Unknown area around the frontier, m^2.
    pub info_gain: f64,
    pub detected_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InvalidReason {
    Timeout,
    MoveBaseError,
    InObstacle,
}

impl InvalidReason {
    pub fn as_str(self) -> &'static str {
        match self {
            InvalidReason::Timeout => "timeout",
            InvalidReason::MoveBaseError => "move_base_error",
            InvalidReason::InObstacle => "in_obstacle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvalidEntry {
    pub position: Point2,
    pub reason: InvalidReason,
}

/// Frontiers that must not be assigned again. Membership is a radius query.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidFrontierSet {
    entries: Vec<InvalidEntry>,
    match_radius: f64,
}

impl Default for InvalidFrontierSet {
    fn default() -> Self {
        Self::new(DEFAULT_MATCH_RADIUS)
    }
}

impl InvalidFrontierSet {
    pub fn new(match_radius: f64) -> Self {
        Self { entries: Vec::new(), match_radius }
    }

    pub fn insert(&mut self, position: Point2, reason: InvalidReason) {
        self.entries.push(InvalidEntry { position, reason });
    }

    pub fn contains(&self, p: &Point2) -> bool {
        self.entries.iter().any(|e| e.position.distance(p) <= self.match_radius)
    }

    pub fn entries(&self) -> &[InvalidEntry] {
        &self.entries
    }

    pub fn match_radius(&self) -> f64 {
        self.match_radius
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Flat-kernel radius, m.
    pub bandwidth: f64,
    /// Mean-shift convergence threshold on per-iteration displacement, m.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Radius of the information-gain disc, m.
    pub info_radius: f64,
    /// Frontiers with less unknown area than this are dropped, m^2.
    pub min_gain: f64,
    /// Radius for matching a candidate against the invalid set, m.
    pub invalid_match_radius: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            bandwidth: 2.0,
            tolerance: 1e-3,
            max_iters: 300,
            info_radius: 3.0,
            min_gain: 0.2,
            invalid_match_radius: DEFAULT_MATCH_RADIUS,
        }
    }
}

fn mean_within(points: &[Point2], center: &Point2, bandwidth: f64) -> Option<Point2> {
    let bw2 = bandwidth * bandwidth;
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for p in points {
        if p.distance_sq(center) <= bw2 {
            sx += p.x;
            sy += p.y;
            n += 1;
        }
    }
    (n > 0).then(|| Point2::new(sx / n as f64, sy / n as f64))
}

/// Flat-kernel mean shift.
///
/// Every input point climbs to a mode by repeatedly moving to the mean of the
/// input points within `bandwidth`. Modes closer than `bandwidth / 2` to a
/// cluster's first mode join that cluster, and each cluster reports the mean of
/// its modes. Inputs are put in a canonical order first, so the result does not
/// depend on how the caller ordered them.
pub fn mean_shift(points: &[Point2], bandwidth: f64, tolerance: f64, max_iters: usize) -> Result<Vec<Point2>, FilterError> {
    if points.is_empty() {
        return Err(FilterError::EmptyInput);
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(Point2::total_cmp);

    let modes: Vec<Point2> = sorted
        .iter()
        .map(|&start| {
            let mut m = start;
            for _ in 0..max_iters {
                let Some(next) = mean_within(&sorted, &m, bandwidth) else { break };
                let shift = next.distance(&m);
                m = next;
                if shift < tolerance {
                    break;
                }
            }
            m
        })
        .collect();

    let mut clusters: Vec<Vec<Point2>> = Vec::new();
    for mode in modes {
        match clusters.iter_mut().find(|c| c[0].distance(&mode) < bandwidth / 2.0) {
            Some(c) => c.push(mode),
            None => clusters.push(vec![mode]),
        }
    }
    let mut centroids: Vec<Point2> = clusters
        .iter()
        .map(|c| {
            let n = c.len() as f64;
            Point2::new(c.iter().map(|p| p.x).sum::<f64>() / n, c.iter().map(|p| p.y).sum::<f64>() / n)
        })
        .collect();
    centroids.sort_by(Point2::total_cmp);
    Ok(centroids)
}

/// Unknown area (m^2) of the cells whose centers lie within `info_radius` of
/// `point`. Cells outside the grid count as known.
pub fn info_gain(grid: &OccupancyGrid, point: Point2, info_radius: f64) -> f64 {
    let res = grid.resolution();
    let (cx, cy) = grid.to_cell_coords(point);
    let r_cells = info_radius / res;
    let x0 = ((cx - r_cells).floor() as i64).max(0);
    let y0 = ((cy - r_cells).floor() as i64).max(0);
    let x1 = ((cx + r_cells).ceil() as i64).min(grid.width() as i64 - 1);
    let y1 = ((cy + r_cells).ceil() as i64).min(grid.height() as i64 - 1);
    let r2 = info_radius * info_radius;
    let mut unknown = 0usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let cell = CellIndex::new(x as usize, y as usize);
            if grid.get(cell) == CellState::Unknown && grid.cell_center(cell).distance_sq(&point) <= r2 {
                unknown += 1;
            }
        }
    }
    unknown as f64 * res * res
}

/// Why a centroid did not survive filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rejection {
    InObstacle,
    OutsideMap,
    Invalid,
    NoUnknownNearby,
    LowGain(f64),
}

/// Scores one centroid, or says why it is dropped.
pub fn assess_centroid(
    centroid: Point2,
    merged: &OccupancyGrid,
    invalid: &InvalidFrontierSet,
    cfg: &FilterConfig,
) -> Result<f64, Rejection> {
    match merged.state_at(centroid) {
        None => return Err(Rejection::OutsideMap),
        Some(CellState::Occupied) => return Err(Rejection::InObstacle),
        _ => {}
    }
    if invalid.contains(&centroid) {
        return Err(Rejection::Invalid);
    }
    let gain = info_gain(merged, centroid, cfg.info_radius);
    if gain <= 0.0 {
        Err(Rejection::NoUnknownNearby)
    } else if gain < cfg.min_gain {
        Err(Rejection::LowGain(gain))
    } else {
        Ok(gain)
    }
}

/// Keeps the centroids that are off obstacles, not invalidated, and still
/// border enough unknown space. Positions pass through unchanged.
pub fn filter_frontiers(
    centroids: &[Point2],
    merged: &OccupancyGrid,
    invalid: &InvalidFrontierSet,
    cfg: &FilterConfig,
    now: f64,
) -> Vec<FilteredFrontier> {
    centroids
        .iter()
        .filter_map(|&c| {
            assess_centroid(c, merged, invalid, cfg)
                .ok()
                .map(|gain| FilteredFrontier { position: c, info_gain: gain, detected_at: now })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(mean_shift(&[], 1.0, 1e-3, 10), Err(FilterError::EmptyInput));
    }

    #[test]
    fn single_point_is_its_own_mode() {
        assert_eq!(mean_shift(&[p(1.5, -2.0)], 2.0, 1e-3, 100).unwrap(), vec![p(1.5, -2.0)]);
    }

    #[test]
    fn close_pair_collapses_to_midpoint() {
        let c = mean_shift(&[p(0.0, 0.0), p(0.1, 0.0)], 2.0, 1e-6, 100).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].x - 0.05).abs() < 1e-12 && c[0].y.abs() < 1e-12);
    }

    #[test]
    fn info_gain_zero_on_explored_grid() {
        let g = OccupancyGrid::new(50, 50, 0.1, Point2::default(), CellState::Free).unwrap();
        assert_eq!(info_gain(&g, p(2.5, 2.5), 1.0), 0.0);
    }

    #[test]
    fn info_gain_of_unknown_disc_matches_enumeration() {
        let g = OccupancyGrid::new(200, 200, 0.1, Point2::default(), CellState::Unknown).unwrap();
        let center = p(10.03, 9.98);
        let r = 3.0;
        // exhaustive enumeration over the whole grid
        let mut count = 0;
        for j in 0..200 {
            for i in 0..200 {
                let (x, y) = ((i as f64 + 0.5) * 0.1, (j as f64 + 0.5) * 0.1);
                if (x - center.x).powi(2) + (y - center.y).powi(2) <= r * r {
                    count += 1;
                }
            }
        }
        let gain = info_gain(&g, center, r);
        assert!((gain - count as f64 * 0.01).abs() < 1e-9);
        // within one perimeter band of cells of the continuous area
        let band = 2.0 * std::f64::consts::PI * r * 0.1;
        assert!((gain - std::f64::consts::PI * r * r).abs() < band);
    }

    #[test]
    fn half_plane_boundary_halves_the_gain() {
        let all = OccupancyGrid::new(100, 100, 0.1, Point2::default(), CellState::Unknown).unwrap();
        let mut half = all.clone();
        for y in 0..100 {
            for x in 0..50 {
                half.set(CellIndex::new(x, y), CellState::Free);
            }
        }
        let at = p(5.0, 4.97);
        let full = info_gain(&all, at, 2.0);
        assert_eq!(info_gain(&half, at, 2.0), full / 2.0);
    }

    #[test]
    fn filter_rules() {
        let mut g = OccupancyGrid::new(100, 100, 0.1, Point2::default(), CellState::Free).unwrap();
        for y in 0..100 {
            for x in 70..100 {
                g.set(CellIndex::new(x, y), CellState::Unknown);
            }
            g.set(CellIndex::new(30, y), CellState::Occupied);
        }
        let cfg = FilterConfig::default();
        let mut invalid = InvalidFrontierSet::new(1.0);
        invalid.insert(p(6.5, 2.0), InvalidReason::Timeout);

        let wall = p(3.05, 5.0);
        let near_invalid = p(6.5, 2.5);
        let open = p(1.0, 1.0);
        let good = p(6.8, 8.0);
        assert_eq!(assess_centroid(wall, &g, &invalid, &cfg), Err(Rejection::InObstacle));
        assert_eq!(assess_centroid(near_invalid, &g, &invalid, &cfg), Err(Rejection::Invalid));
        assert_eq!(assess_centroid(open, &g, &invalid, &cfg), Err(Rejection::NoUnknownNearby));
        assert_eq!(assess_centroid(p(20.0, 1.0), &g, &invalid, &cfg), Err(Rejection::OutsideMap));

        let out = filter_frontiers(&[wall, near_invalid, open, good], &g, &invalid, &cfg, 4.0);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].position, good);
        assert_eq!(out[0].detected_at, 4.0);
        assert!(out[0].info_gain > cfg.min_gain);

        let strict = FilterConfig { min_gain: 1e6, ..cfg };
        assert!(matches!(assess_centroid(good, &g, &invalid, &strict), Err(Rejection::LowGain(_))));
    }

    #[test]
    fn invalid_set_matches_by_radius() {
        let mut s = InvalidFrontierSet::new(1.0);
        s.insert(p(0.0, 0.0), InvalidReason::MoveBaseError);
        assert!(s.contains(&p(0.5, 0.0)));
        assert!(s.contains(&p(0.6, 0.8)));
        assert!(!s.contains(&p(0.8, 0.8)));
    }

    fn cloud(seed: u64, n: usize) -> Vec<Point2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| p(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))).collect()
    }

    proptest! {
        #[test]
        fn centroids_bounded_and_inside_hull(seed in 0u64..1000, n in 1usize..40) {
            let pts = cloud(seed, n);
            let c = mean_shift(&pts, 2.0, 1e-4, 200).unwrap();
            prop_assert!(c.len() <= pts.len());
            let (minx, maxx) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q.x), b.max(q.x)));
            let (miny, maxy) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), q| (a.min(q.y), b.max(q.y)));
            for q in &c {
                prop_assert!(q.x >= minx - 1e-9 && q.x <= maxx + 1e-9 && q.y >= miny - 1e-9 && q.y <= maxy + 1e-9);
            }
        }

        #[test]
        fn permutation_invariant(seed in 0u64..1000, n in 1usize..30, rot in 0usize..30) {
            let pts = cloud(seed, n);
            let mut shuffled = pts.clone();
            shuffled.rotate_left(rot % n);
            shuffled.reverse();
            prop_assert_eq!(mean_shift(&pts, 1.5, 1e-4, 200).unwrap(), mean_shift(&shuffled, 1.5, 1e-4, 200).unwrap());
        }

        #[test]
        fn gain_shrinks_as_cells_become_known(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = OccupancyGrid::new(30, 30, 0.2, Point2::default(), CellState::Unknown).unwrap();
            let at = p(3.0, 3.0);
            let mut last = info_gain(&g, at, 2.0);
            for _ in 0..60 {
                let c = CellIndex::new(rng.random_range(0..30), rng.random_range(0..30));
                g.set(c, if rng.random_bool(0.5) { CellState::Free } else { CellState::Occupied });
                let now = info_gain(&g, at, 2.0);
                prop_assert!(now <= last);
                last = now;
            }
        }
    }
}
