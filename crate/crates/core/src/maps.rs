//! Bundled ground-truth maps and scenario presets.
//!
//! The maps are drawn by the builders below and shipped as PGM files under
//! `assets/maps`; a scenario refers to them as `builtin:<name>`.

use crate::geometry::Point2;
use crate::gridmap::{parse_pgm, CellIndex, CellState, GridError, OccupancyGrid, PgmThresholds};

pub const MAP_A_PGM: &[u8] = include_bytes!("../assets/maps/mapA.pgm");
pub const MAP_B_PGM: &[u8] = include_bytes!("../assets/maps/mapB.pgm");
pub const ARENA_PGM: &[u8] = include_bytes!("../assets/maps/arena.pgm");

pub const MAP_A_SCENARIO: &str = include_str!("../assets/scenarios/mapA.json");
pub const MAP_B_SCENARIO: &str = include_str!("../assets/scenarios/mapB.json");
pub const ARENA_SCENARIO: &str = include_str!("../assets/scenarios/arena.json");

pub const BUILTIN_PREFIX: &str = "builtin:";

pub fn builtin_pgm(name: &str) -> Option<&'static [u8]> {
    match name {
        "mapA" => Some(MAP_A_PGM),
        "mapB" => Some(MAP_B_PGM),
        "arena" => Some(ARENA_PGM),
        _ => None,
    }
}

/// Preset scenario JSON by name (`mapA`, `mapB`, `arena`).
pub fn builtin_scenario(name: &str) -> Option<&'static str> {
    match name {
        "mapA" => Some(MAP_A_SCENARIO),
        "mapB" => Some(MAP_B_SCENARIO),
        "arena" => Some(ARENA_SCENARIO),
        _ => None,
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["mapA", "mapB", "arena"]
}

/// Decodes a bundled map at the given resolution.
pub fn load_builtin(name: &str, resolution: f64, origin: Point2, thresholds: PgmThresholds) -> Result<OccupancyGrid, GridError> {
    let bytes = builtin_pgm(name).ok_or_else(|| GridError::InvalidMap(format!("no builtin map named {name:?}")))?;
    parse_pgm(bytes, resolution, origin, thresholds)
}

struct Canvas {
    grid: OccupancyGrid,
}

impl Canvas {
    fn new(width_m: f64, height_m: f64, resolution: f64) -> Self {
        let w = (width_m / resolution).round() as usize;
        let h = (height_m / resolution).round() as usize;
        let grid = OccupancyGrid::new(w, h, resolution, Point2::default(), CellState::Free).expect("positive size");
        Self { grid }
    }

    /// Sets every cell whose center lies in `[x0, x1) x [y0, y1)`.
    fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, state: CellState) {
        let res = self.grid.resolution();
        for y in 0..self.grid.height() {
            let cy = (y as f64 + 0.5) * res;
            if cy < y0 || cy >= y1 {
                continue;
            }
            for x in 0..self.grid.width() {
                let cx = (x as f64 + 0.5) * res;
                if cx >= x0 && cx < x1 {
                    self.grid.set(CellIndex::new(x, y), state);
                }
            }
        }
    }

    fn wall(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        self.rect(x0, y0, x1, y1, CellState::Occupied);
    }

    fn door(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        self.rect(x0, y0, x1, y1, CellState::Free);
    }

    fn border(&mut self, thickness: f64) {
        let res = self.grid.resolution();
        let w = self.grid.width() as f64 * res;
        let h = self.grid.height() as f64 * res;
        self.wall(0.0, 0.0, w, thickness);
        self.wall(0.0, h - thickness, w, h);
        self.wall(0.0, 0.0, thickness, h);
        self.wall(w - thickness, 0.0, w, h);
    }
}

/// 10 m x 12 m, three passages leaving a central hub.
pub fn build_map_a() -> OccupancyGrid {
    let mut c = Canvas::new(10.0, 12.0, 0.1);
    c.border(0.1);
    // north passage
    c.wall(0.0, 9.0, 10.0, 9.2);
    c.door(4.0, 9.0, 6.0, 9.2);
    // west passage, wrapping south under the hub
    c.wall(3.4, 3.0, 3.6, 9.0);
    c.door(3.4, 5.0, 3.6, 7.0);
    c.wall(3.5, 3.0, 6.5, 3.2);
    // east passage
    c.wall(6.4, 0.0, 6.6, 9.0);
    c.door(6.4, 5.0, 6.6, 7.0);
    c.wall(6.6, 4.0, 8.3, 4.2);
    c.grid
}

/// 17.5 m x 21.5 m: rooms in the middle, a looping west corridor and a long
/// dead-end corridor on the east side.
pub fn build_map_b() -> OccupancyGrid {
    let mut c = Canvas::new(17.5, 21.5, 0.1);
    c.border(0.1);
    c.wall(2.2, 0.0, 2.4, 21.5);
    c.door(2.2, 3.0, 2.4, 5.0);
    c.door(2.2, 17.0, 2.4, 19.0);
    c.wall(15.0, 0.0, 15.2, 21.5);
    c.door(15.0, 19.0, 15.2, 21.3);
    c.wall(2.4, 7.0, 15.0, 7.2);
    c.door(6.0, 7.0, 8.0, 7.2);
    c.door(12.0, 7.0, 14.0, 7.2);
    c.wall(2.4, 14.0, 15.0, 14.2);
    c.door(3.0, 14.0, 5.0, 14.2);
    c.door(10.0, 14.0, 12.0, 14.2);
    c.wall(8.6, 0.0, 8.8, 7.0);
    c.door(8.6, 2.0, 8.8, 4.0);
    c.wall(8.6, 14.2, 8.8, 21.5);
    c.door(8.6, 16.0, 8.8, 18.0);
    c.grid
}

/// 25 m x 54 m at 0.2 m per cell: a 3 x 6 block of rooms joined by doors.
pub fn build_arena() -> OccupancyGrid {
    let mut c = Canvas::new(25.0, 54.0, 0.2);
    c.border(0.2);
    for x in [8.2, 16.4] {
        c.wall(x, 0.0, x + 0.4, 54.0);
        for k in 0..6 {
            let mid = 4.5 + 9.0 * k as f64;
            c.door(x, mid - 1.5, x + 0.4, mid + 1.5);
        }
    }
    for k in 1..6 {
        let y = 9.0 * k as f64;
        c.wall(0.0, y, 25.0, y + 0.4);
        for mid in [4.2, 12.5, 20.8] {
            c.door(mid - 1.5, y, mid + 1.5, y + 0.4);
        }
    }
    c.grid
}
