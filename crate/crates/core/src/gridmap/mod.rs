//! Occupancy grids: representation, ground-truth ingestion, simulated sensing,
//! merging of per-robot maps, and morphological cleanup of the merged map.
//!
//! Cells are stored row-major. Row 0 is the first image row of a PGM file and
//! sits at `origin.y`; the y axis grows with the row index.

mod merge;
mod morphology;
mod pgm;
mod raycast;

pub use merge::merge_maps;
pub use morphology::{dilate_free, erode_free, postprocess_merged, StructuringElement, POSTPROCESS_ITERATIONS};
pub use pgm::{load_pgm, parse_pgm, write_pgm, PgmThresholds, PGM_FREE, PGM_OCCUPIED, PGM_UNKNOWN};
pub use raycast::{raycast_scan, segment_cells, Observation};
pub(crate) use raycast::traverse;

use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("malformed PGM: {0}")]
    Parse(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("pose ({x:.3}, {y:.3}) is outside the map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("grid geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Occupancy of a single cell. Map payloads use the values 0 / 100 / -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

impl CellState {
    pub fn value(self) -> i8 {
        match self {
            CellState::Free => 0,
            CellState::Occupied => 100,
            CellState::Unknown => -1,
        }
    }

    pub fn from_value(v: i8) -> Option<CellState> {
        match v {
            0 => Some(CellState::Free),
            100 => Some(CellState::Occupied),
            -1 => Some(CellState::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub x: usize,
    pub y: usize,
}

impl CellIndex {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point2,
    cells: Vec<CellState>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, origin: Point2, fill: CellState) -> Result<Self, GridError> {
        Self::from_cells(width, height, resolution, origin, vec![fill; width * height])
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point2,
        cells: Vec<CellState>,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::InvalidMap(format!("zero dimension {width}x{height}")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GridError::InvalidMap(format!("resolution must be positive, got {resolution}")));
        }
        if cells.len() != width * height {
            return Err(GridError::InvalidMap(format!(
                "expected {} cells for {width}x{height}, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(Self { width, height, resolution, origin, cells })
    }

    /// Same geometry, every cell Unknown.
    pub fn unknown_like(&self) -> Self {
        Self { cells: vec![CellState::Unknown; self.cells.len()], ..self.clone() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn same_geometry(&self, other: &OccupancyGrid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.resolution == other.resolution
            && self.origin == other.origin
    }

    pub fn index_of(&self, cell: CellIndex) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell_of(&self, index: usize) -> CellIndex {
        CellIndex::new(index % self.width, index / self.width)
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn get(&self, cell: CellIndex) -> CellState {
        self.cells[self.index_of(cell)]
    }

    /// Signed lookup; `None` outside the grid.
    pub fn get_signed(&self, x: i64, y: i64) -> Option<CellState> {
        if self.in_bounds(x, y) {
            Some(self.cells[y as usize * self.width + x as usize])
        } else {
            None
        }
    }

    pub fn set(&mut self, cell: CellIndex, state: CellState) {
        let i = self.index_of(cell);
        self.cells[i] = state;
    }

    pub fn set_index(&mut self, index: usize, state: CellState) {
        self.cells[index] = state;
    }

    /// Continuous cell coordinates of a world point (cell (i, j) spans [i, i+1) x [j, j+1)).
    pub fn to_cell_coords(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.origin.x) / self.resolution, (p.y - self.origin.y) / self.resolution)
    }

    pub fn world_to_cell(&self, p: Point2) -> Option<CellIndex> {
        let (cx, cy) = self.to_cell_coords(p);
        let (x, y) = (cx.floor(), cy.floor());
        if x.is_finite() && y.is_finite() && self.in_bounds(x as i64, y as i64) {
            Some(CellIndex::new(x as usize, y as usize))
        } else {
            None
        }
    }

    pub fn cell_center(&self, cell: CellIndex) -> Point2 {
        Point2::new(
            self.origin.x + (cell.x as f64 + 0.5) * self.resolution,
            self.origin.y + (cell.y as f64 + 0.5) * self.resolution,
        )
    }

    /// State of the cell containing `p`, `None` when `p` is outside the grid.
    pub fn state_at(&self, p: Point2) -> Option<CellState> {
        self.world_to_cell(p).map(|c| self.get(c))
    }

    /// World extent as (min corner, max corner).
    pub fn bounds(&self) -> (Point2, Point2) {
        (
            self.origin,
            Point2::new(
                self.origin.x + self.width as f64 * self.resolution,
                self.origin.y + self.height as f64 * self.resolution,
            ),
        )
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    /// The in-bounds 8-neighbourhood of `cell`.
    pub fn neighbors8(&self, cell: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        const OFFSETS: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
        OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let (x, y) = (cell.x as i64 + dx, cell.y as i64 + dy);
            self.in_bounds(x, y).then(|| CellIndex::new(x as usize, y as usize))
        })
    }

    /// Writes `state` into every listed cell index. Used to fold sensor observations into a map.
    pub fn apply_observations(&mut self, observations: &[Observation]) {
        for obs in observations {
            self.cells[obs.index] = obs.state;
        }
    }
}
