use super::{CellState, GridError, OccupancyGrid};

/// Join of two cell states on the lattice Unknown < Free < Occupied.
fn join(a: CellState, b: CellState) -> CellState {
    use CellState::*;
    match (a, b) {
        (Occupied, _) | (_, Occupied) => Occupied,
        (Free, _) | (_, Free) => Free,
        _ => Unknown,
    }
}

/// Cell-wise merge of robot maps sharing one frame. Occupied wins over Free,
/// and any known state wins over Unknown.
pub fn merge_maps(locals: &[&OccupancyGrid]) -> Result<OccupancyGrid, GridError> {
    let (first, rest) = locals
        .split_first()
        .ok_or_else(|| GridError::GeometryMismatch("no maps to merge".into()))?;
    let mut merged = (*first).clone();
    for (i, other) in rest.iter().enumerate() {
        if !merged.same_geometry(other) {
            return Err(GridError::GeometryMismatch(format!(
                "map {} is {}x{} @ {} origin {}, expected {}x{} @ {} origin {}",
                i + 1,
                other.width(),
                other.height(),
                other.resolution(),
                other.origin(),
                merged.width(),
                merged.height(),
                merged.resolution(),
                merged.origin()
            )));
        }
        for (m, &o) in merged.cells.iter_mut().zip(other.cells()) {
            *m = join(*m, o);
        }
    }
    Ok(merged)
}
