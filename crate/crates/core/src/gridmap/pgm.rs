use std::io::Write;
use std::path::Path;

use super::{CellState, GridError, OccupancyGrid};
use crate::geometry::Point2;

/// Export palette (the usual map_server colours).
pub const PGM_FREE: u8 = 254;
pub const PGM_OCCUPIED: u8 = 0;
pub const PGM_UNKNOWN: u8 = 205;

/// Pixel classification bands for ground-truth ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PgmThresholds {
    /// Pixels at or above this value are Free.
    pub free: u8,
    /// Pixels at or below this value are Occupied.
    pub occupied: u8,
}

impl Default for PgmThresholds {
    fn default() -> Self {
        Self { free: 250, occupied: 50 }
    }
}

pub fn load_pgm(
    path: impl AsRef<Path>,
    resolution: f64,
    origin: Point2,
    thresholds: PgmThresholds,
) -> Result<OccupancyGrid, GridError> {
    let bytes = std::fs::read(path)?;
    parse_pgm(&bytes, resolution, origin, thresholds)
}

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, GridError> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(GridError::Parse("missing P2/P5 magic number".into())),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // whitespace and comments may precede every header token
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while !matches!(bytes.get(pos), None | Some(b'\n')) {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(GridError::Parse(format!("expected a header number at byte {start}")));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| GridError::Parse("header number out of range".into()))?;
    }
    // exactly one whitespace byte separates the header from raster data
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(GridError::Parse("header not terminated by whitespace".into()));
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(GridError::Parse(format!("maxval {maxval} out of range")));
    }
    Ok(Header { binary, width: width as usize, height: height as usize, maxval, data_start: pos + 1 })
}

/// Parses a P2 or P5 image and classifies every pixel into a cell state.
pub fn parse_pgm(
    bytes: &[u8],
    resolution: f64,
    origin: Point2,
    thresholds: PgmThresholds,
) -> Result<OccupancyGrid, GridError> {
    if thresholds.free <= thresholds.occupied {
        return Err(GridError::InvalidMap(format!(
            "free threshold {} must exceed occupied threshold {}",
            thresholds.free, thresholds.occupied
        )));
    }
    let header = parse_header(bytes)?;
    if header.width == 0 || header.height == 0 {
        return Err(GridError::InvalidMap(format!("zero dimension {}x{}", header.width, header.height)));
    }
    let n = header.width * header.height;
    let data = &bytes[header.data_start..];
    let raw: Vec<u32> = if header.binary {
        let wide = header.maxval > 255;
        let needed = if wide { 2 * n } else { n };
        if data.len() < needed {
            return Err(GridError::Parse(format!("expected {needed} raster bytes, found {}", data.len())));
        }
        if wide {
            data[..needed].chunks_exact(2).map(|c| u32::from(c[0]) << 8 | u32::from(c[1])).collect()
        } else {
            data[..n].iter().map(|&b| u32::from(b)).collect()
        }
    } else {
        let text = std::str::from_utf8(data).map_err(|_| GridError::Parse("non-ASCII raster in P2".into()))?;
        let values = text
            .split_ascii_whitespace()
            .take(n)
            .map(|t| t.parse::<u32>().map_err(|_| GridError::Parse(format!("bad pixel value {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() < n {
            return Err(GridError::Parse(format!("expected {n} pixels, found {}", values.len())));
        }
        values
    };

    let cells = raw
        .into_iter()
        .map(|v| {
            if v > header.maxval {
                return Err(GridError::Parse(format!("pixel {v} exceeds maxval {}", header.maxval)));
            }
            let scaled = if header.maxval == 255 { v } else { (v * 255 + header.maxval / 2) / header.maxval };
            let px = scaled as u8;
            Ok(if px >= thresholds.free {
                CellState::Free
            } else if px <= thresholds.occupied {
                CellState::Occupied
            } else {
                CellState::Unknown
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    OccupancyGrid::from_cells(header.width, header.height, resolution, origin, cells)
}

/// Binary PGM snapshot using the map_server palette.
pub fn write_pgm(grid: &OccupancyGrid, mut out: impl Write) -> std::io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", grid.width(), grid.height())?;
    let raster: Vec<u8> = grid
        .cells()
        .iter()
        .map(|c| match c {
            CellState::Free => PGM_FREE,
            CellState::Occupied => PGM_OCCUPIED,
            CellState::Unknown => PGM_UNKNOWN,
        })
        .collect();
    out.write_all(&raster)
}
