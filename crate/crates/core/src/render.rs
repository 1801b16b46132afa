//! SVG overlay of robot paths on a map.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::Point2;
use crate::gridmap::{CellState, OccupancyGrid};

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("trajectories line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

const PALETTE: [&str; 8] = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#9a6324"];

/// Parses `time,robot,x,y,status` rows into per-robot point lists.
pub fn parse_trajectories(csv: &str) -> Result<BTreeMap<usize, Vec<Point2>>, RenderError> {
    let mut paths: BTreeMap<usize, Vec<Point2>> = BTreeMap::new();
    for (i, line) in csv.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = |msg: &str| RenderError::Csv { line: i + 1, msg: msg.to_string() };
        if f.len() < 4 {
            return Err(bad("expected at least 4 columns"));
        }
        let robot: usize = f[1].parse().map_err(|_| bad("robot id is not an integer"))?;
        let x: f64 = f[2].parse().map_err(|_| bad("x is not a number"))?;
        let y: f64 = f[3].parse().map_err(|_| bad("y is not a number"))?;
        let path = paths.entry(robot).or_default();
        if path.last() != Some(&Point2::new(x, y)) {
            path.push(Point2::new(x, y));
        }
    }
    Ok(paths)
}

/// Map cells as run-length rectangles, one polyline per robot, start markers.
/// `scale` is pixels per cell; y grows downward like the map rows.
pub fn render_svg(map: &OccupancyGrid, paths: &BTreeMap<usize, Vec<Point2>>, scale: f64) -> String {
    let (w, h) = (map.width(), map.height());
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {w} {h}">"#,
        w as f64 * scale,
        h as f64 * scale
    );
    let _ = writeln!(s, r##"<rect width="{w}" height="{h}" fill="#cdcdcd"/>"##);
    for y in 0..h {
        let row = &map.cells()[y * w..(y + 1) * w];
        let mut x = 0;
        while x < w {
            let state = row[x];
            let start = x;
            while x < w && row[x] == state {
                x += 1;
            }
            let fill = match state {
                CellState::Free => "#fefefe",
                CellState::Occupied => "#000000",
                CellState::Unknown => continue,
            };
            let _ = writeln!(s, r#"<rect x="{start}" y="{y}" width="{}" height="1" fill="{fill}"/>"#, x - start);
        }
    }
    let res = map.resolution();
    let origin = map.origin();
    let to_px = |p: &Point2| ((p.x - origin.x) / res, (p.y - origin.y) / res);
    for (robot, pts) in paths {
        let color = PALETTE[robot % PALETTE.len()];
        let mut coords = String::new();
        for p in pts {
            let (x, y) = to_px(p);
            let _ = write!(coords, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{:.2}" stroke-linejoin="round"/>"#,
            coords.trim_end(),
            (1.5 / scale).max(0.5)
        );
        if let Some(first) = pts.first() {
            let (x, y) = to_px(first);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{color}"/>"#);
        }
    }
    s.push_str("</svg>\n");
    s
}
