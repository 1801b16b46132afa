use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::assigner::GoalRecord;
use crate::frontier_filter::{FilteredFrontier, InvalidReason};
use crate::geometry::Point2;
use crate::gridmap::{write_pgm, GridError, OccupancyGrid};
use crate::robot_sim::SimRobot;
use crate::RobotId;

use super::RunMetrics;

/// Files every run writes, in addition to optional snapshots.
pub const OUTPUT_FILES: [&str; 7] = [
    "metrics.csv",
    "trajectories.csv",
    "frontiers.csv",
    "invalid.csv",
    "assignment_trace.csv",
    "final_map.pgm",
    "coverage.csv",
];

/// Run logs, kept in memory so that two runs can be compared byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLogs {
    pub metrics: String,
    pub trajectories: String,
    pub frontiers: String,
    pub invalid: String,
    pub assignment_trace: String,
    pub coverage: String,
    pub final_map: Vec<u8>,
    /// (relative path, PGM bytes)
    pub snapshots: Vec<(String, Vec<u8>)>,
}

impl Default for RunLogs {
    fn default() -> Self {
        Self {
            metrics: String::new(),
            trajectories: "time,robot,x,y,status\n".into(),
            frontiers: "time,x,y,info_gain\n".into(),
            invalid: "time,x,y,reason,robot\n".into(),
            assignment_trace: "time,robot,event,x,y,revenue,t_gs,t_ge\n".into(),
            coverage: "time,coverage\n".into(),
            final_map: Vec::new(),
            snapshots: Vec::new(),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:.6}"),
        Some(v) if v > 0.0 => "inf".into(),
        Some(_) => "-inf".into(),
        None => String::new(),
    }
}

impl RunLogs {
    pub(super) fn trajectory(&mut self, t: f64, r: &SimRobot) {
        let _ = writeln!(self.trajectories, "{t:.6},{},{:.6},{:.6},{}", r.id, r.pose.x, r.pose.y, r.nav.status.as_str());
    }

    pub(super) fn frontier(&mut self, t: f64, f: &FilteredFrontier) {
        let _ = writeln!(self.frontiers, "{t:.6},{:.6},{:.6},{:.6}", f.position.x, f.position.y, f.info_gain);
    }

    pub(super) fn invalid(&mut self, t: f64, p: Point2, reason: InvalidReason, robot: RobotId) {
        let _ = writeln!(self.invalid, "{t:.6},{:.6},{:.6},{},{robot}", p.x, p.y, reason.as_str());
    }

    pub(super) fn trace(
        &mut self,
        t: f64,
        robot: RobotId,
        event: &str,
        at: Option<Point2>,
        revenue: Option<f64>,
        goal: Option<&GoalRecord>,
    ) {
        let _ = writeln!(
            self.assignment_trace,
            "{t:.6},{robot},{event},{},{},{},{},{}",
            opt(at.map(|p| p.x)),
            opt(at.map(|p| p.y)),
            opt(revenue),
            opt(goal.map(|g| g.t_gs)),
            opt(goal.map(|g| g.t_ge)),
        );
    }

    pub(super) fn finish(&mut self, m: &RunMetrics, merged: &OccupancyGrid) -> Result<(), GridError> {
        let mut s = String::from("metric,value\n");
        let _ = writeln!(s, "scenario,{}", m.scenario);
        let _ = writeln!(s, "strategy,{}", m.strategy.as_str());
        let _ = writeln!(s, "seed,{}", m.seed);
        let _ = writeln!(s, "completed,{}", m.completed);
        let _ = writeln!(s, "termination,{}", m.termination.as_str());
        let _ = writeln!(s, "exploration_duration,{:.6}", m.exploration_duration);
        let _ = writeln!(s, "total_distance,{:.6}", m.total_distance);
        let _ = writeln!(s, "mean_distance,{:.6}", m.mean_distance);
        for (i, d) in m.robot_distances.iter().enumerate() {
            let _ = writeln!(s, "distance_robot_{i},{d:.6}");
        }
        let _ = writeln!(s, "final_coverage,{:.6}", m.final_coverage());
        let _ = writeln!(s, "invalid_frontiers,{}", m.invalid_count);
        let _ = writeln!(s, "robots,{}", m.robot_distances.len());
        let _ = writeln!(s, "map_resolution,{:.6}", merged.resolution());
        let _ = writeln!(s, "map_origin_x,{:.6}", merged.origin().x);
        let _ = writeln!(s, "map_origin_y,{:.6}", merged.origin().y);
        self.metrics = s;
        for (t, c) in &m.coverage {
            let _ = writeln!(self.coverage, "{t:.6},{c:.6}");
        }
        self.final_map.clear();
        write_pgm(merged, &mut self.final_map).map_err(GridError::Io)?;
        Ok(())
    }

    /// Writes every log into `dir` (created if needed) and returns the paths.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let texts = [
            &self.metrics,
            &self.trajectories,
            &self.frontiers,
            &self.invalid,
            &self.assignment_trace,
        ];
        let mut written = Vec::new();
        for (name, body) in OUTPUT_FILES.iter().zip(texts) {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            written.push(p);
        }
        let p = dir.join("final_map.pgm");
        std::fs::write(&p, &self.final_map)?;
        written.push(p);
        let p = dir.join("coverage.csv");
        std::fs::write(&p, &self.coverage)?;
        written.push(p);
        for (rel, bytes) in &self.snapshots {
            let p = dir.join(rel);
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&p, bytes)?;
            written.push(p);
        }
        Ok(written)
    }
}
