//! The simulation loop: robots move and sense, maps are merged and cleaned,
//! RRT detectors emit points, the filter turns them into frontiers, the
//! monitor cancels stale goals and the assigner hands out new ones.

mod compare;
mod config;
mod output;

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use compare::{
    compare, compare_runs, format_delta, sign_test, sweep, Comparison, PairedRow, RunSummary, SignTest, Stats,
    StrategyAggregate, SweepRow,
};
pub use config::{DetectorConfig, MapConfig, ScenarioConfig};
pub use output::{RunLogs, OUTPUT_FILES};

use crate::assigner::{assign_for_strategy, AssignmentMemory, DecisionKind, RobotSnapshot, RobotState, Strategy};
use crate::frontier_detection::{grow_step, DetectError, DetectionPoint, RrtTree};
use crate::frontier_filter::{filter_frontiers, mean_shift, FilteredFrontier, InvalidFrontierSet, InvalidReason};
use crate::geometry::Point2;
use crate::gridmap::{merge_maps, postprocess_merged, write_pgm, CellIndex, CellState, GridError, OccupancyGrid};
use crate::monitor::{monitor_tick, MonitoredRobot};
use crate::robot_sim::{NavStatus, SimRobot};
use crate::RobotId;

/// Stream labels for the per-subsystem generators.
pub const DETECTOR_STREAM: u64 = 1;
pub const ASSIGNER_STREAM: u64 = 2;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("scenario does not match the schema: {0}")]
    Schema(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("bad override: {0}")]
    Override(String),
    #[error("cannot read scenario: {0}")]
    Io(String),
    #[error("cannot load map {0}")]
    Map(String),
    #[error("start pose of robot {robot} at ({x:.3}, {y:.3}) is not on a free cell")]
    StartPose { robot: usize, x: f64, y: f64 },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{0}")]
    Parallel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    CoverageReached,
    Stalled,
    TimeLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::CoverageReached => "coverage_reached",
            Termination::Stalled => "stalled",
            Termination::TimeLimit => "time_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub scenario: String,
    pub strategy: Strategy,
    pub seed: u64,
    /// Simulated seconds until the run ended.
    pub exploration_duration: f64,
    pub robot_distances: Vec<f64>,
    pub total_distance: f64,
    pub mean_distance: f64,
    /// (seconds, fraction of reachable free cells known free) at every merge.
    pub coverage: Vec<(f64, f64)>,
    pub completed: bool,
    pub termination: Termination,
    pub invalid_count: usize,
}

impl RunMetrics {
    pub fn final_coverage(&self) -> f64 {
        self.coverage.last().map_or(0.0, |c| c.1)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub logs: RunLogs,
}

/// Free truth cells 4-connected to any start cell.
pub fn reachable_free(truth: &OccupancyGrid, starts: &[CellIndex]) -> Vec<bool> {
    let mut seen = vec![false; truth.len()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in starts {
        let i = truth.index_of(s);
        if truth.cells()[i] == CellState::Free && !seen[i] {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    let w = truth.width() as i64;
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i as i64) % w, (i as i64) / w);
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if truth.get_signed(x + dx, y + dy) == Some(CellState::Free) {
                let n = ((y + dy) * w + x + dx) as usize;
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    seen
}

fn coverage_of(merged: &OccupancyGrid, reachable: &[bool], total: usize) -> f64 {
    let known = merged
        .cells()
        .iter()
        .zip(reachable)
        .filter(|(c, r)| **r && **c == CellState::Free)
        .count();
    known as f64 / total as f64
}

fn ticks_per(period: f64, dt: f64) -> u64 {
    ((period / dt).round() as u64).max(1)
}

fn robot_state(nav: NavStatus) -> RobotState {
    match nav {
        NavStatus::Active => RobotState::Busy,
        NavStatus::Error => RobotState::Error,
        NavStatus::Idle | NavStatus::Succeeded => RobotState::Idle,
    }
}

fn grow_local(tree: &mut RrtTree, grid: &OccupancyGrid, robot_pos: Point2, rng: &mut ChaCha8Rng) -> Option<DetectionPoint> {
    tree.set_anchor(robot_pos);
    match grow_step(tree, grid, rng) {
        Ok(d) => d,
        Err(DetectError::InvalidRoot { .. }) => {
            // the cleaned map can erase the cell the tree started from
            tree.reset(robot_pos);
            None
        }
    }
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    truth: OccupancyGrid,
    robots: Vec<SimRobot>,
    merged: OccupancyGrid,
    cleaned: OccupancyGrid,
    local_trees: Vec<RrtTree>,
    global_tree: RrtTree,
    buffer: Vec<Point2>,
    carried: Vec<Point2>,
    memory: AssignmentMemory,
    invalid: InvalidFrontierSet,
    detector_rng: ChaCha8Rng,
    assigner_rng: ChaCha8Rng,
    reachable: Vec<bool>,
    reachable_total: usize,
    coverage: Vec<(f64, f64)>,
    logs: RunLogs,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let truth = cfg.load_truth()?;
        let mut start_cells = Vec::new();
        for (i, p) in cfg.starts.iter().enumerate() {
            match truth.world_to_cell(p.position()) {
                Some(c) if truth.get(c) == CellState::Free => start_cells.push(c),
                _ => return Err(ConfigError::StartPose { robot: i, x: p.x, y: p.y }.into()),
            }
        }
        let robots = cfg
            .starts
            .iter()
            .enumerate()
            .map(|(i, p)| SimRobot::new(RobotId(i), *p, cfg.robot.clone(), &truth))
            .collect::<Result<Vec<_>, _>>()?;
        let merged = merge_maps(&robots.iter().map(|r| &r.local_map).collect::<Vec<_>>())?;
        let cleaned = if cfg.postprocess { postprocess_merged(&merged) } else { merged.clone() };
        let local_trees = robots
            .iter()
            .map(|r| RrtTree::local(r.id, r.position(), cfg.detector.local_eta))
            .collect();
        let n = cfg.starts.len() as f64;
        let mean_start = Point2::new(
            cfg.starts.iter().map(|p| p.x).sum::<f64>() / n,
            cfg.starts.iter().map(|p| p.y).sum::<f64>() / n,
        );
        let global_tree = RrtTree::global(mean_start, cfg.detector.global_eta);
        let mut detector_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        detector_rng.set_stream(DETECTOR_STREAM);
        let mut assigner_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        assigner_rng.set_stream(ASSIGNER_STREAM);
        let reachable = reachable_free(&truth, &start_cells);
        let reachable_total = reachable.iter().filter(|r| **r).count();
        let mut sim = Self {
            cfg,
            truth,
            robots,
            merged,
            cleaned,
            local_trees,
            global_tree,
            buffer: Vec::new(),
            carried: Vec::new(),
            memory: AssignmentMemory::new(),
            invalid: InvalidFrontierSet::new(cfg.filter.invalid_match_radius),
            detector_rng,
            assigner_rng,
            reachable,
            reachable_total,
            coverage: Vec::new(),
            logs: RunLogs::default(),
        };
        let c = coverage_of(&sim.merged, &sim.reachable, sim.reachable_total);
        sim.coverage.push((0.0, c));
        for r in &sim.robots {
            sim.logs.trajectory(0.0, r);
        }
        Ok(sim)
    }

    fn merge(&mut self) -> Result<(), EngineError> {
        self.merged = merge_maps(&self.robots.iter().map(|r| &r.local_map).collect::<Vec<_>>())?;
        self.cleaned = if self.cfg.postprocess { postprocess_merged(&self.merged) } else { self.merged.clone() };
        for r in &mut self.robots {
            r.absorb(&self.merged);
        }
        Ok(())
    }

    fn detect(&mut self) {
        for (tree, robot) in self.local_trees.iter_mut().zip(&self.robots) {
            for _ in 0..self.cfg.detector.local_steps_per_tick {
                if let Some(d) = grow_local(tree, &self.cleaned, robot.position(), &mut self.detector_rng) {
                    self.buffer.push(d.position);
                }
            }
        }
        for _ in 0..self.cfg.detector.global_steps_per_tick {
            match grow_step(&mut self.global_tree, &self.cleaned, &mut self.detector_rng) {
                Ok(Some(d)) => self.buffer.push(d.position),
                Ok(None) => {}
                Err(DetectError::InvalidRoot { .. }) => break,
            }
        }
    }

    fn end_goal(&mut self, robot: usize, now: f64, event: &str, invalid: Option<InvalidReason>) {
        let id = self.robots[robot].id;
        self.robots[robot].cancel();
        if let Some(goal) = self.memory.clear_current(id) {
            self.logs.trace(now, id, event, Some(goal.position), None, Some(&goal));
            if let Some(reason) = invalid {
                self.invalid.insert(goal.position, reason);
                self.logs.invalid(now, goal.position, reason, id);
            }
        }
    }

    /// Arrivals, goals that turned out to be inside obstacles, then the watchdog.
    fn supervise(&mut self, now: f64) {
        for i in 0..self.robots.len() {
            if self.robots[i].nav.status == NavStatus::Succeeded {
                self.end_goal(i, now, "succeeded", None);
            }
        }
        for i in 0..self.robots.len() {
            let Some(goal) = self.memory.current(self.robots[i].id).copied() else { continue };
            if self.robots[i].nav.status == NavStatus::Active && self.merged.state_at(goal.position) == Some(CellState::Occupied) {
                self.end_goal(i, now, "in_obstacle", Some(InvalidReason::InObstacle));
            }
        }
        let watched: Vec<MonitoredRobot> = self
            .robots
            .iter()
            .map(|r| MonitoredRobot {
                id: r.id,
                state: robot_state(r.nav.status),
                goal: self.memory.current(r.id).copied(),
                nav: r.nav.status,
            })
            .collect();
        for action in monitor_tick(&watched, now) {
            let event = match action.reason {
                crate::monitor::CancelReason::DeadlineExpired => "deadline_expired",
                crate::monitor::CancelReason::MoveBaseError => "move_base_error",
            };
            self.end_goal(action.robot.0, now, event, Some(action.reason.invalid_reason()));
        }
        // a robot whose navigation failed without a recorded goal just resets
        for r in &mut self.robots {
            if r.nav.status == NavStatus::Error {
                r.cancel();
            }
        }
    }

    fn filter(&mut self, now: f64) -> Vec<FilteredFrontier> {
        let mut points = std::mem::take(&mut self.buffer);
        if self.cfg.carry_frontiers {
            points.append(&mut self.carried);
        }
        let centroids = if points.is_empty() {
            Vec::new()
        } else {
            let f = &self.cfg.filter;
            mean_shift(&points, f.bandwidth, f.tolerance, f.max_iters).expect("non-empty input")
        };
        let frontiers = filter_frontiers(&centroids, &self.cleaned, &self.invalid, &self.cfg.filter, now);
        self.carried = frontiers.iter().map(|f| f.position).collect();
        for f in &frontiers {
            self.logs.frontier(now, f);
        }
        frontiers
    }

    fn assign(&mut self, now: f64, frontiers: &[FilteredFrontier]) {
        let snapshots: Vec<RobotSnapshot> = self
            .robots
            .iter()
            .map(|r| RobotSnapshot {
                id: r.id,
                pose: r.pose,
                state: robot_state(r.nav.status),
                current_goal: self.memory.current(r.id).map(|g| g.position),
            })
            .collect();
        let decisions = assign_for_strategy(
            self.cfg.strategy,
            &snapshots,
            frontiers,
            &self.memory,
            &self.invalid,
            now,
            &mut self.assigner_rng,
            &self.cfg.assigner,
        );
        for d in decisions {
            let i = d.robot.0;
            match d.kind {
                DecisionKind::Assigned { revenue, record } => {
                    if let Some(old) = self.memory.current(d.robot).copied() {
                        self.logs.trace(now, d.robot, "preempted", Some(old.position), None, Some(&old));
                    }
                    self.memory.record(record);
                    self.robots[i].set_goal(record.position, now);
                    self.logs.trace(now, d.robot, "assigned", Some(record.position), Some(revenue), Some(&record));
                }
                DecisionKind::SkippedBusy { .. } => {
                    let cur = self.memory.current(d.robot).copied();
                    self.logs.trace(now, d.robot, "skipped_busy", cur.map(|g| g.position), None, cur.as_ref());
                }
                DecisionKind::Exhausted => self.logs.trace(now, d.robot, "exhausted", None, None, None),
            }
        }
    }

    fn snapshot(&mut self, now: f64) {
        let mut bytes = Vec::new();
        write_pgm(&self.merged, &mut bytes).expect("writing to memory");
        self.logs.snapshots.push((format!("snapshots/map_t{:08.1}.pgm", now), bytes));
    }

    fn run(mut self) -> Result<RunOutput, EngineError> {
        let cfg = self.cfg;
        let dt = cfg.tick_dt;
        let merge_every = ticks_per(cfg.merge_period, dt);
        let assign_every = ticks_per(cfg.assign_period, dt);
        let snapshot_every = cfg.snapshot_interval.map(|s| ticks_per(s, dt));
        let max_ticks = (cfg.max_sim_time / dt).floor() as u64;
        let mut stall = 0.0;
        let mut termination = Termination::TimeLimit;
        let mut end_time = max_ticks as f64 * dt;

        for k in 1..=max_ticks {
            let now = k as f64 * dt;
            let mut moved = false;
            for r in &mut self.robots {
                let report = r.step(dt, &self.truth, now)?;
                moved |= report.displacement > 0.0;
                self.logs.trajectory(now, r);
            }
            if k % merge_every == 0 {
                self.merge()?;
                let c = coverage_of(&self.merged, &self.reachable, self.reachable_total);
                self.coverage.push((now, c));
            }
            if snapshot_every.is_some_and(|s| k % s == 0) {
                self.snapshot(now);
            }
            self.detect();
            self.supervise(now);
            if k % assign_every == 0 {
                let frontiers = self.filter(now);
                self.assign(now, &frontiers);
            }

            if self.coverage.last().is_some_and(|c| c.1 >= cfg.coverage_target) && self.coverage.len() > 1 {
                termination = Termination::CoverageReached;
                end_time = now;
                break;
            }
            stall = if moved { 0.0 } else { stall + dt };
            if stall >= cfg.stall_timeout - 1e-9 {
                termination = Termination::Stalled;
                end_time = now;
                break;
            }
        }

        for i in 0..self.robots.len() {
            let id = self.robots[i].id;
            if let Some(goal) = self.memory.clear_current(id) {
                self.logs.trace(end_time, id, "run_ended", Some(goal.position), None, Some(&goal));
            }
        }

        let robot_distances: Vec<f64> = self.robots.iter().map(|r| r.odometry_distance).collect();
        let total_distance: f64 = robot_distances.iter().sum();
        let metrics = RunMetrics {
            scenario: cfg.name.clone(),
            strategy: cfg.strategy,
            seed: cfg.seed,
            exploration_duration: end_time,
            mean_distance: total_distance / robot_distances.len() as f64,
            total_distance,
            robot_distances,
            coverage: self.coverage,
            completed: termination == Termination::CoverageReached,
            termination,
            invalid_count: self.invalid.len(),
        };
        let mut logs = self.logs;
        logs.finish(&metrics, &self.merged)?;
        Ok(RunOutput { metrics, logs })
    }
}

/// Runs one scenario to termination.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, EngineError> {
    Sim::new(cfg)?.run()
}

/// Human-readable one-line summary of a run.
pub fn summarize(m: &RunMetrics) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{} seed {} [{}]: {} after {:.1} s, total distance {:.2} m, coverage {:.3}, {} invalid frontiers",
        m.scenario,
        m.seed,
        m.strategy.as_str(),
        m.termination.as_str(),
        m.exploration_duration,
        m.total_distance,
        m.final_coverage(),
        m.invalid_count
    );
    s
}
