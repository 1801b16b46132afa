//! Kinematic point robots: grid planning, constant-speed path following,
//! lidar sensing, and a small navigation state machine standing in for a
//! real navigation stack.

mod planner;

pub use planner::{cell_traversable, plan_path, traversable_mask, Path, PlanError};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Pose};
use crate::gridmap::{raycast_scan, CellState, GridError, Observation, OccupancyGrid};
use crate::RobotId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotParams {
    /// m/s
    pub speed: f64,
    pub lidar_range: f64,
    pub beam_count: usize,
    pub goal_tolerance: f64,
    pub inflation: f64,
    /// Seconds of motion history used by the stuck rule.
    pub stuck_window: f64,
    /// Minimum displacement over `stuck_window` while navigating, m.
    pub stuck_epsilon: f64,
    pub replan_interval: f64,
    /// How far from a blocked goal the planner may look for a reachable cell, m.
    pub goal_search_radius: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            speed: 0.5,
            lidar_range: 10.0,
            beam_count: 360,
            goal_tolerance: 0.3,
            inflation: 0.25,
            stuck_window: 8.0,
            stuck_epsilon: 0.1,
            replan_interval: 2.0,
            goal_search_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NavStatus {
    Idle,
    Active,
    Succeeded,
    Error,
}

impl NavStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NavStatus::Idle => "idle",
            NavStatus::Active => "active",
            NavStatus::Succeeded => "succeeded",
            NavStatus::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavState {
    pub status: NavStatus,
    /// Remaining waypoints, next one first.
    pub path: Option<VecDeque<Point2>>,
    /// Goal as requested by the assigner.
    pub goal: Option<Point2>,
    /// Where the planner actually leads (the goal, or its projection).
    pub target: Option<Point2>,
    /// (time, position) samples covering the last `stuck_window` seconds.
    pub window: VecDeque<(f64, Point2)>,
    active_since: f64,
    last_plan: f64,
}

impl Default for NavState {
    fn default() -> Self {
        Self {
            status: NavStatus::Idle,
            path: None,
            goal: None,
            target: None,
            window: VecDeque::new(),
            active_since: 0.0,
            last_plan: 0.0,
        }
    }
}

/// What one call to [`SimRobot::step`] produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// Arc length travelled during the step, m.
    pub displacement: f64,
    /// Cells that were Unknown in the local map before this step's scan.
    pub newly_observed: Vec<Observation>,
}

#[derive(Debug, Clone)]
pub struct SimRobot {
    pub id: RobotId,
    pub pose: Pose,
    pub params: RobotParams,
    pub local_map: OccupancyGrid,
    pub nav: NavState,
    pub odometry_distance: f64,
    last_scan: Option<Pose>,
}

impl SimRobot {
    /// Places the robot and takes an initial scan.
    pub fn new(id: RobotId, pose: Pose, params: RobotParams, truth: &OccupancyGrid) -> Result<Self, GridError> {
        let mut robot = Self { id, pose, params, local_map: truth.unknown_like(), nav: NavState::default(), odometry_distance: 0.0, last_scan: None };
        robot.sense(truth)?;
        Ok(robot)
    }

    pub fn position(&self) -> Point2 {
        self.pose.position()
    }

    /// Scans the truth map and folds new cells into the local map.
    pub fn sense(&mut self, truth: &OccupancyGrid) -> Result<Vec<Observation>, GridError> {
        let scan = raycast_scan(truth, self.pose, self.params.lidar_range, self.params.beam_count)?;
        self.last_scan = Some(self.pose);
        let fresh: Vec<Observation> = scan
            .into_iter()
            .filter(|o| self.local_map.cells()[o.index] == CellState::Unknown)
            .collect();
        self.local_map.apply_observations(&fresh);
        Ok(fresh)
    }

    /// Copies every cell that is known in `shared` but Unknown locally.
    pub fn absorb(&mut self, shared: &OccupancyGrid) {
        for (i, &s) in shared.cells().iter().enumerate() {
            if s != CellState::Unknown && self.local_map.cells()[i] == CellState::Unknown {
                self.local_map.set_index(i, s);
            }
        }
    }

    fn plan(&mut self, goal: Point2, now: f64) -> bool {
        self.nav.last_plan = now;
        match plan_path(&self.local_map, self.position(), goal, self.params.inflation, self.params.goal_search_radius) {
            Ok(path) => {
                self.nav.target = Some(path.target());
                let mut wps: VecDeque<Point2> = path.waypoints.into();
                // the first waypoint is the center of the cell the robot stands in
                if wps.len() > 1 {
                    wps.pop_front();
                }
                self.nav.path = Some(wps);
                true
            }
            Err(_) => {
                self.nav.status = NavStatus::Error;
                self.nav.path = None;
                false
            }
        }
    }

    /// Starts navigating toward `goal`. A planning failure leaves the status at Error.
    pub fn set_goal(&mut self, goal: Point2, now: f64) {
        self.nav.goal = Some(goal);
        self.nav.status = NavStatus::Active;
        self.nav.active_since = now;
        self.nav.window.clear();
        self.nav.window.push_back((now, self.position()));
        self.plan(goal, now);
    }

    /// Drops the current goal and stops.
    pub fn cancel(&mut self) {
        self.nav.status = NavStatus::Idle;
        self.nav.path = None;
        self.nav.goal = None;
        self.nav.target = None;
        self.nav.window.clear();
    }

    /// Remaining path runs through a cell that is no longer traversable.
    fn path_blocked(&self) -> bool {
        let Some(path) = &self.nav.path else { return false };
        path.iter()
            .filter_map(|p| self.local_map.world_to_cell(*p))
            .any(|c| !cell_traversable(&self.local_map, c, self.params.inflation))
    }

    /// Advances the robot by `dt` seconds; `now` is the time at the end of the step.
    pub fn step(&mut self, dt: f64, truth: &OccupancyGrid, now: f64) -> Result<StepReport, GridError> {
        let mut report = StepReport::default();
        if self.nav.status == NavStatus::Active {
            if let Some(goal) = self.nav.goal {
                if now - self.nav.last_plan >= self.params.replan_interval || self.path_blocked() {
                    self.plan(goal, now);
                }
            }
        }

        if self.nav.status == NavStatus::Active {
            let mut budget = self.params.speed * dt;
            let mut pos = self.position();
            let mut heading = self.pose.heading;
            if let Some(path) = self.nav.path.as_mut() {
                while budget > 0.0 {
                    let Some(&next) = path.front() else { break };
                    let d = pos.distance(&next);
                    if d > 0.0 {
                        heading = (next.y - pos.y).atan2(next.x - pos.x);
                    }
                    if d <= budget {
                        pos = next;
                        budget -= d;
                        report.displacement += d;
                        path.pop_front();
                    } else {
                        pos = pos.step_toward(&next, budget);
                        report.displacement += budget;
                        budget = 0.0;
                    }
                }
            }
            self.pose = Pose::new(pos.x, pos.y, heading);
            self.odometry_distance += report.displacement;
        }

        // a repeat scan from the same pose cannot reveal anything new
        if self.last_scan != Some(self.pose) {
            report.newly_observed = self.sense(truth)?;
        }

        if self.nav.status == NavStatus::Active {
            let target = self.nav.target.or(self.nav.goal).expect("active navigation has a goal");
            let path_done = self.nav.path.as_ref().is_none_or(VecDeque::is_empty);
            if self.position().distance(&target) <= self.params.goal_tolerance || path_done {
                self.nav.status = NavStatus::Succeeded;
                self.nav.path = None;
            } else {
                self.nav.window.push_back((now, self.position()));
                let horizon = now - self.params.stuck_window;
                while self.nav.window.len() > 1 && self.nav.window[1].0 <= horizon {
                    self.nav.window.pop_front();
                }
                if now - self.nav.active_since >= self.params.stuck_window {
                    let (_, old) = self.nav.window[0];
                    if old.distance(&self.position()) < self.params.stuck_epsilon {
                        self.nav.status = NavStatus::Error;
                        self.nav.path = None;
                    }
                }
            }
        }
        Ok(report)
    }
}
