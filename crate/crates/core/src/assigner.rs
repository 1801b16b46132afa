//! Frontier-to-robot assignment.
//!
//! The temporal-memory assigner scores every frontier per robot with
//!
//! ```text
//! R = lambda * h(x_fp, x_r) * I(x_fp) * f(x_fp, x_G) - C(x_fp)
//! ```
//!
//! where `h` rewards frontiers near the robot, `I` is the cached information
//! gain, `f` discounts frontiers close to other robots' current goals and `C`
//! is the straight-line distance. Each accepted goal gets a deadline that
//! scales with distance, and every robot remembers the goals it was given.
//!
//! The baseline drops `f`, memory and deadlines: every idle robot simply takes
//! its own highest-revenue frontier.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier_filter::{FilteredFrontier, InvalidFrontierSet};
use crate::geometry::{Point2, Pose};
use crate::RobotId;

/// Lower and upper clamp of the relative distance factor.
pub const RELATIVE_FACTOR_MIN: f64 = 0.01;
pub const RELATIVE_FACTOR_MAX: f64 = 1.00;

#[derive(Debug, Error, PartialEq)]
pub enum AssignerError {
    #[error("assigner parameter `{0}` must be strictly positive")]
    NonPositive(&'static str),
    #[error("h_gain must exceed 1.0, got {0}")]
    HysteresisGainTooSmall(f64),
    #[error("goal duration must be positive, got {0}")]
    NonPositiveDuration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    TmRrt,
    BaselineRrt,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::TmRrt => "tm_rrt",
            Strategy::BaselineRrt => "baseline_rrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignerConfig {
    /// Weight on the information term.
    pub lambda_weight: f64,
    /// Hysteresis radius, m.
    pub h_rad: f64,
    /// Multiplier for frontiers within `h_rad`; must exceed 1.
    pub h_gain: f64,
    /// Distance scale of the relative distance factor, m.
    pub rp_dist: f64,
    /// Time budget per meter of goal distance, s/m (an inverse speed).
    pub t_pm: f64,
    /// Distance cap for the time budget, m.
    pub z: f64,
    /// Radius under which two goals count as the same frontier, m.
    pub memory_epsilon: f64,
    pub interrupt_near: f64,
    pub interrupt_far: f64,
}

impl Default for AssignerConfig {
    fn default() -> Self {
        Self::simulation()
    }
}

impl AssignerConfig {
    /// rp_dist = 18 m, t_pm = 8 s/m, h = 3.
    pub fn simulation() -> Self {
        Self {
            lambda_weight: 1.0,
            h_rad: 3.0,
            h_gain: 3.0,
            rp_dist: 18.0,
            t_pm: 8.0,
            z: 15.0,
            memory_epsilon: 1.0,
            interrupt_near: 1.5,
            interrupt_far: 1.5,
        }
    }

    /// rp_dist = 25 m, t_pm = 6 s/m, h = 5 (large-arena parameters).
    pub fn deployment() -> Self {
        Self { rp_dist: 25.0, t_pm: 6.0, h_rad: 5.0, h_gain: 5.0, ..Self::simulation() }
    }

    pub fn validate(&self) -> Result<(), AssignerError> {
        let fields = [
            ("lambda_weight", self.lambda_weight),
            ("h_rad", self.h_rad),
            ("h_gain", self.h_gain),
            ("rp_dist", self.rp_dist),
            ("t_pm", self.t_pm),
            ("z", self.z),
            ("memory_epsilon", self.memory_epsilon),
            ("interrupt_near", self.interrupt_near),
            ("interrupt_far", self.interrupt_far),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AssignerError::NonPositive(name));
            }
        }
        if self.h_gain <= 1.0 {
            return Err(AssignerError::HysteresisGainTooSmall(self.h_gain));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RobotState {
    Idle,
    Busy,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotSnapshot {
    pub id: RobotId,
    pub pose: Pose,
    pub state: RobotState,
    pub current_goal: Option<Point2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalRecord {
    pub position: Point2,
    /// Time the goal was handed out, s.
    pub t_gs: f64,
    /// Deadline, s. Infinite for the baseline, which has none.
    pub t_ge: f64,
    pub robot: RobotId,
}

/// Per-robot goal history plus each robot's active goal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssignmentMemory {
    history: BTreeMap<RobotId, Vec<GoalRecord>>,
    current: BTreeMap<RobotId, GoalRecord>,
}

impl AssignmentMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends to the robot's history and makes the record its current goal.
    pub fn record(&mut self, record: GoalRecord) {
        self.history.entry(record.robot).or_default().push(record);
        self.current.insert(record.robot, record);
    }

    pub fn clear_current(&mut self, robot: RobotId) -> Option<GoalRecord> {
        self.current.remove(&robot)
    }

    pub fn current(&self, robot: RobotId) -> Option<&GoalRecord> {
        self.current.get(&robot)
    }

    pub fn history(&self, robot: RobotId) -> &[GoalRecord] {
        self.history.get(&robot).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn total_records(&self) -> usize {
        self.history.values().map(Vec::len).sum()
    }
}

/// `h_gain` when the frontier is within `h_rad` of the robot (inclusive), else 1.
pub fn hysteresis_gain(frontier: Point2, robot_pose: Pose, cfg: &AssignerConfig) -> f64 {
    if robot_pose.position().distance(&frontier) > cfg.h_rad {
        1.0
    } else {
        cfg.h_gain
    }
}

/// `clamp(min_g |x_G - x_fp| / rp_dist, 0.01, 1.0)`, or 1.0 with no other goals.
pub fn relative_distance_factor(frontier: Point2, other_goals: &[Point2], cfg: &AssignerConfig) -> f64 {
    let Some(nearest) = other_goals.iter().map(|g| g.distance(&frontier)).min_by(f64::total_cmp) else {
        return RELATIVE_FACTOR_MAX;
    };
    (nearest / cfg.rp_dist).clamp(RELATIVE_FACTOR_MIN, RELATIVE_FACTOR_MAX)
}

/// Straight-line distance from the robot to the frontier.
pub fn navigation_cost(robot_pose: Pose, frontier: Point2) -> f64 {
    robot_pose.position().distance(&frontier)
}

/// `lambda * h * info * f - cost`.
pub fn combine_revenue(lambda: f64, h: f64, info: f64, f: f64, cost: f64) -> f64 {
    lambda * h * info * f - cost
}

pub fn revenue(frontier: &FilteredFrontier, robot: &RobotSnapshot, other_goals: &[Point2], cfg: &AssignerConfig) -> f64 {
    combine_revenue(
        cfg.lambda_weight,
        hysteresis_gain(frontier.position, robot.pose, cfg),
        frontier.info_gain,
        relative_distance_factor(frontier.position, other_goals, cfg),
        navigation_cost(robot.pose, frontier.position),
    )
}

/// Revenue without the relative distance factor.
pub fn baseline_revenue(frontier: &FilteredFrontier, robot: &RobotSnapshot, cfg: &AssignerConfig) -> f64 {
    cfg.lambda_weight * hysteresis_gain(frontier.position, robot.pose, cfg) * frontier.info_gain
        - navigation_cost(robot.pose, frontier.position)
}

/// Time budget for reaching a goal: `t_pm` below `h_rad`, `t_pm * d` on
/// `[h_rad, z]`, and `t_pm * z` beyond `z`.
pub fn adaptive_duration(frontier: Point2, robot_pose: Pose, cfg: &AssignerConfig) -> f64 {
    let d = robot_pose.position().distance(&frontier);
    if d < cfg.h_rad {
        cfg.t_pm
    } else if d <= cfg.z {
        cfg.t_pm * d
    } else {
        cfg.t_pm * cfg.z
    }
}

pub fn expected_deadline(t_gs: f64, duration: f64) -> Result<f64, AssignerError> {
    if duration > 0.0 {
        Ok(t_gs + duration)
    } else {
        Err(AssignerError::NonPositiveDuration(duration))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub robot: RobotId,
    pub record: GoalRecord,
    pub revenue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecisionKind {
    Assigned { revenue: f64, record: GoalRecord },
    /// Busy robot whose distance to its goal is inside the no-interrupt window.
    SkippedBusy { distance: f64 },
    /// No frontier passed the checks.
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub robot: RobotId,
    pub kind: DecisionKind,
}

/// Indices of `scores` in descending order; ties keep the lower index first.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// One temporal-memory assignment pass; see [`assign_cycle_traced`].
pub fn assign_cycle<R: Rng + ?Sized>(
    robots: &[RobotSnapshot],
    frontiers: &[FilteredFrontier],
    memory: &AssignmentMemory,
    invalid: &InvalidFrontierSet,
    now: f64,
    rng: &mut R,
    cfg: &AssignerConfig,
) -> Vec<Assignment> {
    assign_cycle_traced(robots, frontiers, memory, invalid, now, rng, cfg)
        .into_iter()
        .filter_map(|d| match d.kind {
            DecisionKind::Assigned { revenue, record } => Some(Assignment { robot: d.robot, record, revenue }),
            _ => None,
        })
        .collect()
}

/// One temporal-memory assignment pass, reporting a decision per robot.
///
/// Robots are visited in an order shuffled by `rng`. A busy robot keeps its
/// goal while `interrupt_near * h_rad < d <= interrupt_far * rp_dist`, `d`
/// being its distance to that goal. Every other robot walks the frontiers by
/// descending revenue and takes the first one that is not invalid, not within
/// `memory_epsilon` of anything in its own history, and not within
/// `memory_epsilon` of another robot's current goal. Goals handed out earlier
/// in the same pass count as current goals for the robots that follow.
///
/// `memory` is not modified; the caller records the returned goals.
pub fn assign_cycle_traced<R: Rng + ?Sized>(
    robots: &[RobotSnapshot],
    frontiers: &[FilteredFrontier],
    memory: &AssignmentMemory,
    invalid: &InvalidFrontierSet,
    now: f64,
    rng: &mut R,
    cfg: &AssignerConfig,
) -> Vec<Decision> {
    let mut order: Vec<usize> = (0..robots.len()).collect();
    order.shuffle(rng);

    let mut current: Vec<Option<Point2>> = robots.iter().map(|r| r.current_goal).collect();
    let mut decisions = Vec::with_capacity(robots.len());

    for i in order {
        let robot = &robots[i];
        if robot.state == RobotState::Busy {
            if let Some(goal) = current[i] {
                let d = robot.pose.position().distance(&goal);
                if d > cfg.interrupt_near * cfg.h_rad && d <= cfg.interrupt_far * cfg.rp_dist {
                    decisions.push(Decision { robot: robot.id, kind: DecisionKind::SkippedBusy { distance: d } });
                    continue;
                }
            }
        }

        let others: Vec<Point2> = current
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .filter_map(|(_, g)| *g)
            .collect();
        let scores: Vec<f64> = frontiers.iter().map(|f| revenue(f, robot, &others, cfg)).collect();
        let own = memory.history(robot.id);

        let accepted = descending(&scores).into_iter().find(|&k| {
            let p = frontiers[k].position;
            let not_invalid = !invalid.contains(&p);
            let not_own = !own.iter().any(|g| g.position.distance(&p) <= cfg.memory_epsilon);
            let not_other = !others.iter().any(|g| g.distance(&p) <= cfg.memory_epsilon);
            not_invalid && not_own && not_other
        });

        let kind = match accepted {
            Some(k) => {
                let p = frontiers[k].position;
                let duration = adaptive_duration(p, robot.pose, cfg);
                let t_ge = expected_deadline(now, duration).expect("validated config yields positive durations");
                current[i] = Some(p);
                DecisionKind::Assigned {
                    revenue: scores[k],
                    record: GoalRecord { position: p, t_gs: now, t_ge, robot: robot.id },
                }
            }
            None => DecisionKind::Exhausted,
        };
        decisions.push(Decision { robot: robot.id, kind });
    }
    decisions
}

/// Greedy baseline: every robot that is not Busy takes its own argmax of
/// `lambda * h * I - C`. Nothing stops several robots from taking the same
/// frontier, and goals carry no deadline.
pub fn baseline_assign(
    robots: &[RobotSnapshot],
    frontiers: &[FilteredFrontier],
    now: f64,
    cfg: &AssignerConfig,
) -> Vec<Decision> {
    robots
        .iter()
        .filter(|r| r.state != RobotState::Busy)
        .map(|robot| {
            let scores: Vec<f64> = frontiers.iter().map(|f| baseline_revenue(f, robot, cfg)).collect();
            let kind = match descending(&scores).first() {
                Some(&k) => DecisionKind::Assigned {
                    revenue: scores[k],
                    record: GoalRecord { position: frontiers[k].position, t_gs: now, t_ge: f64::INFINITY, robot: robot.id },
                },
                None => DecisionKind::Exhausted,
            };
            Decision { robot: robot.id, kind }
        })
        .collect()
}

/// Dispatches to the strategy's assigner. The baseline ignores memory, the
/// invalid set (the filter already applied it) and the rng.
#[allow(clippy::too_many_arguments)]
pub fn assign_for_strategy<R: Rng + ?Sized>(
    strategy: Strategy,
    robots: &[RobotSnapshot],
    frontiers: &[FilteredFrontier],
    memory: &AssignmentMemory,
    invalid: &InvalidFrontierSet,
    now: f64,
    rng: &mut R,
    cfg: &AssignerConfig,
) -> Vec<Decision> {
    match strategy {
        Strategy::TmRrt => assign_cycle_traced(robots, frontiers, memory, invalid, now, rng, cfg),
        Strategy::BaselineRrt => baseline_assign(robots, frontiers, now, cfg),
    }
}
