//! Watchdog over active goals: cancels goals whose deadline has passed or
//! whose navigation failed, and reports the goal so it can be invalidated.

use crate::assigner::{GoalRecord, RobotState};
use crate::frontier_filter::InvalidReason;
use crate::geometry::Point2;
use crate::robot_sim::NavStatus;
use crate::RobotId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CancelReason {
    DeadlineExpired,
    MoveBaseError,
}

impl CancelReason {
    pub fn invalid_reason(self) -> InvalidReason {
        match self {
            CancelReason::DeadlineExpired => InvalidReason::Timeout,
            CancelReason::MoveBaseError => InvalidReason::MoveBaseError,
        }
    }
}

/// Cancel the robot's goal, set it idle, and mark `invalidated` invalid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorAction {
    pub robot: RobotId,
    pub reason: CancelReason,
    pub invalidated: Point2,
}

/// What the monitor needs to know about one robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitoredRobot {
    pub id: RobotId,
    pub state: RobotState,
    pub goal: Option<GoalRecord>,
    pub nav: NavStatus,
}

/// One watchdog pass. Deadline expiry (`t_ge - now <= 0`) is checked before
/// navigation errors; each robot yields at most one action, and robots
/// without an active goal are ignored.
pub fn monitor_tick(robots: &[MonitoredRobot], now: f64) -> Vec<MonitorAction> {
    robots
        .iter()
        .filter(|r| r.state != RobotState::Idle)
        .filter_map(|r| {
            let goal = r.goal?;
            let reason = if goal.t_ge - now <= 0.0 {
                CancelReason::DeadlineExpired
            } else if r.nav == NavStatus::Error {
                CancelReason::MoveBaseError
            } else {
                return None;
            };
            Some(MonitorAction { robot: r.id, reason, invalidated: goal.position })
        })
        .collect()
}
