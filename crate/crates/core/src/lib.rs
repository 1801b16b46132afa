//! Multi-robot frontier exploration with temporal memory-based goal assignment.
//!
//! The crate is a deterministic, in-process simulator: robots sense a
//! ground-truth occupancy grid, their maps are merged and cleaned, RRT
//! detectors emit candidate points, a mean-shift filter turns them into
//! frontiers, and an assigner hands frontiers to robots. Two assignment
//! strategies are provided: the temporal-memory assigner and a greedy
//! baseline that scores frontiers without coordination.

pub mod geometry;
pub mod gridmap;
pub mod assigner;
pub mod frontier_detection;
pub mod frontier_filter;
pub mod monitor;
pub mod robot_sim;
pub mod maps;
pub mod engine;
pub mod render;

use serde::{Deserialize, Serialize};

/// Robot identifier; robots are numbered from zero in scenario order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RobotId(pub usize);

impl std::fmt::Display for RobotId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
