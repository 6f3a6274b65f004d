//! Occupancy mapping, frontiers, semantic value maps, and path planning.

mod occupancy;
mod planner;
mod smooth;
mod sv;

use serde::{Deserialize, Serialize};

pub use occupancy::{detect_frontiers, CellState, OccupancyMap};
pub use planner::{bfs_distances, plan_path, select_goal, PlanError};
pub use smooth::{gaussian_kernel, smooth};
pub use sv::{
    apply_message, nearest_frontier, sv_com, sv_final, sv_point, Field, PositionOutOfBounds,
    SemanticValueMap,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExploreConfig {
    /// Weight of relevant objects in message values.
    pub tau1: f64,
    /// Weight of target objects in message values.
    pub tau2: f64,
    /// Gaussian smoothing width in cells.
    pub smooth_sigma: f64,
    /// Robot speed in m/s.
    pub speed: f64,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            tau1: 1.0,
            tau2: 10.0,
            smooth_sigma: 2.0,
            speed: 1.0,
        }
    }
}
