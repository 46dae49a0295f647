//! 2D embodied-exploration simulator and occupancy-mapping library.
//!
//! The pipeline, end to end: a simulated agent takes depth scans of a 2D
//! floorplan, projects them into an egocentric two-channel occupancy map
//! (occupied, explored), *anticipates* occupancy beyond the directly seen
//! cells, filters low-confidence predictions by entropy, registers the result
//! into a global map with a moving average, and plans its next move with
//! weighted A* over the inflated map. Exploration and point-goal navigation
//! harnesses sit on top, with map-accuracy/IoU/area-seen metrics and SPL.
//!
//! Modules:
//! - [`grid`]: grid/coordinate types, binarization, map-comparison metrics
//! - [`world`]: floorplan generation, raycast geometry, anticipation targets
//! - [`sensor`]: depth projection, actuation/odometry noise, dead reckoning
//! - [`anticipate`]: anticipators, BCE training objective, entropy filtering
//! - [`mapper`]: global map maintenance, anticipation reward, area seen
//! - [`plan`]: obstacle inflation, (weighted) A*, waypoints, local control
//! - [`explore`]: episode orchestration for exploration and PointNav
//! - [`dataset`]: (visible, target) training-pair generation
//! - [`cli`]: command-line entry points, file formats, rendering, reports

pub mod anticipate;
pub mod cli;
pub mod dataset;
pub mod explore;
pub mod grid;
pub mod mapper;
pub mod plan;
pub mod sensor;
pub mod world;

pub use grid::{
    BinCell, CellIndex, ClassScores, GlobalOccupancy, GridError, GroundTruthLayout, LayoutCell,
    LocalOccupancy, MapSpec, OccClass, Pose,
};
