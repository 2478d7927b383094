//! Expert data collection: scene sampling, grid planning and path tracking.

pub mod astar;
pub mod dstar;
pub mod episode;
pub mod grid;
pub mod scene;
pub mod tracker;

pub use astar::{plan_astar, plan_astar_world, PlanError, PlannedPath};
pub use dstar::{plan_dstar_lite, DStarLite};
pub use episode::{episode_id, generate_episode, plan_task, Expert, ExpertAction, ExpertError, GeneratedEpisode};
pub use grid::{Cell, GridConfig, OccupancyGrid};
pub use scene::{sample_scene, SceneRules};
pub use tracker::{track_path, ExpertConfig, GaitEntry, GaitTable, PDGains, PathTracker, SpeedBands};
