//! Deterministic kinematic simulation of the command-level tasks.

pub mod geometry;
pub mod render;
pub mod scene;
pub mod world;

pub use geometry::{wrap_angle, Pose2, Rect};
pub use render::{render_observation, CameraIntrinsics, Observation, RenderConfig};
pub use scene::{Arena, Domain, Entity, EntityAttrs, EntityKind, Scene, Shape};
pub use world::{
    apply_command, check_collision, check_success, finish_tick, substep, BodyState, Progress, RateConfig, SimConfig,
    SimError, SlewRates, Status, StepOutcome, Violation, World, WorldState,
};
