//! Command-level quadruped task toolkit: action tokenization, task
//! simulation, expert data collection, dataset storage and policy evaluation.

pub mod codec;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod expert;
pub mod instruction;
pub mod sim;
pub mod task;

pub use codec::{ActionCommand, ActionDim, ActionSpaceSpec, ActionTokens, CodecError};
pub use config::{ConfigError, KnnConfig, QuardConfig};
pub use instruction::{paraphrase_set, parse_instruction, render_instruction, Instruction};
pub use task::{Color, Gait, ObjectCategory, Skill, SpeedLevel, Split, TaskSpec, TaskTarget};
