use serde::{Deserialize, Serialize};

use crate::codec::{ActionCommand, ActionSpaceSpec, ActionTokens};
use crate::instruction::Instruction;
use crate::sim::{Status, StepOutcome};
use crate::task::TaskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Sim,
    Real,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Sim => "sim",
            Source::Real => "real",
        }
    }
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One command tick: the frame seen before acting and the action taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// Content hash of the PPM frame in the store's frame directory.
    pub frame: String,
    pub tokens: ActionTokens,
    /// Clamped command before quantization.
    pub command: ActionCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpisodeOutcome {
    Finished(StepOutcome),
    /// The expert could not plan; the episode has no steps.
    Unplannable {
        reason: String,
    },
    /// Imported recording with a reported status but no simulator state.
    Imported {
        status: Status,
    },
}

impl EpisodeOutcome {
    pub fn status(&self) -> Option<Status> {
        match self {
            EpisodeOutcome::Finished(o) => Some(o.status),
            EpisodeOutcome::Unplannable { .. } => None,
            EpisodeOutcome::Imported { status } => Some(*status),
        }
    }

    pub fn is_success(&self) -> bool {
        self.status() == Some(Status::Success)
    }

    /// Short label for tables: a status name or `unplannable`.
    pub fn label(&self) -> &'static str {
        self.status().map_or("unplannable", Status::name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: String,
    pub instruction: Instruction,
    pub task: TaskSpec,
    pub seed: u64,
    pub source: Source,
    pub steps: Vec<Step>,
    pub outcome: EpisodeOutcome,
}

/// Where a validation check failed, as a dotted field path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks the episode against an action space.
    pub fn validate(&self, space: &ActionSpaceSpec) -> Result<(), ValidationError> {
        let err = |path: String, message: String| Err(ValidationError { path, message });
        if self.episode_id.is_empty() || self.episode_id.contains(['/', '\\', '\n']) {
            return err("episode_id".into(), format!("invalid id {:?}", self.episode_id));
        }
        if self.instruction.spec != self.task {
            return err("instruction.spec".into(), "differs from task".into());
        }
        let unplannable = matches!(self.outcome, EpisodeOutcome::Unplannable { .. });
        if self.steps.is_empty() && !unplannable {
            return err("steps".into(), "finished episode has no steps".into());
        }
        let last = self.steps.len().saturating_sub(1);
        for (i, step) in self.steps.iter().enumerate() {
            if let Err(e) = space.detokenize(&step.tokens) {
                return err(format!("steps[{i}].tokens"), e.to_string());
            }
            if step.frame.len() != 64 || !step.frame.bytes().all(|b| b.is_ascii_hexdigit()) {
                return err(format!("steps[{i}].frame"), "not a sha256 hex digest".into());
            }
            let t = step.tokens.terminate_token() == space.token_offset() + 1;
            if self.outcome.is_success() && t != (i == last) {
                return err(
                    format!("steps[{i}].tokens[11]"),
                    "terminate must be set exactly on the last step of a successful episode".into(),
                );
            }
        }
        Ok(())
    }
}
