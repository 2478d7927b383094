use thiserror::Error;

use super::astar::{plan_astar_world, PlanError, PlannedPath};
use super::grid::OccupancyGrid;
use super::scene::sample_scene;
use super::tracker::PathTracker;
use crate::codec::{ActionCommand, ActionTokens, CodecError};
use crate::config::QuardConfig;
use crate::dataset::{Episode, EpisodeOutcome, Source, Step};
use crate::instruction::{render_instruction, InstructionError};
use crate::sim::{BodyState, Observation, SimError, Status, World};
use crate::task::{Skill, TaskSpec};

#[derive(Debug, Error)]
pub enum ExpertError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Instruction(#[from] InstructionError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// One expert decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertAction {
    /// Clamped command before quantization.
    pub command: ActionCommand,
    pub tokens: ActionTokens,
    /// What the world actually receives: the detokenized bins.
    pub applied: ActionCommand,
}

#[derive(Debug, Clone)]
enum Phase {
    Track,
    Align,
    Release,
    Turn { dir: f64 },
    Sweep { dir: f64 },
}

/// Scripted expert: plans once, then tracks and runs the skill's finishing
/// maneuver. Terminate is set when the next tick is predicted to succeed.
#[derive(Debug, Clone)]
pub struct Expert {
    cfg: QuardConfig,
    task: TaskSpec,
    body: BodyState,
    tracker: Option<PathTracker>,
    phase: Phase,
}

impl Expert {
    pub fn new(world: &World, cfg: &QuardConfig) -> Result<Expert, PlanError> {
        let state = world.state();
        let task = *world.task();
        let mut body = cfg.sim.standing;
        if task.skill == Skill::Crawl {
            body.h_z = cfg.expert.crawl_height;
        }
        let target = state.target().expect("world validated its target");
        let r = state.robot;
        let goal = match task.skill {
            Skill::Distinguish => None,
            Skill::GoTo | Skill::GoAvoid | Skill::Crawl => Some((target.pose.x, target.pose.y)),
            Skill::GoThrough => {
                let ahead = target.dims[0] / 2.0 + cfg.sim.tunnel_exit_margin + 0.3;
                let (s, c) = target.pose.yaw.sin_cos();
                Some((target.pose.x + ahead * c, target.pose.y + ahead * s))
            }
            Skill::Unload => {
                // stand in front so the ball lands on the receptacle center
                let (s, c) = target.pose.yaw.sin_cos();
                let back = cfg.sim.release_offset;
                Some((target.pose.x - back * c, target.pose.y - back * s))
            }
        };
        let (tracker, phase) = match goal {
            Some(goal) => {
                let path = plan_task(world, cfg, goal)?;
                let t = PathTracker::new(path, task.speed, &cfg.expert, cfg.sim.rates.f_low);
                (Some(t), Phase::Track)
            }
            None => {
                let e = r.bearing_error(target.pose.x, target.pose.y);
                (
                    None,
                    Phase::Turn {
                        dir: if e < 0.0 { -1.0 } else { 1.0 },
                    },
                )
            }
        };
        Ok(Expert {
            cfg: cfg.clone(),
            task,
            body,
            tracker,
            phase,
        })
    }

    pub fn path(&self) -> Option<&PlannedPath> {
        self.tracker.as_ref().map(|t| t.path())
    }

    pub fn tracker(&self) -> Option<&PathTracker> {
        self.tracker.as_ref()
    }

    fn raw_command(&mut self, world: &World) -> ActionCommand {
        let state = world.state();
        let f_low = self.cfg.sim.rates.f_low;
        let max_w = self.cfg.expert.max_omega;
        let mut cmd = self.cfg.expert.base_command(self.task.gait, &self.body);
        let target = state.target().expect("validated").pose;
        let bearing = state.robot.bearing_error(target.x, target.y);

        if let Phase::Track = self.phase {
            let tracker = self.tracker.as_mut().expect("track phase has a path");
            if self.task.skill == Skill::Unload && tracker.arrived(state, 0.1) {
                self.phase = Phase::Align;
            } else {
                let (v, w) = tracker.velocity(state);
                cmd.v_x = v;
                cmd.omega_z = w;
                return cmd;
            }
        }
        if let Phase::Align = self.phase {
            if bearing.abs() < self.cfg.expert.unload_align_deg.to_radians() {
                self.phase = Phase::Release;
            } else {
                cmd.omega_z = (bearing * f_low).clamp(-max_w, max_w);
                return cmd;
            }
        }
        if let Phase::Release = self.phase {
            cmd.phi = self.cfg.expert.unload_pitch;
            return cmd;
        }
        if let Phase::Turn { dir } = self.phase {
            let entry = self.cfg.expert.sweep_entry_deg.to_radians();
            let turn = bearing - dir * entry;
            if turn * dir > 0.5f64.to_radians() {
                cmd.omega_z = (turn * f_low).clamp(-max_w, max_w);
                return cmd;
            }
            self.phase = Phase::Sweep { dir };
        }
        if let Phase::Sweep { dir } = self.phase {
            cmd.omega_z = dir * self.cfg.expert.sweep_step_deg.to_radians() * f_low;
        }
        cmd
    }

    /// Next action for the current world state.
    pub fn act(&mut self, world: &World) -> Result<ExpertAction, ExpertError> {
        let mut raw = self.raw_command(world);
        let space = &self.cfg.action_space;
        // release on the move once the ball is predicted to land in the receptacle
        if self.task.skill == Skill::Unload && matches!(self.phase, Phase::Track) {
            let mut drop = raw;
            drop.phi = self.cfg.expert.unload_pitch;
            let applied = space.detokenize(&space.tokenize(&space.clamp(&drop)?)?)?;
            let mut probe = world.clone();
            if probe.step(&applied)?.status == Status::Success {
                raw = drop;
                self.phase = Phase::Release;
            }
        }
        let mut command = space.clamp(&raw)?;
        let mut tokens = space.tokenize(&command)?;
        let mut applied = space.detokenize(&tokens)?;
        let mut probe = world.clone();
        if probe.step(&applied)?.status == Status::Success {
            command.t = true;
            tokens = space.tokenize(&command)?;
            applied = space.detokenize(&tokens)?;
        }
        Ok(ExpertAction {
            command,
            tokens,
            applied,
        })
    }
}

/// Plans from the robot to `goal` on the task's inflated grid. An unload
/// receptacle is left off the grid: the stand point lies inside its
/// inflation margin but clear of its footprint.
pub fn plan_task(world: &World, cfg: &QuardConfig, goal: (f64, f64)) -> Result<PlannedPath, PlanError> {
    let mut state = world.state().clone();
    if world.task().skill == Skill::Unload {
        state.entities.retain(|e| !e.is_target);
    }
    let grid = OccupancyGrid::for_task(&state, world.task(), &cfg.expert.grid);
    let start = (state.robot.x, state.robot.y);
    let path = match staging_point(world, cfg) {
        Some(stage) => {
            let a = plan_astar_world(&grid, start, stage)?;
            let b = plan_astar_world(&grid, stage, goal)?;
            let mut cells = a.cells;
            cells.extend_from_slice(&b.cells[1..]);
            PlannedPath::from_cells(&grid, cells)
        }
        None => plan_astar_world(&grid, start, goal)?,
    };
    Ok(path)
}

/// Point straight in front of a tunnel or receptacle, so the robot arrives
/// already aligned with its axis.
fn staging_point(world: &World, cfg: &QuardConfig) -> Option<(f64, f64)> {
    let t = world.state().target()?;
    let back = match world.task().skill {
        Skill::GoThrough => t.dims[0] / 2.0 + cfg.expert.tunnel_approach,
        Skill::Unload => cfg.sim.release_offset + cfg.expert.unload_approach,
        _ => return None,
    };
    let (s, c) = t.pose.yaw.sin_cos();
    Some((t.pose.x - back * c, t.pose.y - back * s))
}

/// An episode with its rendered frames, aligned with `episode.steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedEpisode {
    pub episode: Episode,
    pub frames: Vec<Observation>,
}

pub fn episode_id(task: &TaskSpec, seed: u64) -> String {
    let source = if task.split == crate::task::Split::SeenReal {
        "real"
    } else {
        "sim"
    };
    format!("{source}-{}-{seed}", task.skill)
}

/// Samples a scene, plans, and rolls the expert until the episode ends.
pub fn generate_episode(task: &TaskSpec, seed: u64, cfg: &QuardConfig) -> Result<GeneratedEpisode, ExpertError> {
    let instruction = render_instruction(task)?;
    let scene = sample_scene(task, seed, &cfg.scene);
    let mut world = World::new(&scene, *task, cfg.sim.clone())?;
    let source = if task.split == crate::task::Split::SeenReal {
        Source::Real
    } else {
        Source::Sim
    };
    let mut episode = Episode {
        episode_id: episode_id(task, seed),
        instruction,
        task: *task,
        seed,
        source,
        steps: Vec::new(),
        outcome: EpisodeOutcome::Finished(world.outcome()),
    };
    let mut expert = match Expert::new(&world, cfg) {
        Ok(e) => e,
        Err(e) => {
            log::debug!("{}: unplannable: {e}", episode.episode_id);
            episode.outcome = EpisodeOutcome::Unplannable { reason: e.to_string() };
            return Ok(GeneratedEpisode {
                episode,
                frames: Vec::new(),
            });
        }
    };
    let mut frames = Vec::new();
    while !world.outcome().status.is_terminal() {
        let obs = world.observe();
        let action = expert.act(&world)?;
        world.step(&action.applied)?;
        episode.steps.push(Step {
            frame: obs.content_hash(),
            tokens: action.tokens,
            command: action.command,
        });
        frames.push(obs);
    }
    episode.outcome = EpisodeOutcome::Finished(world.outcome());
    Ok(GeneratedEpisode { episode, frames })
}
