//! Policy interface and the two reference policies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{ActionCommand, ActionSpaceSpec, ActionTokens, CONTINUOUS_DIMS, TOKEN_COUNT};
use crate::expert::Expert;
use crate::sim::{Observation, World};
use crate::QuardConfig;

/// Per-episode context handed to [`Policy::reset`].
#[derive(Debug, Clone, Copy)]
pub struct EpisodeContext<'a> {
    pub seed: u64,
    pub instruction: &'a str,
    pub space: &'a ActionSpaceSpec,
}

/// Maps an observation and instruction to action tokens once per command tick.
pub trait Policy: Send {
    fn name(&self) -> String;

    /// Called before every episode.
    fn reset(&mut self, ctx: &EpisodeContext);

    /// Privileged simulator state, offered before each `act`. Only oracle
    /// policies use it.
    fn observe_world(&mut self, _world: &World) {}

    fn act(&mut self, obs: &Observation, instruction: &str) -> ActionTokens;
}

/// Tokens of a zero-velocity command, used when a policy has nothing better.
pub fn stop_tokens(space: &ActionSpaceSpec) -> ActionTokens {
    let cmd = space
        .clamp(&ActionCommand::from_values([0.0; CONTINUOUS_DIMS], false))
        .expect("finite");
    space.tokenize(&cmd).expect("clamped commands tokenize")
}

/// The scripted expert, driven from the simulator state.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    cfg: QuardConfig,
    expert: Option<Expert>,
    failed: bool,
    next: Option<ActionTokens>,
}

impl OraclePolicy {
    pub fn new(cfg: &QuardConfig) -> Self {
        OraclePolicy {
            cfg: cfg.clone(),
            expert: None,
            failed: false,
            next: None,
        }
    }
}

impl Policy for OraclePolicy {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn reset(&mut self, _ctx: &EpisodeContext) {
        self.expert = None;
        self.failed = false;
        self.next = None;
    }

    fn observe_world(&mut self, world: &World) {
        if self.expert.is_none() && !self.failed {
            match Expert::new(world, &self.cfg) {
                Ok(e) => self.expert = Some(e),
                Err(e) => {
                    log::debug!("oracle cannot plan: {e}");
                    self.failed = true;
                }
            }
        }
        self.next = self
            .expert
            .as_mut()
            .and_then(|e| e.act(world).map_err(|err| log::debug!("oracle: {err}")).ok())
            .map(|a| a.tokens);
    }

    fn act(&mut self, _obs: &Observation, _instruction: &str) -> ActionTokens {
        self.next.take().unwrap_or_else(|| stop_tokens(&self.cfg.action_space))
    }
}

/// Uniform random tokens over the action vocabulary, seeded per episode.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    seed: u64,
    rng: ChaCha8Rng,
    lo: u32,
    bins: u32,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            lo: 0,
            bins: 256,
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn reset(&mut self, ctx: &EpisodeContext) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed ^ ctx.seed.rotate_left(17));
        self.lo = ctx.space.token_offset();
        self.bins = ctx.space.bin_count();
    }

    fn act(&mut self, _obs: &Observation, _instruction: &str) -> ActionTokens {
        let mut t = [0u32; TOKEN_COUNT];
        for v in t.iter_mut().take(CONTINUOUS_DIMS) {
            *v = self.lo + self.rng.random_range(0..self.bins);
        }
        t[CONTINUOUS_DIMS] = self.lo + self.rng.random_range(0..2);
        ActionTokens(t)
    }
}
