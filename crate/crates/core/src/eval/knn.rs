//! Nearest-neighbor behavior cloning over pooled frames and the parsed
//! instruction.

use std::sync::Arc;

use super::policy::{stop_tokens, EpisodeContext, Policy};
use super::EvalError;
use crate::codec::{ActionSpaceSpec, ActionTokens, TOKEN_COUNT};
use crate::config::KnnConfig;
use crate::dataset::{Episode, Store, StoreError};
use crate::instruction::parse_instruction;
use crate::sim::Observation;
use crate::task::{Color, Gait, ObjectCategory, Skill, SpeedLevel, TaskSpec, TaskTarget, TunnelSection};

const LETTERS: usize = 26;

fn spec_width() -> usize {
    Skill::ALL.len()
        + SpeedLevel::ALL.len()
        + Gait::ALL.len()
        + Color::ALL.len()
        + ObjectCategory::ALL.len()
        + TunnelSection::ALL.len()
        + LETTERS
}

/// One-hot encoding of a task spec; all zeros when the text does not parse.
pub fn instruction_features(text: &str, weight: f32) -> Vec<f32> {
    let mut v = vec![0f32; spec_width()];
    let Ok(spec) = parse_instruction(text) else {
        return v;
    };
    let mut set = |base: usize, i: usize| v[base + i] = weight;
    let TaskSpec {
        skill,
        target,
        speed,
        gait,
        ..
    } = spec;
    let mut base = 0;
    set(base, skill as usize);
    base += Skill::ALL.len();
    set(base, speed as usize);
    base += SpeedLevel::ALL.len();
    set(base, gait as usize);
    base += Gait::ALL.len();
    let color_base = base;
    base += Color::ALL.len();
    let cat_base = base;
    base += ObjectCategory::ALL.len();
    let section_base = base;
    base += TunnelSection::ALL.len();
    match target {
        TaskTarget::Object { color, category } => {
            set(color_base, color as usize);
            set(cat_base, category as usize);
        }
        TaskTarget::Tunnel { color, section } => {
            set(color_base, color as usize);
            set(section_base, section as usize);
        }
        TaskTarget::Letter { letter } => {
            let i = (letter as usize).saturating_sub('a' as usize).min(LETTERS - 1);
            set(base, i);
        }
    }
    v
}

/// Pooled colors scaled to [0, 1].
pub fn frame_features(obs: &Observation, cfg: &KnnConfig) -> Vec<f32> {
    obs.pooled(cfg.pool_cols, cfg.pool_rows)
        .into_iter()
        .map(|x| x / 255.0)
        .collect()
}

/// Training samples: one feature row and token vector per step.
#[derive(Debug)]
pub struct KnnIndex {
    cfg: KnnConfig,
    dim: usize,
    features: Vec<f32>,
    tokens: Vec<ActionTokens>,
    episodes: usize,
}

impl KnnIndex {
    /// Builds from successful episodes; `frame` resolves a frame hash.
    pub fn build(
        episodes: &[Episode],
        frame: &dyn Fn(&str) -> Result<Observation, StoreError>,
        cfg: &KnnConfig,
    ) -> Result<KnnIndex, EvalError> {
        let mut features = Vec::new();
        let mut tokens = Vec::new();
        let mut used = 0;
        let mut dim = 0;
        for e in episodes.iter().filter(|e| e.outcome.is_success() && !e.is_empty()) {
            used += 1;
            let spec = instruction_features(&e.instruction.text, cfg.instruction_weight);
            for s in &e.steps {
                let mut row = frame_features(&frame(&s.frame)?, cfg);
                row.extend_from_slice(&spec);
                dim = row.len();
                features.extend(row);
                tokens.push(s.tokens);
            }
        }
        if used == 0 {
            return Err(EvalError::EmptyTrainingSet);
        }
        Ok(KnnIndex {
            cfg: *cfg,
            dim,
            features,
            tokens,
            episodes: used,
        })
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn samples(&self) -> usize {
        self.tokens.len()
    }

    /// Indices of the `k` nearest samples, nearest first; ties go to the
    /// earlier sample.
    pub fn nearest(&self, query: &[f32], k: usize) -> Vec<usize> {
        let mut d: Vec<(f32, usize)> = self
            .features
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, row)| {
                let dist = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f32>();
                (dist, i)
            })
            .collect();
        let k = k.min(d.len());
        let cmp = |a: &(f32, usize), b: &(f32, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k, cmp);
            d.truncate(k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Per-position majority vote; ties go to the nearest voter.
    pub fn vote(&self, neighbors: &[usize]) -> ActionTokens {
        let mut out = [0u32; TOKEN_COUNT];
        for (pos, slot) in out.iter_mut().enumerate() {
            let votes: Vec<u32> = neighbors.iter().map(|&i| self.tokens[i].0[pos]).collect();
            let count = |t: u32| votes.iter().filter(|&&v| v == t).count();
            let best = votes.iter().map(|&t| count(t)).max().unwrap_or(0);
            *slot = votes.iter().copied().find(|&t| count(t) == best).unwrap_or(0);
        }
        ActionTokens(out)
    }
}

#[derive(Debug, Clone)]
pub struct KnnPolicy {
    index: Arc<KnnIndex>,
    k: usize,
    spec: Vec<f32>,
    fallback: Option<ActionTokens>,
}

impl KnnPolicy {
    pub fn new(index: Arc<KnnIndex>, k: usize) -> Result<KnnPolicy, EvalError> {
        if k == 0 || k > index.episodes() {
            return Err(EvalError::BadK {
                k,
                available: index.episodes(),
            });
        }
        Ok(KnnPolicy {
            index,
            k,
            spec: Vec::new(),
            fallback: None,
        })
    }

    pub fn index(&self) -> &KnnIndex {
        &self.index
    }
}

impl Policy for KnnPolicy {
    fn name(&self) -> String {
        format!("knn(k={})", self.k)
    }

    fn reset(&mut self, ctx: &EpisodeContext) {
        self.spec = instruction_features(ctx.instruction, self.index.cfg.instruction_weight);
        self.fallback = Some(stop_tokens(ctx.space));
    }

    fn act(&mut self, obs: &Observation, _instruction: &str) -> ActionTokens {
        let mut q = frame_features(obs, &self.index.cfg);
        q.extend_from_slice(&self.spec);
        if q.len() != self.index.dim {
            return self
                .fallback
                .unwrap_or_else(|| stop_tokens(&ActionSpaceSpec::default()));
        }
        let n = self.index.nearest(&q, self.k);
        self.index.vote(&n)
    }
}

/// Nearest-neighbor cloner over every successful episode in `store`.
pub fn knn_bc_policy(store: &Store, k: usize, cfg: &KnnConfig) -> Result<KnnPolicy, EvalError> {
    let episodes = store.episodes()?;
    if episodes.is_empty() {
        return Err(EvalError::EmptyTrainingSet);
    }
    let index = KnnIndex::build(&episodes, &|h| store.read_frame(h), cfg)?;
    KnnPolicy::new(Arc::new(index), k)
}
