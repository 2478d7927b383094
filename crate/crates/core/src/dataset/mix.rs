//! Seeded sim/real interleaving for co-training.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::{Episode, Source};
use super::store::{Store, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixMode {
    /// One finite pass; each selected episode appears exactly once.
    Exhaustive,
    /// Endless passes; each slot samples its source pool with replacement.
    WeightedStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixPolicy {
    pub sim_count: usize,
    pub real_count: usize,
    pub mode: MixMode,
}

impl MixPolicy {
    pub fn exhaustive(sim_count: usize, real_count: usize) -> Self {
        MixPolicy {
            sim_count,
            real_count,
            mode: MixMode::Exhaustive,
        }
    }

    pub fn pass_len(&self) -> usize {
        self.sim_count + self.real_count
    }

    /// Sim-to-real ratio label such as `256:30`.
    pub fn label(&self) -> String {
        format!("{}:{}", self.sim_count, self.real_count)
    }
}

#[derive(Debug, Error)]
pub enum MixError {
    #[error("{source_name} target {requested} exceeds the {available} available episodes")]
    Insufficient {
        source_name: &'static str,
        requested: usize,
        available: usize,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Episode stream produced by [`mix_stream`].
#[derive(Debug, Clone)]
pub struct MixStream {
    sim: Arc<Vec<Episode>>,
    real: Arc<Vec<Episode>>,
    policy: MixPolicy,
    rng: ChaCha8Rng,
    /// Source of each slot in the current pass.
    schedule: Vec<Source>,
    pos: usize,
    /// Next unused index per pool (exhaustive mode).
    next: [usize; 2],
    done: bool,
}

impl MixStream {
    pub fn policy(&self) -> MixPolicy {
        self.policy
    }

    fn reshuffle(&mut self) {
        let mut s = vec![Source::Sim; self.policy.sim_count];
        s.extend(std::iter::repeat_n(Source::Real, self.policy.real_count));
        s.shuffle(&mut self.rng);
        self.schedule = s;
        self.pos = 0;
    }
}

impl Iterator for MixStream {
    type Item = Episode;

    fn next(&mut self) -> Option<Episode> {
        if self.done || self.schedule.is_empty() {
            return None;
        }
        if self.pos == self.schedule.len() {
            if self.policy.mode == MixMode::Exhaustive {
                self.done = true;
                return None;
            }
            self.reshuffle();
        }
        let source = self.schedule[self.pos];
        self.pos += 1;
        let (pool, slot) = match source {
            Source::Sim => (&self.sim, 0),
            Source::Real => (&self.real, 1),
        };
        let i = match self.policy.mode {
            MixMode::Exhaustive => {
                let i = self.next[slot];
                self.next[slot] += 1;
                i
            }
            MixMode::WeightedStream => self.rng.random_range(0..pool.len()),
        };
        Some(pool[i].clone())
    }
}

/// Mixes pre-loaded pools. Exhaustive mode draws a seeded subset of each pool.
pub fn mix_episodes(
    policy: MixPolicy,
    sim: Vec<Episode>,
    real: Vec<Episode>,
    seed: u64,
) -> Result<MixStream, MixError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |mut pool: Vec<Episode>, want: usize, name: &'static str| {
        // a weighted stream samples with replacement, so it only needs one episode
        let need = match policy.mode {
            MixMode::Exhaustive => want,
            MixMode::WeightedStream => want.min(1),
        };
        if need > pool.len() {
            return Err(MixError::Insufficient {
                source_name: name,
                requested: want,
                available: pool.len(),
            });
        }
        if policy.mode == MixMode::Exhaustive {
            pool.shuffle(&mut rng);
            pool.truncate(want);
        }
        Ok(Arc::new(pool))
    };
    let sim = pick(sim, policy.sim_count, "sim")?;
    let real = pick(real, policy.real_count, "real")?;
    let mut stream = MixStream {
        sim,
        real,
        policy,
        rng,
        schedule: Vec::new(),
        pos: 0,
        next: [0, 0],
        done: false,
    };
    stream.reshuffle();
    Ok(stream)
}

/// Mixes sim episodes from `sim_store` with real episodes from `real_store`.
/// The stores may be the same; each contributes only its matching source.
pub fn mix_stream(policy: MixPolicy, sim_store: &Store, real_store: &Store, seed: u64) -> Result<MixStream, MixError> {
    let load = |store: &Store, want: usize, source: Source| -> Result<Vec<Episode>, MixError> {
        if want == 0 {
            return Ok(Vec::new());
        }
        Ok(store.episodes()?.into_iter().filter(|e| e.source == source).collect())
    };
    let sim = load(sim_store, policy.sim_count, Source::Sim)?;
    let real = load(real_store, policy.real_count, Source::Real)?;
    mix_episodes(policy, sim, real, seed)
}

#[cfg(test)]
mod tests {
    use super::super::EpisodeOutcome;
    use super::*;
    use crate::instruction::render_instruction;
    use crate::sim::{Status, StepOutcome};
    use crate::task::{Skill, TaskSpec};

    fn fake(source: Source, i: usize) -> Episode {
        let task = TaskSpec::seen_space(Skill::GoTo)[0];
        Episode {
            episode_id: format!("{source:?}-{i}"),
            instruction: render_instruction(&task).unwrap(),
            task,
            seed: i as u64,
            source,
            steps: Vec::new(),
            outcome: EpisodeOutcome::Finished(StepOutcome {
                status: Status::Timeout,
                distance_to_target: 1.0,
                violation: None,
            }),
        }
    }

    fn pools(s: usize, r: usize) -> (Vec<Episode>, Vec<Episode>) {
        (
            (0..s).map(|i| fake(Source::Sim, i)).collect(),
            (0..r).map(|i| fake(Source::Real, i)).collect(),
        )
    }

    #[test]
    fn real_only_regime() {
        let (s, r) = pools(10, 30);
        let out: Vec<Episode> = mix_episodes(MixPolicy::exhaustive(0, 30), s, r, 1).unwrap().collect();
        assert_eq!(out.len(), 30);
        assert!(out.iter().all(|e| e.source == Source::Real));
    }

    #[test]
    fn exhaustive_pass_hits_the_ratio_with_unique_episodes() {
        let (s, r) = pools(300, 30);
        let out: Vec<Episode> = mix_episodes(MixPolicy::exhaustive(256, 30), s, r, 2).unwrap().collect();
        let sims = out.iter().filter(|e| e.source == Source::Sim).count();
        assert_eq!((sims, out.len() - sims), (256, 30));
        let mut ids: Vec<&str> = out.iter().map(|e| e.episode_id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 286);
    }

    #[test]
    fn weighted_stream_ratio_per_pass() {
        let (s, r) = pools(20, 5);
        let policy = MixPolicy {
            sim_count: 256,
            real_count: 30,
            mode: MixMode::WeightedStream,
        };
        let out: Vec<Episode> = mix_episodes(policy, s, r, 3).unwrap().take(286 * 3).collect();
        for pass in out.chunks(286) {
            let sims = pass.iter().filter(|e| e.source == Source::Sim).count();
            assert_eq!(sims, 256);
        }
    }

    #[test]
    fn same_seed_same_order() {
        let ids = |seed| {
            let (s, r) = pools(50, 10);
            mix_episodes(MixPolicy::exhaustive(40, 10), s, r, seed)
                .unwrap()
                .map(|e| e.episode_id)
                .collect::<Vec<_>>()
        };
        assert_eq!(ids(9), ids(9));
        assert_ne!(ids(9), ids(10));
    }

    #[test]
    fn empty_pool_fails_weighted_stream() {
        let (s, r) = pools(5, 0);
        let policy = MixPolicy {
            sim_count: 10,
            real_count: 1,
            mode: MixMode::WeightedStream,
        };
        assert!(matches!(
            mix_episodes(policy, s, r, 0),
            Err(MixError::Insufficient {
                source_name: "real",
                ..
            })
        ));
    }

    #[test]
    fn over_target_is_an_error() {
        let (s, r) = pools(5, 5);
        assert!(matches!(
            mix_episodes(MixPolicy::exhaustive(6, 1), s, r, 0),
            Err(MixError::Insufficient {
                source_name: "sim",
                requested: 6,
                available: 5
            })
        ));
    }
}
