//! Generation plans and batch collection into a store.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::store::{Store, StoreError};
use crate::expert::{generate_episode, ExpertError};
use crate::task::{Skill, SpeedLevel, Split, TaskSpec};
use crate::QuardConfig;

/// Episodes to generate for one skill and split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub skill: Skill,
    pub split: Split,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenerationPlan {
    pub entries: Vec<PlanEntry>,
}

/// Full-scale corpus composition: six simulated skills plus real go-to data.
pub const FULL_SCALE: [(Skill, Split, usize); 7] = [
    (Skill::Distinguish, Split::SeenSim, 10_000),
    (Skill::GoTo, Split::SeenSim, 72_000),
    (Skill::GoThrough, Split::SeenSim, 48_000),
    (Skill::GoAvoid, Split::SeenSim, 63_000),
    (Skill::Crawl, Split::SeenSim, 1_000),
    (Skill::Unload, Split::SeenSim, 52_000),
    (Skill::GoTo, Split::SeenReal, 3_000),
];

impl GenerationPlan {
    pub fn full_scale() -> Self {
        Self::scaled(1)
    }

    /// Full-scale counts divided by `divisor`, rounded, at least one each.
    pub fn scaled(divisor: usize) -> Self {
        let divisor = divisor.max(1);
        GenerationPlan {
            entries: FULL_SCALE
                .iter()
                .map(|&(skill, split, n)| PlanEntry {
                    skill,
                    split,
                    count: ((n + divisor / 2) / divisor).max(1),
                })
                .collect(),
        }
    }

    /// The default desk-scale plan (1/1000 of full scale).
    pub fn desk() -> Self {
        Self::scaled(1000)
    }

    /// `count` simulated episodes for each listed skill.
    pub fn per_skill(skills: &[Skill], count: usize) -> Self {
        GenerationPlan {
            entries: skills
                .iter()
                .map(|&skill| PlanEntry {
                    skill,
                    split: Split::SeenSim,
                    count,
                })
                .collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }
}

/// SplitMix64 finalizer; used to derive independent child seeds.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Task and episode seed for the `index`-th episode of an entry. Speeds are
/// assigned round-robin over `global` so each speed gets a third of the
/// corpus up to one episode; target and gait are drawn uniformly.
pub fn plan_task(entry: &PlanEntry, base_seed: u64, index: usize, global: usize) -> (TaskSpec, u64) {
    let seed = derive_seed(base_seed, &[entry.skill as u64, entry.split as u64, index as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = TaskSpec::seen_space(entry.skill);
    let speed = SpeedLevel::ALL[global % SpeedLevel::ALL.len()];
    let candidates: Vec<&TaskSpec> = space.iter().filter(|t| t.speed == speed).collect();
    let mut task = *candidates[rng.random_range(0..candidates.len())];
    task.split = entry.split;
    // episode ids embed the seed, so keep them readable
    let episode_seed = rng.random::<u64>() >> 24;
    (task, episode_seed)
}

#[derive(Debug, thiserror::Error)]
pub enum CollectError {
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Outcome of a collection run. Generation errors do not stop the run.
#[derive(Debug, Default)]
pub struct CollectSummary {
    pub written: usize,
    pub failures: Vec<(String, ExpertError)>,
}

const CHUNK: usize = 64;

/// Generates every planned episode in parallel and writes one shard per plan
/// entry in plan order, so equal seeds give byte-identical stores.
pub fn collect(
    store: &Store,
    plan: &GenerationPlan,
    seed: u64,
    cfg: &QuardConfig,
) -> Result<CollectSummary, CollectError> {
    let mut summary = CollectSummary::default();
    let mut global = 0usize;
    for entry in &plan.entries {
        if entry.count == 0 {
            continue;
        }
        let jobs: Vec<(TaskSpec, u64)> = (0..entry.count)
            .map(|i| plan_task(entry, seed, i, global + i))
            .collect();
        global += entry.count;
        let mut writer = store.writer()?;
        for chunk in jobs.chunks(CHUNK) {
            let results: Vec<_> = chunk
                .par_iter()
                .map(|(task, s)| (crate::expert::episode_id(task, *s), generate_episode(task, *s, cfg)))
                .collect();
            for (id, result) in results {
                match result {
                    Ok(g) => {
                        writer.write(&g.episode, &g.frames)?;
                        summary.written += 1;
                    }
                    Err(e) => {
                        log::warn!("{id}: {e}");
                        summary.failures.push((id, e));
                    }
                }
            }
        }
        writer.finish()?;
    }
    Ok(summary)
}
