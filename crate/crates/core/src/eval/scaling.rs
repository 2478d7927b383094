//! Sim:real scaling comparison: one policy per mixing regime, all evaluated
//! on the same suite.

use std::fmt::Write as _;
use std::sync::Arc;

use super::knn::{KnnIndex, KnnPolicy};
use super::policy::Policy;
use super::run::{run_suite, EvalReport};
use super::suite::EvalSuite;
use super::EvalError;
use crate::config::KnnConfig;
use crate::dataset::{mix_stream, Episode, MixMode, MixPolicy, Store, StoreError};
use crate::sim::Observation;
use crate::QuardConfig;

#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub regime: MixPolicy,
    pub report: EvalReport,
}

#[derive(Debug, Clone, Default)]
pub struct ScalingTable {
    pub suite: String,
    pub rows: Vec<ScalingRow>,
}

impl ScalingTable {
    pub fn success_rates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.report.overall_success_rate()).collect()
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:<14}{:>10}{:>10}\n", "sim:real", "episodes", "SR");
        for r in &self.rows {
            let n: usize = r.report.per_task.values().map(|t| t.budget).sum();
            let _ = writeln!(
                s,
                "{:<14}{:>10}{:>10.3}",
                r.regime.label(),
                n,
                r.report.overall_success_rate()
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("sim,real,suite,success_rate\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.4}",
                r.regime.sim_count,
                r.regime.real_count,
                self.suite,
                r.report.overall_success_rate()
            );
        }
        s
    }
}

/// Builds a policy per regime from one pass of [`mix_stream`] and evaluates
/// it on `suite`. Regimes must be ordered by sim count.
pub fn scaling_experiment<F, P>(
    factory: F,
    regimes: &[MixPolicy],
    sim_store: &Store,
    real_store: &Store,
    suite: &EvalSuite,
    seed: u64,
    cfg: &QuardConfig,
) -> Result<ScalingTable, EvalError>
where
    F: Fn(&[Episode]) -> Result<P, EvalError>,
    P: Policy + Clone + Sync,
{
    if regimes.windows(2).any(|w| w[0].sim_count > w[1].sim_count) {
        return Err(EvalError::InvalidSuite("regimes must be ordered by sim count".into()));
    }
    let mut table = ScalingTable {
        suite: suite.name.clone(),
        rows: Vec::new(),
    };
    for &regime in regimes {
        let stream = mix_stream(regime, sim_store, real_store, seed)?;
        let train: Vec<Episode> = match regime.mode {
            MixMode::Exhaustive => stream.collect(),
            MixMode::WeightedStream => stream.take(regime.pass_len()).collect(),
        };
        let policy = factory(&train)?;
        let mut report = run_suite(&policy, suite, cfg);
        report.policy = format!("{} {}", policy.name(), regime.label());
        table.rows.push(ScalingRow { regime, report });
    }
    Ok(table)
}

/// Factory for [`scaling_experiment`] that builds a nearest-neighbor cloner,
/// reading frames from either store.
pub fn knn_factory<'a>(
    sim_store: &'a Store,
    real_store: &'a Store,
    k: usize,
    cfg: KnnConfig,
) -> impl Fn(&[Episode]) -> Result<KnnPolicy, EvalError> + 'a {
    move |episodes| {
        let frame = |h: &str| -> Result<Observation, StoreError> {
            sim_store.read_frame(h).or_else(|_| real_store.read_frame(h))
        };
        let index = KnnIndex::build(episodes, &frame, &cfg)?;
        KnnPolicy::new(Arc::new(index), k)
    }
}
