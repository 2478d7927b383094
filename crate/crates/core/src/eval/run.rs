//! Closed-loop suite execution and reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::{EpisodeContext, Policy};
use super::suite::{EvalSuite, SuiteEntry};
use crate::expert::sample_scene;
use crate::sim::{Status, World};
use crate::task::Skill;
use crate::QuardConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Collision,
    Timeout,
    WrongTarget,
    OutOfBounds,
    /// Terminate was emitted before the task succeeded.
    EarlyStop,
    /// Tokens did not decode under the suite's action space.
    Malformed,
    /// The simulator rejected the scene or the state went non-finite.
    SimFault,
}

impl FailureKind {
    pub const ALL: [FailureKind; 7] = [
        FailureKind::Collision,
        FailureKind::Timeout,
        FailureKind::WrongTarget,
        FailureKind::OutOfBounds,
        FailureKind::EarlyStop,
        FailureKind::Malformed,
        FailureKind::SimFault,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FailureKind::Collision => "collision",
            FailureKind::Timeout => "timeout",
            FailureKind::WrongTarget => "wrong_target",
            FailureKind::OutOfBounds => "out_of_bounds",
            FailureKind::EarlyStop => "early_stop",
            FailureKind::Malformed => "malformed",
            FailureKind::SimFault => "sim_fault",
        }
    }

    fn from_status(s: Status) -> FailureKind {
        match s {
            Status::Collision => FailureKind::Collision,
            Status::WrongTarget => FailureKind::WrongTarget,
            Status::OutOfBounds => FailureKind::OutOfBounds,
            _ => FailureKind::Timeout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub skill: Skill,
    pub seed: u64,
    pub instruction: String,
    /// `None` on success.
    pub failure: Option<FailureKind>,
    pub steps: u32,
    pub final_distance: f64,
    pub detail: Option<String>,
}

impl EpisodeResult {
    pub fn success(&self) -> bool {
        self.failure.is_none()
    }

    /// Log reference for this episode.
    pub fn log_id(&self, suite: &str) -> String {
        format!("{suite}/{}-{}", self.skill, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TaskReport {
    pub budget: usize,
    pub successes: usize,
    pub failures: BTreeMap<FailureKind, usize>,
}

impl TaskReport {
    pub fn success_rate(&self) -> f64 {
        if self.budget == 0 {
            0.0
        } else {
            self.successes as f64 / self.budget as f64
        }
    }

    pub fn failure_count(&self) -> usize {
        self.failures.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    pub suite: String,
    pub per_task: BTreeMap<Skill, TaskReport>,
    /// In suite order.
    pub episodes: Vec<EpisodeResult>,
}

/// Runs one suite entry to a terminal outcome.
pub fn run_episode<P: Policy + ?Sized>(policy: &mut P, entry: &SuiteEntry, cfg: &QuardConfig) -> EpisodeResult {
    let mut result = EpisodeResult {
        skill: entry.task.skill,
        seed: entry.seed,
        instruction: entry.instruction.clone(),
        failure: Some(FailureKind::SimFault),
        steps: 0,
        final_distance: f64::NAN,
        detail: None,
    };
    let scene = sample_scene(&entry.task, entry.seed, &cfg.scene);
    let mut world = match World::new(&scene, entry.task, cfg.sim.clone()) {
        Ok(w) => w,
        Err(e) => {
            result.detail = Some(e.to_string());
            return result;
        }
    };
    let space = &cfg.action_space;
    policy.reset(&EpisodeContext {
        seed: entry.seed,
        instruction: &entry.instruction,
        space,
    });
    loop {
        let outcome = world.outcome();
        result.final_distance = outcome.distance_to_target;
        if outcome.status.is_terminal() {
            result.failure = (outcome.status != Status::Success).then(|| FailureKind::from_status(outcome.status));
            return result;
        }
        policy.observe_world(&world);
        let obs = world.observe();
        let tokens = policy.act(&obs, &entry.instruction);
        let cmd = match space.detokenize(&tokens) {
            Ok(c) => c,
            Err(e) => {
                result.failure = Some(FailureKind::Malformed);
                result.detail = Some(e.to_string());
                return result;
            }
        };
        match world.step(&cmd) {
            Ok(o) => {
                result.steps += 1;
                result.final_distance = o.distance_to_target;
                if cmd.t && o.status != Status::Success {
                    result.failure = Some(FailureKind::EarlyStop);
                    return result;
                }
            }
            Err(e) => {
                result.failure = Some(FailureKind::SimFault);
                result.detail = Some(e.to_string());
                return result;
            }
        }
    }
}

/// Runs every suite entry in parallel. Each episode gets a fresh clone of
/// `policy`, so results depend only on the policy and the entry.
pub fn run_suite<P: Policy + Clone + Sync>(policy: &P, suite: &EvalSuite, cfg: &QuardConfig) -> EvalReport {
    let episodes: Vec<EpisodeResult> = suite
        .entries
        .par_iter()
        .map(|entry| run_episode(&mut policy.clone(), entry, cfg))
        .collect();
    EvalReport::from_results(policy.name(), suite, episodes)
}

impl EvalReport {
    pub fn from_results(policy: String, suite: &EvalSuite, episodes: Vec<EpisodeResult>) -> EvalReport {
        let mut per_task: BTreeMap<Skill, TaskReport> = suite
            .budgets
            .iter()
            .map(|(&k, &n)| {
                (
                    k,
                    TaskReport {
                        budget: n,
                        ..Default::default()
                    },
                )
            })
            .collect();
        for e in &episodes {
            let t = per_task.entry(e.skill).or_default();
            match e.failure {
                None => t.successes += 1,
                Some(f) => *t.failures.entry(f).or_default() += 1,
            }
        }
        EvalReport {
            policy,
            suite: suite.name.clone(),
            per_task,
            episodes,
        }
    }

    pub fn success_rate(&self, skill: Skill) -> f64 {
        self.per_task.get(&skill).map_or(0.0, TaskReport::success_rate)
    }

    /// Success rate pooled over every episode.
    pub fn overall_success_rate(&self) -> f64 {
        let n: usize = self.per_task.values().map(|t| t.budget).sum();
        let s: usize = self.per_task.values().map(|t| t.successes).sum();
        if n == 0 {
            0.0
        } else {
            s as f64 / n as f64
        }
    }

    /// Task columns in a fixed order, one row per report.
    pub fn table(reports: &[EvalReport]) -> String {
        let skills: Vec<Skill> = Skill::ALL
            .iter()
            .copied()
            .filter(|k| reports.iter().any(|r| r.per_task.contains_key(k)))
            .collect();
        let mut s = String::new();
        let _ = write!(s, "{:<16}", "policy");
        for k in &skills {
            let _ = write!(s, "{:>13}", k.title());
        }
        let _ = writeln!(s, "{:>9}", "avg");
        for r in reports {
            let _ = write!(s, "{:<16}", r.policy);
            for k in &skills {
                match r.per_task.get(k) {
                    Some(t) => {
                        let _ = write!(s, "{:>13.3}", t.success_rate());
                    }
                    None => {
                        let _ = write!(s, "{:>13}", "-");
                    }
                }
            }
            let _ = writeln!(s, "{:>9.3}", r.overall_success_rate());
        }
        s
    }

    /// SR table followed by the failure breakdown.
    pub fn to_table(&self) -> String {
        let mut s = format!("suite {}\n", self.suite);
        s += &Self::table(std::slice::from_ref(self));
        s.push('\n');
        let _ = write!(s, "{:<14}{:>7}{:>8}", "task", "budget", "success");
        for f in FailureKind::ALL {
            let _ = write!(s, "{:>14}", f.name());
        }
        s.push('\n');
        for (k, t) in &self.per_task {
            let _ = write!(s, "{:<14}{:>7}{:>8}", k.title(), t.budget, t.successes);
            for f in FailureKind::ALL {
                let _ = write!(s, "{:>14}", t.failures.get(&f).copied().unwrap_or(0));
            }
            s.push('\n');
        }
        s
    }

    /// One row per task.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["policy", "suite", "task", "budget", "successes", "success_rate"];
        header.extend(FailureKind::ALL.iter().map(|f| f.name()));
        w.write_record(&header).expect("in-memory csv");
        for (k, t) in &self.per_task {
            let mut row = vec![
                self.policy.clone(),
                self.suite.clone(),
                k.to_string(),
                t.budget.to_string(),
                t.successes.to_string(),
                format!("{:.4}", t.success_rate()),
            ];
            row.extend(
                FailureKind::ALL
                    .iter()
                    .map(|f| t.failures.get(f).copied().unwrap_or(0).to_string()),
            );
            w.write_record(&row).expect("in-memory csv");
        }
        csv_string(w)
    }

    /// One row per episode.
    pub fn episodes_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["log_id", "task", "seed", "outcome", "steps", "final_distance"])
            .expect("in-memory csv");
        for e in &self.episodes {
            w.write_record([
                e.log_id(&self.suite),
                e.skill.to_string(),
                e.seed.to_string(),
                e.failure.map_or("success", FailureKind::name).to_string(),
                e.steps.to_string(),
                format!("{:.4}", e.final_distance),
            ])
            .expect("in-memory csv");
        }
        csv_string(w)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 fields")
}
