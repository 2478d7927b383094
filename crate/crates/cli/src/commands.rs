use std::fs;
use std::io::Write as _;
use std::path::Path;

use quard_core::dataset::{
    collect as run_collect, compute_stats, import_real, replay_episode, trajectory_svg, GenerationPlan, PlanEntry,
    ReplayError, Store, StoreError,
};
use quard_core::eval::{knn_bc_policy, run_suite, EvalReport, EvalSuite, OraclePolicy, RandomPolicy};
use quard_core::{QuardConfig, Skill, Split};

use crate::{CliError, CollectArgs, EvalArgs, ImportArgs, InspectArgs, RenderArgs, StatsArgs};

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(runtime(e)),
        _ => Ok(()),
    }
}

macro_rules! emitln {
    ($($t:tt)*) => {
        emit(&format!("{}\n", format_args!($($t)*)))?
    };
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn open_store(root: &Path) -> Result<Store, CliError> {
    if !root.join("manifest.toml").is_file() {
        return Err(CliError::Usage(format!("no store at {}", root.display())));
    }
    Store::open(root).map_err(runtime)
}

pub fn collect(a: &CollectArgs, cfg: &QuardConfig) -> Result<(), CliError> {
    let plan = if a.task.is_empty() && a.count.is_none() {
        if a.real {
            return Err(CliError::Usage("--real needs --task and --count".into()));
        }
        GenerationPlan::scaled(a.scale as usize)
    } else {
        let count = a.count.ok_or_else(|| CliError::Usage("--task needs --count".into()))?;
        let skills: &[Skill] = if a.task.is_empty() { Skill::ALL } else { &a.task };
        let split = if a.real { Split::SeenReal } else { Split::SeenSim };
        GenerationPlan {
            entries: skills.iter().map(|&skill| PlanEntry { skill, split, count }).collect(),
        }
    };
    let store = match Store::create(&a.out, &cfg.action_space, cfg.sim.rates) {
        Err(StoreError::Exists(p)) => {
            return Err(CliError::Usage(format!("a store already exists at {}", p.display())))
        }
        other => other.map_err(runtime)?,
    };
    log::info!("collecting {} episodes with seed {}", plan.total(), a.seed);
    let summary = run_collect(&store, &plan, a.seed, cfg).map_err(runtime)?;
    emit(&compute_stats(&store).map_err(runtime)?.to_table())?;
    if !summary.failures.is_empty() {
        for (id, e) in &summary.failures {
            log::error!("{id}: {e}");
        }
        return Err(CliError::Runtime(format!(
            "{} of {} episodes failed to generate",
            summary.failures.len(),
            plan.total()
        )));
    }
    Ok(())
}

fn load_suite(name: &str, seed: u64) -> Result<EvalSuite, CliError> {
    if name.ends_with(".toml") {
        let text = fs::read_to_string(name).map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        return EvalSuite::from_toml(&text).map_err(|e| CliError::Usage(e.to_string()));
    }
    EvalSuite::by_name(name, seed).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn eval(a: &EvalArgs, cfg: &QuardConfig) -> Result<(), CliError> {
    let suite = load_suite(&a.suite, a.seed)?;
    let report = match a.policy.as_str() {
        "oracle" => run_suite(&OraclePolicy::new(cfg), &suite, cfg),
        "random" => run_suite(&RandomPolicy::new(a.seed), &suite, cfg),
        p => match p.strip_prefix("knn:") {
            Some(path) => {
                let store = open_store(Path::new(path))?;
                let k = a.k.unwrap_or(cfg.knn.k);
                let knn = knn_bc_policy(&store, k, &cfg.knn).map_err(|e| CliError::Usage(e.to_string()))?;
                run_suite(&knn, &suite, cfg)
            }
            None => {
                return Err(CliError::Usage(format!(
                    "unknown policy `{p}`; expected oracle, random or knn:<store>"
                )))
            }
        },
    };
    let table = EvalReport::table(std::slice::from_ref(&report));
    write(&a.out.join("report.txt"), &table)?;
    write(&a.out.join("report.csv"), report.to_csv())?;
    write(&a.out.join("episodes.csv"), report.episodes_csv())?;
    emit(&table)?;
    emitln!("overall SR {:.3}", report.overall_success_rate());
    Ok(())
}

pub fn render(a: &RenderArgs, cfg: &QuardConfig) -> Result<(), CliError> {
    let store = open_store(&a.store)?;
    let (episode, _) = match store.get(&a.episode) {
        Err(StoreError::NotFound(m)) => return Err(CliError::Usage(format!("episode not found: {m}"))),
        other => other.map_err(runtime)?,
    };
    for (i, s) in episode.steps.iter().enumerate() {
        let obs = store.read_frame(&s.frame).map_err(runtime)?;
        write(&a.out.join("frames").join(format!("{i:06}.ppm")), obs.to_ppm())?;
    }
    match replay_episode(&episode, cfg) {
        Ok(t) => write(
            &a.out.join("trajectory.svg"),
            trajectory_svg(&t, cfg.sim.success_radius),
        )?,
        Err(ReplayError::NoScene(id)) => log::warn!("{id} is an imported recording; only frames were written"),
        Err(e) => return Err(runtime(e)),
    }
    log::info!("wrote {} frames to {}", episode.len(), a.out.display());
    Ok(())
}

pub fn stats(a: &StatsArgs) -> Result<(), CliError> {
    let store = open_store(&a.store)?;
    let report = compute_stats(&store).map_err(runtime)?;
    let table = report.to_table();
    if let Some(out) = &a.out {
        write(&out.join("stats.txt"), &table)?;
        write(
            &out.join("stats.json"),
            serde_json::to_string_pretty(&report).map_err(runtime)?,
        )?;
        write(&out.join("stats.svg"), report.to_svg())?;
    }
    emit(&table)?;
    Ok(())
}

pub fn import(a: &ImportArgs, cfg: &QuardConfig) -> Result<(), CliError> {
    if !a.from.is_dir() {
        return Err(CliError::Usage(format!("{} is not a directory", a.from.display())));
    }
    let store = if a.store.join("manifest.toml").is_file() {
        Store::open(&a.store)
    } else {
        Store::create(&a.store, &cfg.action_space, cfg.sim.rates)
    }
    .map_err(runtime)?;
    let report = import_real(&a.from, &store).map_err(runtime)?;
    emitln!("imported {} episodes, skipped {}", report.count(), report.skipped.len());
    for (folder, reason) in &report.skipped {
        emitln!("skipped {folder}: {reason}");
    }
    Ok(())
}

pub fn inspect(a: &InspectArgs) -> Result<(), CliError> {
    if let (Some(name), Some(seed), Some(out)) = (&a.suite, a.seed, &a.out) {
        let suite = load_suite(name, seed)?;
        write(out, suite.to_toml())?;
        emitln!("{}: {} entries written to {}", suite.name, suite.len(), out.display());
        return Ok(());
    }
    let store = open_store(a.store.as_deref().expect("clap requires --store"))?;
    if let Some(id) = &a.episode {
        let (episode, loc) = match store.get(id) {
            Err(StoreError::NotFound(m)) => return Err(CliError::Usage(format!("episode not found: {m}"))),
            other => other.map_err(runtime)?,
        };
        emitln!("{} record {} at byte {}", loc.shard, loc.record, loc.offset);
        emitln!("{}", serde_json::to_string_pretty(&episode).map_err(runtime)?);
        return Ok(());
    }
    let m = store.manifest();
    emitln!(
        "format {} with {} episodes in {} shards",
        m.format_version,
        m.episodes,
        m.shards.len()
    );
    for (label, counts) in [
        ("tasks", &m.tally.tasks),
        ("sources", &m.tally.sources),
        ("splits", &m.tally.splits),
        ("outcomes", &m.tally.outcomes),
    ] {
        let parts: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
        emitln!("{label:<9} {}", parts.join(" "));
    }
    for s in &m.shards {
        emitln!(
            "{}  {:>5} episodes  {:>9} bytes  {}",
            s.name,
            s.episodes,
            s.bytes,
            s.sha256
        );
    }
    Ok(())
}
