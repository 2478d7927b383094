use std::collections::HashSet;

use quard_core::dataset::{
    collect, compute_stats, export_episode, import_real, mix_episodes, write_episode, Episode, GenerationPlan, MixMode,
    MixPolicy, Source, Store,
};
use quard_core::expert::{generate_episode, GeneratedEpisode};
use quard_core::task::{Skill, SpeedLevel, Split, TaskSpec};
use quard_core::QuardConfig;

fn new_store(dir: &std::path::Path, cfg: &QuardConfig) -> Store {
    Store::create(dir, &cfg.action_space, cfg.sim.rates).unwrap()
}

fn bases(cfg: &QuardConfig, n: usize) -> Vec<GeneratedEpisode> {
    let space = TaskSpec::seen_space(Skill::GoTo);
    (0..n as u64)
        .map(|s| generate_episode(&space[s as usize], s, cfg).unwrap())
        .collect()
}

#[test]
fn concurrent_writers_keep_every_episode() {
    let cfg = QuardConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let store = new_store(dir.path(), &cfg);
    let base = bases(&cfg, 8);
    std::thread::scope(|s| {
        for (w, g) in base.iter().enumerate() {
            let store = &store;
            s.spawn(move || {
                let mut writer = store.writer().unwrap();
                for i in 0..125 {
                    let mut e = g.episode.clone();
                    e.episode_id = format!("w{w}-{i:03}");
                    writer.write(&e, &g.frames).unwrap();
                }
                writer.finish().unwrap();
            });
        }
    });
    // single-episode shards committed from many threads at once
    std::thread::scope(|s| {
        for (w, g) in base.iter().enumerate() {
            let store = &store;
            s.spawn(move || {
                for i in 0..10 {
                    let mut e = g.episode.clone();
                    e.episode_id = format!("solo{w}-{i}");
                    write_episode(store, &e, &g.frames).unwrap();
                }
            });
        }
    });
    drop(store);

    let store = Store::open(dir.path()).unwrap();
    let m = store.manifest();
    assert_eq!(m.episodes, 1080);
    assert_eq!(m.shards.len(), 88);
    let eps = store.episodes().unwrap();
    let ids: HashSet<&str> = eps.iter().map(|e| e.episode_id.as_str()).collect();
    assert_eq!(ids.len(), 1080);
    for e in eps.iter().filter(|e| e.episode_id.starts_with('w')) {
        let w: usize = e.episode_id[1..2].parse().unwrap();
        let mut want = base[w].episode.clone();
        want.episode_id = e.episode_id.clone();
        assert_eq!(*e, want);
    }
    let leftovers = std::fs::read_dir(dir.path().join("shards"))
        .unwrap()
        .filter(|f| f.as_ref().unwrap().file_name().to_string_lossy().ends_with(".partial"))
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn trajectory_lengths_follow_task_difficulty() {
    let cfg = QuardConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let store = new_store(dir.path(), &cfg);
    let plan = GenerationPlan::per_skill(&[Skill::Distinguish, Skill::GoTo, Skill::Unload], 200);
    let summary = collect(&store, &plan, 17, &cfg).unwrap();
    assert_eq!(summary.written, 600);
    let r = compute_stats(&store).unwrap();
    let mean = |s: Skill| r.per_task[&s].mean_len;
    assert!(mean(Skill::Distinguish) < mean(Skill::GoTo), "{}", r.to_table());
    assert!(mean(Skill::GoTo) < mean(Skill::Unload), "{}", r.to_table());
    for &level in SpeedLevel::ALL {
        assert!((r.speed_share[&level] - 1.0 / 3.0).abs() <= 0.02);
    }
}

fn fakes(source: Source, n: usize, template: &Episode) -> Vec<Episode> {
    (0..n)
        .map(|i| {
            let mut e = template.clone();
            e.episode_id = format!("{source}-{i}");
            e.source = source;
            e
        })
        .collect()
}

#[test]
fn mixing_regimes_realize_their_ratios() {
    let cfg = QuardConfig::default();
    let template = bases(&cfg, 1).remove(0).episode;
    for (sim, real) in [(0, 30), (256, 30), (2560, 30)] {
        let pools = (fakes(Source::Sim, 2560, &template), fakes(Source::Real, 30, &template));
        let target = sim as f64 / (sim + real) as f64;

        let out: Vec<Episode> = mix_episodes(MixPolicy::exhaustive(sim, real), pools.0.clone(), pools.1.clone(), 4)
            .unwrap()
            .collect();
        let got = out.iter().filter(|e| e.source == Source::Sim).count();
        assert_eq!(out.len(), sim + real);
        assert!((got as f64 / out.len() as f64 - target).abs() <= 0.01);
        let unique: HashSet<&str> = out.iter().map(|e| e.episode_id.as_str()).collect();
        assert_eq!(unique.len(), out.len());

        let policy = MixPolicy {
            sim_count: sim,
            real_count: real,
            mode: MixMode::WeightedStream,
        };
        let n = 10 * policy.pass_len();
        let out: Vec<Episode> = mix_episodes(policy, pools.0, pools.1, 4).unwrap().take(n).collect();
        let got = out.iter().filter(|e| e.source == Source::Sim).count();
        assert!((got as f64 / n as f64 - target).abs() <= 0.01);
        if sim == 0 {
            assert_eq!(got, 0);
        }
    }
}

#[test]
fn exported_real_episodes_import_unchanged() {
    let cfg = QuardConfig::default();
    let (src_dir, export_dir, dst_dir) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    let src = new_store(src_dir.path(), &cfg);
    let plan = GenerationPlan {
        entries: vec![quard_core::dataset::PlanEntry {
            skill: Skill::GoTo,
            split: Split::SeenReal,
            count: 6,
        }],
    };
    collect(&src, &plan, 3, &cfg).unwrap();
    let original = src.episodes().unwrap();
    for e in &original {
        assert_eq!(e.source, Source::Real);
        export_episode(&src, e, export_dir.path()).unwrap();
    }

    let dst = new_store(dst_dir.path(), &cfg);
    let report = import_real(export_dir.path(), &dst).unwrap();
    assert_eq!(report.count(), 6);
    assert!(report.skipped.is_empty());
    let imported = dst.episodes().unwrap();
    assert_eq!(imported.len(), original.len());
    for a in &imported {
        let folder = a.episode_id.strip_prefix("real-import-").unwrap();
        let b = original.iter().find(|e| e.episode_id == folder).unwrap();
        assert_eq!(a.source, Source::Real);
        assert_eq!(a.task.split, Split::SeenReal);
        let ta: Vec<_> = a.steps.iter().map(|s| (s.tokens, s.frame.clone())).collect();
        let tb: Vec<_> = b.steps.iter().map(|s| (s.tokens, s.frame.clone())).collect();
        assert_eq!(ta, tb);
        assert_eq!(a.outcome.status(), b.outcome.status());
    }

    let again = import_real(export_dir.path(), &dst).unwrap();
    assert_eq!((again.count(), again.skipped.len()), (0, 6));
    assert_eq!(Store::open(dst_dir.path()).unwrap().manifest().episodes, 6);
}
