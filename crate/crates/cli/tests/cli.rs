use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quard_core::dataset::Store;

fn quard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quard"))
        .args(args)
        .env_remove("QUARD_CONFIG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn collect_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = quard(&[
            "collect",
            "--task",
            "go_to",
            "--count",
            "10",
            "--seed",
            "7",
            "--out",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("Go to"));
    }
    assert_eq!(files(&a), files(&b));
    assert_eq!(Store::open(&a).unwrap().manifest().episodes, 10);
}

#[test]
fn zero_count_gives_an_empty_store() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty");
    let o = quard(&["collect", "--count", "0", "--seed", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(Store::open(&out).unwrap().manifest().episodes, 0);
    // a second collect into the same store is refused
    assert_eq!(
        code(&quard(&["collect", "--count", "0", "--seed", "1", "--out", s(&out)])),
        2
    );
}

#[test]
fn default_plan_is_the_scaled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("desk");
    assert_eq!(code(&quard(&["collect", "--seed", "2", "--out", s(&out)])), 0);
    let m = Store::open(&out).unwrap().manifest();
    let t = &m.tally.tasks;
    let got: Vec<u64> = ["distinguish", "go_to", "go_through", "go_avoid", "crawl", "unload"]
        .iter()
        .map(|k| t.get(*k).copied().unwrap_or(0))
        .collect();
    assert_eq!(got, [10, 75, 48, 63, 1, 52]);
    assert_eq!(m.tally.sources.get("real"), Some(&3));
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    for args in [
        vec![
            "eval", "--policy", "oracle", "--suite", "nope", "--seed", "1", "--out", out,
        ],
        vec![
            "eval", "--policy", "sarsa", "--suite", "go_to_5", "--seed", "1", "--out", out,
        ],
        vec![
            "eval",
            "--policy",
            "knn:/does/not/exist",
            "--suite",
            "go_to_5",
            "--seed",
            "1",
            "--out",
            out,
        ],
        vec!["collect", "--out", out],
        vec!["collect", "--task", "go_to", "--seed", "1", "--out", out],
        vec!["stats", "--store", "/does/not/exist"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&quard(&args)), 2, "{args:?}");
    }
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[knn]\nk = 0\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_quard"))
        .args([
            "eval", "--policy", "oracle", "--suite", "go_to_5", "--seed", "1", "--out", out,
        ])
        .env("QUARD_CONFIG", &bad)
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid config"));
}

fn csv_success_rate(csv: &str) -> f64 {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "success_rate").unwrap();
    csv.lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(col)
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn oracle_eval_is_accurate_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = quard(&[
            "eval",
            "--policy",
            "oracle",
            "--suite",
            "go_to_100",
            "--seed",
            "3",
            "--out",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv = std::fs::read_to_string(a.join("report.csv")).unwrap();
    assert!(csv_success_rate(&csv) >= 0.95, "{csv}");
    assert_eq!(files(&a), files(&b));
}

#[test]
fn knn_and_suite_files_work_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("train");
    assert_eq!(
        code(&quard(&[
            "collect",
            "--task",
            "go_to",
            "--count",
            "30",
            "--seed",
            "4",
            "--out",
            s(&store)
        ])),
        0
    );
    let suite = dir.path().join("suite.toml");
    assert_eq!(
        code(&quard(&[
            "inspect",
            "--suite",
            "go_to_10",
            "--seed",
            "9",
            "--out",
            s(&suite)
        ])),
        0
    );
    let policy = format!("knn:{}", s(&store));
    let o = quard(&[
        "eval",
        "--policy",
        &policy,
        "--suite",
        s(&suite),
        "--seed",
        "9",
        "--out",
        s(&dir.path().join("e")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let too_many = quard(&[
        "eval",
        "--policy",
        &policy,
        "--k",
        "99",
        "--suite",
        "go_to_3",
        "--seed",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&too_many), 2);
}

fn circle(svg: &str, class: &str) -> (f64, f64, f64) {
    let line = svg.lines().find(|l| l.contains(&format!("class=\"{class}\""))).unwrap();
    let attr = |name: &str| -> f64 {
        let start = line.find(&format!(" {name}=\"")).unwrap() + name.len() + 3;
        line[start..].split('"').next().unwrap().parse().unwrap()
    };
    (attr("cx"), attr("cy"), attr("r"))
}

#[test]
fn render_ends_inside_the_target_circle() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    assert_eq!(
        code(&quard(&[
            "collect",
            "--task",
            "go_to",
            "--count",
            "3",
            "--seed",
            "5",
            "--out",
            s(&store)
        ])),
        0
    );
    let episodes = Store::open(&store).unwrap().episodes().unwrap();
    let e = episodes.iter().find(|e| e.outcome.is_success()).unwrap();
    let (a, b) = (dir.path().join("ra"), dir.path().join("rb"));
    for out in [&a, &b] {
        let o = quard(&[
            "render",
            "--store",
            s(&store),
            "--episode",
            &e.episode_id,
            "--out",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(files(&a), files(&b));
    let svg = std::fs::read_to_string(a.join("trajectory.svg")).unwrap();
    let (tx, ty, r) = circle(&svg, "target");
    let (ex, ey, _) = circle(&svg, "end");
    assert!(((ex - tx).powi(2) + (ey - ty).powi(2)).sqrt() <= r + 0.5);
    assert_eq!(std::fs::read_dir(a.join("frames")).unwrap().count(), e.len());

    let empty = dir.path().join("empty");
    assert_eq!(
        code(&quard(&["collect", "--count", "0", "--seed", "1", "--out", s(&empty)])),
        0
    );
    assert_eq!(
        code(&quard(&[
            "render",
            "--store",
            s(&empty),
            "--episode",
            &e.episode_id,
            "--out",
            s(&a)
        ])),
        2
    );
}

#[test]
fn stats_inspect_and_import() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    assert_eq!(
        code(&quard(&[
            "collect",
            "--task",
            "go_to",
            "--count",
            "2",
            "--real",
            "--seed",
            "6",
            "--out",
            s(&store)
        ])),
        0
    );
    let o = quard(&["stats", "--store", s(&store), "--out", s(&dir.path().join("st"))]);
    assert_eq!(code(&o), 0);
    for f in ["stats.txt", "stats.json", "stats.svg"] {
        assert!(dir.path().join("st").join(f).is_file());
    }
    let o = quard(&["inspect", "--store", s(&store)]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("2 episodes"));

    let src = Store::open(&store).unwrap();
    let export = dir.path().join("export");
    for e in src.episodes().unwrap() {
        quard_core::dataset::export_episode(&src, &e, &export).unwrap();
    }
    let dst = dir.path().join("imported");
    let o = quard(&["import", "--from", s(&export), "--store", s(&dst)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("imported 2 episodes"));
    let id = Store::open(&dst).unwrap().episodes().unwrap()[0].episode_id.clone();
    let o = quard(&[
        "render",
        "--store",
        s(&dst),
        "--episode",
        &id,
        "--out",
        s(&dir.path().join("r")),
    ]);
    assert_eq!(code(&o), 0);
    assert!(!dir.path().join("r/trajectory.svg").exists());
    let o = quard(&["inspect", "--store", s(&dst), "--episode", &id]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"source\": \"real\""));
}
