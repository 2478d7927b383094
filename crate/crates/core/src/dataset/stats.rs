//! Corpus statistics: per-task counts and trajectory lengths, gait, speed
//! and source shares.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::episode::{Episode, Source};
use super::store::{Store, StoreError};
use crate::task::{Gait, Skill, SpeedLevel};

/// Histogram bin width in command ticks.
pub const HIST_BIN: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskStats {
    pub episodes: usize,
    pub successes: usize,
    /// Lengths are over episodes with at least one step.
    pub mean_len: f64,
    pub median_len: f64,
    pub q1_len: f64,
    pub q3_len: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Counts of lengths in `[i*HIST_BIN, (i+1)*HIST_BIN)`.
    pub histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StatsReport {
    pub episodes: usize,
    pub per_task: BTreeMap<Skill, TaskStats>,
    pub gait_share: BTreeMap<Gait, f64>,
    pub speed_share: BTreeMap<SpeedLevel, f64>,
    pub source_share: BTreeMap<Source, f64>,
    pub outcomes: BTreeMap<String, usize>,
}

/// Linear-interpolated quantile of sorted values.
fn quantile(sorted: &[usize], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] as f64 * (1.0 - frac) + sorted[hi] as f64 * frac
}

fn shares<K: Ord + Copy>(keys: impl Iterator<Item = K>, n: usize) -> BTreeMap<K, f64> {
    let mut counts = BTreeMap::new();
    for k in keys {
        *counts.entry(k).or_insert(0usize) += 1;
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect()
}

pub fn stats_from_episodes(episodes: &[Episode]) -> StatsReport {
    let n = episodes.len();
    if n == 0 {
        return StatsReport::default();
    }
    let mut per_task = BTreeMap::new();
    for &skill in Skill::ALL {
        let eps: Vec<&Episode> = episodes.iter().filter(|e| e.task.skill == skill).collect();
        if eps.is_empty() {
            continue;
        }
        let mut lens: Vec<usize> = eps.iter().map(|e| e.len()).filter(|&l| l > 0).collect();
        lens.sort_unstable();
        let mut histogram = vec![0usize; lens.last().map_or(0, |m| m / HIST_BIN + 1)];
        for &l in &lens {
            histogram[l / HIST_BIN] += 1;
        }
        let mean_len = if lens.is_empty() {
            0.0
        } else {
            lens.iter().sum::<usize>() as f64 / lens.len() as f64
        };
        per_task.insert(
            skill,
            TaskStats {
                episodes: eps.len(),
                successes: eps.iter().filter(|e| e.outcome.is_success()).count(),
                mean_len,
                median_len: quantile(&lens, 0.5),
                q1_len: quantile(&lens, 0.25),
                q3_len: quantile(&lens, 0.75),
                min_len: lens.first().copied().unwrap_or(0),
                max_len: lens.last().copied().unwrap_or(0),
                histogram,
            },
        );
    }
    let mut outcomes = BTreeMap::new();
    for e in episodes {
        *outcomes.entry(e.outcome.label().to_string()).or_insert(0) += 1;
    }
    StatsReport {
        episodes: n,
        per_task,
        gait_share: shares(episodes.iter().map(|e| e.task.gait), n),
        speed_share: shares(episodes.iter().map(|e| e.task.speed), n),
        source_share: shares(episodes.iter().map(|e| e.source), n),
        outcomes,
    }
}

/// Statistics over every episode in a store. An empty store gives an empty report.
pub fn compute_stats(store: &Store) -> Result<StatsReport, StoreError> {
    Ok(stats_from_episodes(&store.episodes()?))
}

fn share_line<K: std::fmt::Display>(label: &str, m: &BTreeMap<K, f64>) -> String {
    let parts: Vec<String> = m.iter().map(|(k, v)| format!("{k} {:.1}%", v * 100.0)).collect();
    format!("{label:<8}{}\n", parts.join("  "))
}

impl StatsReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<14}{:>9}{:>9}{:>10}{:>8}{:>6}{:>6}",
            "task", "episodes", "success", "mean_len", "median", "min", "max"
        );
        for (skill, t) in &self.per_task {
            let _ = writeln!(
                s,
                "{:<14}{:>9}{:>9}{:>10.2}{:>8.1}{:>6}{:>6}",
                skill.title(),
                t.episodes,
                t.successes,
                t.mean_len,
                t.median_len,
                t.min_len,
                t.max_len
            );
        }
        let _ = writeln!(s, "{:<14}{:>9}", "total", self.episodes);
        if self.episodes > 0 {
            s.push('\n');
            s += &share_line("gait", &self.gait_share);
            s += &share_line("speed", &self.speed_share);
            s += &share_line("source", &self.source_share);
            let parts: Vec<String> = self.outcomes.iter().map(|(k, v)| format!("{k} {v}")).collect();
            let _ = writeln!(s, "{:<8}{}", "outcome", parts.join("  "));
        }
        s
    }

    /// Two panels: episode counts per task and a box plot of trajectory
    /// lengths, followed by gait and speed share bars.
    pub fn to_svg(&self) -> String {
        const W: f64 = 720.0;
        const PANEL_H: f64 = 220.0;
        const LEFT: f64 = 110.0;
        let rows: Vec<(&Skill, &TaskStats)> = self.per_task.iter().collect();
        let row_h = 28.0;
        let h = 60.0 + PANEL_H + 140.0;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="10" y="20" font-size="14">{} episodes</text>"#,
            self.episodes
        );

        let max_count = rows.iter().map(|(_, t)| t.episodes).max().unwrap_or(1).max(1) as f64;
        let max_len = rows.iter().map(|(_, t)| t.max_len).max().unwrap_or(1).max(1) as f64;
        let bar_w = 230.0;
        let box_x = LEFT + bar_w + 120.0;
        let box_w = W - box_x - 20.0;
        let _ = writeln!(s, r#"<text x="{LEFT}" y="45">episodes</text>"#);
        let _ = writeln!(
            s,
            r#"<text x="{box_x}" y="45">trajectory length (ticks, 0 to {max_len})</text>"#
        );
        for (i, (skill, t)) in rows.iter().enumerate() {
            let y = 55.0 + i as f64 * row_h;
            let cy = y + row_h / 2.0;
            let bw = bar_w * t.episodes as f64 / max_count;
            let _ = writeln!(s, r#"<text x="10" y="{:.1}">{}</text>"#, cy + 4.0, skill.title());
            let _ = writeln!(
                s,
                r##"<rect x="{LEFT}" y="{:.1}" width="{bw:.1}" height="{:.1}" fill="#4c72b0"/>"##,
                y + 4.0,
                row_h - 8.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
                LEFT + bw + 4.0,
                cy + 4.0,
                t.episodes
            );
            let px = |v: f64| box_x + box_w * v / max_len;
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{cy:.1}" x2="{:.1}" y2="{cy:.1}" stroke="black"/>"#,
                px(t.min_len as f64),
                px(t.max_len as f64)
            );
            let _ = writeln!(
                s,
                r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#dd8452" stroke="black"/>"##,
                px(t.q1_len),
                y + 6.0,
                (px(t.q3_len) - px(t.q1_len)).max(1.0),
                row_h - 12.0
            );
            let _ = writeln!(
                s,
                r#"<line x1="{m:.1}" y1="{:.1}" x2="{m:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
                y + 6.0,
                y + row_h - 6.0,
                m = px(t.median_len)
            );
        }

        let palette = ["#4c72b0", "#dd8452", "#55a868", "#c44e52"];
        let mut stacked = |label: &str, y: f64, parts: Vec<(String, f64)>| {
            let _ = writeln!(s, r#"<text x="10" y="{:.1}">{label}</text>"#, y + 14.0);
            let mut x = LEFT;
            let total = W - LEFT - 20.0;
            for (i, (name, share)) in parts.iter().enumerate() {
                let w = total * share;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="20" fill="{}"/>"#,
                    palette[i % palette.len()]
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" fill="white">{name} {:.1}%</text>"#,
                    x + 4.0,
                    y + 14.0,
                    share * 100.0
                );
                x += w;
            }
        };
        let base = 60.0 + PANEL_H;
        stacked(
            "gait",
            base + 20.0,
            self.gait_share.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        );
        stacked(
            "speed",
            base + 55.0,
            self.speed_share.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        );
        stacked(
            "source",
            base + 90.0,
            self.source_share.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        );
        s.push_str("</svg>\n");
        s
    }
}
