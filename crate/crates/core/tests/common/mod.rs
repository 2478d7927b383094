#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use quard_core::expert::{Cell, OccupancyGrid};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const N: usize = 16;

pub fn random_grid(rng: &mut ChaCha8Rng, occupancy: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(N, N, 0.1, (0.0, 0.0));
    for y in 0..N {
        for x in 0..N {
            if rng.random_bool(occupancy) {
                g.set((x, y), true);
            }
        }
    }
    g
}

pub fn free_cell(g: &OccupancyGrid, rng: &mut ChaCha8Rng) -> Cell {
    loop {
        let c = (rng.random_range(0..N), rng.random_range(0..N));
        if !g.is_occupied(c) {
            return c;
        }
    }
}

/// Dijkstra over (straight, diagonal) move counts. Since sqrt(2) is
/// irrational the optimal pair is unique, so the oracle cost is exact.
pub fn dijkstra(g: &OccupancyGrid, start: Cell, goal: Cell) -> Option<f64> {
    let free =
        |x: i64, y: i64| x >= 0 && y >= 0 && x < N as i64 && y < N as i64 && !g.is_occupied((x as usize, y as usize));
    let value = |(s, d): (u64, u64)| s as f64 + d as f64 * std::f64::consts::SQRT_2;
    let mut best = vec![None::<(u64, u64)>; N * N];
    let mut heap = BinaryHeap::new();
    best[start.1 * N + start.0] = Some((0, 0));
    heap.push(Reverse((ordered(0.0), 0u64, 0u64, start)));
    while let Some(Reverse((_, s, d, c))) = heap.pop() {
        if best[c.1 * N + c.0] != Some((s, d)) {
            continue;
        }
        if c == goal {
            return Some(value((s, d)) * g.resolution());
        }
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (x, y) = (c.0 as i64 + dx, c.1 as i64 + dy);
                if !free(x, y) {
                    continue;
                }
                let diag = dx != 0 && dy != 0;
                if diag && !(free(c.0 as i64 + dx, c.1 as i64) && free(c.0 as i64, c.1 as i64 + dy)) {
                    continue;
                }
                let next = if diag { (s, d + 1) } else { (s + 1, d) };
                let n = (x as usize, y as usize);
                let slot = &mut best[n.1 * N + n.0];
                if slot.is_none_or(|old| value(next) < value(old)) {
                    *slot = Some(next);
                    heap.push(Reverse((ordered(value(next)), next.0, next.1, n)));
                }
            }
        }
    }
    None
}

pub fn ordered(x: f64) -> u64 {
    x.to_bits()
}
