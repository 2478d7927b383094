use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grid::{Cell, OccupancyGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no path from {start:?} to {goal:?}")]
    NoPath { start: Cell, goal: Cell },
    #[error("{which} cell {cell:?} is occupied")]
    Blocked { which: &'static str, cell: Cell },
    #[error("{which} point ({x:.3}, {y:.3}) is outside the grid")]
    OutsideGrid { which: &'static str, x: f64, y: f64 },
}

/// Grid path from start to goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub cells: Vec<Cell>,
    /// Cell centers in meters.
    pub waypoints: Vec<(f64, f64)>,
    /// Sum of step lengths in meters.
    pub cost: f64,
}

impl PlannedPath {
    /// Builds a path from consecutive 8-connected cells. The cost is summed
    /// from move counts so equal-length paths compare bit-exactly.
    pub fn from_cells(grid: &OccupancyGrid, cells: Vec<Cell>) -> Self {
        let (mut straight, mut diagonal) = (0u64, 0u64);
        for w in cells.windows(2) {
            let dx = w[0].0.abs_diff(w[1].0);
            let dy = w[0].1.abs_diff(w[1].1);
            debug_assert!(dx <= 1 && dy <= 1 && dx + dy > 0);
            if dx + dy == 2 {
                diagonal += 1;
            } else {
                straight += 1;
            }
        }
        let cost = (straight as f64 + diagonal as f64 * std::f64::consts::SQRT_2) * grid.resolution();
        let waypoints = cells.iter().map(|&c| grid.center(c)).collect();
        PlannedPath { cells, waypoints, cost }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `x,y` rows with a header, for debugging plans externally.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y\n");
        for (x, y) in &self.waypoints {
            s.push_str(&format!("{x},{y}\n"));
        }
        s
    }
}

/// Min-heap entry ordered by `(f, h, cell)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    h: f64,
    cell: Cell,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.h.total_cmp(&self.h))
            .then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn check_endpoint(grid: &OccupancyGrid, which: &'static str, cell: Cell) -> Result<(), PlanError> {
    if !grid.contains(cell) {
        let (x, y) = (cell.0 as f64, cell.1 as f64);
        return Err(PlanError::OutsideGrid { which, x, y });
    }
    if grid.is_occupied(cell) {
        return Err(PlanError::Blocked { which, cell });
    }
    Ok(())
}

/// Minimum-cost 8-connected path using the octile heuristic.
pub fn plan_astar(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<PlannedPath, PlanError> {
    check_endpoint(grid, "start", start)?;
    check_endpoint(grid, "goal", goal)?;
    let n = grid.width() * grid.height();
    let idx = |c: Cell| c.1 * grid.width() + c.0;
    let mut g = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[idx(start)] = 0.0;
    let h0 = OccupancyGrid::octile(start, goal);
    open.push(Open {
        f: h0,
        h: h0,
        cell: start,
    });

    while let Some(Open { cell, .. }) = open.pop() {
        if closed[idx(cell)] {
            continue;
        }
        if cell == goal {
            let mut cells = vec![goal];
            let mut cur = goal;
            while let Some(p) = parent[idx(cur)] {
                cells.push(p);
                cur = p;
            }
            cells.reverse();
            return Ok(PlannedPath::from_cells(grid, cells));
        }
        closed[idx(cell)] = true;
        let gc = g[idx(cell)];
        for (next, diagonal) in grid.neighbors(cell) {
            let ni = idx(next);
            if closed[ni] {
                continue;
            }
            let step = if diagonal { std::f64::consts::SQRT_2 } else { 1.0 };
            let cand = gc + step;
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = Some(cell);
                let h = OccupancyGrid::octile(next, goal);
                open.push(Open {
                    f: cand + h,
                    h,
                    cell: next,
                });
            }
        }
    }
    Err(PlanError::NoPath { start, goal })
}

/// A* between two points given in meters.
pub fn plan_astar_world(grid: &OccupancyGrid, start: (f64, f64), goal: (f64, f64)) -> Result<PlannedPath, PlanError> {
    let s = grid.cell_of(start.0, start.1).ok_or(PlanError::OutsideGrid {
        which: "start",
        x: start.0,
        y: start.1,
    })?;
    let g = grid.cell_of(goal.0, goal.1).ok_or(PlanError::OutsideGrid {
        which: "goal",
        x: goal.0,
        y: goal.1,
    })?;
    plan_astar(grid, s, g)
}
