//! D* Lite (Koenig and Likhachev) over the same 8-connected grid as A*.
//!
//! The search runs backwards from the goal, so `g` holds cost-to-goal and
//! cell updates only repair the affected part of the tree.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::astar::{check_endpoint, PlanError, PlannedPath};
use super::grid::{Cell, OccupancyGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, f64);

impl Key {
    fn less(self, other: Key) -> bool {
        self.cmp_key(other) == Ordering::Less
    }

    fn cmp_key(self, other: Key) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.total_cmp(&other.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    key: Key,
    cell: Cell,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.cmp_key(self.key).then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Incremental planner handle.
#[derive(Debug, Clone)]
pub struct DStarLite {
    grid: OccupancyGrid,
    start: Cell,
    last: Cell,
    goal: Cell,
    km: f64,
    g: Vec<f64>,
    rhs: Vec<f64>,
    /// Current queue key per cell; heap entries with other keys are stale.
    queued: Vec<Option<Key>>,
    heap: BinaryHeap<Entry>,
}

const DIRS: [(i64, i64); 8] = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)];

impl DStarLite {
    pub fn new(grid: OccupancyGrid, start: Cell, goal: Cell) -> Result<Self, PlanError> {
        check_endpoint(&grid, "start", start)?;
        check_endpoint(&grid, "goal", goal)?;
        let n = grid.width() * grid.height();
        let mut planner = DStarLite {
            grid,
            start,
            last: start,
            goal,
            km: 0.0,
            g: vec![f64::INFINITY; n],
            rhs: vec![f64::INFINITY; n],
            queued: vec![None; n],
            heap: BinaryHeap::new(),
        };
        let gi = planner.idx(goal);
        planner.rhs[gi] = 0.0;
        let key = planner.key(goal);
        planner.push(goal, key);
        Ok(planner)
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    fn idx(&self, c: Cell) -> usize {
        c.1 * self.grid.width() + c.0
    }

    fn key(&self, c: Cell) -> Key {
        let i = self.idx(c);
        let m = self.g[i].min(self.rhs[i]);
        Key(m + OccupancyGrid::octile(self.start, c) + self.km, m)
    }

    fn push(&mut self, c: Cell, key: Key) {
        let i = self.idx(c);
        self.queued[i] = Some(key);
        self.heap.push(Entry { key, cell: c });
    }

    fn top(&mut self) -> Option<Entry> {
        while let Some(&e) = self.heap.peek() {
            if self.queued[self.idx(e.cell)] == Some(e.key) {
                return Some(e);
            }
            self.heap.pop();
        }
        None
    }

    fn neighbor(&self, (cx, cy): Cell, (dx, dy): (i64, i64)) -> Option<Cell> {
        let x = cx as i64 + dx;
        let y = cy as i64 + dy;
        (x >= 0 && y >= 0 && (x as usize) < self.grid.width() && (y as usize) < self.grid.height())
            .then_some((x as usize, y as usize))
    }

    /// Edge cost in cells; infinite when either end is occupied or a
    /// diagonal would cut a corner.
    fn cost(&self, a: Cell, b: Cell) -> f64 {
        let occ = |c: Cell| self.grid.is_occupied(c);
        if occ(a) || occ(b) {
            return f64::INFINITY;
        }
        if a.0 != b.0 && a.1 != b.1 {
            if occ((b.0, a.1)) || occ((a.0, b.1)) {
                return f64::INFINITY;
            }
            std::f64::consts::SQRT_2
        } else {
            1.0
        }
    }

    fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        DIRS.iter().filter_map(move |&d| self.neighbor(c, d))
    }

    fn update_vertex(&mut self, u: Cell) {
        let i = self.idx(u);
        if u != self.goal {
            let best = self
                .neighbors(u)
                .map(|s| self.cost(u, s) + self.g[self.idx(s)])
                .fold(f64::INFINITY, f64::min);
            self.rhs[i] = best;
        }
        self.queued[i] = None;
        if self.g[i] != self.rhs[i] {
            let key = self.key(u);
            self.push(u, key);
        }
    }

    fn compute_shortest_path(&mut self) {
        loop {
            let si = self.idx(self.start);
            let Some(top) = self.top() else { break };
            let start_key = self.key(self.start);
            if !top.key.less(start_key) && self.rhs[si] == self.g[si] {
                break;
            }
            let u = top.cell;
            let ui = self.idx(u);
            let k_new = self.key(u);
            if top.key.less(k_new) {
                self.push(u, k_new);
            } else if self.g[ui] > self.rhs[ui] {
                self.g[ui] = self.rhs[ui];
                self.queued[ui] = None;
                let preds: Vec<Cell> = self.neighbors(u).collect();
                for p in preds {
                    self.update_vertex(p);
                }
            } else {
                self.g[ui] = f64::INFINITY;
                let mut cells: Vec<Cell> = self.neighbors(u).collect();
                cells.push(u);
                for p in cells {
                    self.update_vertex(p);
                }
            }
        }
    }

    /// Current best path from the start.
    pub fn plan(&mut self) -> Result<PlannedPath, PlanError> {
        self.compute_shortest_path();
        if self.g[self.idx(self.start)].is_infinite() {
            return Err(PlanError::NoPath {
                start: self.start,
                goal: self.goal,
            });
        }
        let mut cells = vec![self.start];
        let mut cur = self.start;
        while cur != self.goal {
            let next = self
                .neighbors(cur)
                .map(|s| (self.cost(cur, s) + self.g[self.idx(s)], s))
                .filter(|(c, _)| c.is_finite())
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, s)| s)
                .ok_or(PlanError::NoPath {
                    start: self.start,
                    goal: self.goal,
                })?;
            cells.push(next);
            cur = next;
            if cells.len() > self.g.len() {
                return Err(PlanError::NoPath {
                    start: self.start,
                    goal: self.goal,
                });
            }
        }
        Ok(PlannedPath::from_cells(&self.grid, cells))
    }

    /// Changes cell occupancy and repairs the affected vertices.
    pub fn update_cells(&mut self, changes: &[(Cell, bool)]) {
        for &(cell, occupied) in changes {
            if !self.grid.contains(cell) || self.grid.is_occupied(cell) == occupied {
                continue;
            }
            self.grid.set(cell, occupied);
            let mut touched: Vec<Cell> = self.neighbors(cell).collect();
            touched.push(cell);
            for c in touched {
                self.update_vertex(c);
            }
        }
    }

    /// Moves the start (the robot advanced along the path).
    pub fn move_start(&mut self, start: Cell) -> Result<(), PlanError> {
        check_endpoint(&self.grid, "start", start)?;
        self.km += OccupancyGrid::octile(self.last, start);
        self.last = start;
        self.start = start;
        Ok(())
    }
}

/// Starts an incremental planner on a snapshot of `grid`.
pub fn plan_dstar_lite(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<DStarLite, PlanError> {
    DStarLite::new(grid.clone(), start, goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expert::astar::plan_astar;

    #[test]
    fn static_grid_matches_astar() {
        let mut g = OccupancyGrid::new(12, 9, 0.05, (0.0, 0.0));
        for y in 0..7 {
            g.set((5, y), true);
        }
        let mut d = plan_dstar_lite(&g, (0, 0), (11, 0)).unwrap();
        assert_eq!(d.plan().unwrap().cost, plan_astar(&g, (0, 0), (11, 0)).unwrap().cost);
    }

    #[test]
    fn blocking_then_unblocking() {
        let g = OccupancyGrid::new(10, 10, 1.0, (0.0, 0.0));
        let mut d = plan_dstar_lite(&g, (0, 5), (9, 5)).unwrap();
        let before = d.plan().unwrap().cost;
        let wall: Vec<(Cell, bool)> = (0..10).map(|y| ((5, y), true)).collect();
        d.update_cells(&wall);
        assert!(matches!(d.plan(), Err(PlanError::NoPath { .. })));
        d.update_cells(&[((5, 2), false)]);
        let detour = d.plan().unwrap().cost;
        assert_eq!(detour, plan_astar(d.grid(), (0, 5), (9, 5)).unwrap().cost);
        assert!(detour > before);
    }

    #[test]
    fn moving_start_keeps_optimality() {
        let mut g = OccupancyGrid::new(15, 15, 1.0, (0.0, 0.0));
        for x in 3..12 {
            g.set((x, 7), true);
        }
        let mut d = plan_dstar_lite(&g, (7, 0), (7, 14)).unwrap();
        let path = d.plan().unwrap();
        d.move_start(path.cells[3]).unwrap();
        d.update_cells(&[((2, 7), true), ((12, 7), true)]);
        let p = d.plan().unwrap();
        assert_eq!(p.cells[0], path.cells[3]);
        assert_eq!(p.cost, plan_astar(d.grid(), path.cells[3], (7, 14)).unwrap().cost);
    }
}
