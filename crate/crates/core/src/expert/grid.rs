use serde::{Deserialize, Serialize};

use crate::sim::{Arena, EntityKind, Rect, WorldState};
use crate::task::{Skill, TaskSpec};

/// Cell coordinates `(column, row)`.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Meters per cell.
    pub resolution: f64,
    /// Obstacles grow by this radius before planning.
    pub inflation: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            resolution: 0.05,
            inflation: 0.25,
        }
    }
}

/// Row-major occupancy bitmask over a rectangular patch of the ground plane.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    resolution: f64,
    width: usize,
    height: usize,
    origin: (f64, f64),
    inflation: f64,
    bits: Vec<u64>,
}

impl OccupancyGrid {
    /// Empty grid whose cell `(0, 0)` has its lower-left corner at `origin`.
    pub fn new(width: usize, height: usize, resolution: f64, origin: (f64, f64)) -> Self {
        assert!(width > 0 && height > 0 && resolution > 0.0);
        OccupancyGrid {
            resolution,
            width,
            height,
            origin,
            inflation: 0.0,
            bits: vec![0; (width * height).div_ceil(64)],
        }
    }

    /// Grid covering the arena with every solid inflated.
    pub fn from_rects(arena: &Arena, rects: &[Rect], cfg: &GridConfig) -> Self {
        let width = ((arena.max_x - arena.min_x) / cfg.resolution).round() as usize;
        let height = ((arena.max_y - arena.min_y) / cfg.resolution).round() as usize;
        let mut grid = OccupancyGrid::new(width, height, cfg.resolution, (arena.min_x, arena.min_y));
        grid.inflation = cfg.inflation;
        for r in rects {
            grid.mark_rect(r, cfg.inflation);
        }
        grid
    }

    /// Planning grid for a task. Besides the physical solids, tunnels other
    /// than the target are sealed so plans never pass through them.
    pub fn for_task(state: &WorldState, task: &TaskSpec, cfg: &GridConfig) -> Self {
        let mut rects = Vec::new();
        for e in &state.entities {
            rects.extend(e.solids());
            if task.skill == Skill::GoThrough && e.kind == EntityKind::Tunnel && !e.is_target {
                rects.push(e.footprint());
            }
        }
        Self::from_rects(&state.arena, &rects, cfg)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    fn index(&self, (cx, cy): Cell) -> usize {
        cy * self.width + cx
    }

    pub fn contains(&self, (cx, cy): Cell) -> bool {
        cx < self.width && cy < self.height
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        let i = self.index(cell);
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, cell: Cell, occupied: bool) {
        let i = self.index(cell);
        if occupied {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<Cell> {
        let fx = ((x - self.origin.0) / self.resolution).floor();
        let fy = ((y - self.origin.1) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn center(&self, (cx, cy): Cell) -> (f64, f64) {
        (
            self.origin.0 + (cx as f64 + 0.5) * self.resolution,
            self.origin.1 + (cy as f64 + 0.5) * self.resolution,
        )
    }

    /// Marks every cell that overlaps the rectangle or whose center lies
    /// within `inflation` of it.
    pub fn mark_rect(&mut self, rect: &Rect, inflation: f64) {
        let reach = rect.half_x.hypot(rect.half_y) + inflation + self.resolution;
        let half_cell = self.resolution / std::f64::consts::SQRT_2;
        let lo = |v: f64, o: f64| (((v - o) / self.resolution).floor().max(0.0)) as usize;
        let (x0, y0) = (lo(rect.cx - reach, self.origin.0), lo(rect.cy - reach, self.origin.1));
        let x1 = (((rect.cx + reach - self.origin.0) / self.resolution).ceil() as usize).min(self.width);
        let y1 = (((rect.cy + reach - self.origin.1) / self.resolution).ceil() as usize).min(self.height);
        for cy in y0..y1 {
            for cx in x0..x1 {
                let (x, y) = self.center((cx, cy));
                let d = rect.distance(x, y);
                // a cell touching the rectangle has its center within half a diagonal
                if d < inflation || d <= half_cell && self.overlaps(rect, (cx, cy)) {
                    self.set((cx, cy), true);
                }
            }
        }
    }

    fn overlaps(&self, rect: &Rect, cell: Cell) -> bool {
        let (x, y) = self.center(cell);
        let h = self.resolution / 2.0;
        let cell_rect = Rect::new(x, y, 2.0 * h, 2.0 * h, 0.0);
        // separating axis test over both boxes' axes
        let axes = [
            (1.0, 0.0),
            (0.0, 1.0),
            rect.yaw.sin_cos(),
            (rect.yaw + std::f64::consts::FRAC_PI_2).sin_cos(),
        ];
        let project = |r: &Rect, (ax, ay): (f64, f64)| {
            let ps = r.corners().map(|(px, py)| px * ax + py * ay);
            let lo = ps.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        axes.iter().all(|&(s, c)| {
            let axis = (c, s);
            let (a0, a1) = project(rect, axis);
            let (b0, b1) = project(&cell_rect, axis);
            a0 < b1 && b0 < a1
        })
    }

    /// Octile distance in cells between two cells.
    pub fn octile(a: Cell, b: Cell) -> f64 {
        let dx = a.0.abs_diff(b.0) as f64;
        let dy = a.1.abs_diff(b.1) as f64;
        dx.max(dy) - dx.min(dy) + std::f64::consts::SQRT_2 * dx.min(dy)
    }

    /// 8-connected neighbors reachable from a free cell; a diagonal move
    /// needs both orthogonal cells free.
    pub fn neighbors(&self, cell: Cell) -> impl Iterator<Item = (Cell, bool)> + '_ {
        const DIRS: [(i64, i64); 8] = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)];
        DIRS.iter().filter_map(move |&(dx, dy)| {
            let n = self.offset(cell, dx, dy)?;
            if self.is_occupied(n) {
                return None;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal {
                let a = self.offset(cell, dx, 0)?;
                let b = self.offset(cell, 0, dy)?;
                if self.is_occupied(a) || self.is_occupied(b) {
                    return None;
                }
            }
            Some((n, diagonal))
        })
    }

    fn offset(&self, (cx, cy): Cell, dx: i64, dy: i64) -> Option<Cell> {
        let x = cx as i64 + dx;
        let y = cy as i64 + dy;
        (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height)
            .then_some((x as usize, y as usize))
    }

    /// ASCII dump, top row first: `#` occupied, `.` free.
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for cy in (0..self.height).rev() {
            for cx in 0..self.width {
                s.push(if self.is_occupied((cx, cy)) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }
}
