//! Schematic first-person raster: flat sky and ground with entity bounding
//! boxes projected through a pinhole camera and filled in painter's order.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scene::{Domain, Entity, EntityKind, Shape, BAR_POST};
use super::world::WorldState;
use crate::task::{Color, TunnelSection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub hfov_deg: f64,
    /// Camera offset ahead of the robot center (m).
    pub camera_forward: f64,
    /// Camera offset above the realized body height (m).
    pub camera_above_body: f64,
    pub near: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 64,
            height: 48,
            hfov_deg: 69.0,
            camera_forward: 0.2,
            camera_above_body: 0.05,
            near: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl RenderConfig {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        let fx = (self.width as f64 / 2.0) / (self.hfov_deg.to_radians() / 2.0).tan();
        CameraIntrinsics {
            width: self.width,
            height: self.height,
            fx,
            fy: fx,
            cx: self.width as f64 / 2.0,
            cy: self.height as f64 / 2.0,
        }
    }
}

/// Row-major RGB raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Observation {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take((width * height * 3) as usize)
            .collect();
        Observation { width, height, pixels }
    }

    pub fn pixel(&self, u: u32, v: u32) -> [u8; 3] {
        let i = ((v * self.width + u) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    fn set(&mut self, u: u32, v: u32, rgb: [u8; 3]) {
        let i = ((v * self.width + u) * 3) as usize;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn count_color(&self, rgb: [u8; 3]) -> usize {
        self.pixels.chunks_exact(3).filter(|p| *p == rgb).count()
    }

    /// Binary PPM (P6) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write_ppm<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&self.to_ppm())
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Observation, String> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("truncated PPM header".into());
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P6" {
            return Err(format!("unsupported PPM magic `{}`", fields[0]));
        }
        let parse = |s: &str| s.parse::<u32>().map_err(|e| format!("bad PPM header: {e}"));
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval != 255 {
            return Err(format!("unsupported PPM maxval {maxval}"));
        }
        pos += 1;
        let len = (width * height * 3) as usize;
        let data = bytes
            .get(pos..pos + len)
            .ok_or_else(|| "truncated PPM data".to_string())?;
        Ok(Observation {
            width,
            height,
            pixels: data.to_vec(),
        })
    }

    /// SHA-256 of the PPM encoding, lowercase hex.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_ppm()))
    }

    /// Mean color over a `cols × rows` grid of blocks, row-major, RGB
    /// interleaved.
    pub fn pooled(&self, cols: u32, rows: u32) -> Vec<f32> {
        let mut out = vec![0f32; (cols * rows * 3) as usize];
        let mut counts = vec![0u32; (cols * rows) as usize];
        for v in 0..self.height {
            let br = (v * rows / self.height).min(rows - 1);
            for u in 0..self.width {
                let bc = (u * cols / self.width).min(cols - 1);
                let b = (br * cols + bc) as usize;
                let p = self.pixel(u, v);
                for k in 0..3 {
                    out[b * 3 + k] += p[k] as f32;
                }
                counts[b] += 1;
            }
        }
        for (b, &n) in counts.iter().enumerate() {
            for k in 0..3 {
                out[b * 3 + k] /= n.max(1) as f32;
            }
        }
        out
    }
}

pub const SIM_SKY: [u8; 3] = [150, 190, 230];
pub const SIM_GROUND: [u8; 3] = [120, 110, 95];
pub const REAL_SKY: [u8; 3] = [178, 180, 176];
pub const REAL_GROUND: [u8; 3] = [98, 102, 108];

fn letter_mark(letter: char) -> [u8; 3] {
    const MARKS: [[u8; 3]; 8] = [
        [20, 20, 20],
        [150, 75, 0],
        [0, 120, 120],
        [120, 0, 120],
        [200, 0, 80],
        [0, 150, 0],
        [0, 60, 160],
        [160, 160, 0],
    ];
    let i = (letter as u32).wrapping_sub('a' as u32) as usize;
    MARKS[i % MARKS.len()]
}

type V3 = [f64; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

struct Camera {
    pos: V3,
    fwd: V3,
    left: V3,
    up: V3,
    k: CameraIntrinsics,
    near: f64,
}

impl Camera {
    fn new(state: &WorldState, cfg: &RenderConfig) -> Camera {
        let r = state.robot;
        let (sy, cy) = r.yaw.sin_cos();
        let (sp, cp) = state.body.phi.sin_cos();
        Camera {
            pos: [
                r.x + cfg.camera_forward * cy,
                r.y + cfg.camera_forward * sy,
                state.body.h_z + cfg.camera_above_body,
            ],
            fwd: [cy * cp, sy * cp, sp],
            left: [-sy, cy, 0.0],
            up: [-cy * sp, -sy * sp, cp],
            k: cfg.intrinsics(),
            near: cfg.near,
        }
    }

    fn to_cam(&self, p: V3) -> V3 {
        let d = [p[0] - self.pos[0], p[1] - self.pos[1], p[2] - self.pos[2]];
        [dot(d, self.fwd), dot(d, self.left), dot(d, self.up)]
    }

    fn project_cam(&self, c: V3) -> (f64, f64) {
        (self.k.cx - self.k.fx * c[1] / c[0], self.k.cy - self.k.fy * c[2] / c[0])
    }

    /// Screen-space bounds of a box given its eight corners (bottom four then
    /// top four), clipping edges against the near plane.
    fn project_box(&self, corners: &[V3; 8]) -> Option<[f64; 4]> {
        let cam = corners.map(|p| self.to_cam(p));
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        let mut any = false;
        let mut add = |c: V3| {
            let (u, v) = self.project_cam(c);
            b[0] = b[0].min(u);
            b[1] = b[1].max(u);
            b[2] = b[2].min(v);
            b[3] = b[3].max(v);
            any = true;
        };
        for c in &cam {
            if c[0] >= self.near {
                add(*c);
            }
        }
        for i in 0..4 {
            for (a, bi) in [(i, (i + 1) % 4), (i + 4, (i + 1) % 4 + 4), (i, i + 4)] {
                let (p, q) = (cam[a], cam[bi]);
                if (p[0] >= self.near) != (q[0] >= self.near) {
                    let t = (self.near - p[0]) / (q[0] - p[0]);
                    add([self.near, p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])]);
                }
            }
        }
        any.then_some(b)
    }

    fn is_ground(&self, pu: f64, pv: f64) -> bool {
        let a = (self.k.cx - pu) / self.k.fx;
        let b = (self.k.cy - pv) / self.k.fy;
        self.fwd[2] + a * self.left[2] + b * self.up[2] < 0.0
    }
}

#[derive(Debug, Clone, Copy)]
enum Mask {
    Full,
    Ellipse,
    Triangle,
}

struct Drawable {
    depth: f64,
    corners: [V3; 8],
    color: [u8; 3],
    mask: Mask,
    mark: Option<[u8; 3]>,
}

fn box_corners(cx: f64, cy: f64, len_x: f64, len_y: f64, yaw: f64, z0: f64, z1: f64) -> [V3; 8] {
    let (s, c) = yaw.sin_cos();
    let (hx, hy) = (len_x / 2.0, len_y / 2.0);
    let xy = [(hx, hy), (-hx, hy), (-hx, -hy), (hx, -hy)].map(|(lx, ly)| (cx + c * lx - s * ly, cy + s * lx + c * ly));
    let mut out = [[0.0; 3]; 8];
    for i in 0..4 {
        out[i] = [xy[i].0, xy[i].1, z0];
        out[i + 4] = [xy[i].0, xy[i].1, z1];
    }
    out
}

fn drawables(entity: &Entity, camera: &Camera, out: &mut Vec<Drawable>) {
    let p = entity.pose;
    let color = entity.color.rgb();
    let mut push = |corners: [V3; 8], color: [u8; 3], mask: Mask, mark: Option<[u8; 3]>| {
        let mut c = [0.0; 3];
        for k in &corners {
            for i in 0..3 {
                c[i] += k[i] / 8.0;
            }
        }
        let depth = camera.to_cam(c)[0];
        out.push(Drawable {
            depth,
            corners,
            color,
            mask,
            mark,
        });
    };
    let [lx, ly, lz] = entity.dims;
    match entity.kind {
        EntityKind::CarriedBall => {}
        EntityKind::Tunnel => {
            for wall in entity.tunnel_walls() {
                push(
                    box_corners(wall.cx, wall.cy, lx, wall.half_y * 2.0, p.yaw, 0.0, lz),
                    color,
                    Mask::Full,
                    None,
                );
            }
            let roof = box_corners(p.x, p.y, lx, ly, p.yaw, lz * 0.8, lz);
            let mask = match entity.attrs.section {
                Some(TunnelSection::Triangle) => Mask::Triangle,
                _ => Mask::Full,
            };
            push(roof, color, mask, None);
        }
        EntityKind::Bar => {
            let top = entity.clearance() + 0.06;
            push(
                box_corners(p.x, p.y, lx, ly, p.yaw, entity.clearance(), top),
                color,
                Mask::Full,
                None,
            );
            for post in entity.bar_posts() {
                push(
                    box_corners(post.cx, post.cy, BAR_POST, BAR_POST, p.yaw, 0.0, top),
                    Color::Gray.rgb(),
                    Mask::Full,
                    None,
                );
            }
        }
        _ => {
            let mask = match entity.shape {
                Shape::Ball => Mask::Ellipse,
                _ => Mask::Full,
            };
            let mark = entity.attrs.letter.map(letter_mark);
            push(box_corners(p.x, p.y, lx, ly, p.yaw, 0.0, lz), color, mask, mark);
        }
    }
}

fn shade(rgb: [u8; 3], domain: Domain) -> [u8; 3] {
    match domain {
        Domain::Sim => rgb,
        Domain::Real => rgb.map(|c| (c as f64 * 0.88 + 10.0).round().min(255.0) as u8),
    }
}

/// Renders the forward camera view of `state`.
pub fn render_observation(state: &WorldState, cfg: &RenderConfig) -> Observation {
    let camera = Camera::new(state, cfg);
    let (sky, ground) = match state.domain {
        Domain::Sim => (SIM_SKY, SIM_GROUND),
        Domain::Real => (REAL_SKY, REAL_GROUND),
    };
    let mut img = Observation::filled(cfg.width, cfg.height, sky);
    for v in 0..cfg.height {
        for u in 0..cfg.width {
            if camera.is_ground(u as f64 + 0.5, v as f64 + 0.5) {
                img.set(u, v, ground);
            }
        }
    }

    let mut items = Vec::new();
    for e in &state.entities {
        drawables(e, &camera, &mut items);
    }
    // painter's order: far to near, stable for equal depth
    items.sort_by(|a, b| b.depth.total_cmp(&a.depth));

    let (w, h) = (cfg.width as f64, cfg.height as f64);
    for item in &items {
        let Some([u0, u1, v0, v1]) = camera.project_box(&item.corners) else {
            continue;
        };
        if u1 < 0.0 || v1 < 0.0 || u0 > w || v0 > h {
            continue;
        }
        let first_u = (u0 - 0.5).ceil().max(0.0) as u32;
        let last_u = (u1 - 0.5).floor().min(w - 1.0);
        let first_v = (v0 - 0.5).ceil().max(0.0) as u32;
        let last_v = (v1 - 0.5).floor().min(h - 1.0);
        if last_u < 0.0 || last_v < 0.0 {
            continue;
        }
        let (du, dv) = ((u1 - u0).max(1e-9), (v1 - v0).max(1e-9));
        let color = shade(item.color, state.domain);
        for v in first_v..=last_v as u32 {
            for u in first_u..=last_u as u32 {
                let s = (u as f64 + 0.5 - u0) / du;
                let t = (v as f64 + 0.5 - v0) / dv;
                let inside = match item.mask {
                    Mask::Full => true,
                    Mask::Ellipse => (s - 0.5).powi(2) + (t - 0.5).powi(2) <= 0.25,
                    Mask::Triangle => (s - 0.5).abs() <= 0.5 * t,
                };
                if !inside {
                    continue;
                }
                let in_mark = (0.3..=0.7).contains(&s) && (0.3..=0.7).contains(&t);
                match item.mark {
                    Some(mark) if in_mark => img.set(u, v, shade(mark, state.domain)),
                    _ => img.set(u, v, color),
                }
            }
        }
    }

    if state.domain == Domain::Real {
        let mut rng =
            ChaCha8Rng::seed_from_u64(state.noise_seed ^ (state.step_count as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        for p in img.pixels.iter_mut() {
            let n: i16 = rng.random_range(-6..=6);
            *p = (*p as i16 + n).clamp(0, 255) as u8;
        }
    }
    img
}
