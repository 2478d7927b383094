use serde::{Deserialize, Serialize};

/// Planar pose: position in meters, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Pose2 { x, y, yaw }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }

    /// Signed angle from the heading to the point, in (-pi, pi].
    pub fn bearing_error(&self, x: f64, y: f64) -> f64 {
        wrap_angle((y - self.y).atan2(x - self.x) - self.yaw)
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    if w <= -std::f64::consts::PI {
        w + std::f64::consts::TAU
    } else {
        w
    }
}

/// Oriented rectangle on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub cx: f64,
    pub cy: f64,
    pub half_x: f64,
    pub half_y: f64,
    pub yaw: f64,
}

impl Rect {
    pub fn new(cx: f64, cy: f64, len_x: f64, len_y: f64, yaw: f64) -> Self {
        Rect {
            cx,
            cy,
            half_x: len_x / 2.0,
            half_y: len_y / 2.0,
            yaw,
        }
    }

    /// Point expressed in the rectangle's own frame.
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Euclidean distance from a point to the rectangle (0 inside).
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let (lx, ly) = self.to_local(x, y);
        let ex = (lx.abs() - self.half_x).max(0.0);
        let ey = (ly.abs() - self.half_y).max(0.0);
        ex.hypot(ey)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (lx, ly) = self.to_local(x, y);
        lx.abs() <= self.half_x && ly.abs() <= self.half_y
    }

    pub fn intersects_disc(&self, x: f64, y: f64, radius: f64) -> bool {
        self.distance(x, y) < radius
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.yaw.sin_cos();
        let pts = [
            (self.half_x, self.half_y),
            (-self.half_x, self.half_y),
            (-self.half_x, -self.half_y),
            (self.half_x, -self.half_y),
        ];
        pts.map(|(lx, ly)| (self.cx + c * lx - s * ly, self.cy + s * lx + c * ly))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn wraps_into_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.1 + 4.0 * PI) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rect_distance_and_rotation() {
        let r = Rect::new(1.0, 1.0, 2.0, 1.0, 0.0);
        assert_eq!(r.distance(1.0, 1.0), 0.0);
        assert!((r.distance(3.0, 1.0) - 1.0).abs() < 1e-12);
        let rot = Rect::new(0.0, 0.0, 2.0, 1.0, FRAC_PI_2);
        assert!(rot.contains(0.0, 0.9));
        assert!(!rot.contains(0.9, 0.0));
        assert!(rot.intersects_disc(0.6, 0.0, 0.2));
        assert!(!rot.intersects_disc(0.8, 0.0, 0.2));
    }
}
