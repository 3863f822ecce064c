//! Footprints, overlap tests, and the pinhole camera.

use serde::{Deserialize, Serialize};

use crate::math::{cos, sin};
use crate::types::Pose;

/// Axis-aligned rectangle on the table plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn centered(c: [f64; 2], half: [f64; 2]) -> Self {
        Self { min: [c[0] - half[0], c[1] - half[1]], max: [c[0] + half[0], c[1] + half[1]] }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        r.min[0] >= self.min[0] && r.max[0] <= self.max[0] && r.min[1] >= self.min[1] && r.max[1] <= self.max[1]
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    fn overlap_extents(&self, o: &Rect) -> [f64; 2] {
        [
            self.max[0].min(o.max[0]) - self.min[0].max(o.min[0]),
            self.max[1].min(o.max[1]) - self.min[1].max(o.min[1]),
        ]
    }

    /// Penetration depth: the smaller of the two axis overlaps, or 0.
    pub fn penetration(&self, o: &Rect) -> f64 {
        let [ox, oy] = self.overlap_extents(o);
        if ox <= 0.0 || oy <= 0.0 {
            0.0
        } else {
            ox.min(oy)
        }
    }

    pub fn intersection_area(&self, o: &Rect) -> f64 {
        let [ox, oy] = self.overlap_extents(o);
        if ox <= 0.0 || oy <= 0.0 {
            0.0
        } else {
            ox * oy
        }
    }

    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.min[0], self.max[0]), p[1].clamp(self.min[1], self.max[1])]
    }
}

/// Half extents of the axis-aligned hull of a yawed box.
pub fn rotated_half_xy(half: [f64; 3], yaw: f64) -> [f64; 2] {
    let (c, s) = (cos(yaw).abs(), sin(yaw).abs());
    [c * half[0] + s * half[1], s * half[0] + c * half[1]]
}

pub fn footprint(pose: &Pose, half: [f64; 3]) -> Rect {
    Rect::centered(pose.xy(), rotated_half_xy(half, pose.yaw))
}

/// Fraction of `upper`'s footprint that lies over `lower`.
pub fn overlap_ratio(upper: &Rect, lower: &Rect) -> f64 {
    let a = upper.area();
    if a <= 0.0 {
        return 0.0;
    }
    upper.intersection_area(lower) / a
}

/// Top-down pinhole camera looking along −z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub position: [f64; 3],
}

impl Default for Camera {
    fn default() -> Self {
        Self { width: 640, height: 480, fx: 600.0, fy: 600.0, cx: 320.0, cy: 240.0, position: [0.5, 0.5, 1.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BehindCamera;

impl Camera {
    /// Pixel coordinates of a world point, or `None` at non-positive depth.
    pub fn project(&self, p: [f64; 3]) -> Option<[f64; 2]> {
        let d = self.position[2] - p[2];
        if d <= 0.0 {
            return None;
        }
        Some([
            self.cx + self.fx * (p[0] - self.position[0]) / d,
            self.cy - self.fy * (p[1] - self.position[1]) / d,
        ])
    }
}

/// Projects the eight corners of the object's axis-aligned hull and returns
/// their pixel hull clamped to the image.
pub fn project_bbox(pose: &Pose, half: [f64; 3], cam: &Camera) -> Result<[f64; 4], BehindCamera> {
    let h = rotated_half_xy(half, pose.yaw);
    let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                let corner = [pose.x + sx * h[0], pose.y + sy * h[1], pose.z + sz * half[2]];
                let [u, v] = cam.project(corner).ok_or(BehindCamera)?;
                bb[0] = bb[0].min(u);
                bb[1] = bb[1].min(v);
                bb[2] = bb[2].max(u);
                bb[3] = bb[3].max(v);
            }
        }
    }
    let (w, hgt) = (f64::from(cam.width) - 1.0, f64::from(cam.height) - 1.0);
    Ok([bb[0].clamp(0.0, w), bb[1].clamp(0.0, hgt), bb[2].clamp(0.0, w), bb[3].clamp(0.0, hgt)])
}
