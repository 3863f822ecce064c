//! Float helpers that work without `std`.

use core::f64::consts::PI;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_yaw(angle: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = libm::fmod(angle + PI, two_pi);
    if r <= 0.0 {
        r += two_pi;
    }
    r - PI
}

/// Signed shortest rotation taking `from` to `to`.
pub fn yaw_difference(to: f64, from: f64) -> f64 {
    normalize_yaw(to - from)
}

/// Rotates a planar vector by `angle` radians.
pub fn rotate2(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = (sin(angle), cos(angle));
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

pub fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    sqrt(dx * dx + dy * dy)
}

pub fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    sqrt(dx * dx + dy * dy + dz * dz)
}

pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Snaps `x` to the nearest multiple of `grid`.
pub fn snap(x: f64, grid: f64) -> f64 {
    let k = round(x / grid);
    let inv = round(1.0 / grid);
    if libm::fabs(1.0 / grid - inv) < 1e-9 {
        k / inv
    } else {
        k * grid
    }
}
