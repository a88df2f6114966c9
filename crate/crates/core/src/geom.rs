//! Small 3-vector helpers and axis-aligned boxes.

use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Axis-aligned box given by its center and full edge lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub center: Vec3,
    pub dims: Vec3,
}

impl Aabb {
    pub fn new(center: Vec3, dims: Vec3) -> Self {
        Self { center, dims }
    }

    pub fn min(&self) -> Vec3 {
        [
            self.center[0] - 0.5 * self.dims[0],
            self.center[1] - 0.5 * self.dims[1],
            self.center[2] - 0.5 * self.dims[2],
        ]
    }

    pub fn max(&self) -> Vec3 {
        [
            self.center[0] + 0.5 * self.dims[0],
            self.center[1] + 0.5 * self.dims[1],
            self.center[2] + 0.5 * self.dims[2],
        ]
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let (lo, hi) = (self.min(), self.max());
        (0..3).all(|a| p[a] >= lo[a] && p[a] <= hi[a])
    }

    /// Slab test for the closed segment `a`–`b`. Touching a face or an edge
    /// counts as an intersection.
    ///
    /// Endpoints are put in a canonical order first so the result is exactly
    /// symmetric in `a` and `b`, rounding included.
    pub fn intersects_segment(&self, a: Vec3, b: Vec3) -> bool {
        let (p, q) = if a <= b { (a, b) } else { (b, a) };
        let (lo, hi) = (self.min(), self.max());
        let mut t_enter = 0.0f64;
        let mut t_exit = 1.0f64;
        for axis in 0..3 {
            let d = q[axis] - p[axis];
            if d == 0.0 {
                if p[axis] < lo[axis] || p[axis] > hi[axis] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / d;
            let mut t0 = (lo[axis] - p[axis]) * inv;
            let mut t1 = (hi[axis] - p[axis]) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter > t_exit {
                return false;
            }
        }
        true
    }
}
