//! Fixed-width point arithmetic.
//!
//! Geometric code works in d ∈ {2, 3}. Points are stored as `[f64; 3]` with
//! the third coordinate identically zero in two dimensions, so the same
//! routines serve both cases without allocation.

use std::cmp::Ordering;

pub type Vec3 = [f64; 3];

pub const ZERO: Vec3 = [0.0, 0.0, 0.0];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm_sq(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn dist_sq(a: Vec3, b: Vec3) -> f64 {
    norm_sq(sub(a, b))
}

#[inline]
pub fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    add(a, scale(sub(b, a), t))
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    if n == 0.0 {
        ZERO
    } else {
        scale(a, 1.0 / n)
    }
}

/// Mean of a nonempty point set.
pub fn centroid(points: &[Vec3]) -> Vec3 {
    let mut c = ZERO;
    for p in points {
        c = add(c, *p);
    }
    scale(c, 1.0 / points.len() as f64)
}

/// Exact lexicographic comparison of coordinate tuples, the tie-break order
/// for nearest-vertex queries.
pub fn lex_cmp(a: &Vec3, b: &Vec3) -> Ordering {
    for i in 0..3 {
        match a[i].partial_cmp(&b[i]).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Axis-aligned box in `dim` dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
    pub dim: usize,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3, dim: usize) -> Self {
        debug_assert!(dim == 2 || dim == 3);
        Aabb { min, max, dim }
    }

    /// Unit box [0,1]^dim.
    pub fn unit(dim: usize) -> Self {
        let mut max = ZERO;
        for j in 0..dim {
            max[j] = 1.0;
        }
        Aabb::new(ZERO, max, dim)
    }

    pub fn side(&self, j: usize) -> f64 {
        self.max[j] - self.min[j]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|j| self.side(j)).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim).map(|j| self.side(j).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..self.dim).all(|j| p[j] >= self.min[j] && p[j] <= self.max[j])
    }

    pub fn strictly_contains(&self, p: Vec3) -> bool {
        (0..self.dim).all(|j| p[j] > self.min[j] && p[j] < self.max[j])
    }

    /// Shrink every side by `margin` on both ends.
    pub fn shrink(&self, margin: f64) -> Aabb {
        let mut min = self.min;
        let mut max = self.max;
        for j in 0..self.dim {
            min[j] += margin;
            max[j] -= margin;
        }
        Aabb::new(min, max, self.dim)
    }

    pub fn center(&self) -> Vec3 {
        let mut c = ZERO;
        for j in 0..self.dim {
            c[j] = 0.5 * (self.min[j] + self.max[j]);
        }
        c
    }
}
