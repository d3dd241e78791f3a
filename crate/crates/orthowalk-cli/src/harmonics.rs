//! Registry of the harmonic polynomials used by the experiments, with
//! analytic bounds on their gradients and Hessians.

use orthowalk::vec3::{Aabb, Vec3};

/// A harmonic polynomial together with pointwise bounds: `grad_norm` is
/// `|grad h|`, `hess_norm` an upper bound on the operator norm of the Hessian.
pub struct Harmonic {
    pub id: &'static str,
    pub dim: usize,
    pub eval: fn(Vec3) -> f64,
    pub grad_norm: fn(Vec3) -> f64,
    pub hess_norm: fn(Vec3) -> f64,
}

pub const REGISTRY: &[Harmonic] = &[
    Harmonic {
        id: "saddle2d", // x^2 - y^2
        dim: 2,
        eval: |p| p[0] * p[0] - p[1] * p[1],
        grad_norm: |p| 2.0 * (p[0] * p[0] + p[1] * p[1]).sqrt(),
        hess_norm: |_| 2.0,
    },
    Harmonic {
        id: "bilinear2d", // x*y
        dim: 2,
        eval: |p| p[0] * p[1],
        grad_norm: |p| (p[0] * p[0] + p[1] * p[1]).sqrt(),
        hess_norm: |_| 1.0,
    },
    Harmonic {
        id: "cubic2d", // Re (x + iy)^3 = x^3 - 3 x y^2
        dim: 2,
        eval: |p| p[0] * p[0] * p[0] - 3.0 * p[0] * p[1] * p[1],
        // |grad| = 3 r^2, Hessian norm = 6 r.
        grad_norm: |p| 3.0 * (p[0] * p[0] + p[1] * p[1]),
        hess_norm: |p| 6.0 * (p[0] * p[0] + p[1] * p[1]).sqrt(),
    },
    Harmonic {
        id: "saddle3d", // x1^2 - x2^2
        dim: 3,
        eval: |p| p[0] * p[0] - p[1] * p[1],
        grad_norm: |p| 2.0 * (p[0] * p[0] + p[1] * p[1]).sqrt(),
        hess_norm: |_| 2.0,
    },
    Harmonic {
        id: "trilinear3d", // x1*x2*x3
        dim: 3,
        eval: |p| p[0] * p[1] * p[2],
        grad_norm: |p| {
            ((p[1] * p[1] * p[2] * p[2])
                + (p[0] * p[0] * p[2] * p[2])
                + (p[0] * p[0] * p[1] * p[1]))
                .sqrt()
        },
        // Frobenius bound on the off-diagonal Hessian.
        hess_norm: |p| (2.0 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).sqrt(),
    },
];

pub fn lookup(id: &str) -> Option<&'static Harmonic> {
    REGISTRY.iter().find(|h| h.id == id)
}

/// Ids available for a given dimension.
pub fn ids_for_dim(dim: usize) -> Vec<&'static str> {
    REGISTRY.iter().filter(|h| h.dim == dim).map(|h| h.id).collect()
}

/// Maximize a pointwise bound over a box (dense grid plus corners; all the
/// registry bounds are monotone in |coordinate|, so corners dominate, but the
/// grid guards against future additions).
fn max_over_box(f: fn(Vec3) -> f64, bx: &Aabb, dim: usize) -> f64 {
    let per_axis = 9usize;
    let mut worst: f64 = 0.0;
    let total = per_axis.pow(dim as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut p = [0.0f64; 3];
        for j in 0..dim {
            let i = rem % per_axis;
            rem /= per_axis;
            p[j] = bx.min[j] + i as f64 / (per_axis - 1) as f64 * bx.side(j);
        }
        worst = worst.max(f(p));
    }
    worst
}

/// `M`: sup of the Hessian norm over the region.
pub fn m_const(h: &Harmonic, bx: &Aabb) -> f64 {
    max_over_box(h.hess_norm, bx, h.dim)
}

/// `L`: Lipschitz constant of `h` (sup of |grad h|) over the region.
pub fn l_const(h: &Harmonic, bx: &Aabb) -> f64 {
    max_over_box(h.grad_norm, bx, h.dim)
}
