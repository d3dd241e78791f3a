//! Discrete calculus on tiling graphs: gradient, divergence, the weighted
//! Laplacian, Dirichlet energy, facet flux quadrature, and the exact algebraic
//! identities relating them.
//!
//! Orientation convention: an [`EdgeField`] stores one value per undirected
//! edge, interpreted as the directed value on the oriented pair
//! `(u, v) = (edges[e].u, edges[e].v)`; the reversed orientation is the
//! negation. Gradients follow `grad f(w, v) = f(w) - f(v)`.

use crate::error::{Error, Result};
use crate::geometry::Facet;
use crate::tilings::{EdgeRecord, Tiling};
use crate::vec3::{self, Aabb, Vec3};

pub type VertexFunction = Vec<f64>;

/// Antisymmetric edge field: one value per undirected edge, negated on
/// orientation reversal.
#[derive(Debug, Clone)]
pub struct EdgeField(pub Vec<f64>);

impl EdgeField {
    pub fn zeros(t: &Tiling) -> EdgeField {
        EdgeField(vec![0.0; t.edges.len()])
    }

    /// Directed value of the field on edge `ei` oriented into vertex `into`.
    pub fn into_vertex(&self, t: &Tiling, ei: usize, into: usize) -> f64 {
        if t.edges[ei].v == into {
            self.0[ei]
        } else {
            debug_assert_eq!(t.edges[ei].u, into);
            -self.0[ei]
        }
    }
}

/// `grad f(e) = f(u) - f(v)` in the stored orientation.
pub fn gradient(t: &Tiling, f: &[f64]) -> EdgeField {
    EdgeField(t.edges.iter().map(|e| f[e.u] - f[e.v]).collect())
}

/// `grad_a f(e) = a(e) (f(u) - f(v))`.
pub fn conductance_gradient(t: &Tiling, f: &[f64]) -> EdgeField {
    EdgeField(
        t.edges
            .iter()
            .map(|e| e.conductance * (f[e.u] - f[e.v]))
            .collect(),
    )
}

/// `(div theta)(v) = sum over edges (w, v) of theta(w, v)`.
pub fn divergence(t: &Tiling, theta: &EdgeField) -> VertexFunction {
    let mut out = vec![0.0; t.vertex_count()];
    for (ei, e) in t.edges.iter().enumerate() {
        out[e.v] += theta.0[ei];
        out[e.u] -= theta.0[ei];
    }
    out
}

/// The geometric Laplacian `Delta_a f(v) = sum a(w,v)(f(w) - f(v))`; equal to
/// `divergence(conductance_gradient(f))`.
pub fn laplacian_apply(t: &Tiling, f: &[f64]) -> VertexFunction {
    let mut out = vec![0.0; t.vertex_count()];
    for e in &t.edges {
        let flow = e.conductance * (f[e.u] - f[e.v]);
        out[e.v] += flow;
        out[e.u] -= flow;
    }
    out
}

/// A solve/analysis domain: an axis-aligned box or a Euclidean ball.
#[derive(Debug, Clone, Copy)]
pub enum Domain {
    Box(Aabb),
    Ball { center: Vec3, radius: f64 },
}

impl Domain {
    pub fn contains(&self, p: Vec3, dim: usize) -> bool {
        match self {
            Domain::Box(b) => b.strictly_contains(p),
            Domain::Ball { center, radius } => {
                let mut d2 = 0.0;
                for j in 0..dim {
                    d2 += (p[j] - center[j]).powi(2);
                }
                d2 < radius * radius
            }
        }
    }

    /// A bounding box of the domain.
    pub fn bounding_box(&self, dim: usize) -> Aabb {
        match self {
            Domain::Box(b) => *b,
            Domain::Ball { center, radius } => {
                let mut min = *center;
                let mut max = *center;
                for j in 0..dim {
                    min[j] -= radius;
                    max[j] += radius;
                }
                Aabb::new(min, max, dim)
            }
        }
    }
}

/// Vertex/edge classification of a subdomain U: interior sites, the boundary
/// layer one edge outside, and the three edge classes.
#[derive(Debug, Clone)]
pub struct SubdomainIndex {
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    pub is_interior: Vec<bool>,
    pub is_boundary: Vec<bool>,
    /// E[U]: both endpoints interior.
    pub interior_edges: Vec<usize>,
    /// Boundary edges: exactly one endpoint interior.
    pub boundary_edges: Vec<usize>,
    /// E[closure] = interior_edges + boundary_edges.
    pub closure_edges: Vec<usize>,
    /// vol(U-hat) = total cell volume over interior + boundary sites.
    pub closure_volume: f64,
}

/// Classify sites and edges of `t` relative to `u`. The closure of `u` must
/// stay strictly inside the tiling's domain box so no boundary-layer cell is
/// clipped by the box.
pub fn subdomain(t: &Tiling, u: &Domain) -> Result<SubdomainIndex> {
    let ub = u.bounding_box(t.dim);
    for j in 0..t.dim {
        if ub.min[j] <= t.domain_box.min[j] || ub.max[j] >= t.domain_box.max[j] {
            return Err(Error::InvalidArgument(format!(
                "subdomain closure not strictly inside the tiling box (axis {j})"
            )));
        }
    }
    let n = t.vertex_count();
    let is_interior: Vec<bool> = (0..n).map(|v| u.contains(t.sites[v], t.dim)).collect();
    let mut is_boundary = vec![false; n];
    for e in &t.edges {
        if is_interior[e.u] != is_interior[e.v] {
            let b = if is_interior[e.u] { e.v } else { e.u };
            is_boundary[b] = true;
        }
    }
    let interior: Vec<usize> = (0..n).filter(|&v| is_interior[v]).collect();
    if interior.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let boundary: Vec<usize> = (0..n).filter(|&v| is_boundary[v]).collect();
    let mut interior_edges = Vec::new();
    let mut boundary_edges = Vec::new();
    for (ei, e) in t.edges.iter().enumerate() {
        match (is_interior[e.u], is_interior[e.v]) {
            (true, true) => interior_edges.push(ei),
            (true, false) | (false, true) => boundary_edges.push(ei),
            (false, false) => {}
        }
    }
    let mut closure_edges = interior_edges.clone();
    closure_edges.extend_from_slice(&boundary_edges);
    closure_edges.sort_unstable();
    let closure_volume = interior
        .iter()
        .chain(&boundary)
        .map(|&v| t.cells[v].volume)
        .sum();
    Ok(SubdomainIndex {
        interior,
        boundary,
        is_interior,
        is_boundary,
        interior_edges,
        boundary_edges,
        closure_edges,
        closure_volume,
    })
}

/// Dirichlet energy `D(f, U) = sum over closure edges of a(e) |grad f(e)|^2`.
pub fn dirichlet_energy(t: &Tiling, sub: &SubdomainIndex, f: &[f64]) -> f64 {
    sub.closure_edges
        .iter()
        .map(|&ei| {
            let e = &t.edges[ei];
            e.conductance * (f[e.u] - f[e.v]).powi(2)
        })
        .sum()
}

/// Flux quadrature result with a Richardson error estimate.
#[derive(Debug, Clone, Copy)]
pub struct FluxEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// Integrate `grad_h . (u - v)/||u - v||` over the shared facet of `e` by a
/// two-level fan refinement (midpoint rule per piece); the Richardson
/// extrapolation of the two levels is returned with the level difference as
/// the error estimate.
pub fn facet_flux(
    grad_h: &dyn Fn(Vec3) -> Vec3,
    e: &EdgeRecord,
    t: &Tiling,
) -> FluxEstimate {
    let dir = vec3::scale(
        vec3::sub(t.sites[e.u], t.sites[e.v]),
        1.0 / e.length,
    );
    let f = |p: Vec3| vec3::dot(grad_h(p), dir);
    let facet = t.edge_facet(e);
    let coarse = integrate_facet(facet, t.dim, &f, 1);
    let fine = integrate_facet(facet, t.dim, &f, 2);
    FluxEstimate {
        value: fine + (fine - coarse) / 3.0,
        error_estimate: (fine - coarse).abs(),
    }
}

/// Midpoint-rule integral of a scalar over a facet, subdividing `level` times
/// (segments split in 2 per level, fan triangles in 4 per level).
pub fn integrate_facet(facet: &Facet, dim: usize, f: &dyn Fn(Vec3) -> f64, level: u32) -> f64 {
    match dim {
        2 => {
            let (a, b) = (facet.vertex_loop[0], facet.vertex_loop[1]);
            let pieces = 1usize << level;
            let len = vec3::dist(a, b) / pieces as f64;
            (0..pieces)
                .map(|i| f(vec3::lerp(a, b, (i as f64 + 0.5) / pieces as f64)) * len)
                .sum()
        }
        3 => {
            let c = facet.centroid();
            let n = facet.vertex_loop.len();
            let mut acc = 0.0;
            for i in 0..n {
                let a = facet.vertex_loop[i];
                let b = facet.vertex_loop[(i + 1) % n];
                acc += integrate_triangle(a, b, c, f, level);
            }
            acc
        }
        _ => f64::NAN,
    }
}

fn integrate_triangle(a: Vec3, b: Vec3, c: Vec3, f: &dyn Fn(Vec3) -> f64, level: u32) -> f64 {
    if level == 0 {
        let area = 0.5 * vec3::norm(vec3::cross(vec3::sub(b, a), vec3::sub(c, a)));
        return area * f(vec3::centroid(&[a, b, c]));
    }
    let ab = vec3::lerp(a, b, 0.5);
    let bc = vec3::lerp(b, c, 0.5);
    let ca = vec3::lerp(c, a, 0.5);
    integrate_triangle(a, ab, ca, f, level - 1)
        + integrate_triangle(ab, b, bc, f, level - 1)
        + integrate_triangle(ca, bc, c, f, level - 1)
        + integrate_triangle(ab, bc, ca, f, level - 1)
}

/// Outcome of the dual variational comparison.
#[derive(Debug, Clone, Copy)]
pub struct DualBoundVerdict {
    /// `sum a^{-1} |grad_a f|^2` over closure edges.
    pub primal_energy: f64,
    /// `sum a^{-1} theta^2` over closure edges.
    pub dual_energy: f64,
    pub holds: bool,
}

/// Dual variational principle: for `f` vanishing on the boundary layer and
/// `theta` with the same interior divergence as `grad_a f`, the energy of
/// `grad_a f` is at most the energy of `theta`.
pub fn dual_feasible_energy_bound(
    t: &Tiling,
    sub: &SubdomainIndex,
    f: &[f64],
    theta: &EdgeField,
) -> Result<DualBoundVerdict> {
    for &b in &sub.boundary {
        if f[b] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "f must vanish on the boundary layer (vertex {b})"
            )));
        }
    }
    let grad_a = conductance_gradient(t, f);
    let div_f = divergence(t, &grad_a);
    let div_theta = divergence(t, theta);
    let scale = sub
        .interior
        .iter()
        .map(|&v| div_f[v].abs())
        .fold(1.0, f64::max);
    let mismatch = sub
        .interior
        .iter()
        .map(|&v| (div_f[v] - div_theta[v]).abs())
        .fold(0.0, f64::max);
    if mismatch > 1e-8 * scale {
        return Err(Error::InfeasibleTheta { mismatch });
    }
    let mut primal = 0.0;
    let mut dual = 0.0;
    for &ei in &sub.closure_edges {
        let a = t.edges[ei].conductance;
        primal += grad_a.0[ei] * grad_a.0[ei] / a;
        dual += theta.0[ei] * theta.0[ei] / a;
    }
    Ok(DualBoundVerdict {
        primal_energy: primal,
        dual_energy: dual,
        holds: primal <= dual + 1e-9,
    })
}

/// Weighted gradient-energy estimate: for `delta` at least the longest closure
/// edge, the dual-volume mass of edges with `|grad f| > delta` is controlled
/// by the Dirichlet energy.
#[derive(Debug, Clone, Copy)]
pub struct GradientEnergyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub max_edge_length: f64,
    pub holds: bool,
}

pub fn gradient_energy_estimate(
    t: &Tiling,
    sub: &SubdomainIndex,
    f: &[f64],
    delta: f64,
) -> GradientEnergyCheck {
    let d = t.dim as f64;
    let max_edge_length = sub
        .closure_edges
        .iter()
        .map(|&ei| t.edges[ei].length)
        .fold(0.0, f64::max);
    let mut lhs = 0.0;
    for &ei in &sub.closure_edges {
        let e = &t.edges[ei];
        if (f[e.u] - f[e.v]).abs() > delta {
            lhs += d * e.qe_volume;
        }
    }
    let rhs = dirichlet_energy(t, sub, f);
    GradientEnergyCheck {
        lhs,
        rhs,
        max_edge_length,
        holds: delta >= max_edge_length && lhs <= rhs + 1e-9,
    }
}
