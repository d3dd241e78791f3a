//! Dirichlet solves on tiling graphs: the conjugate-gradient core, harmonic
//! extension, exact discrete harmonic measure, the continuum Poisson kernel on
//! balls, a test-function distance between exit laws, and column diagnostics.

use crate::error::{Error, Result};
use crate::fvm::SubdomainIndex;
use crate::tilings::Tiling;
use crate::vec3::{self, Aabb, Vec3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Relative residual target of the conjugate-gradient solver.
pub const CG_TOL: f64 = 1e-10;

/// Jacobi-preconditioned conjugate gradients for an SPD operator given as a
/// closure. Returns the solution and the iteration count.
pub(crate) fn pcg(
    apply: &dyn Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let b_norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for iter in 0..max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::NoConvergence { iterations: iter, residual: f64::NAN });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= CG_TOL * b_norm {
            return Ok((x, iter + 1));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(Error::NoConvergence { iterations: max_iter, residual: r_norm / b_norm })
}

/// Solve `Delta_a x = 0` on the vertices marked in `in_set`, holding all other
/// vertices at `fixed`. Every connected component of the set must reach at
/// least one fixed vertex.
pub fn solve_on_set(
    t: &Tiling,
    in_set: &[bool],
    fixed: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let n = t.vertex_count();
    let set: Vec<usize> = (0..n).filter(|&v| in_set[v]).collect();
    if set.is_empty() {
        return Ok((fixed.to_vec(), 0));
    }
    let mut local = vec![usize::MAX; n];
    for (i, &v) in set.iter().enumerate() {
        local[v] = i;
    }
    // Connectivity to fixed data: flood from set vertices with a fixed
    // neighbor, through set edges.
    let mut reached = vec![false; set.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, &v) in set.iter().enumerate() {
        if t.adjacency[v].iter().any(|&(w, _)| !in_set[w]) {
            reached[i] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        for &(w, _) in &t.adjacency[set[i]] {
            if in_set[w] && !reached[local[w]] {
                reached[local[w]] = true;
                stack.push(local[w]);
            }
        }
    }
    if reached.iter().any(|&r| !r) {
        return Err(Error::DisconnectedComponent);
    }
    for (i, &v) in set.iter().enumerate() {
        if t.adjacency[v].is_empty() {
            let _ = i;
            return Err(Error::IsolatedVertex(v));
        }
    }

    let diag: Vec<f64> = set.iter().map(|&v| t.weighted_degree(v)).collect();
    let mut b = vec![0.0; set.len()];
    for (i, &v) in set.iter().enumerate() {
        for &(w, ei) in &t.adjacency[v] {
            if !in_set[w] {
                b[i] += t.edges[ei].conductance * fixed[w];
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (i, &v) in set.iter().enumerate() {
            let mut acc = diag[i] * x[i];
            for &(w, ei) in &t.adjacency[v] {
                if in_set[w] {
                    acc -= t.edges[ei].conductance * x[local[w]];
                }
            }
            out[i] = acc;
        }
    };
    let (x, iterations) = pcg(&apply, &diag, &b, 20 * set.len().max(50))?;
    let mut values = fixed.to_vec();
    for (i, &v) in set.iter().enumerate() {
        values[v] = x[i];
    }
    Ok((values, iterations))
}

/// A solved Dirichlet problem: boundary data on the boundary layer, harmonic
/// values on the interior.
#[derive(Debug, Clone)]
pub struct HarmonicSolution {
    /// Full-length vertex function: boundary data on the boundary layer, the
    /// discrete harmonic values on the interior, `g` elsewhere.
    pub values: Vec<f64>,
    /// Max |Delta_a h| over interior vertices.
    pub residual_inf: f64,
    pub iterations: usize,
}

/// Solve the Dirichlet problem on `sub` with boundary data `g` (a full-length
/// vertex function read on the boundary layer).
pub fn solve_dirichlet(t: &Tiling, sub: &SubdomainIndex, g: &[f64]) -> Result<HarmonicSolution> {
    let (values, iterations) = solve_on_set(t, &sub.is_interior, g)?;
    let lap = crate::fvm::laplacian_apply(t, &values);
    let residual_inf = sub
        .interior
        .iter()
        .map(|&v| lap[v].abs())
        .fold(0.0, f64::max);
    Ok(HarmonicSolution { values, residual_inf, iterations })
}

/// Harmonic extension operator: solve `Delta_a = 0` on the vertex set `s`,
/// with data `g` everywhere else.
pub fn harmonic_extension(t: &Tiling, s: &[usize], g: &[f64]) -> Result<Vec<f64>> {
    let mut in_set = vec![false; t.vertex_count()];
    for &v in s {
        in_set[v] = true;
    }
    Ok(solve_on_set(t, &in_set, g)?.0)
}

/// Exact exit law of the conductance walk from `source`.
#[derive(Debug, Clone)]
pub struct BoundaryDistribution {
    pub boundary: Vec<usize>,
    pub probability: Vec<f64>,
    pub source: usize,
}

impl BoundaryDistribution {
    pub fn total(&self) -> f64 {
        self.probability.iter().sum()
    }

    /// Expectation of a function of the exit vertex.
    pub fn expectation(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.boundary
            .iter()
            .zip(&self.probability)
            .map(|(&b, &p)| p * f(b))
            .sum()
    }
}

/// Hitting distribution on the boundary layer via one adjoint solve: with
/// `A` the interior-restricted Laplacian, solve `A y = e_start`; the mass at a
/// boundary vertex `b` is `sum_v y(v) a(v, b)`.
pub fn discrete_harmonic_measure(
    t: &Tiling,
    sub: &SubdomainIndex,
    start: usize,
) -> Result<BoundaryDistribution> {
    if !sub.is_interior[start] {
        return Err(Error::InvalidArgument(format!("start vertex {start} not interior")));
    }
    let set = &sub.interior;
    let mut local = vec![usize::MAX; t.vertex_count()];
    for (i, &v) in set.iter().enumerate() {
        local[v] = i;
    }
    let diag: Vec<f64> = set.iter().map(|&v| t.weighted_degree(v)).collect();
    let mut b = vec![0.0; set.len()];
    b[local[start]] = 1.0;
    let apply = |x: &[f64], out: &mut [f64]| {
        for (i, &v) in set.iter().enumerate() {
            let mut acc = diag[i] * x[i];
            for &(w, ei) in &t.adjacency[v] {
                if sub.is_interior[w] {
                    acc -= t.edges[ei].conductance * x[local[w]];
                }
            }
            out[i] = acc;
        }
    };
    let (y, _) = pcg(&apply, &diag, &b, 20 * set.len().max(50))?;
    let mut probability = vec![0.0; sub.boundary.len()];
    let mut bd_local = vec![usize::MAX; t.vertex_count()];
    for (i, &bv) in sub.boundary.iter().enumerate() {
        bd_local[bv] = i;
    }
    for (i, &v) in set.iter().enumerate() {
        for &(w, ei) in &t.adjacency[v] {
            if sub.is_boundary[w] {
                probability[bd_local[w]] += y[i] * t.edges[ei].conductance;
            }
        }
    }
    Ok(BoundaryDistribution { boundary: sub.boundary.clone(), probability, source: start })
}

/// Surface area of the unit sphere in `R^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    match d {
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => f64::NAN,
    }
}

/// Poisson kernel of the unit ball: density at boundary point `z` of harmonic
/// measure seen from `x`, with respect to surface measure.
pub fn poisson_kernel_ball(x: Vec3, z: Vec3, d: usize) -> f64 {
    let x2 = (0..d).map(|j| x[j] * x[j]).sum::<f64>();
    let dist = {
        let mut acc = 0.0;
        for j in 0..d {
            acc += (x[j] - z[j]).powi(2);
        }
        acc.sqrt()
    };
    (1.0 - x2) / (unit_sphere_area(d) * dist.powi(d as i32))
}

/// Quadrature nodes and weights on the unit sphere: uniform angles in 2D
/// (trapezoidal, spectrally accurate), a Fibonacci lattice in 3D.
pub fn sphere_quadrature(d: usize, n: usize) -> Vec<(Vec3, f64)> {
    match d {
        2 => (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                ([t.cos(), t.sin(), 0.0], 2.0 * std::f64::consts::PI / n as f64)
            })
            .collect(),
        3 => {
            let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let theta = 2.0 * std::f64::consts::PI * i as f64 / phi;
                    (
                        [r * theta.cos(), r * theta.sin(), z],
                        4.0 * std::f64::consts::PI / n as f64,
                    )
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

/// The fixed test-function dictionary: constants, coordinates, and harmonic
/// polynomials (through degree `l_max` in 2D; through degree 2 in 3D). All
/// functions are evaluated in ball-relative coordinates `(p - center)/radius`,
/// so they are O(1) on the sphere.
fn test_dictionary(d: usize, l_max: usize) -> Vec<Box<dyn Fn(Vec3) -> f64 + Sync>> {
    let mut fs: Vec<Box<dyn Fn(Vec3) -> f64 + Sync>> = vec![Box::new(|_| 1.0)];
    for j in 0..d {
        fs.push(Box::new(move |p: Vec3| p[j]));
    }
    if d == 2 {
        for deg in 2..=l_max.max(2) {
            let n = deg as i32;
            fs.push(Box::new(move |p: Vec3| {
                // Re (x + iy)^n
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let th = p[1].atan2(p[0]);
                r.powi(n) * (n as f64 * th).cos()
            }));
            fs.push(Box::new(move |p: Vec3| {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let th = p[1].atan2(p[0]);
                r.powi(n) * (n as f64 * th).sin()
            }));
        }
    } else if l_max >= 2 {
        fs.push(Box::new(|p: Vec3| p[0] * p[1]));
        fs.push(Box::new(|p: Vec3| p[0] * p[2]));
        fs.push(Box::new(|p: Vec3| p[1] * p[2]));
        fs.push(Box::new(|p: Vec3| p[0] * p[0] - p[1] * p[1]));
        fs.push(Box::new(|p: Vec3| 2.0 * p[2] * p[2] - p[0] * p[0] - p[1] * p[1]));
    }
    fs
}

/// Distance between the discrete exit law and continuum harmonic measure on a
/// ball, measured as the max discrepancy of expectations over the test
/// dictionary. The continuum side is integrated with the Poisson kernel by
/// sphere quadrature.
pub fn weak_distance(
    mu: &BoundaryDistribution,
    t: &Tiling,
    x: Vec3,
    center: Vec3,
    radius: f64,
    l_max: usize,
) -> f64 {
    let d = t.dim;
    let to_rel = |p: Vec3| -> Vec3 {
        let mut q = vec3::ZERO;
        for j in 0..d {
            q[j] = (p[j] - center[j]) / radius;
        }
        q
    };
    let x_rel = to_rel(x);
    let quad = sphere_quadrature(d, if d == 2 { 512 } else { 4096 });
    let fs = test_dictionary(d, l_max);
    let mut worst: f64 = 0.0;
    for f in &fs {
        let discrete = mu.expectation(|b| f(to_rel(t.sites[b])));
        let continuum: f64 = quad
            .iter()
            .map(|&(z, w)| w * poisson_kernel_ball(x_rel, z, d) * f(z))
            .sum();
        worst = worst.max((discrete - continuum).abs());
    }
    worst
}

/// Column diagnostic for coordinate `j`: sample transverse positions `y`
/// uniformly in the projection of `u_box`, collect the closure edges whose
/// projected facet contains `y`, and record the max |h_D - h_C| over their
/// endpoints. `base` is the unit threshold `3 M eps sum d vol(Q_e)`; the
/// estimated measure of columns exceeding `k * base` is the sample fraction
/// times the projected volume.
#[derive(Debug, Clone)]
pub struct ColumnDiagnostic {
    pub j: usize,
    pub column_max: Vec<f64>,
    /// `3 M eps * sum over closure edges of d vol(Q_e)`.
    pub base: f64,
    /// (d-1)-volume of the projection of the sampled box.
    pub proj_volume: f64,
}

impl ColumnDiagnostic {
    pub fn threshold(&self, k: f64) -> f64 {
        k * self.base
    }

    /// Estimated transverse measure of columns whose max deviation exceeds
    /// `threshold(k)`.
    pub fn measure_estimate(&self, k: f64) -> f64 {
        let over = self
            .column_max
            .iter()
            .filter(|&&m| m > self.threshold(k))
            .count();
        over as f64 / self.column_max.len() as f64 * self.proj_volume
    }
}

#[allow(clippy::too_many_arguments)]
pub fn column_diagnostic(
    t: &Tiling,
    sub: &SubdomainIndex,
    h_d: &[f64],
    h_c: &[f64],
    u_box: &Aabb,
    j: usize,
    n_samples: usize,
    m_const: f64,
    seed: u64,
) -> ColumnDiagnostic {
    let d = t.dim;
    let eps = sub_epsilon(t, sub);
    let sum_qe: f64 = sub
        .closure_edges
        .iter()
        .map(|&ei| d as f64 * t.edges[ei].qe_volume)
        .sum();
    let base = 3.0 * m_const * eps * sum_qe;
    let other_axes: Vec<usize> = (0..d).filter(|&a| a != j).collect();
    let proj_volume: f64 = other_axes.iter().map(|&a| u_box.side(a)).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut column_max = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut y = [0.0f64; 2];
        for (yi, &a) in other_axes.iter().enumerate() {
            y[yi] = u_box.min[a] + rng.random::<f64>() * u_box.side(a);
        }
        let mut worst: f64 = 0.0;
        for &ei in &sub.closure_edges {
            let e = &t.edges[ei];
            if facet_projection_contains(t, ei, &other_axes, &y) {
                worst = worst
                    .max((h_d[e.u] - h_c[e.u]).abs())
                    .max((h_d[e.v] - h_c[e.v]).abs());
            }
        }
        column_max.push(worst);
    }
    ColumnDiagnostic { j, column_max, base, proj_volume }
}

/// Max cell diameter over the closure of a subdomain.
pub fn sub_epsilon(t: &Tiling, sub: &SubdomainIndex) -> f64 {
    sub.interior
        .iter()
        .chain(&sub.boundary)
        .map(|&v| t.cells[v].diameter())
        .fold(0.0, f64::max)
}

fn facet_projection_contains(t: &Tiling, ei: usize, axes: &[usize], y: &[f64; 2]) -> bool {
    let facet = t.edge_facet(&t.edges[ei]);
    if axes.len() == 1 {
        let a = axes[0];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in &facet.vertex_loop {
            lo = lo.min(v[a]);
            hi = hi.max(v[a]);
        }
        lo <= y[0] && y[0] <= hi
    } else {
        // Ray-crossing parity test on the projected polygon loop.
        let (a0, a1) = (axes[0], axes[1]);
        let n = facet.vertex_loop.len();
        let mut inside = false;
        for i in 0..n {
            let p = facet.vertex_loop[i];
            let q = facet.vertex_loop[(i + 1) % n];
            let (px, py) = (p[a0], p[a1]);
            let (qx, qy) = (q[a0], q[a1]);
            if (py > y[1]) != (qy > y[1]) {
                let xc = px + (y[1] - py) / (qy - py) * (qx - px);
                if y[0] < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }
}
