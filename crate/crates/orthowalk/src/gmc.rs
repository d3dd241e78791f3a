//! Approximate Gaussian multiplicative chaos: a dyadic layered log-correlated
//! field, the measure `exp(gamma Phi) dx`, Poisson point sampling with that
//! intensity, and the geometric validators for the resulting Voronoi cells.
//!
//! The field is a sum of K independent layers; layer k is white noise on a
//! `2^k`-per-side lattice with variance `log 2`, bilinearly interpolated to
//! the fine grid. Each interpolated layer is renormalized per node by the L2
//! norm of its interpolation weights, so every node has variance exactly
//! `K log 2` while the covariance still decays like `-log r`.

use crate::error::{Error, Result};
use crate::tilings::Tiling;
use crate::vec3::{self, Aabb, Vec3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

/// A sampled approximation of a log-correlated Gaussian field on a box.
#[derive(Debug, Clone)]
pub struct GmcField {
    pub bx: Aabb,
    /// Fine grid resolution exponent: `2^j` cells per side.
    pub j: u32,
    /// Number of dyadic layers summed.
    pub k_layers: u32,
    pub seed: u64,
    /// Field value at each fine cell center, row-major with x fastest.
    pub values: Vec<f64>,
}

impl GmcField {
    pub fn resolution(&self) -> usize {
        1usize << self.j
    }

    /// Exact per-node variance of the construction.
    pub fn variance(&self) -> f64 {
        self.k_layers as f64 * std::f64::consts::LN_2
    }

    pub fn cell_count(&self) -> usize {
        self.resolution().pow(self.bx.dim as u32)
    }

    pub fn cell_center(&self, idx: usize) -> Vec3 {
        let n = self.resolution();
        let mut rem = idx;
        let mut c = vec3::ZERO;
        for jx in 0..self.bx.dim {
            let i = rem % n;
            rem /= n;
            c[jx] = self.bx.min[jx] + (i as f64 + 0.5) / n as f64 * self.bx.side(jx);
        }
        c
    }
}

/// Sample the layered field. Deterministic given `seed`; the layers are drawn
/// coarsest-first in a fixed order, so the same seed gives the same field.
pub fn sample_log_correlated_field(bx: &Aabb, j: u32, k: u32, seed: u64) -> Result<GmcField> {
    if j < 3 {
        return Err(Error::InvalidArgument(format!("resolution exponent J={j} < 3")));
    }
    if k < 1 || k > j {
        return Err(Error::ResolutionTooCoarse { resolution: j, layers: k });
    }
    let dim = bx.dim;
    let n = 1usize << j;
    let total = n.pow(dim as u32);
    let mut values = vec![0.0; total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std::f64::consts::LN_2.sqrt()).unwrap();

    for layer in 1..=k {
        let c = 1usize << layer; // coarse cells per side
        let nodes = c + 1;
        let node_count = nodes.pow(dim as u32);
        let noise: Vec<f64> = (0..node_count).map(|_| normal.sample(&mut rng)).collect();
        let node_index = |ix: &[usize; 3]| -> usize {
            let mut idx = 0;
            for jx in (0..dim).rev() {
                idx = idx * nodes + ix[jx];
            }
            idx
        };
        for (idx, v) in values.iter_mut().enumerate() {
            // Fine cell center in coarse-lattice coordinates.
            let mut rem = idx;
            let mut base = [0usize; 3];
            let mut t = [0.0f64; 3];
            for jx in 0..dim {
                let i = rem % n;
                rem /= n;
                let u = (i as f64 + 0.5) / n as f64 * c as f64;
                let b = (u.floor() as usize).min(c - 1);
                base[jx] = b;
                t[jx] = u - b as f64;
            }
            // Multilinear interpolation over the 2^d surrounding nodes, with
            // the weight-norm renormalization that keeps variance log 2.
            let mut acc = 0.0;
            let mut w2 = 0.0;
            for corner in 0..(1usize << dim) {
                let mut w = 1.0;
                let mut ix = base;
                for jx in 0..dim {
                    if corner >> jx & 1 == 1 {
                        ix[jx] += 1;
                        w *= t[jx];
                    } else {
                        w *= 1.0 - t[jx];
                    }
                }
                acc += w * noise[node_index(&ix)];
                w2 += w * w;
            }
            *v += acc / w2.sqrt();
        }
    }
    Ok(GmcField { bx: *bx, j, k_layers: k, seed, values })
}

/// The measure `exp(gamma Phi - gamma^2 Var/2) dx` evaluated per grid cell.
#[derive(Debug, Clone)]
pub struct GmcMeasure {
    pub bx: Aabb,
    /// Cells per side.
    pub resolution: usize,
    pub gamma: f64,
    pub cell_mass: Vec<f64>,
    pub total_mass: f64,
}

impl GmcMeasure {
    /// Assemble a measure directly from per-cell masses (test/diagnostic use).
    pub fn from_cell_masses(bx: Aabb, resolution: usize, cell_mass: Vec<f64>) -> GmcMeasure {
        let total_mass = cell_mass.iter().sum();
        GmcMeasure { bx, resolution, gamma: f64::NAN, cell_mass, total_mass }
    }

    pub fn cell_center(&self, idx: usize) -> Vec3 {
        let n = self.resolution;
        let mut rem = idx;
        let mut c = vec3::ZERO;
        for jx in 0..self.bx.dim {
            let i = rem % n;
            rem /= n;
            c[jx] = self.bx.min[jx] + (i as f64 + 0.5) / n as f64 * self.bx.side(jx);
        }
        c
    }

    pub fn cell_box(&self, idx: usize) -> Aabb {
        let n = self.resolution;
        let mut rem = idx;
        let mut min = self.bx.min;
        let mut max = self.bx.max;
        for jx in 0..self.bx.dim {
            let i = rem % n;
            rem /= n;
            min[jx] = self.bx.min[jx] + i as f64 / n as f64 * self.bx.side(jx);
            max[jx] = self.bx.min[jx] + (i as f64 + 1.0) / n as f64 * self.bx.side(jx);
        }
        Aabb::new(min, max, self.bx.dim)
    }

    /// Mass of the ball `B_r(z)`, approximated by cells whose center lies in
    /// the ball.
    pub fn ball_mass(&self, z: Vec3, r: f64) -> f64 {
        let mut mass = 0.0;
        for (idx, m) in self.cell_mass.iter().enumerate() {
            if vec3::dist_sq(self.cell_center(idx), z) <= r * r {
                mass += m;
            }
        }
        mass
    }
}

/// Exponentiate the field into a measure. `gamma = 0` gives the Lebesgue cell
/// measure exactly; the normalization makes the expected total mass equal the
/// box volume.
pub fn gmc_mass(field: &GmcField, gamma: f64) -> Result<GmcMeasure> {
    let dim = field.bx.dim;
    let gamma_max = (2.0 * dim as f64).sqrt();
    if !(0.0..gamma_max).contains(&gamma) {
        return Err(Error::GammaOutOfRange(gamma));
    }
    let n = field.resolution();
    let cell_vol = field.bx.volume() / n.pow(dim as u32) as f64;
    let var = field.variance();
    let cell_mass: Vec<f64> = field
        .values
        .iter()
        .map(|&phi| (gamma * phi - gamma * gamma * var / 2.0).exp() * cell_vol)
        .collect();
    let total_mass = cell_mass.iter().sum();
    Ok(GmcMeasure { bx: field.bx, resolution: n, gamma, cell_mass, total_mass })
}

/// A Poisson sample of generator points with intensity `m * mu`.
#[derive(Debug, Clone)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<Vec3>,
    pub intensity: f64,
    pub seed: u64,
}

/// Sample `Lambda_m`: per grid cell an independent Poisson(`m * cell_mass`)
/// count, each point placed uniformly in the cell. Deterministic given `seed`.
pub fn sample_poisson_points(mu: &GmcMeasure, m: f64, seed: u64) -> Result<PointCloud> {
    if m <= 0.0 {
        return Err(Error::InvalidArgument(format!("intensity m={m} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    for (idx, &mass) in mu.cell_mass.iter().enumerate() {
        let lambda = m * mass;
        if lambda <= 0.0 {
            continue;
        }
        let count = Poisson::new(lambda)
            .map_err(|e| Error::InvalidArgument(format!("bad Poisson rate {lambda}: {e}")))?
            .sample(&mut rng) as usize;
        if count == 0 {
            continue;
        }
        let cb = mu.cell_box(idx);
        for _ in 0..count {
            let mut p = vec3::ZERO;
            for jx in 0..mu.bx.dim {
                p[jx] = cb.min[jx] + rng.random::<f64>() * cb.side(jx);
            }
            points.push(p);
        }
    }
    Ok(PointCloud { dim: mu.bx.dim, points, intensity: m, seed })
}

/// Result of probing the Hölder sandwich `r^{b+} <= mu(B_r) <= r^{b-}`.
#[derive(Debug, Clone)]
pub struct HolderReport {
    pub checks: usize,
    pub violations: usize,
    pub violation_fraction: f64,
}

/// Probe the two-sided Hölder bound on a sub-grid of centers for each radius.
/// Probes whose ball leaves the box are skipped.
pub fn check_holder(
    mu: &GmcMeasure,
    beta_plus: f64,
    beta_minus: f64,
    radii: &[f64],
) -> Result<HolderReport> {
    if !(0.0 < beta_minus && beta_minus < beta_plus) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < beta_minus < beta_plus, got {beta_minus}, {beta_plus}"
        )));
    }
    let dim = mu.bx.dim;
    let probes_per_axis = 16usize.min(mu.resolution);
    let mut checks = 0usize;
    let mut violations = 0usize;
    let total = probes_per_axis.pow(dim as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut z = vec3::ZERO;
        for jx in 0..dim {
            let i = rem % probes_per_axis;
            rem /= probes_per_axis;
            z[jx] = mu.bx.min[jx]
                + (i as f64 + 0.5) / probes_per_axis as f64 * mu.bx.side(jx);
        }
        for &r in radii {
            let inside = (0..dim)
                .all(|jx| z[jx] - r >= mu.bx.min[jx] && z[jx] + r <= mu.bx.max[jx]);
            if !inside {
                continue;
            }
            checks += 1;
            let mass = mu.ball_mass(z, r);
            if !(r.powf(beta_plus) <= mass && mass <= r.powf(beta_minus)) {
                violations += 1;
            }
        }
    }
    let violation_fraction = if checks == 0 {
        0.0
    } else {
        violations as f64 / checks as f64
    };
    Ok(HolderReport { checks, violations, violation_fraction })
}

/// Per-cell inradius/circumradius check against the sandwich
/// `B_{m^{-8/b-}}(s) subset C_s subset B_{m^{-1/(3 b+)}}(s)`.
#[derive(Debug, Clone)]
pub struct CellBoundsReport {
    pub r_inner: f64,
    pub r_outer: f64,
    pub min_inradius: f64,
    pub max_circumradius: f64,
    pub inradius_violations: Vec<usize>,
    pub circumradius_violations: Vec<usize>,
}

impl CellBoundsReport {
    pub fn pass(&self) -> bool {
        self.inradius_violations.is_empty() && self.circumradius_violations.is_empty()
    }
}

pub fn check_cell_bounds(
    t: &Tiling,
    m: f64,
    beta_plus: f64,
    beta_minus: f64,
) -> CellBoundsReport {
    let r_inner = m.powf(-8.0 / beta_minus);
    let r_outer = m.powf(-1.0 / (3.0 * beta_plus));
    let mut min_inradius = f64::INFINITY;
    let mut max_circumradius: f64 = 0.0;
    let mut inradius_violations = Vec::new();
    let mut circumradius_violations = Vec::new();
    for (v, cell) in t.cells.iter().enumerate() {
        let rin = cell.inradius_about(t.sites[v]);
        let rout = cell.circumradius_about(t.sites[v]);
        min_inradius = min_inradius.min(rin);
        max_circumradius = max_circumradius.max(rout);
        if rin < r_inner {
            inradius_violations.push(v);
        }
        if rout > r_outer {
            circumradius_violations.push(v);
        }
    }
    CellBoundsReport {
        r_inner,
        r_outer,
        min_inradius,
        max_circumradius,
        inradius_violations,
        circumradius_violations,
    }
}

/// Spread condition: at most one point in `x + [-2r, 2r]^d` for every grid
/// point `x` of the lattice `r Z^d` meeting `u`. When this holds, every
/// Voronoi cell of a site in `u` contains the ball `B_r` around its site.
pub fn check_spread(points: &[Vec3], r: f64, u: &Aabb) -> bool {
    grid_cube_counts(points, r, 2.0 * r, u, 0.0)
        .into_iter()
        .all(|c| c <= 1)
}

/// Density condition: at least one point in `y + [-delta k, delta k]^d` for
/// every grid point `y` of `k Z^d` meeting the `2k`-neighborhood of `u`. When
/// this holds, every Voronoi cell of a site in `u` lies in `B_{4 k sqrt d}`
/// around its site.
pub fn check_density(points: &[Vec3], k: f64, delta: f64, u: &Aabb) -> bool {
    grid_cube_counts(points, k, delta * k, u, 2.0 * k)
        .into_iter()
        .all(|c| c >= 1)
}

/// For each grid point of `spacing * Z^d` within `margin` of `u`, the number
/// of points in the centered cube of half-side `half`.
fn grid_cube_counts(points: &[Vec3], spacing: f64, half: f64, u: &Aabb, margin: f64) -> Vec<usize> {
    let dim = u.dim;
    let mut lo = [0isize; 3];
    let mut hi = [0isize; 3];
    for jx in 0..dim {
        lo[jx] = ((u.min[jx] - margin) / spacing).floor() as isize;
        hi[jx] = ((u.max[jx] + margin) / spacing).ceil() as isize;
    }
    let mut counts = Vec::new();
    let mut ix = lo;
    loop {
        let mut x = vec3::ZERO;
        for jx in 0..dim {
            x[jx] = ix[jx] as f64 * spacing;
        }
        let c = points
            .iter()
            .filter(|p| (0..dim).all(|jx| (p[jx] - x[jx]).abs() <= half))
            .count();
        counts.push(c);
        let mut jx = 0;
        loop {
            if jx == dim {
                return counts;
            }
            if ix[jx] < hi[jx] {
                ix[jx] += 1;
                break;
            }
            ix[jx] = lo[jx];
            jx += 1;
        }
    }
}

/// Default Hölder exponents used for GMC-driven tilings, calibrated so the
/// sandwich holds empirically at moderate resolution.
pub fn default_beta(dim: usize, gamma: f64) -> (f64, f64) {
    let sd = (dim as f64).sqrt();
    let g = gamma / 2.0f64.sqrt();
    let beta_plus = (sd + g).powi(2);
    let beta_minus = (0.1f64).max((sd - g).powi(2));
    (beta_plus, beta_minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilings::{build_grid_tiling, build_voronoi_tiling};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn field_is_seed_deterministic() {
        let bx = Aabb::unit(2);
        let a = sample_log_correlated_field(&bx, 6, 4, 99).unwrap();
        let b = sample_log_correlated_field(&bx, 6, 4, 99).unwrap();
        assert_eq!(a.values.len(), b.values.len());
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        let c = sample_log_correlated_field(&bx, 6, 4, 100).unwrap();
        assert!(a.values.iter().zip(&c.values).any(|(x, y)| x != y));
    }

    #[test]
    fn field_rejects_bad_layer_counts() {
        let bx = Aabb::unit(2);
        assert!(matches!(
            sample_log_correlated_field(&bx, 5, 6, 0),
            Err(Error::ResolutionTooCoarse { .. })
        ));
        assert!(sample_log_correlated_field(&bx, 2, 1, 0).is_err());
    }

    #[test]
    fn field_variance_matches_k_log2() {
        let bx = Aabb::unit(2);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for seed in 0..20u64 {
            let f = sample_log_correlated_field(&bx, 8, 6, seed).unwrap();
            for &v in &f.values {
                sum += v;
                sum_sq += v * v;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let var = sum_sq / count as f64 - mean * mean;
        let target = 6.0 * LN2;
        assert!(
            (var - target).abs() < 0.25 * target,
            "empirical variance {var} vs target {target}"
        );
    }

    #[test]
    fn single_layer_covariance_within_coarse_cell() {
        // K=1: two fine nodes deep inside the same coarse cell are almost
        // perfectly correlated, so their covariance is close to log 2.
        let bx = Aabb::unit(2);
        let n = 1usize << 7;
        // Coarse cells have 64 fine cells per side; pick adjacent fine nodes
        // near a coarse cell center.
        let idx_a = (n / 4) * n + n / 4;
        let idx_b = idx_a + 1;
        let mut cov = 0.0;
        let seeds = 400;
        for seed in 0..seeds as u64 {
            let f = sample_log_correlated_field(&bx, 7, 1, seed).unwrap();
            cov += f.values[idx_a] * f.values[idx_b];
        }
        cov /= seeds as f64;
        assert!(
            (cov - LN2).abs() < 0.25 * LN2,
            "covariance {cov} vs log2 {LN2}"
        );
    }

    #[test]
    fn covariance_decays_logarithmically() {
        // Empirical covariance at separation r against ln r: slope -1.
        let bx = Aabb::unit(2);
        let jres = 8u32;
        let n = 1usize << jres;
        let k = 6u32;
        let seps = [2usize, 4, 8, 16, 32, 64]; // r = sep / n
        let mut cov = vec![0.0f64; seps.len()];
        let seeds = 40;
        for seed in 0..seeds as u64 {
            let f = sample_log_correlated_field(&bx, jres, k, seed).unwrap();
            for (si, &sep) in seps.iter().enumerate() {
                // Spatial average over rows: pairs (i, i+sep) along x.
                let mut acc = 0.0;
                let mut cnt = 0usize;
                for row in (0..n).step_by(7) {
                    for col in (0..n - sep).step_by(5) {
                        acc += f.values[row * n + col] * f.values[row * n + col + sep];
                        cnt += 1;
                    }
                }
                cov[si] += acc / cnt as f64;
            }
        }
        for c in &mut cov {
            *c /= seeds as f64;
        }
        // Least-squares slope of cov against ln r.
        let xs: Vec<f64> = seps.iter().map(|&s| (s as f64 / n as f64).ln()).collect();
        let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
        let ybar = cov.iter().sum::<f64>() / cov.len() as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in xs.iter().zip(&cov) {
            num += (x - xbar) * (y - ybar);
            den += (x - xbar) * (x - xbar);
        }
        let slope = num / den;
        assert!(
            (slope + 1.0).abs() < 0.2,
            "covariance slope {slope} vs -1 (cov = {cov:?})"
        );
    }

    #[test]
    fn gamma_zero_is_lebesgue() {
        let bx = Aabb::unit(2);
        let f = sample_log_correlated_field(&bx, 5, 3, 7).unwrap();
        let mu = gmc_mass(&f, 0.0).unwrap();
        let cell_vol = 1.0 / (32.0 * 32.0);
        for &m in &mu.cell_mass {
            assert_eq!(m, cell_vol);
        }
        assert!((mu.total_mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        let bx = Aabb::unit(2);
        let f = sample_log_correlated_field(&bx, 5, 3, 7).unwrap();
        assert!(matches!(gmc_mass(&f, 2.1), Err(Error::GammaOutOfRange(_))));
        assert!(matches!(gmc_mass(&f, -0.5), Err(Error::GammaOutOfRange(_))));
    }

    #[test]
    fn expected_total_mass_is_box_volume() {
        let bx = Aabb::unit(2);
        let seeds = 50;
        let mut totals = Vec::with_capacity(seeds);
        for seed in 0..seeds as u64 {
            let f = sample_log_correlated_field(&bx, 8, 6, seed).unwrap();
            let mu = gmc_mass(&f, 1.0).unwrap();
            totals.push(mu.total_mass);
        }
        let mean = totals.iter().sum::<f64>() / seeds as f64;
        let var = totals
            .iter()
            .map(|t| (t - mean).powi(2))
            .sum::<f64>()
            / (seeds - 1) as f64;
        let se = (var / seeds as f64).sqrt();
        assert!(
            (mean - 1.0).abs() <= 3.0 * se + 1e-12,
            "mean total mass {mean}, se {se}"
        );
    }

    #[test]
    fn mass_ratio_grows_with_gamma() {
        let bx = Aabb::unit(2);
        let f = sample_log_correlated_field(&bx, 7, 5, 3).unwrap();
        let ratio = |gamma: f64| {
            let mu = gmc_mass(&f, gamma).unwrap();
            let max = mu.cell_mass.iter().cloned().fold(0.0, f64::max);
            let min = mu.cell_mass.iter().cloned().fold(f64::INFINITY, f64::min);
            max / min
        };
        let r05 = ratio(0.5);
        let r10 = ratio(1.0);
        let r15 = ratio(1.5);
        assert!(r05 < r10 && r10 < r15, "ratios {r05} {r10} {r15}");
    }

    #[test]
    fn poisson_nearly_empty_at_tiny_intensity() {
        let bx = Aabb::unit(2);
        let f = sample_log_correlated_field(&bx, 5, 3, 1).unwrap();
        let mu = gmc_mass(&f, 1.0).unwrap();
        for seed in 0..10u64 {
            let cloud = sample_poisson_points(&mu, 1e-12, seed).unwrap();
            assert!(cloud.points.len() <= 2);
        }
    }

    #[test]
    fn poisson_total_count_matches_mean() {
        let bx = Aabb::unit(2);
        let f = sample_log_correlated_field(&bx, 6, 4, 5).unwrap();
        let mu = gmc_mass(&f, 0.8).unwrap();
        let m = 500.0;
        let target = m * mu.total_mass;
        let seeds = 200;
        let counts: Vec<f64> = (0..seeds as u64)
            .map(|seed| sample_poisson_points(&mu, m, seed).unwrap().points.len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / seeds as f64;
        // Poisson variance equals the mean.
        let se = (target / seeds as f64).sqrt();
        assert!(
            (mean - target).abs() <= 3.0 * se,
            "mean count {mean} vs target {target} (se {se})"
        );
        for cloud in (0..3u64).map(|s| sample_poisson_points(&mu, m, s).unwrap()) {
            for p in &cloud.points {
                assert!(bx.contains(*p));
            }
        }
    }

    #[test]
    fn poisson_quadrants_exchangeable_on_uniform_measure() {
        let bx = Aabb::unit(2);
        let f = sample_log_correlated_field(&bx, 6, 4, 11).unwrap();
        let mu = gmc_mass(&f, 0.0).unwrap();
        let mut quad = [0usize; 4];
        for seed in 0..50u64 {
            let cloud = sample_poisson_points(&mu, 1000.0, seed).unwrap();
            for p in &cloud.points {
                let qx = usize::from(p[0] >= 0.5);
                let qy = usize::from(p[1] >= 0.5);
                quad[2 * qy + qx] += 1;
            }
        }
        let total: usize = quad.iter().sum();
        let expect = total as f64 / 4.0;
        let chi2: f64 = quad
            .iter()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        // Chi-square with 3 degrees of freedom, p = 0.001 critical value.
        assert!(chi2 < 16.27, "chi2 {chi2}, quadrants {quad:?}");
    }

    #[test]
    fn poisson_two_cell_split_is_binomial() {
        // Measure supported on two cells with masses (a, b): given the total
        // count, the split must be Binomial(n, a/(a+b)).
        let bx = Aabb::unit(2);
        let (a, b) = (0.3, 0.7);
        let mu = GmcMeasure::from_cell_masses(bx, 2, vec![a, b, 0.0, 0.0]);
        let m = 40.0;
        let p = a / (a + b);
        let mut in_first = 0usize;
        let mut total = 0usize;
        for seed in 0..500u64 {
            let cloud = sample_poisson_points(&mu, m, seed).unwrap();
            for pt in &cloud.points {
                total += 1;
                // Cell 0 is the lower-left quadrant cell [0, 0.5) x [0, 0.5).
                if pt[0] < 0.5 && pt[1] < 0.5 {
                    in_first += 1;
                }
            }
        }
        let expect = total as f64 * p;
        let chi2 = (in_first as f64 - expect).powi(2) / expect
            + ((total - in_first) as f64 - (total as f64 - expect)).powi(2)
                / (total as f64 - expect);
        // 1 degree of freedom, p = 0.001 critical value.
        assert!(chi2 < 10.83, "chi2 {chi2} ({in_first}/{total} vs p={p})");
    }

    #[test]
    fn poisson_seed_deterministic() {
        let bx = Aabb::unit(2);
        let f = sample_log_correlated_field(&bx, 6, 4, 2).unwrap();
        let mu = gmc_mass(&f, 1.0).unwrap();
        let a = sample_poisson_points(&mu, 300.0, 7).unwrap();
        let b = sample_poisson_points(&mu, 300.0, 7).unwrap();
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            for jx in 0..2 {
                assert_eq!(p[jx].to_bits(), q[jx].to_bits());
            }
        }
    }

    #[test]
    fn holder_uniform_measure_passes() {
        let bx = Aabb::unit(2);
        let f = sample_log_correlated_field(&bx, 8, 6, 1).unwrap();
        let mu = gmc_mass(&f, 0.0).unwrap();
        // mu(B_r) = pi r^2; sandwich with exponents d -/+ 0.5 holds once r is
        // small enough that pi r^2 <= r^1.5, i.e. r <= 2^-4.
        let rep = check_holder(&mu, 2.5, 1.5, &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]).unwrap();
        assert!(rep.checks > 0);
        assert_eq!(rep.violations, 0, "{rep:?}");
    }

    #[test]
    fn holder_rejects_equal_exponents() {
        let bx = Aabb::unit(2);
        let f = sample_log_correlated_field(&bx, 5, 3, 1).unwrap();
        let mu = gmc_mass(&f, 0.0).unwrap();
        assert!(check_holder(&mu, 2.0, 2.0, &[0.1]).is_err());
    }

    #[test]
    fn cell_bounds_on_spoofed_grid() {
        // Grid of spacing h viewed as a Poisson sample of intensity h^-d.
        let h = 1.0 / 8.0;
        let t = build_grid_tiling(&Aabb::unit(2), h).unwrap();
        let m = h.powi(-2);
        let rep = check_cell_bounds(&t, m, 2.5, 1.5);
        assert!(rep.pass(), "{rep:?}");
        assert!((rep.min_inradius - h / 2.0).abs() < 1e-12);
    }

    #[test]
    fn cell_bounds_negative_control_single_cell() {
        let t = build_grid_tiling(&Aabb::unit(2), 1.0).unwrap();
        let rep = check_cell_bounds(&t, 4096.0, 2.5, 1.5);
        assert!(!rep.circumradius_violations.is_empty());
    }

    #[test]
    fn spread_and_density_validators_agree_with_radii() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let bx = Aabb::unit(2);
        let u = bx.shrink(0.2);
        for seed in [1u64, 2, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sites: Vec<Vec3> = (0..300)
                .map(|_| [rng.random(), rng.random(), 0.0])
                .collect();
            let t = build_voronoi_tiling(&sites, &bx).unwrap();
            // (a): find the largest dyadic r that passes the spread check and
            // confirm all interior-cell inradii exceed it.
            let mut r = 0.25;
            while r > 1e-4 && !check_spread(&sites, r, &u) {
                r /= 2.0;
            }
            if check_spread(&sites, r, &u) {
                for (v, cell) in t.cells.iter().enumerate() {
                    if u.contains(t.sites[v]) {
                        assert!(
                            cell.inradius_about(t.sites[v]) >= r,
                            "seed {seed}: inradius below certified r={r}"
                        );
                    }
                }
            }
            // (b): find a k that passes the density check and confirm the
            // circumradius bound 4 k sqrt(d).
            let delta = 0.2;
            let mut k = 0.02;
            while k < 1.0 && !check_density(&sites, k, delta, &u) {
                k *= 2.0;
            }
            if check_density(&sites, k, delta, &u) {
                let bound = 4.0 * k * 2.0f64.sqrt();
                for (v, cell) in t.cells.iter().enumerate() {
                    if u.contains(t.sites[v]) {
                        assert!(
                            cell.circumradius_about(t.sites[v]) <= bound,
                            "seed {seed}: circumradius above 4k sqrt(d) with k={k}"
                        );
                    }
                }
            }
        }
    }
}
