//! Implementations behind the CLI subcommands, shared with the acceptance
//! suite.

use crate::config::{
    ConvergenceConfig, CounterexampleConfig, GenerateConfig, HarmonicMeasureConfig,
    SolveConfig, TilingSpec, WalkConfig,
};
use crate::harmonics::{self, Harmonic};
use crate::schema;
use orthowalk::fvm::{self, Domain, SubdomainIndex};
use orthowalk::gmc::{gmc_mass, sample_log_correlated_field, sample_poisson_points, GmcMeasure};
use orthowalk::solver::{self, HarmonicSolution};
use orthowalk::tilings::{
    build_counterexample_graph, build_grid_tiling, build_voronoi_tiling, hypothesis_report,
    nearest_vertex, Tiling,
};
use orthowalk::vec3::{self, Aabb};
use orthowalk::walk;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command failure, carrying the CI exit code.
#[derive(Debug)]
pub enum CmdError {
    /// Bad configuration or input file: exit 2.
    Config(String),
    /// Numerical failure (non-convergence, truncated walk): exit 3.
    Numerical(String),
    /// Structural invariant violations (verify): exit 4.
    Invariant(Vec<String>),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Numerical(_) => 3,
            CmdError::Invariant(_) => 4,
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Config(m) => write!(f, "config error: {m}"),
            CmdError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CmdError::Invariant(list) => write!(f, "invariant failures: {list:?}"),
        }
    }
}

impl std::error::Error for CmdError {}

impl From<orthowalk::Error> for CmdError {
    fn from(e: orthowalk::Error) -> Self {
        match e {
            orthowalk::Error::NoConvergence { .. } | orthowalk::Error::Truncated { .. } => {
                CmdError::Numerical(e.to_string())
            }
            other => CmdError::Config(other.to_string()),
        }
    }
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError::Config(format!("{e:#}"))
    }
}

pub type CmdResult<T> = Result<T, CmdError>;

/// A uniform unit-intensity measure on `bx`, for plain Poisson sampling.
fn uniform_measure(bx: Aabb) -> GmcMeasure {
    let vol = bx.volume();
    GmcMeasure::from_cell_masses(bx, 1, vec![vol])
}

/// Materialize a tiling from its spec.
pub fn build_tiling(spec: &TilingSpec) -> CmdResult<Tiling> {
    match spec {
        TilingSpec::Grid { dim, h } => {
            check_dim(*dim)?;
            Ok(build_grid_tiling(&Aabb::unit(*dim), *h)?)
        }
        TilingSpec::Poisson { dim, m, seed } => {
            check_dim(*dim)?;
            let bx = Aabb::unit(*dim);
            let cloud = sample_poisson_points(&uniform_measure(bx), *m, *seed)?;
            Ok(build_voronoi_tiling(&cloud.points, &bx)?)
        }
        TilingSpec::Gmc { dim, m, gamma, j, k, seed } => {
            check_dim(*dim)?;
            let bx = Aabb::unit(*dim);
            let field = sample_log_correlated_field(&bx, *j, *k, *seed)?;
            let mu = gmc_mass(&field, *gamma)?;
            // Distinct stream for the point sample so field and cloud stay
            // independently reproducible.
            let cloud = sample_poisson_points(&mu, *m, seed.wrapping_add(1))?;
            Ok(build_voronoi_tiling(&cloud.points, &bx)?)
        }
        TilingSpec::File { path } => Ok(schema::read_tiling(path)?),
    }
}

fn check_dim(dim: usize) -> CmdResult<()> {
    if (2..=3).contains(&dim) {
        Ok(())
    } else {
        Err(CmdError::Config(format!("dimension {dim} unsupported (need 2 or 3)")))
    }
}

fn spec_seed(spec: &TilingSpec) -> u64 {
    match spec {
        TilingSpec::Poisson { seed, .. } | TilingSpec::Gmc { seed, .. } => *seed,
        _ => 0,
    }
}

/// Default solve region: the tiling box shrunk by `margin` times its shortest
/// side.
pub fn default_domain(t: &Tiling, margin: f64) -> Aabb {
    let min_side = (0..t.dim).map(|j| t.domain_box.side(j)).fold(f64::INFINITY, f64::min);
    t.domain_box.shrink(margin * min_side)
}

/// Everything the convergence experiments need from one Dirichlet solve.
pub struct SolveReport {
    pub sub: SubdomainIndex,
    pub boundary_data: Vec<f64>,
    pub solution: HarmonicSolution,
    pub sup_error: f64,
    pub energy: f64,
    pub energy_bound: f64,
    pub m_const: f64,
    pub l_const: f64,
    pub sum_dqe: f64,
    pub epsilon: f64,
    pub vol_uhat: f64,
}

/// Solve the Dirichlet problem for a registry harmonic on `u_box` and compare
/// against the exact polynomial.
pub fn solve_harmonic(t: &Tiling, h: &Harmonic, u_box: &Aabb) -> CmdResult<SolveReport> {
    if h.dim != t.dim {
        return Err(CmdError::Config(format!(
            "harmonic {} is {}-dimensional, tiling is {}-dimensional",
            h.id, h.dim, t.dim
        )));
    }
    let sub = fvm::subdomain(t, &Domain::Box(*u_box))?;
    let g: Vec<f64> = t.sites.iter().map(|&s| (h.eval)(s)).collect();
    let solution = solver::solve_dirichlet(t, &sub, &g)?;
    let sup_error = sub
        .interior
        .iter()
        .map(|&v| (solution.values[v] - g[v]).abs())
        .fold(0.0, f64::max);
    let diff: Vec<f64> = solution.values.iter().zip(&g).map(|(a, b)| a - b).collect();
    let energy = fvm::dirichlet_energy(t, &sub, &diff);
    // Bounds are taken over the closure region (bounding box of closure
    // cells), where the scheme actually samples the polynomial.
    let hat_box = closure_bbox(t, &sub);
    let m_const = harmonics::m_const(h, &hat_box);
    let l_const = harmonics::l_const(h, &hat_box);
    let epsilon = solver::sub_epsilon(t, &sub);
    let sum_dqe: f64 = sub
        .closure_edges
        .iter()
        .map(|&ei| t.dim as f64 * t.edges[ei].qe_volume)
        .sum();
    let energy_bound = 9.0 * m_const * m_const * epsilon * epsilon * sum_dqe;
    Ok(SolveReport {
        vol_uhat: sub.closure_volume,
        sub,
        boundary_data: g,
        solution,
        sup_error,
        energy,
        energy_bound,
        m_const,
        l_const,
        sum_dqe,
        epsilon,
    })
}

fn closure_bbox(t: &Tiling, sub: &SubdomainIndex) -> Aabb {
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for &v in sub.interior.iter().chain(&sub.boundary) {
        for p in &t.cells[v].vertices {
            for j in 0..t.dim {
                min[j] = min[j].min(p[j]);
                max[j] = max[j].max(p[j]);
            }
        }
    }
    Aabb::new(min, max, t.dim)
}

/// Sup-norm bound for 2D convergence: `inf_k 6 k M eps vol(U-hat) +
/// 2 (sqrt(2)/k + eps) L`, evaluated on a log-spaced k grid.
pub fn sup_bound_2d(m_const: f64, l_const: f64, eps: f64, vol_uhat: f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in -160..=200 {
        let k = 10f64.powf(i as f64 / 40.0);
        let val = 6.0 * k * m_const * eps * vol_uhat
            + 2.0 * (std::f64::consts::SQRT_2 / k + eps) * l_const;
        best = best.min(val);
    }
    best
}

/// Decay shape for 3D convergence (the fitted constant multiplies this).
pub fn decay_shape_3d(m_const: f64, eps: f64) -> f64 {
    m_const * eps * (1.0 / eps).ln().max(1.0)
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub level: String,
    pub epsilon: f64,
    pub m_const: f64,
    pub l_const: f64,
    pub vol_uhat: f64,
    pub sum_dqe: f64,
    pub sup_error: f64,
    pub energy: f64,
    pub energy_bound: f64,
    pub theorem_bound: f64,
    pub energy_ok: bool,
    pub sup_ok: bool,
}

pub fn convergence_rows(cfg: &ConvergenceConfig) -> CmdResult<Vec<ConvergenceRow>> {
    if cfg.levels.len() < 3 {
        return Err(CmdError::Config(format!(
            "need at least 3 refinement levels, got {}",
            cfg.levels.len()
        )));
    }
    let h = harmonics::lookup(&cfg.harmonic)
        .ok_or_else(|| CmdError::Config(format!("unknown harmonic id {:?}", cfg.harmonic)))?;
    let mut rows = Vec::new();
    for spec in &cfg.levels {
        let t = build_tiling(spec)?;
        let u_box = match &cfg.domain {
            Some(b) => b.to_aabb(t.dim)?,
            None => default_domain(&t, cfg.margin),
        };
        let rep = solve_harmonic(&t, h, &u_box)?;
        let theorem_bound = if t.dim == 2 {
            sup_bound_2d(rep.m_const, rep.l_const, rep.epsilon, rep.vol_uhat)
        } else {
            decay_shape_3d(rep.m_const, rep.epsilon)
        };
        let energy_ok = rep.energy <= rep.energy_bound + 1e-9;
        let sup_ok = if t.dim == 2 {
            rep.sup_error <= theorem_bound + 1e-9
        } else {
            rep.sup_error.is_finite() && theorem_bound > 0.0
        };
        rows.push(ConvergenceRow {
            level: spec.label(),
            epsilon: rep.epsilon,
            m_const: rep.m_const,
            l_const: rep.l_const,
            vol_uhat: rep.vol_uhat,
            sum_dqe: rep.sum_dqe,
            sup_error: rep.sup_error,
            energy: rep.energy,
            energy_bound: rep.energy_bound,
            theorem_bound,
            energy_ok,
            sup_ok,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log sup_error` against `log epsilon`.
pub fn loglog_slope(rows: &[ConvergenceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sup_error > 0.0 && r.epsilon > 0.0)
        .map(|r| (r.epsilon.ln(), r.sup_error.ln()))
        .collect();
    fit_slope(&pts)
}

pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

fn meta_header(out: &mut String, command: &str, config_json: &str) {
    let _ = writeln!(out, "# command={command}");
    let _ = writeln!(out, "# version={VERSION}");
    let _ = writeln!(out, "# config={config_json}");
}

pub fn cmd_convergence(cfg: &ConvergenceConfig) -> CmdResult<String> {
    let rows = convergence_rows(cfg)?;
    let mut out = String::new();
    meta_header(&mut out, "convergence", &serde_json::to_string(cfg).unwrap());
    let _ = writeln!(
        out,
        "level,epsilon,m_const,l_const,vol_uhat,sum_dqe,sup_error,energy,energy_bound,theorem_bound,energy_ok,sup_ok"
    );
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.epsilon,
            r.m_const,
            r.l_const,
            r.vol_uhat,
            r.sum_dqe,
            r.sup_error,
            r.energy,
            r.energy_bound,
            r.theorem_bound,
            r.energy_ok,
            r.sup_ok
        );
    }
    let _ = writeln!(out, "# loglog_slope={}", loglog_slope(&rows));
    // Fitted multiplicative constant against the theorem-bound column.
    let fitted_c = rows
        .iter()
        .filter(|r| r.theorem_bound > 0.0)
        .map(|r| r.sup_error / r.theorem_bound)
        .fold(0.0f64, f64::max);
    let _ = writeln!(out, "# fitted_c={fitted_c}");
    Ok(out)
}

pub fn cmd_generate(cfg: &GenerateConfig) -> CmdResult<(String, String)> {
    match cfg {
        GenerateConfig::Counterexample { d, big_n, period } => {
            let g = build_counterexample_graph(*d, *big_n, *period)?;
            let file = schema::graph_to_file(&g, 0);
            let json = serde_json::to_string_pretty(&file).map_err(anyhow::Error::from)?;
            let stdout = format!(
                "counterexample graph: {} vertices ({} big), d={d} N={big_n} T={period}\n",
                g.positions.len(),
                g.big_count
            );
            Ok((json, stdout))
        }
        other => {
            let spec = other.as_tiling_spec().expect("non-counterexample kinds");
            let t = build_tiling(&spec)?;
            let json = schema::write_tiling(&t, &spec.label(), spec_seed(&spec))?;
            let rep = hypothesis_report(&t);
            let stdout = format!(
                "tiling: {} cells, epsilon={} mesh_gap={} min_cell_volume={} hypothesis_ii_ok={} hypothesis_iii_alpha={}\n",
                t.vertex_count(),
                rep.epsilon,
                rep.mesh_gap,
                rep.min_cell_volume,
                rep.hypothesis_ii_ok,
                rep.hypothesis_iii_alpha
            );
            Ok((json, stdout))
        }
    }
}

pub fn cmd_solve(cfg: &SolveConfig) -> CmdResult<String> {
    let h = harmonics::lookup(&cfg.harmonic)
        .ok_or_else(|| CmdError::Config(format!("unknown harmonic id {:?}", cfg.harmonic)))?;
    let t = build_tiling(&cfg.tiling)?;
    let u_box = match &cfg.domain {
        Some(b) => b.to_aabb(t.dim)?,
        None => default_domain(&t, cfg.margin),
    };
    let rep = solve_harmonic(&t, h, &u_box)?;
    let mut out = String::new();
    meta_header(&mut out, "solve", &serde_json::to_string(cfg).unwrap());
    let _ = writeln!(out, "# sup_error={}", rep.sup_error);
    let _ = writeln!(out, "# energy={}", rep.energy);
    let _ = writeln!(out, "# energy_bound={}", rep.energy_bound);
    let _ = writeln!(out, "# residual_inf={}", rep.solution.residual_inf);
    let _ = writeln!(out, "vertex,x1,x2,x3,interior,h_d,h_c");
    for &v in rep.sub.interior.iter().chain(&rep.sub.boundary) {
        let s = t.sites[v];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            v,
            s[0],
            s[1],
            s[2],
            rep.sub.is_interior[v],
            rep.solution.values[v],
            rep.boundary_data[v]
        );
    }
    Ok(out)
}

pub fn cmd_walk(cfg: &WalkConfig) -> CmdResult<String> {
    let mut out = String::new();
    meta_header(&mut out, "walk", &serde_json::to_string(cfg).unwrap());
    match cfg {
        WalkConfig::Tiling { tiling, start, domain, margin, seed } => {
            let t = build_tiling(tiling)?;
            let u_box = match domain {
                Some(b) => b.to_aabb(t.dim)?,
                None => default_domain(&t, *margin),
            };
            let sub = fvm::subdomain(&t, &Domain::Box(u_box))?;
            let mut p = vec3::ZERO;
            for (j, &x) in start.iter().enumerate().take(3) {
                p[j] = x;
            }
            let v0 = nearest_vertex(&t, p);
            if !sub.is_interior[v0] {
                return Err(CmdError::Config(format!(
                    "start point snaps to vertex {v0}, which is outside the domain"
                )));
            }
            let absorbing: Vec<bool> = sub.is_interior.iter().map(|&i| !i).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let path = walk::run_until_exit(&t, v0, &absorbing, &mut rng)?;
            let _ = writeln!(out, "# steps={}", path.steps());
            let _ = writeln!(out, "step,vertex,x1,x2,x3");
            for (i, &v) in path.vertices.iter().enumerate() {
                let s = t.sites[v];
                let _ = writeln!(out, "{},{},{},{},{}", i, v, s[0], s[1], s[2]);
            }
        }
        WalkConfig::Counterexample { d, big_n, period, seed } => {
            let g = build_counterexample_graph(*d, *big_n, *period)?;
            let mut absorbing = vec![false; g.positions.len()];
            for v in g.left_boundary().into_iter().chain(g.right_boundary()) {
                absorbing[v] = true;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let path = walk::run_until_exit(&g, g.big_middle()[0], &absorbing, &mut rng)?;
            let _ = writeln!(out, "# steps={}", path.steps());
            let header: Vec<String> = (1..=*d).map(|j| format!("x{j}")).collect();
            let _ = writeln!(out, "step,vertex,{}", header.join(","));
            for (i, &v) in path.vertices.iter().enumerate() {
                let coords: Vec<String> =
                    g.positions[v].iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "{},{},{}", i, v, coords.join(","));
            }
        }
    }
    Ok(out)
}

pub fn cmd_harmonic_measure(cfg: &HarmonicMeasureConfig) -> CmdResult<String> {
    check_dim(cfg.dim)?;
    if cfg.levels.is_empty() || cfg.starts.is_empty() {
        return Err(CmdError::Config("need at least one level and one start".into()));
    }
    let center = cfg.ball.center_vec();
    let radius = cfg.ball.radius;
    if radius <= 0.0 {
        return Err(CmdError::Config("ball radius must be positive".into()));
    }
    let mut out = String::new();
    meta_header(&mut out, "harmonic-measure", &serde_json::to_string(cfg).unwrap());
    let _ = writeln!(
        out,
        "level,m,start,vertex,weak_distance,exp_x1,exp_x2,exp_x3,start_x1,start_x2,start_x3"
    );
    for (li, &m) in cfg.levels.iter().enumerate() {
        let spec = TilingSpec::Poisson {
            dim: cfg.dim,
            m,
            seed: cfg.seed.wrapping_add(li as u64),
        };
        let t = build_tiling(&spec)?;
        let sub = fvm::subdomain(&t, &Domain::Ball { center, radius })?;
        for (si, start) in cfg.starts.iter().enumerate() {
            let mut p = vec3::ZERO;
            for (j, &x) in start.iter().enumerate().take(3) {
                p[j] = x;
            }
            let v = nearest_vertex(&t, p);
            if !sub.is_interior[v] {
                return Err(CmdError::Config(format!(
                    "start {si} snaps to vertex {v} outside the ball"
                )));
            }
            let mu = solver::discrete_harmonic_measure(&t, &sub, v)?;
            let wd = solver::weak_distance(&mu, &t, t.sites[v], center, radius, cfg.l_max);
            let mut exp = [0.0f64; 3];
            for j in 0..t.dim {
                exp[j] = mu.expectation(|b| t.sites[b][j]);
            }
            let s = t.sites[v];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                li, m, si, v, wd, exp[0], exp[1], exp[2], s[0], s[1], s[2]
            );
        }
    }
    Ok(out)
}

pub fn cmd_counterexample(cfg: &CounterexampleConfig) -> CmdResult<String> {
    if cfg.n_walks == 0 {
        return Err(CmdError::Config("n_walks must be positive".into()));
    }
    let mut out = String::new();
    meta_header(&mut out, "counterexample", &serde_json::to_string(cfg).unwrap());
    let _ = writeln!(out, "n,p_exact,p_formula,p_mc,mc_stderr,n_walks,one_minus_p");
    for &big_n in &cfg.big_n_list {
        let g = build_counterexample_graph(cfg.d, big_n, cfg.period)?;
        let res = walk::counterexample_experiment(&g, cfg.n_walks, cfg.seed)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            big_n,
            res.p_exact,
            res.p_formula,
            res.p_mc,
            res.mc_stderr,
            res.n_walks,
            1.0 - res.p_exact
        );
    }
    Ok(out)
}

/// Structural invariant suite over a tiling. Returns the named failures.
pub fn verify_tiling(t: &Tiling) -> Vec<String> {
    let mut failures = Vec::new();
    let d = t.dim as f64;
    let scale = t.domain_box.diameter();

    for (ei, e) in t.edges.iter().enumerate() {
        let rel = (e.conductance * e.length - e.facet_area).abs()
            / e.facet_area.max(f64::MIN_POSITIVE);
        if rel > 1e-9 {
            failures.push(format!("edge-conductance-identity(edge={ei})"));
        }
        let dual = (e.length * e.facet_area - d * e.qe_volume).abs()
            / (d * e.qe_volume).max(f64::MIN_POSITIVE);
        if dual > 1e-9 {
            failures.push(format!("edge-dual-volume-identity(edge={ei})"));
        }
        let explicit = orthowalk::geometry::explicit_cone_pair_volume(
            t.sites[e.u],
            t.sites[e.v],
            t.edge_facet(e),
            t.dim,
        );
        if (explicit - e.qe_volume).abs() > 1e-9 * e.qe_volume.max(f64::MIN_POSITIVE) {
            failures.push(format!("edge-explicit-qe(edge={ei})"));
        }
    }

    let rep = orthowalk::tilings::validate_orthogonality(t);
    if !rep.pass {
        failures.push(format!(
            "orthogonality(angle_defect={},site_defect={})",
            rep.max_angle_defect, rep.max_site_defect
        ));
    }

    for (ci, cell) in t.cells.iter().enumerate() {
        match orthowalk::geometry::polytope_volume(cell) {
            Ok(vol) => {
                if (vol - cell.volume).abs() > 1e-8 * cell.volume.abs().max(1e-12) {
                    failures.push(format!("cell-volume(cell={ci})"));
                }
            }
            Err(_) => failures.push(format!("cell-degenerate(cell={ci})")),
        }
    }

    let total: f64 = t.cells.iter().map(|c| c.volume).sum();
    if (total - t.domain_box.volume()).abs() > 1e-8 * t.domain_box.volume() {
        failures.push(format!("partition-volume(total={total})"));
    }

    // Identity suite on a central subdomain, when one exists.
    let min_side = (0..t.dim).map(|j| t.domain_box.side(j)).fold(f64::INFINITY, f64::min);
    if let Ok(sub) = fvm::subdomain(t, &Domain::Box(t.domain_box.shrink(0.25 * min_side))) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Discrete divergence theorem, random pairs.
        for trial in 0..20 {
            // f supported on the interior, as the identity requires.
            let mut f = vec![0.0; t.vertex_count()];
            for &v in &sub.interior {
                f[v] = rng.random::<f64>() * 2.0 - 1.0;
            }
            let mut theta = fvm::EdgeField::zeros(t);
            for x in theta.0.iter_mut() {
                *x = rng.random::<f64>() * 2.0 - 1.0;
            }
            let div = fvm::divergence(t, &theta);
            let lhs: f64 = sub.interior.iter().map(|&v| div[v] * f[v]).sum();
            let grad = fvm::gradient(t, &f);
            let rhs: f64 = -sub
                .closure_edges
                .iter()
                .map(|&ei| theta.0[ei] * grad.0[ei])
                .sum::<f64>();
            let mag = lhs.abs().max(rhs.abs()).max(1e-30);
            if (lhs - rhs).abs() > 1e-10 * mag {
                failures.push(format!("divergence-theorem(trial={trial})"));
                break;
            }
        }
        // Linear functions lie in the Laplacian kernel at interior vertices.
        if let Some(worst) = linear_kernel_defect(t, 10, 1) {
            if worst > 1.0 {
                failures.push(format!("linear-kernel(normalized_defect={worst})"));
            }
        }
        // Dual variational principle with the tautologically feasible field.
        let mut f = vec![0.0; t.vertex_count()];
        for &v in &sub.interior {
            f[v] = rng.random::<f64>() * 2.0 - 1.0;
        }
        let theta = fvm::conductance_gradient(t, &f);
        match fvm::dual_feasible_energy_bound(t, &sub, &f, &theta) {
            Ok(verdict) if verdict.holds => {}
            _ => failures.push("dual-variational".to_string()),
        }
        let _ = scale;
    }
    failures
}

/// Max over 10 random directions and interior vertices of
/// `|Delta_a l_p(v)| / (1e-8 ||p|| a(v) diam)`: at most 1 when the linear
/// kernel identity holds to tolerance. Returns None if the tiling has no
/// interior site.
pub fn linear_kernel_defect(t: &Tiling, n_dirs: usize, seed: u64) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diam = t.domain_box.diameter();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut any = false;
    for _ in 0..n_dirs {
        let mut p = vec3::ZERO;
        for j in 0..t.dim {
            p[j] = rng.random::<f64>() * 2.0 - 1.0;
        }
        let c: f64 = rng.random();
        let p_norm = vec3::norm(p);
        let f: Vec<f64> = t.sites.iter().map(|&s| vec3::dot(p, s) + c).collect();
        let lap = fvm::laplacian_apply(t, &f);
        for v in 0..t.vertex_count() {
            if t.boundary_site[v] {
                continue;
            }
            any = true;
            let allowed = 1e-8 * p_norm * t.weighted_degree(v) * diam;
            worst = worst.max(lap[v].abs() / allowed.max(f64::MIN_POSITIVE));
        }
    }
    if any {
        Some(worst)
    } else {
        None
    }
}

pub fn cmd_verify(path: &str) -> CmdResult<String> {
    let t = schema::read_tiling(path)?;
    let failures = verify_tiling(&t);
    if failures.is_empty() {
        Ok("{\"pass\":true,\"failures\":[]}\n".to_string())
    } else {
        Err(CmdError::Invariant(failures))
    }
}
