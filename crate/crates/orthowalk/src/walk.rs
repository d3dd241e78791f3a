//! The conductance random walk: single steps, runs until exit, path-distance
//! comparison, exact hitting probabilities on combinatorial graphs, and the
//! Monte Carlo experiment on the sphere-packing counterexample.

use crate::error::{Error, Result};
use crate::solver::pcg;
use crate::tilings::{CombinatorialGraph, Tiling};
use crate::vec3::{self, Vec3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Hard cap on steps per walk before reporting truncation.
pub const MAX_STEPS: u64 = 100_000_000;

/// Anything the walk can step on: a vertex set with per-neighbor transition
/// weights.
pub trait WalkGraph: Sync {
    fn vertex_count(&self) -> usize;
    /// Neighbor list with unnormalized transition weights.
    fn neighbor_weights(&self, v: usize) -> Vec<(usize, f64)>;
}

impl WalkGraph for Tiling {
    fn vertex_count(&self) -> usize {
        self.sites.len()
    }
    fn neighbor_weights(&self, v: usize) -> Vec<(usize, f64)> {
        self.adjacency[v]
            .iter()
            .map(|&(w, ei)| (w, self.edges[ei].conductance))
            .collect()
    }
}

impl WalkGraph for CombinatorialGraph {
    fn vertex_count(&self) -> usize {
        self.positions.len()
    }
    fn neighbor_weights(&self, v: usize) -> Vec<(usize, f64)> {
        self.adjacency[v].iter().map(|&w| (w, 1.0)).collect()
    }
}

/// One step of the weighted walk from `v`: inverse-CDF draw over the
/// neighbor list in stored (sorted) order.
pub fn walk_step<G: WalkGraph>(g: &G, v: usize, rng: &mut impl Rng) -> Result<usize> {
    let nbrs = g.neighbor_weights(v);
    if nbrs.is_empty() {
        return Err(Error::IsolatedVertex(v));
    }
    let total: f64 = nbrs.iter().map(|&(_, w)| w).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for &(w, c) in &nbrs {
        acc += c;
        if u < acc {
            return Ok(w);
        }
    }
    Ok(nbrs.last().unwrap().0)
}

/// A completed walk: the vertex sequence, ending at the first absorbing
/// vertex hit.
#[derive(Debug, Clone)]
pub struct WalkPath {
    pub vertices: Vec<usize>,
}

impl WalkPath {
    pub fn exit_vertex(&self) -> usize {
        *self.vertices.last().unwrap()
    }
    pub fn steps(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Run from `start` until a vertex with `absorbing` true is reached.
pub fn run_until_exit<G: WalkGraph>(
    g: &G,
    start: usize,
    absorbing: &[bool],
    rng: &mut impl Rng,
) -> Result<WalkPath> {
    let mut vertices = vec![start];
    let mut v = start;
    let mut steps: u64 = 0;
    while !absorbing[v] {
        v = walk_step(g, v, rng)?;
        vertices.push(v);
        steps += 1;
        if steps >= MAX_STEPS {
            return Err(Error::Truncated { steps });
        }
    }
    Ok(WalkPath { vertices })
}

/// Discrete Fréchet distance between two polylines, after subdividing each
/// segment so no piece is longer than 1% of the shorter curve's diameter.
/// Symmetric, zero on identical curves, and insensitive to reparametrization.
pub fn cmp_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let diam = |c: &[Vec3]| -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..c.len() {
            for j in (i + 1)..c.len() {
                m = m.max(vec3::dist(c[i], c[j]));
            }
        }
        m
    };
    let target = (diam(a).min(diam(b)) * 0.01).max(1e-12);
    let pa = subdivide(a, target);
    let pb = subdivide(b, target);
    discrete_frechet(&pa, &pb)
}

fn subdivide(c: &[Vec3], max_len: f64) -> Vec<Vec3> {
    let mut out = vec![c[0]];
    for win in c.windows(2) {
        let (p, q) = (win[0], win[1]);
        let len = vec3::dist(p, q);
        let pieces = (len / max_len).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            out.push(vec3::lerp(p, q, k as f64 / pieces as f64));
        }
    }
    out
}

fn discrete_frechet(a: &[Vec3], b: &[Vec3]) -> f64 {
    let (n, m) = (a.len(), b.len());
    // Rolling rows of the standard dynamic program.
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for j in 0..m {
        let d = vec3::dist(a[0], b[j]);
        prev[j] = if j == 0 { d } else { prev[j - 1].max(d) };
    }
    for i in 1..n {
        for j in 0..m {
            let d = vec3::dist(a[i], b[j]);
            cur[j] = if j == 0 {
                prev[0].max(d)
            } else {
                prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d)
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Exact probability of hitting `target_set` before `avoid_set`, starting
/// from `start`, for the unit-conductance walk on a combinatorial graph.
/// Solved as a Dirichlet problem: harmonic off the absorbing sets, 1 on the
/// target, 0 on the avoided set.
pub fn hitting_probability_exact(
    g: &CombinatorialGraph,
    start: usize,
    target_set: &[usize],
    avoid_set: &[usize],
) -> Result<f64> {
    let n = g.positions.len();
    let mut fixed_val = vec![f64::NAN; n];
    for &v in avoid_set {
        fixed_val[v] = 0.0;
    }
    for &v in target_set {
        fixed_val[v] = 1.0;
    }
    if !fixed_val[start].is_nan() {
        return Ok(fixed_val[start]);
    }
    let free: Vec<usize> = (0..n).filter(|&v| fixed_val[v].is_nan()).collect();
    let mut local = vec![usize::MAX; n];
    for (i, &v) in free.iter().enumerate() {
        local[v] = i;
    }
    // Anchoring check: every free component must reach an absorbing vertex.
    let mut reached = vec![false; free.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, &v) in free.iter().enumerate() {
        if g.adjacency[v].iter().any(|&w| !fixed_val[w].is_nan()) {
            reached[i] = true;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        for &w in &g.adjacency[free[i]] {
            if fixed_val[w].is_nan() && !reached[local[w]] {
                reached[local[w]] = true;
                stack.push(local[w]);
            }
        }
    }
    if reached.iter().any(|&r| !r) {
        return Err(Error::DisconnectedComponent);
    }
    let diag: Vec<f64> = free.iter().map(|&v| g.adjacency[v].len() as f64).collect();
    let mut b = vec![0.0; free.len()];
    for (i, &v) in free.iter().enumerate() {
        for &w in &g.adjacency[v] {
            if !fixed_val[w].is_nan() {
                b[i] += fixed_val[w];
            }
        }
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        for (i, &v) in free.iter().enumerate() {
            let mut acc = diag[i] * x[i];
            for &w in &g.adjacency[v] {
                if fixed_val[w].is_nan() {
                    acc -= x[local[w]];
                }
            }
            out[i] = acc;
        }
    };
    let (x, _) = pcg(&apply, &diag, &b, 20 * free.len().max(50))?;
    Ok(x[local[start]])
}

/// Result of the counterexample hitting experiment: exact probability from
/// the Dirichlet solve and a Monte Carlo estimate with its standard error.
#[derive(Debug, Clone)]
pub struct HittingResult {
    pub p_exact: f64,
    pub p_mc: f64,
    pub mc_stderr: f64,
    pub n_walks: u64,
    /// The claimed closed form (2N+1)/(6N+1).
    pub p_formula: f64,
}

/// From the middle big vertex, hit the left big boundary layer before the
/// right small boundary layer. Walks run in parallel with one deterministic
/// RNG stream per walk, so results are independent of thread count.
pub fn counterexample_experiment(
    g: &CombinatorialGraph,
    n_walks: u64,
    seed: u64,
) -> Result<HittingResult> {
    let left = g.left_boundary();
    let right = g.right_boundary();
    // All big middle vertices are equivalent under the transverse torus
    // symmetry; start at the first.
    let start = g.big_middle()[0];
    let p_exact = hitting_probability_exact(g, start, &left, &right)?;
    let mut absorbing = vec![false; g.positions.len()];
    let mut is_left = vec![false; g.positions.len()];
    for &v in &left {
        absorbing[v] = true;
        is_left[v] = true;
    }
    for &v in &right {
        absorbing[v] = true;
    }
    let hits: u64 = (0..n_walks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let path = run_until_exit(g, start, &absorbing, &mut rng)
                .expect("walk on finite connected graph");
            u64::from(is_left[path.exit_vertex()])
        })
        .sum();
    let p_mc = hits as f64 / n_walks as f64;
    let mc_stderr = (p_mc * (1.0 - p_mc) / n_walks as f64).sqrt();
    let big_n = g.big_n as f64;
    Ok(HittingResult {
        p_exact,
        p_mc,
        mc_stderr,
        n_walks,
        p_formula: (2.0 * big_n + 1.0) / (6.0 * big_n + 1.0),
    })
}

/// Positions visited by a walk, for export.
pub fn walk_trace(g: &CombinatorialGraph, path: &WalkPath) -> Vec<Vec<f64>> {
    path.vertices.iter().map(|&v| g.positions[v].clone()).collect()
}

/// Positions visited by a walk on a tiling.
pub fn walk_trace_tiling(t: &Tiling, path: &WalkPath) -> Vec<Vec3> {
    path.vertices.iter().map(|&v| t.sites[v]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilings::build_counterexample_graph;
    use proptest::prelude::*;

    /// Path graph 0-1-...-n with unit conductances.
    fn path_graph(n: usize) -> CombinatorialGraph {
        let mut adjacency = vec![Vec::new(); n + 1];
        for v in 0..n {
            adjacency[v].push(v + 1);
            adjacency[v + 1].push(v);
        }
        CombinatorialGraph {
            dim: 3,
            positions: (0..=n).map(|v| vec![v as f64, 0.0, 0.0]).collect(),
            kinds: vec![crate::tilings::SphereKind::Big; n + 1],
            layer: (0..=n).collect(),
            adjacency,
            big_n: 1,
            period: 4,
            big_count: n + 1,
        }
    }

    #[test]
    fn step_frequencies_match_weights() {
        // Two neighbors with conductances 1 and 3: long-run frequencies
        // 0.25 / 0.75.
        struct Tiny;
        impl WalkGraph for Tiny {
            fn vertex_count(&self) -> usize {
                3
            }
            fn neighbor_weights(&self, v: usize) -> Vec<(usize, f64)> {
                match v {
                    0 => vec![(1, 1.0), (2, 3.0)],
                    _ => vec![(0, 1.0)],
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mut count1 = 0u64;
        for _ in 0..n {
            if walk_step(&Tiny, 0, &mut rng).unwrap() == 1 {
                count1 += 1;
            }
        }
        let freq = count1 as f64 / n as f64;
        // 3 sigma for p = 0.25.
        let sigma = (0.25 * 0.75 / n as f64).sqrt();
        assert!((freq - 0.25).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn gamblers_ruin_exact() {
        let g = path_graph(2);
        let p = hitting_probability_exact(&g, 1, &[0], &[2]).unwrap();
        assert!((p - 0.5).abs() < 1e-10);
        let g = path_graph(10);
        for start in 1..10 {
            let p = hitting_probability_exact(&g, start, &[0], &[10]).unwrap();
            assert!((p - (1.0 - start as f64 / 10.0)).abs() < 1e-9);
        }
        // Start already absorbed.
        assert_eq!(hitting_probability_exact(&g, 0, &[0], &[10]).unwrap(), 1.0);
        assert_eq!(hitting_probability_exact(&g, 10, &[0], &[10]).unwrap(), 0.0);
    }

    #[test]
    fn gamblers_ruin_monte_carlo() {
        let g = path_graph(4);
        let mut absorbing = vec![false; 5];
        absorbing[0] = true;
        absorbing[4] = true;
        let n = 40_000u64;
        let mut hits = 0u64;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..n {
            let path = run_until_exit(&g, 1, &absorbing, &mut rng).unwrap();
            if path.exit_vertex() == 0 {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let sigma = (0.75 * 0.25 / n as f64).sqrt();
        assert!((p - 0.75).abs() < 3.0 * sigma, "p {p}");
    }

    #[test]
    fn counterexample_probability_formula() {
        for d in [3usize, 4] {
            for big_n in [2usize, 5] {
                for period in [4usize, 6] {
                    let g = build_counterexample_graph(d, big_n, period).unwrap();
                    let p = hitting_probability_exact(
                        &g,
                        g.big_middle()[0],
                        &g.left_boundary(),
                        &g.right_boundary(),
                    )
                    .unwrap();
                    let formula = (2.0 * big_n as f64 + 1.0) / (6.0 * big_n as f64 + 1.0);
                    assert!(
                        (p - formula).abs() < 1e-8,
                        "d={d} N={big_n} T={period}: {p} vs {formula}"
                    );
                }
            }
        }
    }

    #[test]
    fn counterexample_known_values() {
        let g = build_counterexample_graph(3, 2, 4).unwrap();
        let p = hitting_probability_exact(&g, g.big_middle()[0], &g.left_boundary(), &g.right_boundary())
            .unwrap();
        assert!((p - 5.0 / 13.0).abs() < 1e-8);
        let g = build_counterexample_graph(3, 10, 4).unwrap();
        let p = hitting_probability_exact(&g, g.big_middle()[0], &g.left_boundary(), &g.right_boundary())
            .unwrap();
        assert!((p - 21.0 / 61.0).abs() < 1e-8);
    }

    #[test]
    fn counterexample_experiment_consistent() {
        let g = build_counterexample_graph(3, 2, 4).unwrap();
        let res = counterexample_experiment(&g, 20_000, 99).unwrap();
        assert!((res.p_exact - res.p_formula).abs() < 1e-8);
        assert!(
            (res.p_mc - res.p_exact).abs() < 3.0 * res.mc_stderr + 1e-12,
            "mc {} exact {} stderr {}",
            res.p_mc,
            res.p_exact,
            res.mc_stderr
        );
    }

    #[test]
    fn experiment_deterministic_across_thread_pools() {
        let g = build_counterexample_graph(3, 2, 4).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| counterexample_experiment(&g, 5000, 7).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.p_mc.to_bits(), b.p_mc.to_bits());
    }

    #[test]
    fn frechet_basic_cases() {
        let a = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(cmp_distance(&a, &a) < 1e-12);
        // Same curve, different parametrization (extra collinear points).
        let b = vec![
            [0.0, 0.0, 0.0],
            [0.3, 0.0, 0.0],
            [1.1, 0.0, 0.0],
            [2.0, 0.0, 0.0],
        ];
        assert!(cmp_distance(&a, &b) < 1e-9);
        // Parallel segments at height 0.3.
        let c = vec![[0.0, 0.3, 0.0], [2.0, 0.3, 0.0]];
        let d = cmp_distance(&a, &c);
        assert!((d - 0.3).abs() < 1e-9, "distance {d}");
    }

    proptest! {
        #[test]
        fn frechet_symmetric_and_triangle(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..8),
            qts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..8),
            rts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..8),
        ) {
            let lift = |v: &Vec<(f64, f64)>| -> Vec<Vec3> {
                v.iter().map(|&(x, y)| [x, y, 0.0]).collect()
            };
            let (a, b, c) = (lift(&pts), lift(&qts), lift(&rts));
            let ab = cmp_distance(&a, &b);
            let ba = cmp_distance(&b, &a);
            prop_assert!((ab - ba).abs() < 1e-9);
            let ac = cmp_distance(&a, &c);
            let cb = cmp_distance(&c, &b);
            // Subdivision perturbs the discrete distance slightly; allow a
            // small slack in the triangle inequality.
            prop_assert!(ab <= ac + cb + 1e-6);
        }
    }

    #[test]
    fn walks_reproducible_per_stream() {
        let g = path_graph(6);
        let mut absorbing = vec![false; 7];
        absorbing[0] = true;
        absorbing[6] = true;
        let mut r1 = ChaCha8Rng::seed_from_u64(11);
        r1.set_stream(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(11);
        r2.set_stream(3);
        let p1 = run_until_exit(&g, 3, &absorbing, &mut r1).unwrap();
        let p2 = run_until_exit(&g, 3, &absorbing, &mut r2).unwrap();
        assert_eq!(p1.vertices, p2.vertices);
    }
}
