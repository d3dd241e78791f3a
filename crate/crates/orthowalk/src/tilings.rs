//! Tiling constructors: regular grids, box-clipped Voronoi tessellations, and
//! the sphere-packing tangency graph on which simple random walk is biased.
//!
//! A [`Tiling`] couples sites with their convex cells and the edge data the
//! walk and the Laplacian need: facet area, edge length, conductance
//! `a(w,v) = vol_{d-1}(H_e) / ||w - v||`, and the dual-polytope volume
//! `vol(Q_e) = ||e|| vol(H_e) / d`.

use crate::error::{Error, Result};
use crate::geometry::{
    halfspace_cell, halfspace_intersection_with_box, Facet, FacetSource, Polytope,
    TOL_AREA_REL,
};
use crate::vec3::{self, Aabb, Vec3};
use rayon::prelude::*;

/// Angle tolerance (radians) for the edge-perpendicular-to-facet check.
pub const TOL_ANGLE: f64 = 1e-8;

/// An undirected edge of a tiling graph together with its geometric data.
#[derive(Debug, Clone)]
pub struct EdgeRecord {
    pub u: usize,
    pub v: usize,
    /// `||u - v||`.
    pub length: f64,
    /// `vol_{d-1}(H_e)`, the measure of the shared facet.
    pub facet_area: f64,
    /// `facet_area / length`.
    pub conductance: f64,
    /// `length * facet_area / d`, the volume of the dual polytope Q_e.
    pub qe_volume: f64,
    /// Index of the cell whose facet list holds this edge's facet geometry.
    pub cell: usize,
    /// Facet index within that cell.
    pub facet: usize,
}

/// An orthogonal tiling: sites, cells, and the weighted edge graph.
#[derive(Debug, Clone)]
pub struct Tiling {
    pub dim: usize,
    pub sites: Vec<Vec3>,
    pub cells: Vec<Polytope>,
    pub edges: Vec<EdgeRecord>,
    /// Per site: `(neighbor site, edge index)`, sorted by neighbor index.
    pub adjacency: Vec<Vec<(usize, usize)>>,
    pub domain_box: Aabb,
    /// `sup_v diam(P_v)`.
    pub epsilon: f64,
    /// True for sites whose cell touches the domain box.
    pub boundary_site: Vec<bool>,
    weighted_degree: Vec<f64>,
}

impl Tiling {
    fn assemble(
        dim: usize,
        sites: Vec<Vec3>,
        cells: Vec<Polytope>,
        edges: Vec<EdgeRecord>,
        domain_box: Aabb,
    ) -> Tiling {
        let n = sites.len();
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut weighted_degree = vec![0.0; n];
        for (ei, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, ei));
            adjacency[e.v].push((e.u, ei));
            weighted_degree[e.u] += e.conductance;
            weighted_degree[e.v] += e.conductance;
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(w, _)| w);
        }
        let epsilon = cells.iter().map(|c| c.diameter()).fold(0.0, f64::max);
        let boundary_site = cells
            .iter()
            .map(|c| {
                c.facets
                    .iter()
                    .any(|f| matches!(f.source, FacetSource::Boundary(_)))
            })
            .collect();
        Tiling { dim, sites, cells, edges, adjacency, domain_box, epsilon, boundary_site, weighted_degree }
    }

    /// Rebuild a tiling from its parts (deserialization path); recomputes
    /// adjacency, weighted degrees, epsilon, and boundary flags.
    pub fn from_parts(
        dim: usize,
        sites: Vec<Vec3>,
        cells: Vec<Polytope>,
        edges: Vec<EdgeRecord>,
        domain_box: Aabb,
    ) -> Tiling {
        Tiling::assemble(dim, sites, cells, edges, domain_box)
    }

    pub fn vertex_count(&self) -> usize {
        self.sites.len()
    }

    /// Total conductance `a(v)` incident to a site.
    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.weighted_degree[v]
    }

    /// The facet geometry backing an edge.
    pub fn edge_facet(&self, e: &EdgeRecord) -> &Facet {
        &self.cells[e.cell].facets[e.facet]
    }

    pub fn other_endpoint(&self, e: &EdgeRecord, v: usize) -> usize {
        if e.u == v {
            e.v
        } else {
            e.u
        }
    }
}

/// Regular grid tiling with cubic cells of side `h`.
pub fn build_grid_tiling(bx: &Aabb, h: f64) -> Result<Tiling> {
    let dim = bx.dim;
    let mut counts = [1usize; 3];
    for j in 0..dim {
        let side = bx.side(j);
        let n = (side / h).round();
        if (n * h - side).abs() > 1e-12 * side.max(1.0) || n < 1.0 {
            return Err(Error::NonDivisibleSpacing { spacing: h, side });
        }
        counts[j] = n as usize;
    }
    let total: usize = counts[..dim].iter().product();
    let strides = {
        let mut s = [0usize; 3];
        s[0] = 1;
        for j in 1..dim {
            s[j] = s[j - 1] * counts[j - 1];
        }
        s
    };
    let idx_of = |ix: [usize; 3]| -> usize { (0..dim).map(|j| ix[j] * strides[j]).sum() };

    let mut sites = Vec::with_capacity(total);
    let mut cells = Vec::with_capacity(total);
    let mut edges = Vec::new();
    let mut ix = [0usize; 3];
    for flat in 0..total {
        let mut rem = flat;
        for j in (0..dim).rev() {
            ix[j] = rem / strides[j];
            rem %= strides[j];
        }
        let mut cmin = bx.min;
        let mut cmax = bx.min;
        for j in 0..dim {
            cmin[j] = bx.min[j] + ix[j] as f64 * h;
            cmax[j] = cmin[j] + h;
        }
        let cell_box = Aabb::new(cmin, cmax, dim);
        sites.push(cell_box.center());
        let mut cell = halfspace_intersection_with_box(&[], &cell_box)?;
        // The cube's facets were labelled as its own box faces; relabel each
        // toward its grid neighbor, or as a domain-boundary face.
        for f in &mut cell.facets {
            let FacetSource::Boundary(face) = f.source else { unreachable!() };
            let axis = face / 2;
            let positive = face % 2 == 1;
            let nbr = if positive {
                (ix[axis] + 1 < counts[axis]).then(|| {
                    let mut jx = ix;
                    jx[axis] += 1;
                    idx_of(jx)
                })
            } else {
                (ix[axis] > 0).then(|| {
                    let mut jx = ix;
                    jx[axis] -= 1;
                    idx_of(jx)
                })
            };
            match nbr {
                Some(w) => f.source = FacetSource::Site(w),
                None => f.source = FacetSource::Boundary(face),
            }
        }
        cells.push(cell);
    }
    // Edges from the positive-direction facets of each cell.
    for flat in 0..total {
        for (fi, f) in cells[flat].facets.iter().enumerate() {
            if let FacetSource::Site(w) = f.source {
                if w > flat {
                    let length = vec3::dist(sites[flat], sites[w]);
                    let area = f.area;
                    edges.push(EdgeRecord {
                        u: flat,
                        v: w,
                        length,
                        facet_area: area,
                        conductance: area / length,
                        qe_volume: length * area / dim as f64,
                        cell: flat,
                        facet: fi,
                    });
                }
            }
        }
    }
    Ok(Tiling::assemble(dim, sites, cells, edges, *bx))
}

/// Spatial bucket index used for neighbor-candidate queries.
struct BucketGrid {
    origin: Vec3,
    inv_cell: f64,
    counts: [usize; 3],
    dim: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(points: &[Vec3], bx: &Aabb, cell_size: f64) -> BucketGrid {
        let dim = bx.dim;
        let mut counts = [1usize; 3];
        for j in 0..dim {
            counts[j] = ((bx.side(j) / cell_size).ceil() as usize).max(1);
        }
        let total = counts[..dim].iter().product();
        let mut g = BucketGrid {
            origin: bx.min,
            inv_cell: 1.0 / cell_size,
            counts,
            dim,
            buckets: vec![Vec::new(); total],
        };
        for (i, p) in points.iter().enumerate() {
            let b = g.bucket_of(*p);
            g.buckets[b].push(i);
        }
        g
    }

    fn coord(&self, p: Vec3, j: usize) -> usize {
        (((p[j] - self.origin[j]) * self.inv_cell).floor() as isize)
            .clamp(0, self.counts[j] as isize - 1) as usize
    }

    fn bucket_of(&self, p: Vec3) -> usize {
        let mut idx = 0;
        for j in (0..self.dim).rev() {
            idx = idx * self.counts[j] + self.coord(p, j);
        }
        idx
    }

    /// Indices of all points within `r` of `p` (superset by bucket overlap).
    fn candidates_within(&self, p: Vec3, r: f64) -> Vec<usize> {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for j in 0..self.dim {
            lo[j] = self.coord([p[0] - r, p[1] - r, p[2] - r], j);
            hi[j] = self.coord([p[0] + r, p[1] + r, p[2] + r], j);
        }
        let mut out = Vec::new();
        let mut ix = lo;
        loop {
            let mut idx = 0;
            for j in (0..self.dim).rev() {
                idx = idx * self.counts[j] + ix[j];
            }
            out.extend_from_slice(&self.buckets[idx]);
            // odometer increment over [lo, hi]
            let mut j = 0;
            loop {
                if j == self.dim {
                    return out;
                }
                if ix[j] < hi[j] {
                    ix[j] += 1;
                    break;
                }
                ix[j] = lo[j];
                j += 1;
            }
        }
    }
}

/// Voronoi tessellation of the box: each cell computed by half-space clipping
/// against candidate neighbors found by an expanding-radius search. The search
/// is certified: once every cell vertex lies within `R/2` of the site, no site
/// farther than `R` can cut the cell.
pub fn build_voronoi_tiling(sites: &[Vec3], bx: &Aabb) -> Result<Tiling> {
    let dim = bx.dim;
    if sites.len() < dim + 1 {
        return Err(Error::DegenerateInput(format!(
            "need at least {} sites, got {}",
            dim + 1,
            sites.len()
        )));
    }
    for s in sites {
        if !bx.strictly_contains(*s) {
            return Err(Error::DegenerateInput(format!("site {s:?} outside box")));
        }
    }
    let spacing = (bx.volume() / sites.len() as f64).powf(1.0 / dim as f64);
    let r0 = 4.0 * spacing;
    let grid = BucketGrid::new(sites, bx, spacing.max(bx.diameter() * 1e-6));

    // (cell, map from local candidate index -> global site index)
    let built: Vec<Result<(Polytope, Vec<usize>)>> = sites
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut r = r0;
            loop {
                let mut cand = grid.candidates_within(s, r);
                cand.sort_unstable();
                cand.retain(|&j| j != i && vec3::dist_sq(sites[j], s) <= r * r);
                let others: Vec<Vec3> = cand.iter().map(|&j| sites[j]).collect();
                let cell = halfspace_cell(s, &others, bx)?;
                let certified = 2.0 * cell.circumradius_about(s) < r;
                let exhausted = r >= bx.diameter();
                if certified || exhausted {
                    return Ok((cell, cand));
                }
                r *= 2.0;
            }
        })
        .collect();

    let mut cells = Vec::with_capacity(sites.len());
    let mut cand_maps = Vec::with_capacity(sites.len());
    for b in built {
        let (cell, cand) = b?;
        cells.push(cell);
        cand_maps.push(cand);
    }

    // Translate facet sources from local candidate indices to site indices,
    // then emit one edge per facet pair, owned by the lower-indexed cell.
    let tol_area = TOL_AREA_REL * bx.diameter().powi(dim as i32 - 1);
    for (i, cell) in cells.iter_mut().enumerate() {
        for f in &mut cell.facets {
            if let FacetSource::Site(local) = f.source {
                f.source = FacetSource::Site(cand_maps[i][local]);
            }
        }
    }
    let mut edges = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        for (fi, f) in cell.facets.iter().enumerate() {
            if let FacetSource::Site(j) = f.source {
                if j > i && f.area >= tol_area {
                    let length = vec3::dist(sites[i], sites[j]);
                    edges.push(EdgeRecord {
                        u: i,
                        v: j,
                        length,
                        facet_area: f.area,
                        conductance: f.area / length,
                        qe_volume: length * f.area / dim as f64,
                        cell: i,
                        facet: fi,
                    });
                }
            }
        }
    }
    Ok(Tiling::assemble(dim, sites.to_vec(), cells, edges, *bx))
}

/// Structural validation of the orthogonal-tiling axioms.
#[derive(Debug, Clone)]
pub struct OrthogonalityReport {
    /// Max angle (radians) between `w - v` and the shared facet normal.
    pub max_angle_defect: f64,
    /// Max signed distance of a site outside its own cell (nonpositive means
    /// strictly interior).
    pub max_site_defect: f64,
    pub pass: bool,
}

pub fn validate_orthogonality(t: &Tiling) -> OrthogonalityReport {
    let mut max_angle: f64 = 0.0;
    for e in &t.edges {
        let dir = vec3::normalize(vec3::sub(t.sites[e.v], t.sites[e.u]));
        let n = t.edge_facet(e).outward_normal;
        // Tangential residual of dir against the normal line: equals sin of
        // the angle defect, and unlike acos(dot) it does not lose precision
        // near zero angle.
        let tangential = vec3::sub(dir, vec3::scale(n, vec3::dot(dir, n)));
        max_angle = max_angle.max(vec3::norm(tangential).asin());
    }
    let mut max_site: f64 = f64::NEG_INFINITY;
    for (v, cell) in t.cells.iter().enumerate() {
        max_site = max_site.max(-cell.inradius_about(t.sites[v]));
    }
    let pass = max_angle <= TOL_ANGLE && max_site < 0.0;
    OrthogonalityReport { max_angle_defect: max_angle, max_site_defect: max_site, pass }
}

/// Nearest site to `z`, ties broken by exact lexicographic comparison of the
/// site coordinates.
pub fn nearest_vertex(t: &Tiling, z: Vec3) -> usize {
    let mut best = 0usize;
    for v in 1..t.sites.len() {
        let dv = vec3::dist_sq(t.sites[v], z);
        let db = vec3::dist_sq(t.sites[best], z);
        if dv < db
            || (dv == db
                && vec3::lex_cmp(&t.sites[v], &t.sites[best]) == std::cmp::Ordering::Less)
        {
            best = v;
        }
    }
    best
}

/// Scaling diagnostics of a tiling: mesh fineness and the regularity
/// quantities the convergence statements are conditioned on.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    /// `sup_v diam(P_v)`.
    pub epsilon: f64,
    /// `sup_z dist(z, nearest site)` over a probe grid of >= 10^4 points.
    pub mesh_gap: f64,
    pub min_cell_volume: f64,
    /// Whether `min_cell_volume >= exp(-1/epsilon)`, a concrete surrogate for
    /// the smallest-tile volume not decaying faster than `exp(-o(1/eps))`.
    pub hypothesis_ii_ok: bool,
    /// Fitted exponent: min over sites of
    /// `log diam(P_v) / log max_(v,w) ||w-v|| vol(H_e)`, clamped to (0, 10].
    pub hypothesis_iii_alpha: f64,
}

pub fn hypothesis_report(t: &Tiling) -> HypothesisReport {
    let epsilon = t.epsilon;
    let per_axis = ((1e4f64).powf(1.0 / t.dim as f64).ceil() as usize).max(2);
    let mut mesh_gap: f64 = 0.0;
    let grid = BucketGrid::new(
        &t.sites,
        &t.domain_box,
        (t.domain_box.volume() / t.sites.len() as f64).powf(1.0 / t.dim as f64),
    );
    let mut ix = [0usize; 3];
    let total = per_axis.pow(t.dim as u32);
    for flat in 0..total {
        let mut rem = flat;
        for j in 0..t.dim {
            ix[j] = rem % per_axis;
            rem /= per_axis;
        }
        let mut z = vec3::ZERO;
        for j in 0..t.dim {
            z[j] = t.domain_box.min[j]
                + (ix[j] as f64 + 0.5) / per_axis as f64 * t.domain_box.side(j);
        }
        let mut r = 2.0 * (t.domain_box.volume() / t.sites.len() as f64)
            .powf(1.0 / t.dim as f64);
        let d = loop {
            let cand = grid.candidates_within(z, r);
            if let Some(d2) = cand
                .iter()
                .map(|&i| vec3::dist_sq(t.sites[i], z))
                .min_by(|a, b| a.partial_cmp(b).unwrap())
            {
                if d2.sqrt() <= r {
                    break d2.sqrt();
                }
            }
            r *= 2.0;
        };
        mesh_gap = mesh_gap.max(d);
    }
    let min_cell_volume = t
        .cells
        .iter()
        .map(|c| c.volume)
        .fold(f64::INFINITY, f64::min);
    let hypothesis_ii_ok = min_cell_volume >= (-1.0 / epsilon).exp();

    let mut alpha = f64::INFINITY;
    for (v, cell) in t.cells.iter().enumerate() {
        let max_edge_weight = t.adjacency[v]
            .iter()
            .map(|&(_, ei)| {
                let e = &t.edges[ei];
                e.length * e.facet_area
            })
            .fold(0.0, f64::max);
        if max_edge_weight > 0.0 {
            let ratio = cell.diameter().ln() / max_edge_weight.ln();
            if ratio.is_finite() {
                alpha = alpha.min(ratio);
            }
        }
    }
    let hypothesis_iii_alpha = if alpha.is_finite() {
        alpha.clamp(f64::MIN_POSITIVE, 10.0)
    } else {
        10.0
    };
    HypothesisReport { epsilon, mesh_gap, min_cell_volume, hypothesis_ii_ok, hypothesis_iii_alpha }
}

// ---------------------------------------------------------------------------
// Sphere-packing tangency graph
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereKind {
    Big,
    Small,
}

/// The tangency graph of the two-radius sphere packing: big spheres (radius 1)
/// on the even lattice for `x1 <= 0`, small spheres (radius 1/2) shifted by
/// `(sqrt(7)/2, 1/2, 1/2, 0, ...)` for `x1 >= sqrt(7)/2`, transverse
/// directions wrapped on a torus of circumference `2T` to make the graph
/// finite. All conductances are 1 (simple random walk).
#[derive(Debug, Clone)]
pub struct CombinatorialGraph {
    pub dim: usize,
    pub positions: Vec<Vec<f64>>,
    pub kinds: Vec<SphereKind>,
    /// Layer along x1: big layers `0..=N` (x1 = -2N + 2i), then small layers
    /// `0..=2N` (x1 = sqrt(7)/2 + l).
    pub layer: Vec<usize>,
    pub adjacency: Vec<Vec<usize>>,
    pub big_n: usize,
    pub period: usize,
    pub big_count: usize,
}

impl CombinatorialGraph {
    /// Absorbing left set `L_N^-`: big spheres at `x1 = -2N`.
    pub fn left_boundary(&self) -> Vec<usize> {
        (0..self.big_count)
            .filter(|&v| self.layer[v] == 0)
            .collect()
    }

    /// Absorbing right set `R_N^+`: small spheres at `x1 = sqrt(7)/2 + 2N`.
    pub fn right_boundary(&self) -> Vec<usize> {
        (self.big_count..self.positions.len())
            .filter(|&v| self.layer[v] == 2 * self.big_n)
            .collect()
    }

    /// Big middle spheres (`x1 = 0`), the starting layer `L_N^+`.
    pub fn big_middle(&self) -> Vec<usize> {
        (0..self.big_count)
            .filter(|&v| self.layer[v] == self.big_n)
            .collect()
    }

    /// Torus distance between two sphere centers (transverse coordinates wrap
    /// with circumference `2 * period`).
    pub fn torus_distance(&self, a: usize, b: usize) -> f64 {
        let circ = 2.0 * self.period as f64;
        let mut d2 = (self.positions[a][0] - self.positions[b][0]).powi(2);
        for j in 1..self.dim {
            let mut dj = (self.positions[a][j] - self.positions[b][j]).abs() % circ;
            if dj > circ / 2.0 {
                dj = circ - dj;
            }
            d2 += dj * dj;
        }
        d2.sqrt()
    }
}

/// Build the counterexample tangency graph for dimension `d >= 3`, depth
/// parameter `N >= 2`, and transverse period `T` (even, `>= 4`; the physical
/// transverse circumference is `2T`).
///
/// Transverse coordinates 2 and 3 carry the paper-exact interleaving: big
/// centers on `2Z`, small centers on `1/2 + Z`, so each big middle sphere
/// touches exactly 4 small middle spheres at center distance
/// `sqrt(7/4 + 1/4 + 1/4) = 3/2`. Any further transverse coordinates use a
/// single even lattice shared by both families, so the layer structure (and
/// with it the exact hitting probability) is dimension-independent: placing
/// the small spheres on a unit lattice there would leave the odd-coordinate
/// small middle spheres without a big neighbor and break the stated degrees.
pub fn build_counterexample_graph(d: usize, n: usize, t: usize) -> Result<CombinatorialGraph> {
    if d < 3 {
        return Err(Error::InvalidArgument(format!("dimension {d} < 3")));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("depth N={n} < 2")));
    }
    if t < 4 || t % 2 != 0 {
        return Err(Error::InvalidPeriod(format!(
            "transverse period {t} must be even and >= 4"
        )));
    }
    let sqrt7_half = 7.0f64.sqrt() / 2.0;
    // Transverse index ranges: coords 2,3 have T slots for big (spacing 2) and
    // 2T slots for small (spacing 1); coords >= 4 share T slots (spacing 2).
    let big_trans: Vec<usize> = (1..d).map(|_| t).collect();
    let small_trans: Vec<usize> = (1..d).map(|j| if j <= 2 { 2 * t } else { t }).collect();
    let big_layer_size: usize = big_trans.iter().product();
    let small_layer_size: usize = small_trans.iter().product();
    let big_count = (n + 1) * big_layer_size;
    let small_count = (2 * n + 1) * small_layer_size;

    let big_index = |layer: usize, tv: &[usize]| -> usize {
        let mut idx = layer;
        for (j, &c) in tv.iter().enumerate() {
            idx = idx * big_trans[j] + c;
        }
        idx
    };
    let small_index = |layer: usize, tv: &[usize]| -> usize {
        let mut idx = layer;
        for (j, &c) in tv.iter().enumerate() {
            idx = idx * small_trans[j] + c;
        }
        big_count + idx
    };

    let total = big_count + small_count;
    let mut positions = vec![Vec::new(); total];
    let mut kinds = vec![SphereKind::Big; total];
    let mut layer = vec![0usize; total];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); total];

    // Odometer over transverse index tuples.
    let enumerate_trans = |ranges: &[usize], mut visit: Box<dyn FnMut(&[usize]) + '_>| {
        let mut tv = vec![0usize; ranges.len()];
        loop {
            visit(&tv);
            let mut j = 0;
            loop {
                if j == ranges.len() {
                    return;
                }
                tv[j] += 1;
                if tv[j] < ranges[j] {
                    break;
                }
                tv[j] = 0;
                j += 1;
            }
        }
    };

    for li in 0..=n {
        enumerate_trans(
            &big_trans,
            Box::new(|tv: &[usize]| {
                let v = big_index(li, tv);
                let mut pos = vec![-2.0 * n as f64 + 2.0 * li as f64];
                pos.extend(tv.iter().map(|&c| 2.0 * c as f64));
                positions[v] = pos;
                kinds[v] = SphereKind::Big;
                layer[v] = li;
                let mut nbrs = Vec::new();
                if li > 0 {
                    nbrs.push(big_index(li - 1, tv));
                }
                if li < n {
                    nbrs.push(big_index(li + 1, tv));
                }
                for j in 0..tv.len() {
                    for step in [big_trans[j] - 1, 1] {
                        let mut uv = tv.to_vec();
                        uv[j] = (uv[j] + step) % big_trans[j];
                        nbrs.push(big_index(li, &uv));
                    }
                }
                if li == n {
                    // Big middle: the 4 small middle spheres offset by
                    // (+-1/2, +-1/2) in coords 2 and 3.
                    for s2 in 0..2usize {
                        for s3 in 0..2usize {
                            let mut uv = vec![0usize; tv.len()];
                            // small coord = 1/2 + u; big coord = 2c;
                            // u = 2c - 1 (minus) or u = 2c (plus), mod 2T.
                            uv[0] = (2 * tv[0] + 2 * t - 1 + s2) % (2 * t);
                            uv[1] = (2 * tv[1] + 2 * t - 1 + s3) % (2 * t);
                            for j in 2..tv.len() {
                                uv[j] = tv[j];
                            }
                            nbrs.push(small_index(0, &uv));
                        }
                    }
                }
                nbrs.sort_unstable();
                nbrs.dedup();
                adjacency[v] = nbrs;
            }),
        );
    }
    for ls in 0..=(2 * n) {
        enumerate_trans(
            &small_trans,
            Box::new(|tv: &[usize]| {
                let v = small_index(ls, tv);
                let mut pos = vec![sqrt7_half + ls as f64];
                for (j, &c) in tv.iter().enumerate() {
                    pos.push(if j < 2 { 0.5 + c as f64 } else { 2.0 * c as f64 });
                }
                positions[v] = pos;
                kinds[v] = SphereKind::Small;
                layer[v] = ls;
                let mut nbrs = Vec::new();
                if ls > 0 {
                    nbrs.push(small_index(ls - 1, tv));
                }
                if ls < 2 * n {
                    nbrs.push(small_index(ls + 1, tv));
                }
                for j in 0..tv.len() {
                    for step in [small_trans[j] - 1, 1] {
                        let mut uv = tv.to_vec();
                        uv[j] = (uv[j] + step) % small_trans[j];
                        nbrs.push(small_index(ls, &uv));
                    }
                }
                if ls == 0 {
                    // The unique big middle neighbor: 2c in {u, u+1}, exactly
                    // one of which is even, per coords 2 and 3.
                    let pick = |u: usize| -> usize {
                        if u % 2 == 0 {
                            (u / 2) % t
                        } else {
                            ((u + 1) / 2) % t
                        }
                    };
                    let mut uv = vec![0usize; tv.len()];
                    uv[0] = pick(tv[0]);
                    uv[1] = pick(tv[1]);
                    for j in 2..tv.len() {
                        uv[j] = tv[j];
                    }
                    nbrs.push(big_index(n, &uv));
                }
                nbrs.sort_unstable();
                nbrs.dedup();
                adjacency[v] = nbrs;
            }),
        );
    }

    for (v, nbrs) in adjacency.iter().enumerate() {
        if nbrs.contains(&v) {
            return Err(Error::InvalidPeriod(format!(
                "torus wrap creates a self-loop at vertex {v}"
            )));
        }
    }
    Ok(CombinatorialGraph {
        dim: d,
        positions,
        kinds,
        layer,
        adjacency,
        big_n: n,
        period: t,
        big_count,
    })
}
