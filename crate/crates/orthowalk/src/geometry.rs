//! Convex polytope primitives: facet areas, volumes, dual-polytope volumes,
//! and iterative half-space clipping for Voronoi cell construction.
//!
//! All geometry is d ∈ {2, 3}. A facet is a segment in 2D and a planar convex
//! polygon loop in 3D; in both cases it carries an outward unit normal and its
//! (d-1)-dimensional measure. Tolerances are scale-relative: planarity and
//! incidence tests use `1e-9 * (box diameter)` and facets below
//! `1e-12 * (box diameter)^(d-1)` are dropped as zero-measure.

use crate::error::{Error, Result};
use crate::vec3::{self, Aabb, Vec3};

/// Relative planarity/incidence tolerance (multiplied by the box diameter).
pub const TOL_PLANE_REL: f64 = 1e-9;
/// Relative facet-area cutoff (multiplied by (box diameter)^(d-1)).
pub const TOL_AREA_REL: f64 = 1e-12;

/// What generated a cell facet during half-space clipping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetSource {
    /// Bisector against another site (by index into the generating site list).
    Site(usize),
    /// A face of the clipping box: `2*axis` for the min side, `2*axis + 1`
    /// for the max side.
    Boundary(usize),
}

/// A (d-1)-dimensional facet of a convex cell.
#[derive(Debug, Clone)]
pub struct Facet {
    /// Segment endpoints (2D) or a planar polygon loop (3D).
    pub vertex_loop: Vec<Vec3>,
    /// Outward unit normal of the owning polytope.
    pub outward_normal: Vec3,
    /// (d-1)-dimensional measure, consistent with `facet_area`.
    pub area: f64,
    pub source: FacetSource,
}

impl Facet {
    pub fn centroid(&self) -> Vec3 {
        vec3::centroid(&self.vertex_loop)
    }
}

/// A bounded convex polytope assembled from facets.
#[derive(Debug, Clone)]
pub struct Polytope {
    pub vertices: Vec<Vec3>,
    pub facets: Vec<Facet>,
    pub volume: f64,
    pub dim: usize,
}

impl Polytope {
    /// Assemble a polytope from facet loops: dedup vertices, compute per-facet
    /// areas and the volume by signed pyramid decomposition about the centroid.
    pub fn from_facets(dim: usize, facets: Vec<Facet>, merge_tol: f64) -> Result<Polytope> {
        let mut vertices: Vec<Vec3> = Vec::new();
        for f in &facets {
            for v in &f.vertex_loop {
                if !vertices.iter().any(|u| vec3::dist(*u, *v) <= merge_tol) {
                    vertices.push(*v);
                }
            }
        }
        if !affinely_spanning(&vertices, dim, merge_tol) {
            return Err(Error::DegeneratePolytope);
        }
        let centroid = vec3::centroid(&vertices);
        let mut volume = 0.0;
        for f in &facets {
            let x = f.centroid();
            volume += f.area * vec3::dot(f.outward_normal, vec3::sub(x, centroid));
        }
        volume /= dim as f64;
        Ok(Polytope { vertices, facets, volume, dim })
    }

    pub fn diameter(&self) -> f64 {
        let mut d2: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d2 = d2.max(vec3::dist_sq(*a, *b));
            }
        }
        d2.sqrt()
    }

    /// Distance from `p` to the nearest facet plane (the inradius when `p` is
    /// the cell's site).
    pub fn inradius_about(&self, p: Vec3) -> f64 {
        self.facets
            .iter()
            .map(|f| vec3::dot(f.outward_normal, vec3::sub(f.vertex_loop[0], p)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest distance from `p` to a polytope vertex.
    pub fn circumradius_about(&self, p: Vec3) -> f64 {
        self.vertices
            .iter()
            .map(|v| vec3::dist(*v, p))
            .fold(0.0, f64::max)
    }

    /// True if `p` lies on the inner side of every facet plane within `tol`.
    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        self.facets
            .iter()
            .all(|f| vec3::dot(f.outward_normal, vec3::sub(p, f.vertex_loop[0])) <= tol)
    }

    /// Maximum signed violation of convexity: how far any vertex sits outside
    /// any facet plane. Nonpositive (up to rounding) for a valid convex cell.
    pub fn convexity_defect(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for f in &self.facets {
            for v in &self.vertices {
                let s = vec3::dot(f.outward_normal, vec3::sub(*v, f.vertex_loop[0]));
                worst = worst.max(s);
            }
        }
        worst
    }
}

fn affinely_spanning(vertices: &[Vec3], dim: usize, tol: f64) -> bool {
    if vertices.len() < dim + 1 {
        return false;
    }
    let origin = vertices[0];
    // Gram-Schmidt over the difference vectors; spanning iff we find `dim`
    // directions with non-negligible residual.
    let mut basis: Vec<Vec3> = Vec::new();
    for v in &vertices[1..] {
        let mut r = vec3::sub(*v, origin);
        for b in &basis {
            r = vec3::sub(r, vec3::scale(*b, vec3::dot(r, *b)));
        }
        if vec3::norm(r) > tol.max(1e-300) {
            basis.push(vec3::normalize(r));
            if basis.len() == dim {
                return true;
            }
        }
    }
    false
}

/// (d-1)-measure of a facet: segment length in 2D, polygon area by fan
/// triangulation from the loop centroid in 3D. Verifies planarity of the loop
/// against the facet's stored normal.
pub fn facet_area(f: &Facet, dim: usize, tol_plane: f64) -> Result<f64> {
    match dim {
        2 => {
            if f.vertex_loop.len() != 2 {
                return Err(Error::DegeneratePolytope);
            }
            Ok(vec3::dist(f.vertex_loop[0], f.vertex_loop[1]))
        }
        3 => {
            if f.vertex_loop.len() < 3 {
                return Err(Error::DegeneratePolytope);
            }
            let c = f.centroid();
            let mut deviation: f64 = 0.0;
            for v in &f.vertex_loop {
                deviation = deviation.max(vec3::dot(f.outward_normal, vec3::sub(*v, c)).abs());
            }
            if deviation > tol_plane {
                return Err(Error::NonPlanarLoop { deviation, tolerance: tol_plane });
            }
            let n = f.vertex_loop.len();
            let mut area = 0.0;
            for i in 0..n {
                let a = vec3::sub(f.vertex_loop[i], c);
                let b = vec3::sub(f.vertex_loop[(i + 1) % n], c);
                area += 0.5 * vec3::norm(vec3::cross(a, b));
            }
            Ok(area)
        }
        _ => Err(Error::InvalidArgument(format!("unsupported dimension {dim}"))),
    }
}

/// Volume recomputed from the facet decomposition, for invariant checks.
pub fn polytope_volume(p: &Polytope) -> Result<f64> {
    if !affinely_spanning(&p.vertices, p.dim, 0.0) {
        return Err(Error::DegeneratePolytope);
    }
    let c = vec3::centroid(&p.vertices);
    let mut volume = 0.0;
    for f in &p.facets {
        volume += f.area * vec3::dot(f.outward_normal, vec3::sub(f.centroid(), c));
    }
    Ok(volume / p.dim as f64)
}

/// Volume of the dual polytope Q_e of an edge: the union of the two cones from
/// the edge endpoints over the shared facet. Equals
/// `edge_length * facet_area / d`.
pub fn dual_polytope_volume(edge_length: f64, facet_area: f64, d: usize) -> f64 {
    debug_assert!(edge_length > 0.0 && facet_area >= 0.0);
    edge_length * facet_area / d as f64
}

/// Volume of `conv(w, H_e) ∪ conv(v, H_e)` built explicitly from simplices,
/// an independent route to [`dual_polytope_volume`].
pub fn explicit_cone_pair_volume(v: Vec3, w: Vec3, facet: &Facet, dim: usize) -> f64 {
    cone_volume(v, facet, dim) + cone_volume(w, facet, dim)
}

fn cone_volume(apex: Vec3, facet: &Facet, dim: usize) -> f64 {
    match dim {
        2 => {
            // Triangle (apex, a, b) by cross product.
            let a = vec3::sub(facet.vertex_loop[0], apex);
            let b = vec3::sub(facet.vertex_loop[1], apex);
            0.5 * vec3::cross(a, b)[2].abs()
        }
        3 => {
            // Tetrahedra fanned from the facet centroid.
            let c = facet.centroid();
            let n = facet.vertex_loop.len();
            let mut vol = 0.0;
            for i in 0..n {
                let a = vec3::sub(facet.vertex_loop[i], apex);
                let b = vec3::sub(facet.vertex_loop[(i + 1) % n], apex);
                let d = vec3::sub(c, apex);
                vol += vec3::dot(vec3::cross(a, b), d).abs() / 6.0;
            }
            vol
        }
        _ => f64::NAN,
    }
}

// ---------------------------------------------------------------------------
// Half-space clipping
// ---------------------------------------------------------------------------

/// A facet loop during clipping: vertices plus the plane data it lives on.
#[derive(Debug, Clone)]
struct WorkFacet {
    verts: Vec<Vec3>,
    normal: Vec3,
    source: FacetSource,
}

fn box_facets(bx: &Aabb) -> Vec<WorkFacet> {
    let (mn, mx) = (bx.min, bx.max);
    if bx.dim == 2 {
        let corners = [
            [mn[0], mn[1], 0.0],
            [mx[0], mn[1], 0.0],
            [mx[0], mx[1], 0.0],
            [mn[0], mx[1], 0.0],
        ];
        let data = [
            (0usize, 1usize, [0.0, -1.0, 0.0], 2usize), // y = min
            (1, 2, [1.0, 0.0, 0.0], 1),                 // x = max
            (2, 3, [0.0, 1.0, 0.0], 3),                 // y = max
            (3, 0, [-1.0, 0.0, 0.0], 0),                // x = min
        ];
        data.iter()
            .map(|&(a, b, n, face)| WorkFacet {
                verts: vec![corners[a], corners[b]],
                normal: n,
                source: FacetSource::Boundary(face),
            })
            .collect()
    } else {
        let c = |i: usize| -> Vec3 {
            [
                if i & 1 == 0 { mn[0] } else { mx[0] },
                if i & 2 == 0 { mn[1] } else { mx[1] },
                if i & 4 == 0 { mn[2] } else { mx[2] },
            ]
        };
        // (corner indices, outward normal, box face id)
        let faces: [([usize; 4], Vec3, usize); 6] = [
            ([0, 2, 6, 4], [-1.0, 0.0, 0.0], 0),
            ([1, 5, 7, 3], [1.0, 0.0, 0.0], 1),
            ([0, 4, 5, 1], [0.0, -1.0, 0.0], 2),
            ([2, 3, 7, 6], [0.0, 1.0, 0.0], 3),
            ([0, 1, 3, 2], [0.0, 0.0, -1.0], 4),
            ([4, 6, 7, 5], [0.0, 0.0, 1.0], 5),
        ];
        faces
            .iter()
            .map(|&(idx, n, face)| WorkFacet {
                verts: idx.iter().map(|&i| c(i)).collect(),
                normal: n,
                source: FacetSource::Boundary(face),
            })
            .collect()
    }
}

/// Clip the convex cell by the half-space `signed(y) >= 0`. Returns false if
/// the cell becomes empty. `cap_normal` is the outward normal of the newly
/// created facet, `cap_source` its label.
fn clip_cell(
    facets: &mut Vec<WorkFacet>,
    signed: &dyn Fn(Vec3) -> f64,
    cap_normal: Vec3,
    cap_source: FacetSource,
    dim: usize,
    tol: f64,
) -> bool {
    let mut any_cut = false;
    let mut cap_points: Vec<Vec3> = Vec::new();
    let push_cap = |p: Vec3, cap: &mut Vec<Vec3>| {
        if !cap.iter().any(|q| vec3::dist(*q, p) <= tol) {
            cap.push(p);
        }
    };

    let mut kept: Vec<WorkFacet> = Vec::with_capacity(facets.len() + 1);
    for f in facets.drain(..) {
        let ds: Vec<f64> = f.verts.iter().map(|v| signed(*v)).collect();
        if ds.iter().all(|&d| d >= -tol) {
            // Fully inside; still contribute on-plane vertices to the cap so
            // cuts passing exactly through existing edges close up.
            for (v, &d) in f.verts.iter().zip(&ds) {
                if d.abs() <= tol {
                    push_cap(*v, &mut cap_points);
                }
            }
            kept.push(f);
            continue;
        }
        if ds.iter().all(|&d| d <= tol) {
            any_cut = true;
            continue; // fully outside
        }
        any_cut = true;
        let n = f.verts.len();
        let mut out: Vec<Vec3> = Vec::with_capacity(n + 2);
        for i in 0..n {
            let (a, da) = (f.verts[i], ds[i]);
            let (b, db) = (f.verts[(i + 1) % n], ds[(i + 1) % n]);
            let a_in = da >= -tol;
            let b_in = db >= -tol;
            if a_in {
                out.push(a);
                if da.abs() <= tol {
                    push_cap(a, &mut cap_points);
                }
            }
            if a_in != b_in && da.abs() > tol && db.abs() > tol {
                let t = da / (da - db);
                let x = vec3::lerp(a, b, t.clamp(0.0, 1.0));
                out.push(x);
                push_cap(x, &mut cap_points);
            }
            if dim == 2 {
                break; // a segment has a single edge
            }
        }
        // In 2D a facet is the segment [v0, v1]; rebuild it from the kept
        // endpoint and the intersection.
        if dim == 2 {
            let mut seg: Vec<Vec3> = Vec::with_capacity(2);
            for (v, &d) in f.verts.iter().zip(&ds) {
                if d >= -tol {
                    seg.push(*v);
                    if d.abs() <= tol {
                        push_cap(*v, &mut cap_points);
                    }
                }
            }
            if seg.len() == 1 {
                let (a, da) = (f.verts[0], ds[0]);
                let (b, db) = (f.verts[1], ds[1]);
                let t = da / (da - db);
                let x = vec3::lerp(a, b, t.clamp(0.0, 1.0));
                push_cap(x, &mut cap_points);
                seg.push(x);
            }
            if seg.len() == 2 && vec3::dist(seg[0], seg[1]) > tol {
                kept.push(WorkFacet { verts: seg, ..f });
            }
            continue;
        }
        if out.len() >= 3 {
            kept.push(WorkFacet { verts: out, ..f });
        }
    }

    if any_cut && cap_points.len() >= dim {
        // Order the cap loop. In 3D the points lie on the cutting plane; sort
        // by angle about their centroid in an in-plane basis.
        if dim == 3 {
            let c = vec3::centroid(&cap_points);
            let u = orthonormal_to(cap_normal);
            let v = vec3::cross(cap_normal, u);
            cap_points.sort_by(|a, b| {
                let pa = vec3::sub(*a, c);
                let pb = vec3::sub(*b, c);
                let ta = f64::atan2(vec3::dot(pa, v), vec3::dot(pa, u));
                let tb = f64::atan2(vec3::dot(pb, v), vec3::dot(pb, u));
                ta.partial_cmp(&tb).unwrap()
            });
        }
        if dim == 2 || cap_points.len() >= 3 {
            kept.push(WorkFacet { verts: cap_points, normal: cap_normal, source: cap_source });
        }
    }

    *facets = kept;
    !facets.is_empty()
}

fn orthonormal_to(n: Vec3) -> Vec3 {
    let pick = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    vec3::normalize(vec3::sub(pick, vec3::scale(n, vec3::dot(pick, n))))
}

fn finalize_cell(
    facets: Vec<WorkFacet>,
    dim: usize,
    tol_plane: f64,
    tol_area: f64,
) -> Result<Polytope> {
    let mut out: Vec<Facet> = Vec::with_capacity(facets.len());
    for wf in facets {
        let mut f = Facet {
            vertex_loop: wf.verts,
            outward_normal: wf.normal,
            area: 0.0,
            source: wf.source,
        };
        // 2D facets can only be segments; degenerate loops were filtered
        // during clipping, but a final guard costs nothing.
        if f.vertex_loop.len() < dim {
            continue;
        }
        let area = facet_area(&f, dim, tol_plane.max(1e-12))?;
        if area < tol_area {
            continue;
        }
        f.area = area;
        out.push(f);
    }
    if out.len() < dim + 1 {
        return Err(Error::EmptyCell);
    }
    Polytope::from_facets(dim, out, tol_plane).map_err(|_| Error::EmptyCell)
}

/// Voronoi cell of `site` against `others`, clipped to `bx`: the intersection
/// of the box with all half-spaces `{y : (y - (s+s')/2) . (s - s') >= 0}`.
///
/// Facets record which other-site generated them; box facets are labelled
/// [`FacetSource::Boundary`]. The result is invariant under permutation of
/// `others` (half-spaces are applied in a canonical order).
pub fn halfspace_cell(site: Vec3, others: &[Vec3], bx: &Aabb) -> Result<Polytope> {
    let dim = bx.dim;
    let tol_plane = TOL_PLANE_REL * bx.diameter();
    let tol_area = TOL_AREA_REL * bx.diameter().powi(dim as i32 - 1);
    if !bx.contains(site) {
        return Err(Error::EmptyCell);
    }

    // Canonical clip order: nearest first, lexicographic on ties.
    let mut order: Vec<usize> = (0..others.len()).collect();
    order.sort_by(|&i, &j| {
        vec3::dist_sq(others[i], site)
            .partial_cmp(&vec3::dist_sq(others[j], site))
            .unwrap()
            .then_with(|| vec3::lex_cmp(&others[i], &others[j]))
    });

    let mut facets = box_facets(bx);
    for &i in &order {
        let other = others[i];
        let u = vec3::sub(site, other);
        if vec3::norm(u) <= tol_plane {
            return Err(Error::DegenerateInput(format!(
                "site {site:?} duplicated in neighbor candidates"
            )));
        }
        let mid = vec3::scale(vec3::add(site, other), 0.5);
        let un = vec3::normalize(u);
        // Keep the side containing `site`; work with the normalized signed
        // distance so the tolerance is a length.
        let signed = move |y: Vec3| vec3::dot(vec3::sub(y, mid), un);
        let cap_normal = vec3::scale(un, -1.0);
        if !clip_cell(&mut facets, &signed, cap_normal, FacetSource::Site(i), dim, tol_plane) {
            return Err(Error::EmptyCell);
        }
    }
    finalize_cell(facets, dim, tol_plane, tol_area)
}

/// Clip the box by arbitrary half-spaces `{y : n.y <= c}` (used by the grid
/// constructor and tests). Facet sources are `Site(i)` for the i-th
/// half-space.
pub fn halfspace_intersection_with_box(
    halfspaces: &[(Vec3, f64)],
    bx: &Aabb,
) -> Result<Polytope> {
    let dim = bx.dim;
    let tol_plane = TOL_PLANE_REL * bx.diameter();
    let tol_area = TOL_AREA_REL * bx.diameter().powi(dim as i32 - 1);
    let mut facets = box_facets(bx);
    for (i, &(n, c)) in halfspaces.iter().enumerate() {
        let nn = vec3::normalize(n);
        let cc = c / vec3::norm(n);
        let signed = move |y: Vec3| cc - vec3::dot(nn, y);
        if !clip_cell(&mut facets, &signed, nn, FacetSource::Site(i), dim, tol_plane) {
            return Err(Error::EmptyCell);
        }
    }
    finalize_cell(facets, dim, tol_plane, tol_area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::Aabb;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn seg_facet(a: Vec3, b: Vec3) -> Facet {
        Facet {
            vertex_loop: vec![a, b],
            outward_normal: [0.0, 0.0, 0.0],
            area: 0.0,
            source: FacetSource::Boundary(0),
        }
    }

    #[test]
    fn facet_area_unit_segment() {
        let f = seg_facet([0.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert_eq!(facet_area(&f, 2, 1e-9).unwrap(), 1.0);
    }

    #[test]
    fn facet_area_unit_square_in_plane() {
        let f = Facet {
            vertex_loop: vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ],
            outward_normal: [0.0, 0.0, 1.0],
            area: 0.0,
            source: FacetSource::Boundary(0),
        };
        assert!((facet_area(&f, 3, 1e-9).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn facet_area_hexagon_matches_fine_triangulation() {
        // Regular hexagon, circumradius 1, in z = 0.
        let hex: Vec<Vec3> = (0..6)
            .map(|i| {
                let t = std::f64::consts::PI / 3.0 * i as f64;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        let f = Facet {
            vertex_loop: hex.clone(),
            outward_normal: [0.0, 0.0, 1.0],
            area: 0.0,
            source: FacetSource::Boundary(0),
        };
        // Brute-force oracle: subdivide each fan triangle recursively and sum
        // tiny triangle areas.
        let c = vec3::centroid(&hex);
        let mut brute = 0.0;
        let m = 256;
        for i in 0..6 {
            let a = hex[i];
            let b = hex[(i + 1) % 6];
            for j in 0..m {
                let t0 = j as f64 / m as f64;
                let t1 = (j + 1) as f64 / m as f64;
                let p0 = vec3::lerp(a, b, t0);
                let p1 = vec3::lerp(a, b, t1);
                brute += 0.5
                    * vec3::norm(vec3::cross(vec3::sub(p0, c), vec3::sub(p1, c)));
            }
        }
        let closed_form = 3.0 * 3.0f64.sqrt() / 2.0;
        assert!((brute - closed_form).abs() < 1e-9);
        assert!((facet_area(&f, 3, 1e-9).unwrap() - closed_form).abs() < 1e-9);
    }

    #[test]
    fn facet_area_rejects_nonplanar_loop() {
        let f = Facet {
            vertex_loop: vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.3],
                [0.0, 1.0, 0.0],
            ],
            outward_normal: [0.0, 0.0, 1.0],
            area: 0.0,
            source: FacetSource::Boundary(0),
        };
        assert!(matches!(
            facet_area(&f, 3, 1e-9),
            Err(Error::NonPlanarLoop { .. })
        ));
    }

    #[test]
    fn volume_unit_square_and_cube() {
        let sq = halfspace_intersection_with_box(&[], &Aabb::unit(2)).unwrap();
        assert!((sq.volume - 1.0).abs() < 1e-12);
        assert!((polytope_volume(&sq).unwrap() - 1.0).abs() < 1e-12);
        let cube = halfspace_intersection_with_box(&[], &Aabb::unit(3)).unwrap();
        assert!((cube.volume - 1.0).abs() < 1e-12);
        assert!((polytope_volume(&cube).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_3d_halfspace_intersection_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bx = Aabb::unit(3);
        // Random half-spaces through points near the center.
        let mut hs: Vec<(Vec3, f64)> = Vec::new();
        for _ in 0..6 {
            let n: Vec3 = [
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
                rng.random::<f64>() - 0.5,
            ];
            let p: Vec3 = [
                0.3 + 0.4 * rng.random::<f64>(),
                0.3 + 0.4 * rng.random::<f64>(),
                0.3 + 0.4 * rng.random::<f64>(),
            ];
            hs.push((n, vec3::dot(n, p)));
        }
        let poly = halfspace_intersection_with_box(&hs, &bx).unwrap();

        let n_samples = 2_000_000usize;
        let mut hits = 0usize;
        for _ in 0..n_samples {
            let y: Vec3 = [rng.random(), rng.random(), rng.random()];
            if hs.iter().all(|&(n, c)| vec3::dot(n, y) <= c) {
                hits += 1;
            }
        }
        let p_hat = hits as f64 / n_samples as f64;
        let sigma = (p_hat * (1.0 - p_hat) / n_samples as f64).sqrt();
        assert!(
            (poly.volume - p_hat).abs() <= 3.0 * sigma + 1e-9,
            "volume {} vs MC {} (sigma {})",
            poly.volume,
            p_hat,
            sigma
        );
    }

    #[test]
    fn dual_polytope_volume_identities() {
        assert_eq!(dual_polytope_volume(1.0, 1.0, 2), 0.5);
        assert!((dual_polytope_volume(1.0, 1.0, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dual_volume_matches_explicit_triangles_2d() {
        // An arbitrary 2D Voronoi-style edge: sites v, w with facet H_e the
        // segment [a, b] on their bisector.
        let v: Vec3 = [0.2, 0.3, 0.0];
        let w: Vec3 = [0.9, 0.8, 0.0];
        let mid = vec3::scale(vec3::add(v, w), 0.5);
        let dir = vec3::normalize(vec3::sub(w, v));
        let perp = [-dir[1], dir[0], 0.0];
        let a = vec3::add(mid, vec3::scale(perp, 0.4));
        let b = vec3::sub(mid, vec3::scale(perp, 0.25));
        let f = seg_facet(a, b);
        let len = vec3::dist(v, w);
        let area = vec3::dist(a, b);
        let explicit = explicit_cone_pair_volume(v, w, &f, 2);
        assert!((dual_polytope_volume(len, area, 2) - explicit).abs() < 1e-12);
    }

    #[test]
    fn halfspace_cell_single_bisector() {
        let bx = Aabb::new([0.0, 0.0, 0.0], [2.0, 2.0, 0.0], 2);
        let cell = halfspace_cell([0.5, 0.5, 0.0], &[[1.5, 0.5, 0.0]], &bx).unwrap();
        // Bisector at x = 1: cell is [0,1] x [0,2].
        assert!((cell.volume - 2.0).abs() < 1e-9);
        assert!(cell.contains([0.99, 1.0, 0.0], 1e-9));
        assert!(!cell.contains([1.01, 1.0, 0.0], -1e-9));
    }

    #[test]
    fn halfspace_cell_grid_center_is_unit_square() {
        let bx = Aabb::new([0.0, 0.0, 0.0], [3.0, 3.0, 0.0], 2);
        let mut others = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != (1, 1) {
                    others.push([i as f64 + 0.5, j as f64 + 0.5, 0.0]);
                }
            }
        }
        let cell = halfspace_cell([1.5, 1.5, 0.0], &others, &bx).unwrap();
        assert!((cell.volume - 1.0).abs() < 1e-9);
        assert_eq!(cell.facets.len(), 4);
    }

    #[test]
    fn halfspace_cells_partition_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bx = Aabb::unit(2);
        let sites: Vec<Vec3> = (0..20)
            .map(|_| [rng.random(), rng.random(), 0.0])
            .collect();
        let mut total = 0.0;
        for (i, &s) in sites.iter().enumerate() {
            let others: Vec<Vec3> = sites
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| *p)
                .collect();
            total += halfspace_cell(s, &others, &bx).unwrap().volume;
        }
        assert!((total - 1.0).abs() < 1e-8, "cell areas sum to {total}");
    }

    #[test]
    fn halfspace_cell_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bx = Aabb::unit(3);
        let site: Vec3 = [0.4, 0.5, 0.6];
        let mut others: Vec<Vec3> = (0..12)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let a = halfspace_cell(site, &others, &bx).unwrap();
        others.reverse();
        others.swap(0, 5);
        let b = halfspace_cell(site, &others, &bx).unwrap();
        assert_eq!(a.volume.to_bits(), b.volume.to_bits());
        assert_eq!(a.vertices.len(), b.vertices.len());
    }

    #[test]
    fn halfspace_cells_partition_box_3d() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bx = Aabb::unit(3);
        let sites: Vec<Vec3> = (0..15)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let mut total = 0.0;
        for (i, &s) in sites.iter().enumerate() {
            let others: Vec<Vec3> = sites
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| *p)
                .collect();
            let cell = halfspace_cell(s, &others, &bx).unwrap();
            assert!(cell.convexity_defect() < 1e-8);
            total += cell.volume;
        }
        assert!((total - 1.0).abs() < 1e-8, "cell volumes sum to {total}");
    }

    #[test]
    fn empty_cell_for_site_outside_box() {
        let bx = Aabb::unit(2);
        assert!(matches!(
            halfspace_cell([1.5, 0.5, 0.0], &[[0.2, 0.2, 0.0]], &bx),
            Err(Error::EmptyCell)
        ));
    }
}
