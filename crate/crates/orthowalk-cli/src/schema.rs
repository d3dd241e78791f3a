//! On-disk JSON schemas: the tiling file and the counterexample graph file.

use anyhow::{anyhow, bail, Context, Result};
use orthowalk::geometry::{Facet, FacetSource, Polytope};
use orthowalk::tilings::{CombinatorialGraph, EdgeRecord, SphereKind, Tiling};
use orthowalk::vec3::{self, Aabb, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct BoxJson {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FacetJson {
    pub loop_indices: Vec<usize>,
    pub normal: Vec<f64>,
    pub area: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CellJson {
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<FacetJson>,
    pub volume: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EdgeJson {
    pub u: usize,
    pub v: usize,
    pub length: f64,
    pub facet_area: f64,
    pub conductance: f64,
    pub qe_volume: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetaJson {
    pub generator: String,
    pub seed: u64,
    pub epsilon: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TilingFile {
    pub dim: usize,
    #[serde(rename = "box")]
    pub domain_box: BoxJson,
    pub sites: Vec<Vec<f64>>,
    pub cells: Vec<CellJson>,
    pub edges: Vec<EdgeJson>,
    pub meta: MetaJson,
}

fn trim(p: Vec3, dim: usize) -> Vec<f64> {
    p[..dim].to_vec()
}

fn lift(p: &[f64]) -> Vec3 {
    let mut q = vec3::ZERO;
    for (j, &x) in p.iter().enumerate().take(3) {
        q[j] = x;
    }
    q
}

pub fn tiling_to_file(t: &Tiling, generator: &str, seed: u64) -> TilingFile {
    let dim = t.dim;
    let match_tol = 1e-9 * t.domain_box.diameter().max(1.0);
    let cells = t
        .cells
        .iter()
        .map(|cell| {
            let vertices: Vec<Vec<f64>> =
                cell.vertices.iter().map(|&v| trim(v, dim)).collect();
            let facets = cell
                .facets
                .iter()
                .map(|f| FacetJson {
                    loop_indices: f
                        .vertex_loop
                        .iter()
                        .map(|&p| {
                            // Facet loops were the source of the vertex list,
                            // so a match always exists.
                            cell.vertices
                                .iter()
                                .position(|&v| vec3::dist(v, p) <= match_tol)
                                .expect("facet vertex present in cell vertex list")
                        })
                        .collect(),
                    normal: trim(f.outward_normal, dim),
                    area: f.area,
                })
                .collect();
            CellJson { vertices, facets, volume: cell.volume }
        })
        .collect();
    TilingFile {
        dim,
        domain_box: BoxJson {
            min: trim(t.domain_box.min, dim),
            max: trim(t.domain_box.max, dim),
        },
        sites: t.sites.iter().map(|&s| trim(s, dim)).collect(),
        cells,
        edges: t
            .edges
            .iter()
            .map(|e| EdgeJson {
                u: e.u,
                v: e.v,
                length: e.length,
                facet_area: e.facet_area,
                conductance: e.conductance,
                qe_volume: e.qe_volume,
            })
            .collect(),
        meta: MetaJson { generator: generator.to_string(), seed, epsilon: t.epsilon },
    }
}

/// Rebuild the tiling. Facet sources are not serialized; each edge's facet is
/// recovered by matching area and normal direction against the site pair, and
/// unmatched facets are treated as domain-box faces.
pub fn tiling_from_file(file: &TilingFile) -> Result<Tiling> {
    let dim = file.dim;
    if !(2..=3).contains(&dim) {
        bail!("unsupported dimension {dim}");
    }
    let bx = Aabb::new(lift(&file.domain_box.min), lift(&file.domain_box.max), dim);
    let sites: Vec<Vec3> = file.sites.iter().map(|s| lift(s)).collect();
    if sites.len() != file.cells.len() {
        bail!("{} sites but {} cells", sites.len(), file.cells.len());
    }
    let mut cells: Vec<Polytope> = file
        .cells
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let vertices: Vec<Vec3> = c.vertices.iter().map(|v| lift(v)).collect();
            let facets = c
                .facets
                .iter()
                .map(|f| {
                    let vertex_loop: Vec<Vec3> = f
                        .loop_indices
                        .iter()
                        .map(|&i| {
                            vertices
                                .get(i)
                                .copied()
                                .ok_or_else(|| anyhow!("cell {ci}: loop index {i} out of range"))
                        })
                        .collect::<Result<_>>()?;
                    Ok(Facet {
                        vertex_loop,
                        outward_normal: lift(&f.normal),
                        area: f.area,
                        source: FacetSource::Boundary(0),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Polytope { vertices, facets, volume: c.volume, dim })
        })
        .collect::<Result<Vec<_>>>()?;

    // Recover edge -> facet links and facet sources.
    let mut edges = Vec::with_capacity(file.edges.len());
    for (ei, e) in file.edges.iter().enumerate() {
        if e.u >= sites.len() || e.v >= sites.len() {
            bail!("edge {ei}: endpoint out of range");
        }
        let dir = vec3::normalize(vec3::sub(sites[e.v], sites[e.u]));
        let fi = best_facet(&cells[e.u], dir, e.area_for_match())
            .ok_or_else(|| anyhow!("edge {ei}: no matching facet in cell {}", e.u))?;
        cells[e.u].facets[fi].source = FacetSource::Site(e.v);
        if let Some(fj) = best_facet(&cells[e.v], vec3::scale(dir, -1.0), e.area_for_match()) {
            cells[e.v].facets[fj].source = FacetSource::Site(e.u);
        }
        edges.push(EdgeRecord {
            u: e.u,
            v: e.v,
            length: e.length,
            facet_area: e.facet_area,
            conductance: e.conductance,
            qe_volume: e.qe_volume,
            cell: e.u,
            facet: fi,
        });
    }
    Ok(Tiling::from_parts(dim, sites, cells, edges, bx))
}

impl EdgeJson {
    fn area_for_match(&self) -> f64 {
        self.facet_area
    }
}

fn best_facet(cell: &Polytope, dir: Vec3, area: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (fi, f) in cell.facets.iter().enumerate() {
        let align = vec3::dot(f.outward_normal, dir);
        if align < 0.9 {
            continue;
        }
        let score = (f.area - area).abs() + (1.0 - align);
        if best.map_or(true, |(_, s)| score < s) {
            best = Some((fi, score));
        }
    }
    best.map(|(fi, _)| fi)
}

pub fn write_tiling(t: &Tiling, generator: &str, seed: u64) -> Result<String> {
    let file = tiling_to_file(t, generator, seed);
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn read_tiling(path: &str) -> Result<Tiling> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let file: TilingFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
    tiling_from_file(&file)
}

/// Counterexample tangency graph file.
#[derive(Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub dim: usize,
    pub big_n: usize,
    pub period: usize,
    pub positions: Vec<Vec<f64>>,
    pub kinds: Vec<String>,
    pub layer: Vec<usize>,
    pub adjacency: Vec<Vec<usize>>,
    pub meta: MetaJson,
}

pub fn graph_to_file(g: &CombinatorialGraph, seed: u64) -> GraphFile {
    GraphFile {
        dim: g.dim,
        big_n: g.big_n,
        period: g.period,
        positions: g.positions.clone(),
        kinds: g
            .kinds
            .iter()
            .map(|k| match k {
                SphereKind::Big => "big".to_string(),
                SphereKind::Small => "small".to_string(),
            })
            .collect(),
        layer: g.layer.clone(),
        adjacency: g.adjacency.clone(),
        meta: MetaJson {
            generator: "counterexample".to_string(),
            seed,
            epsilon: 0.0,
        },
    }
}
