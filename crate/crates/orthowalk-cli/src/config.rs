//! Experiment configuration files (JSON).

use anyhow::{bail, Context, Result};
use orthowalk::vec3::{self, Aabb, Vec3};
use serde::{Deserialize, Serialize};

/// How to obtain a tiling.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TilingSpec {
    /// Regular grid with spacing `h` on the unit box.
    Grid { dim: usize, h: f64 },
    /// Voronoi cells of a uniform Poisson cloud with intensity `m`.
    Poisson {
        dim: usize,
        m: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Voronoi cells of a Poisson cloud driven by a sampled multiplicative
    /// chaos measure (`2^j` grid, `k` dyadic layers, exponent `gamma`).
    Gmc {
        dim: usize,
        m: f64,
        gamma: f64,
        j: u32,
        k: u32,
        #[serde(default)]
        seed: u64,
    },
    /// A previously generated tiling file.
    File { path: String },
}

impl TilingSpec {
    /// Stable label for CSV level ids.
    pub fn label(&self) -> String {
        match self {
            TilingSpec::Grid { h, .. } => format!("grid-h{h}"),
            TilingSpec::Poisson { m, .. } => format!("poisson-m{m}"),
            TilingSpec::Gmc { m, gamma, .. } => format!("gmc-m{m}-g{gamma}"),
            TilingSpec::File { path } => format!("file-{path}"),
        }
    }

    pub fn with_seed(&self, seed: u64) -> TilingSpec {
        let mut s = self.clone();
        match &mut s {
            TilingSpec::Poisson { seed: sd, .. } | TilingSpec::Gmc { seed: sd, .. } => {
                *sd = seed
            }
            _ => {}
        }
        s
    }
}

/// An axis-aligned box given by min/max corners.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoxSpec {
    pub fn to_aabb(&self, dim: usize) -> Result<Aabb> {
        if self.min.len() != dim || self.max.len() != dim {
            bail!("box corners must have {dim} coordinates");
        }
        let mut min = vec3::ZERO;
        let mut max = vec3::ZERO;
        for j in 0..dim {
            min[j] = self.min[j];
            max[j] = self.max[j];
            if !(min[j] < max[j]) {
                bail!("box degenerate on axis {j}");
            }
        }
        Ok(Aabb::new(min, max, dim))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    pub fn center_vec(&self) -> Vec3 {
        let mut c = vec3::ZERO;
        for (j, &x) in self.center.iter().enumerate().take(3) {
            c[j] = x;
        }
        c
    }
}

fn default_margin() -> f64 {
    0.15
}

/// `generate` command configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GenerateConfig {
    Grid {
        dim: usize,
        h: f64,
    },
    Poisson {
        dim: usize,
        m: f64,
        #[serde(default)]
        seed: u64,
    },
    Gmc {
        dim: usize,
        m: f64,
        gamma: f64,
        j: u32,
        k: u32,
        #[serde(default)]
        seed: u64,
    },
    Counterexample {
        d: usize,
        big_n: usize,
        period: usize,
    },
}

impl GenerateConfig {
    pub fn as_tiling_spec(&self) -> Option<TilingSpec> {
        match *self {
            GenerateConfig::Grid { dim, h } => Some(TilingSpec::Grid { dim, h }),
            GenerateConfig::Poisson { dim, m, seed } => {
                Some(TilingSpec::Poisson { dim, m, seed })
            }
            GenerateConfig::Gmc { dim, m, gamma, j, k, seed } => {
                Some(TilingSpec::Gmc { dim, m, gamma, j, k, seed })
            }
            GenerateConfig::Counterexample { .. } => None,
        }
    }
}

/// `solve` command: Dirichlet problem for a registry harmonic on a sub-box.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub tiling: TilingSpec,
    pub harmonic: String,
    /// Sub-box to solve on; defaults to the unit box shrunk by `margin`.
    #[serde(default)]
    pub domain: Option<BoxSpec>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

/// `walk` command: either a tiling walk until exiting a sub-box, or a walk on
/// the counterexample graph until absorption.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WalkConfig {
    Tiling {
        tiling: TilingSpec,
        start: Vec<f64>,
        #[serde(default)]
        domain: Option<BoxSpec>,
        #[serde(default = "default_margin")]
        margin: f64,
        #[serde(default)]
        seed: u64,
    },
    Counterexample {
        d: usize,
        big_n: usize,
        period: usize,
        #[serde(default)]
        seed: u64,
    },
}

/// `harmonic-measure` command.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HarmonicMeasureConfig {
    pub dim: usize,
    /// Poisson intensities, one refinement level each.
    pub levels: Vec<f64>,
    pub ball: BallSpec,
    /// Probe start points (continuum coordinates; snapped to nearest site).
    pub starts: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Max harmonic-polynomial degree in the test dictionary.
    #[serde(default = "default_l_max")]
    pub l_max: usize,
}

fn default_l_max() -> usize {
    4
}

/// `counterexample` command.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub d: usize,
    pub big_n_list: Vec<usize>,
    pub period: usize,
    pub n_walks: u64,
    #[serde(default)]
    pub seed: u64,
}

/// `convergence` command.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub levels: Vec<TilingSpec>,
    pub harmonic: String,
    #[serde(default)]
    pub domain: Option<BoxSpec>,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

pub fn load<T: serde::de::DeserializeOwned>(path: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {path}"))
}
