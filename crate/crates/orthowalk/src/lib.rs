//! Orthogonal tilings of R^d with geometry-determined conductances.
//!
//! The crate builds tiling graphs (regular grids, box-clipped Voronoi
//! tessellations of deterministic or random point clouds, and a sphere-packing
//! tangency graph), equips their edges with the conductance
//! `a(w,v) = vol_{d-1}(P_w ∩ P_v) / ||w - v||`, and provides the discrete
//! calculus that comes with that choice: gradient, divergence, the weighted
//! graph Laplacian (a two-point-flux finite volume scheme), Dirichlet solves,
//! exact hitting distributions, and the conductance-weighted random walk.
//!
//! Module map:
//! - [`geometry`]: convex polytope primitives and half-space clipping,
//! - [`tilings`]: tiling constructors and structural validation,
//! - [`gmc`]: approximate Gaussian multiplicative chaos measures and Poisson
//!   point sampling,
//! - [`fvm`]: the discrete operators and their algebraic identities,
//! - [`solver`]: Dirichlet problems, harmonic measure, column diagnostics,
//! - [`walk`]: random walks, exit experiments, and the curve distance.

pub mod error;
pub mod fvm;
pub mod geometry;
pub mod gmc;
pub mod solver;
pub mod tilings;
pub mod vec3;
pub mod walk;

pub use error::{Error, Result};
