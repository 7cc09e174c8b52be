//! Finite-element machinery for the p-Laplace Dirichlet problem
//!
//!   -div(|grad u|^{p-2} grad u) = f(u) in Omega,   u > 0 in Omega,   u = 0 on the boundary,
//!
//! on planar domains, together with the measurements that quantify how close a
//! solution (and its domain) is to the radially symmetric configuration:
//!
//! * boundary geometry: isoperimetric deficit, optimal-center normal alignment,
//!   their sum `eps`, and the negative curvature bound used by the gradient estimate;
//! * level-set distribution tables: mu(t), I(t), K(t), surface measure, boundary
//!   integrals of powers of |grad u|, and the per-level flux balance check;
//! * the per-level and boundary deficits D1..D5, the weight W(t) with its lower
//!   bound, the quantitative Hoelder deficit, and the integral identity tying
//!   them together;
//! * the Pohozaev identity, the P-function gradient bound, the near-critical
//!   set measure M_u(sigma), and the L1 distance to the Schwarz rearrangement.
//!
//! The pipeline is deterministic end to end: identical configs produce
//! byte-identical reports. See the `examples/` directory for one runnable
//! program per capability, and the `plapsym` binary for the batch CLI.

pub mod config;
pub mod deficits;
pub mod geometry;
pub mod levelset;
pub mod mesh;
pub mod optim;
pub mod pipeline;
pub mod solver;
pub mod sparse;
pub mod svg;
pub mod vec2;

pub use config::RunConfig;
pub use deficits::{deficit_report, DeficitReport};
pub use geometry::{build_boundary, domain_eps, BoundaryCurve, DomainSpec, GeometryReport, Shape};
pub use levelset::{distribution_tables, extract_level, DistributionTables, LevelSet};
pub use mesh::{triangulate, Mesh};
pub use pipeline::{run_deficits, run_report, run_solve, run_sweep, PipelineError};
pub use solver::{solve, Field, Nonlinearity, SolverConfig};
pub use vec2::Vec2;
