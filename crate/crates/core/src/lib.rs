//! Eikonal equation `|grad u| = f` on metric graphs with discontinuous or
//! unbounded running cost, solved through the optical-length metric and the
//! Lax (optimal control) formula, together with numerical verifiers for the
//! Monge property, regularity and transversal solutions.

pub mod cli;
pub mod dirichlet;
pub mod error;
pub mod field;
pub mod graph;
pub mod monge;
pub mod optical;
pub mod quadrature;
pub mod regularity;
pub mod scenario_file;
pub mod scenarios;
mod search;
pub mod transversal;

pub use dirichlet::{solve_lax, DirichletProblem, Solution};
pub use error::{Error, Result};
pub use field::{Builtin, EdgeRef, Integrability, WeightField};
pub use graph::{build_graph, grid_domain, refine, Domain, GraphSpec, MetricGraph, Path, Stencil};
pub use optical::{optical_from_sources, optical_pair, truncated_solve, OpticalTable, WeightedGraph};
pub use quadrature::{curve_integral, Quadrature};
