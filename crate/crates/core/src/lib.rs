//! Priority flow admission and routing.
//!
//! Given a capacitated directed network and a list of prioritized flows,
//! admit a subset of the flows, each on one simple candidate path, so that
//! no link is overloaded and the total admitted priority is as large as
//! possible.
//!
//! * [`network`]: domain types, feasibility and objective checks
//! * [`paths`]: hop-limited candidate path enumeration
//! * [`ilp`]: the 0-1 program, LP export, certificate checks
//! * [`exact`]: branch-and-bound, brute force, strict prioritization
//! * [`ga`]: the genetic heuristic
//! * [`generate`]: benchmark topology and flow generation
//! * [`bench`]: exact-vs-heuristic experiment runner
//! * [`io`]: JSON instance and solution formats

pub mod bench;
pub mod error;
pub mod exact;
pub mod ga;
pub mod generate;
pub mod ilp;
pub mod io;
pub mod network;
pub mod paths;

pub use error::{PfarError, Result};
pub use exact::{solve_brute_force, solve_exact, solve_strict, ExactConfig, SolveResult, SolveStats};
pub use ga::{run_ga, GaConfig, GaStats};
pub use network::{
    check_solution, objective_value, residual_capacities, validate_path, CheckReport, Edge, EdgeId, Flow, Network,
    NodeId, Path, PfarInstance, PriorityFn, RouteAssignment, Violation,
};
pub use paths::{attach_paths, enumerate_paths, PathEnumConfig};
