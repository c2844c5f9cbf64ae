//! Joint user association and small-cell ON/OFF planning for heterogeneous
//! cellular networks powered by a mix of grid and wind energy.
//!
//! The crate models a network of one macro base station and several small
//! cells, evaluates per-station power draw against harvested wind power, and
//! picks station modes plus a user-to-station assignment that minimize the
//! non-renewable share of consumption. The planner linearizes the bilinear
//! ON-mode power term into an upper bound, reformulates the clipped shortfall
//! objective with epigraph variables, and solves the resulting 0/1 program
//! with the bundled branch-and-bound solver. Two reference baselines
//! (nearest-station association, total-power minimization) and an exhaustive
//! small-instance oracle are included, together with a seeded Monte-Carlo
//! experiment driver.

pub mod formulation;
pub mod harness;
pub mod milp;
pub mod power;
pub mod scenario;
pub mod schemes;

pub use formulation::{build_min_power, build_p3, MilpModel};
pub use milp::{solve_lp, solve_milp, MilpSolution, SolveStatus, SolverConfig};
pub use power::{Decision, PowerParams, RenewableRealization, WindModel};
pub use scenario::{BaseStation, Scenario, User};
