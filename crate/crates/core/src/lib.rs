//! Envy-free lotteries over allocations of homogeneous divisible goods.
//!
//! Agents have non-decreasing Lipschitz valuation curves for every item and are
//! additive across items. The crate provides
//!
//! * [`valuations`]: curves, the value/cut query oracle and grid discretization,
//! * [`lp`]: a small bounded-variable revised simplex with leximin support,
//! * [`flow`]: the layered flow graph whose source-sink paths are feasible
//!   allocations, and the linear programs built on it,
//! * [`decomposition`]: flow to lottery path stripping,
//! * [`protocols`]: random serial dictatorship,
//! * [`verification`]: envy-freeness, proportionality and Pareto oracles plus
//!   the utility frontier sweep,
//! * [`adversary`]: the linear-answering query adversary and its instance audit.

pub mod adversary;
pub mod decomposition;
pub mod error;
pub mod flow;
pub mod io;
pub mod lp;
pub mod protocols;
pub mod valuations;
pub mod verification;

pub use decomposition::{decompose, marginals, Lottery, Outcome};
pub use error::{Error, Result};
pub use flow::{build_flow_graph, solve_ef_lottery, Fairness, FlowGraph, FlowSolution, Objective, SolverConfig};
pub use lp::{lexi_solve, solve_lp, LinearProgram, LpSolution, LpStatus};
pub use valuations::{discretize, GridValues, Instance, QueryLedger, ValuationFn};

/// Absolute tolerance for comparing utilities and probabilities.
pub const VALUE_TOL: f64 = 1e-9;
