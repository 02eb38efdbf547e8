//! The chained layered flow graph and the linear programs assembled on it.

mod assemble;
mod graph;
mod naive;
mod solve;

pub use assemble::{assemble_lp, utility_objective};
pub use graph::{build_flow_graph, Edge, EdgeFlowRecord, EdgeKind, FlowGraph, FlowSolution};
pub use naive::{assemble_naive_lp, derandomize_marginals, solve_naive, NaiveSolution};
pub use solve::{solve_ef_lottery, solve_on_grid, solve_with_oracle, EfSolution};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::valuations::pieces_for;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sum of expected utilities.
    Welfare,
    /// Lexicographic max-min of expected utilities.
    Leximin,
    /// Nonnegative weighted sum of expected utilities.
    Weights(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fairness {
    /// Ex-ante envy-freeness: `u_i(L_i) >= u_i(L_j)`.
    EnvyFree,
    /// Ex-ante proportionality: `u_i(L_i) >= (1/n) * u_i(everything)`.
    Proportional,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub objective: Objective,
    pub fairness: Fairness,
}

impl SolverConfig {
    pub fn new(epsilon: f64, objective: Objective, fairness: Fairness) -> Self {
        SolverConfig {
            epsilon,
            objective,
            fairness,
        }
    }

    /// Welfare objective under ex-ante envy-freeness.
    pub fn welfare_ef(epsilon: f64) -> Self {
        Self::new(epsilon, Objective::Welfare, Fairness::EnvyFree)
    }

    /// Grid size `1/epsilon`. Warns when epsilon is too coarse for the
    /// `(1 + epsilon)`-Pareto guarantee on an `agents` x `items` instance.
    pub fn pieces(&self, agents: usize, items: usize) -> Result<usize> {
        let k = pieces_for(self.epsilon)?;
        if self.epsilon >= 1.0 / (agents * items) as f64 {
            warn!(
                "epsilon {} is not below 1/(mn) = 1/{}; the approximate Pareto guarantee does not apply",
                self.epsilon,
                agents * items
            );
        }
        Ok(k)
    }
}
