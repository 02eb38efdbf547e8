use log::debug;

use super::{assemble_lp, build_flow_graph, utility_objective, FlowGraph, FlowSolution, Objective, SolverConfig};
use crate::error::{Error, Result};
use crate::lp::{lexi_solve, solve_lp, LpStatus};
use crate::valuations::{discretize_with, GridValues, Instance, InstanceOracle, QueryLedger, QueryOracle};

/// Tolerance for the structural checks on a returned flow.
const FLOW_TOL: f64 = 1e-8;

/// A solved flow LP together with the data it was built from.
#[derive(Clone, Debug)]
pub struct EfSolution {
    pub graph: FlowGraph,
    pub grid: GridValues,
    pub flow: FlowSolution,
    /// Objective of the configured weighting; the utility sum for leximin.
    pub objective_value: f64,
    /// Expected utility of each agent for her own share.
    pub utilities: Vec<f64>,
}

/// Builds, assembles and solves the flow LP on already discretized values.
pub fn solve_on_grid(grid: GridValues, config: &SolverConfig) -> Result<EfSolution> {
    let graph = build_flow_graph(grid.agents(), grid.items(), grid.pieces())?;
    let lp = assemble_lp(&graph, &grid, config)?;
    let own: Vec<Vec<f64>> = (0..grid.agents())
        .map(|i| utility_objective(&graph, &grid, i, i))
        .collect();
    let sol = match config.objective {
        Objective::Leximin => lexi_solve(&lp, &own)?,
        _ => solve_lp(&lp),
    };
    debug!(
        "flow LP: {} vars, {} rows, {:?} after {} pivots",
        lp.num_vars(),
        lp.num_rows(),
        sol.status,
        sol.pivots
    );
    let flows = match sol.status {
        LpStatus::Optimal => sol.values,
        LpStatus::Infeasible => {
            return Err(Error::Lp(
                "flow LP infeasible although the uniform lottery is always feasible".into(),
            ))
        }
        other => return Err(Error::Lp(format!("flow LP ended with status {other:?}"))),
    };
    let flow = FlowSolution::new(&graph, flows)?;
    flow.validate(&graph, FLOW_TOL)?;
    let utilities: Vec<f64> = own
        .iter()
        .map(|row| row.iter().zip(&flow.flows).map(|(c, p)| c * p).sum())
        .collect();
    let objective_value = match &config.objective {
        Objective::Weights(w) => w.iter().zip(&utilities).map(|(w, u)| w * u).sum(),
        _ => utilities.iter().sum(),
    };
    Ok(EfSolution {
        graph,
        grid,
        flow,
        objective_value,
        utilities,
    })
}

/// Discretizes through `oracle` and solves.
pub fn solve_with_oracle(oracle: &mut dyn QueryOracle, config: &SolverConfig) -> Result<EfSolution> {
    config.pieces(oracle.agents(), oracle.items())?;
    let grid = discretize_with(oracle, config.epsilon)?;
    solve_on_grid(grid, config)
}

/// Discretize, build, assemble and solve, logging every query into `ledger`.
pub fn solve_ef_lottery(instance: &Instance, config: &SolverConfig, ledger: &mut QueryLedger) -> Result<EfSolution> {
    let mut oracle = InstanceOracle::new(instance, ledger);
    solve_with_oracle(&mut oracle, config)
}
