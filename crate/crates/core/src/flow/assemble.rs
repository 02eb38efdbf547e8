use super::{Fairness, FlowGraph, Objective, SolverConfig};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::valuations::GridValues;

/// Dense coefficients of `agent`'s expected value for the pieces `holder` receives.
pub fn utility_objective(graph: &FlowGraph, grid: &GridValues, agent: usize, holder: usize) -> Vec<f64> {
    graph
        .edges()
        .iter()
        .map(|e| match e.agent() {
            Some(a) if a == holder => grid.value(agent, e.item, e.pieces),
            _ => 0.0,
        })
        .collect()
}

fn sparse(dense: &[f64]) -> Vec<(usize, f64)> {
    dense
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, &c)| (j, c))
        .collect()
}

/// Flow LP over the edges of `graph`.
///
/// Rows, in order: conservation at every grid vertex and item junction, unit
/// source outflow, then the fairness rows (for envy-freeness agent-major over
/// the envied agent; for proportionality one per agent).
pub fn assemble_lp(graph: &FlowGraph, grid: &GridValues, config: &SolverConfig) -> Result<LinearProgram> {
    if graph.agents() != grid.agents() || graph.items() != grid.items() || graph.pieces() != grid.pieces() {
        return Err(Error::Dimension(format!(
            "graph is {}x{} with {} pieces but grid is {}x{} with {}",
            graph.agents(),
            graph.items(),
            graph.pieces(),
            grid.agents(),
            grid.items(),
            grid.pieces()
        )));
    }
    let n = graph.agents();
    let mut lp = LinearProgram::new(graph.edges().len());

    for v in 0..graph.num_vertices() {
        if v == graph.source() || v == graph.sink() {
            continue;
        }
        let row = graph
            .in_edges(v)
            .iter()
            .map(|&e| (e, 1.0))
            .chain(graph.out_edges(v).iter().map(|&e| (e, -1.0)));
        lp.add_constraint(row, Relation::Eq, 0.0)?;
    }
    lp.add_constraint(
        graph.out_edges(graph.source()).iter().map(|&e| (e, 1.0)),
        Relation::Eq,
        1.0,
    )?;

    let own: Vec<Vec<f64>> = (0..n).map(|i| utility_objective(graph, grid, i, i)).collect();
    match config.fairness {
        Fairness::EnvyFree => {
            for (i, own_i) in own.iter().enumerate() {
                for j in (0..n).filter(|&j| j != i) {
                    let other = utility_objective(graph, grid, i, j);
                    let diff: Vec<f64> = own_i.iter().zip(&other).map(|(a, b)| a - b).collect();
                    lp.add_constraint(sparse(&diff), Relation::Ge, 0.0)?;
                }
            }
        }
        Fairness::Proportional => {
            for (i, row) in own.iter().enumerate() {
                lp.add_constraint(sparse(row), Relation::Ge, grid.full_value(i) / n as f64)?;
            }
        }
        Fairness::None => {}
    }

    let weights = match &config.objective {
        Objective::Welfare | Objective::Leximin => vec![1.0; n],
        Objective::Weights(w) => {
            if w.len() != n {
                return Err(Error::Dimension(format!("{} weights for {n} agents", w.len())));
            }
            if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::Config(format!("weights must be finite and nonnegative: {w:?}")));
            }
            w.clone()
        }
    };
    let mut objective = vec![0.0; graph.edges().len()];
    for (w, row) in weights.iter().zip(&own) {
        for (c, u) in objective.iter_mut().zip(row) {
            *c += w * u;
        }
    }
    lp.set_objective(objective)?;
    Ok(lp)
}
