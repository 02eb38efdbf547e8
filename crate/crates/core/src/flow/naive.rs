//! The per-agent piece-distribution LP, which only allocates the item in
//! expectation, and the check of whether its marginals can be realized by
//! feasible outcomes.

use super::{build_flow_graph, FlowGraph, FlowSolution};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::valuations::GridValues;

/// Optimal piece distributions: `p[i][y]` is the probability agent `i` gets `y` pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct NaiveSolution {
    pub p: Vec<Vec<f64>>,
    pub objective: f64,
}

/// LP over `p_{i,y}` (variable `i * (k + 1) + y`) for one item of `grid`.
///
/// Rows: expected total equal to the whole item, one distribution row per
/// agent, then the `n(n-1)` envy rows. Objective: expected welfare.
pub fn assemble_naive_lp(grid: &GridValues, item: usize) -> Result<LinearProgram> {
    if item >= grid.items() {
        return Err(Error::Dimension(format!("item {item} out of range ({} items)", grid.items())));
    }
    let n = grid.agents();
    let k = grid.pieces();
    let var = |i: usize, y: usize| i * (k + 1) + y;
    let mut lp = LinearProgram::new(n * (k + 1));

    let total = (0..n).flat_map(|i| (0..=k).map(move |y| (var(i, y), y as f64 / k as f64)));
    lp.add_constraint(total, Relation::Eq, 1.0)?;
    for i in 0..n {
        lp.add_constraint((0..=k).map(|y| (var(i, y), 1.0)), Relation::Eq, 1.0)?;
    }
    for i in 0..n {
        let f = grid.row(i, item);
        for j in (0..n).filter(|&j| j != i) {
            let row = (0..=k)
                .map(|y| (var(i, y), f[y]))
                .chain((0..=k).map(|y| (var(j, y), -f[y])));
            lp.add_constraint(row, Relation::Ge, 0.0)?;
        }
    }
    let objective = (0..n)
        .flat_map(|i| grid.row(i, item).to_vec())
        .collect();
    lp.set_objective(objective)?;
    Ok(lp)
}

pub fn solve_naive(grid: &GridValues, item: usize) -> Result<NaiveSolution> {
    let lp = assemble_naive_lp(grid, item)?;
    let sol = solve_lp(&lp);
    let objective = sol.objective;
    let values = sol.into_optimal()?;
    let k = grid.pieces();
    let p = values.chunks(k + 1).map(<[f64]>::to_vec).collect();
    Ok(NaiveSolution { p, objective })
}

/// Looks for a single-item flow whose per-agent piece distributions equal `p`.
///
/// Every such flow decomposes into feasible outcomes; if none exists the
/// marginals cannot be realized and [`Error::NotDerandomizable`] is returned.
pub fn derandomize_marginals(p: &[Vec<f64>]) -> Result<(FlowGraph, FlowSolution)> {
    let n = p.len();
    let k = p
        .first()
        .map(|row| row.len().saturating_sub(1))
        .ok_or_else(|| Error::Dimension("no agents".into()))?;
    if p.iter().any(|row| row.len() != k + 1) {
        return Err(Error::Dimension("piece distributions differ in length".into()));
    }
    let graph = build_flow_graph(n, 1, k)?;
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
    for (i, dist) in p.iter().enumerate() {
        for (y, &prob) in dist.iter().enumerate() {
            let row = graph
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| e.agent() == Some(i) && e.pieces == y)
                .map(|(idx, _)| (idx, 1.0));
            lp.add_constraint(row, Relation::Eq, prob)?;
        }
    }
    let sol = solve_lp(&lp);
    match sol.status {
        LpStatus::Optimal => {
            let flow = FlowSolution::new(&graph, sol.values)?;
            Ok((graph, flow))
        }
        LpStatus::Infeasible => Err(Error::NotDerandomizable),
        other => Err(Error::Lp(format!("derandomization LP ended with status {other:?}"))),
    }
}
