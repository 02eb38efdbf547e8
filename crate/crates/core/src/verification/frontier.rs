use serde::{Deserialize, Serialize};

use super::pareto::for_each_grid_outcome;
use crate::decomposition::{decompose, Lottery, Outcome};
use crate::error::{Error, Result};
use crate::flow::{assemble_lp, build_flow_graph, utility_objective, Fairness, FlowSolution, Objective, SolverConfig};
use crate::lp::solve_lp;
use crate::valuations::{pieces_for, GridValues, Instance};

/// Weight added to every agent so ties on the weighted optimum go to larger total utility.
const TIE_TILT: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub weights: Vec<f64>,
    pub utilities: Vec<f64>,
    pub lottery: Lottery,
}

/// Utility vector of a complete deterministic grid outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomePoint {
    pub allocation: Outcome,
    pub utilities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub points: Vec<FrontierPoint>,
    pub outcomes: Vec<OutcomePoint>,
}

/// Evenly spaced weight vectors on the simplex.
///
/// Two agents get `directions` vectors `(t, 1 - t)`; more agents get every
/// vector with entries in multiples of `1/(directions - 1)`.
pub fn simplex_weights(agents: usize, directions: usize) -> Vec<Vec<f64>> {
    if directions <= 1 || agents == 1 {
        return vec![vec![1.0 / agents as f64; agents]];
    }
    let h = directions - 1;
    let mut out = Vec::new();
    let mut cur = vec![0usize; agents];
    fn rec(cur: &mut Vec<usize>, pos: usize, left: usize, h: usize, out: &mut Vec<Vec<f64>>) {
        if pos == cur.len() - 1 {
            cur[pos] = left;
            out.push(cur.iter().map(|&c| c as f64 / h as f64).collect());
            return;
        }
        for c in (0..=left).rev() {
            cur[pos] = c;
            rec(cur, pos + 1, left - c, h, out);
        }
    }
    rec(&mut cur, 0, h, h, &mut out);
    out
}

/// Solves the flow LP for each weight vector under `fairness`, breaking ties
/// towards larger total utility, and lists the utility points of all complete
/// deterministic grid outcomes.
pub fn frontier_sweep(instance: &Instance, epsilon: f64, directions: usize, fairness: Fairness) -> Result<Frontier> {
    if directions == 0 {
        return Err(Error::Config("at least one direction is needed".into()));
    }
    let k = pieces_for(epsilon)?;
    let n = instance.agents();
    let grid = GridValues::exact(instance, k);
    let graph = build_flow_graph(n, instance.items(), k)?;
    let own: Vec<Vec<f64>> = (0..n).map(|i| utility_objective(&graph, &grid, i, i)).collect();
    let weighted = |w: &[f64]| -> Vec<f64> {
        let mut dense = vec![0.0; graph.edges().len()];
        for (wi, row) in w.iter().zip(&own) {
            for (d, c) in dense.iter_mut().zip(row) {
                *d += wi * c;
            }
        }
        dense
    };

    let mut points = Vec::new();
    for weights in simplex_weights(n, directions) {
        let config = SolverConfig::new(epsilon, Objective::Weights(weights.clone()), fairness);
        let mut lp = assemble_lp(&graph, &grid, &config)?;
        let tilted: Vec<f64> = weights.iter().map(|w| w + TIE_TILT).collect();
        lp.set_objective(weighted(&tilted))?;
        let flows = solve_lp(&lp).into_optimal()?;
        let flow = FlowSolution::new(&graph, flows)?;
        let utilities = own
            .iter()
            .map(|row| row.iter().zip(&flow.flows).map(|(c, p)| c * p).sum())
            .collect();
        points.push(FrontierPoint {
            weights,
            utilities,
            lottery: decompose(&graph, &flow)?,
        });
    }

    let mut outcomes = Vec::new();
    for_each_grid_outcome(n, instance.items(), k, |y| {
        let complete = (0..instance.items()).all(|t| y.iter().map(|r| r[t]).sum::<usize>() == k);
        if !complete {
            return;
        }
        let utilities = (0..n)
            .map(|i| (0..instance.items()).map(|t| grid.value(i, t, y[i][t])).sum())
            .collect();
        let x = y
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / k as f64).collect())
            .collect();
        outcomes.push(OutcomePoint {
            allocation: Outcome { x },
            utilities,
        });
    });
    Ok(Frontier { points, outcomes })
}
