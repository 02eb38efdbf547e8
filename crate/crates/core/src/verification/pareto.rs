use serde::{Deserialize, Serialize};

use super::{expected_utilities, CheckResult, VerificationReport, Witness};
use crate::decomposition::{decompose, Lottery, Outcome};
use crate::error::{Error, Result};
use crate::flow::{assemble_lp, build_flow_graph, utility_objective, Fairness, FlowSolution, Objective, SolverConfig};
use crate::lp::{solve_lp, LpStatus, Relation};
use crate::valuations::{GridValues, Instance};

/// A dominator exists iff the total improvement exceeds this.
pub const DOMINANCE_TOL: f64 = 1e-8;
/// Largest number of grid outcomes enumerated by the brute-force class.
pub const MAX_OUTCOMES: usize = 2_000_000;

/// Alternatives a lottery is compared against, all on a grid of `pieces` per item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonClass {
    /// Ex-ante envy-free lotteries over grid outcomes.
    EfLotteries,
    /// Ex-ante proportional lotteries over grid outcomes.
    ProportionalLotteries,
    /// All lotteries over grid outcomes.
    AllLotteries,
    /// Deterministic grid outcomes.
    AllOutcomes,
}

/// Searches for an alternative in `class` giving every agent at least
/// `(1 + epsilon)` times her utility under `lottery`, strictly more in total.
///
/// Lottery classes solve `max sum_i (u_i - (1 + epsilon) u_i(L))` subject to
/// `u_i >= (1 + epsilon) u_i(L)` over the flow polytope; the outcome class is
/// enumerated. Utilities of alternatives are exact since grid amounts are
/// evaluated on the true curves.
pub fn check_eps_pareto(
    lottery: &Lottery,
    instance: &Instance,
    epsilon: f64,
    class: ComparisonClass,
    pieces: usize,
) -> Result<VerificationReport> {
    if lottery.agents() != instance.agents() || lottery.items() != instance.items() {
        return Err(Error::Dimension("lottery shape does not match instance".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let base = expected_utilities(lottery, instance).own;
    let targets: Vec<f64> = base.iter().map(|u| (1.0 + epsilon) * u).collect();
    let grid = GridValues::exact(instance, pieces);
    let witness = match class {
        ComparisonClass::AllOutcomes => dominating_outcome(&grid, &targets)?.map(|(allocation, improved)| {
            Witness::DominatingOutcome {
                epsilon,
                original: base.clone(),
                improved,
                allocation,
            }
        }),
        _ => {
            let fairness = match class {
                ComparisonClass::EfLotteries => Fairness::EnvyFree,
                ComparisonClass::ProportionalLotteries => Fairness::Proportional,
                _ => Fairness::None,
            };
            dominating_lottery(&grid, fairness, &targets)?.map(|(lottery, improved)| Witness::Dominator {
                epsilon,
                original: base.clone(),
                improved,
                lottery,
            })
        }
    };
    let name = match class {
        ComparisonClass::EfLotteries => "eps_pareto_ef_lotteries",
        ComparisonClass::ProportionalLotteries => "eps_pareto_proportional_lotteries",
        ComparisonClass::AllLotteries => "eps_pareto_all_lotteries",
        ComparisonClass::AllOutcomes => "eps_pareto_all_outcomes",
    };
    let detail = format!("epsilon {epsilon}, grid of {pieces} pieces per item");
    Ok(VerificationReport::single(CheckResult::new(
        name,
        witness.into_iter().collect(),
        detail,
    )))
}

/// Best dominating lottery over the flow polytope, if any.
pub fn dominating_lottery(grid: &GridValues, fairness: Fairness, targets: &[f64]) -> Result<Option<(Lottery, Vec<f64>)>> {
    let graph = build_flow_graph(grid.agents(), grid.items(), grid.pieces())?;
    let config = SolverConfig::new(grid.epsilon(), Objective::Welfare, fairness);
    let mut lp = assemble_lp(&graph, grid, &config)?;
    let own: Vec<Vec<f64>> = (0..grid.agents())
        .map(|i| utility_objective(&graph, grid, i, i))
        .collect();
    for (row, &t) in own.iter().zip(targets) {
        let coeffs = row.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(j, &c)| (j, c));
        lp.add_constraint(coeffs, Relation::Ge, t)?;
    }
    let sol = solve_lp(&lp);
    match sol.status {
        LpStatus::Infeasible => return Ok(None),
        LpStatus::Optimal => {}
        other => return Err(Error::Lp(format!("dominator LP ended with status {other:?}"))),
    }
    let gain = sol.objective - targets.iter().sum::<f64>();
    if gain <= DOMINANCE_TOL {
        return Ok(None);
    }
    let flow = FlowSolution::new(&graph, sol.values)?;
    let improved: Vec<f64> = own
        .iter()
        .map(|row| row.iter().zip(&flow.flows).map(|(c, p)| c * p).sum())
        .collect();
    Ok(Some((decompose(&graph, &flow)?, improved)))
}

/// Calls `visit` with the piece counts of every grid outcome, `[agent][item]`,
/// including those that leave pieces unallocated.
pub fn for_each_grid_outcome(agents: usize, items: usize, pieces: usize, mut visit: impl FnMut(&[Vec<usize>])) {
    fn rec(
        cur: &mut Vec<Vec<usize>>,
        item: usize,
        agent: usize,
        left: usize,
        pieces: usize,
        visit: &mut dyn FnMut(&[Vec<usize>]),
    ) {
        let (n, m) = (cur.len(), cur[0].len());
        if item == m {
            visit(cur);
            return;
        }
        if agent == n {
            rec(cur, item + 1, 0, pieces, pieces, visit);
            return;
        }
        for y in 0..=left {
            cur[agent][item] = y;
            rec(cur, item, agent + 1, left - y, pieces, visit);
        }
        cur[agent][item] = 0;
    }
    let mut cur = vec![vec![0; items]; agents];
    rec(&mut cur, 0, 0, pieces, pieces, &mut visit);
}

/// Number of grid outcomes, `C(k + n, n)^m`, saturating.
pub fn grid_outcome_count(agents: usize, items: usize, pieces: usize) -> usize {
    let mut per_item: usize = 1;
    for i in 1..=agents {
        per_item = per_item.saturating_mul(pieces + i) / i;
    }
    (0..items).fold(1usize, |acc, _| acc.saturating_mul(per_item))
}

fn dominating_outcome(grid: &GridValues, targets: &[f64]) -> Result<Option<(Outcome, Vec<f64>)>> {
    let (n, m, k) = (grid.agents(), grid.items(), grid.pieces());
    let count = grid_outcome_count(n, m, k);
    if count > MAX_OUTCOMES {
        return Err(Error::Size(format!("{count} grid outcomes exceed the brute-force limit {MAX_OUTCOMES}")));
    }
    let mut best: Option<(f64, Vec<Vec<usize>>, Vec<f64>)> = None;
    for_each_grid_outcome(n, m, k, |y| {
        let u: Vec<f64> = (0..n)
            .map(|i| (0..m).map(|t| grid.value(i, t, y[i][t])).sum())
            .collect();
        if u.iter().zip(targets).any(|(u, t)| u < t) {
            return;
        }
        let gain: f64 = u.iter().zip(targets).map(|(u, t)| u - t).sum();
        if gain > DOMINANCE_TOL && best.as_ref().is_none_or(|b| gain > b.0) {
            best = Some((gain, y.to_vec(), u));
        }
    });
    Ok(best.map(|(_, y, u)| {
        let x = y
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / k as f64).collect())
            .collect();
        (Outcome { x }, u)
    }))
}
