//! Oracles certifying feasibility, envy-freeness, proportionality and
//! approximate Pareto optimality, plus the utility frontier sweep.

mod checks;
mod frontier;
mod pareto;
mod report;

pub use checks::{
    check_ex_ante_ef, check_ex_ante_proportional, check_ex_post, check_ex_post_pareto, expected_utilities,
    serial_dictatorship_order, ExPost, UtilityTable,
};
pub use frontier::{frontier_sweep, simplex_weights, Frontier, FrontierPoint, OutcomePoint};
pub use pareto::{
    check_eps_pareto, dominating_lottery, for_each_grid_outcome, grid_outcome_count, ComparisonClass, DOMINANCE_TOL,
};
pub use report::{CheckResult, VerificationReport, Witness};
