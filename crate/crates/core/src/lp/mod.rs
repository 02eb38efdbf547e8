//! Sparse linear programs and an embedded bounded-variable revised simplex.

mod lexi;
mod mps;
mod simplex;

pub use lexi::{lexi_solve, FREEZE_SLACK};
pub use mps::write_mps;
pub use simplex::solve_lp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row, zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Eq => (lhs - self.rhs).abs(),
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
        }
    }
}

/// `maximize objective . x` subject to sparse rows and per-variable bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    rows: Vec<Constraint>,
}

impl LinearProgram {
    /// `vars` variables bounded to `[0, 1]` with a zero objective.
    pub fn new(vars: usize) -> Self {
        LinearProgram {
            lower: vec![0.0; vars],
            upper: vec![1.0; vars],
            objective: vec![0.0; vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    /// Appends a variable and returns its index. Infinite bounds are allowed.
    pub fn add_variable(&mut self, lower: f64, upper: f64, cost: f64) -> Result<usize> {
        check_bounds(lower, upper)?;
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(cost);
        Ok(self.lower.len() - 1)
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<()> {
        self.check_var(var)?;
        check_bounds(lower, upper)?;
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) -> Result<()> {
        if objective.len() != self.num_vars() {
            return Err(Error::Dimension(format!(
                "objective has {} entries for {} variables",
                objective.len(),
                self.num_vars()
            )));
        }
        self.objective = objective;
        Ok(())
    }

    /// Appends a row; duplicate indices are summed. Returns the row index.
    pub fn add_constraint(
        &mut self,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<usize> {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (j, a) in coeffs {
            self.check_var(j)?;
            if !a.is_finite() {
                return Err(Error::Lp(format!("non-finite coefficient on variable {j}")));
            }
            merged.push((j, a));
        }
        merged.sort_by_key(|&(j, _)| j);
        merged.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        merged.retain(|&(_, a)| a != 0.0);
        if !rhs.is_finite() {
            return Err(Error::Lp("non-finite right-hand side".into()));
        }
        self.rows.push(Constraint {
            coeffs: merged,
            relation,
            rhs,
        });
        Ok(self.rows.len() - 1)
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = x
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.lower[j] - v).max(v - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn check_var(&self, var: usize) -> Result<()> {
        if var >= self.num_vars() {
            return Err(Error::Dimension(format!(
                "variable {var} out of range ({} variables)",
                self.num_vars()
            )));
        }
        Ok(())
    }
}

fn check_bounds(lower: f64, upper: f64) -> Result<()> {
    if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
        return Err(Error::Lp(format!("invalid bounds [{lower}, {upper}]")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot budget ran out or the basis became numerically singular.
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// The primal values, or an error naming the non-optimal status.
    pub fn into_optimal(self) -> Result<Vec<f64>> {
        match self.status {
            LpStatus::Optimal => Ok(self.values),
            other => Err(Error::Lp(format!("{other:?}").to_lowercase())),
        }
    }
}
