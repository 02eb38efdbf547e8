use serde::{Deserialize, Serialize};

use super::{Instance, InstanceOracle, QueryLedger, QueryOracle};
use crate::error::{Error, Result};

/// Number of pieces `1/epsilon`, which must be a positive integer.
pub fn pieces_for(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let k = epsilon.recip().round();
    if (k * epsilon - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("1/epsilon must be an integer, got 1/{epsilon}")));
    }
    Ok(k as usize)
}

/// Curve values on the grid `{0, 1/k, ..., 1}` for every agent and item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridValues {
    pieces: usize,
    /// `values[agent][item][y] = f(y / pieces)`
    values: Vec<Vec<Vec<f64>>>,
}

impl GridValues {
    pub fn from_values(pieces: usize, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let shape_ok = !values.is_empty()
            && values.iter().all(|row| row.len() == values[0].len() && !row.is_empty())
            && values.iter().flatten().all(|col| col.len() == pieces + 1);
        if !shape_ok {
            return Err(Error::Dimension("grid values are ragged".into()));
        }
        Ok(GridValues { pieces, values })
    }

    /// Evaluates every curve of `instance` on the grid without going through a ledger.
    pub fn exact(instance: &Instance, pieces: usize) -> Self {
        let values = (0..instance.agents())
            .map(|i| {
                (0..instance.items())
                    .map(|k| {
                        let f = instance.valuation(i, k);
                        (0..=pieces).map(|y| f.value(grid_point(y, pieces))).collect()
                    })
                    .collect()
            })
            .collect();
        GridValues { pieces, values }
    }

    pub fn pieces(&self) -> usize {
        self.pieces
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.pieces as f64
    }

    pub fn agents(&self) -> usize {
        self.values.len()
    }

    pub fn items(&self) -> usize {
        self.values[0].len()
    }

    /// Value to `agent` of `pieces` grid pieces of `item`.
    pub fn value(&self, agent: usize, item: usize, pieces: usize) -> f64 {
        self.values[agent][item][pieces]
    }

    pub fn row(&self, agent: usize, item: usize) -> &[f64] {
        &self.values[agent][item]
    }

    /// Value to `agent` of every item in full.
    pub fn full_value(&self, agent: usize) -> f64 {
        self.values[agent].iter().map(|col| col[self.pieces]).sum()
    }
}

/// `y / pieces`, exact at both ends.
pub(crate) fn grid_point(y: usize, pieces: usize) -> f64 {
    y as f64 / pieces as f64
}

/// Queries every curve at `epsilon, 2 epsilon, ..., 1`; the value at 0 is known to be 0.
pub fn discretize(instance: &Instance, epsilon: f64, ledger: &mut QueryLedger) -> Result<GridValues> {
    let mut oracle = InstanceOracle::new(instance, ledger);
    discretize_with(&mut oracle, epsilon)
}

/// [`discretize`] against an arbitrary oracle.
pub fn discretize_with(oracle: &mut dyn QueryOracle, epsilon: f64) -> Result<GridValues> {
    let pieces = pieces_for(epsilon)?;
    let mut values = Vec::with_capacity(oracle.agents());
    for agent in 0..oracle.agents() {
        let mut row = Vec::with_capacity(oracle.items());
        for item in 0..oracle.items() {
            let mut col = Vec::with_capacity(pieces + 1);
            col.push(0.0);
            for y in 1..=pieces {
                col.push(oracle.value(agent, item, grid_point(y, pieces))?);
            }
            row.push(col);
        }
        values.push(row);
    }
    GridValues::from_values(pieces, values)
}
