//! Valuation curves, the query oracle and grid discretization.

mod curve;
mod grid;
mod oracle;

pub use curve::{Curve, ValuationFn};
pub use grid::{discretize, discretize_with, pieces_for, GridValues};
pub use oracle::{InstanceOracle, QueryKind, QueryLedger, QueryOracle, QueryRecord};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `agents` x `items` grid of valuation curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    agents: usize,
    items: usize,
    valuations: Vec<Vec<ValuationFn>>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    agents: usize,
    items: usize,
    valuations: Vec<Vec<ValuationFn>>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        let instance = Instance::new(raw.valuations)?;
        if instance.agents != raw.agents || instance.items != raw.items {
            return Err(Error::Dimension(format!(
                "header says {} agents x {} items, valuations are {} x {}",
                raw.agents, raw.items, instance.agents, instance.items
            )));
        }
        Ok(instance)
    }
}

impl From<Instance> for RawInstance {
    fn from(instance: Instance) -> Self {
        RawInstance {
            agents: instance.agents,
            items: instance.items,
            valuations: instance.valuations,
        }
    }
}

impl Instance {
    /// Builds an instance from rows of per-item curves, one row per agent.
    pub fn new(valuations: Vec<Vec<ValuationFn>>) -> Result<Self> {
        let agents = valuations.len();
        if agents == 0 {
            return Err(Error::Config("instance needs at least one agent".into()));
        }
        let items = valuations[0].len();
        if items == 0 {
            return Err(Error::Config("instance needs at least one item".into()));
        }
        if let Some(i) = valuations.iter().position(|row| row.len() != items) {
            return Err(Error::Dimension(format!(
                "agent {i} has {} curves, expected {items}",
                valuations[i].len()
            )));
        }
        Ok(Instance {
            agents,
            items,
            valuations,
        })
    }

    /// Every agent gets the same row of curves.
    pub fn identical(agents: usize, row: Vec<ValuationFn>) -> Result<Self> {
        Self::new(vec![row; agents])
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn valuation(&self, agent: usize, item: usize) -> &ValuationFn {
        &self.valuations[agent][item]
    }

    pub fn row(&self, agent: usize) -> &[ValuationFn] {
        &self.valuations[agent]
    }

    /// Largest declared Lipschitz constant over all curves.
    pub fn max_lipschitz(&self) -> f64 {
        self.valuations
            .iter()
            .flatten()
            .map(ValuationFn::lipschitz)
            .fold(0.0, f64::max)
    }

    /// Utility of `agent` for a bundle given as one fraction per item.
    pub fn bundle_value(&self, agent: usize, bundle: &[f64]) -> f64 {
        self.valuations[agent]
            .iter()
            .zip(bundle)
            .map(|(f, &x)| f.value(x))
            .sum()
    }

    /// Utility of `agent` for receiving every item in full.
    pub fn full_value(&self, agent: usize) -> f64 {
        self.valuations[agent].iter().map(ValuationFn::full_value).sum()
    }
}
