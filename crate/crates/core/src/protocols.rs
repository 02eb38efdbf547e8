//! Random serial dictatorship driven by value and cut queries.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{Lottery, Outcome};
use crate::error::{Error, Result};
use crate::valuations::{Instance, InstanceOracle, QueryLedger, QueryOracle};

/// Largest agent count for which all orderings are enumerated.
pub const MAX_EXACT_AGENTS: usize = 8;

/// An ordering of the agents `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &a in &order {
            if a >= order.len() || seen[a] {
                return Err(Error::Config(format!("{order:?} is not a permutation")));
            }
            seen[a] = true;
        }
        Ok(Permutation(order))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(order: Vec<usize>) -> Result<Self> {
        Permutation::new(order)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

/// One serial-dictatorship pass in `order`.
///
/// Each agent in turn asks `Value(f, r)` for the remaining amount `r` of every
/// item and takes `Cut(f, f(r))`, the least amount worth as much to her as all
/// that remains. Issues exactly `2nm` queries.
pub fn rsd_run(instance: &Instance, order: &Permutation, ledger: &mut QueryLedger) -> Result<Outcome> {
    if order.len() != instance.agents() {
        return Err(Error::Dimension(format!(
            "ordering of {} agents for an instance with {}",
            order.len(),
            instance.agents()
        )));
    }
    let mut oracle = InstanceOracle::new(instance, ledger);
    let mut remaining = vec![1.0; instance.items()];
    let mut outcome = Outcome::empty(instance.agents(), instance.items());
    for &agent in order.as_slice() {
        for (item, left) in remaining.iter_mut().enumerate() {
            let v = oracle.value(agent, item, *left)?;
            let take = oracle.cut(agent, item, v)?.min(*left);
            outcome.x[agent][item] = take;
            *left = (*left - take).max(0.0);
        }
    }
    Ok(outcome)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RsdMode {
    /// Every ordering with probability `1/n!`.
    Exact,
    /// `samples` orderings drawn uniformly from a seeded generator.
    Sampled { seed: u64, samples: usize },
}

/// Lottery over serial-dictatorship outcomes for random orderings.
pub fn rsd_lottery(instance: &Instance, mode: RsdMode, ledger: &mut QueryLedger) -> Result<Lottery> {
    let n = instance.agents();
    let orders: Vec<Permutation> = match mode {
        RsdMode::Exact => {
            if n > MAX_EXACT_AGENTS {
                return Err(Error::Size(format!(
                    "exact enumeration supports at most {MAX_EXACT_AGENTS} agents, got {n}"
                )));
            }
            (0..n).permutations(n).map(Permutation).collect()
        }
        RsdMode::Sampled { seed, samples } => {
            if samples == 0 {
                return Err(Error::Config("sampled mode needs at least one sample".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples)
                .map(|_| {
                    let mut order: Vec<usize> = (0..n).collect();
                    order.shuffle(&mut rng);
                    Permutation(order)
                })
                .collect()
        }
    };
    let p = 1.0 / orders.len() as f64;
    let mut support = Vec::with_capacity(orders.len());
    for order in &orders {
        let mut run_ledger = QueryLedger::new(n, instance.items());
        support.push((p, rsd_run(instance, order, &mut run_ledger)?));
        ledger.merge(&run_ledger);
    }
    Ok(Lottery::new(support)?.merged())
}
