use serde::{Deserialize, Serialize};

use super::Instance;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Value,
    Cut,
}

/// One answered query: `Value(f, argument) = response` or `Cut(f, argument) = response`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub kind: QueryKind,
    pub argument: f64,
    pub response: f64,
}

/// Append-only log of the queries issued against each (agent, item) curve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryLedger {
    agents: usize,
    items: usize,
    value_queries: usize,
    cut_queries: usize,
    log: Vec<Vec<QueryRecord>>,
}

impl QueryLedger {
    pub fn new(agents: usize, items: usize) -> Self {
        QueryLedger {
            agents,
            items,
            value_queries: 0,
            cut_queries: 0,
            log: vec![Vec::new(); agents * items],
        }
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn record(&mut self, agent: usize, item: usize, record: QueryRecord) {
        match record.kind {
            QueryKind::Value => self.value_queries += 1,
            QueryKind::Cut => self.cut_queries += 1,
        }
        self.log[agent * self.items + item].push(record);
    }

    pub fn value_queries(&self) -> usize {
        self.value_queries
    }

    pub fn cut_queries(&self) -> usize {
        self.cut_queries
    }

    pub fn total(&self) -> usize {
        self.value_queries + self.cut_queries
    }

    pub fn entries(&self, agent: usize, item: usize) -> &[QueryRecord] {
        &self.log[agent * self.items + item]
    }

    /// Appends every record of `other`, which must have the same shape.
    pub fn merge(&mut self, other: &QueryLedger) {
        assert_eq!((self.agents, self.items), (other.agents, other.items));
        for agent in 0..self.agents {
            for item in 0..self.items {
                for &rec in other.entries(agent, item) {
                    self.record(agent, item, rec);
                }
            }
        }
    }

    /// Counters agree with the per-curve logs.
    pub fn is_consistent(&self) -> bool {
        let count = |kind| {
            self.log
                .iter()
                .flatten()
                .filter(|r| r.kind == kind)
                .count()
        };
        count(QueryKind::Value) == self.value_queries && count(QueryKind::Cut) == self.cut_queries
    }
}

/// Something that answers value and cut queries about agents' curves.
pub trait QueryOracle {
    fn agents(&self) -> usize;
    fn items(&self) -> usize;
    fn value(&mut self, agent: usize, item: usize, z: f64) -> Result<f64>;
    fn cut(&mut self, agent: usize, item: usize, v: f64) -> Result<f64>;
}

/// Answers queries from a known instance and logs each one.
pub struct InstanceOracle<'a> {
    instance: &'a Instance,
    ledger: &'a mut QueryLedger,
}

impl<'a> InstanceOracle<'a> {
    pub fn new(instance: &'a Instance, ledger: &'a mut QueryLedger) -> Self {
        assert_eq!(
            (ledger.agents(), ledger.items()),
            (instance.agents(), instance.items()),
            "ledger shape must match the instance"
        );
        InstanceOracle { instance, ledger }
    }
}

impl QueryOracle for InstanceOracle<'_> {
    fn agents(&self) -> usize {
        self.instance.agents()
    }

    fn items(&self) -> usize {
        self.instance.items()
    }

    fn value(&mut self, agent: usize, item: usize, z: f64) -> Result<f64> {
        let response = self.instance.valuation(agent, item).eval(z)?;
        self.ledger.record(
            agent,
            item,
            QueryRecord {
                kind: QueryKind::Value,
                argument: z,
                response,
            },
        );
        Ok(response)
    }

    fn cut(&mut self, agent: usize, item: usize, v: f64) -> Result<f64> {
        let response = self.instance.valuation(agent, item).cut(v)?;
        self.ledger.record(
            agent,
            item,
            QueryRecord {
                kind: QueryKind::Cut,
                argument: v,
                response,
            },
        );
        Ok(response)
    }
}
