//! Outcomes, lotteries, and path decomposition of flows into lotteries.

use std::collections::BTreeMap;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowGraph, FlowSolution};
use crate::lp::{solve_lp, LinearProgram, Relation};
use crate::valuations::Instance;
use crate::VALUE_TOL;

/// Flow below this is treated as zero while stripping paths.
const RESIDUAL_EPS: f64 = 1e-12;
/// Conservation and outflow slack accepted on input flows.
const FLOW_TOL: f64 = 1e-8;
/// Probability mass that may be discarded at dead ends before giving up.
const LOST_MASS_TOL: f64 = 1e-6;

/// A deterministic allocation: `x[i][k]` is the fraction of item `k` agent `i` holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Outcome {
    pub x: Vec<Vec<f64>>,
}

impl Outcome {
    pub fn new(x: Vec<Vec<f64>>) -> Result<Self> {
        let o = Outcome { x };
        o.validate()?;
        Ok(o)
    }

    /// All agents hold nothing.
    pub fn empty(agents: usize, items: usize) -> Self {
        Outcome {
            x: vec![vec![0.0; items]; agents],
        }
    }

    pub fn agents(&self) -> usize {
        self.x.len()
    }

    pub fn items(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn bundle(&self, agent: usize) -> &[f64] {
        &self.x[agent]
    }

    /// Total fraction of `item` handed out.
    pub fn allocated(&self, item: usize) -> f64 {
        self.x.iter().map(|row| row[item]).sum()
    }

    /// Entries in `[0, 1]` and no item over-allocated.
    pub fn validate(&self) -> Result<()> {
        let m = self.items();
        if self.x.is_empty() || self.x.iter().any(|row| row.len() != m) {
            return Err(Error::Dimension("allocation matrix is empty or ragged".into()));
        }
        for (i, row) in self.x.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if !(-VALUE_TOL..=1.0 + VALUE_TOL).contains(&v) {
                    return Err(Error::InvalidFlow(format!("agent {i} holds {v} of item {k}")));
                }
            }
        }
        for k in 0..m {
            let total = self.allocated(k);
            if total > 1.0 + VALUE_TOL {
                return Err(Error::InvalidFlow(format!("item {k} over-allocated: {total}")));
            }
        }
        Ok(())
    }

    /// Agent `agent`'s value for the bundle of `holder`.
    pub fn value_of(&self, instance: &Instance, agent: usize, holder: usize) -> f64 {
        instance.bundle_value(agent, &self.x[holder])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LotteryEntry {
    pub probability: f64,
    pub allocation: Outcome,
}

/// A probability distribution over outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLottery")]
pub struct Lottery {
    support: Vec<LotteryEntry>,
}

#[derive(Deserialize)]
struct RawLottery {
    support: Vec<LotteryEntry>,
}

impl TryFrom<RawLottery> for Lottery {
    type Error = Error;

    fn try_from(raw: RawLottery) -> Result<Self> {
        Lottery::new(raw.support.into_iter().map(|e| (e.probability, e.allocation)).collect())
    }
}

impl Lottery {
    /// Validates positivity, unit total within `1e-9`, feasibility and shape.
    pub fn new(support: Vec<(f64, Outcome)>) -> Result<Self> {
        let Some((_, first)) = support.first() else {
            return Err(Error::InvalidFlow("lottery has empty support".into()));
        };
        let (n, m) = (first.agents(), first.items());
        let mut total = 0.0;
        for (p, o) in &support {
            if !(*p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidFlow(format!("non-positive probability {p}")));
            }
            if o.agents() != n || o.items() != m {
                return Err(Error::Dimension("outcomes differ in shape".into()));
            }
            o.validate()?;
            total += p;
        }
        if (total - 1.0).abs() > VALUE_TOL {
            return Err(Error::InvalidFlow(format!("probabilities sum to {total}")));
        }
        Ok(Lottery {
            support: support
                .into_iter()
                .map(|(probability, allocation)| LotteryEntry {
                    probability,
                    allocation,
                })
                .collect(),
        })
    }

    pub fn deterministic(outcome: Outcome) -> Result<Self> {
        Self::new(vec![(1.0, outcome)])
    }

    /// `q * self + (1 - q) * other`, with identical outcomes merged.
    pub fn mix(&self, other: &Lottery, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Config(format!("mixing weight {q} outside [0, 1]")));
        }
        let support = self
            .support
            .iter()
            .map(|e| (q * e.probability, e.allocation.clone()))
            .chain(other.support.iter().map(|e| ((1.0 - q) * e.probability, e.allocation.clone())))
            .filter(|(p, _)| *p > 0.0)
            .collect();
        Ok(Self::new(support)?.merged())
    }

    pub fn support(&self) -> &[LotteryEntry] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn agents(&self) -> usize {
        self.support[0].allocation.agents()
    }

    pub fn items(&self) -> usize {
        self.support[0].allocation.items()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Outcome)> {
        self.support.iter().map(|e| (e.probability, &e.allocation))
    }

    /// Merges bitwise-identical outcomes, keeping first-appearance order.
    pub fn merged(self) -> Self {
        let mut out: Vec<LotteryEntry> = Vec::new();
        for e in self.support {
            match out.iter_mut().find(|o| o.allocation == e.allocation) {
                Some(o) => o.probability += e.probability,
                None => out.push(e),
            }
        }
        Lottery { support: out }
    }
}

/// Expected allocation `sum_l p_l x^l`, `[agent][item]`.
pub fn marginals(lottery: &Lottery) -> Vec<Vec<f64>> {
    let mut x = vec![vec![0.0; lottery.items()]; lottery.agents()];
    for (p, o) in lottery.iter() {
        for (row, orow) in x.iter_mut().zip(&o.x) {
            for (v, w) in row.iter_mut().zip(orow) {
                *v += p * w;
            }
        }
    }
    x
}

/// Strips source-sink paths off `flow`, one outcome per path.
///
/// At each vertex the lowest-index edge with positive residual is followed; the
/// path bottleneck is subtracted. Identical outcomes are merged afterwards.
pub fn decompose(graph: &FlowGraph, flow: &FlowSolution) -> Result<Lottery> {
    flow.validate(graph, FLOW_TOL)?;
    let k = graph.pieces();
    let mut residual: Vec<f64> = flow
        .flows
        .iter()
        .map(|&p| if p > RESIDUAL_EPS { p } else { 0.0 })
        .collect();
    let mut paths: BTreeMap<Vec<Vec<usize>>, f64> = BTreeMap::new();
    let mut order: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut lost = 0.0;

    'strip: loop {
        let mut path = Vec::new();
        let mut v = graph.source();
        while v != graph.sink() {
            match graph.out_edges(v).iter().copied().find(|&e| residual[e] > 0.0) {
                Some(e) => {
                    path.push(e);
                    v = graph.edges()[e].to;
                }
                None if path.is_empty() => break 'strip,
                None => {
                    // dead end left by rounding: drop the edge that led here
                    let e = path[path.len() - 1];
                    lost += residual[e];
                    residual[e] = 0.0;
                    continue 'strip;
                }
            }
        }
        let bottleneck = path.iter().map(|&e| residual[e]).fold(f64::INFINITY, f64::min);
        let mut pieces = vec![vec![0usize; graph.items()]; graph.agents()];
        for &e in &path {
            residual[e] -= bottleneck;
            if residual[e] <= RESIDUAL_EPS {
                residual[e] = 0.0;
            }
            let edge = graph.edges()[e];
            if let Some(a) = edge.agent() {
                pieces[a][edge.item] += edge.pieces;
            }
        }
        if !paths.contains_key(&pieces) {
            order.push(pieces.clone());
        }
        *paths.entry(pieces).or_insert(0.0) += bottleneck;
    }

    let total: f64 = paths.values().sum();
    if lost > LOST_MASS_TOL || (total - 1.0).abs() > LOST_MASS_TOL {
        return Err(Error::InvalidFlow(format!(
            "path stripping recovered {total} with {lost} lost at dead ends"
        )));
    }
    if lost > 0.0 {
        warn!("discarded {lost:e} flow at dead ends during decomposition");
    }
    debug!("decomposed flow into {} outcomes", order.len());
    let support = order
        .into_iter()
        .map(|pieces| {
            let p = paths[&pieces] / total;
            let x = pieces
                .iter()
                .map(|row| row.iter().map(|&y| y as f64 / k as f64).collect())
                .collect();
            (p, Outcome { x })
        })
        .filter(|(p, _)| *p > 0.0)
        .collect();
    Lottery::new(support)
}

/// Re-solves for `target` utilities over the support of `lottery` and returns a
/// basic solution, whose support has at most `n + 1` outcomes (at most `n` when
/// `target` lies on a face of the utility polytope).
///
/// `utilities[s][i]` is agent `i`'s value for outcome `s`.
pub fn reduce_support(lottery: &Lottery, utilities: &[Vec<f64>], target: &[f64]) -> Result<Lottery> {
    if utilities.len() != lottery.len() || utilities.iter().any(|u| u.len() != target.len()) {
        return Err(Error::Dimension("utility table does not match lottery".into()));
    }
    let s = lottery.len();
    let mut lp = LinearProgram::new(s);
    lp.add_constraint((0..s).map(|j| (j, 1.0)), Relation::Eq, 1.0)?;
    for (i, &t) in target.iter().enumerate() {
        lp.add_constraint((0..s).map(|j| (j, utilities[j][i])), Relation::Eq, t)?;
    }
    let q = solve_lp(&lp).into_optimal()?;
    let support: Vec<(f64, Outcome)> = q
        .iter()
        .zip(lottery.iter())
        .filter(|(&q, _)| q > RESIDUAL_EPS)
        .map(|(&q, (_, o))| (q, o.clone()))
        .collect();
    let total: f64 = support.iter().map(|(q, _)| q).sum();
    Lottery::new(support.into_iter().map(|(q, o)| (q / total, o)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::build_flow_graph;

    fn path_flow(graph: &FlowGraph, labels: &[(usize, usize, usize, usize)], p: f64, flows: &mut [f64]) {
        for &(item, col, row, y) in labels {
            flows[graph.find_edge(item, col, row, y).unwrap()] += p;
        }
    }

    #[test]
    fn single_path() {
        let g = build_flow_graph(2, 1, 2).unwrap();
        let mut flows = vec![0.0; g.edges().len()];
        path_flow(&g, &[(0, 0, 0, 2), (0, 1, 2, 0), (0, 2, 2, 0)], 1.0, &mut flows);
        let lot = decompose(&g, &FlowSolution::new(&g, flows).unwrap()).unwrap();
        assert_eq!(lot.len(), 1);
        assert_eq!(lot.support()[0].allocation.x, vec![vec![1.0], vec![0.0]]);
    }

    #[test]
    fn all_or_nothing_split() {
        let g = build_flow_graph(2, 1, 4).unwrap();
        let mut flows = vec![0.0; g.edges().len()];
        path_flow(&g, &[(0, 0, 0, 4), (0, 1, 4, 0), (0, 2, 4, 0)], 0.5, &mut flows);
        path_flow(&g, &[(0, 0, 0, 0), (0, 1, 0, 4), (0, 2, 4, 0)], 0.5, &mut flows);
        let flow = FlowSolution::new(&g, flows).unwrap();
        let lot = decompose(&g, &flow).unwrap();
        assert_eq!(lot.len(), 2);
        for (p, _) in lot.iter() {
            assert!((p - 0.5).abs() < 1e-12);
        }
        let x = marginals(&lot);
        let y = flow.expected_allocation(&g);
        for i in 0..2 {
            assert!((x[i][0] - 0.5).abs() < 1e-12);
            assert!((x[i][0] - y[i][0]).abs() < 1e-12);
        }
    }

    #[test]
    fn broken_conservation_rejected() {
        let g = build_flow_graph(2, 1, 2).unwrap();
        let mut flows = vec![0.0; g.edges().len()];
        flows[g.find_edge(0, 0, 0, 1).unwrap()] = 1.0;
        let flow = FlowSolution { flows };
        assert!(matches!(decompose(&g, &flow), Err(Error::InvalidFlow(_))));
    }

    #[test]
    fn deterministic_marginals() {
        let o = Outcome::new(vec![vec![0.25, 1.0], vec![0.5, 0.0]]).unwrap();
        let lot = Lottery::deterministic(o.clone()).unwrap();
        assert_eq!(marginals(&lot), o.x);
    }

    #[test]
    fn lottery_validation() {
        let o = Outcome::new(vec![vec![1.0], vec![0.0]]).unwrap();
        assert!(Lottery::new(vec![(0.5, o.clone())]).is_err());
        assert!(Lottery::new(vec![(1.0, o.clone()), (0.0, o.clone())]).is_err());
        assert!(Lottery::new(vec![]).is_err());
        assert!(Outcome::new(vec![vec![0.7], vec![0.7]]).is_err());
        let lot = Lottery::new(vec![(0.5, o.clone()), (0.5, o)]).unwrap().merged();
        assert_eq!(lot.len(), 1);
    }

    #[test]
    fn lottery_json_round_trip() {
        let a = Outcome::new(vec![vec![1.0], vec![0.0]]).unwrap();
        let b = Outcome::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let lot = Lottery::new(vec![(0.25, a), (0.75, b)]).unwrap();
        let s = serde_json::to_string(&lot).unwrap();
        assert_eq!(
            s,
            r#"{"support":[{"probability":0.25,"allocation":[[1.0],[0.0]]},{"probability":0.75,"allocation":[[0.0],[1.0]]}]}"#
        );
        let back: Lottery = serde_json::from_str(&s).unwrap();
        assert_eq!(back, lot);
        assert!(serde_json::from_str::<Lottery>(r#"{"support":[{"probability":0.5,"allocation":[[1.0]]}]}"#).is_err());
    }

    #[test]
    fn support_reduction_on_a_face() {
        // three outcomes all with utility sum 1 for two agents
        let outs: Vec<Outcome> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&a| Outcome::new(vec![vec![a], vec![1.0 - a]]).unwrap())
            .collect();
        let lot = Lottery::new(outs.into_iter().map(|o| (1.0 / 3.0, o)).collect()).unwrap();
        let utils: Vec<Vec<f64>> = lot.iter().map(|(_, o)| vec![o.x[0][0], o.x[1][0]]).collect();
        let reduced = reduce_support(&lot, &utils, &[0.5, 0.5]).unwrap();
        assert!(reduced.len() <= 2);
        let x = marginals(&reduced);
        assert!((x[0][0] - 0.5).abs() < 1e-9);
    }
}
