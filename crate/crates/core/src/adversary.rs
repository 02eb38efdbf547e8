//! A query adversary that answers as if every curve were linear, the three
//! instances consistent with its transcript, and an audit of lotteries against
//! them.
//!
//! Agents are `0` and `1`, items are `a = 0` and `b = 1`. The forged instances
//! differ only on item `b` inside an unprobed interval `[x1, x1 + epsilon]` with
//! `x1 > 1/2`: in `I2` agent `1`'s curve rises with slope 2 over the first half
//! of it and is flat over the second, in `I3` the same holds for agent `0`.

use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose, marginals, Lottery, Outcome};
use crate::error::{Error, Result};
use crate::flow::{solve_with_oracle, Fairness, SolverConfig};
use crate::valuations::{GridValues, Instance, QueryKind, QueryLedger, QueryOracle, QueryRecord, ValuationFn};
use crate::verification::{check_ex_ante_ef, dominating_lottery, expected_utilities, CheckResult, VerificationReport, Witness};
use crate::VALUE_TOL;

pub const AGENTS: usize = 2;
pub const ITEMS: usize = 2;
pub const ITEM_A: usize = 0;
pub const ITEM_B: usize = 1;
/// Expected totals in `I1` must equal one within this.
pub const TOTAL_TOL: f64 = 1e-6;
/// Step of the split grid used to confirm the per-agent utility cap.
pub const CAP_STEP: f64 = 1e-4;
/// Step of the mixing-weight grid for the randomization bound.
pub const MIX_STEP: f64 = 1e-3;

/// Answers every query as the identity curve and records the probed points.
#[derive(Clone, Debug)]
pub struct AdversaryState {
    epsilon: f64,
    probes: Vec<Vec<f64>>,
    ledger: QueryLedger,
    budget: Option<usize>,
}

impl AdversaryState {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::Config(format!("adversary epsilon must lie in (0, 1/2), got {epsilon}")));
        }
        Ok(AdversaryState {
            epsilon,
            probes: vec![Vec::new(); AGENTS * ITEMS],
            ledger: QueryLedger::new(AGENTS, ITEMS),
            budget: None,
        })
    }

    /// Refuses queries beyond `budget` with [`Error::AdversaryExhausted`].
    pub fn with_budget(epsilon: f64, budget: usize) -> Result<Self> {
        let mut s = Self::new(epsilon)?;
        s.budget = Some(budget);
        Ok(s)
    }

    /// `floor(1/(2 epsilon))`, the query count the lower bound is stated for.
    pub fn default_budget(epsilon: f64) -> usize {
        (1.0 / (2.0 * epsilon) + 1e-9).floor() as usize
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Sorted probed points on one curve.
    pub fn probes(&self, agent: usize, item: usize) -> &[f64] {
        &self.probes[agent * ITEMS + item]
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    fn admit(&self) -> Result<()> {
        match self.budget {
            Some(b) if self.ledger.total() >= b => Err(Error::AdversaryExhausted(format!(
                "query budget of {b} exhausted"
            ))),
            _ => Ok(()),
        }
    }

    fn probe(&mut self, agent: usize, item: usize, point: f64) {
        let set = &mut self.probes[agent * ITEMS + item];
        let pos = set.partition_point(|&p| p < point);
        if set.get(pos) != Some(&point) {
            set.insert(pos, point);
        }
    }

    fn check_curve(agent: usize, item: usize) -> Result<()> {
        if agent >= AGENTS || item >= ITEMS {
            return Err(Error::Dimension(format!("no curve for agent {agent}, item {item}")));
        }
        Ok(())
    }
}

impl QueryOracle for AdversaryState {
    fn agents(&self) -> usize {
        AGENTS
    }

    fn items(&self) -> usize {
        ITEMS
    }

    fn value(&mut self, agent: usize, item: usize, z: f64) -> Result<f64> {
        Self::check_curve(agent, item)?;
        self.admit()?;
        let response = ValuationFn::linear().eval(z)?;
        self.probe(agent, item, z);
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
        Self::check_curve(agent, item)?;
        self.admit()?;
        let response = ValuationFn::linear().cut(v)?;
        self.probe(agent, item, response);
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

/// The three transcript-consistent instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgedInstances {
    pub epsilon: f64,
    pub x1: f64,
    /// All curves linear.
    pub i1: Instance,
    /// Agent `1`'s item-`b` curve bent.
    pub i2: Instance,
    /// Agent `0`'s item-`b` curve bent.
    pub i3: Instance,
}

impl ForgedInstances {
    pub fn interval(&self) -> [f64; 2] {
        [self.x1, self.x1 + self.epsilon]
    }

    pub fn all(&self) -> [(&'static str, &Instance); 3] {
        [("I1", &self.i1), ("I2", &self.i2), ("I3", &self.i3)]
    }
}

/// Slope 2 on `[x1, x1 + eps/2]`, flat on `[x1 + eps/2, x1 + eps]`, identity elsewhere.
pub fn bent_curve(x1: f64, epsilon: f64) -> Result<ValuationFn> {
    ValuationFn::piecewise_linear(vec![
        [0.0, 0.0],
        [x1, x1],
        [x1 + epsilon / 2.0, x1 + epsilon],
        [x1 + epsilon, x1 + epsilon],
        [1.0, 1.0],
    ])
}

/// Picks `x1` inside the longest unprobed stretch of item `b` within `[1/2, 1]`
/// (leftmost on ties), which must be strictly longer than `epsilon`, and forges
/// the instances there.
pub fn forge_instances(state: &AdversaryState) -> Result<ForgedInstances> {
    let eps = state.epsilon;
    let mut cuts = vec![0.5, 1.0];
    for agent in 0..AGENTS {
        cuts.extend(state.probes(agent, ITEM_B).iter().copied().filter(|&p| p > 0.5 && p < 1.0));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (lo, len) = cuts
        .windows(2)
        .map(|w| (w[0], w[1] - w[0]))
        .fold((0.5, f64::NEG_INFINITY), |best, g| if g.1 > best.1 { g } else { best });
    if len <= eps {
        return Err(Error::AdversaryExhausted(format!(
            "longest unprobed stretch of item b above 1/2 has length {len}, not above epsilon {eps}"
        )));
    }
    let x1 = lo + (eps / 2.0).min((len - eps) / 2.0);
    forge_instances_at(state, x1)
}

/// Forges the instances for a caller-chosen `x1`, which must satisfy
/// `1/2 < x1`, `x1 + epsilon < 1` and leave `[x1, x1 + epsilon]` unprobed.
pub fn forge_instances_at(state: &AdversaryState, x1: f64) -> Result<ForgedInstances> {
    let eps = state.epsilon;
    if !(x1 > 0.5 && x1 + eps < 1.0) {
        return Err(Error::Config(format!("x1 = {x1} must satisfy 1/2 < x1 < 1 - epsilon")));
    }
    for agent in 0..AGENTS {
        if let Some(p) = state
            .probes(agent, ITEM_B)
            .iter()
            .find(|&&p| p >= x1 && p <= x1 + eps)
        {
            return Err(Error::Config(format!(
                "agent {agent} probed item b at {p}, inside [{x1}, {}]",
                x1 + eps
            )));
        }
    }
    let lin = ValuationFn::linear;
    let bent = bent_curve(x1, eps)?;
    let i1 = Instance::new(vec![vec![lin(), lin()], vec![lin(), lin()]])?;
    let i2 = Instance::new(vec![vec![lin(), lin()], vec![lin(), bent.clone()]])?;
    let i3 = Instance::new(vec![vec![lin(), bent], vec![lin(), lin()]])?;
    Ok(ForgedInstances {
        epsilon: eps,
        x1,
        i1,
        i2,
        i3,
    })
}

/// Whether every logged query gets bitwise the same answer from `instance`.
pub fn replays_identically(instance: &Instance, ledger: &QueryLedger) -> bool {
    (0..ledger.agents()).all(|agent| {
        (0..ledger.items()).all(|item| {
            let f = instance.valuation(agent, item);
            ledger.entries(agent, item).iter().all(|r| {
                let again = match r.kind {
                    QueryKind::Value => f.eval(r.argument),
                    QueryKind::Cut => f.cut(r.argument),
                };
                again.is_ok_and(|v| v.to_bits() == r.response.to_bits())
            })
        })
    })
}

/// The reference lottery in `I2`: agent `1` gets `x1 + eps/2` of `b` and
/// `1 - x1 - 5 eps/8` of `a`, agent `0` the rest. `mirror` swaps the agents for `I3`.
pub fn reference_outcome(x1: f64, epsilon: f64, mirror: bool) -> Outcome {
    let favoured = vec![1.0 - x1 - 5.0 * epsilon / 8.0, x1 + epsilon / 2.0];
    let other = vec![x1 + 5.0 * epsilon / 8.0, 1.0 - x1 - epsilon / 2.0];
    let x = if mirror { vec![favoured, other] } else { vec![other, favoured] };
    Outcome { x }
}

/// Best utility of `agent` over splits with total at most one, on a grid of
/// `CAP_STEP`. Curves are non-decreasing, so only splits with total exactly one
/// need to be visited.
pub fn utility_cap(instance: &Instance, agent: usize) -> f64 {
    let steps = (1.0 / CAP_STEP).round() as usize;
    (0..=steps)
        .map(|s| {
            let b = s as f64 / steps as f64;
            instance.bundle_value(agent, &[1.0 - b, b])
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub epsilon: f64,
    pub interval: [f64; 2],
    /// Expected total amount each agent receives.
    pub expected_totals: Vec<f64>,
    /// Utilities of the audited lottery in `I2` and `I3`.
    pub utilities_i2: Vec<f64>,
    pub utilities_i3: Vec<f64>,
    /// Utilities of the reference lottery in `I2`.
    pub reference_utilities: Vec<f64>,
    /// Best single-agent utility with total at most one, for the bent agent.
    pub cap: f64,
    /// Largest `min(u_1 in I2, u_0 in I3)` over mixtures of the two cap-attaining outcomes.
    pub randomization_peak: f64,
    /// Instances in which an envy-free lottery `epsilon/16`-dominates the audited one.
    pub defeated_in: Vec<String>,
    pub report: VerificationReport,
}

impl AuditReport {
    pub fn defeated(&self) -> bool {
        !self.defeated_in.is_empty()
    }
}

fn value_check(name: &str, label: &str, value: f64, target: f64, ok: bool) -> CheckResult {
    let witnesses = if ok {
        Vec::new()
    } else {
        vec![Witness::Value {
            label: label.into(),
            value,
            target,
        }]
    };
    CheckResult::new(name, witnesses, format!("{label} = {}, target {}", crate::io::fmt_g12(value), crate::io::fmt_g12(target)))
}

/// Searches for an EF lottery giving each agent `(1 + eps/16)` times her utility.
/// The explicit reference lottery is tried first; a grid LP with `round(2/eps)`
/// pieces per item is the fallback.
fn find_defeat(
    instance: &Instance,
    reference: &Lottery,
    utilities: &[f64],
    epsilon: f64,
) -> Result<Option<(Lottery, Vec<f64>)>> {
    let factor = 1.0 + epsilon / 16.0;
    let targets: Vec<f64> = utilities.iter().map(|u| factor * u).collect();
    let ref_u = expected_utilities(reference, instance).own;
    let gain: f64 = ref_u.iter().zip(&targets).map(|(u, t)| u - t).sum();
    if check_ex_ante_ef(reference, instance).passed()
        && ref_u.iter().zip(&targets).all(|(u, t)| u >= t)
        && gain > crate::verification::DOMINANCE_TOL
    {
        return Ok(Some((reference.clone(), ref_u)));
    }
    let pieces = (2.0 / epsilon).round().max(1.0) as usize;
    let grid = GridValues::exact(instance, pieces);
    dominating_lottery(&grid, Fairness::EnvyFree, &targets)
}

/// Audits a two-agent, two-item lottery against the forged instances.
///
/// Checks, in order: expected totals of one each in `I1`; the reference
/// lottery's utilities in `I2`; the per-agent cap `1 + eps/2`; the randomization
/// bound `1 + eps/4`; and, per bent instance, that no EF lottery
/// `eps/16`-dominates the audited one.
pub fn audit_lottery(forged: &ForgedInstances, lottery: &Lottery) -> Result<AuditReport> {
    if lottery.agents() != AGENTS || lottery.items() != ITEMS {
        return Err(Error::Dimension("audits need a two-agent, two-item lottery".into()));
    }
    let (eps, x1) = (forged.epsilon, forged.x1);
    let mut report = VerificationReport::default();

    let x = marginals(lottery);
    let totals: Vec<f64> = x.iter().map(|row| row.iter().sum()).collect();
    let worst = totals.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    let witnesses = totals
        .iter()
        .enumerate()
        .filter(|(_, t)| (*t - 1.0).abs() > TOTAL_TOL)
        .map(|(i, &t)| Witness::Value {
            label: format!("expected total of agent {i}"),
            value: t,
            target: 1.0,
        })
        .collect();
    report.push(CheckResult::new(
        "i1_expected_totals",
        witnesses,
        format!("largest deviation {}", crate::io::fmt_g12(worst)),
    ));

    let reference = Lottery::deterministic(reference_outcome(x1, eps, false))?;
    let ref_u = expected_utilities(&reference, &forged.i2).own;
    let (lo1, lo2) = (1.0 + eps / 8.0, 1.0 + 3.0 * eps / 8.0);
    let ok = ref_u[0] >= lo1 - VALUE_TOL && ref_u[1] >= lo2 - VALUE_TOL && check_ex_ante_ef(&reference, &forged.i2).passed();
    report.push(value_check("reference_lottery_agent_0", "u_0(L') in I2", ref_u[0], lo1, ok));
    report.push(value_check("reference_lottery_agent_1", "u_1(L') in I2", ref_u[1], lo2, ok));

    let cap_target = 1.0 + eps / 2.0;
    let cap = utility_cap(&forged.i2, 1);
    let cap3 = utility_cap(&forged.i3, 0);
    report.push(value_check(
        "utility_cap",
        "max utility with total at most one",
        cap,
        cap_target,
        (cap - cap_target).abs() <= VALUE_TOL && (cap3 - cap_target).abs() <= VALUE_TOL,
    ));

    let best2 = Lottery::deterministic(split_outcome(x1 + eps / 2.0, false))?;
    let best3 = Lottery::deterministic(split_outcome(x1 + eps / 2.0, true))?;
    let bound = 1.0 + eps / 4.0;
    let steps = (1.0 / MIX_STEP).round() as usize;
    let mut peak = f64::NEG_INFINITY;
    for s in 0..=steps {
        let q = s as f64 / steps as f64;
        let mixed = if s == 0 {
            best3.clone()
        } else if s == steps {
            best2.clone()
        } else {
            best2.mix(&best3, q)?
        };
        let u2 = expected_utilities(&mixed, &forged.i2).own[1];
        let u3 = expected_utilities(&mixed, &forged.i3).own[0];
        peak = peak.max(u2.min(u3));
    }
    report.push(value_check(
        "randomization_bound",
        "max over mixtures of min bent-agent utility",
        peak,
        bound,
        peak <= bound + VALUE_TOL,
    ));

    let utilities_i2 = expected_utilities(lottery, &forged.i2).own;
    let utilities_i3 = expected_utilities(lottery, &forged.i3).own;
    let mut defeated_in = Vec::new();
    for (name, instance, utilities, mirror) in [
        ("I2", &forged.i2, &utilities_i2, false),
        ("I3", &forged.i3, &utilities_i3, true),
    ] {
        let reference = Lottery::deterministic(reference_outcome(x1, eps, mirror))?;
        let found = find_defeat(instance, &reference, utilities, eps)?;
        let witnesses = found
            .map(|(lottery, improved)| {
                defeated_in.push(name.to_string());
                Witness::Dominator {
                    epsilon: eps / 16.0,
                    original: utilities.clone(),
                    improved,
                    lottery,
                }
            })
            .into_iter()
            .collect();
        report.push(CheckResult::new(
            format!("undominated_{}", name.to_lowercase()),
            witnesses,
            format!("EF lotteries in {name}, factor 1 + epsilon/16"),
        ));
    }

    Ok(AuditReport {
        epsilon: eps,
        interval: forged.interval(),
        expected_totals: totals,
        utilities_i2,
        utilities_i3,
        reference_utilities: ref_u,
        cap,
        randomization_peak: peak,
        defeated_in,
        report,
    })
}

/// Gives the bent agent `b` of item `b` and `1 - b` of item `a`, the rest to
/// the other agent. The bent agent is `1`, or `0` when `mirror` is set.
pub fn split_outcome(b: f64, mirror: bool) -> Outcome {
    let (fav, other) = if mirror { (0, 1) } else { (1, 0) };
    let mut x = vec![Vec::new(); AGENTS];
    x[fav] = vec![1.0 - b, b];
    x[other] = vec![b, 1.0 - b];
    Outcome { x }
}

/// Protocols the battery runs against the adversary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Each agent gets everything with probability one half; asks nothing.
    Uniform,
    /// The flow solver at grid `solver_epsilon`.
    FlowSolver { solver_epsilon: f64 },
}

/// Runs `protocol` against a fresh adversary, forges instances from its
/// transcript (at `x1` if given) and audits the resulting lottery.
/// With `budget`, queries beyond it fail with [`Error::AdversaryExhausted`].
pub fn audit_protocol(
    epsilon: f64,
    protocol: Protocol,
    x1: Option<f64>,
    budget: Option<usize>,
) -> Result<(ForgedInstances, Lottery, AuditReport, QueryLedger)> {
    let mut state = match budget {
        Some(b) => AdversaryState::with_budget(epsilon, b)?,
        None => AdversaryState::new(epsilon)?,
    };
    let lottery = match protocol {
        Protocol::Uniform => uniform_lottery(),
        Protocol::FlowSolver { solver_epsilon } => {
            let sol = solve_with_oracle(&mut state, &SolverConfig::welfare_ef(solver_epsilon))?;
            decompose(&sol.graph, &sol.flow)?
        }
    };
    let forged = match x1 {
        Some(x1) => forge_instances_at(&state, x1)?,
        None => forge_instances(&state)?,
    };
    let audit = audit_lottery(&forged, &lottery)?;
    Ok((forged, lottery, audit, state.ledger.clone()))
}

/// Each agent receives both items with probability one half.
pub fn uniform_lottery() -> Lottery {
    Lottery::new(vec![
        (0.5, Outcome { x: vec![vec![1.0, 1.0], vec![0.0, 0.0]] }),
        (0.5, Outcome { x: vec![vec![0.0, 0.0], vec![1.0, 1.0]] }),
    ])
    .expect("uniform lottery is valid")
}
