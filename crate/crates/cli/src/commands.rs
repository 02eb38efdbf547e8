use std::path::Path;

use serde::Serialize;

use homodiv::adversary::{audit_lottery, audit_protocol, forge_instances, forge_instances_at, AdversaryState, Protocol};
use homodiv::flow::{derandomize_marginals, solve_naive};
use homodiv::io::{fmt_g12, parse_instance, read_json};
use homodiv::protocols::{rsd_lottery, RsdMode};
use homodiv::verification::{
    check_eps_pareto, check_ex_ante_ef, check_ex_ante_proportional, check_ex_post, check_ex_post_pareto,
    expected_utilities, frontier_sweep, CheckResult, ComparisonClass, ExPost, VerificationReport, Witness,
};
use homodiv::{
    decompose, discretize, solve_ef_lottery, Error, Fairness, Instance, Lottery, Objective, QueryLedger, Result,
    SolverConfig,
};

use crate::output::{join, Artifacts, Summary};
use crate::{Cli, Command, ProtocolArg, SolverArgs};

/// Runs one command; `Ok(false)` means a verification check failed.
pub fn run(cli: Cli) -> Result<bool> {
    let out = Artifacts::create(&cli.out)?;
    match cli.command {
        Command::Solve { instance, solver } => solve(&out, &instance, solver),
        Command::NaiveSolve { instance, epsilon, item } => naive_solve(&out, &instance, epsilon, item),
        Command::Rsd {
            instance,
            exact: _,
            samples,
            seed,
        } => {
            let mode = match samples {
                Some(samples) => RsdMode::Sampled { seed, samples },
                None => RsdMode::Exact,
            };
            rsd(&out, &instance, mode)
        }
        Command::Verify {
            instance,
            lottery,
            fairness,
            epsilon,
            slack,
        } => verify(&out, &instance, &lottery, fairness.into(), epsilon, slack),
        Command::Frontier {
            instance,
            epsilon,
            directions,
            fairness,
        } => frontier(&out, &instance, epsilon, directions, fairness.into()),
        Command::AdversaryAudit {
            epsilon,
            x1,
            protocol,
            solver_epsilon,
            budget,
            unbounded,
            lottery,
        } => {
            let budget = match (budget, unbounded) {
                (_, true) => None,
                (Some(b), false) => Some(b),
                (None, false) => Some(AdversaryState::default_budget(epsilon)),
            };
            let protocol = match protocol {
                ProtocolArg::Uniform => Protocol::Uniform,
                ProtocolArg::Flow => Protocol::FlowSolver { solver_epsilon },
            };
            adversary_audit(&out, epsilon, x1, protocol, budget, lottery.as_deref())
        }
    }
}

fn class_for(fairness: Fairness) -> ComparisonClass {
    match fairness {
        Fairness::EnvyFree => ComparisonClass::EfLotteries,
        Fairness::Proportional => ComparisonClass::ProportionalLotteries,
        Fairness::None => ComparisonClass::AllLotteries,
    }
}

/// Feasibility plus the ex-ante fairness check matching `fairness`.
fn fairness_report(lottery: &Lottery, instance: &Instance, fairness: Fairness) -> VerificationReport {
    let mut report = check_ex_post(lottery, instance, ExPost::Feasible);
    match fairness {
        Fairness::EnvyFree => report.extend(check_ex_ante_ef(lottery, instance)),
        Fairness::Proportional => report.extend(check_ex_ante_proportional(lottery, instance)),
        Fairness::None => {}
    }
    report
}

fn utilities_block(summary: &mut Summary, lottery: &Lottery, instance: &Instance) {
    let u = expected_utilities(lottery, instance);
    summary.nums("utilities", &u.own);
    for (i, row) in u.cross.iter().enumerate() {
        summary.nums(&format!("agent {i} values shares"), row);
    }
}

fn solve(out: &Artifacts, path: &Path, args: SolverArgs) -> Result<bool> {
    let instance = parse_instance(path)?;
    let fairness: Fairness = args.fairness.into();
    let config = SolverConfig::new(args.epsilon, args.objective, fairness);
    let mut ledger = QueryLedger::new(instance.agents(), instance.items());
    let sol = solve_ef_lottery(&instance, &config, &mut ledger)?;
    let lottery = decompose(&sol.graph, &sol.flow)?;

    let mut report = fairness_report(&lottery, &instance, fairness);
    if config.objective == Objective::Welfare {
        report.extend(check_eps_pareto(
            &lottery,
            &instance,
            0.0,
            class_for(fairness),
            sol.grid.pieces(),
        )?);
    }

    out.json("flow.json", &sol.flow.to_records(&sol.graph))?;
    out.json("lottery.json", &lottery)?;
    out.json("report.json", &report)?;
    let mut summary = Summary::default();
    summary
        .line("command", "solve")
        .num("epsilon", args.epsilon)
        .line("pieces per item", sol.grid.pieces().to_string())
        .num("objective", sol.objective_value);
    utilities_block(&mut summary, &lottery, &instance);
    summary
        .line("support", lottery.len().to_string())
        .ledger(&ledger)
        .line(
            "grid pass budget",
            format!("n*m/epsilon = {}", instance.agents() * instance.items() * sol.grid.pieces()),
        )
        .report(&report);
    summary.finish(out)?;
    Ok(report.passed())
}

#[derive(Serialize)]
struct NaiveArtifact {
    item: usize,
    pieces: usize,
    objective: f64,
    /// `distributions[i][y]`: probability agent `i` receives `y` pieces.
    distributions: Vec<Vec<f64>>,
}

fn naive_solve(out: &Artifacts, path: &Path, epsilon: f64, item: usize) -> Result<bool> {
    let instance = parse_instance(path)?;
    let mut ledger = QueryLedger::new(instance.agents(), instance.items());
    let grid = discretize(&instance, epsilon, &mut ledger)?;
    let sol = solve_naive(&grid, item)?;
    out.json(
        "naive.json",
        &NaiveArtifact {
            item,
            pieces: grid.pieces(),
            objective: sol.objective,
            distributions: sol.p.clone(),
        },
    )?;
    let mut summary = Summary::default();
    summary
        .line("command", "naive-solve")
        .num("epsilon", epsilon)
        .line("item", item.to_string())
        .num("objective", sol.objective);
    for (i, dist) in sol.p.iter().enumerate() {
        summary.nums(&format!("agent {i} piece distribution"), dist);
    }
    summary.ledger(&ledger);

    let report = match derandomize_marginals(&sol.p) {
        Ok((graph, flow)) => {
            let lottery = decompose(&graph, &flow)?;
            out.json("lottery.json", &lottery)?;
            summary.line("decomposition", format!("{} outcomes", lottery.len()));
            VerificationReport::single(CheckResult::new("derandomizable", Vec::new(), "a feasible flow realizes the marginals"))
        }
        Err(Error::NotDerandomizable) => {
            summary.line("decomposition", "impossible: no lottery over feasible outcomes has these marginals");
            VerificationReport::single(CheckResult::new(
                "derandomizable",
                vec![Witness::Value {
                    label: "expected total allocated".into(),
                    value: sol
                        .p
                        .iter()
                        .map(|d| d.iter().enumerate().map(|(y, p)| p * y as f64).sum::<f64>())
                        .sum::<f64>()
                        / grid.pieces() as f64,
                    target: 1.0,
                }],
                "the marginals admit no feasible flow",
            ))
        }
        Err(e) => return Err(e),
    };
    out.json("report.json", &report)?;
    summary.report(&report);
    summary.finish(out)?;
    Ok(report.passed())
}

fn rsd(out: &Artifacts, path: &Path, mode: RsdMode) -> Result<bool> {
    let instance = parse_instance(path)?;
    let mut ledger = QueryLedger::new(instance.agents(), instance.items());
    let lottery = rsd_lottery(&instance, mode, &mut ledger)?;
    let mut report = check_ex_post(&lottery, &instance, ExPost::Feasible);
    report.extend(check_ex_post_pareto(&lottery, &instance));
    report.extend(check_ex_ante_ef(&lottery, &instance));
    out.json("lottery.json", &lottery)?;
    out.json("report.json", &report)?;
    let mut summary = Summary::default();
    summary.line("command", "rsd").line(
        "mode",
        match mode {
            RsdMode::Exact => "exact".to_string(),
            RsdMode::Sampled { seed, samples } => format!("sampled seed={seed} samples={samples}"),
        },
    );
    utilities_block(&mut summary, &lottery, &instance);
    summary
        .line("support", lottery.len().to_string())
        .ledger(&ledger)
        .report(&report);
    summary.finish(out)?;
    Ok(report.passed())
}

fn verify(
    out: &Artifacts,
    instance_path: &Path,
    lottery_path: &Path,
    fairness: Fairness,
    epsilon: Option<f64>,
    slack: f64,
) -> Result<bool> {
    let instance = parse_instance(instance_path)?;
    let lottery: Lottery = read_json(lottery_path)?;
    if lottery.agents() != instance.agents() || lottery.items() != instance.items() {
        return Err(Error::Dimension("lottery shape does not match instance".into()));
    }
    let mut report = fairness_report(&lottery, &instance, fairness);
    if let Some(eps) = epsilon {
        let pieces = homodiv::valuations::pieces_for(eps)?;
        report.extend(check_eps_pareto(&lottery, &instance, slack, class_for(fairness), pieces)?);
    }
    out.json("report.json", &report)?;
    let mut summary = Summary::default();
    summary.line("command", "verify");
    utilities_block(&mut summary, &lottery, &instance);
    summary.line("support", lottery.len().to_string()).report(&report);
    summary.finish(out)?;
    Ok(report.passed())
}

fn frontier(out: &Artifacts, path: &Path, epsilon: f64, directions: usize, fairness: Fairness) -> Result<bool> {
    let instance = parse_instance(path)?;
    let n = instance.agents();
    let f = frontier_sweep(&instance, epsilon, directions, fairness)?;
    std::fs::create_dir_all(out.path("lotteries"))?;

    let mut header: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    header.extend((0..n).map(|i| format!("u{i}")));
    header.push("lottery".into());
    let mut rows = Vec::new();
    for (idx, p) in f.points.iter().enumerate() {
        let name = format!("lotteries/point_{idx:03}.json");
        out.json(&name, &p.lottery)?;
        let mut row: Vec<String> = p.weights.iter().chain(&p.utilities).map(|&x| fmt_g12(x)).collect();
        row.push(name);
        rows.push(row);
    }
    out.csv("frontier.csv", &header, &rows)?;

    let mut header: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
    for i in 0..n {
        header.extend((0..instance.items()).map(|k| format!("x{i}_{k}")));
    }
    let rows: Vec<Vec<String>> = f
        .outcomes
        .iter()
        .map(|o| {
            o.utilities
                .iter()
                .chain(o.allocation.x.iter().flatten())
                .map(|&x| fmt_g12(x))
                .collect()
        })
        .collect();
    out.csv("outcomes.csv", &header, &rows)?;

    let mut summary = Summary::default();
    summary
        .line("command", "frontier")
        .num("epsilon", epsilon)
        .line("directions", f.points.len().to_string())
        .line("deterministic outcomes", f.outcomes.len().to_string());
    for p in &f.points {
        summary.line(&format!("weights {}", join(&p.weights)), join(&p.utilities));
    }
    summary.finish(out)?;
    Ok(true)
}

fn adversary_audit(
    out: &Artifacts,
    epsilon: f64,
    x1: Option<f64>,
    protocol: Protocol,
    budget: Option<usize>,
    lottery_path: Option<&Path>,
) -> Result<bool> {
    let (forged, lottery, audit, ledger) = match lottery_path {
        Some(p) => {
            // a lottery produced elsewhere: no transcript to respect
            let lottery: Lottery = read_json(p)?;
            let state = AdversaryState::new(epsilon)?;
            let forged = match x1 {
                Some(x1) => forge_instances_at(&state, x1)?,
                None => forge_instances(&state)?,
            };
            let audit = audit_lottery(&forged, &lottery)?;
            (forged, lottery, audit, state.ledger().clone())
        }
        None => audit_protocol(epsilon, protocol, x1, budget)?,
    };
    for (name, inst) in forged.all() {
        out.json(&format!("{}.json", name.to_lowercase()), inst)?;
    }
    out.json("lottery.json", &lottery)?;
    out.json("audit.json", &audit)?;
    let mut summary = Summary::default();
    summary
        .line("command", "adversary-audit")
        .num("epsilon", epsilon)
        .nums("interval", &audit.interval)
        .ledger(&ledger)
        .nums("expected totals", &audit.expected_totals)
        .nums("utilities in I2", &audit.utilities_i2)
        .nums("utilities in I3", &audit.utilities_i3)
        .nums("reference utilities in I2", &audit.reference_utilities)
        .num("cap", audit.cap)
        .num("randomization peak", audit.randomization_peak)
        .line(
            "defeated in",
            if audit.defeated_in.is_empty() {
                "none".to_string()
            } else {
                audit.defeated_in.join(" ")
            },
        )
        .report(&audit.report);
    summary.finish(out)?;
    Ok(audit.report.passed())
}
