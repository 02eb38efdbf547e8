use log::debug;

use super::{solve_lp, LinearProgram, LpSolution, LpStatus, Relation};
use crate::error::{Error, Result};

/// Frozen minima are imposed as `group >= attained - FREEZE_SLACK`.
pub const FREEZE_SLACK: f64 = 1e-8;
/// A group counts as saturated when it cannot beat the current minimum by more than this.
const SATURATION_TOL: f64 = 1e-7;

/// Leximin over linear group objectives.
///
/// Repeatedly maximizes the smallest unfrozen group objective, freezes every group
/// that cannot exceed the attained minimum, and recurses on the rest. The returned
/// solution maximizes the plain sum of groups subject to all frozen minima.
pub fn lexi_solve(lp: &LinearProgram, groups: &[Vec<f64>]) -> Result<LpSolution> {
    let n = lp.num_vars();
    if let Some(g) = groups.iter().find(|g| g.len() != n) {
        return Err(Error::Dimension(format!(
            "group objective has {} entries for {n} variables",
            g.len()
        )));
    }
    if groups.is_empty() {
        return Ok(solve_lp(lp));
    }

    let sparse = |g: &[f64]| -> Vec<(usize, f64)> {
        g.iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect()
    };
    let mut frozen: Vec<Option<f64>> = vec![None; groups.len()];
    let mut pivots = 0;

    let with_frozen = |frozen: &[Option<f64>]| -> Result<LinearProgram> {
        let mut base = lp.clone();
        base.set_objective(vec![0.0; n])?;
        for (g, level) in groups.iter().zip(frozen) {
            if let Some(level) = level {
                base.add_constraint(sparse(g), Relation::Ge, level - FREEZE_SLACK)?;
            }
        }
        Ok(base)
    };

    while frozen.iter().any(Option::is_none) {
        let open: Vec<usize> = (0..groups.len()).filter(|&g| frozen[g].is_none()).collect();

        // max t  s.t.  group_g . x >= t  for every open group
        let mut maxmin = with_frozen(&frozen)?;
        let t = maxmin.add_variable(f64::NEG_INFINITY, f64::INFINITY, 1.0)?;
        for &g in &open {
            let mut row = sparse(&groups[g]);
            row.push((t, -1.0));
            maxmin.add_constraint(row, Relation::Ge, 0.0)?;
        }
        let sol = solve_lp(&maxmin);
        pivots += sol.pivots;
        if sol.status != LpStatus::Optimal {
            return Ok(LpSolution {
                values: sol.values[..n].to_vec(),
                pivots,
                ..sol
            });
        }
        let level = sol.values[t];

        // a group is saturated when it cannot rise above the level without pushing another below it
        let mut best_room = Vec::with_capacity(open.len());
        for &g in &open {
            let mut probe = with_frozen(&frozen)?;
            for &h in &open {
                probe.add_constraint(sparse(&groups[h]), Relation::Ge, level - FREEZE_SLACK)?;
            }
            probe.set_objective(groups[g].clone())?;
            let s = solve_lp(&probe);
            pivots += s.pivots;
            let room = if s.is_optimal() { s.objective } else { f64::INFINITY };
            best_room.push(room);
        }
        let mut any = false;
        for (&g, &room) in open.iter().zip(&best_room) {
            if room <= level + SATURATION_TOL {
                frozen[g] = Some(level);
                any = true;
            }
        }
        if !any {
            // numerically the true bottleneck always saturates; take the tightest one
            let (pos, _) = best_room
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("open groups exist");
            frozen[open[pos]] = Some(level);
        }
        debug!("leximin level {level:.12} frozen {:?}", frozen);
    }

    let mut last = with_frozen(&frozen)?;
    let mut total = vec![0.0; n];
    for g in groups {
        for (acc, c) in total.iter_mut().zip(g) {
            *acc += c;
        }
    }
    last.set_objective(total)?;
    let mut sol = solve_lp(&last);
    sol.pivots += pivots;
    sol.objective = lp.objective_value(&sol.values);
    Ok(sol)
}
