use log::debug;

use super::{LinearProgram, LpSolution, LpStatus, Relation};

/// Smallest magnitude accepted as a pivot element.
const PIVOT_TOL: f64 = 1e-10;
/// Reduced costs within this of zero count as optimal.
const OPT_TOL: f64 = 1e-9;
/// Phase one must drive the artificial sum below this.
const FEAS_TOL: f64 = 1e-8;
/// Basis inverse is rebuilt from scratch after this many eta updates.
const REFACTOR_EVERY: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    Free,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Stalled,
}

/// Column-major copy of the constraint matrix with slack and artificial columns appended.
struct Columns {
    start: Vec<usize>,
    row: Vec<usize>,
    val: Vec<f64>,
}

impl Columns {
    fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[j]..self.start[j + 1];
        self.row[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }
}

struct Simplex {
    m: usize,
    cols: Columns,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    /// Dense row-major inverse of the basis matrix.
    binv: Vec<f64>,
    since_refactor: usize,
    pivots: usize,
}

/// Maximizes `lp` with a two-phase bounded-variable revised simplex.
///
/// Pricing is Dantzig's largest reduced cost until `5 * (rows + columns)` pivots
/// have been spent in a phase, then Bland's smallest-index rule, which cannot cycle.
/// The result is a basic solution and is deterministic for a given input.
pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    let n = lp.num_vars();
    let m = lp.num_rows();

    // structural columns, then one slack per inequality, then artificials
    let mut triplets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, row) in lp.rows().iter().enumerate() {
        for &(j, a) in &row.coeffs {
            triplets[j].push((r, a));
        }
    }
    let mut lower: Vec<f64> = (0..n).map(|j| lp.bounds(j).0).collect();
    let mut upper: Vec<f64> = (0..n).map(|j| lp.bounds(j).1).collect();
    let mut slack_of_row = vec![None; m];
    for (r, row) in lp.rows().iter().enumerate() {
        let sign = match row.relation {
            Relation::Le => 1.0,
            Relation::Ge => -1.0,
            Relation::Eq => continue,
        };
        slack_of_row[r] = Some((triplets.len(), sign));
        triplets.push(vec![(r, sign)]);
        lower.push(0.0);
        upper.push(f64::INFINITY);
    }

    let mut x: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(&l, &u)| {
            if l.is_finite() {
                l
            } else if u.is_finite() {
                u
            } else {
                0.0
            }
        })
        .collect();
    let mut state: Vec<VarState> = lower
        .iter()
        .zip(&upper)
        .map(|(&l, &u)| {
            if l.is_finite() {
                VarState::AtLower
            } else if u.is_finite() {
                VarState::AtUpper
            } else {
                VarState::Free
            }
        })
        .collect();

    let rhs: Vec<f64> = lp.rows().iter().map(|r| r.rhs).collect();
    let mut residual = rhs.clone();
    for (j, col) in triplets.iter().enumerate() {
        if x[j] != 0.0 {
            for &(r, a) in col {
                residual[r] -= a * x[j];
            }
        }
    }

    // a slack starts basic when it can absorb the residual, otherwise an artificial does
    let mut basis = vec![0; m];
    let mut binv = vec![0.0; m * m];
    let mut artificials = Vec::new();
    for r in 0..m {
        let res = residual[r];
        match slack_of_row[r] {
            Some((s, sign)) if res * sign >= 0.0 => {
                basis[r] = s;
                state[s] = VarState::Basic(r);
                x[s] = res * sign;
                binv[r * m + r] = sign;
            }
            _ => {
                let sign = if res >= 0.0 { 1.0 } else { -1.0 };
                let a = triplets.len();
                triplets.push(vec![(r, sign)]);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                x.push(res.abs());
                state.push(VarState::Basic(r));
                basis[r] = a;
                binv[r * m + r] = sign;
                artificials.push(a);
            }
        }
    }

    let mut start = Vec::with_capacity(triplets.len() + 1);
    let mut row_idx = Vec::new();
    let mut val = Vec::new();
    start.push(0);
    for col in &triplets {
        for &(r, a) in col {
            row_idx.push(r);
            val.push(a);
        }
        start.push(row_idx.len());
    }

    let mut s = Simplex {
        m,
        cols: Columns {
            start,
            row: row_idx,
            val,
        },
        rhs,
        lower,
        upper,
        x,
        state,
        basis,
        binv,
        since_refactor: 0,
        pivots: 0,
    };
    let total = s.x.len();

    if !artificials.is_empty() {
        let mut cost = vec![0.0; total];
        for &a in &artificials {
            cost[a] = -1.0;
        }
        match s.run(&cost) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded | PhaseEnd::Stalled => return s.finish(lp, LpStatus::IterationLimit),
        }
        let infeasibility: f64 = artificials.iter().map(|&a| s.x[a]).sum();
        if infeasibility > FEAS_TOL {
            debug!("phase one ended with artificial sum {infeasibility:e}");
            return s.finish(lp, LpStatus::Infeasible);
        }
        // artificials stay at zero from here on; basic ones are redundant rows
        for &a in &artificials {
            s.upper[a] = 0.0;
            if s.state[a] == VarState::AtUpper {
                s.state[a] = VarState::AtLower;
            }
            if !matches!(s.state[a], VarState::Basic(_)) {
                s.x[a] = 0.0;
            }
        }
    }

    let mut cost = vec![0.0; total];
    cost[..n].copy_from_slice(lp.objective());
    let status = match s.run(&cost) {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
        PhaseEnd::Stalled => LpStatus::IterationLimit,
    };
    s.finish(lp, status)
}

impl Simplex {
    fn run(&mut self, cost: &[f64]) -> PhaseEnd {
        let total = self.x.len();
        let bland_after = 5 * (self.m + total);
        let max_pivots = 50 * (self.m + total) + 10_000;
        let mut y = vec![0.0; self.m];
        let mut alpha = vec![0.0; self.m];
        for iter in 0..max_pivots {
            let bland = iter >= bland_after;

            // duals y = c_B^T B^-1
            y.iter_mut().for_each(|v| *v = 0.0);
            for (i, &b) in self.basis.iter().enumerate() {
                let cb = cost[b];
                if cb != 0.0 {
                    let row = &self.binv[i * self.m..(i + 1) * self.m];
                    for (yj, &bij) in y.iter_mut().zip(row) {
                        *yj += cb * bij;
                    }
                }
            }

            let Some((q, dir)) = self.price(cost, &y, bland) else {
                return PhaseEnd::Optimal;
            };

            // alpha = B^-1 a_q
            alpha.iter_mut().for_each(|v| *v = 0.0);
            for (r, a) in self.cols.col(q) {
                for (i, ai) in alpha.iter_mut().enumerate() {
                    *ai += self.binv[i * self.m + r] * a;
                }
            }

            let Some(step) = self.ratio_test(q, dir, &alpha, bland) else {
                return PhaseEnd::Unbounded;
            };
            self.apply(q, dir, &alpha, step);
            if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return PhaseEnd::Stalled;
            }
        }
        PhaseEnd::Stalled
    }

    /// Entering column and its direction of travel (+1 up, -1 down).
    fn price(&self, cost: &[f64], y: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, &cj) in cost.iter().enumerate().take(self.x.len()) {
            let st = self.state[j];
            if matches!(st, VarState::Basic(_)) || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = cj - self.cols.col(j).map(|(r, a)| y[r] * a).sum::<f64>();
            let dir = match st {
                VarState::AtLower if d > OPT_TOL => 1.0,
                VarState::AtUpper if d < -OPT_TOL => -1.0,
                VarState::Free if d.abs() > OPT_TOL => d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, score)| d.abs() > score) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> Option<Step> {
        let mut best: Option<Step> = None;
        let span = self.upper[q] - self.lower[q];
        if span.is_finite() {
            best = Some(Step {
                t: span,
                leave: None,
            });
        }
        for (i, &a) in alpha.iter().enumerate() {
            let g = dir * a;
            let b = self.basis[i];
            let (t, to_upper) = if g > PIVOT_TOL && self.lower[b].is_finite() {
                ((self.x[b] - self.lower[b]) / g, false)
            } else if g < -PIVOT_TOL && self.upper[b].is_finite() {
                ((self.upper[b] - self.x[b]) / -g, true)
            } else {
                continue;
            };
            let t = t.max(0.0);
            let better = match &best {
                None => true,
                Some(cur) => {
                    if t < cur.t - 1e-12 {
                        true
                    } else if t <= cur.t + 1e-12 {
                        match cur.leave {
                            // prefer a basis change over a bound flip on ties
                            None => true,
                            Some((p, _)) => {
                                if bland {
                                    b < self.basis[p]
                                } else {
                                    g.abs() > alpha[p].abs()
                                }
                            }
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                best = Some(Step {
                    t,
                    leave: Some((i, to_upper)),
                });
            }
        }
        best
    }

    fn apply(&mut self, q: usize, dir: f64, alpha: &[f64], step: Step) {
        let m = self.m;
        let t = step.t;
        if t != 0.0 {
            self.x[q] += dir * t;
            for (i, &a) in alpha.iter().enumerate() {
                self.x[self.basis[i]] -= dir * t * a;
            }
        }
        self.pivots += 1;
        match step.leave {
            None => {
                // bound flip, basis unchanged
                if dir > 0.0 {
                    self.state[q] = VarState::AtUpper;
                    self.x[q] = self.upper[q];
                } else {
                    self.state[q] = VarState::AtLower;
                    self.x[q] = self.lower[q];
                }
            }
            Some((p, to_upper)) => {
                let leaving = self.basis[p];
                if to_upper {
                    self.state[leaving] = VarState::AtUpper;
                    self.x[leaving] = self.upper[leaving];
                } else {
                    self.state[leaving] = VarState::AtLower;
                    self.x[leaving] = self.lower[leaving];
                }
                self.basis[p] = q;
                self.state[q] = VarState::Basic(p);

                let piv = alpha[p];
                let (before, rest) = self.binv.split_at_mut(p * m);
                let (prow, after) = rest.split_at_mut(m);
                prow.iter_mut().for_each(|v| *v /= piv);
                for (i, row) in before.chunks_mut(m).chain(after.chunks_mut(m)).enumerate() {
                    let i = if i < p { i } else { i + 1 };
                    let f = alpha[i];
                    if f != 0.0 {
                        for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                            *v -= f * pv;
                        }
                    }
                }
                self.since_refactor += 1;
            }
        }
    }

    /// Rebuilds `B^-1` by Gauss-Jordan elimination and recomputes the basic values.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return true;
        }
        let mut a = vec![0.0; m * m];
        for (i, &b) in self.basis.iter().enumerate() {
            for (r, v) in self.cols.col(b) {
                a[r * m + i] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &j| a[i * m + c].abs().total_cmp(&a[j * m + c].abs()))
                .unwrap();
            let piv = a[p * m + c];
            if piv.abs() < 1e-13 {
                debug!("singular basis during refactorization");
                return false;
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            for k in 0..m {
                a[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        a[i * m + k] -= f * a[c * m + k];
                        inv[i * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        self.binv = inv;

        let mut res = self.rhs.clone();
        for j in 0..self.x.len() {
            if !matches!(self.state[j], VarState::Basic(_)) && self.x[j] != 0.0 {
                for (r, v) in self.cols.col(j) {
                    res[r] -= v * self.x[j];
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.basis[i]] = row.iter().zip(&res).map(|(b, r)| b * r).sum();
        }
        true
    }

    fn finish(mut self, lp: &LinearProgram, status: LpStatus) -> LpSolution {
        if status == LpStatus::Optimal {
            self.refactor();
        }
        let n = lp.num_vars();
        let mut values = self.x[..n].to_vec();
        for (j, v) in values.iter_mut().enumerate() {
            let (l, u) = lp.bounds(j);
            if (*v - l).abs() < 1e-11 {
                *v = l;
            } else if (*v - u).abs() < 1e-11 {
                *v = u;
            }
            *v = v.clamp(l, u);
        }
        let objective = lp.objective_value(&values);
        LpSolution {
            status,
            values,
            objective,
            pivots: self.pivots,
        }
    }
}

struct Step {
    t: f64,
    /// Basis position leaving and whether it leaves at its upper bound; `None` is a bound flip.
    leave: Option<(usize, bool)>,
}
