//! Free-form MPS dump for cross-checking with external solvers.
//!
//! Rows are named `R0000000`, `R0000001`, ... in insertion order and columns
//! `C0000000`, ... in variable order, so every name fits the 8-character fixed
//! MPS field. The objective row is `OBJ` and the sense is declared with
//! `OBJSENSE MAX`. Numbers are written with 12 significant digits in `%.12g`
//! style. Columns are emitted in index order and, within a column, the objective
//! entry first followed by rows in increasing index order.

use std::fmt::Write;

use super::{LinearProgram, Relation};
use crate::io::fmt_g12;

pub fn write_mps(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    let n = lp.num_vars();
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (r, row) in lp.rows().iter().enumerate() {
        for &(j, a) in &row.coeffs {
            by_col[j].push((r, a));
        }
    }

    let _ = writeln!(out, "NAME          {name}");
    let _ = writeln!(out, "OBJSENSE\n    MAX");
    let _ = writeln!(out, "ROWS\n N  OBJ");
    for (r, row) in lp.rows().iter().enumerate() {
        let tag = match row.relation {
            Relation::Eq => "E",
            Relation::Le => "L",
            Relation::Ge => "G",
        };
        let _ = writeln!(out, " {tag}  R{r:07}");
    }
    let _ = writeln!(out, "COLUMNS");
    for (j, entries) in by_col.iter().enumerate() {
        let c = lp.objective()[j];
        if c != 0.0 {
            let _ = writeln!(out, "    C{j:07}  {:<8}  {:>12}", "OBJ", fmt_g12(c));
        }
        for &(r, a) in entries {
            let _ = writeln!(out, "    C{j:07}  R{r:07}  {:>12}", fmt_g12(a));
        }
        if c == 0.0 && entries.is_empty() {
            // keep the column declared so bounds can refer to it
            let _ = writeln!(out, "    C{j:07}  {:<8}  {:>12}", "OBJ", "0");
        }
    }
    let _ = writeln!(out, "RHS");
    for (r, row) in lp.rows().iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    RHS       R{r:07}  {:>12}", fmt_g12(row.rhs));
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for j in 0..n {
        let (l, u) = lp.bounds(j);
        match (l.is_finite(), u.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND       C{j:07}");
            }
            (true, true) if l == u => {
                let _ = writeln!(out, " FX BND       C{j:07}  {:>12}", fmt_g12(l));
            }
            _ => {
                if !l.is_finite() {
                    let _ = writeln!(out, " MI BND       C{j:07}");
                } else if l != 0.0 {
                    let _ = writeln!(out, " LO BND       C{j:07}  {:>12}", fmt_g12(l));
                }
                if u.is_finite() {
                    let _ = writeln!(out, " UP BND       C{j:07}  {:>12}", fmt_g12(u));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_dump_is_bit_exact() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![1.0, 1.0 / 3.0]).unwrap();
        lp.set_bounds(1, f64::NEG_INFINITY, 2.5).unwrap();
        lp.add_constraint([(0, 1.0), (1, 2.0)], Relation::Le, 1.0).unwrap();
        lp.add_constraint([(1, -1.0)], Relation::Eq, 0.0).unwrap();
        let expected = "\
NAME          TEST
OBJSENSE
    MAX
ROWS
 N  OBJ
 L  R0000000
 E  R0000001
COLUMNS
    C0000000  OBJ                  1
    C0000000  R0000000             1
    C0000001  OBJ       0.333333333333
    C0000001  R0000000             2
    C0000001  R0000001            -1
RHS
    RHS       R0000000             1
BOUNDS
 UP BND       C0000000             1
 MI BND       C0000001
 UP BND       C0000001           2.5
ENDATA
";
        assert_eq!(write_mps(&lp, "TEST"), expected);
    }
}
