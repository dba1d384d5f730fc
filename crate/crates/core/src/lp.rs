//! Linear-program contract shared by the controllers.
//!
//! Controllers build an [`LpProblem`] with named variables and rows; the
//! solver backend is an implementation detail behind [`solve_lp`]. Every
//! optimal solution is re-checked against the original rows before it is
//! returned.

use std::fmt::Write as _;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// Absolute slack, scaled by row magnitude, accepted when re-checking a solution.
pub const VERIFY_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
struct Var {
    name: String,
    objective: f64,
    lo: f64,
    hi: f64,
}

#[derive(Clone, Debug)]
struct Row {
    name: String,
    terms: Vec<(VarId, f64)>,
    relation: Relation,
    rhs: f64,
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    sense: Sense,
    vars: Vec<Var>,
    rows: Vec<Row>,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Adds a variable with bounds `[lo, hi]`; infinite bounds are allowed.
    pub fn add_var(&mut self, name: impl Into<String>, objective: f64, lo: f64, hi: f64) -> VarId {
        debug_assert!(lo <= hi, "empty variable domain");
        self.vars.push(Var {
            name: name.into(),
            objective,
            lo,
            hi,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_objective(&mut self, var: VarId, coefficient: f64) {
        self.vars[var.0].objective += coefficient;
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        self.rows.push(Row {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn var_name(&self, var: VarId) -> &str {
        &self.vars[var.0].name
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(v, x)| v.objective * x).sum()
    }

    /// Largest scaled violation of any bound or row by `values`, with the name
    /// of the offending bound or row.
    pub fn max_violation(&self, values: &[f64]) -> (f64, Option<&str>) {
        let mut worst = (0.0, None);
        for (v, &x) in self.vars.iter().zip(values) {
            let scale = 1.0 + x.abs();
            let excess = ((v.lo - x).max(x - v.hi)).max(0.0) / scale;
            if excess > worst.0 {
                worst = (excess, Some(v.name.as_str()));
            }
        }
        for row in &self.rows {
            let mut lhs = 0.0;
            let mut scale = 1.0 + row.rhs.abs();
            for &(var, c) in &row.terms {
                let t = c * values[var.0];
                lhs += t;
                scale = scale.max(t.abs());
            }
            let gap = lhs - row.rhs;
            let excess = match row.relation {
                Relation::Le => gap.max(0.0),
                Relation::Ge => (-gap).max(0.0),
                Relation::Eq => gap.abs(),
            } / scale;
            if excess > worst.0 {
                worst = (excess, Some(row.name.as_str()));
            }
        }
        worst
    }

    /// Human-readable dump in an LP-file-like layout.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}",
            match self.sense {
                Sense::Minimize => "minimize",
                Sense::Maximize => "maximize",
            }
        );
        let _ = write!(out, "  obj:");
        for v in self.vars.iter().filter(|v| v.objective != 0.0) {
            let _ = write!(out, " {:+} {}", v.objective, v.name);
        }
        let _ = writeln!(out, "\nsubject to");
        for row in &self.rows {
            let _ = write!(out, "  {}:", row.name);
            for &(var, c) in &row.terms {
                let _ = write!(out, " {:+} {}", c, self.vars[var.0].name);
            }
            let op = match row.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        let _ = writeln!(out, "bounds");
        for v in &self.vars {
            let _ = writeln!(out, "  {} <= {} <= {}", v.lo, v.name, v.hi);
        }
        let _ = writeln!(out, "end");
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the problem's own sense; NaN unless optimal.
    pub objective: f64,
    values: Vec<f64>,
}

impl LpSolution {
    /// Value of `var` in an optimal solution.
    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `problem`. Infeasible and unbounded problems are reported through
/// the status; backend failures and solutions that violate the rows are errors.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    let mut p = Problem::new(match problem.sense {
        Sense::Minimize => OptimizationDirection::Minimize,
        Sense::Maximize => OptimizationDirection::Maximize,
    });
    let vars: Vec<_> = problem
        .vars
        .iter()
        .map(|v| p.add_var(v.objective, (v.lo, v.hi)))
        .collect();
    for row in &problem.rows {
        let expr: LinearExpr = row.terms.iter().map(|&(v, c)| (vars[v.0], c)).collect();
        let op = match row.relation {
            Relation::Le => ComparisonOp::Le,
            Relation::Ge => ComparisonOp::Ge,
            Relation::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(expr, op, row.rhs);
    }
    let not_optimal = |status| LpSolution {
        status,
        objective: f64::NAN,
        values: Vec::new(),
    };
    let outcome = match p.solve() {
        Ok(o) => o,
        Err(microlp::Error::Infeasible) => return Ok(not_optimal(LpStatus::Infeasible)),
        Err(microlp::Error::Unbounded) => return Ok(not_optimal(LpStatus::Unbounded)),
        Err(e) => return Err(Error::Solver(e.to_string())),
    };
    let solution = outcome
        .solution()
        .ok_or_else(|| Error::Solver("solver stopped without a solution".into()))?;
    let values: Vec<f64> = vars.iter().map(|&v| solution.var_value(v)).collect();
    let (violation, at) = problem.max_violation(&values);
    if violation > VERIFY_TOLERANCE {
        return Err(Error::Solver(format!(
            "solution violates {} by {violation:e}",
            at.unwrap_or("?")
        )));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: problem.objective_value(&values),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force optimum of a two-variable LP `max c.x` over
    /// `{a.x <= b}` by enumerating pairwise line intersections.
    fn vertex_oracle(c: [f64; 2], rows: &[([f64; 2], f64)]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let ([a, b], e) = rows[i];
                let ([cc, d], f) = rows[j];
                let det = a * d - b * cc;
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (e * d - b * f) / det;
                let y = (a * f - e * cc) / det;
                if rows.iter().all(|(r, rhs)| r[0] * x + r[1] * y <= rhs + 1e-9) {
                    let v = c[0] * x + c[1] * y;
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
        best
    }

    #[test]
    fn matches_vertex_enumeration_on_random_polytopes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let mut rows = vec![
                ([1.0, 0.0], 5.0),
                ([-1.0, 0.0], 5.0),
                ([0.0, 1.0], 5.0),
                ([0.0, -1.0], 5.0),
            ];
            for _ in 0..3 {
                rows.push((
                    [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
                    rng.random_range(0.5..4.0),
                ));
            }
            let mut lp = LpProblem::new(Sense::Maximize);
            let x = lp.add_var("x", c[0], f64::NEG_INFINITY, f64::INFINITY);
            let y = lp.add_var("y", c[1], f64::NEG_INFINITY, f64::INFINITY);
            for (k, (a, b)) in rows.iter().enumerate() {
                lp.add_constraint(format!("r{k}"), vec![(x, a[0]), (y, a[1])], Relation::Le, *b);
            }
            let sol = solve_lp(&lp).unwrap();
            let expected = vertex_oracle(c, &rows).unwrap();
            assert!(sol.is_optimal());
            assert!((sol.objective - expected).abs() < 1e-6, "{} vs {expected}", sol.objective);
        }
    }

    #[test]
    fn infeasible_and_unbounded_are_statuses() {
        let mut lp = LpProblem::new(Sense::Minimize);
        let x = lp.add_var("x", 1.0, 0.0, 1.0);
        lp.add_constraint("c", vec![(x, 1.0)], Relation::Ge, 2.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LpProblem::new(Sense::Maximize);
        let x = lp.add_var("x", 1.0, 0.0, f64::INFINITY);
        lp.add_constraint("c", vec![(x, -1.0)], Relation::Le, 0.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_and_dump() {
        let mut lp = LpProblem::new(Sense::Minimize);
        let x = lp.add_var("x", 1.0, 0.0, 10.0);
        let y = lp.add_var("y", 2.0, 0.0, 10.0);
        lp.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 3.0);
        lp.add_constraint("cap", vec![(x, 1.0)], Relation::Le, 2.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value(x) - 2.0).abs() < 1e-9);
        assert!((sol.value(y) - 1.0).abs() < 1e-9);
        assert!((sol.objective - 4.0).abs() < 1e-9);
        let text = lp.to_text();
        assert!(text.contains("sum: +1 x +1 y = 3"));
        assert!(text.contains("0 <= y <= 10"));
    }
}
