//! Thin builder over `minilp` for the small dense programs used by the moment
//! geometry: a few equality rows, many nonnegative weight columns.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    op: ComparisonOp,
    rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    sense: Sense,
    vars: Vec<(f64, f64, f64)>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub objective: f64,
    pub values: Vec<f64>,
}

impl LinearProgram {
    pub(crate) fn new(sense: Sense) -> Self {
        Self { sense, vars: Vec::new(), rows: Vec::new() }
    }

    pub(crate) fn add_var(&mut self, objective: f64, lo: f64, hi: f64) -> usize {
        self.vars.push((objective, lo, hi));
        self.vars.len() - 1
    }

    pub(crate) fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, op: ComparisonOp::Eq, rhs });
    }

    pub(crate) fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, op: ComparisonOp::Ge, rhs });
    }

    fn build(&self, relax: f64) -> (Problem, Vec<minilp::Variable>) {
        let dir = match self.sense {
            Sense::Minimize => OptimizationDirection::Minimize,
            Sense::Maximize => OptimizationDirection::Maximize,
        };
        let mut p = Problem::new(dir);
        let vars: Vec<_> = self.vars.iter().map(|&(c, lo, hi)| p.add_var(c, (lo, hi))).collect();
        for row in &self.rows {
            let expr = || {
                let mut e = LinearExpr::empty();
                for &(i, c) in &row.coeffs {
                    e.add(vars[i], c);
                }
                e
            };
            match row.op {
                ComparisonOp::Eq if relax > 0.0 => {
                    p.add_constraint(expr(), ComparisonOp::Ge, row.rhs - relax);
                    p.add_constraint(expr(), ComparisonOp::Le, row.rhs + relax);
                }
                op => p.add_constraint(expr(), op, row.rhs),
            }
        }
        (p, vars)
    }

    fn solve_with(&self, relax: f64) -> std::result::Result<LpSolution, minilp::Error> {
        let (p, vars) = self.build(relax);
        let sol = p.solve()?;
        Ok(LpSolution {
            objective: sol.objective(),
            values: vars.iter().map(|v| sol[*v]).collect(),
        })
    }

    /// Smallest uniform relaxation of the equality rows that admits a solution.
    fn min_residual(&self) -> Result<f64> {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self.vars.iter().map(|&(_, lo, hi)| p.add_var(0.0, (lo, hi))).collect();
        let worst = p.add_var(1.0, (0.0, f64::INFINITY));
        for row in &self.rows {
            let mut e = LinearExpr::empty();
            for &(i, c) in &row.coeffs {
                e.add(vars[i], c);
            }
            match row.op {
                ComparisonOp::Eq => {
                    let mut lo = e.clone();
                    lo.add(worst, 1.0);
                    p.add_constraint(lo, ComparisonOp::Ge, row.rhs);
                    let mut hi = e;
                    hi.add(worst, -1.0);
                    p.add_constraint(hi, ComparisonOp::Le, row.rhs);
                }
                op => p.add_constraint(e, op, row.rhs),
            }
        }
        let sol = p.solve().map_err(|e| Error::Lp(e.to_string()))?;
        Ok(sol[worst])
    }

    /// Solves exactly, or with equality rows relaxed by the phase-one
    /// residual when that residual is at most `tol`.
    pub(crate) fn solve(&self, tol: f64) -> Result<LpSolution> {
        match self.solve_with(0.0) {
            Ok(sol) => Ok(sol),
            Err(minilp::Error::Infeasible) => {
                let residual = self.min_residual()?;
                if residual > tol {
                    return Err(Error::InfeasiblePrefix { residual });
                }
                let relax = residual * (1.0 + 1e-6) + 1e-13;
                self.solve_with(relax).map_err(|e| match e {
                    minilp::Error::Infeasible => Error::InfeasiblePrefix { residual },
                    other => Error::Lp(other.to_string()),
                })
            }
            Err(e) => Err(Error::Lp(e.to_string())),
        }
    }
}
