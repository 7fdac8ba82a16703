//! Minimisation LPs over bounded variables, solved by a dense dual simplex.
//!
//! Rows can be appended and bounds changed between solves; the last basis is
//! reused. A floating-point solve whose answer fails the feasibility check is
//! repeated in exact rational arithmetic.

mod scalar;
mod tableau;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rational::Rat;
use tableau::{Outcome, Status, Tableau};

pub use scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { coeffs, sense, rhs }
    }

    fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let ax = self.activity(x);
        match self.sense {
            Sense::Le => (ax - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - ax).max(0.0),
            Sense::Eq => (ax - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub exact_fallback: bool,
}

#[derive(Debug, Clone, Default)]
pub struct LpStats {
    pub solves: usize,
    pub pivots: usize,
    pub exact_retries: usize,
}

const REFACTOR_EVERY: usize = 200;
const CHECK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Default)]
pub struct LpModel {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    names: Vec<String>,
    rows: Vec<Row>,
    warm: Option<Tableau<f64>>,
    pub stats: LpStats,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, cost: f64) -> usize {
        self.warm = None;
        self.lo.push(lo);
        self.hi.push(hi);
        self.cost.push(cost);
        self.names.push(name.into());
        self.lo.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.lo.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) -> Result<()> {
        if j >= self.n_vars() {
            return Err(Error::BadVariable(j));
        }
        self.lo[j] = lo;
        self.hi[j] = hi;
        if let Some(t) = &mut self.warm {
            t.set_bounds(j, lo, hi);
        }
        Ok(())
    }

    pub fn add_row(&mut self, row: Row) -> Result<()> {
        if let Some(&(j, _)) = row.coeffs.iter().find(|&&(j, _)| j >= self.n_vars()) {
            return Err(Error::BadVariable(j));
        }
        if let Some(t) = &mut self.warm {
            t.add_row(&row.coeffs, row.sense, row.rhs);
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn add_rows(&mut self, rows: impl IntoIterator<Item = Row>) -> Result<()> {
        for r in rows {
            self.add_row(r)?;
        }
        Ok(())
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn feasible(&self, x: &[f64]) -> bool {
        let bounds_ok = x.iter().enumerate().all(|(j, &v)| {
            v >= self.lo[j] - CHECK_TOL * (1.0 + self.lo[j].abs())
                && v <= self.hi[j] + CHECK_TOL * (1.0 + self.hi[j].abs())
        });
        bounds_ok
            && self
                .rows
                .iter()
                .all(|r| r.violation(x) <= CHECK_TOL * (1.0 + r.rhs.abs()))
    }

    fn max_iter(&self) -> usize {
        50 * (self.n_vars() + self.rows.len()) + 1000
    }

    fn result(&self, status: LpStatus, x: Vec<f64>, iterations: usize, exact: bool) -> LpResult {
        let objective = match status {
            LpStatus::Optimal => self.objective(&x),
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
        };
        LpResult {
            status,
            x,
            objective,
            iterations,
            exact_fallback: exact,
        }
    }

    /// Runs the f64 simplex in bursts, refactoring between them.
    fn run_float(&self, mut t: Tableau<f64>) -> (Outcome, Tableau<f64>, usize) {
        let budget = self.max_iter();
        let mut used = 0;
        let mut bland = false;
        loop {
            let before = t.pivots;
            let out = t.dual_simplex(REFACTOR_EVERY, bland);
            used += t.pivots - before;
            match out {
                Outcome::IterationLimit if used < budget => {
                    t = Tableau::reinvert(self, &t.status);
                    if used > budget / 2 {
                        bland = true;
                    }
                }
                _ => return (out, t, used),
            }
        }
    }

    pub fn solve(&mut self) -> LpResult {
        self.stats.solves += 1;
        let n = self.n_vars();
        if (0..n).any(|j| self.lo[j] > self.hi[j]) {
            return self.result(LpStatus::Infeasible, vec![0.0; n], 0, false);
        }
        let start = match self.warm.take() {
            Some(t) if t.pivots < REFACTOR_EVERY => t,
            Some(t) => Tableau::reinvert(self, &t.status),
            None => Tableau::slack(self),
        };
        let (mut out, mut t, mut iters) = self.run_float(start);
        let mut x = t.structural_values();
        let suspicious = match out {
            Outcome::Optimal => !self.feasible(&x),
            _ => true,
        };
        if suspicious {
            let (o2, t2, i2) = self.run_float(Tableau::reinvert(self, &t.status));
            out = o2;
            t = t2;
            iters += i2;
            x = t.structural_values();
        }
        self.stats.pivots += iters;
        match out {
            Outcome::Optimal if self.feasible(&x) => {
                let status = if t.at_guard() {
                    LpStatus::Unbounded
                } else {
                    LpStatus::Optimal
                };
                self.warm = Some(t);
                self.result(status, x, iters, false)
            }
            Outcome::Infeasible => {
                self.warm = Some(t);
                self.result(LpStatus::Infeasible, x, iters, false)
            }
            _ => {
                let status = t.status.clone();
                self.warm = None;
                self.solve_exact(&status, iters)
            }
        }
    }

    fn solve_exact(&mut self, status: &[Status], iters: usize) -> LpResult {
        self.stats.exact_retries += 1;
        log::debug!("lp: exact retry with {} rows", self.rows.len());
        let mut t: Tableau<Rat> = Tableau::reinvert(self, status);
        let out = t.dual_simplex(usize::MAX, true);
        let x = t.structural_values();
        let st = match out {
            Outcome::Optimal if t.at_guard() => LpStatus::Unbounded,
            Outcome::Optimal => LpStatus::Optimal,
            _ => LpStatus::Infeasible,
        };
        self.result(st, x, iters + t.pivots, true)
    }

    /// Solves from the slack basis without touching the stored warm start.
    pub fn solve_cold(&self) -> LpResult {
        let mut copy = self.clone();
        copy.warm = None;
        copy.solve()
    }

    /// CPLEX LP-format rendering.
    pub fn write_lp(&self) -> String {
        let mut s = String::from("Minimize\n obj:");
        let term = |s: &mut String, a: f64, j: usize, names: &[String]| {
            let sign = if a < 0.0 { '-' } else { '+' };
            let _ = write!(s, " {sign} {} {}", a.abs(), names[j]);
        };
        for (j, &c) in self.cost.iter().enumerate() {
            if c != 0.0 {
                term(&mut s, c, j, &self.names);
            }
        }
        s.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(s, " r{i}:");
            for &(j, a) in &r.coeffs {
                term(&mut s, a, j, &self.names);
            }
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", r.rhs);
        }
        s.push_str("Bounds\n");
        for j in 0..self.n_vars() {
            let lo = if self.lo[j].is_finite() {
                self.lo[j].to_string()
            } else {
                "-inf".into()
            };
            let hi = if self.hi[j].is_finite() {
                self.hi[j].to_string()
            } else {
                "+inf".into()
            };
            let _ = writeln!(s, " {lo} <= {} <= {hi}", self.names[j]);
        }
        s.push_str("End\n");
        s
    }
}
