//! Dense bounded-variable tableau with a dual simplex driver.
//!
//! Every row `i` carries a logical column `s_i = a_i·x`; the tableau stores
//! `B⁻¹[−A | I]`, so a basic variable's value is `−Σ_{j∈N} T[i][j] x_j`.

use super::scalar::Scalar;
use super::{LpModel, Sense};

/// Stand-in magnitude for infinite bounds of nonbasic variables.
pub(crate) const GUARD: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Basic,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau<S> {
    n_struct: usize,
    rows: Vec<Vec<S>>,
    basis: Vec<usize>,
    pub(crate) status: Vec<Status>,
    lo: Vec<S>,
    hi: Vec<S>,
    cost: Vec<S>,
    d: Vec<S>,
    x: Vec<S>,
    pub(crate) pivots: usize,
}

fn guarded(v: f64) -> f64 {
    v.clamp(-GUARD, GUARD)
}

fn row_bounds(sense: Sense, rhs: f64) -> (f64, f64) {
    match sense {
        Sense::Le => (f64::NEG_INFINITY, rhs),
        Sense::Ge => (rhs, f64::INFINITY),
        Sense::Eq => (rhs, rhs),
    }
}

impl<S: Scalar> Tableau<S> {
    /// Slack basis: all logicals basic, structurals at the bound their cost prefers.
    pub(crate) fn slack(model: &LpModel) -> Self {
        let n = model.n_vars();
        let m = model.rows.len();
        let ncol = n + m;
        let mut rows = Vec::with_capacity(m);
        for (i, r) in model.rows.iter().enumerate() {
            let mut t = vec![S::zero(); ncol];
            for &(j, a) in &r.coeffs {
                t[j] = t[j].sub(&S::from_f64(a));
            }
            t[n + i] = S::from_f64(1.0);
            rows.push(t);
        }
        let mut lo: Vec<S> = model.lo.iter().map(|&v| S::from_f64(guarded(v))).collect();
        let mut hi: Vec<S> = model.hi.iter().map(|&v| S::from_f64(guarded(v))).collect();
        for r in &model.rows {
            let (a, b) = row_bounds(r.sense, r.rhs);
            lo.push(S::from_f64(guarded(a)));
            hi.push(S::from_f64(guarded(b)));
        }
        let mut cost: Vec<S> = model.cost.iter().map(|&c| S::from_f64(c)).collect();
        cost.resize(ncol, S::zero());
        let mut status = vec![Status::Lower; n];
        for j in 0..n {
            if model.cost[j] < 0.0 {
                status[j] = Status::Upper;
            }
        }
        status.extend(std::iter::repeat_n(Status::Basic, m));
        let mut t = Self {
            n_struct: n,
            rows,
            basis: (n..n + m).collect(),
            status,
            lo,
            hi,
            cost,
            d: Vec::new(),
            x: Vec::new(),
            pivots: 0,
        };
        t.compute_duals();
        t
    }

    /// Fresh tableau for `model` with the given column statuses pivoted into the basis.
    pub(crate) fn reinvert(model: &LpModel, status: &[Status]) -> Self {
        let mut t = Self::slack(model);
        let n = t.n_struct;
        let m = t.rows.len();
        let wanted: Vec<bool> = (0..n + m)
            .map(|j| status.get(j) == Some(&Status::Basic))
            .collect();
        for q in 0..n + m {
            if !wanted[q] || t.status[q] == Status::Basic {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for r in 0..m {
                let b = t.basis[r];
                if wanted[b] {
                    continue;
                }
                let v = t.rows[r][q].abs().to_f64();
                if v > S::PIVOT_TOL.max(1e-12) && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((r, v));
                }
            }
            if let Some((r, _)) = best {
                t.pivot(r, q);
            }
        }
        for j in 0..(n + m).min(status.len()) {
            if t.status[j] != Status::Basic && status[j] != Status::Basic {
                t.status[j] = status[j];
            }
        }
        t.compute_duals();
        t.pivots = 0;
        t
    }

    /// Appends a row `a·x (sense) rhs`, expressed in the current basis with its logical basic.
    pub(crate) fn add_row(&mut self, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) {
        let ncol = self.status.len() + 1;
        for r in &mut self.rows {
            r.push(S::zero());
        }
        let mut t = vec![S::zero(); ncol];
        for &(j, a) in coeffs {
            t[j] = t[j].sub(&S::from_f64(a));
        }
        t[ncol - 1] = S::from_f64(1.0);
        for (i, &b) in self.basis.iter().enumerate() {
            if !t[b].is_zero() {
                let f = t[b].clone();
                let src = &self.rows[i];
                for (tj, sj) in t.iter_mut().zip(src) {
                    tj.sub_mul(&f, sj);
                }
            }
        }
        let (a, b) = row_bounds(sense, rhs);
        self.lo.push(S::from_f64(guarded(a)));
        self.hi.push(S::from_f64(guarded(b)));
        self.cost.push(S::zero());
        self.d.push(S::zero());
        self.status.push(Status::Basic);
        self.basis.push(ncol - 1);
        self.rows.push(t);
    }

    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = S::from_f64(guarded(lo));
        self.hi[j] = S::from_f64(guarded(hi));
    }

    fn compute_duals(&mut self) {
        let ncol = self.status.len();
        let mut d = self.cost.clone();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (dj, tj) in d.iter_mut().zip(&self.rows[i]) {
                dj.sub_mul(&cb, tj);
            }
        }
        d.truncate(ncol);
        self.d = d;
    }

    fn value_of_nonbasic(&self, j: usize) -> S {
        match self.status[j] {
            Status::Upper => self.hi[j].clone(),
            _ => self.lo[j].clone(),
        }
    }

    fn compute_values(&mut self) {
        let ncol = self.status.len();
        let mut x = vec![S::zero(); ncol];
        let mut active = Vec::new();
        for (j, xj) in x.iter_mut().enumerate() {
            if self.status[j] != Status::Basic {
                *xj = self.value_of_nonbasic(j);
                if !xj.is_zero() {
                    active.push(j);
                }
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let mut v = S::zero();
            let row = &self.rows[i];
            for &j in &active {
                v.sub_mul(&row[j], &x[j]);
            }
            x[b] = v;
        }
        self.x = x;
    }

    /// Flips nonbasic boxed variables whose reduced cost has the wrong sign.
    fn restore_dual_feasibility(&mut self) {
        let tol = S::DUAL_TOL;
        for j in 0..self.status.len() {
            let dj = self.d[j].to_f64();
            match self.status[j] {
                Status::Lower if dj < -tol && (S::DUAL_TOL > 0.0 || self.d[j] < S::zero()) => {
                    self.status[j] = Status::Upper
                }
                Status::Upper if dj > tol && (S::DUAL_TOL > 0.0 || self.d[j] > S::zero()) => {
                    self.status[j] = Status::Lower
                }
                _ => {}
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let p = self.rows[r][q].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.div(&p);
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let nz: Vec<usize> = pivot_row
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(j, _)| j)
            .collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[q].is_zero() {
                continue;
            }
            let f = row[q].clone();
            for &j in &nz {
                row[j].sub_mul(&f, &pivot_row[j]);
            }
            row[q] = S::zero();
        }
        if !self.d.is_empty() && !self.d[q].is_zero() {
            let f = self.d[q].clone();
            for &j in &nz {
                self.d[j].sub_mul(&f, &pivot_row[j]);
            }
            self.d[q] = S::zero();
        }
        self.rows[r] = pivot_row;
        let leaving = self.basis[r];
        self.status[leaving] = Status::Lower;
        self.basis[r] = q;
        self.status[q] = Status::Basic;
        self.pivots += 1;
    }

    fn below(a: &S, b: &S) -> bool {
        if S::FEAS_TOL == 0.0 {
            a < b
        } else {
            a.to_f64() < b.to_f64() - S::FEAS_TOL * (1.0 + b.to_f64().abs())
        }
    }

    pub(crate) fn dual_simplex(&mut self, max_iter: usize, start_bland: bool) -> Outcome {
        self.restore_dual_feasibility();
        let mut bland = start_bland;
        let mut streak = 0usize;
        for _ in 0..max_iter {
            self.compute_values();
            // leaving row
            let mut leave: Option<(usize, bool, f64)> = None;
            for (i, &b) in self.basis.iter().enumerate() {
                let xb = &self.x[b];
                let (viol, up) = if Self::below(xb, &self.lo[b]) {
                    (self.lo[b].sub(xb).to_f64(), true)
                } else if Self::below(&self.hi[b], xb) {
                    (xb.sub(&self.hi[b]).to_f64(), false)
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((li, _, lv)) => {
                        if bland {
                            b < self.basis[li]
                        } else {
                            viol > lv
                        }
                    }
                };
                if better {
                    leave = Some((i, up, viol));
                }
            }
            let Some((r, up, _)) = leave else {
                return Outcome::Optimal;
            };
            // entering column
            let row = &self.rows[r];
            let mut enter: Option<(usize, S, f64)> = None;
            for j in 0..self.status.len() {
                let st = self.status[j];
                if st == Status::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let a = &row[j];
                let af = a.to_f64();
                if a.is_zero() || af.abs() <= S::PIVOT_TOL {
                    continue;
                }
                let positive = *a > S::zero();
                // x_B(r) moves by −a·Δ; Lower allows Δ > 0, Upper allows Δ < 0
                let ok = match (up, st) {
                    (true, Status::Lower) => !positive,
                    (true, Status::Upper) => positive,
                    (false, Status::Lower) => positive,
                    (false, Status::Upper) => !positive,
                    _ => false,
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs().div(&a.abs());
                let better = match &enter {
                    None => true,
                    Some((_, best, best_mag)) => {
                        if S::FEAS_TOL == 0.0 {
                            ratio < *best
                        } else {
                            let (rf, bf) = (ratio.to_f64(), best.to_f64());
                            if rf < bf - 1e-12 {
                                true
                            } else if rf <= bf + 1e-12 {
                                !bland && af.abs() > *best_mag
                            } else {
                                false
                            }
                        }
                    }
                };
                if better {
                    enter = Some((j, ratio, af.abs()));
                }
            }
            let Some((q, ratio, _)) = enter else {
                return Outcome::Infeasible;
            };
            if ratio.to_f64() <= 1e-12 {
                streak += 1;
                if streak > 50 {
                    bland = true;
                }
            } else {
                streak = 0;
            }
            let leaving = self.basis[r];
            self.pivot(r, q);
            self.status[leaving] = if up { Status::Lower } else { Status::Upper };
        }
        Outcome::IterationLimit
    }

    /// Current values of all structural variables.
    pub(crate) fn structural_values(&mut self) -> Vec<f64> {
        self.compute_values();
        self.x[..self.n_struct].iter().map(|v| v.to_f64()).collect()
    }

    /// True when some nonbasic variable sits at a guard bound.
    pub(crate) fn at_guard(&self) -> bool {
        (0..self.status.len()).any(|j| {
            self.status[j] != Status::Basic && self.value_of_nonbasic(j).to_f64().abs() >= GUARD
        })
    }
}
