//! Classical recourse over scenarios, failure counting, disaggregations and lower bounds.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cuts::PartialRoute;
use crate::error::{Error, Result};
use crate::instance::{DirectedRoute, Instance, Route};
use crate::rational::{ceil_div, floor_div, int, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    D1,
    D2,
}

/// How Q(R) is split over the customers of R.
#[derive(Debug, Clone, PartialEq)]
pub enum Disaggregation {
    D1,
    D2,
    Generic(HashMap<Route, BTreeMap<usize, Rat>>),
}

impl From<Mode> for Disaggregation {
    fn from(m: Mode) -> Self {
        match m {
            Mode::D1 => Disaggregation::D1,
            Mode::D2 => Disaggregation::D2,
        }
    }
}

/// Failure counts per position of a directed route under one scenario.
pub type FailureProfile = Vec<u32>;

fn ceil_i(a: i128, b: i128) -> i128 {
    debug_assert!(a >= 0 && b > 0);
    (a + b - 1) / b
}

/// Failures observed while serving `load` after `alpha` was already delivered, capacity `cap`.
pub fn fail_count(alpha: &Rat, load: &Rat, cap: &Rat) -> u64 {
    let v = if alpha.is_zero() {
        let k: BigInt = ceil_div(load, cap) - 1;
        if k.is_negative() {
            BigInt::zero()
        } else {
            k
        }
    } else {
        let r = alpha - cap * Rat::from_integer(floor_div(alpha, cap));
        ceil_div(&(&r + load), cap) - ceil_div(&r, cap)
    };
    v.to_u64().expect("failure count fits u64")
}

/// Integer-unit version of [`fail_count`].
pub(crate) fn fail_scaled(alpha: i128, load: i128, cap: i128) -> i128 {
    if alpha == 0 {
        (ceil_i(load, cap) - 1).max(0)
    } else {
        let r = alpha.rem_euclid(cap);
        ceil_i(r + load, cap) - ceil_i(r, cap)
    }
}

/// fail_ξ(α, S).
pub fn fail(alpha: &Rat, set: &[usize], xi: usize, inst: &Instance) -> u64 {
    let load: Rat = set.iter().map(|&v| inst.scenarios().demand(xi, v)).sum();
    fail_count(alpha, &load, inst.capacity())
}

/// Number of t ≥ 1 with tC < P.
fn crossings(p: i128, cap: i128) -> i128 {
    if p <= 0 {
        0
    } else {
        ceil_i(p, cap) - 1
    }
}

pub fn failures_per_customer(r: &DirectedRoute, xi: usize, inst: &Instance) -> FailureProfile {
    let cap = inst.scaled_capacity();
    let mut prev = 0i128;
    r.customers()
        .iter()
        .map(|&v| {
            let next = prev + inst.scaled_demand(xi, v);
            let f = crossings(next, cap) - crossings(prev, cap);
            prev = next;
            f as u32
        })
        .collect()
}

/// Σ_ξ p_ξ-weighted failures per position, in units of the instance probability weight.
fn weighted_failures(seq: &[usize], inst: &Instance) -> Vec<i128> {
    let cap = inst.scaled_capacity();
    let mut out = vec![0i128; seq.len()];
    for xi in 0..inst.scenarios().len() {
        let w = inst.prob_weight(xi);
        if w == 0 {
            continue;
        }
        let mut prev = 0i128;
        let mut before = 0i128;
        for (j, &v) in seq.iter().enumerate() {
            let next = prev + inst.scaled_demand(xi, v);
            let after = crossings(next, cap);
            out[j] += w * (after - before);
            prev = next;
            before = after;
        }
    }
    out
}

fn per_customer_terms(seq: &[usize], inst: &Instance) -> Vec<Rat> {
    let unit = inst.weight_unit();
    weighted_failures(seq, inst)
        .into_iter()
        .zip(seq)
        .map(|(w, &v)| {
            if w == 0 {
                Rat::zero()
            } else {
                int(2) * inst.cost(0, v) * Rat::from_integer(BigInt::from(w)) * unit
            }
        })
        .collect()
}

/// Q_C(R⃗) = Σ_ξ p_ξ Σ_j 2c_{0v_j}·failures_j.
pub fn q_classical_directed(r: &DirectedRoute, inst: &Instance) -> Rat {
    per_customer_terms(r.customers(), inst).into_iter().sum()
}

/// Q_C(R) with the orientation attaining it; ties go to the stored (smaller-first) orientation.
pub fn q_classical(r: &Route, inst: &Instance) -> (Rat, DirectedRoute) {
    let f = r.forward();
    let b = r.backward();
    let qf = q_classical_directed(&f, inst);
    let qb = q_classical_directed(&b, inst);
    if qb < qf {
        (qb, b)
    } else {
        (qf, f)
    }
}

/// Q_C summed over the routes of a plan.
pub fn q_plan(routes: &[Route], inst: &Instance) -> Rat {
    routes.iter().map(|r| q_classical(r, inst).0).sum()
}

pub fn disaggregate(r: &Route, mode: &Disaggregation, inst: &Instance) -> BTreeMap<usize, Rat> {
    let mut out: BTreeMap<usize, Rat> = r.customers().iter().map(|&v| (v, Rat::zero())).collect();
    match mode {
        Disaggregation::D1 => {
            let (q, _) = q_classical(r, inst);
            out.insert(r.min_customer(), q);
        }
        Disaggregation::D2 => {
            let (_, dir) = q_classical(r, inst);
            for (&v, t) in dir
                .customers()
                .iter()
                .zip(per_customer_terms(dir.customers(), inst))
            {
                out.insert(v, t);
            }
        }
        Disaggregation::Generic(table) => {
            if let Some(m) = table.get(r) {
                for (&v, q) in m {
                    out.insert(v, q.clone());
                }
            }
        }
    }
    out
}

/// Customers of `set` sorted by (c_{0v}, v).
fn by_depot_cost(set: &[usize], inst: &Instance) -> Vec<usize> {
    let mut s = set.to_vec();
    s.sort_by(|&a, &b| inst.cost(0, a).cmp(inst.cost(0, b)).then(a.cmp(&b)));
    s
}

/// Prefix sums of 2c_{0v} over customers in depot-cost order.
fn cost_prefix(set: &[usize], inst: &Instance) -> Vec<Rat> {
    let mut p = Vec::with_capacity(set.len() + 1);
    p.push(Rat::zero());
    for &v in &by_depot_cost(set, inst) {
        let last = p.last().unwrap().clone();
        p.push(last + int(2) * inst.cost(0, v));
    }
    p
}

fn lb_count(fails: i128, nu: usize, size: usize) -> usize {
    (fails - nu as i128 + 1).clamp(0, size as i128) as usize
}

/// L^ν_ξ(α, S): twice the depot costs of the fail(α,S,ξ) − ν + 1 cheapest customers of S.
pub fn lb_nu(alpha: &Rat, set: &[usize], nu: usize, xi: usize, inst: &Instance) -> Rat {
    assert!(nu >= 1);
    let f = fail(alpha, set, xi, inst) as i128;
    cost_prefix(set, inst)[lb_count(f, nu, set.len())].clone()
}

fn scaled_load(set: &[usize], xi: usize, inst: &Instance) -> i128 {
    set.iter().map(|&v| inst.scaled_demand(xi, v)).sum()
}

fn directed_pr_lb(sets: &[&Vec<usize>], prefixes: &[&Vec<Rat>], inst: &Instance) -> Rat {
    let cap = inst.scaled_capacity();
    // counts[j][m] = Σ of weights of scenarios where m customers of S_j are charged
    let mut counts: Vec<Vec<i128>> = sets.iter().map(|s| vec![0; s.len() + 1]).collect();
    for xi in 0..inst.scenarios().len() {
        let w = inst.prob_weight(xi);
        let mut alpha = 0i128;
        for (j, s) in sets.iter().enumerate() {
            let load = scaled_load(s, xi, inst);
            let f = fail_scaled(alpha, load, cap);
            counts[j][lb_count(f, 1, s.len())] += w;
            alpha += load;
        }
    }
    let mut total = Rat::zero();
    for (j, row) in counts.iter().enumerate() {
        for (m, &c) in row.iter().enumerate() {
            if m > 0 && c > 0 {
                total += &prefixes[j][m] * Rat::from_integer(BigInt::from(c));
            }
        }
    }
    total * inst.weight_unit()
}

/// L_C(H) = min of the forward and backward partial-route bounds.
pub fn partial_route_lb(h: &PartialRoute, inst: &Instance) -> Rat {
    let prefixes: Vec<Vec<Rat>> = h.sets().iter().map(|s| cost_prefix(s, inst)).collect();
    let fwd_sets: Vec<&Vec<usize>> = h.sets().iter().collect();
    let fwd_pre: Vec<&Vec<Rat>> = prefixes.iter().collect();
    let bwd_sets: Vec<&Vec<usize>> = fwd_sets.iter().rev().copied().collect();
    let bwd_pre: Vec<&Vec<Rat>> = fwd_pre.iter().rev().copied().collect();
    let f = directed_pr_lb(&fwd_sets, &fwd_pre, inst);
    let b = directed_pr_lb(&bwd_sets, &bwd_pre, inst);
    f.min(b)
}

/// L_C(S, k̃) = Σ_ξ p_ξ L^k̃_ξ(0, S).
pub fn set_lb(set: &[usize], k_tilde: usize, inst: &Instance) -> Rat {
    assert!(k_tilde >= 1);
    let cap = inst.scaled_capacity();
    let prefix = cost_prefix(set, inst);
    let mut counts = vec![0i128; set.len() + 1];
    for xi in 0..inst.scenarios().len() {
        let f = fail_scaled(0, scaled_load(set, xi, inst), cap);
        counts[lb_count(f, k_tilde, set.len())] += inst.prob_weight(xi);
    }
    let mut total = Rat::zero();
    for (m, &c) in counts.iter().enumerate() {
        if m > 0 && c > 0 {
            total += &prefix[m] * Rat::from_integer(BigInt::from(c));
        }
    }
    total * inst.weight_unit()
}

/// Per-position values for route `r` built by the superadditive disaggregation procedure.
///
/// Returns values aligned with `r`. The total equals Q(r) whenever `q` is weakly
/// superadditive on `r`.
pub fn get_disaggregation(r: &[usize], q: &dyn Fn(&[usize]) -> Rat) -> Vec<Rat> {
    let l = r.len();
    let mut qhat = vec![Rat::zero(); l];
    // collections[b] = disjoint subroutes (as index intervals) accounting for qhat[..b]
    let mut collections: Vec<Vec<(usize, usize)>> = vec![Vec::new(); l + 1];
    for b in 0..l {
        let mut best: Option<(usize, Rat)> = None;
        let mut assigned = Rat::zero();
        for a in (0..=b).rev() {
            assigned += &qhat[a];
            let delta = q(&r[a..=b]) - &assigned;
            let better = match &best {
                None => true,
                Some((_, d)) => delta >= *d,
            };
            if better {
                best = Some((a, delta));
            }
        }
        let (a, delta) = best.expect("nonempty range");
        if delta.is_positive() {
            qhat[b] = delta;
            let mut c = collections[a].clone();
            c.push((a, b));
            collections[b + 1] = c;
        } else {
            collections[b + 1] = collections[b].clone();
        }
        debug_assert_eq!(
            qhat[..=b].iter().sum::<Rat>(),
            collections[b + 1]
                .iter()
                .map(|&(i, j)| q(&r[i..=j]))
                .sum::<Rat>()
        );
    }
    let total: Rat = qhat.iter().sum();
    let delta_r = q(r) - total;
    if delta_r.is_positive() {
        qhat[0] += delta_r;
    }
    qhat
}

/// True iff Q(r) ≥ Σ Q(R_i) for every family of disjoint subroutes of r.
pub fn check_weak_superadditivity(q: &dyn Fn(&[usize]) -> Rat, r: &[usize]) -> Result<bool> {
    let l = r.len();
    if l > 12 {
        return Err(Error::TooLarge {
            what: "route",
            size: l,
            limit: 12,
        });
    }
    let mut memo = vec![vec![Rat::zero(); l]; l];
    for a in 0..l {
        for b in a..l {
            let v = q(&r[a..=b]);
            // an unselected interval contributes nothing
            memo[a][b] = if v.is_positive() { v } else { Rat::zero() };
        }
    }
    let whole = q(r);
    // each mask bit marks a cut between consecutive positions
    for mask in 0u32..(1u32 << (l.saturating_sub(1))) {
        let mut total = Rat::zero();
        let mut start = 0;
        for i in 0..l {
            if i == l - 1 || mask & (1 << i) != 0 {
                total += &memo[start][i];
                start = i + 1;
            }
        }
        if total > whole {
            return Ok(false);
        }
    }
    Ok(true)
}
