//! Brute-force ground truth for desk-scale instances.

use num_traits::ToPrimitive;

use crate::cuts::PartialRoute;
use crate::error::{Error, Result};
use crate::instance::{Instance, Route, RoutingPlan};
use crate::rational::Rat;
use crate::recourse::q_classical;

pub const MAX_ORACLE_N: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orderings {
    All,
    One,
}

fn guard(n: usize) -> Result<()> {
    if n > MAX_ORACLE_N {
        return Err(Error::TooLarge {
            what: "instance",
            size: n,
            limit: MAX_ORACLE_N,
        });
    }
    Ok(())
}

/// Calls `f` for every permutation of `items` (Heap's algorithm).
pub fn for_each_permutation(items: &[usize], f: &mut dyn FnMut(&[usize])) {
    let mut a = items.to_vec();
    let n = a.len();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Every undirected route on exactly the customers of `set`, once each.
pub fn for_each_route_on(set: &[usize], f: &mut dyn FnMut(&[usize])) {
    if set.len() == 1 {
        f(set);
        return;
    }
    for_each_permutation(set, &mut |p| {
        if p[0] < p[p.len() - 1] {
            f(p);
        }
    });
}

fn partitions(
    rest: &mut Vec<usize>,
    blocks: &mut Vec<Vec<usize>>,
    k: Option<usize>,
    f: &mut dyn FnMut(&[Vec<usize>]),
) {
    if rest.is_empty() {
        if k.is_none_or(|k| blocks.len() == k) {
            f(blocks);
        }
        return;
    }
    if let Some(k) = k {
        if blocks.len() > k {
            return;
        }
    }
    let v = rest.remove(0);
    for b in 0..blocks.len() {
        blocks[b].push(v);
        partitions(rest, blocks, k, f);
        blocks[b].pop();
    }
    if k.is_none_or(|k| blocks.len() < k) {
        blocks.push(vec![v]);
        partitions(rest, blocks, k, f);
        blocks.pop();
    }
    rest.insert(0, v);
}

fn routes_over(blocks: &[Vec<usize>], acc: &mut Vec<Route>, f: &mut dyn FnMut(&[Route])) {
    if acc.len() == blocks.len() {
        f(acc);
        return;
    }
    let block = blocks[acc.len()].clone();
    for_each_route_on(&block, &mut |seq| {
        acc.push(Route::new(seq.to_vec()));
        routes_over(blocks, acc, f);
        acc.pop();
    });
}

/// Every routing plan on customers `1..=n`, optionally with exactly `k` routes; no capacity filter.
pub fn visit_all_plans(n: usize, k: Option<usize>, f: &mut dyn FnMut(&[Route])) -> Result<()> {
    guard(n)?;
    let mut rest: Vec<usize> = (1..=n).collect();
    partitions(&mut rest, &mut Vec::new(), k, &mut |blocks| {
        routes_over(blocks, &mut Vec::new(), f);
    });
    Ok(())
}

/// Feasible plans: exactly k routes, each with d̄(R) ≤ C.
pub fn visit_plans(inst: &Instance, f: &mut dyn FnMut(&[Route])) -> Result<()> {
    guard(inst.n())?;
    let mut rest: Vec<usize> = inst.customers().collect();
    partitions(
        &mut rest,
        &mut Vec::new(),
        Some(inst.fleet()),
        &mut |blocks| {
            if blocks
                .iter()
                .all(|b| inst.mean_demand_of(b) <= *inst.capacity())
            {
                routes_over(blocks, &mut Vec::new(), f);
            }
        },
    );
    Ok(())
}

pub fn enumerate_plans(inst: &Instance) -> Result<Vec<RoutingPlan>> {
    let mut out = Vec::new();
    visit_plans(inst, &mut |routes| {
        out.push(RoutingPlan::new(routes.to_vec()))
    })?;
    Ok(out)
}

/// Minimum of Σ_R [c(R) + Q_C(R)] plus the objective offset; `None` when no plan is feasible.
pub fn brute_force_optimum(inst: &Instance) -> Result<Option<(Rat, RoutingPlan)>> {
    let n = inst.n();
    guard(n)?;
    let full = (1usize << n) - 1;
    let members = |mask: usize| -> Vec<usize> {
        (0..n)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| b + 1)
            .collect()
    };
    // best single route per customer subset
    let mut best: Vec<Option<(Rat, Vec<usize>)>> = vec![None; full + 1];
    for (mask, slot) in best.iter_mut().enumerate().skip(1) {
        let set = members(mask);
        if inst.mean_demand_of(&set) > *inst.capacity() {
            continue;
        }
        for_each_route_on(&set, &mut |seq| {
            let r = Route::new(seq.to_vec());
            let v = inst.route_cost(seq) + q_classical(&r, inst).0;
            if slot.as_ref().is_none_or(|(b, _)| v < *b) {
                *slot = Some((v, seq.to_vec()));
            }
        });
    }
    // dp[j][mask]: cheapest cover of mask by j routes, each split anchored at the lowest customer
    let k = inst.fleet();
    if k > n {
        return Ok(None);
    }
    let mut dp: Vec<Vec<Option<(Rat, usize)>>> = vec![vec![None; full + 1]; k + 1];
    dp[0][0] = Some((Rat::from_integer(0.into()), 0));
    for j in 1..=k {
        for mask in 1..=full {
            let low = mask & mask.wrapping_neg();
            let mut sub = mask;
            let mut cur: Option<(Rat, usize)> = None;
            while sub > 0 {
                if sub & low != 0 {
                    if let (Some((r, _)), Some((prev, _))) = (&best[sub], &dp[j - 1][mask ^ sub]) {
                        let v = r + prev;
                        if cur.as_ref().is_none_or(|(c, _)| v < *c) {
                            cur = Some((v, sub));
                        }
                    }
                }
                sub = (sub - 1) & mask;
            }
            dp[j][mask] = cur;
        }
    }
    let Some((value, _)) = dp[k][full].clone() else {
        return Ok(None);
    };
    let mut routes = Vec::new();
    let mut mask = full;
    for j in (1..=k).rev() {
        let (_, sub) = dp[j][mask].clone().expect("reconstructible");
        routes.push(Route::new(best[sub].clone().unwrap().1));
        mask ^= sub;
    }
    Ok(Some((
        value + inst.objective_offset(),
        RoutingPlan::new(routes),
    )))
}

/// Direct indicator sum Σ_j Σ_t 1(α + Σ_{i<j} d_i ≤ tC < α + Σ_{i≤j} d_i).
pub fn brute_force_fail_raw(alpha: &Rat, demands: &[Rat], cap: &Rat, orderings: Orderings) -> u64 {
    let total: Rat = demands.iter().sum();
    let t_max = ((alpha + &total) / cap)
        .ceil()
        .to_integer()
        .to_u64()
        .unwrap_or(0);
    let count = |order: &[usize]| -> u64 {
        let mut c = 0;
        let mut lo = alpha.clone();
        for &i in order {
            let hi = &lo + &demands[i];
            for t in 1..=t_max {
                let tc = cap * Rat::from_integer(t.into());
                if lo <= tc && tc < hi {
                    c += 1;
                }
            }
            lo = hi;
        }
        c
    };
    let idx: Vec<usize> = (0..demands.len()).collect();
    let first = count(&idx);
    if orderings == Orderings::All {
        for_each_permutation(&idx, &mut |p| {
            assert_eq!(
                count(p),
                first,
                "failure count depends on the visiting order"
            );
        });
    }
    first
}

pub fn brute_force_fail(
    alpha: &Rat,
    set: &[usize],
    xi: usize,
    inst: &Instance,
    orderings: Orderings,
) -> Result<u64> {
    if set.len() > 10 {
        return Err(Error::TooLarge {
            what: "set",
            size: set.len(),
            limit: 10,
        });
    }
    let d: Vec<Rat> = set
        .iter()
        .map(|&v| inst.scenarios().demand(xi, v).clone())
        .collect();
    Ok(brute_force_fail_raw(alpha, &d, inst.capacity(), orderings))
}

/// All contiguous subroutes of `seq` as index ranges `(a, b)` inclusive.
pub fn subroutes(len: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len).flat_map(move |a| (a..len).map(move |b| (a, b)))
}

/// Every route exactly adhering to `h`.
pub fn routes_exactly_adhering(h: &PartialRoute, f: &mut dyn FnMut(&Route)) {
    fn rec(sets: &[Vec<usize>], acc: &mut Vec<usize>, f: &mut dyn FnMut(&Route)) {
        let Some((first, rest)) = sets.split_first() else {
            f(&Route::new(acc.clone()));
            return;
        };
        for_each_permutation(first, &mut |p| {
            let keep = acc.len();
            acc.extend_from_slice(p);
            rec(rest, acc, f);
            acc.truncate(keep);
        });
    }
    rec(h.sets(), &mut Vec::new(), f);
}
