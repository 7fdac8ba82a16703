//! Rounded capacity inequality separation.

use std::collections::{BTreeSet, VecDeque};

use crate::instance::{EdgeVector, Instance};

use super::forest::SUPPORT_EPS;

pub const RCI_TOL: f64 = 1e-7;
const MAX_SETS: usize = 64;

/// x̄(S) − |S| + k̄(S); positive when the RCI on S is violated.
pub fn rci_violation(x: &EdgeVector, set: &[usize], inst: &Instance) -> f64 {
    let k = inst.rci_rhs(set).unwrap_or(1);
    x.inside(set) - set.len() as f64 + k as f64
}

/// Connected components of the support graph after removing the depot.
pub fn customer_components(x: &EdgeVector) -> Vec<Vec<usize>> {
    let n = x.n();
    let mut adj = vec![Vec::new(); n + 1];
    for (i, j, _) in x.support(SUPPORT_EPS) {
        if i != 0 {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut seen = vec![false; n + 1];
    let mut out = Vec::new();
    for s in 1..=n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Source side of a minimum v–depot cut, with its value.
fn min_cut_to_depot(x: &EdgeVector, source: usize) -> (f64, Vec<usize>) {
    let n = x.n();
    let m = n + 1;
    let mut cap = vec![vec![0.0; m]; m];
    for (i, j, v) in x.support(SUPPORT_EPS) {
        cap[i][j] = v;
        cap[j][i] = v;
    }
    let mut flow_value = 0.0;
    loop {
        let mut parent = vec![usize::MAX; m];
        parent[source] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            if u == 0 {
                break;
            }
            for w in 0..m {
                if parent[w] == usize::MAX && cap[u][w] > 1e-12 {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        if parent[0] == usize::MAX {
            let side: Vec<usize> = (1..m).filter(|&v| parent[v] != usize::MAX).collect();
            return (flow_value, side);
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = 0;
        while v != source {
            let u = parent[v];
            bottleneck = bottleneck.min(cap[u][v]);
            v = u;
        }
        let mut v = 0;
        while v != source {
            let u = parent[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            v = u;
        }
        flow_value += bottleneck;
        if flow_value >= 2.0 {
            return (flow_value, Vec::new());
        }
    }
}

/// Grows `seed` one customer at a time, always adding the one most connected to the set.
fn grow(x: &EdgeVector, seed: &[usize], inst: &Instance, found: &mut BTreeSet<Vec<usize>>) {
    let n = x.n();
    let mut set: Vec<usize> = seed.to_vec();
    let mut inside = vec![false; n + 1];
    for &v in &set {
        inside[v] = true;
    }
    let mut link = vec![0.0; n + 1];
    for u in 1..=n {
        if !inside[u] {
            link[u] = set.iter().map(|&v| x.get(u, v)).sum();
        }
    }
    while set.len() < n {
        let best = (1..=n)
            .filter(|&u| !inside[u])
            .max_by(|&a, &b| link[a].total_cmp(&link[b]).then(b.cmp(&a)));
        let Some(u) = best else { break };
        if link[u] <= SUPPORT_EPS {
            break;
        }
        inside[u] = true;
        set.push(u);
        for w in 1..=n {
            if !inside[w] {
                link[w] += x.get(u, w);
            }
        }
        let mut sorted = set.clone();
        sorted.sort_unstable();
        if rci_violation(x, &sorted, inst) > RCI_TOL {
            found.insert(sorted);
        }
    }
}

/// Customer sets whose RCI is violated by `x`.
///
/// At integer points every route and subtour is a support component, so checking the
/// components is exact. At fractional points components, minimum depot cuts and greedy
/// growth are tried; every set violating a subtour constraint is found.
pub fn separate_rci(x: &EdgeVector, inst: &Instance, at_integer: bool) -> Vec<Vec<usize>> {
    let mut found = BTreeSet::new();
    let comps = customer_components(x);
    for c in &comps {
        if rci_violation(x, c, inst) > RCI_TOL {
            found.insert(c.clone());
        }
    }
    if at_integer {
        return found.into_iter().collect();
    }
    let n = x.n();
    let mut checked = vec![false; n + 1];
    for v in 1..=n {
        if checked[v] {
            continue;
        }
        let (value, side) = min_cut_to_depot(x, v);
        if value < 2.0 - RCI_TOL && !side.is_empty() {
            for &u in &side {
                checked[u] = true;
            }
            if rci_violation(x, &side, inst) > RCI_TOL {
                found.insert(side);
            }
        }
    }
    for c in &comps {
        grow(x, c, inst, &mut found);
    }
    for v in 1..=n {
        grow(x, &[v], inst, &mut found);
    }
    let mut sets: Vec<Vec<usize>> = found.into_iter().collect();
    if sets.len() > MAX_SETS {
        sets.sort_by(|a, b| {
            rci_violation(x, b, inst)
                .total_cmp(&rci_violation(x, a, inst))
                .then(a.cmp(b))
        });
        sets.truncate(MAX_SETS);
        sets.sort();
    }
    sets
}
