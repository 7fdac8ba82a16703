use crate::instance::{Instance, ScenarioSet};
use crate::rational::{int, Rat};

pub fn rats(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| int(x)).collect()
}

/// Equiprobable scenarios on a line metric: c_ij = |i - j| + 1.
pub fn toy(n: usize, cap: i64, fleet: usize, demands: &[&[i64]]) -> Instance {
    let cost = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| {
                    if i == j {
                        int(0)
                    } else {
                        int((i as i64 - j as i64).abs() + 1)
                    }
                })
                .collect()
        })
        .collect();
    with_costs(cost, cap, fleet, demands)
}

/// Equiprobable scenarios with depot costs `depot[v-1]` and customer costs 1.
pub fn star(depot: &[i64], cap: i64, fleet: usize, demands: &[&[i64]]) -> Instance {
    let n = depot.len();
    let cost = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| match (i, j) {
                    _ if i == j => int(0),
                    (0, v) | (v, 0) => int(depot[v - 1]),
                    _ => int(1),
                })
                .collect()
        })
        .collect();
    with_costs(cost, cap, fleet, demands)
}

pub fn with_costs(cost: Vec<Vec<Rat>>, cap: i64, fleet: usize, demands: &[&[i64]]) -> Instance {
    let probs = vec![Rat::new(1.into(), (demands.len() as i64).into()); demands.len()];
    let s = ScenarioSet::new(probs, demands.iter().map(|d| rats(d)).collect()).unwrap();
    Instance::new(cost, int(cap), fleet, s).unwrap()
}
