//! Instances, routes, plans and edge vectors.

mod generate;
mod json;

pub use generate::{generate_instance, DemandModel, GenParams};
pub use json::{parse_instance, write_instance, ParseOptions};

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{ceil_div, common_denominator, format_rat, int, to_f64, Rat};

/// Index of edge `{i, j}` in the edge list of the complete graph on `0..=n`.
pub fn edge_id(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    debug_assert!(a != b);
    b * (b - 1) / 2 + a
}

pub fn edge_count(n: usize) -> usize {
    (n + 1) * n / 2
}

/// Inverse of [`edge_id`].
pub fn edge_ends(id: usize) -> (usize, usize) {
    let mut b = ((((8 * id + 1) as f64).sqrt() + 1.0) / 2.0) as usize;
    while b * (b - 1) / 2 > id {
        b -= 1;
    }
    while (b + 1) * b / 2 <= id {
        b += 1;
    }
    (id - b * (b - 1) / 2, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    probs: Vec<Rat>,
    /// `demands[xi][v]` for `v` in `0..=n`; entry 0 is the depot and always zero.
    demands: Vec<Vec<Rat>>,
}

impl ScenarioSet {
    /// `demands[xi]` lists the demands of customers `1..=n`.
    pub fn new(probs: Vec<Rat>, demands: Vec<Vec<Rat>>) -> Result<Self> {
        if probs.is_empty() || probs.len() != demands.len() {
            return Err(Error::Malformed(format!(
                "{} probabilities for {} demand vectors",
                probs.len(),
                demands.len()
            )));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::Malformed("negative probability".into()));
        }
        let total: Rat = probs.iter().sum();
        if total != Rat::one() {
            return Err(Error::ProbabilitySum(format_rat(&total)));
        }
        let n = demands[0].len();
        let mut rows = Vec::with_capacity(demands.len());
        for row in demands {
            if row.len() != n {
                return Err(Error::Malformed("ragged demand matrix".into()));
            }
            if row.iter().any(|d| d.is_negative()) {
                return Err(Error::Malformed("negative demand".into()));
            }
            let mut full = Vec::with_capacity(n + 1);
            full.push(Rat::zero());
            full.extend(row);
            rows.push(full);
        }
        Ok(Self {
            probs,
            demands: rows,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, xi: usize) -> &Rat {
        &self.probs[xi]
    }

    pub fn probs(&self) -> &[Rat] {
        &self.probs
    }

    pub fn demand(&self, xi: usize, v: usize) -> &Rat {
        &self.demands[xi][v]
    }

    pub fn n_customers(&self) -> usize {
        self.demands[0].len() - 1
    }
}

/// Demands and capacity scaled to a common integer unit, probabilities to integer weights.
#[derive(Debug, Clone)]
struct Units {
    cap: i128,
    demand: Vec<Vec<i128>>,
    weight: Vec<i128>,
    weight_den: Rat,
}

#[derive(Debug, Clone)]
pub struct Instance {
    n: usize,
    cost: Vec<Vec<Rat>>,
    capacity: Rat,
    fleet: usize,
    scenarios: ScenarioSet,
    objective_offset: Rat,
    mean: Vec<Rat>,
    cost_f: Vec<Vec<f64>>,
    mean_f: Vec<f64>,
    units: Units,
}

impl Instance {
    pub fn new(
        cost: Vec<Vec<Rat>>,
        capacity: Rat,
        fleet: usize,
        scenarios: ScenarioSet,
    ) -> Result<Self> {
        let n = scenarios.n_customers();
        let mean = mean_demands(&scenarios);
        Self::assemble(n, cost, capacity, fleet, scenarios, Rat::zero(), mean)
    }

    fn assemble(
        n: usize,
        cost: Vec<Vec<Rat>>,
        capacity: Rat,
        fleet: usize,
        scenarios: ScenarioSet,
        objective_offset: Rat,
        mean: Vec<Rat>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Malformed("no customers".into()));
        }
        if fleet == 0 {
            return Err(Error::Malformed("fleet must be positive".into()));
        }
        if !capacity.is_positive() {
            return Err(Error::NonPositiveCapacity);
        }
        if cost.len() != n + 1 || cost.iter().any(|r| r.len() != n + 1) {
            return Err(Error::Malformed(format!(
                "cost matrix must be {0}x{0}",
                n + 1
            )));
        }
        for i in 0..=n {
            if !cost[i][i].is_zero() {
                return Err(Error::Malformed("nonzero cost diagonal".into()));
            }
            for j in 0..=n {
                if cost[i][j].is_negative() {
                    return Err(Error::Malformed("negative cost".into()));
                }
                if cost[i][j] != cost[j][i] {
                    return Err(Error::Malformed("asymmetric cost matrix".into()));
                }
            }
        }
        if let Some(v) = (1..=n).find(|&v| !mean[v].is_positive()) {
            return Err(Error::ZeroExpectedDemand(v));
        }
        let units = units(&capacity, &scenarios)?;
        let cost_f = cost
            .iter()
            .map(|r| r.iter().map(to_f64).collect())
            .collect();
        let mean_f = mean.iter().map(to_f64).collect();
        Ok(Self {
            n,
            cost,
            capacity,
            fleet,
            scenarios,
            objective_offset,
            mean,
            cost_f,
            mean_f,
            units,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn customers(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n
    }

    pub fn cost(&self, i: usize, j: usize) -> &Rat {
        &self.cost[i][j]
    }

    pub fn cost_f64(&self, i: usize, j: usize) -> f64 {
        self.cost_f[i][j]
    }

    pub fn cost_matrix(&self) -> &[Vec<Rat>] {
        &self.cost
    }

    pub fn capacity(&self) -> &Rat {
        &self.capacity
    }

    pub fn fleet(&self) -> usize {
        self.fleet
    }

    pub fn scenarios(&self) -> &ScenarioSet {
        &self.scenarios
    }

    pub fn objective_offset(&self) -> &Rat {
        &self.objective_offset
    }

    /// d̄(v); fixed at construction so preprocessing does not alter feasibility.
    pub fn mean_demand(&self, v: usize) -> &Rat {
        &self.mean[v]
    }

    pub fn mean_demand_f64(&self, v: usize) -> f64 {
        self.mean_f[v]
    }

    pub fn mean_demand_of(&self, set: &[usize]) -> Rat {
        set.iter().map(|&v| &self.mean[v]).sum()
    }

    pub fn capacity_f64(&self) -> f64 {
        to_f64(&self.capacity)
    }

    pub fn max_demand_exceeds_capacity(&self) -> bool {
        self.units
            .demand
            .iter()
            .any(|row| row.iter().any(|&d| d > self.units.cap))
    }

    pub(crate) fn scaled_capacity(&self) -> i128 {
        self.units.cap
    }

    pub(crate) fn scaled_demand(&self, xi: usize, v: usize) -> i128 {
        self.units.demand[xi][v]
    }

    /// p_ξ = weight(ξ) · weight_unit.
    pub(crate) fn prob_weight(&self, xi: usize) -> i128 {
        self.units.weight[xi]
    }

    pub(crate) fn weight_unit(&self) -> &Rat {
        &self.units.weight_den
    }

    /// k̄(S) = ⌈d̄(S)/C⌉.
    pub fn rci_rhs(&self, set: &[usize]) -> Result<usize> {
        rci_rhs(set, self)
    }

    pub fn route_cost(&self, route: &[usize]) -> Rat {
        let mut total = Rat::zero();
        let mut prev = 0;
        for &v in route {
            total += &self.cost[prev][v];
            prev = v;
        }
        total + &self.cost[prev][0]
    }

    pub fn with_fleet(&self, fleet: usize) -> Result<Self> {
        Self::assemble(
            self.n,
            self.cost.clone(),
            self.capacity.clone(),
            fleet,
            self.scenarios.clone(),
            self.objective_offset.clone(),
            self.mean.clone(),
        )
    }
}

fn mean_demands(s: &ScenarioSet) -> Vec<Rat> {
    let n = s.n_customers();
    (0..=n)
        .map(|v| (0..s.len()).map(|xi| s.prob(xi) * s.demand(xi, v)).sum())
        .collect()
}

fn units(capacity: &Rat, s: &ScenarioSet) -> Result<Units> {
    let den = common_denominator(
        std::iter::once(capacity).chain(s.demands.iter().flat_map(|r| r.iter())),
    );
    let den = Rat::from_integer(den);
    let scale = |r: &Rat| -> Result<i128> {
        (r * &den)
            .to_integer()
            .to_i128()
            .filter(|v| v.abs() < (1i128 << 100))
            .ok_or_else(|| Error::Malformed("demand magnitudes too large".into()))
    };
    let cap = scale(capacity)?;
    let demand = s
        .demands
        .iter()
        .map(|row| row.iter().map(scale).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let pden = common_denominator(s.probs.iter());
    let weight = s
        .probs
        .iter()
        .map(|p| {
            (p * Rat::from_integer(pden.clone()))
                .to_integer()
                .to_i128()
                .ok_or_else(|| Error::Malformed("probability denominators too large".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Units {
        cap,
        demand,
        weight,
        weight_den: Rat::new(BigInt::one(), pden),
    })
}

/// k̄(S) = ⌈d̄(S)/C⌉.
pub fn rci_rhs(set: &[usize], inst: &Instance) -> Result<usize> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = ceil_div(&inst.mean_demand_of(set), inst.capacity());
    Ok(k.to_usize().expect("vehicle count fits usize"))
}

/// Splits demands above capacity into full back-and-forth trips charged to the offset.
pub fn preprocess_demands(inst: &Instance) -> Instance {
    let s = &inst.scenarios;
    let cap = &inst.capacity;
    let mut offset = inst.objective_offset.clone();
    let mut demands = s.demands.clone();
    for (xi, row) in demands.iter_mut().enumerate() {
        for v in 1..=inst.n {
            let d = &row[v];
            if d > cap {
                let q = Rat::from_integer(ceil_div(d, cap)) - Rat::one();
                offset += &q * int(2) * &inst.cost[0][v] * s.prob(xi);
                row[v] = d - &q * cap;
            }
        }
    }
    let scenarios = ScenarioSet {
        probs: s.probs.clone(),
        demands,
    };
    Instance::assemble(
        inst.n,
        inst.cost.clone(),
        inst.capacity.clone(),
        inst.fleet,
        scenarios,
        offset,
        inst.mean.clone(),
    )
    .expect("preprocessing keeps a valid instance")
}

/// A route with the depot implicit at both ends, stored in canonical orientation
/// (first customer smaller than last).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Route(Vec<usize>);

impl Route {
    pub fn new(mut seq: Vec<usize>) -> Self {
        assert!(!seq.is_empty(), "empty route");
        debug_assert!({
            let mut s = seq.clone();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1]) && s[0] > 0
        });
        if seq[0] > seq[seq.len() - 1] {
            seq.reverse();
        }
        Route(seq)
    }

    pub fn customers(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn forward(&self) -> DirectedRoute {
        DirectedRoute(self.0.clone())
    }

    pub fn backward(&self) -> DirectedRoute {
        DirectedRoute(self.0.iter().rev().copied().collect())
    }

    pub fn min_customer(&self) -> usize {
        *self.0.iter().min().unwrap()
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirectedRoute(pub Vec<usize>);

impl DirectedRoute {
    pub fn customers(&self) -> &[usize] {
        &self.0
    }

    pub fn reversed(&self) -> DirectedRoute {
        DirectedRoute(self.0.iter().rev().copied().collect())
    }

    pub fn undirected(&self) -> Route {
        Route::new(self.0.clone())
    }
}

/// Set of routes, kept sorted so equality is order-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoutingPlan {
    routes: Vec<Route>,
}

impl RoutingPlan {
    pub fn new(mut routes: Vec<Route>) -> Self {
        routes.sort();
        Self { routes }
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn routing_cost(&self, inst: &Instance) -> Rat {
        self.routes
            .iter()
            .map(|r| inst.route_cost(r.customers()))
            .sum()
    }

    pub fn encode(&self, n: usize) -> EdgeVector {
        let mut x = EdgeVector::zeros(n);
        for r in &self.routes {
            let c = r.customers();
            x.add(0, c[0], 1.0);
            x.add(0, c[c.len() - 1], 1.0);
            for w in c.windows(2) {
                x.add(w[0], w[1], 1.0);
            }
        }
        x
    }
}

impl fmt::Display for RoutingPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.routes.iter().map(|r| r.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// True iff the plan has exactly k routes, each with d̄(R) ≤ C, covering every customer once.
pub fn plan_is_feasible(plan: &RoutingPlan, inst: &Instance) -> bool {
    if plan.len() != inst.fleet() {
        return false;
    }
    let mut seen = vec![false; inst.n() + 1];
    for r in plan.routes() {
        for &v in r.customers() {
            if v == 0 || v > inst.n() || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        if inst.mean_demand_of(r.customers()) > *inst.capacity() {
            return false;
        }
    }
    seen[1..].iter().all(|&s| s)
}

/// Values over the edges of the complete graph on `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVector {
    n: usize,
    values: Vec<f64>,
}

impl EdgeVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; edge_count(n)],
        }
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), edge_count(n));
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[edge_id(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[edge_id(i, j)] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.values[edge_id(i, j)] += v;
    }

    pub fn is_integer(&self, tol: f64) -> bool {
        self.values.iter().all(|v| (v - v.round()).abs() <= tol)
    }

    /// x(S): sum over edges with both ends in S.
    pub fn inside(&self, set: &[usize]) -> f64 {
        let mut s = 0.0;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                s += self.get(i, j);
            }
        }
        s
    }

    /// x(S, T) for disjoint S and T.
    pub fn between(&self, s: &[usize], t: &[usize]) -> f64 {
        s.iter()
            .flat_map(|&i| t.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum()
    }

    pub fn degree(&self, v: usize) -> f64 {
        (0..=self.n)
            .filter(|&u| u != v)
            .map(|u| self.get(u, v))
            .sum()
    }

    /// Edges with value above `eps` as `(i, j, value)`, `i < j`.
    pub fn support(&self, eps: f64) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(move |(_, &v)| v > eps)
            .map(|(id, &v)| {
                let (i, j) = edge_ends(id);
                (i, j, v)
            })
    }
}

/// Decodes an integer point of X_sub into its routing plan.
pub fn routing_plan_from_edges(x: &EdgeVector) -> Result<RoutingPlan> {
    if !x.is_integer(1e-9) {
        return Err(Error::NotInteger);
    }
    let n = x.n();
    let val = |i: usize, j: usize| x.get(i, j).round() as i64;
    for v in 1..=n {
        let d = x.degree(v).round() as i64;
        if d != 2 {
            return Err(Error::Degree {
                vertex: v,
                degree: d.to_string(),
            });
        }
    }
    let mut seen = vec![false; n + 1];
    let mut routes = Vec::new();
    for start in 1..=n {
        if seen[start] || val(0, start) == 0 {
            continue;
        }
        if val(0, start) == 2 {
            seen[start] = true;
            routes.push(Route::new(vec![start]));
            continue;
        }
        let mut seq = vec![start];
        seen[start] = true;
        let (mut prev, mut cur) = (0, start);
        loop {
            let next = (1..=n).find(|&u| u != cur && u != prev && !seen[u] && val(cur, u) > 0);
            match next {
                Some(u) => {
                    seen[u] = true;
                    seq.push(u);
                    prev = cur;
                    cur = u;
                }
                None => break,
            }
        }
        if val(0, cur) != 1 || seq.len() < 2 {
            return Err(Error::Subtour(seq));
        }
        routes.push(Route::new(seq));
    }
    let rest: Vec<usize> = (1..=n).filter(|&v| !seen[v]).collect();
    if !rest.is_empty() {
        return Err(Error::Subtour(rest));
    }
    Ok(RoutingPlan::new(routes))
}
