//! Branch-and-cut over the degree LP with lazily separated RCIs and ILS cuts.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::path::PathBuf;
use std::time::Instant;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cuts::{CutTag, IlsCut};
use crate::error::{Error, Result};
use crate::instance::{
    edge_count, edge_ends, preprocess_demands, EdgeVector, Instance, Route, RoutingPlan,
};
use crate::lp::{LpModel, LpStatus, Row, Sense};
use crate::rational::{to_f64, Rat};
use crate::recourse::{disaggregate, Disaggregation, Mode};
use crate::separation::{
    separate_rci, separate_vrpsd, set_cut, verify_incumbent, Activation, SeparationOptions, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchRule {
    MostFractional,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub mode: Mode,
    pub use_set_cuts: bool,
    pub activation: Activation,
    /// Seconds.
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    pub root_rounds: usize,
    pub node_rounds: usize,
    pub fractional_separation: bool,
    pub branching: BranchRule,
    pub int_tol: f64,
    pub gap_tol: f64,
    #[serde(skip)]
    pub lp_dump: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            mode: Mode::D2,
            use_set_cuts: false,
            activation: Activation::Whs,
            time_limit: None,
            node_limit: None,
            root_rounds: 100,
            node_rounds: 20,
            fractional_separation: true,
            branching: BranchRule::MostFractional,
            int_tol: 1e-6,
            gap_tol: 1e-6,
            lp_dump: None,
        }
    }
}

impl Config {
    pub fn new(mode: Mode, use_set_cuts: bool, activation: Activation) -> Self {
        Self {
            mode,
            use_set_cuts,
            activation,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.use_set_cuts && self.mode == Mode::D1 {
            return Err(Error::Config(
                "set cuts are not valid under the D1 disaggregation".into(),
            ));
        }
        if !(self.int_tol > 0.0 && self.int_tol < 0.5) || self.gap_tol < 0.0 {
            return Err(Error::Config("tolerances out of range".into()));
        }
        Ok(())
    }

    fn separation(&self) -> SeparationOptions {
        SeparationOptions::new(self.mode, self.use_set_cuts, self.activation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
    Limit,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Limit => "limit",
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Stats {
    pub nodes: usize,
    pub max_depth: usize,
    pub lp_solves: usize,
    pub lp_pivots: usize,
    pub exact_lp_retries: usize,
    pub cuts_by_tag: BTreeMap<String, usize>,
    pub fractional_points: usize,
    /// Depot-flow-2 trees inspected at fractional points, and how many were not paths.
    pub flow_two_trees: usize,
    pub path_violations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeLog {
    pub node: usize,
    pub depth: usize,
    pub lp_obj: f64,
    pub cuts_added: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    pub plan: Option<RoutingPlan>,
    /// Disaggregated recourse of the incumbent per customer (index 0 unused).
    pub theta: Option<Vec<Rat>>,
    /// Exact incumbent value including the objective offset.
    pub objective: Option<Rat>,
    pub primal_bound: f64,
    pub dual_bound: f64,
    pub gap: f64,
    pub stats: Stats,
    pub node_log: Vec<NodeLog>,
}

/// Fractional edge whose value is closest to a half-integer; lowest edge id on ties.
pub fn select_branch_edge(x: &EdgeVector, tol: f64) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (e, &v) in x.values().iter().enumerate() {
        let frac = v - v.floor();
        if frac <= tol || frac >= 1.0 - tol {
            continue;
        }
        let score = (frac - 0.5).abs();
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((e, score));
        }
    }
    best.map(|(e, _)| e).ok_or(Error::NothingToBranch)
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    fixings: Vec<(usize, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then deepest, then oldest
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&o.depth))
            .then(o.id.cmp(&self.id))
    }
}

struct Incumbent {
    value: Rat,
    value_f: f64,
    routes: Vec<Route>,
}

struct Master<'a> {
    inst: &'a Instance,
    lp: LpModel,
    n_edges: usize,
    default_bounds: Vec<(f64, f64)>,
    rci_seen: HashSet<Vec<usize>>,
    cut_seen: HashSet<(CutTag, Vec<usize>, Vec<(usize, Rat)>, Rat, Rat)>,
    stats: Stats,
}

impl<'a> Master<'a> {
    fn new(inst: &'a Instance) -> Result<Self> {
        let n = inst.n();
        let ne = edge_count(n);
        let mut lp = LpModel::new();
        let mut default_bounds = Vec::with_capacity(ne);
        for e in 0..ne {
            let (i, j) = edge_ends(e);
            let hi = if i == 0 { 2.0 } else { 1.0 };
            lp.add_var(format!("x_{i}_{j}"), 0.0, hi, inst.cost_f64(i, j));
            default_bounds.push((0.0, hi));
        }
        for v in 1..=n {
            lp.add_var(format!("theta_{v}"), 0.0, f64::INFINITY, 1.0);
        }
        for v in 1..=n {
            let coeffs = (0..=n)
                .filter(|&u| u != v)
                .map(|u| (crate::instance::edge_id(u, v), 1.0))
                .collect();
            lp.add_row(Row::new(coeffs, Sense::Eq, 2.0))?;
        }
        let depot = (1..=n)
            .map(|v| (crate::instance::edge_id(0, v), 1.0))
            .collect();
        lp.add_row(Row::new(depot, Sense::Eq, 2.0 * inst.fleet() as f64))?;
        Ok(Self {
            inst,
            lp,
            n_edges: ne,
            default_bounds,
            rci_seen: HashSet::new(),
            cut_seen: HashSet::new(),
            stats: Stats::default(),
        })
    }

    fn theta_var(&self, v: usize) -> usize {
        self.n_edges + v - 1
    }

    fn count(&mut self, tag: &str) {
        *self.stats.cuts_by_tag.entry(tag.to_string()).or_default() += 1;
    }

    fn add_rci(&mut self, set: &[usize]) -> Result<bool> {
        if !self.rci_seen.insert(set.to_vec()) {
            return Ok(false);
        }
        let k = self.inst.rci_rhs(set)?;
        let mut coeffs = Vec::new();
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                coeffs.push((crate::instance::edge_id(i, j), 1.0));
            }
        }
        self.lp
            .add_row(Row::new(coeffs, Sense::Le, set.len() as f64 - k as f64))?;
        self.count("rci");
        Ok(true)
    }

    fn add_cut(&mut self, cut: &IlsCut) -> Result<bool> {
        if cut.is_trivial() || !self.cut_seen.insert(cut.key()) {
            return Ok(false);
        }
        let (edges, support, rhs) = cut.row();
        let mut coeffs: Vec<(usize, f64)> =
            support.iter().map(|&v| (self.theta_var(v), 1.0)).collect();
        coeffs.extend(edges.iter().map(|(e, c)| (*e, to_f64(c))));
        self.lp.add_row(Row::new(coeffs, Sense::Ge, to_f64(&rhs)))?;
        self.count(cut.tag().name());
        Ok(true)
    }

    fn apply_fixings(&mut self, fixings: &[(usize, f64, f64)]) -> Result<()> {
        let mut bounds = self.default_bounds.clone();
        for &(e, lo, hi) in fixings {
            bounds[e] = (bounds[e].0.max(lo), bounds[e].1.min(hi));
        }
        for (e, &(lo, hi)) in bounds.iter().enumerate() {
            if self.lp.bounds(e) != (lo, hi) {
                self.lp.set_bounds(e, lo, hi)?;
            }
        }
        Ok(())
    }

    fn point(&self, x: &[f64]) -> (EdgeVector, Vec<f64>) {
        let n = self.inst.n();
        let ev = EdgeVector::from_values(n, x[..self.n_edges].to_vec());
        let mut theta = vec![0.0; n + 1];
        theta[1..].copy_from_slice(&x[self.n_edges..self.n_edges + n]);
        (ev, theta)
    }
}

enum NodeOutcome {
    Pruned,
    Branch(f64, usize, f64),
}

fn plan_value(routes: &[Route], recourse: &Rat, inst: &Instance) -> Rat {
    let routing: Rat = routes.iter().map(|r| inst.route_cost(r.customers())).sum();
    routing + recourse + inst.objective_offset()
}

/// Solves the instance to optimality or until a limit is hit.
pub fn solve(inst: &Instance, cfg: &Config) -> Result<SolveResult> {
    cfg.validate()?;
    let start = Instant::now();
    let inst = &preprocess_demands(inst);
    let offset = to_f64(inst.objective_offset());
    let n = inst.n();
    let k = inst.fleet();
    let mut m = Master::new(inst)?;
    let sep_opts = cfg.separation();
    let mut incumbent: Option<Incumbent> = None;
    let mut heap = BinaryHeap::new();
    let mut node_log = Vec::new();
    let mut next_id = 1;
    let mut limit_hit = false;
    let mut dual_bound = f64::NEG_INFINITY;
    let infeasible_fleet = k == 0 || k > n || inst.rci_rhs(&(1..=n).collect::<Vec<_>>())? > k;
    if !infeasible_fleet {
        heap.push(Node {
            id: 0,
            depth: 0,
            bound: f64::NEG_INFINITY,
            fixings: Vec::new(),
        });
    }
    let prune_tol = |v: f64| cfg.gap_tol * v.abs().max(1.0);

    while let Some(node) = heap.pop() {
        if let Some(inc) = &incumbent {
            if node.bound >= inc.value_f - prune_tol(inc.value_f) {
                continue;
            }
        }
        let over_time = cfg
            .time_limit
            .is_some_and(|t| start.elapsed().as_secs_f64() >= t);
        let over_nodes = cfg.node_limit.is_some_and(|l| m.stats.nodes >= l);
        if over_time || over_nodes {
            heap.push(node);
            limit_hit = true;
            break;
        }
        dual_bound = dual_bound.max(node.bound);
        m.stats.nodes += 1;
        m.stats.max_depth = m.stats.max_depth.max(node.depth);
        m.apply_fixings(&node.fixings)?;

        let rounds = if node.depth == 0 {
            cfg.root_rounds
        } else {
            cfg.node_rounds
        };
        let mut round = 0;
        let mut added_here = 0;
        let mut history: Vec<f64> = Vec::new();
        let mut lp_obj = f64::NAN;
        let outcome = loop {
            let r = m.lp.solve();
            m.stats.lp_solves += 1;
            match r.status {
                LpStatus::Infeasible => break NodeOutcome::Pruned,
                LpStatus::Unbounded => return Err(Error::UnboundedRelaxation),
                LpStatus::Optimal => {}
            }
            lp_obj = r.objective + offset;
            if let Some(inc) = &incumbent {
                if lp_obj >= inc.value_f - prune_tol(inc.value_f) {
                    break NodeOutcome::Pruned;
                }
            }
            let (x, theta) = m.point(&r.x);
            if x.is_integer(cfg.int_tol) {
                let xr = EdgeVector::from_values(n, x.values().iter().map(|v| v.round()).collect());
                let sets = separate_rci(&xr, inst, true);
                if !sets.is_empty() {
                    let mut fresh = 0;
                    for s in &sets {
                        fresh += m.add_rci(s)? as usize;
                        if cfg.use_set_cuts && cfg.mode == Mode::D2 {
                            let cut = set_cut(s, inst)?;
                            fresh += m.add_cut(&cut)? as usize;
                        }
                    }
                    added_here += fresh;
                    if fresh > 0 {
                        continue;
                    }
                    return Err(Error::Config(format!(
                        "RCI on {sets:?} repeated at an integer point"
                    )));
                }
                let verdict = verify_incumbent(&xr, &theta, &sep_opts, inst)?;
                let (recourse, routes) = match verdict {
                    Verdict::Accepted { recourse, routes } => (recourse, routes),
                    Verdict::Cuts(cuts) => {
                        let mut fresh = 0;
                        for c in &cuts {
                            fresh += m.add_cut(c)? as usize;
                        }
                        added_here += fresh;
                        if fresh > 0 {
                            continue;
                        }
                        // θ̄ is short only by LP tolerance; take the exact recourse
                        let plan = crate::instance::routing_plan_from_edges(&xr)?;
                        let q = crate::recourse::q_plan(plan.routes(), inst);
                        (q, plan.routes().to_vec())
                    }
                };
                let value = plan_value(&routes, &recourse, inst);
                let better = incumbent.as_ref().is_none_or(|inc| value < inc.value);
                if better {
                    log::debug!("node {}: incumbent {}", node.id, to_f64(&value));
                    incumbent = Some(Incumbent {
                        value_f: to_f64(&value),
                        value,
                        routes,
                    });
                }
                break NodeOutcome::Pruned;
            }

            m.stats.fractional_points += 1;
            let stalled = history.len() >= 5 && {
                let old = history[history.len() - 5];
                lp_obj - old <= 1e-6 * lp_obj.abs().max(1.0)
            };
            history.push(lp_obj);
            if cfg.fractional_separation && round < rounds && !stalled {
                round += 1;
                let sep = separate_vrpsd(&x, &theta, &sep_opts, inst)?;
                m.stats.flow_two_trees += sep.flow_two_trees;
                m.stats.path_violations += sep.path_violations;
                if sep.path_violations > 0 {
                    log::warn!(
                        "node {}: {} depot-flow-2 trees are not paths",
                        node.id,
                        sep.path_violations
                    );
                }
                let mut fresh = 0;
                for s in &sep.rci_sets {
                    fresh += m.add_rci(s)? as usize;
                }
                for c in &sep.cuts {
                    fresh += m.add_cut(c)? as usize;
                }
                added_here += fresh;
                if fresh > 0 {
                    continue;
                }
            }
            let e = select_branch_edge(&x, cfg.int_tol)?;
            break NodeOutcome::Branch(lp_obj, e, x.values()[e]);
        };
        if node.depth == 0 {
            if let Some(path) = &cfg.lp_dump {
                std::fs::write(path, m.lp.write_lp())
                    .map_err(|e| Error::Config(format!("cannot write LP dump: {e}")))?;
            }
        }
        log::debug!(
            "node {} depth {} lp {:.6} cuts {}",
            node.id,
            node.depth,
            lp_obj,
            added_here
        );
        node_log.push(NodeLog {
            node: node.id,
            depth: node.depth,
            lp_obj,
            cuts_added: added_here,
        });
        if let NodeOutcome::Branch(bound, e, v) = outcome {
            let (lo, hi) = m.default_bounds[e];
            for (a, b) in [(lo, v.floor()), (v.ceil(), hi)] {
                let mut fixings = node.fixings.clone();
                fixings.push((e, a, b));
                heap.push(Node {
                    id: next_id,
                    depth: node.depth + 1,
                    bound,
                    fixings,
                });
                next_id += 1;
            }
        }
    }

    let stats = {
        let mut s = m.stats;
        s.lp_pivots = m.lp.stats.pivots;
        s.exact_lp_retries = m.lp.stats.exact_retries;
        s.seconds = start.elapsed().as_secs_f64();
        s
    };
    let primal = incumbent.as_ref().map_or(f64::INFINITY, |i| i.value_f);
    let open_bound = heap.iter().map(|nd| nd.bound).fold(f64::INFINITY, f64::min);
    let dual = if limit_hit {
        open_bound.min(primal).max(dual_bound.min(primal))
    } else {
        primal
    };
    let status = if limit_hit {
        Status::Limit
    } else if incumbent.is_some() {
        Status::Optimal
    } else {
        Status::Infeasible
    };
    let gap = if primal.is_finite() && dual.is_finite() {
        ((primal - dual) / primal.abs().max(1.0)).max(0.0)
    } else {
        f64::INFINITY
    };
    let (plan, theta, objective) = match incumbent {
        Some(inc) => {
            let mut th = vec![Rat::zero(); n + 1];
            for r in &inc.routes {
                for (v, q) in disaggregate(r, &Disaggregation::from(cfg.mode), inst) {
                    th[v] = q;
                }
            }
            (
                Some(RoutingPlan::new(inc.routes)),
                Some(th),
                Some(inc.value),
            )
        }
        None => (None, None, None),
    };
    Ok(SolveResult {
        status,
        plan,
        theta,
        objective,
        primal_bound: primal,
        dual_bound: dual,
        gap,
        stats,
        node_log,
    })
}
