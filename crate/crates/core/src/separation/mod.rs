//! Cut generation: RCIs, set cuts, partial-route cuts and route cuts at incumbents.

mod forest;
mod rci;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cuts::{
    activation_set, activation_whs, activation_wof_exact, make_cut, AffineForm, CutTag, IlsCut,
    PartialRoute,
};
use crate::error::{Error, Result};
use crate::instance::{routing_plan_from_edges, EdgeVector, Instance, Route};
use crate::rational::Rat;
use crate::recourse::{partial_route_lb, q_classical, set_lb, Mode};

pub use forest::{BlockCutForest, ForestNode, ForestTree, NodeKind, SUPPORT_EPS};
pub use rci::{customer_components, rci_violation, separate_rci, RCI_TOL};

/// Cuts are only reported when violated by more than this.
pub const CUT_TOL: f64 = 1e-7;
/// An incumbent is accepted when 1ᵀθ̄ ≥ Q_C(x̄) − ACCEPT_TOL.
pub const ACCEPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Whs,
    Wof,
}

impl Activation {
    pub fn form(self, h: &PartialRoute) -> AffineForm {
        match self {
            Activation::Whs => activation_whs(h),
            Activation::Wof => activation_wof_exact(h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparationOptions {
    pub mode: Mode,
    pub use_set_cuts: bool,
    pub activation: Activation,
    /// Enumerate leaf pairs of every tree instead of only depot-flow-2 trees.
    pub all_trees: bool,
}

impl SeparationOptions {
    pub fn new(mode: Mode, use_set_cuts: bool, activation: Activation) -> Self {
        Self {
            mode,
            use_set_cuts,
            activation,
            all_trees: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Separation {
    /// Customer sets with a violated RCI.
    pub rci_sets: Vec<Vec<usize>>,
    pub cuts: Vec<IlsCut>,
    /// Trees with depot flow 2 inspected, and how many of them were not paths.
    pub flow_two_trees: usize,
    pub path_violations: usize,
}

/// Set cut θ(S) ≥ L_C(S, k̃)·W_P(x; S, k̃) with k̃ = k̄(S).
pub fn set_cut(set: &[usize], inst: &Instance) -> Result<IlsCut> {
    let k = inst.rci_rhs(set)?;
    make_cut(
        set.to_vec(),
        set_lb(set, k, inst),
        activation_set(set, k)?,
        CutTag::Set,
    )
}

/// PR-EA cut for `h` on the support given by the mode.
pub fn pr_ea_cut(
    h: &PartialRoute,
    mode: Mode,
    activation: Activation,
    inst: &Instance,
) -> Result<IlsCut> {
    let customers = h.customers();
    let support = match mode {
        Mode::D1 => vec![customers[0]],
        Mode::D2 => customers,
    };
    make_cut(
        support,
        partial_route_lb(h, inst),
        activation.form(h),
        CutTag::PrEa,
    )
}

fn violated(cut: &IlsCut, x: &EdgeVector, theta: &[f64]) -> bool {
    !cut.is_trivial() && cut.violation(x, theta) > CUT_TOL
}

/// One round of separation at (x̄, θ̄); `theta` is indexed by vertex with entry 0 unused.
pub fn separate_vrpsd(
    x: &EdgeVector,
    theta: &[f64],
    opts: &SeparationOptions,
    inst: &Instance,
) -> Result<Separation> {
    let set_cuts = opts.use_set_cuts && opts.mode == Mode::D2;
    let mut out = Separation {
        rci_sets: separate_rci(x, inst, x.is_integer(1e-9)),
        ..Default::default()
    };
    if set_cuts {
        for s in &out.rci_sets {
            let cut = set_cut(s, inst)?;
            if violated(&cut, x, theta) {
                out.cuts.push(cut);
            }
        }
    }
    if !out.rci_sets.is_empty() {
        return Ok(out);
    }
    let forest = BlockCutForest::build(x);
    out.flow_two_trees = (0..forest.trees().len())
        .filter(|&t| forest.has_depot_flow_two(t))
        .count();
    out.path_violations = forest.path_violations();
    for h in forest.partial_routes(opts.all_trees) {
        if opts.mode == Mode::D2 && set_cuts {
            let s = h.customers();
            let cut = set_cut(&s, inst)?;
            if violated(&cut, x, theta) {
                out.cuts.push(cut);
                continue;
            }
        }
        let cut = pr_ea_cut(&h, opts.mode, opts.activation, inst)?;
        if violated(&cut, x, theta) {
            out.cuts.push(cut);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Accepted { recourse: Rat, routes: Vec<Route> },
    Cuts(Vec<IlsCut>),
}

/// Route cut for `r` with bound Q_C(R) and exact-adherence activation.
pub fn route_cut(r: &Route, mode: Mode, activation: Activation, inst: &Instance) -> Result<IlsCut> {
    let h = PartialRoute::from_route(r.customers());
    let support = match mode {
        Mode::D1 => vec![r.min_customer()],
        Mode::D2 => r.customers().to_vec(),
    };
    make_cut(
        support,
        q_classical(r, inst).0,
        activation.form(&h),
        CutTag::Route,
    )
}

/// Accepts an integer point whose θ̄ covers the recourse, or returns route cuts.
pub fn verify_incumbent(
    x: &EdgeVector,
    theta: &[f64],
    opts: &SeparationOptions,
    inst: &Instance,
) -> Result<Verdict> {
    if !x.is_integer(1e-9) {
        return Err(Error::NotInteger);
    }
    let plan = routing_plan_from_edges(x)?;
    let mut total = Rat::zero();
    let mut cuts = Vec::new();
    for r in plan.routes() {
        let cut = route_cut(r, opts.mode, opts.activation, inst)?;
        total += cut.bound();
        if violated(&cut, x, theta) {
            cuts.push(cut);
        }
    }
    let have: f64 = theta.iter().skip(1).sum();
    if have >= crate::rational::to_f64(&total) - ACCEPT_TOL {
        return Ok(Verdict::Accepted {
            recourse: total,
            routes: plan.routes().to_vec(),
        });
    }
    if cuts.is_empty() {
        for r in plan.routes() {
            let cut = route_cut(r, opts.mode, opts.activation, inst)?;
            if !cut.is_trivial() {
                cuts.push(cut);
            }
        }
    }
    Ok(Verdict::Cuts(cuts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::RoutingPlan;
    use crate::recourse::{disaggregate, Disaggregation};
    use crate::testutil::{star, toy};

    fn plan_x(n: usize, routes: &[&[usize]]) -> EdgeVector {
        RoutingPlan::new(routes.iter().map(|r| Route::new(r.to_vec())).collect()).encode(n)
    }

    fn exact_theta(routes: &[&[usize]], mode: Mode, inst: &Instance) -> Vec<f64> {
        let mut th = vec![0.0; inst.n() + 1];
        for r in routes {
            for (v, q) in disaggregate(&Route::new(r.to_vec()), &Disaggregation::from(mode), inst) {
                th[v] = crate::rational::to_f64(&q);
            }
        }
        th
    }

    #[test]
    fn exact_theta_accepted_and_zero_theta_cut() {
        let inst = star(&[3, 4, 5, 6], 10, 2, &[&[6, 6, 2, 2], &[2, 6, 6, 3]]);
        let routes: &[&[usize]] = &[&[1, 2], &[3, 4]];
        let x = plan_x(4, routes);
        for mode in [Mode::D1, Mode::D2] {
            let opts = SeparationOptions::new(mode, false, Activation::Whs);
            let th = exact_theta(routes, mode, &inst);
            assert!(matches!(
                verify_incumbent(&x, &th, &opts, &inst).unwrap(),
                Verdict::Accepted { .. }
            ));
            let zero = vec![0.0; 5];
            match verify_incumbent(&x, &zero, &opts, &inst).unwrap() {
                Verdict::Cuts(c) => {
                    let positive = routes
                        .iter()
                        .filter(|r| q_classical(&Route::new(r.to_vec()), &inst).0 > Rat::zero())
                        .count();
                    assert_eq!(c.len(), positive);
                    assert!(positive > 0);
                }
                Verdict::Accepted { .. } => panic!("zero θ accepted"),
            }
        }
    }

    #[test]
    fn verify_rejects_fractional() {
        let inst = toy(2, 10, 1, &[&[1, 1]]);
        let mut x = EdgeVector::zeros(2);
        x.set(0, 1, 0.5);
        let opts = SeparationOptions::new(Mode::D1, false, Activation::Wof);
        assert!(matches!(
            verify_incumbent(&x, &[0.0; 3], &opts, &inst),
            Err(Error::NotInteger)
        ));
    }

    #[test]
    fn integer_point_with_zero_theta_gets_pr_cut() {
        let inst = star(&[3, 4, 5], 10, 1, &[&[4, 4, 4], &[1, 1, 1]]);
        let x = plan_x(3, &[&[1, 2, 3]]);
        let q = q_classical(&Route::new(vec![1, 2, 3]), &inst).0;
        assert!(q > Rat::zero());
        for mode in [Mode::D1, Mode::D2] {
            let opts = SeparationOptions::new(mode, false, Activation::Whs);
            let sep = separate_vrpsd(&x, &[0.0; 4], &opts, &inst).unwrap();
            assert!(sep.rci_sets.is_empty());
            assert!(sep
                .cuts
                .iter()
                .any(|c| c.tag() == CutTag::PrEa && *c.bound() >= q));
        }
    }

    #[test]
    fn feasible_pair_yields_nothing() {
        let inst = star(&[3, 4, 5], 10, 1, &[&[4, 4, 4], &[1, 1, 1]]);
        let routes: &[&[usize]] = &[&[1, 2, 3]];
        let x = plan_x(3, routes);
        for mode in [Mode::D1, Mode::D2] {
            let opts = SeparationOptions::new(mode, mode == Mode::D2, Activation::Whs);
            let th = exact_theta(routes, mode, &inst);
            let sep = separate_vrpsd(&x, &th, &opts, &inst).unwrap();
            assert!(
                sep.rci_sets.is_empty() && sep.cuts.is_empty(),
                "{:?}",
                sep.cuts
            );
        }
    }

    #[test]
    fn rci_sets_come_with_set_cuts_under_d2() {
        let inst = star(&[3, 4, 5, 6], 10, 2, &[&[6, 6, 2, 2], &[7, 6, 2, 2]]);
        let x = plan_x(4, &[&[1, 2], &[3, 4]]);
        let opts = SeparationOptions::new(Mode::D2, true, Activation::Whs);
        let sep = separate_vrpsd(&x, &[0.0; 5], &opts, &inst).unwrap();
        assert_eq!(sep.rci_sets, vec![vec![1, 2]]);
        assert!(sep.cuts.iter().all(|c| c.tag() == CutTag::Set));
        let d1 = SeparationOptions::new(Mode::D1, true, Activation::Whs);
        assert!(separate_vrpsd(&x, &[0.0; 5], &d1, &inst)
            .unwrap()
            .cuts
            .is_empty());
    }
}
