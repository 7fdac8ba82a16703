//! Partial routes, activation functions and ILS cuts.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{edge_ends, edge_id, EdgeVector, Route};
use crate::rational::{from_f64, int, to_f64, Rat};

/// Ordered tuple of disjoint nonempty customer sets; no two consecutive sets have size > 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialRoute {
    sets: Vec<Vec<usize>>,
}

impl PartialRoute {
    pub fn new(sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() || sets.iter().any(|s| s.is_empty()) {
            return Err(Error::EmptySet);
        }
        let mut sets = sets;
        for s in &mut sets {
            s.sort_unstable();
        }
        let mut all: Vec<usize> = sets.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) || all[0] == 0 {
            return Err(Error::Malformed(
                "partial route sets must be disjoint customer sets".into(),
            ));
        }
        if sets.windows(2).any(|w| w[0].len() > 1 && w[1].len() > 1) {
            return Err(Error::Malformed(
                "two consecutive unstructured components".into(),
            ));
        }
        Ok(Self { sets })
    }

    /// The partial route of singletons corresponding to a route.
    pub fn from_route(seq: &[usize]) -> Self {
        Self {
            sets: seq.iter().map(|&v| vec![v]).collect(),
        }
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// ℓ
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// |H|
    pub fn size(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    /// V_+(H), sorted.
    pub fn customers(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.sets.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn reversed(&self) -> Self {
        Self {
            sets: self.sets.iter().rev().cloned().collect(),
        }
    }

    /// x(H) = Σ x(S_i) + Σ x(S_i, S_{i+1}).
    pub fn x_of(&self, x: &EdgeVector) -> f64 {
        let inner: f64 = self.sets.iter().map(|s| x.inside(s)).sum();
        let links: f64 = self.sets.windows(2).map(|w| x.between(&w[0], &w[1])).sum();
        inner + links
    }
}

impl fmt::Display for PartialRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .sets
            .iter()
            .map(|s| {
                let v: Vec<String> = s.iter().map(|c| c.to_string()).collect();
                format!("{{{}}}", v.join(","))
            })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

fn blocks_match(seq: &[usize], h: &PartialRoute) -> bool {
    let mut pos = 0;
    for s in h.sets() {
        let end = pos + s.len();
        if end > seq.len() {
            return false;
        }
        let mut block = seq[pos..end].to_vec();
        block.sort_unstable();
        if block != *s {
            return false;
        }
        pos = end;
    }
    pos == seq.len()
}

/// Some orientation of `r` visits S_1, …, S_ℓ as contiguous blocks covering exactly V_+(H).
pub fn exactly_adheres(r: &Route, h: &PartialRoute) -> bool {
    let seq = r.customers();
    if seq.len() != h.size() {
        return false;
    }
    let rev: Vec<usize> = seq.iter().rev().copied().collect();
    blocks_match(seq, h) || blocks_match(&rev, h)
}

/// Some contiguous subroute of `r` exactly adheres to `h`.
pub fn adheres(r: &Route, h: &PartialRoute) -> bool {
    let seq = r.customers();
    let m = h.size();
    if m > seq.len() {
        return false;
    }
    let rh = h.reversed();
    seq.windows(m)
        .any(|w| blocks_match(w, h) || blocks_match(w, &rh))
}

/// α·x + β with sparse coefficients keyed by edge id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AffineForm {
    coeffs: BTreeMap<usize, Rat>,
    constant: Rat,
}

impl AffineForm {
    pub fn constant_form(c: Rat) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, Rat> {
        &self.coeffs
    }

    pub fn constant(&self) -> &Rat {
        &self.constant
    }

    pub fn coeff(&self, i: usize, j: usize) -> Rat {
        self.coeffs
            .get(&edge_id(i, j))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    pub fn add_edge(&mut self, i: usize, j: usize, c: &Rat) {
        let e = self.coeffs.entry(edge_id(i, j)).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&edge_id(i, j));
        }
    }

    pub fn add_const(&mut self, c: &Rat) {
        self.constant += c;
    }

    /// Adds c·x(S).
    pub fn add_inside(&mut self, set: &[usize], c: &Rat) {
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                self.add_edge(i, j, c);
            }
        }
    }

    /// Adds c·x(S, T).
    pub fn add_between(&mut self, s: &[usize], t: &[usize], c: &Rat) {
        for &i in s {
            for &j in t {
                self.add_edge(i, j, c);
            }
        }
    }

    pub fn eval(&self, x: &EdgeVector) -> f64 {
        let lin: f64 = self
            .coeffs
            .iter()
            .map(|(&e, c)| to_f64(c) * x.values()[e])
            .sum();
        lin + to_f64(&self.constant)
    }

    /// Exact value; every float in `x` is converted without rounding.
    pub fn eval_exact(&self, x: &EdgeVector) -> Rat {
        let mut total = self.constant.clone();
        for (&e, c) in &self.coeffs {
            let v = x.values()[e];
            if v != 0.0 {
                total += c * from_f64(v);
            }
        }
        total
    }

    /// Edge-coefficient pairs as `((i, j), c)`.
    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), &Rat)> {
        self.coeffs.iter().map(|(&e, c)| (edge_ends(e), c))
    }
}

/// t(S) = x(S) − |S| + 1 added with weight `w`.
fn add_tree_term(f: &mut AffineForm, set: &[usize], w: i64) {
    f.add_inside(set, &int(w));
    f.add_const(&int(w * (1 - set.len() as i64)));
}

/// W^k_G(x; {x̄}) = 1 + x(E(G(x̄)) \ δ(0)) − n + k.
pub fn activation_gendreau(x_bar: &EdgeVector, k: usize) -> AffineForm {
    let n = x_bar.n();
    let mut f = AffineForm::constant_form(int(1 - n as i64 + k as i64));
    for (i, j, _) in x_bar.support(0.5) {
        if i != 0 {
            f.add_edge(i, j, &int(1));
        }
    }
    f
}

/// W_OF(x; X_⊇(H)).
pub fn activation_wof_superset(h: &PartialRoute) -> AffineForm {
    let s = h.sets();
    let l = s.len();
    let one = int(1);
    let mut f = AffineForm::constant_form(int(2 - h.size() as i64));
    for set in s {
        f.add_inside(set, &one);
    }
    for w in s.windows(2) {
        f.add_between(&w[0], &w[1], &one);
    }
    if l == 3 {
        if s[0].len() == 1 || s[2].len() == 1 {
            add_tree_term(&mut f, &s[1], 1);
        }
    } else if l >= 2 {
        if s[0].len() == 1 {
            add_tree_term(&mut f, &s[1], 1);
        }
        if s[l - 1].len() == 1 {
            add_tree_term(&mut f, &s[l - 2], 1);
        }
    }
    f
}

/// Depot-attachment term x(0, S) + 2x(S) + x(S, T) − 2|S| added to `f`.
fn add_end_term(f: &mut AffineForm, end: &[usize], next: Option<&[usize]>) {
    f.add_between(&[0], end, &int(1));
    f.add_inside(end, &int(2));
    if let Some(t) = next {
        f.add_between(end, t, &int(1));
    }
    f.add_const(&int(-2 * end.len() as i64));
}

/// W_OF(x; X_=(H)).
pub fn activation_wof_exact(h: &PartialRoute) -> AffineForm {
    let mut f = activation_wof_superset(h);
    let s = h.sets();
    let l = s.len();
    if l == 1 {
        add_end_term(&mut f, &s[0], None);
    } else {
        add_end_term(&mut f, &s[0], Some(&s[1]));
        add_end_term(&mut f, &s[l - 1], Some(&s[l - 2]));
    }
    f
}

/// W_HS(x; X_=(H)) from its α/β/γ coefficient tables.
pub fn activation_whs(h: &PartialRoute) -> AffineForm {
    let s = h.sets();
    let l = s.len();
    let alpha: Vec<i64> = match l {
        1 => vec![3],
        2 => vec![4, 4],
        3 => vec![3, 2, 3],
        _ => (0..l)
            .map(|i| match i.min(l - 1 - i) {
                0 => 3,
                1 => 2,
                _ => 1,
            })
            .collect(),
    };
    let beta: Vec<i64> = match l {
        1 => vec![1, 0],
        2 => vec![1, 3, 1],
        _ => (0..=l)
            .map(|i| match i.min(l - i) {
                0 => 1,
                1 => 2,
                _ => 1,
            })
            .collect(),
    };
    let gamma = if l == 1 { 0 } else { 1 };
    let mut f = AffineForm::constant_form(int(gamma));
    for (set, &a) in s.iter().zip(&alpha) {
        add_tree_term(&mut f, set, a);
    }
    let depot = vec![0usize];
    for (i, &b) in beta.iter().enumerate() {
        let left: &[usize] = if i == 0 { &depot } else { &s[i - 1] };
        let right: &[usize] = if i == l { &depot } else { &s[i] };
        if l == 1 && i == 1 {
            // S_1 to the depot again: β_1 = 0
            continue;
        }
        f.add_between(left, right, &int(b));
        f.add_const(&int(-b));
    }
    f
}

/// W_P(x; X(S, k̃)) = 1 + x(S) − |S| + k̃.
pub fn activation_set(set: &[usize], k_tilde: usize) -> Result<AffineForm> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut f = AffineForm::constant_form(int(1 - set.len() as i64 + k_tilde as i64));
    f.add_inside(set, &int(1));
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutTag {
    Gendreau,
    Route,
    PrEa,
    PrA,
    Path,
    Set,
    Translated,
}

impl CutTag {
    pub fn name(self) -> &'static str {
        match self {
            CutTag::Gendreau => "gendreau",
            CutTag::Route => "route",
            CutTag::PrEa => "pr_ea",
            CutTag::PrA => "pr_a",
            CutTag::Path => "path",
            CutTag::Set => "set",
            CutTag::Translated => "translated",
        }
    }
}

/// θ(U) ≥ L · W(x).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IlsCut {
    support: Vec<usize>,
    bound: Rat,
    activation: AffineForm,
    tag: CutTag,
}

pub fn make_cut(
    support: Vec<usize>,
    bound: Rat,
    activation: AffineForm,
    tag: CutTag,
) -> Result<IlsCut> {
    if bound.is_negative() {
        return Err(Error::NegativeBound);
    }
    let mut support = support;
    support.sort_unstable();
    support.dedup();
    Ok(IlsCut {
        support,
        bound,
        activation,
        tag,
    })
}

impl IlsCut {
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn bound(&self) -> &Rat {
        &self.bound
    }

    pub fn activation(&self) -> &AffineForm {
        &self.activation
    }

    pub fn tag(&self) -> CutTag {
        self.tag
    }

    /// L = 0 gives θ(U) ≥ 0, implied by θ ≥ 0.
    pub fn is_trivial(&self) -> bool {
        self.bound.is_zero()
    }

    /// Row form θ(U) − L·α·x ≥ L·β as (edge coefficients, θ support, rhs).
    pub fn row(&self) -> (Vec<(usize, Rat)>, &[usize], Rat) {
        let edges = self
            .activation
            .coeffs()
            .iter()
            .map(|(&e, c)| (e, -(c * &self.bound)))
            .collect();
        (
            edges,
            &self.support,
            &self.bound * self.activation.constant(),
        )
    }

    /// L·W(x) − θ(U); positive when the point violates the cut.
    pub fn violation(&self, x: &EdgeVector, theta: &[f64]) -> f64 {
        let lhs: f64 = self.support.iter().map(|&v| theta[v]).sum();
        to_f64(&self.bound) * self.activation.eval(x) - lhs
    }

    /// Exact violation at a point with θ given per vertex (index 0 unused).
    pub fn violation_exact(&self, x: &EdgeVector, theta: &[Rat]) -> Rat {
        let lhs: Rat = self.support.iter().map(|&v| &theta[v]).sum();
        &self.bound * self.activation.eval_exact(x) - lhs
    }

    pub fn is_violated(&self, x: &EdgeVector, theta: &[f64], tol: f64) -> bool {
        self.violation(x, theta) > tol
    }

    /// Key for pool deduplication.
    pub fn key(&self) -> (CutTag, Vec<usize>, Vec<(usize, Rat)>, Rat, Rat) {
        (
            self.tag,
            self.support.clone(),
            self.activation
                .coeffs()
                .iter()
                .map(|(&e, c)| (e, c.clone()))
                .collect(),
            self.activation.constant().clone(),
            self.bound.clone(),
        )
    }
}

/// Replaces L by (L − LB(U))^+ for global lower bounds `lb` indexed by vertex.
pub fn translate_cut(cut: &IlsCut, lb: &[Rat]) -> IlsCut {
    let shift: Rat = cut.support.iter().map(|&v| &lb[v]).sum();
    let bound = &cut.bound - shift;
    IlsCut {
        support: cut.support.clone(),
        bound: if bound.is_negative() {
            Rat::zero()
        } else {
            bound
        },
        activation: cut.activation.clone(),
        tag: if lb.iter().all(Zero::is_zero) {
            cut.tag
        } else {
            CutTag::Translated
        },
    }
}

/// θ(V_+(R)) ≥ Q(R)·W_OF(x; X_⊇(R)); only valid when the recourse is monotone.
pub fn path_cut(route: &Route, q: Rat, monotone: bool) -> Result<IlsCut> {
    if !monotone {
        return Err(Error::Config(
            "path cuts require a monotone recourse function".into(),
        ));
    }
    let h = PartialRoute::from_route(route.customers());
    make_cut(h.customers(), q, activation_wof_superset(&h), CutTag::Path)
}

/// θ(V_+(H)) ≥ L(H)·W_OF(x; X_⊇(H)); only valid when the recourse is monotone.
pub fn adherence_cut(h: &PartialRoute, bound: Rat, monotone: bool) -> Result<IlsCut> {
    if !monotone {
        return Err(Error::Config(
            "adherence cuts require a monotone recourse function".into(),
        ));
    }
    make_cut(
        h.customers(),
        bound,
        activation_wof_superset(h),
        CutTag::PrA,
    )
}
