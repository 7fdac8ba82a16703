//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Tolerances and sample sizes are pinned below. The run fails if any criterion fails.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vrpsd::cuts::{
    activation_gendreau, activation_set, activation_whs, activation_wof_exact,
    activation_wof_superset, adheres, exactly_adheres, AffineForm, PartialRoute,
};
use vrpsd::instance::{
    generate_instance, parse_instance, EdgeVector, GenParams, Instance, ParseOptions, Route,
    RoutingPlan,
};
use vrpsd::oracle::{
    brute_force_fail_raw, brute_force_optimum, routes_exactly_adhering, subroutes, visit_all_plans,
    visit_plans, Orderings,
};
use vrpsd::rational::{int, ratio, to_f64, Rat};
use vrpsd::recourse::{
    check_weak_superadditivity, disaggregate, fail_count, get_disaggregation, partial_route_lb,
    q_classical, q_plan, set_lb, Disaggregation, Mode,
};
use vrpsd::separation::{set_cut, Activation};
use vrpsd::solver::{solve, Config, Stats, Status};

const OBJ_REL_TOL: f64 = 1e-6;
const ORACLE_INSTANCES: usize = 100;
const FAIL_CASES: usize = 10_000;
const ACTIVATION_SAMPLES: usize = 200;
const DOMINANCE_POINTS: usize = 10_000;
const LB_PARTIAL_ROUTES: usize = 500;
const DISAGG_ROUTES: usize = 1_000;
const MIN_FRACTIONAL_POINTS: usize = 1_000;
const SCALE_TIME_LIMIT: f64 = 120.0;
// regression baseline for criterion 9, compared at ±50%
const SCALE_BASELINE_NODES: usize = 1257;
const SCALE_BASELINE_CUTS: usize = 409;

type Verdict = Result<String, String>;

fn configs() -> [Config; 3] {
    [
        Config::new(Mode::D1, false, Activation::Whs),
        Config::new(Mode::D2, false, Activation::Whs),
        Config::new(Mode::D2, true, Activation::Whs),
    ]
}

fn random_instance(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Instance {
    let n = rng.gen_range(lo..=hi);
    let k = rng.gen_range(1..=3usize);
    let scenarios = rng.gen_range(1..=10);
    let capacity = rng.gen_range(10..=30);
    let mut p = GenParams::new(n, k, capacity, scenarios, rng.gen());
    p.fill = rng.gen_range(0.4..0.9);
    p.cv = rng.gen_range(0.0..0.6);
    generate_instance(&p).unwrap()
}

fn random_partial_route(rng: &mut ChaCha8Rng, n: usize, max_set: usize) -> PartialRoute {
    let mut c: Vec<usize> = (1..=n).collect();
    c.shuffle(rng);
    c.truncate(rng.gen_range(1..=n));
    let mut sets = Vec::new();
    let mut i = 0;
    let mut prev_big = false;
    while i < c.len() {
        let max = if prev_big {
            1
        } else {
            (c.len() - i).min(max_set)
        };
        let len = rng.gen_range(1..=max);
        sets.push(c[i..i + len].to_vec());
        prev_big = len > 1;
        i += len;
    }
    PartialRoute::new(sets).unwrap()
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn close(a: &Rat, b: &Rat) -> bool {
    let (a, b) = (to_f64(a), to_f64(b));
    (a - b).abs() <= OBJ_REL_TOL * b.abs().max(1.0)
}

struct Plan {
    routes: Vec<Route>,
    x: EdgeVector,
}

fn all_plans(n: usize, k: Option<usize>) -> Vec<Plan> {
    let mut out = Vec::new();
    visit_all_plans(n, k, &mut |routes| {
        let routes = routes.to_vec();
        let x = RoutingPlan::new(routes.clone()).encode(n);
        out.push(Plan { routes, x });
    })
    .unwrap();
    out
}

fn oracle_equivalence(stats: &mut Vec<Stats>) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_001);
    let mut solved = 0;
    let mut nodes = Vec::new();
    let mut more_with_sets = 0;
    for i in 0..ORACLE_INSTANCES {
        let inst = random_instance(&mut rng, 5, 8);
        let truth = brute_force_optimum(&inst)
            .map_err(|e| e.to_string())?
            .map(|(v, _)| v);
        for cfg in configs() {
            let r = solve(&inst, &cfg).map_err(|e| e.to_string())?;
            let ok = match (&truth, r.status, &r.objective) {
                (None, Status::Infeasible, _) => true,
                (Some(v), Status::Optimal, Some(got)) => close(got, v),
                _ => false,
            };
            if !ok {
                return Err(format!(
                    "instance {i} ({:?}, set cuts {}): {:?} {:?} vs oracle {:?}",
                    cfg.mode,
                    cfg.use_set_cuts,
                    r.status,
                    r.objective.map(|v| v.to_string()),
                    truth.as_ref().map(|v| v.to_string())
                ));
            }
            if let (Some(plan), Some(theta)) = (&r.plan, &r.theta) {
                let q = q_plan(plan.routes(), &inst);
                if theta.iter().sum::<Rat>() < q {
                    return Err(format!("instance {i}: incumbent theta below Q_C = {q}"));
                }
            }
            nodes.push(r.stats.nodes);
            stats.push(r.stats);
            solved += 1;
        }
        if nodes[2] > nodes[1] {
            more_with_sets += 1;
        }
        nodes.clear();
    }
    Ok(format!(
        "{ORACLE_INSTANCES} instances, {solved} solves agree; set cuts raised the D2 node count on {more_with_sets}"
    ))
}

fn fail_lemma() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_002);
    let mut boundary = [0usize; 3];
    for i in 0..FAIL_CASES {
        let cap = int(rng.gen_range(1..=12));
        let alpha = match i % 4 {
            0 => int(0),
            1 => &cap * int(rng.gen_range(1..5)),
            _ => ratio(rng.gen_range(0..80), rng.gen_range(1..=3)),
        };
        let size = rng.gen_range(0..=5);
        let zero_load = i % 5 == 0;
        let demands: Vec<Rat> = (0..size)
            .map(|_| {
                if zero_load {
                    int(0)
                } else {
                    ratio(rng.gen_range(0..25), rng.gen_range(1..=2))
                }
            })
            .collect();
        let load: Rat = demands.iter().sum();
        if alpha == int(0) {
            boundary[0] += 1;
        } else if alpha.is_integer() && (alpha.to_integer() % cap.to_integer()) == 0.into() {
            boundary[1] += 1;
        }
        if load == int(0) {
            boundary[2] += 1;
        }
        let got = fail_count(&alpha, &load, &cap);
        let want = brute_force_fail_raw(&alpha, &demands, &cap, Orderings::One);
        if got != want {
            return Err(format!(
                "alpha={alpha} demands={demands:?} C={cap}: {got} != {want}"
            ));
        }
    }
    Ok(format!(
        "{FAIL_CASES} cases (alpha=0: {}, alpha multiple of C: {}, zero load: {})",
        boundary[0], boundary[1], boundary[2]
    ))
}

/// 1 on every plan in the target, at most 0 elsewhere.
fn contract(
    w: &AffineForm,
    plans: &[Plan],
    target: impl Fn(&Plan) -> bool,
) -> Result<usize, String> {
    let mut hits = 0;
    for p in plans {
        let v = w.eval_exact(&p.x);
        if target(p) {
            hits += 1;
            if v != int(1) {
                return Err(format!("{v} on target plan {:?}", p.routes));
            }
        } else if v > int(0) {
            return Err(format!("{v} off target on plan {:?}", p.routes));
        }
    }
    Ok(hits)
}

fn activation_contract() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_003);
    let mut checks = 0;
    let mut hits = 0;
    for n in 2..=6 {
        let plans = all_plans(n, None);
        for _ in 0..ACTIVATION_SAMPLES {
            let h = random_partial_route(&mut rng, n, 4);
            let exact = |p: &Plan| p.routes.iter().any(|r| exactly_adheres(r, &h));
            let sup = |p: &Plan| p.routes.iter().any(|r| adheres(r, &h));
            let tag = |e: String| format!("n={n} H={h}: {e}");
            hits += contract(&activation_wof_exact(&h), &plans, exact).map_err(tag)?;
            hits += contract(&activation_whs(&h), &plans, exact).map_err(tag)?;
            hits += contract(&activation_wof_superset(&h), &plans, sup).map_err(tag)?;

            let s = random_subset(&mut rng, n);
            let kt = rng.gen_range(1..=s.len());
            // X(S, k̃) inside the plans that respect x(S) ≤ |S| − k̃
            let dom: Vec<&Plan> = plans
                .iter()
                .filter(|p| p.x.inside(&s) <= (s.len() - kt) as f64 + 1e-9)
                .collect();
            let w = activation_set(&s, kt).unwrap();
            for p in dom {
                let v = w.eval_exact(&p.x);
                let on = (p.x.inside(&s) - (s.len() - kt) as f64).abs() < 1e-9;
                if (on && v != int(1)) || (!on && v > int(0)) {
                    return Err(format!("W_P n={n} S={s:?} k={kt}: {v} on {:?}", p.routes));
                }
                hits += on as usize;
            }
            checks += 4;
        }
        for k in 1..=n.min(3) {
            let plans_k = all_plans(n, Some(k));
            for _ in 0..ACTIVATION_SAMPLES / 4 {
                let bar = plans_k.choose(&mut rng).unwrap();
                let w = activation_gendreau(&bar.x, k);
                let same = |p: &Plan| p.x.values() == bar.x.values();
                hits +=
                    contract(&w, &plans_k, same).map_err(|e| format!("W_G n={n} k={k}: {e}"))?;
                checks += 1;
            }
        }
    }
    Ok(format!(
        "{checks} activation functions, {hits} target hits, n in [2, 6]"
    ))
}

/// Convex combination of 2-4 plans: satisfies the customer degree equalities.
fn fractional_point(rng: &mut ChaCha8Rng, plans: &[Plan], n: usize) -> EdgeVector {
    let m = rng.gen_range(2..=4);
    let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut v = vec![0.0; plans[0].x.values().len()];
    for &wi in &w {
        let p = plans.choose(rng).unwrap();
        for (a, b) in v.iter_mut().zip(p.x.values()) {
            *a += wi / total * b;
        }
    }
    EdgeVector::from_values(n, v)
}

fn dominance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_004);
    let n = 7;
    let plans = all_plans(n, Some(2));
    let mut coincide_checked = 0;
    for i in 0..DOMINANCE_POINTS {
        let x = fractional_point(&mut rng, &plans, n);
        for v in 1..=n {
            if (x.degree(v) - 2.0).abs() > 1e-9 {
                return Err(format!("point {i} breaks the degree equality at {v}"));
            }
        }
        let h = random_partial_route(&mut rng, n, 3);
        let of = activation_wof_exact(&h).eval(&x);
        let hs = activation_whs(&h).eval(&x);
        if of < hs - 1e-9 {
            return Err(format!("H={h}: W_OF {of} < W_HS {hs}"));
        }
        let s = h.sets();
        let l = s.len();
        if l >= 2 && s[1].len() == 1 && s[l - 2].len() == 1 {
            coincide_checked += 1;
            if (of - hs).abs() > 1e-9 {
                return Err(format!(
                    "H={h}: W_OF {of} != W_HS {hs} with singleton inner ends"
                ));
            }
        }
    }
    Ok(format!(
        "{DOMINANCE_POINTS} points, {coincide_checked} with singleton S_2 and S_l-1"
    ))
}

fn lower_bounds() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_005);
    let mut routes = 0usize;
    for _ in 0..LB_PARTIAL_ROUTES {
        let inst = random_instance(&mut rng, 4, 8);
        let h = random_partial_route(&mut rng, inst.n(), 5);
        let lb = partial_route_lb(&h, &inst);
        let mut bad = None;
        routes_exactly_adhering(&h, &mut |r| {
            routes += 1;
            let q = q_classical(r, &inst).0;
            if bad.is_none() && lb > q {
                bad = Some(format!("H={h} R={r}: L={lb} > Q={q}"));
            }
        });
        if let Some(b) = bad {
            return Err(b);
        }
    }
    let mut points = 0usize;
    for t in 0..12 {
        let inst = random_instance(
            &mut rng,
            if t < 10 { 4 } else { 7 },
            if t < 10 { 6 } else { 7 },
        );
        let n = inst.n();
        let subsets: Vec<Vec<usize>> = (1u32..1 << n)
            .map(|m| (1..=n).filter(|v| m >> (v - 1) & 1 == 1).collect())
            .collect();
        let bounds: Vec<Vec<Rat>> = subsets
            .iter()
            .map(|s| (1..=s.len()).map(|k| set_lb(s, k, &inst)).collect())
            .collect();
        let mut bad = None;
        visit_plans(&inst, &mut |routes| {
            if bad.is_some() {
                return;
            }
            points += 1;
            let mut theta = vec![int(0); n + 1];
            for r in routes {
                for (v, q) in disaggregate(r, &Disaggregation::D2, &inst) {
                    theta[v] = q;
                }
            }
            let x = RoutingPlan::new(routes.to_vec()).encode(n);
            for (s, b) in subsets.iter().zip(&bounds) {
                let kt = s.len() - x.inside(s).round() as usize;
                let mass: Rat = s.iter().map(|&v| &theta[v]).sum();
                if b[kt - 1] > mass {
                    bad = Some(format!("S={s:?} k={kt}: L={} > theta(S)={mass}", b[kt - 1]));
                    return;
                }
            }
        })
        .map_err(|e| e.to_string())?;
        if let Some(b) = bad {
            return Err(b);
        }
    }
    Ok(format!("{LB_PARTIAL_ROUTES} partial routes over {routes} routes; set bounds on {points} integer points"))
}

fn fixture() -> Instance {
    parse_instance(
        include_str!("data/counterexample.json"),
        ParseOptions::default(),
    )
    .unwrap()
}

fn counterexample() -> Verdict {
    let inst = fixture();
    let r = Route::new(vec![1, 2, 3, 4]);
    let rp = Route::new(vec![2, 3, 4]);
    let s = [2, 3, 4];
    let x = RoutingPlan::new(vec![r.clone(), Route::new(vec![5])]).encode(5);
    let q_r = q_classical(&r, &inst).0;
    let q_rp = q_classical(&rp, &inst).0;
    let cut = set_cut(&s, &inst).map_err(|e| e.to_string())?;
    let w = cut.activation().eval_exact(&x);
    let theta1: Vec<Rat> = [0, 3, 0, 0, 0, 0].iter().map(|&v| ratio(v, 2)).collect();
    let theta2: Vec<Rat> = [0, 0, 0, 1, 2, 0].iter().map(|&v| ratio(v, 2)).collect();
    let d1 = disaggregate(&r, &Disaggregation::D1, &inst);
    let d2 = disaggregate(&r, &Disaggregation::D2, &inst);
    let as_theta = |d: &std::collections::BTreeMap<usize, Rat>| {
        (0..=5)
            .map(|v| d.get(&v).cloned().unwrap_or_else(|| int(0)))
            .collect::<Vec<_>>()
    };
    let lhs = |t: &[Rat]| s.iter().map(|&v| &t[v]).sum::<Rat>();
    let rhs = cut.bound() * &w;
    let checks = [
        ("Q(R) = 3/2", q_r == ratio(3, 2), q_r.to_string()),
        ("Q(R') = 2", q_rp == int(2), q_rp.to_string()),
        ("Q(R) < Q(R')", q_r < q_rp, format!("{q_r} < {q_rp}")),
        ("W_P = 1", w == int(1), w.to_string()),
        (
            "set-cut bound = 1/2",
            *cut.bound() == ratio(1, 2),
            cut.bound().to_string(),
        ),
        (
            "theta1 is the D1 split and violates the cut",
            as_theta(&d1) == theta1 && lhs(&theta1) < rhs,
            format!("{} < {rhs}", lhs(&theta1)),
        ),
        (
            "theta2 is the D2 split and satisfies the cut",
            as_theta(&d2) == theta2 && lhs(&theta2) >= rhs,
            format!("{} >= {rhs}", lhs(&theta2)),
        ),
    ];
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.1)
        .map(|c| format!("{} (got {})", c.0, c.2))
        .collect();
    if failed.is_empty() {
        Ok("all equalities exact".into())
    } else {
        Err(format!(
            "{} of {} hold; {}",
            checks.len() - failed.len(),
            checks.len(),
            failed.join("; ")
        ))
    }
}

fn disaggregation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_007);
    for i in 0..DISAGG_ROUTES {
        let cap = int(rng.gen_range(5..=20));
        let mean: Vec<Rat> = (0..=8)
            .map(|_| ratio(rng.gen_range(1..=30), rng.gen_range(1..=3)))
            .collect();
        let q = |r: &[usize]| {
            let d: Rat = r.iter().map(|&v| &mean[v]).sum();
            if d > cap {
                d - &cap
            } else {
                int(0)
            }
        };
        let l = rng.gen_range(1..=8);
        let mut r: Vec<usize> = (1..=8).collect();
        r.shuffle(&mut rng);
        r.truncate(l);
        let qhat = get_disaggregation(&r, &q);
        if qhat.iter().sum::<Rat>() != q(&r) {
            return Err(format!("route {i} {r:?}: values do not sum to Q(R)"));
        }
        for (a, b) in subroutes(l) {
            let mass: Rat = qhat[a..=b].iter().sum();
            if mass < q(&r[a..=b]) {
                return Err(format!("route {i} {r:?}: subroute {a}..={b} not covered"));
            }
        }
    }
    let inst = fixture();
    let qc = |r: &[usize]| q_classical(&Route::new(r.to_vec()), &inst).0;
    let weak = check_weak_superadditivity(&qc, &[1, 2, 3, 4]).map_err(|e| e.to_string())?;
    if weak {
        return Err("Q_C reported weakly superadditive on the fixture".into());
    }
    Ok(format!(
        "{DISAGG_ROUTES} routes monotone and exact; fixture not weakly superadditive"
    ))
}

fn block_cut_paths(stats: &[Stats]) -> Verdict {
    let mut points: usize = stats.iter().map(|s| s.fractional_points).sum();
    let mut trees: usize = stats.iter().map(|s| s.flow_two_trees).sum();
    let mut bad: usize = stats.iter().map(|s| s.path_violations).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_008);
    let mut extra = 0;
    while points < MIN_FRACTIONAL_POINTS && extra < 200 {
        let inst = random_instance(&mut rng, 9, 12);
        let r = solve(&inst, &Config::new(Mode::D2, true, Activation::Whs))
            .map_err(|e| e.to_string())?;
        points += r.stats.fractional_points;
        trees += r.stats.flow_two_trees;
        bad += r.stats.path_violations;
        extra += 1;
    }
    let msg = format!("{points} fractional points, {trees} depot-flow-2 trees, {bad} non-paths ({extra} extra solves)");
    if points < MIN_FRACTIONAL_POINTS || bad > 0 {
        Err(msg)
    } else {
        Ok(msg)
    }
}

fn scale_smoke() -> Verdict {
    let mut p = GenParams::new(15, 3, 100, 50, 7);
    p.fill = 0.8;
    let inst = generate_instance(&p).unwrap();
    let mut cfg = Config::new(Mode::D2, true, Activation::Whs);
    cfg.time_limit = Some(SCALE_TIME_LIMIT);
    let start = Instant::now();
    let r = solve(&inst, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let cuts: usize = r.stats.cuts_by_tag.values().sum();
    let drift = |got: usize, base: usize| {
        if base == 0 || (got as f64 - base as f64).abs() <= 0.5 * base as f64 {
            ""
        } else {
            " (outside baseline)"
        }
    };
    let msg = format!(
        "{:?} in {secs:.1}s, nodes {}{}, cuts {}{} {:?}",
        r.status,
        r.stats.nodes,
        drift(r.stats.nodes, SCALE_BASELINE_NODES),
        cuts,
        drift(cuts, SCALE_BASELINE_CUTS),
        r.stats.cuts_by_tag
    );
    if r.status == Status::Optimal && secs <= SCALE_TIME_LIMIT {
        Ok(msg)
    } else {
        Err(msg)
    }
}

#[test]
fn acceptance() {
    let mut stats = Vec::new();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let line = match &v {
            Ok(m) => format!("PASS criterion {id} {name}: {m}"),
            Err(m) => format!("FAIL criterion {id} {name}: {m}"),
        };
        println!("{line} [{:.1}s]", start.elapsed().as_secs_f64());
        results.push((id, name, v));
    };
    run(1, "oracle equivalence", &mut || {
        oracle_equivalence(&mut stats)
    });
    run(2, "fail count", &mut fail_lemma);
    run(3, "activation contract", &mut activation_contract);
    run(4, "W_OF dominates W_HS", &mut dominance);
    run(5, "lower-bound validity", &mut lower_bounds);
    run(6, "counterexample fixture", &mut counterexample);
    run(7, "disaggregation", &mut disaggregation);
    run(8, "block-cut path property", &mut || {
        block_cut_paths(&stats)
    });
    run(9, "scale smoke test", &mut scale_smoke);
    let failed: BTreeSet<usize> = results
        .iter()
        .filter(|r| r.2.is_err())
        .map(|r| r.0)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
