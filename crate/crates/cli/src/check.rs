//! Randomized self-checks against the brute-force oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vrpsd::cuts::PartialRoute;
use vrpsd::instance::{generate_instance, GenParams, Instance};
use vrpsd::oracle::{
    brute_force_fail_raw, brute_force_optimum, routes_exactly_adhering, Orderings,
};
use vrpsd::rational::{format_rat, int, ratio, Rat};
use vrpsd::recourse::{fail_count, partial_route_lb, q_classical, Mode};
use vrpsd::separation::Activation;
use vrpsd::solver::{solve, Config, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Count one failure too many when nothing was delivered yet.
    FailOffByOne,
}

#[derive(Debug)]
pub struct Outcome {
    pub name: &'static str,
    pub cases: usize,
    pub failure: Option<String>,
}

/// Random desk-scale instance: n ∈ [lo, hi], k ∈ [1, 3], N ∈ [1, 10].
pub fn random_instance(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Instance {
    let n = rng.gen_range(lo..=hi);
    let k = rng.gen_range(1..=3usize.min(n));
    let scenarios = rng.gen_range(1..=10);
    let capacity = rng.gen_range(10..=30);
    let mut p = GenParams::new(n, k, capacity, scenarios, rng.gen());
    p.fill = rng.gen_range(0.4..0.9);
    p.cv = rng.gen_range(0.0..0.6);
    generate_instance(&p).expect("valid generator parameters")
}

fn fail_under_test(alpha: &Rat, load: &Rat, cap: &Rat, fault: Option<Fault>) -> u64 {
    let f = fail_count(alpha, load, cap);
    match fault {
        Some(Fault::FailOffByOne) if *alpha == int(0) && *load > int(0) => f + 1,
        _ => f,
    }
}

fn check_fail(rng: &mut ChaCha8Rng, cases: usize, fault: Option<Fault>) -> Outcome {
    let mut failure = None;
    for i in 0..cases {
        let cap = int(rng.gen_range(1..=12));
        let alpha = match i % 4 {
            0 => int(0),
            1 => &cap * int(rng.gen_range(1..4)),
            _ => ratio(rng.gen_range(0..60), rng.gen_range(1..=3)),
        };
        let size = rng.gen_range(0..=5);
        let demands: Vec<Rat> = (0..size)
            .map(|_| {
                if i % 7 == 0 {
                    int(0)
                } else {
                    ratio(rng.gen_range(0..20), rng.gen_range(1..=2))
                }
            })
            .collect();
        let load: Rat = demands.iter().sum();
        let got = fail_under_test(&alpha, &load, &cap, fault);
        let want = brute_force_fail_raw(&alpha, &demands, &cap, Orderings::One);
        if got != want {
            let ds: Vec<String> = demands.iter().map(format_rat).collect();
            failure = Some(format!(
                "alpha={alpha} demands=[{}] C={cap}: {got} != {want}",
                ds.join(",")
            ));
            break;
        }
    }
    Outcome {
        name: "fail_count",
        cases,
        failure,
    }
}

fn check_partial_route_lb(rng: &mut ChaCha8Rng, cases: usize) -> Outcome {
    let mut failure = None;
    'outer: for _ in 0..cases {
        let inst = random_instance(rng, 4, 6);
        let n = inst.n();
        let mut customers: Vec<usize> = (1..=n).collect();
        for i in (1..customers.len()).rev() {
            customers.swap(i, rng.gen_range(0..=i));
        }
        customers.truncate(rng.gen_range(1..=n));
        let mut sets: Vec<Vec<usize>> = Vec::new();
        let mut rest = customers.as_slice();
        while !rest.is_empty() {
            let big_ok = sets.last().is_none_or(|s| s.len() == 1);
            let take = if big_ok {
                rng.gen_range(1..=rest.len().min(3))
            } else {
                1
            };
            sets.push(rest[..take].to_vec());
            rest = &rest[take..];
        }
        let Ok(h) = PartialRoute::new(sets) else {
            continue;
        };
        let lb = partial_route_lb(&h, &inst);
        let mut bad = None;
        routes_exactly_adhering(&h, &mut |r| {
            let q = q_classical(r, &inst).0;
            if bad.is_none() && lb > q {
                bad = Some(format!("H={h} R={r}: L={lb} > Q={q}"));
            }
        });
        if bad.is_some() {
            failure = bad;
            break 'outer;
        }
    }
    Outcome {
        name: "partial_route_lb",
        cases,
        failure,
    }
}

fn configs() -> [Config; 3] {
    [
        Config::new(Mode::D1, false, Activation::Whs),
        Config::new(Mode::D2, false, Activation::Whs),
        Config::new(Mode::D2, true, Activation::Whs),
    ]
}

fn check_oracle(rng: &mut ChaCha8Rng, cases: usize) -> Outcome {
    let mut failure = None;
    'outer: for i in 0..cases {
        let inst = random_instance(rng, 4, 7);
        let truth = match brute_force_optimum(&inst) {
            Ok(t) => t.map(|(v, _)| v),
            Err(e) => {
                failure = Some(format!("instance {i}: oracle error {e}"));
                break;
            }
        };
        for cfg in configs() {
            let got = match solve(&inst, &cfg) {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(format!("instance {i}: solver error {e}"));
                    break 'outer;
                }
            };
            let ok = match (&truth, got.status) {
                (None, Status::Infeasible) => true,
                (Some(v), Status::Optimal) => got.objective.as_ref() == Some(v),
                _ => false,
            };
            if !ok {
                failure = Some(format!(
                    "instance {i} ({:?}, set cuts {}): solver {:?} {:?}, oracle {:?}",
                    cfg.mode,
                    cfg.use_set_cuts,
                    got.status,
                    got.objective.map(|v| v.to_string()),
                    truth.as_ref().map(|v| v.to_string())
                ));
                break 'outer;
            }
        }
    }
    Outcome {
        name: "oracle_equivalence",
        cases,
        failure,
    }
}

/// Runs every suite with `budget` random instances each.
pub fn run(seed: u64, budget: usize, fault: Option<Fault>) -> Vec<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check_fail(&mut rng, budget * 50, fault),
        check_partial_route_lb(&mut rng, budget),
        check_oracle(&mut rng, budget),
    ]
}
