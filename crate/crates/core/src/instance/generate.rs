use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Instance, ScenarioSet};
use crate::error::{Error, Result};
use crate::rational::{int, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemandModel {
    Independent,
    Correlated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenParams {
    pub n: usize,
    pub k: usize,
    pub capacity: u32,
    pub scenarios: usize,
    pub mode: DemandModel,
    pub seed: u64,
    /// Coefficient of variation of each customer's demand.
    pub cv: f64,
    /// Expected total demand as a fraction of fleet capacity.
    pub fill: f64,
    /// Correlation length; defaults to the mean inter-customer distance.
    pub corr_length: Option<f64>,
    /// Fixed coordinates (depot first); sampled on a 100x100 grid when absent.
    pub coords: Option<Vec<(f64, f64)>>,
}

impl GenParams {
    pub fn new(n: usize, k: usize, capacity: u32, scenarios: usize, seed: u64) -> Self {
        Self {
            n,
            k,
            capacity,
            scenarios,
            mode: DemandModel::Independent,
            seed,
            cv: 0.3,
            fill: 0.75,
            corr_length: None,
            coords: None,
        }
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Lower-triangular factor of a positive semidefinite matrix; zero pivots give zero columns.
fn cholesky_psd(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    let mut l = vec![vec![0.0; m]; m];
    for j in 0..m {
        let d = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d <= 1e-12 {
            continue;
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in j + 1..m {
            let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = s / d;
        }
    }
    l
}

/// Synthetic instance with integer Euclidean costs and equiprobable sampled scenarios.
///
/// Samples are clamped to `[0, C]` and rounded; a customer whose samples are all zero
/// gets demand 1 in the first scenario so that its mean stays positive.
pub fn generate_instance(p: &GenParams) -> Result<Instance> {
    if p.n == 0 || p.k == 0 || p.scenarios == 0 || p.capacity == 0 {
        return Err(Error::InvalidParams(
            "n, k, N and C must be positive".into(),
        ));
    }
    if !(p.cv >= 0.0 && p.fill > 0.0) {
        return Err(Error::InvalidParams("cv must be >= 0 and fill > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let coords: Vec<(f64, f64)> = match &p.coords {
        Some(c) if c.len() == p.n + 1 => c.clone(),
        Some(_) => return Err(Error::InvalidParams("coords must list n+1 points".into())),
        None => (0..=p.n)
            .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect(),
    };
    let n = p.n;
    let cap = p.capacity as f64;
    let base = p.fill * p.k as f64 * cap / n as f64;
    let mu: Vec<f64> = (0..n)
        .map(|_| (base * rng.gen_range(0.5..1.5)).clamp(1.0, cap))
        .collect();
    let sigma: Vec<f64> = mu.iter().map(|m| m * p.cv).collect();

    let factor = match p.mode {
        DemandModel::Independent => None,
        DemandModel::Correlated => {
            let len = p.corr_length.unwrap_or_else(|| {
                let mut total = 0.0;
                let mut pairs = 0usize;
                for i in 1..=n {
                    for j in i + 1..=n {
                        total += dist(coords[i], coords[j]);
                        pairs += 1;
                    }
                }
                if pairs == 0 || total == 0.0 {
                    1.0
                } else {
                    total / pairs as f64
                }
            });
            let rho: Vec<Vec<f64>> = (1..=n)
                .map(|i| {
                    (1..=n)
                        .map(|j| (-dist(coords[i], coords[j]) / len).exp())
                        .collect()
                })
                .collect();
            Some(cholesky_psd(&rho))
        }
    };

    let mut demands = Vec::with_capacity(p.scenarios);
    for _ in 0..p.scenarios {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let z: Vec<f64> = match &factor {
            None => g,
            Some(l) => (0..n)
                .map(|i| (0..=i).map(|k| l[i][k] * g[k]).sum())
                .collect(),
        };
        let row: Vec<i64> = (0..n)
            .map(|i| (mu[i] + sigma[i] * z[i]).clamp(0.0, cap).round() as i64)
            .collect();
        demands.push(row);
    }
    for v in 0..n {
        if demands.iter().all(|r| r[v] == 0) {
            demands[0][v] = 1;
        }
    }

    let cost = coords
        .iter()
        .map(|&a| {
            coords
                .iter()
                .map(|&b| int(dist(a, b).round() as i64))
                .collect()
        })
        .collect();
    let probs = vec![Rat::new(1.into(), (p.scenarios as i64).into()); p.scenarios];
    let demands = demands
        .into_iter()
        .map(|r| r.into_iter().map(int).collect())
        .collect();
    Instance::new(
        cost,
        int(p.capacity as i64),
        p.k,
        ScenarioSet::new(probs, demands)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::write_instance;
    use crate::rational::to_f64;

    #[test]
    fn zero_variance_repeats_mean() {
        let mut p = GenParams::new(5, 2, 10, 1, 3);
        p.cv = 0.0;
        let inst = generate_instance(&p).unwrap();
        for v in 1..=5 {
            assert_eq!(inst.scenarios().demand(0, v), inst.mean_demand(v));
        }
        p.scenarios = 4;
        let inst = generate_instance(&p).unwrap();
        for v in 1..=5 {
            for xi in 1..4 {
                assert_eq!(
                    inst.scenarios().demand(xi, v),
                    inst.scenarios().demand(0, v)
                );
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let p = GenParams::new(5, 2, 50, 200, 42);
        let a = write_instance(&generate_instance(&p).unwrap());
        let b = write_instance(&generate_instance(&p).unwrap());
        assert_eq!(a, b);
        let mut q = p.clone();
        q.mode = DemandModel::Correlated;
        let c = write_instance(&generate_instance(&q).unwrap());
        assert_eq!(c, write_instance(&generate_instance(&q).unwrap()));
        assert_ne!(a, c);
    }

    #[test]
    fn demands_within_capacity() {
        let mut p = GenParams::new(8, 3, 20, 50, 9);
        p.cv = 2.0;
        let inst = generate_instance(&p).unwrap();
        assert!(!inst.max_demand_exceeds_capacity());
    }

    fn correlation(inst: &Instance, a: usize, b: usize) -> f64 {
        let s = inst.scenarios();
        let xs: Vec<f64> = (0..s.len()).map(|xi| to_f64(s.demand(xi, a))).collect();
        let ys: Vec<f64> = (0..s.len()).map(|xi| to_f64(s.demand(xi, b))).collect();
        let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (m(&xs), m(&ys));
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn coincident_customers_fully_correlated() {
        let mut p = GenParams::new(3, 1, 1000, 10_000, 5);
        p.mode = DemandModel::Correlated;
        p.fill = 0.5;
        p.cv = 0.2;
        p.coords = Some(vec![(0.0, 0.0), (10.0, 10.0), (10.0, 10.0), (90.0, 90.0)]);
        let inst = generate_instance(&p).unwrap();
        assert!(correlation(&inst, 1, 2) > 0.99);
        // ρ = exp(-113.1/75.4) for the far customer
        let far = correlation(&inst, 1, 3);
        assert!((far - 0.223).abs() < 0.05, "{far}");
        p.mode = DemandModel::Independent;
        let inst = generate_instance(&p).unwrap();
        assert!(correlation(&inst, 1, 2).abs() < 0.05);
    }

    #[test]
    fn invalid_params() {
        assert!(generate_instance(&GenParams::new(0, 1, 10, 1, 0)).is_err());
        assert!(generate_instance(&GenParams::new(3, 1, 10, 0, 0)).is_err());
    }
}
