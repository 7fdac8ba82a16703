use serde::Serialize;
use vrpsd::rational::{format_rat, to_f64};
use vrpsd::solver::{Config, SolveResult, Stats};

#[derive(Debug, Serialize)]
pub struct ConfigRecord {
    pub mode: String,
    pub set_cuts: bool,
    pub activation: String,
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    pub seed: u64,
}

impl ConfigRecord {
    pub fn new(cfg: &Config, seed: u64) -> Self {
        Self {
            mode: label(&cfg.mode),
            set_cuts: cfg.use_set_cuts,
            activation: label(&cfg.activation),
            time_limit: cfg.time_limit,
            node_limit: cfg.node_limit,
            seed,
        }
    }
}

/// Lower-case serde name of a unit enum value.
pub fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

#[derive(Debug, Serialize)]
pub struct ResultRecord {
    pub instance: String,
    pub config: ConfigRecord,
    pub status: String,
    /// Exact objective as a decimal or `p/q` string.
    pub objective: Option<String>,
    pub objective_f64: Option<f64>,
    pub primal_bound: Option<f64>,
    pub dual_bound: Option<f64>,
    pub gap: Option<f64>,
    pub routes: Vec<Vec<usize>>,
    pub theta: Vec<String>,
    pub stats: Stats,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl ResultRecord {
    pub fn new(instance: &str, cfg: &Config, seed: u64, r: &SolveResult) -> Self {
        Self {
            instance: instance.to_string(),
            config: ConfigRecord::new(cfg, seed),
            status: r.status.name().to_string(),
            objective: r.objective.as_ref().map(format_rat),
            objective_f64: r.objective.as_ref().map(to_f64),
            primal_bound: finite(r.primal_bound),
            dual_bound: finite(r.dual_bound),
            gap: finite(r.gap),
            routes: r
                .plan
                .as_ref()
                .map(|p| p.routes().iter().map(|r| r.customers().to_vec()).collect())
                .unwrap_or_default(),
            theta: r
                .theta
                .as_ref()
                .map(|t| t.iter().skip(1).map(format_rat).collect())
                .unwrap_or_default(),
            stats: r.stats.clone(),
        }
    }
}

pub fn cuts_summary(stats: &Stats) -> String {
    stats
        .cuts_by_tag
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}
