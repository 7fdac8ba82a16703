mod check;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use vrpsd::instance::{
    generate_instance, parse_instance, plan_is_feasible, preprocess_demands, write_instance,
    DemandModel, GenParams, Instance, ParseOptions, Route, RoutingPlan,
};
use vrpsd::rational::{format_rat, to_f64, Rat};
use vrpsd::recourse::{q_classical, Mode};
use vrpsd::separation::Activation;
use vrpsd::solver::{solve, Config, Status};

use report::{cuts_summary, label, ResultRecord};

#[derive(Parser)]
#[command(
    name = "vrpsd",
    version,
    about = "Branch-and-cut for the VRP with scenario-based stochastic demands"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a JSON result.
    Solve(SolveArgs),
    /// Write a random instance.
    Generate(GenerateArgs),
    /// Cost, recourse and feasibility of a given routing plan.
    Evaluate(EvaluateArgs),
    /// Randomized checks against the brute-force oracle.
    OracleCheck(OracleArgs),
    /// Solve every instance of a directory under the three configurations; CSV output.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    D1,
    D2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ActivationArg {
    Whs,
    Wof,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::D1 => Mode::D1,
            ModeArg::D2 => Mode::D2,
        }
    }
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Whs => Activation::Whs,
            ActivationArg::Wof => Activation::Wof,
        }
    }
}

#[derive(Args)]
struct LimitArgs {
    /// Seconds per solve.
    #[arg(long, env = "VRPSD_TIME_LIMIT")]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Round Euclidean distances of coordinate instances to integers.
    #[arg(long)]
    round_distances: bool,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "d2")]
    mode: ModeArg,
    #[arg(long)]
    set_cuts: bool,
    #[arg(long, value_enum, default_value = "whs")]
    activation: ActivationArg,
    #[command(flatten)]
    limits: LimitArgs,
    /// Recorded in the result; the solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip cut separation at fractional points.
    #[arg(long)]
    no_fractional_separation: bool,
    /// Write the root LP in CPLEX LP format.
    #[arg(long)]
    lp_dump: Option<PathBuf>,
    /// Write one line per node: id, depth, LP objective, cuts added.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Result JSON destination; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, short)]
    k: usize,
    #[arg(long)]
    capacity: u32,
    #[arg(long, default_value_t = 50)]
    scenarios: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    correlated: bool,
    #[arg(long, default_value_t = 0.3)]
    cv: f64,
    #[arg(long, default_value_t = 0.75)]
    fill: f64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    instance: PathBuf,
    /// Routes as customer lists, e.g. "1,2,3;4,5".
    #[arg(long)]
    routes: String,
    #[arg(long)]
    round_distances: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random instances per suite.
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, value_enum)]
    inject_fault: Option<check::Fault>,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[arg(long, value_enum, default_value = "whs")]
    activation: ActivationArg,
    #[command(flatten)]
    limits: LimitArgs,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn load(path: &Path, round: bool) -> Result<Instance> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_instance(
        &text,
        ParseOptions {
            round_euclidean: round,
        },
    )
    .with_context(|| format!("cannot parse {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode> {
    let mut cfg = Config::new(a.mode.into(), a.set_cuts, a.activation.into());
    cfg.validate()?;
    cfg.time_limit = a.limits.time_limit;
    cfg.node_limit = a.limits.node_limit;
    cfg.fractional_separation = !a.no_fractional_separation;
    cfg.lp_dump = a.lp_dump;
    let inst = load(&a.instance, a.limits.round_distances)?;
    let r = solve(&inst, &cfg)?;
    if let Some(path) = &a.log {
        let mut text = String::from("node depth lp_obj cuts_added\n");
        for l in &r.node_log {
            text.push_str(&format!(
                "{} {} {} {}\n",
                l.node, l.depth, l.lp_obj, l.cuts_added
            ));
        }
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let rec = ResultRecord::new(&a.instance.display().to_string(), &cfg, a.seed, &r);
    let mut json = serde_json::to_string_pretty(&rec)?;
    json.push('\n');
    emit(a.output.as_deref(), &json)?;
    Ok(match r.status {
        Status::Limit => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

fn cmd_generate(a: GenerateArgs) -> Result<ExitCode> {
    let mut p = GenParams::new(a.n, a.k, a.capacity, a.scenarios, a.seed);
    p.cv = a.cv;
    p.fill = a.fill;
    if a.correlated {
        p.mode = DemandModel::Correlated;
    }
    let inst = generate_instance(&p)?;
    emit(a.output.as_deref(), &write_instance(&inst))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RouteEval {
    customers: Vec<usize>,
    cost: String,
    recourse: String,
}

#[derive(Serialize)]
struct PlanEval {
    feasible: bool,
    routes: Vec<RouteEval>,
    routing_cost: String,
    recourse: String,
    objective_offset: String,
    total: String,
    total_f64: f64,
}

fn parse_routes(text: &str) -> Result<Vec<Route>> {
    let mut routes = Vec::new();
    for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let seq = part
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .with_context(|| format!("bad customer {v:?}"))
            })
            .collect::<Result<Vec<_>>>()?;
        routes.push(Route::new(seq));
    }
    Ok(routes)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<ExitCode> {
    let raw = load(&a.instance, a.round_distances)?;
    let inst = preprocess_demands(&raw);
    let routes = parse_routes(&a.routes)?;
    let n = inst.n();
    if routes
        .iter()
        .flat_map(|r| r.customers())
        .any(|&v| v == 0 || v > n)
    {
        bail!("customers must lie in 1..={n}");
    }
    let plan = RoutingPlan::new(routes);
    let mut evals = Vec::new();
    let mut routing = Rat::from_integer(0.into());
    let mut recourse = routing.clone();
    for r in plan.routes() {
        let c = inst.route_cost(r.customers());
        let q = q_classical(r, &inst).0;
        routing += &c;
        recourse += &q;
        evals.push(RouteEval {
            customers: r.customers().to_vec(),
            cost: format_rat(&c),
            recourse: format_rat(&q),
        });
    }
    let total = &routing + &recourse + inst.objective_offset();
    let out = PlanEval {
        feasible: plan_is_feasible(&plan, &inst),
        routes: evals,
        routing_cost: format_rat(&routing),
        recourse: format_rat(&recourse),
        objective_offset: format_rat(inst.objective_offset()),
        total_f64: to_f64(&total),
        total: format_rat(&total),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle_check(a: OracleArgs) -> Result<ExitCode> {
    if a.instances == 0 {
        log::warn!("instance budget is 0; nothing checked");
        println!("PASS (vacuous: budget 0)");
        return Ok(ExitCode::SUCCESS);
    }
    let mut ok = true;
    for o in check::run(a.seed, a.instances, a.inject_fault) {
        match &o.failure {
            None => println!("PASS {} ({} cases)", o.name, o.cases),
            Some(msg) => {
                ok = false;
                println!("FAIL {}: {}", o.name, msg);
            }
        }
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct BenchRow {
    instance: String,
    mode: String,
    setcuts: bool,
    activation: String,
    status: String,
    obj: String,
    bound: String,
    gap: String,
    nodes: usize,
    cuts_by_tag: String,
    seconds: String,
}

fn bench_configs(act: Activation) -> Vec<Config> {
    vec![
        Config::new(Mode::D1, false, act),
        Config::new(Mode::D2, false, act),
        Config::new(Mode::D2, true, act),
    ]
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    let mut files: Vec<PathBuf> = fs::read_dir(&a.dir)
        .with_context(|| format!("cannot read {}", a.dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut tasks = Vec::new();
    for f in &files {
        let inst = load(f, a.limits.round_distances)?;
        let name = f
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for mut cfg in bench_configs(a.activation.into()) {
            cfg.time_limit = a.limits.time_limit;
            cfg.node_limit = a.limits.node_limit;
            tasks.push((name.clone(), inst.clone(), cfg));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()?;
    let rows: Vec<Result<BenchRow>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(name, inst, cfg)| {
                let r = solve(inst, cfg)?;
                Ok(BenchRow {
                    instance: name.clone(),
                    mode: label(&cfg.mode),
                    setcuts: cfg.use_set_cuts,
                    activation: label(&cfg.activation),
                    status: r.status.name().to_string(),
                    obj: num(r.primal_bound),
                    bound: num(r.dual_bound),
                    gap: num(r.gap),
                    nodes: r.stats.nodes,
                    cuts_by_tag: cuts_summary(&r.stats),
                    seconds: format!("{:.3}", r.stats.seconds),
                })
            })
            .collect()
    });
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record([
        "instance",
        "mode",
        "setcuts",
        "activation",
        "status",
        "obj",
        "bound",
        "gap",
        "nodes",
        "cuts_by_tag",
        "seconds",
    ])?;
    for row in rows {
        w.serialize(row?)?;
    }
    let bytes = w.into_inner()?;
    emit(a.output.as_deref(), std::str::from_utf8(&bytes)?)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::OracleCheck(a) => cmd_oracle_check(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
