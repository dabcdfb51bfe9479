use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use bestsubset::datagen::{self, CorrelationKind, ExampleKind, GenSpec};
use bestsubset::dataio::{self, ResponseSelector};
use bestsubset::harness::{self, ExperimentPlan, RunRecord};
use bestsubset::metrics;
use bestsubset::selectors::StepConstant;
use bestsubset::{solve, Budget, Dataset, Error, Result, SolverConfig, SolverKind};

#[derive(Parser)]
#[command(name = "bss", version, about = "Best subset selection solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its ground-truth sidecar.
    Gen(GenArgs),
    /// Run one solver on a dataset.
    Solve(SolveArgs),
    /// Run an experiment plan into a results store.
    Bench(BenchArgs),
    /// Write gap, profile, and CPU-time files from a results store.
    Report(ReportArgs),
    /// Exhaustive optimum for small problems.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value = "constant")]
    corr: CorrelationKind,
    #[arg(long, default_value_t = 0.8, allow_negative_numbers = true)]
    rho: f64,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    example: u8,
    #[arg(long, default_value_t = 10)]
    k0: usize,
    #[arg(long)]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `.csv`/`.txt` writes text, anything else binary.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file, or a raw delimited table when `--response` is given.
    #[arg(long)]
    data: PathBuf,
    /// Response column of a raw table: header name, one-based index, or `last`.
    #[arg(long)]
    response: Option<String>,
    /// Add squares and pairwise products of the raw predictors.
    #[arg(long)]
    quadratic: bool,
    /// Also center and scale the response of a raw table.
    #[arg(long)]
    standardize_y: bool,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: u64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

impl BudgetArgs {
    fn budget(&self) -> Result<Budget> {
        let b = Budget { cpu_seconds_limit: self.time_limit, max_iterations: self.max_iters, epsilon: self.epsilon };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// fs, sffs, sfs (with --t), sfs1, sfs2, dfo, dfon, ga, exhaustive.
    #[arg(long)]
    solver: String,
    #[arg(long)]
    k: usize,
    /// Swap width for sfs.
    #[arg(long)]
    t: Option<usize>,
    /// Random starts for dfon.
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    crossover: Option<f64>,
    #[arg(long)]
    mutation: Option<f64>,
    /// DFO step constant: `auto`, `spectral`, or a positive number.
    #[arg(long)]
    step: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Recompute every candidate subset from scratch.
    #[arg(long)]
    naive: bool,
    /// Allow exhaustive enumeration beyond the subset limit.
    #[arg(long)]
    force: bool,
    /// Append the run to this results store.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Results store; defaults to the plan's `output` or `<plan>.results.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Serialize)]
struct TruthFile {
    spec: GenSpec,
    sigma2: f64,
    /// One-based.
    support: Vec<usize>,
    beta0: Vec<f64>,
}

fn truth_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".truth.toml");
    out.with_file_name(name)
}

fn load(args: &DataArgs) -> Result<Dataset> {
    match &args.response {
        None => {
            if args.quadratic || args.standardize_y {
                return Err(Error::InvalidArgument("--quadratic and --standardize-y need --response".into()));
            }
            dataio::load_dataset(&args.data)
        }
        Some(sel) => {
            let mut table = dataio::read_delimited(&args.data, &sel.parse::<ResponseSelector>()?)?;
            if table.dropped_rows > 0 {
                eprintln!("dropped {} rows with missing values", table.dropped_rows);
            }
            if args.quadratic {
                table = dataio::quadratic_expand(&table);
            }
            let name = args.data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            dataio::to_dataset(&table, &name, args.standardize_y)
        }
    }
}

fn parse_step(s: &str) -> Result<StepConstant> {
    match s {
        "auto" => Ok(StepConstant::Auto),
        "spectral" => Ok(StepConstant::SpectralNorm),
        other => other
            .parse::<f64>()
            .map(StepConstant::Fixed)
            .map_err(|_| Error::InvalidArgument(format!("bad step constant `{other}`"))),
    }
}

fn gen(a: &GenArgs) -> Result<()> {
    let spec = GenSpec {
        n: a.n,
        p: a.p,
        correlation: a.corr,
        rho: a.rho,
        example: ExampleKind::try_from(a.example)?,
        k0: a.k0,
        snr: a.snr,
        seed: a.seed,
    };
    spec.validate()?;
    let (data, truth) = datagen::generate(&spec)?;
    let file = TruthFile {
        spec,
        sigma2: truth.sigma2,
        support: truth.true_support.iter().map(|j| j + 1).collect(),
        beta0: truth.beta0.clone(),
    };
    let sidecar = toml::to_string(&file).map_err(|e| Error::Generation(e.to_string()))?;
    dataio::save_dataset(&data, &a.out)?;
    dataio::atomic_write(&truth_path(&a.out), sidecar.as_bytes())?;
    println!("n: {}", data.n());
    println!("p: {}", data.p());
    println!("sigma2: {}", truth.sigma2);
    println!("support: {}", truth.support());
    println!("seed: {}", a.seed);
    Ok(())
}

fn solve_cmd(a: &SolveArgs) -> Result<()> {
    let mut config = SolverConfig::from_name(&a.solver)?.with_seed(a.seed).with_naive(a.naive);
    if let Some(t) = a.t {
        if config.kind != SolverKind::Sfs {
            return Err(Error::InvalidArgument("--t applies to sfs only".into()));
        }
        config.t = t;
    }
    if let Some(r) = a.restarts {
        config.restarts = r;
    }
    if let Some(s) = a.population {
        config.population_size = s;
    }
    if let Some(v) = a.crossover {
        config.crossover_rate = v;
    }
    if let Some(v) = a.mutation {
        config.mutation_rate = v;
    }
    if let Some(s) = &a.step {
        config.step = parse_step(s)?;
    }
    config.force = a.force;
    let budget = a.budget.budget()?;
    let data = load(&a.data)?;
    config.validate(a.k, data.p())?;
    let out = solve(&data, a.k, &config, &budget)?;
    let d = &out.diagnostics;
    println!("solver: {}", config.solver_id());
    println!("support: {}", out.solution.support);
    println!("rss: {}", out.solution.rss);
    println!("cpu_seconds: {}", d.cpu_seconds);
    println!("stop_reason: {}", d.stop_reason);
    println!("iterations: {}", d.iterations);
    println!("seed: {}", a.seed);
    for note in &d.notes {
        println!("note: {note}");
    }
    if let Some(path) = &a.record {
        let record = RunRecord {
            problem_id: data.name().to_string(),
            solver_id: config.solver_id(),
            k: a.k,
            replication: 0,
            seed: a.seed,
            rss: out.solution.rss,
            cpu_seconds: d.cpu_seconds,
            stop_reason: Some(d.stop_reason),
            support: out.solution.support.clone(),
        };
        harness::append_record(path, &record)?;
    }
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let mut plan = ExperimentPlan::load(&a.plan)?;
    if let Some(j) = a.jobs {
        plan.jobs = j;
    }
    plan.validate()?;
    let base = a.plan.parent().map(Path::to_path_buf).unwrap_or_default();
    let store = match (&a.out, &plan.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => a.plan.with_extension("results.csv"),
    };
    let s = harness::run_plan(&plan, &store, &base)?;
    println!("store: {}", store.display());
    println!("executed: {}", s.executed);
    println!("skipped: {}", s.skipped);
    println!("failed: {}", s.failed);
    println!("overshoot: {}", s.flagged);
    println!("seed: {}", plan.seed);
    if s.failed > 0 {
        return Err(Error::Plan(format!("{} cells failed", s.failed)));
    }
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let rep = metrics::report(&a.store, &a.out)?;
    for f in &rep.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn oracle(a: &OracleArgs) -> Result<()> {
    let mut config = SolverConfig::new(SolverKind::Exhaustive);
    config.force = a.force;
    let budget = a.budget.budget()?;
    let data = load(&a.data)?;
    config.validate(a.k, data.p())?;
    let out = solve(&data, a.k, &config, &budget)?;
    println!("f_star: {}", out.solution.rss);
    println!("support: {}", out.solution.support);
    println!("stop_reason: {}", out.diagnostics.stop_reason);
    println!("subsets_evaluated: {}", out.diagnostics.iterations);
    if out.diagnostics.stop_reason.is_hard_stop() {
        return Err(Error::InvalidConfig("budget exhausted before the enumeration finished".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
