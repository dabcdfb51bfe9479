//! Budgeted solver × problem grids with a resumable results store.
//!
//! A plan (TOML) lists problems, solvers, a budget, and a replication count.
//! Every `(problem, k, solver, replication)` cell is run once and appended to
//! a CSV store with columns
//! `problem_id,solver_id,k,replication,seed,rss,cpu_seconds,stop_reason,support`.
//! Next to the store the harness keeps:
//!
//! * `<store>.plan.toml`: the plan that produced it (a different plan is refused),
//! * `<store>.problems.csv`: problem metadata used for report grouping,
//! * `<store>.meta.csv`: wall time, iteration counts, parallelism, and notes.
//!
//! Rerunning a plan skips the cells already in the store. Replications differ
//! only in the solver seed, `plan.seed + replication`.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Mutex};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::cpu::Stopwatch;
use crate::dataio::{self, ResponseSelector};
use crate::datagen::{self, GenSpec, GridSelection, Regime};
use crate::dataset::{Dataset, SupportSet};
use crate::error::{Error, Result};
use crate::selectors::{self, Budget, SolverConfig, StepConstant, StopReason};

pub const STORE_HEADER: [&str; 9] =
    ["problem_id", "solver_id", "k", "replication", "seed", "rss", "cpu_seconds", "stop_reason", "support"];
const FAILED: &str = "FAILED";
/// Allowed CPU overshoot beyond the limit before a run is flagged.
pub const OVERSHOOT_ALLOWANCE: f64 = 0.25;

fn default_one() -> usize {
    1
}

fn default_name() -> String {
    "plan".into()
}

/// A problem given either by a generator spec or by a data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemEntry {
    pub id: Option<String>,
    pub k: Vec<usize>,
    pub generate: Option<GenSpec>,
    pub path: Option<PathBuf>,
    /// Response column for raw CSV input (name or one-based index).
    pub response: Option<String>,
    #[serde(default)]
    pub quadratic: bool,
    #[serde(default)]
    pub standardize_y: bool,
    pub dim_type: Option<String>,
    pub regime: Option<Regime>,
}

/// A solver by name (`fs`, `sffs`, `sfs1`, `sfs2`, `dfo`, `dfon`, `ga`,
/// `exhaustive`) with optional parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub name: String,
    pub id: Option<String>,
    pub t: Option<usize>,
    pub restarts: Option<usize>,
    pub population_size: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub step: Option<StepConstant>,
    #[serde(default)]
    pub naive: bool,
    #[serde(default)]
    pub force: bool,
}

impl SolverEntry {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.into(),
            id: None,
            t: None,
            restarts: None,
            population_size: None,
            crossover_rate: None,
            mutation_rate: None,
            step: None,
            naive: false,
            force: false,
        }
    }

    pub fn config(&self) -> Result<SolverConfig> {
        let mut c = SolverConfig::from_name(&self.name)?;
        if let Some(t) = self.t {
            c.t = t;
        }
        if let Some(r) = self.restarts {
            c.restarts = r;
        }
        if let Some(s) = self.population_size {
            c.population_size = s;
        }
        if let Some(v) = self.crossover_rate {
            c.crossover_rate = v;
        }
        if let Some(v) = self.mutation_rate {
            c.mutation_rate = v;
        }
        if let Some(s) = self.step {
            c.step = s;
        }
        c.naive = self.naive;
        c.force = self.force;
        Ok(c)
    }

    pub fn solver_id(&self) -> Result<String> {
        Ok(match &self.id {
            Some(id) => id.clone(),
            None => self.config()?.solver_id(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_one")]
    pub replications: usize,
    pub output: Option<PathBuf>,
    #[serde(default = "default_one")]
    pub jobs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
    pub grid: Option<GridSelection>,
    #[serde(default)]
    pub problems: Vec<ProblemEntry>,
    pub solvers: Vec<SolverEntry>,
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 || self.jobs == 0 {
            return Err(Error::InvalidConfig("replications and jobs must be >= 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidConfig("plan lists no solvers".into()));
        }
        if self.problems.is_empty() && self.grid.is_none() {
            return Err(Error::InvalidConfig("plan lists no problems".into()));
        }
        self.budget.validate()?;
        let mut ids = HashSet::new();
        for s in &self.solvers {
            s.config()?;
            if !ids.insert(s.solver_id()?) {
                return Err(Error::InvalidConfig(format!("duplicate solver id `{}`", s.solver_id()?)));
            }
        }
        for p in &self.problems {
            match (&p.generate, &p.path) {
                (Some(g), None) => g.validate()?,
                (None, Some(_)) => {}
                _ => return Err(Error::InvalidConfig("each problem needs exactly one of `generate` or `path`".into())),
            }
            if p.k.is_empty() {
                return Err(Error::InvalidConfig("each problem needs at least one k".into()));
            }
        }
        let mut pids = HashSet::new();
        for p in self.resolve_problems(Path::new("."))? {
            if !pids.insert(p.meta.problem_id.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate problem id `{}`", p.meta.problem_id)));
            }
        }
        Ok(())
    }

    /// The plan without execution-only settings, used to match a store to its plan.
    fn fingerprint(&self) -> String {
        Self { output: None, jobs: 1, ..self.clone() }.to_toml()
    }

    /// Problems in plan order, grid entries first.
    pub fn resolve_problems(&self, base: &Path) -> Result<Vec<Problem>> {
        let mut out = Vec::new();
        if let Some(grid) = &self.grid {
            for e in grid.expand()? {
                out.push(Problem {
                    meta: ProblemMeta::from_spec(e.id(), Some(e.dim_type.clone()), Some(e.regime), &e.spec),
                    source: Source::Generated(e.spec),
                    ks: e.ks,
                });
            }
        }
        for (i, p) in self.problems.iter().enumerate() {
            let problem = match (&p.generate, &p.path) {
                (Some(spec), _) => {
                    let id = p.id.clone().unwrap_or_else(|| format!("problem-{}", i + 1));
                    Problem {
                        meta: ProblemMeta::from_spec(id, p.dim_type.clone(), p.regime, spec),
                        source: Source::Generated(*spec),
                        ks: p.k.clone(),
                    }
                }
                (None, Some(path)) => {
                    let path = if path.is_absolute() { path.clone() } else { base.join(path) };
                    let id = p.id.clone().unwrap_or_else(|| {
                        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| format!("problem-{}", i + 1))
                    });
                    Problem {
                        meta: ProblemMeta {
                            problem_id: id,
                            dim_type: p.dim_type.clone().unwrap_or_default(),
                            regime: p.regime.map(|r| r.to_string()).unwrap_or_default(),
                            ..ProblemMeta::default()
                        },
                        source: Source::File {
                            path,
                            response: p.response.clone(),
                            quadratic: p.quadratic,
                            standardize_y: p.standardize_y,
                        },
                        ks: p.k.clone(),
                    }
                }
                (None, None) => return Err(Error::InvalidConfig("problem without source".into())),
            };
            out.push(problem);
        }
        Ok(out)
    }
}

/// Grouping attributes of a problem; empty strings for unknown values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub problem_id: String,
    pub dim_type: String,
    pub regime: String,
    pub example: String,
    pub correlation: String,
    pub snr: String,
    pub n: String,
    pub p: String,
    /// `‖y‖²` of the loaded data, filled in once the problem has been run.
    pub y_norm_sq: Option<f64>,
}

impl ProblemMeta {
    fn from_spec(id: String, dim_type: Option<String>, regime: Option<Regime>, spec: &GenSpec) -> Self {
        let regime = regime.unwrap_or(if spec.p < spec.n { Regime::Od } else { Regime::Ud });
        Self {
            problem_id: id,
            dim_type: dim_type.unwrap_or_default(),
            regime: regime.to_string(),
            example: spec.example.number().to_string(),
            correlation: spec.correlation.to_string(),
            snr: spec.snr.to_string(),
            n: spec.n.to_string(),
            p: spec.p.to_string(),
            y_norm_sq: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Generated(GenSpec),
    File { path: PathBuf, response: Option<String>, quadratic: bool, standardize_y: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub meta: ProblemMeta,
    pub source: Source,
    pub ks: Vec<usize>,
}

impl Problem {
    pub fn load(&self) -> Result<Dataset> {
        match &self.source {
            Source::Generated(spec) => Ok(datagen::generate(spec)?.0),
            Source::File { path, response, quadratic, standardize_y } => match response {
                None => dataio::load_dataset(path),
                Some(sel) => {
                    let mut table = dataio::read_delimited(path, &sel.parse::<ResponseSelector>()?)?;
                    if *quadratic {
                        table = dataio::quadratic_expand(&table);
                    }
                    dataio::to_dataset(&table, &self.meta.problem_id, *standardize_y)
                }
            },
        }
    }
}

/// One row of the results store. `stop_reason = None` marks a failed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub problem_id: String,
    pub solver_id: String,
    pub k: usize,
    pub replication: usize,
    pub seed: u64,
    pub rss: f64,
    pub cpu_seconds: f64,
    pub stop_reason: Option<StopReason>,
    pub support: SupportSet,
}

impl RunRecord {
    pub fn key(&self) -> (String, String, usize, usize) {
        (self.problem_id.clone(), self.solver_id.clone(), self.k, self.replication)
    }

    pub fn is_failed(&self) -> bool {
        self.stop_reason.is_none()
    }

    fn to_row(&self) -> Vec<String> {
        vec![
            self.problem_id.clone(),
            self.solver_id.clone(),
            self.k.to_string(),
            self.replication.to_string(),
            self.seed.to_string(),
            self.rss.to_string(),
            self.cpu_seconds.to_string(),
            self.stop_reason.map(|s| s.as_str().to_string()).unwrap_or_else(|| FAILED.into()),
            self.support.to_one_based_string(),
        ]
    }

    fn from_row(row: &csv::StringRecord, line: usize) -> Result<Self> {
        if row.len() != STORE_HEADER.len() {
            return Err(Error::Ragged { row: line, expected: STORE_HEADER.len(), found: row.len() });
        }
        let parse_err = |c: usize| Error::Parse {
            row: line,
            column: c + 1,
            name: STORE_HEADER[c].into(),
            value: row[c].to_string(),
        };
        let stop_reason = match &row[7] {
            FAILED => None,
            s => Some(s.parse::<StopReason>().map_err(|_| parse_err(7))?),
        };
        Ok(Self {
            problem_id: row[0].to_string(),
            solver_id: row[1].to_string(),
            k: row[2].parse().map_err(|_| parse_err(2))?,
            replication: row[3].parse().map_err(|_| parse_err(3))?,
            seed: row[4].parse().map_err(|_| parse_err(4))?,
            rss: row[5].parse().map_err(|_| parse_err(5))?,
            cpu_seconds: row[6].parse().map_err(|_| parse_err(6))?,
            stop_reason,
            support: SupportSet::parse_one_based(&row[8]).map_err(|_| parse_err(8))?,
        })
    }
}

/// Reads every record of a store.
pub fn read_store(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != STORE_HEADER {
        return Err(Error::Corrupt(format!("{}: unexpected header {header:?}", path.display())));
    }
    reader.records().enumerate().map(|(i, r)| RunRecord::from_row(&r?, i + 2)).collect()
}

/// Writes a complete store (header plus records).
pub fn write_store(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(STORE_HEADER)?;
    for r in records {
        w.write_record(r.to_row())?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    dataio::atomic_write(path, &bytes)
}

/// Appends one record to a store, creating it with a header if absent.
pub fn append_record(path: &Path, record: &RunRecord) -> Result<()> {
    let fresh = !path.exists();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(OpenOptions::new().create(true).append(true).open(path)?);
    if fresh {
        w.write_record(STORE_HEADER)?;
    }
    w.write_record(record.to_row())?;
    w.flush()?;
    Ok(())
}

pub fn read_problem_meta(path: &Path) -> Result<Vec<ProblemMeta>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn write_problem_meta(path: &Path, metas: &[ProblemMeta]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for m in metas {
        w.serialize(m)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    dataio::atomic_write(path, &bytes)
}

fn sidecar(store: &Path, suffix: &str) -> PathBuf {
    let mut name = store.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    store.with_file_name(name)
}

pub fn plan_sidecar(store: &Path) -> PathBuf {
    sidecar(store, ".plan.toml")
}

pub fn problems_sidecar(store: &Path) -> PathBuf {
    sidecar(store, ".problems.csv")
}

pub fn meta_sidecar(store: &Path) -> PathBuf {
    sidecar(store, ".meta.csv")
}

/// `min rss` per `(problem_id, k)` over all solvers and replications.
///
/// A problem is an instance together with its target cardinality, since the
/// best value differs between targets.
pub fn best_per_problem(records: &[RunRecord]) -> Result<BTreeMap<(String, usize), f64>> {
    let mut best: BTreeMap<(String, usize), Option<f64>> = BTreeMap::new();
    for r in records {
        let slot = best.entry((r.problem_id.clone(), r.k)).or_insert(None);
        if !r.is_failed() && r.rss.is_finite() {
            *slot = Some(slot.map_or(r.rss, |b: f64| b.min(r.rss)));
        }
    }
    best.into_iter()
        .map(|(key, v)| match v {
            Some(f) => Ok((key, f)),
            None => Err(Error::MissingData(format!("no successful run for problem {} at k = {}", key.0, key.1))),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
    pub flagged: usize,
}

struct Cell {
    k: usize,
    solver: usize,
    replication: usize,
}

struct CellResult {
    record: RunRecord,
    wall_seconds: f64,
    iterations: u64,
    notes: String,
}

fn run_cell(data: &Dataset, problem_id: &str, cell: &Cell, solver: &SolverEntry, plan: &ExperimentPlan) -> CellResult {
    let seed = plan.seed.wrapping_add(cell.replication as u64);
    let solver_id = solver.solver_id().unwrap_or_else(|_| solver.name.clone());
    let clock = Stopwatch::start();
    let outcome = solver.config().and_then(|c| selectors::solve(data, cell.k, &c.with_seed(seed), &plan.budget));
    let wall_seconds = clock.wall_seconds();
    let base = RunRecord {
        problem_id: problem_id.to_string(),
        solver_id,
        k: cell.k,
        replication: cell.replication,
        seed,
        rss: f64::NAN,
        cpu_seconds: 0.0,
        stop_reason: None,
        support: SupportSet::empty(),
    };
    match outcome {
        Ok(out) => CellResult {
            record: RunRecord {
                rss: out.solution.rss,
                cpu_seconds: out.diagnostics.cpu_seconds,
                stop_reason: Some(out.diagnostics.stop_reason),
                support: out.solution.support,
                ..base
            },
            wall_seconds,
            iterations: out.diagnostics.iterations,
            notes: out.diagnostics.notes.join("; "),
        },
        Err(e) => {
            warn!("{problem_id} k={} {}: {e}", cell.k, base.solver_id);
            CellResult { record: base, wall_seconds, iterations: 0, notes: e.to_string() }
        }
    }
}

/// Runs every missing cell of `plan`, appending to `store`.
///
/// Relative data paths in the plan resolve against `base`.
pub fn run_plan(plan: &ExperimentPlan, store: &Path, base: &Path) -> Result<RunSummary> {
    plan.validate()?;
    let problems = plan.resolve_problems(base)?;
    let plan_path = plan_sidecar(store);
    let fingerprint = plan.fingerprint();
    if plan_path.exists() {
        if fs::read_to_string(&plan_path)? != fingerprint {
            return Err(Error::Plan(format!("{} was produced by a different plan", store.display())));
        }
    } else if store.exists() {
        return Err(Error::Plan(format!("{} exists without a plan sidecar", store.display())));
    }
    if let Some(dir) = store.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    dataio::atomic_write(&plan_path, fingerprint.as_bytes())?;
    let problems_path = problems_sidecar(store);
    let mut metas: Vec<ProblemMeta> = problems.iter().map(|p| p.meta.clone()).collect();
    if problems_path.exists() {
        let known: BTreeMap<String, Option<f64>> =
            read_problem_meta(&problems_path)?.into_iter().map(|m| (m.problem_id, m.y_norm_sq)).collect();
        for m in &mut metas {
            m.y_norm_sq = known.get(&m.problem_id).copied().flatten();
        }
    }
    write_problem_meta(&problems_path, &metas)?;

    let done: HashSet<(String, String, usize, usize)> = if store.exists() {
        read_store(store)?.iter().map(RunRecord::key).collect()
    } else {
        HashSet::new()
    };
    let fresh = !store.exists();
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(OpenOptions::new().create(true).append(true).open(store)?);
    if fresh {
        out.write_record(STORE_HEADER)?;
        out.flush()?;
    }
    let meta_path = meta_sidecar(store);
    let meta_fresh = !meta_path.exists();
    let mut meta = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(OpenOptions::new().create(true).append(true).open(&meta_path)?);
    if meta_fresh {
        meta.write_record(["problem_id", "solver_id", "k", "replication", "wall_seconds", "iterations", "jobs", "flag", "notes"])?;
    }

    let solver_ids: Vec<String> = plan.solvers.iter().map(|s| s.solver_id()).collect::<Result<_>>()?;
    let mut summary = RunSummary::default();
    for (pi, problem) in problems.iter().enumerate() {
        let pid = &problem.meta.problem_id;
        let mut cells = VecDeque::new();
        for &k in &problem.ks {
            for (si, sid) in solver_ids.iter().enumerate() {
                for replication in 0..plan.replications {
                    if done.contains(&(pid.clone(), sid.clone(), k, replication)) {
                        summary.skipped += 1;
                    } else {
                        cells.push_back(Cell { k, solver: si, replication });
                    }
                }
            }
        }
        if cells.is_empty() {
            continue;
        }
        info!("{pid}: {} cells", cells.len());
        let data = problem.load();
        if let Ok(d) = &data {
            metas[pi].y_norm_sq = Some(d.y_norm_sq());
            write_problem_meta(&problems_path, &metas)?;
        }
        let results: Vec<CellResult> = match &data {
            Err(e) => {
                warn!("{pid}: cannot load problem: {e}");
                cells
                    .iter()
                    .map(|c| CellResult {
                        record: RunRecord {
                            problem_id: pid.clone(),
                            solver_id: solver_ids[c.solver].clone(),
                            k: c.k,
                            replication: c.replication,
                            seed: plan.seed.wrapping_add(c.replication as u64),
                            rss: f64::NAN,
                            cpu_seconds: 0.0,
                            stop_reason: None,
                            support: SupportSet::empty(),
                        },
                        wall_seconds: 0.0,
                        iterations: 0,
                        notes: e.to_string(),
                    })
                    .collect()
            }
            Ok(data) if plan.jobs <= 1 => {
                for c in &cells {
                    let r = run_cell(data, pid, c, &plan.solvers[c.solver], plan);
                    write_result(&mut out, &mut meta, &r, plan, &mut summary)?;
                }
                Vec::new()
            }
            Ok(data) => {
                let queue = Mutex::new(cells.drain(..).collect::<VecDeque<_>>());
                let (tx, rx) = mpsc::channel();
                std::thread::scope(|scope| -> Result<()> {
                    for _ in 0..plan.jobs {
                        let tx = tx.clone();
                        let queue = &queue;
                        scope.spawn(move || loop {
                            let Some(c) = queue.lock().expect("queue lock").pop_front() else { break };
                            let r = run_cell(data, pid, &c, &plan.solvers[c.solver], plan);
                            if tx.send(r).is_err() {
                                break;
                            }
                        });
                    }
                    drop(tx);
                    for r in rx {
                        write_result(&mut out, &mut meta, &r, plan, &mut summary)?;
                    }
                    Ok(())
                })?;
                Vec::new()
            }
        };
        for r in &results {
            write_result(&mut out, &mut meta, r, plan, &mut summary)?;
        }
    }
    Ok(summary)
}

fn write_result<W: Write, M: Write>(
    out: &mut csv::Writer<W>,
    meta: &mut csv::Writer<M>,
    r: &CellResult,
    plan: &ExperimentPlan,
    summary: &mut RunSummary,
) -> Result<()> {
    let rec = &r.record;
    let limit = plan.budget.cpu_seconds_limit;
    let flag = if rec.cpu_seconds > limit * (1.0 + OVERSHOOT_ALLOWANCE) {
        warn!("{} {} k={}: {:.3}s exceeds the CPU limit by more than 25%", rec.problem_id, rec.solver_id, rec.k, rec.cpu_seconds);
        summary.flagged += 1;
        "overshoot"
    } else {
        ""
    };
    out.write_record(rec.to_row())?;
    out.flush()?;
    meta.write_record([
        rec.problem_id.clone(),
        rec.solver_id.clone(),
        rec.k.to_string(),
        rec.replication.to_string(),
        r.wall_seconds.to_string(),
        r.iterations.to_string(),
        plan.jobs.to_string(),
        flag.to_string(),
        r.notes.clone(),
    ])?;
    meta.flush()?;
    summary.executed += 1;
    if rec.is_failed() {
        summary.failed += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAN: &str = r#"
name = "toy"
seed = 3

[budget]
cpu_seconds_limit = 10.0

[[problems]]
id = "a"
k = [2]
generate = { n = 30, p = 8, correlation = "constant", example = 2, k0 = 3, snr = 5.0, seed = 1 }

[[solvers]]
name = "fs"

[[solvers]]
name = "sfs2"
"#;

    #[test]
    fn plan_parses_and_validates() {
        let plan = ExperimentPlan::from_toml(PLAN).unwrap();
        assert_eq!(plan.solvers[1].solver_id().unwrap(), "SFS2");
        assert_eq!(plan.budget.max_iterations, 1_000_000);
        assert!(ExperimentPlan::from_toml("solvers = []").is_err());
        let dup = PLAN.replace("name = \"sfs2\"", "name = \"fs\"");
        assert!(matches!(ExperimentPlan::from_toml(&dup), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn record_row_round_trip() {
        let r = RunRecord {
            problem_id: "p".into(),
            solver_id: "GA".into(),
            k: 3,
            replication: 1,
            seed: 4,
            rss: 0.1 + 0.2,
            cpu_seconds: 1e-5,
            stop_reason: Some(StopReason::PopulationHomogeneous),
            support: SupportSet::new(vec![0, 4, 9]),
        };
        let row = csv::StringRecord::from(r.to_row());
        assert_eq!(RunRecord::from_row(&row, 2).unwrap(), r);
        let failed = RunRecord { stop_reason: None, rss: f64::NAN, ..r };
        let back = RunRecord::from_row(&csv::StringRecord::from(failed.to_row()), 2).unwrap();
        assert!(back.is_failed() && back.rss.is_nan());
    }

    #[test]
    fn best_needs_a_successful_run() {
        let ok = RunRecord {
            problem_id: "p".into(),
            solver_id: "FS".into(),
            k: 2,
            replication: 0,
            seed: 0,
            rss: 2.0,
            cpu_seconds: 0.0,
            stop_reason: Some(StopReason::Converged),
            support: SupportSet::new(vec![0, 1]),
        };
        let worse = RunRecord { solver_id: "GA".into(), rss: 3.0, ..ok.clone() };
        let best = best_per_problem(&[ok.clone(), worse]).unwrap();
        assert_eq!(best[&("p".to_string(), 2)], 2.0);
        let failed = RunRecord { stop_reason: None, problem_id: "q".into(), ..ok };
        assert!(matches!(best_per_problem(&[failed]), Err(Error::MissingData(_))));
    }
}
