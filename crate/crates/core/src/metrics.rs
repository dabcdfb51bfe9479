//! Relative gaps, performance profiles, box-plot statistics, and the report
//! files built from a results store.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::dataio::atomic_write;
use crate::error::{Error, Result};
use crate::harness::{self, ProblemMeta, RunRecord};

/// Ratio denominators and CPU times below this are clamped, in seconds.
pub const CLOCK_FLOOR: f64 = 1e-4;
/// `f*` below `DEGENERATE_RATIO·‖y‖²` switches to an absolute gap.
pub const DEGENERATE_RATIO: f64 = 1e-12;
/// Slack allowed for `f̃` below `f*` before the store counts as inconsistent.
pub const CONSISTENCY_TOL: f64 = 1e-8;
const FENCE: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    /// Percent, or `100·(f̃ − f*)` when `degenerate`.
    pub value: f64,
    pub degenerate: bool,
}

/// `100·(f̃ − f*)/f*`.
///
/// When `f*` is negligible against `y_norm_sq` the absolute difference
/// (times 100) is returned with `degenerate` set.
pub fn relative_gap_percent(f_tilde: f64, f_star: f64, y_norm_sq: f64) -> Result<Gap> {
    if f_tilde < f_star - CONSISTENCY_TOL * f_star.abs().max(1.0) {
        return Err(Error::Inconsistent { f_tilde, f_star });
    }
    let diff = (f_tilde - f_star).max(0.0);
    if f_star < DEGENERATE_RATIO * y_norm_sq || f_star <= 0.0 {
        Ok(Gap { value: 100.0 * diff, degenerate: true })
    } else {
        Ok(Gap { value: 100.0 * diff / f_star, degenerate: false })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    CpuSeconds,
    Rss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub solver_id: String,
    /// `(τ, ρ(τ))` at every distinct finite ratio, starting at `τ = 1`.
    pub points: Vec<(f64, f64)>,
    /// Problems this solver did not solve; their ratio is `+∞`.
    pub unsolved: usize,
    pub problems: usize,
}

impl ProfileCurve {
    /// Fraction of problems with ratio at most `tau`.
    pub fn rho(&self, tau: f64) -> f64 {
        self.points.iter().take_while(|(t, _)| *t <= tau).last().map_or(0.0, |p| p.1)
    }
}

/// Problems are `(problem_id, k, replication)` triples. A solver without a
/// successful record on a problem gets ratio `+∞` there.
pub fn performance_profile(records: &[RunRecord], measure: Measure) -> Result<Vec<ProfileCurve>> {
    if records.is_empty() {
        return Err(Error::MissingData("empty results store".into()));
    }
    let solvers: BTreeSet<&str> = records.iter().map(|r| r.solver_id.as_str()).collect();
    let mut table: BTreeMap<(&str, usize, usize), BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        let cell = table.entry((r.problem_id.as_str(), r.k, r.replication)).or_default();
        let value = match measure {
            Measure::CpuSeconds => r.cpu_seconds.max(CLOCK_FLOOR),
            Measure::Rss => r.rss.max(f64::MIN_POSITIVE),
        };
        if !r.is_failed() && value.is_finite() {
            let slot = cell.entry(r.solver_id.as_str()).or_insert(f64::INFINITY);
            *slot = slot.min(value);
        }
    }
    let problems = table.len();
    let mut ratios: BTreeMap<&str, Vec<f64>> = solvers.iter().map(|s| (*s, Vec::new())).collect();
    for cell in table.values() {
        let best = cell.values().copied().fold(f64::INFINITY, f64::min);
        for s in &solvers {
            let r = match cell.get(s) {
                Some(v) if best.is_finite() => v / best,
                _ => f64::INFINITY,
            };
            ratios.get_mut(s).expect("solver present").push(r);
        }
    }
    Ok(ratios
        .into_iter()
        .map(|(s, mut r)| {
            r.sort_by(f64::total_cmp);
            let unsolved = r.iter().filter(|v| !v.is_finite()).count();
            let mut points = vec![(1.0, 0.0)];
            for (i, &tau) in r.iter().enumerate() {
                if !tau.is_finite() {
                    break;
                }
                let rho = (i + 1) as f64 / problems as f64;
                match points.last_mut() {
                    Some(last) if last.0 >= tau => last.1 = rho,
                    _ => points.push((tau, rho)),
                }
            }
            ProfileCurve { solver_id: s.to_string(), points, unsolved, problems }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
    pub n: usize,
}

/// Order statistic at one-based fractional position `pos`, linearly
/// interpolated and clamped to the sample range.
fn quantile_at(sorted: &[f64], pos: f64) -> f64 {
    let n = sorted.len();
    let pos = pos.clamp(1.0, n as f64);
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo >= n {
        return sorted[n - 1];
    }
    sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1])
}

/// Quartiles at positions `(n+1)/4`, `(n+1)/2`, `3(n+1)/4`; whiskers reach the
/// most extreme samples inside the 1.5·IQR fences.
pub fn box_stats(samples: &[f64]) -> Result<BoxStats> {
    if samples.is_empty() {
        return Err(Error::MissingData("box statistics of an empty sample".into()));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let m = (s.len() + 1) as f64;
    let (q1, median, q3) = (quantile_at(&s, m / 4.0), quantile_at(&s, m / 2.0), quantile_at(&s, 3.0 * m / 4.0));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - FENCE * iqr, q3 + FENCE * iqr);
    let inside = s.iter().copied().filter(|v| (lo_fence..=hi_fence).contains(v));
    let lower_whisker = inside.clone().fold(f64::INFINITY, f64::min).min(q1);
    let upper_whisker = inside.fold(f64::NEG_INFINITY, f64::max).max(q3);
    let outliers = s.iter().copied().filter(|v| *v < lo_fence || *v > hi_fence).collect();
    Ok(BoxStats { q1, median, q3, lower_whisker, upper_whisker, outliers, n: s.len() })
}

/// One row of a gap box file.
#[derive(Debug, Clone, PartialEq)]
pub struct GapBox {
    pub dim_type: String,
    pub regime: String,
    pub k: usize,
    /// `snr{snr}-ex{example}`.
    pub group: String,
    pub solver_id: String,
    pub stats: BoxStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub gap_boxes: Vec<GapBox>,
    /// Per regime, CPU-time profile curves.
    pub profiles: BTreeMap<String, Vec<ProfileCurve>>,
    /// `(dim_type, regime) → solver → mean CPU seconds`.
    pub cpu_means: BTreeMap<(String, String), BTreeMap<String, f64>>,
    pub files: Vec<PathBuf>,
}

impl Report {
    /// The groupings `(dim_type, regime, k, group)` with the solver rows of each.
    pub fn groupings(&self) -> BTreeMap<(String, String, usize, String), Vec<&GapBox>> {
        let mut g: BTreeMap<_, Vec<&GapBox>> = BTreeMap::new();
        for b in &self.gap_boxes {
            g.entry((b.dim_type.clone(), b.regime.clone(), b.k, b.group.clone())).or_default().push(b);
        }
        g
    }
}

fn label(s: &str, fallback: &str) -> String {
    if s.is_empty() {
        fallback.to_string()
    } else {
        s.to_string()
    }
}

fn csv_bytes(rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Computes all report data from `records` and their problem metadata.
///
/// Failed records are ignored for gaps and CPU means and count as unsolved in
/// profiles.
pub fn summarize(records: &[RunRecord], problems: &[ProblemMeta]) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::MissingData("empty results store".into()));
    }
    let meta: BTreeMap<&str, &ProblemMeta> = problems.iter().map(|m| (m.problem_id.as_str(), m)).collect();
    let default_meta = ProblemMeta::default();
    let meta_of = |id: &str| *meta.get(id).unwrap_or(&&default_meta);
    let ok: Vec<RunRecord> = records.iter().filter(|r| !r.is_failed() && r.rss.is_finite()).cloned().collect();
    let best = harness::best_per_problem(&ok)?;

    let mut samples: BTreeMap<(String, String, usize, String, String), Vec<f64>> = BTreeMap::new();
    let mut cpu: BTreeMap<(String, String), BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    for r in &ok {
        let m = meta_of(&r.problem_id);
        let dim = label(&m.dim_type, "custom");
        let regime = label(&m.regime, "all");
        let y_norm_sq = m.y_norm_sq.unwrap_or(0.0);
        let gap = relative_gap_percent(r.rss, best[&(r.problem_id.clone(), r.k)], y_norm_sq)?;
        let group = if m.snr.is_empty() && m.example.is_empty() {
            r.problem_id.clone()
        } else {
            format!("snr{}-ex{}", m.snr, m.example)
        };
        samples.entry((dim.clone(), regime.clone(), r.k, group, r.solver_id.clone())).or_default().push(gap.value);
        let slot = cpu.entry((dim, regime)).or_default().entry(r.solver_id.clone()).or_insert((0.0, 0));
        slot.0 += r.cpu_seconds;
        slot.1 += 1;
    }
    let gap_boxes = samples
        .into_iter()
        .map(|((dim_type, regime, k, group, solver_id), v)| {
            Ok(GapBox { dim_type, regime, k, group, solver_id, stats: box_stats(&v)? })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut by_regime: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        by_regime.entry(label(&meta_of(&r.problem_id).regime, "all")).or_default().push(r.clone());
    }
    let profiles = by_regime
        .into_iter()
        .map(|(regime, recs)| Ok((regime, performance_profile(&recs, Measure::CpuSeconds)?)))
        .collect::<Result<_>>()?;
    let cpu_means = cpu
        .into_iter()
        .map(|(key, m)| (key, m.into_iter().map(|(s, (sum, n))| (s, sum / n as f64)).collect()))
        .collect();
    Ok(Report { gap_boxes, profiles, cpu_means, files: Vec::new() })
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

/// Reads a store and its problem sidecar and writes the report files:
///
/// * `gap_{dim}_{regime}_k{k}.csv`: box statistics of the Relative Gap % per
///   SNR/example group and solver,
/// * `profile_{regime}.csv`: CPU-time performance profiles,
/// * `cpu_table.csv`: mean CPU seconds per dimension type and solver.
pub fn report(store: &Path, out_dir: &Path) -> Result<Report> {
    let records = harness::read_store(store)?;
    let sidecar = harness::problems_sidecar(store);
    let problems = if sidecar.exists() { harness::read_problem_meta(&sidecar)? } else { Vec::new() };
    let mut rep = summarize(&records, &problems)?;
    fs::create_dir_all(out_dir)?;

    let mut files: BTreeMap<PathBuf, Vec<Vec<String>>> = BTreeMap::new();
    for b in &rep.gap_boxes {
        let path = out_dir.join(format!("gap_{}_{}_k{}.csv", b.dim_type, b.regime, b.k));
        let rows = files.entry(path).or_insert_with(|| {
            vec![["group", "solver_id", "q1", "median", "q3", "lo_whisker", "hi_whisker", "outliers"]
                .map(String::from)
                .to_vec()]
        });
        let s = &b.stats;
        rows.push(vec![
            b.group.clone(),
            b.solver_id.clone(),
            fmt_f(s.q1),
            fmt_f(s.median),
            fmt_f(s.q3),
            fmt_f(s.lower_whisker),
            fmt_f(s.upper_whisker),
            s.outliers.iter().map(|v| fmt_f(*v)).collect::<Vec<_>>().join(";"),
        ]);
    }
    for (regime, curves) in &rep.profiles {
        let mut rows = vec![vec!["solver_id".to_string(), "tau".into(), "rho".into()]];
        for c in curves {
            rows.extend(c.points.iter().map(|(t, r)| vec![c.solver_id.clone(), fmt_f(*t), fmt_f(*r)]));
        }
        files.insert(out_dir.join(format!("profile_{regime}.csv")), rows);
    }
    let solvers: BTreeSet<&String> = rep.cpu_means.values().flat_map(|m| m.keys()).collect();
    let mut header = vec!["dim_type".to_string(), "regime".into()];
    header.extend(solvers.iter().map(|s| s.to_string()));
    let mut rows = vec![header];
    for ((dim, regime), m) in &rep.cpu_means {
        let mut row = vec![dim.clone(), regime.clone()];
        row.extend(solvers.iter().map(|s| m.get(*s).map_or_else(String::new, |v| fmt_f(*v))));
        rows.push(row);
    }
    files.insert(out_dir.join("cpu_table.csv"), rows);

    for (path, rows) in files {
        atomic_write(&path, &csv_bytes(rows)?)?;
        rep.files.push(path);
    }
    Ok(rep)
}
