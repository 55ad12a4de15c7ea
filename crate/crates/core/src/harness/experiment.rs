//! Runs a configured experiment: simulate, drop the warm-up, compute the
//! requested statistics and write every artifact.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::config::{Analysis, ExperimentConfig};
use super::output::{emit_csv, write_text, CsvSink, Field};
use crate::error::{Error, Result};
use crate::market::Market;
use crate::num::Real;
use crate::stats::{
    acf, excess_kurtosis, histogram_density, kurtosis_by_delta, kurtosis_by_delta_from_returns,
    log_returns, normalize, power_law_fit, shapiro_francia_subsampled, ReturnSeries, StatsReport,
};

pub const HISTOGRAM_BINS: usize = 100;
/// Upper lag of the power-law fit to the ACF of absolute returns.
pub const POWERLAW_MAX_LAG: usize = 100;

pub const PRICES_HEADER: [&str; 7] = [
    "tick",
    "price",
    "fundamental",
    "demand_noise",
    "demand_tech",
    "demand_fund",
    "active_noise",
];

/// What to compute on a lag-1 return series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisPlan {
    pub analyses: BTreeSet<Analysis>,
    pub deltas: Vec<usize>,
    pub acf_max_lag: usize,
    /// Seeds the Shapiro-Francia subsample offset.
    pub seed: u64,
}

impl AnalysisPlan {
    pub fn from_config<T: Real>(config: &ExperimentConfig<T>) -> Self {
        Self {
            analyses: config.analyses.clone(),
            deltas: config.deltas.clone(),
            acf_max_lag: config.acf_max_lag,
            seed: config.params.seed,
        }
    }

    fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

/// A report plus the analyses that could not be computed.
#[derive(Debug)]
pub struct Analyzed<T> {
    pub report: StatsReport<T>,
    pub failures: Vec<(String, Error)>,
}

/// Computes the planned statistics. `prices`, when given, must be the
/// series the returns came from; aggregated returns are then taken from it
/// directly instead of from summed returns.
pub fn analyze_returns<T: Real>(returns: &[T], prices: Option<&[T]>, plan: &AnalysisPlan) -> Analyzed<T> {
    let mut report = StatsReport::default();
    let mut failures = Vec::new();
    let mut record = |name: &str, e: Error| failures.push((name.to_string(), e));

    if plan.wants(Analysis::Kurtosis) {
        match excess_kurtosis(returns) {
            Ok(k) => report.excess_kurtosis = Some(k),
            Err(e) => record("kurtosis", e),
        }
    }
    if plan.wants(Analysis::SfTest) {
        match shapiro_francia_subsampled(returns, plan.seed) {
            Ok(t) => {
                report.sf_statistic = Some(t.statistic);
                report.sf_p_value = Some(t.p_value);
            }
            Err(e) => record("sf_test", e),
        }
    }
    if plan.wants(Analysis::Acf) || plan.wants(Analysis::Powerlaw) {
        let abs: Vec<T> = returns.iter().map(|r| r.abs()).collect();
        match acf(returns, plan.acf_max_lag).and_then(|s| Ok((s, acf(&abs, plan.acf_max_lag)?))) {
            Ok((signed, abs_acf)) => {
                if plan.wants(Analysis::Powerlaw) {
                    match power_law_fit(&abs_acf, 1, POWERLAW_MAX_LAG.min(plan.acf_max_lag)) {
                        Ok(fit) => report.powerlaw = Some(fit),
                        Err(e) => record("powerlaw", e),
                    }
                }
                if plan.wants(Analysis::Acf) {
                    report.acf_signed = Some(signed);
                    report.acf_abs = Some(abs_acf);
                }
            }
            Err(e) => {
                if plan.wants(Analysis::Acf) {
                    record("acf", Error::Degenerate(e.to_string()));
                }
                if plan.wants(Analysis::Powerlaw) {
                    record("powerlaw", e);
                }
            }
        }
    }
    if plan.wants(Analysis::AggGaussianity) {
        let table = match prices {
            Some(p) => kurtosis_by_delta(p, &plan.deltas),
            None => kurtosis_by_delta_from_returns(returns, &plan.deltas),
        };
        match table {
            Ok(t) => report.kurtosis_by_delta = Some(t),
            Err(e) => record("agg_gaussianity", e),
        }
    }
    Analyzed { report, failures }
}

/// Flat JSON view of a report; absent analyses are omitted.
pub fn report_json<T: Real>(report: &StatsReport<T>, failures: &[(String, Error)], seed: Option<u64>) -> Value {
    let f = |x: T| json!(x.as_f64());
    let mut m = Map::new();
    if let Some(seed) = seed {
        m.insert("seed".into(), json!(seed));
    }
    if let Some(k) = report.excess_kurtosis {
        m.insert("excess_kurtosis".into(), f(k));
    }
    if let Some(w) = report.sf_statistic {
        m.insert("sf_statistic".into(), f(w));
    }
    if let Some(p) = report.sf_p_value {
        m.insert("sf_p_value".into(), f(p));
    }
    if let Some(a) = &report.acf_signed {
        m.insert("acf_signed".into(), Value::Array(a.iter().map(|&v| f(v)).collect()));
    }
    if let Some(a) = &report.acf_abs {
        m.insert("acf_abs".into(), Value::Array(a.iter().map(|&v| f(v)).collect()));
    }
    if let Some(fit) = &report.powerlaw {
        m.insert("powerlaw_exponent".into(), f(fit.exponent));
        m.insert("powerlaw_r2".into(), f(fit.r2));
        m.insert("powerlaw_lag_lo".into(), json!(fit.lag_lo));
        m.insert("powerlaw_lag_hi".into(), json!(fit.lag_hi));
    }
    if let Some(table) = &report.kurtosis_by_delta {
        let t: Map<String, Value> = table.iter().map(|(d, k)| (d.to_string(), f(*k))).collect();
        m.insert("kurtosis_by_delta".into(), Value::Object(t));
    }
    if !failures.is_empty() {
        let errs: Map<String, Value> =
            failures.iter().map(|(n, e)| (n.clone(), json!(e.to_string()))).collect();
        m.insert("errors".into(), Value::Object(errs));
    }
    Value::Object(m)
}

/// One-screen human-readable summary.
pub fn summary<T: Real>(report: &StatsReport<T>, failures: &[(String, Error)]) -> String {
    let mut s = String::new();
    if let Some(k) = report.excess_kurtosis {
        let _ = writeln!(s, "excess kurtosis      {k:>12.4}");
    }
    if let (Some(w), Some(p)) = (report.sf_statistic, report.sf_p_value) {
        let _ = writeln!(s, "Shapiro-Francia W'   {w:>12.6}   p = {:.3e}", p.as_f64());
    }
    if let Some(a) = &report.acf_abs {
        let pick = |k: usize| a.get(k).map_or(f64::NAN, |v| v.as_f64());
        let _ = writeln!(
            s,
            "acf |r| lag 1/10/100 {:>8.4} {:>8.4} {:>8.4}",
            pick(1),
            pick(10),
            pick(100)
        );
    }
    if let Some(fit) = &report.powerlaw {
        let _ = writeln!(
            s,
            "power law (lags {}-{})  exponent {:.4}  r2 {:.4}",
            fit.lag_lo, fit.lag_hi, fit.exponent, fit.r2
        );
    }
    if let Some(table) = &report.kurtosis_by_delta {
        let _ = writeln!(s, "kurtosis by lag:");
        for (d, k) in table {
            let _ = writeln!(s, "  {d:>9}  {k:>12.4}");
        }
    }
    for (name, e) in failures {
        let _ = writeln!(s, "FAILED {name}: {e}");
    }
    s
}

/// Files written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub prices_csv: PathBuf,
    pub returns_csv: Vec<PathBuf>,
    pub acf_csv: Option<PathBuf>,
    pub histogram_csv: Vec<PathBuf>,
    pub report_json: PathBuf,
    pub manifest: PathBuf,
}

impl RunArtifacts {
    pub fn all_files(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = vec![&self.prices_csv];
        v.extend(self.returns_csv.iter().map(PathBuf::as_path));
        v.extend(self.acf_csv.as_deref());
        v.extend(self.histogram_csv.iter().map(PathBuf::as_path));
        v.push(&self.report_json);
        v.push(&self.manifest);
        v
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome<T> {
    pub artifacts: RunArtifacts,
    pub report: StatsReport<T>,
    pub failures: Vec<(String, Error)>,
}

impl<T: Real> ExperimentOutcome<T> {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        summary(&self.report, &self.failures)
    }
}

/// Text that reproduces a run: version header plus the full configuration
/// (output location excluded).
pub fn manifest_text<T: Real>(config: &ExperimentConfig<T>) -> String {
    let echo = ExperimentConfig { output_dir: None, ..config.clone() };
    format!(
        "# {} {}\n# seed {}\n{}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        config.params.seed,
        echo.to_config_text()
    )
}

/// Simulates, analyses and writes all artifacts into `dir`.
///
/// Analysis failures do not abort the run; they are reported in the outcome
/// and in `report.json`. I/O failures and invalid configs are errors.
pub fn run_experiment<T: Real>(config: &ExperimentConfig<T>, dir: &Path) -> Result<ExperimentOutcome<T>> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let params = &config.params;

    let mut market = Market::new(params.clone())?;
    let mut sink = CsvSink::create(dir.join("prices.csv"), &PRICES_HEADER)?;
    let mut prices = Vec::with_capacity(params.ticks + 1);
    prices.push(params.s0);
    sink.row(&[
        Field::Int(0),
        Field::Real(params.s0.as_f64()),
        Field::Real(params.f0.as_f64()),
        Field::Empty,
        Field::Empty,
        Field::Empty,
        Field::Empty,
    ])?;
    for _ in 0..params.ticks {
        let dem = market.step();
        let st = market.state();
        prices.push(st.price);
        sink.row(&[
            Field::Int(st.tick as i64),
            Field::Real(st.price.as_f64()),
            Field::Real(st.fundamental.value().as_f64()),
            Field::Int(dem.noise.into()),
            Field::Int(dem.technical.into()),
            Field::Int(dem.fundamental.into()),
            Field::Int(dem.active_noise.into()),
        ])?;
    }
    let prices_csv = sink.finish()?;

    let measured = &prices[config.warmup..];
    let plan = AnalysisPlan::from_config(config);
    let mut returns_csv = Vec::new();
    let mut histogram_csv = Vec::new();
    let mut failures = Vec::new();

    for &delta in &config.deltas {
        let series = match log_returns(measured, delta) {
            Ok(s) => s,
            Err(e) => {
                failures.push((format!("returns_d{delta}"), e));
                continue;
            }
        };
        returns_csv.push(write_returns(dir, config.warmup, &series)?);
        match normalize(&series).and_then(|n| histogram_density(&n.values, HISTOGRAM_BINS)) {
            Ok(bins) => histogram_csv.push(emit_csv(
                dir.join(format!("hist_d{delta}.csv")),
                &["bin_center", "density"],
                bins.iter().map(|b| [Field::Real(b.center.as_f64()), Field::Real(b.density.as_f64())]),
            )?),
            Err(e) => failures.push((format!("hist_d{delta}"), e)),
        }
    }

    let analyzed = match log_returns(measured, 1) {
        Ok(r1) => analyze_returns(&r1.values, Some(measured), &plan),
        Err(e) => Analyzed {
            report: StatsReport::default(),
            failures: plan.analyses.iter().map(|a| (a.as_str().to_string(), clone_err(&e))).collect(),
        },
    };
    failures.extend(analyzed.failures);
    let report = analyzed.report;

    let acf_csv = write_acf_csv(dir, &report)?;

    let report_json = write_report_json(dir, &report, &failures, Some(params.seed))?;
    let manifest = write_text(dir.join("manifest.txt"), &manifest_text(config))?;

    Ok(ExperimentOutcome {
        artifacts: RunArtifacts {
            dir: dir.to_path_buf(),
            prices_csv,
            returns_csv,
            acf_csv,
            histogram_csv,
            report_json,
            manifest,
        },
        report,
        failures,
    })
}

/// Writes `acf.csv` when the report carries both ACF series.
pub fn write_acf_csv<T: Real>(dir: &Path, report: &StatsReport<T>) -> Result<Option<PathBuf>> {
    let (Some(signed), Some(abs)) = (&report.acf_signed, &report.acf_abs) else {
        return Ok(None);
    };
    emit_csv(
        dir.join("acf.csv"),
        &["lag", "acf_signed", "acf_abs"],
        signed
            .iter()
            .zip(abs)
            .enumerate()
            .map(|(k, (s, a))| [Field::Int(k as i64), Field::Real(s.as_f64()), Field::Real(a.as_f64())]),
    )
    .map(Some)
}

pub fn write_report_json<T: Real>(
    dir: &Path,
    report: &StatsReport<T>,
    failures: &[(String, Error)],
    seed: Option<u64>,
) -> Result<PathBuf> {
    let json = report_json(report, failures, seed);
    write_text(dir.join("report.json"), &(serde_json::to_string_pretty(&json).expect("report serializes") + "\n"))
}

fn clone_err(e: &Error) -> Error {
    Error::Precondition(e.to_string())
}

fn write_returns<T: Real>(dir: &Path, warmup: usize, series: &ReturnSeries<T>) -> Result<PathBuf> {
    emit_csv(
        dir.join(format!("returns_d{}.csv", series.delta)),
        &["tick", "log_return"],
        series
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| [Field::Int((warmup + i) as i64), Field::Real(v.as_f64())]),
    )
}

/// Runs one experiment per seed concurrently, each into `root/seed_<seed>`.
pub fn run_seeds<T: Real>(
    config: &ExperimentConfig<T>,
    seeds: &[u64],
    root: &Path,
) -> Vec<(u64, Result<ExperimentOutcome<T>>)> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let mut cfg = config.clone();
                cfg.params.seed = seed;
                let dir = root.join(format!("seed_{seed}"));
                scope.spawn(move || (seed, run_experiment(&cfg, &dir)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    })
}
