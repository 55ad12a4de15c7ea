//! Flat `key = value` experiment configuration with `#` comments.
//!
//! A `preset` line is applied first wherever it appears; every other key
//! overrides the preset. Keys: preset, m, u, a, b, d, l_A, l_B, l, mu_f,
//! sigma_f, N1, N5, N21, N_T, N_F, T, S0, f0, f_mode, seed, warmup, deltas,
//! acf_max_lag, analyses, out.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::market::ModelParams;
use crate::num::Real;
use crate::traders::FundamentalMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Analysis {
    Kurtosis,
    SfTest,
    Acf,
    Powerlaw,
    AggGaussianity,
}

impl Analysis {
    pub const ALL: [Analysis; 5] = [
        Analysis::Kurtosis,
        Analysis::SfTest,
        Analysis::Acf,
        Analysis::Powerlaw,
        Analysis::AggGaussianity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::Kurtosis => "kurtosis",
            Analysis::SfTest => "sf_test",
            Analysis::Acf => "acf",
            Analysis::Powerlaw => "powerlaw",
            Analysis::AggGaussianity => "agg_gaussianity",
        }
    }
}

impl FromStr for Analysis {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Analysis::ALL.into_iter().find(|a| a.as_str() == s).ok_or(())
    }
}

pub const DEFAULT_DELTAS: [usize; 4] = [1, 10, 100, 1000];
pub const DEFAULT_ACF_MAX_LAG: usize = 100;

/// Ticks discarded before statistics: five times the longest memory
/// (the slow MACD EMA or the 21-tick noise group).
pub fn default_warmup(macd_slow: usize) -> usize {
    macd_slow.max(21) * 5
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig<T> {
    pub params: ModelParams<T>,
    pub analyses: BTreeSet<Analysis>,
    pub deltas: Vec<usize>,
    pub output_dir: Option<PathBuf>,
    pub warmup: usize,
    pub acf_max_lag: usize,
}

impl<T: Real> ExperimentConfig<T> {
    pub fn new(params: ModelParams<T>) -> Self {
        Self {
            warmup: default_warmup(params.macd_slow),
            params,
            analyses: Analysis::ALL.into_iter().collect(),
            deltas: DEFAULT_DELTAS.to_vec(),
            output_dir: None,
            acf_max_lag: DEFAULT_ACF_MAX_LAG,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.deltas.is_empty() || self.deltas.contains(&0) {
            return Err(Error::InvalidParam { key: "deltas", constraint: "a non-empty list of lags >= 1" });
        }
        if self.acf_max_lag < 1 {
            return Err(Error::InvalidParam { key: "acf_max_lag", constraint: "acf_max_lag >= 1" });
        }
        if self.warmup >= self.params.ticks {
            return Err(Error::InvalidParam { key: "warmup", constraint: "warmup < T" });
        }
        Ok(())
    }

    /// Writes every key explicitly (no preset), so that parsing the text
    /// reproduces this configuration.
    pub fn to_config_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("m", &p.m);
        kv("u", &p.u);
        kv("a", &p.a);
        kv("b", &p.b);
        kv("d", &p.d);
        kv("l_A", &p.macd_fast);
        kv("l_B", &p.macd_slow);
        kv("l", &p.macd_signal);
        kv("mu_f", &p.mu_f);
        kv("sigma_f", &p.sigma_f);
        kv("N1", &p.n1);
        kv("N5", &p.n5);
        kv("N21", &p.n21);
        kv("N_T", &p.n_technical);
        kv("N_F", &p.n_fundamental);
        kv("T", &p.ticks);
        kv("S0", &p.s0);
        kv("f0", &p.f0);
        kv("f_mode", &p.f_mode.as_str());
        kv("seed", &p.seed);
        kv("warmup", &self.warmup);
        kv("deltas", &join(self.deltas.iter()));
        kv("acf_max_lag", &self.acf_max_lag);
        kv("analyses", &join(self.analyses.iter().map(|a| a.as_str())));
        if let Some(dir) = &self.output_dir {
            kv("out", &dir.display());
        }
        s
    }
}

fn join<I: Iterator<Item = D>, D: std::fmt::Display>(items: I) -> String {
    items.map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

/// A named starting configuration.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: [Preset; 9] = [
    Preset { name: "trader_set_A", description: "N1=4 N5=4 N21=8 N_T=2 N_F=2, reference parameters, T=10^6" },
    Preset { name: "trader_set_B", description: "N21=16 N_T=2 N_F=2, reference parameters, T=10^6" },
    Preset {
        name: "gaussianity_B",
        description: "Trader Set B, varying f, T=10^7, kurtosis at lags 1,10^2,10^3,10^4",
    },
    Preset { name: "gaussianity_B_constant_f", description: "as gaussianity_B with a constant fundamental value" },
    Preset { name: "constant_activity_A", description: "Trader Set A with d=1: every noise trader always active" },
    Preset { name: "constant_activity_B", description: "Trader Set B with d=1" },
    Preset { name: "no_chartists_A", description: "Trader Set A without technical traders (N_T=0)" },
    Preset { name: "memoryless_A", description: "16 memoryless noise traders (N1=16) with N_T=2 N_F=2" },
    Preset { name: "noise_only_B", description: "Trader Set B noise traders only (N_T=N_F=0)" },
];

pub fn preset<T: Real>(name: &str) -> Option<ExperimentConfig<T>> {
    let a = ModelParams::<T>::trader_set_a;
    let b = ModelParams::<T>::trader_set_b;
    let gaussianity = |f_mode| {
        let mut c = ExperimentConfig::new(ModelParams { ticks: 10_000_000, f_mode, ..b() });
        c.deltas = vec![1, 100, 1000, 10_000];
        c.analyses = [Analysis::Kurtosis, Analysis::SfTest, Analysis::AggGaussianity].into();
        c
    };
    let params = match name {
        "trader_set_A" => a(),
        "trader_set_B" => b(),
        "gaussianity_B" => return Some(gaussianity(FundamentalMode::Varying)),
        "gaussianity_B_constant_f" => return Some(gaussianity(FundamentalMode::Constant)),
        "constant_activity_A" => ModelParams { d: T::one(), ..a() },
        "constant_activity_B" => ModelParams { d: T::one(), ..b() },
        "no_chartists_A" => ModelParams { n_technical: 0, ..a() },
        "memoryless_A" => ModelParams { n1: 16, n5: 0, n21: 0, ..a() },
        "noise_only_B" => ModelParams { n_technical: 0, n_fundamental: 0, ..b() },
        _ => return None,
    };
    Some(ExperimentConfig::new(params))
}

const KEYS: [&str; 26] = [
    "preset", "m", "u", "a", "b", "d", "l_A", "l_B", "l", "mu_f", "sigma_f", "N1", "N5", "N21",
    "N_T", "N_F", "T", "S0", "f0", "f_mode", "seed", "warmup", "deltas", "acf_max_lag",
    "analyses", "out",
];

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn parse_real<T: Real>(e: &Entry) -> Result<T> {
    e.value
        .parse::<T>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| type_error(e, "a finite number"))
}

fn parse_count(e: &Entry) -> Result<usize> {
    parse_count_str(e.value).ok_or_else(|| type_error(e, "a non-negative integer"))
}

fn parse_count_str(s: &str) -> Option<usize> {
    let s = s.trim();
    if let Ok(v) = s.parse::<usize>() {
        return Some(v);
    }
    // Accept integral scientific notation such as 1e7.
    let v: f64 = s.parse().ok()?;
    (v >= 0.0 && v.fract() == 0.0 && v <= 2f64.powi(53)).then_some(v as usize)
}

fn type_error(e: &Entry, expected: &str) -> Error {
    Error::Config {
        line: e.line,
        message: format!("key `{}` expects {expected}, got `{}`", e.key, e.value),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config<T: Real>(text: &str) -> Result<ExperimentConfig<T>> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Config { line, message: format!("unknown key `{key}`") });
        }
        if !seen.insert(key) {
            return Err(Error::Config { line, message: format!("duplicate key `{key}`") });
        }
        entries.push(Entry { line, key, value });
    }

    let mut cfg = match entries.iter().find(|e| e.key == "preset") {
        Some(e) => preset(e.value).ok_or_else(|| Error::Config {
            line: e.line,
            message: format!(
                "unknown preset `{}` (known: {})",
                e.value,
                join(PRESETS.iter().map(|p| p.name))
            ),
        })?,
        None => ExperimentConfig::new(ModelParams::trader_set_a()),
    };

    let mut warmup_set = false;
    for e in entries.iter().filter(|e| e.key != "preset") {
        let p = &mut cfg.params;
        match e.key {
            "m" => p.m = parse_real(e)?,
            "u" => p.u = parse_real(e)?,
            "a" => p.a = parse_real(e)?,
            "b" => p.b = parse_real(e)?,
            "d" => p.d = parse_real(e)?,
            "l_A" => p.macd_fast = parse_count(e)?,
            "l_B" => p.macd_slow = parse_count(e)?,
            "l" => p.macd_signal = parse_count(e)?,
            "mu_f" => p.mu_f = parse_real(e)?,
            "sigma_f" => p.sigma_f = parse_real(e)?,
            "N1" => p.n1 = parse_count(e)?,
            "N5" => p.n5 = parse_count(e)?,
            "N21" => p.n21 = parse_count(e)?,
            "N_T" => p.n_technical = parse_count(e)?,
            "N_F" => p.n_fundamental = parse_count(e)?,
            "T" => p.ticks = parse_count(e)?,
            "S0" => p.s0 = parse_real(e)?,
            "f0" => p.f0 = parse_real(e)?,
            "f_mode" => {
                p.f_mode = e.value.parse().map_err(|_| type_error(e, "`varying` or `constant`"))?
            }
            "seed" => p.seed = e.value.parse().map_err(|_| type_error(e, "an unsigned 64-bit integer"))?,
            "warmup" => {
                cfg.warmup = parse_count(e)?;
                warmup_set = true;
            }
            "deltas" => {
                cfg.deltas = e
                    .value
                    .split(',')
                    .map(|s| parse_count_str(s).ok_or_else(|| type_error(e, "a comma list of integers")))
                    .collect::<Result<_>>()?
            }
            "acf_max_lag" => cfg.acf_max_lag = parse_count(e)?,
            "analyses" => {
                cfg.analyses = e
                    .value
                    .split(',')
                    .map(|s| {
                        s.trim().parse().map_err(|_| {
                            type_error(e, "a comma list of kurtosis, sf_test, acf, powerlaw, agg_gaussianity")
                        })
                    })
                    .collect::<Result<_>>()?
            }
            "out" => cfg.output_dir = Some(PathBuf::from(e.value)),
            _ => unreachable!("key list checked above"),
        }
    }
    if !warmup_set {
        cfg.warmup = default_warmup(cfg.params.macd_slow);
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn set_a_preset_matches_reference_tables() {
        let c: ExperimentConfig<f64> = parse_config("preset = trader_set_A").unwrap();
        let p = &c.params;
        assert_eq!((p.n1, p.n5, p.n21, p.n_technical, p.n_fundamental), (4, 4, 8, 2, 2));
        assert_eq!((p.m, p.u, p.a, p.b, p.d), (0.4, 5.0, 4000.0, 0.02, 0.05));
        assert_eq!((p.macd_fast, p.macd_slow, p.macd_signal), (12, 26, 9));
        assert_eq!((p.mu_f, p.sigma_f), (3e-4, 0.025));
        assert_eq!((p.s0, p.f0), (100.0, 100.0));
        assert_eq!(p.f_mode, FundamentalMode::Varying);
        assert_eq!(p.ticks, 1_000_000);
        assert_eq!(c.warmup, 130);
        assert_eq!(c.acf_max_lag, 100);
        assert_eq!(c.analyses.len(), 5);
    }

    #[test]
    fn set_b_preset_matches_reference_tables() {
        let c: ExperimentConfig<f64> = parse_config("preset = trader_set_B\n").unwrap();
        let p = &c.params;
        assert_eq!((p.n1, p.n5, p.n21, p.n_technical, p.n_fundamental), (0, 0, 16, 2, 2));
        assert_eq!((p.m, p.u, p.a, p.b, p.d), (0.4, 5.0, 4000.0, 0.02, 0.05));
        assert_eq!((p.mu_f, p.sigma_f), (3e-4, 0.025));
    }

    #[test]
    fn all_presets_parse() {
        for p in PRESETS {
            let c: ExperimentConfig<f64> = parse_config(&format!("preset = {}", p.name)).unwrap();
            c.validate().unwrap();
        }
        let g: ExperimentConfig<f64> = parse_config("preset = gaussianity_B_constant_f").unwrap();
        assert_eq!(g.params.ticks, 10_000_000);
        assert_eq!(g.params.f_mode, FundamentalMode::Constant);
        assert_eq!(g.deltas, vec![1, 100, 1000, 10_000]);
    }

    #[test]
    fn overrides_apply_after_preset_in_any_order() {
        let text = "# comment\nT = 5000  # trailing\nseed = 9\npreset = trader_set_B\nf_mode = constant\n\
                    deltas = 1, 5,50\nanalyses = kurtosis,acf\nl_B = 30\n";
        let c: ExperimentConfig<f64> = parse_config(text).unwrap();
        assert_eq!(c.params.ticks, 5000);
        assert_eq!(c.params.seed, 9);
        assert_eq!(c.params.n21, 16);
        assert_eq!(c.params.f_mode, FundamentalMode::Constant);
        assert_eq!(c.deltas, vec![1, 5, 50]);
        assert_eq!(c.analyses, [Analysis::Kurtosis, Analysis::Acf].into());
        assert_eq!(c.warmup, 150);
    }

    #[test]
    fn scientific_integer_counts() {
        let c: ExperimentConfig<f64> = parse_config("T = 1e5").unwrap();
        assert_eq!(c.params.ticks, 100_000);
        assert!(parse_config::<f64>("T = 1.5e0").is_err());
    }

    #[test]
    fn impact_factor_out_of_range_is_rejected() {
        let err = parse_config::<f64>("m = 1.5").unwrap_err();
        assert!(matches!(err, Error::InvalidParam { key: "m", constraint: "0 < m < 1" }));
        assert!(err.to_string().contains("0 < m < 1"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn malformed_documents_name_the_problem() {
        let cases = [
            ("bogus = 1", "unknown key `bogus`"),
            ("m = 0.3\nm = 0.2", "duplicate key `m`"),
            ("N1 = -3", "key `N1`"),
            ("u = fast", "key `u`"),
            ("f_mode = sideways", "key `f_mode`"),
            ("analyses = kurtosis,plots", "key `analyses`"),
            ("preset = trader_set_C", "unknown preset"),
            ("just words", "expected `key = value`"),
        ];
        for (text, needle) in cases {
            let err = parse_config::<f64>(text).unwrap_err();
            assert!(err.to_string().contains(needle), "{text:?} -> {err}");
            assert_eq!(err.exit_code(), 1);
        }
        assert!(matches!(
            parse_config::<f64>("deltas = 0,1"),
            Err(Error::InvalidParam { key: "deltas", .. })
        ));
        assert!(matches!(
            parse_config::<f64>("T = 100\nwarmup = 100"),
            Err(Error::InvalidParam { key: "warmup", .. })
        ));
    }

    #[test]
    fn single_precision_configs_parse() {
        let c: ExperimentConfig<f32> = parse_config("preset = trader_set_A\nm = 0.25").unwrap();
        assert_eq!(c.params.m, 0.25_f32);
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig<f64>> {
        (
            (0.001f64..0.999, 0.0f64..20.0, 1.0f64..1e4, 0.0f64..0.1, 0.001f64..=1.0),
            (1usize..50, 1usize..50, 1usize..50, -1e-3f64..1e-3, 0.0f64..0.1),
            (0usize..20, 0usize..20, 1usize..20, 0usize..5, 0usize..5),
            (1_000usize..10_000_000, 1.0f64..1e3, 1.0f64..1e3, any::<bool>(), any::<u64>()),
            (0usize..999, proptest::collection::vec(1usize..10_000, 1..5), 1usize..500),
            (proptest::collection::btree_set(0usize..5, 1..5), proptest::option::of("[a-z_/]{1,12}")),
        )
            .prop_map(|(s, macd, counts, run, extra, misc)| ExperimentConfig {
                params: ModelParams {
                    m: s.0,
                    u: s.1,
                    a: s.2,
                    b: s.3,
                    d: s.4,
                    macd_fast: macd.0,
                    macd_slow: macd.1,
                    macd_signal: macd.2,
                    mu_f: macd.3,
                    sigma_f: macd.4,
                    n1: counts.0,
                    n5: counts.1,
                    n21: counts.2,
                    n_technical: counts.3,
                    n_fundamental: counts.4,
                    ticks: run.0,
                    s0: run.1,
                    f0: run.2,
                    f_mode: if run.3 { FundamentalMode::Varying } else { FundamentalMode::Constant },
                    seed: run.4,
                },
                warmup: extra.0,
                deltas: extra.1,
                acf_max_lag: extra.2,
                analyses: misc.0.into_iter().map(|i| Analysis::ALL[i]).collect(),
                output_dir: misc.1.map(PathBuf::from),
            })
    }

    proptest! {
        #[test]
        fn config_text_round_trips(cfg in arb_config()) {
            let text = cfg.to_config_text();
            let back: ExperimentConfig<f64> = parse_config(&text).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
