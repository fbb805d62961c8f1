use std::fmt;
use std::str::FromStr;

use super::metrics::{mae, median};
use super::wilcoxon::{bonferroni_threshold, wilcoxon_signed_rank};
use crate::error::{Error, Result};
use crate::hali::{refine, InterpolationScheme};
use crate::imputers::{auto_tune, impute, ImputerConfig, Method};
use crate::signal::{add_noise, apply_missingness, estimate_average_period, generate_synthetic, MissingInterval, Signal, SyntheticSpec};
use crate::tfa::{harmonic_decompose, DecomposeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Noiseless,
    SnrDb(f64),
}

impl NoiseLevel {
    fn snr(self) -> f64 {
        match self {
            NoiseLevel::Noiseless => f64::INFINITY,
            NoiseLevel::SnrDb(v) => v,
        }
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseLevel::Noiseless => f.write_str("noiseless"),
            NoiseLevel::SnrDb(v) => write!(f, "{v}dB"),
        }
    }
}

impl FromStr for NoiseLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "noiseless" || t == "inf" || t == "none" {
            return Ok(NoiseLevel::Noiseless);
        }
        let num = t.strip_suffix("db").unwrap_or(&t);
        num.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(NoiseLevel::SnrDb)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown noise level `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub n_signals: usize,
    pub p_ms_levels: Vec<f64>,
    pub noise_levels: Vec<NoiseLevel>,
    pub methods: Vec<Method>,
    pub schemes: Vec<InterpolationScheme>,
    pub n_intervals: usize,
    pub components: usize,
    pub seed: u64,
    /// Family-wise significance level before the Bonferroni split.
    pub alpha: f64,
    pub synthetic: SyntheticSpec,
    pub decompose: DecomposeParams,
    /// Guard around each gap; the integration half-width when `None`.
    pub guard: Option<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            n_signals: 100,
            p_ms_levels: vec![0.05, 0.1, 0.15, 0.2],
            noise_levels: vec![NoiseLevel::Noiseless, NoiseLevel::SnrDb(20.0), NoiseLevel::SnrDb(10.0)],
            methods: Method::ALL.to_vec(),
            schemes: vec![InterpolationScheme::CubicSpline, InterpolationScheme::Pchip],
            n_intervals: 3,
            components: 1,
            seed: 0,
            alpha: 0.05,
            synthetic: SyntheticSpec::default(),
            decompose: DecomposeParams::default(),
            guard: None,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.n_signals == 0 {
            return bad("n_signals must be at least 1");
        }
        if self.p_ms_levels.is_empty() || self.p_ms_levels.iter().any(|p| !(*p > 0.0 && *p < 0.5)) {
            return bad("missing fractions must lie in (0, 0.5)");
        }
        if self.noise_levels.is_empty() {
            return bad("at least one noise level is required");
        }
        if self.methods.is_empty() {
            return bad("at least one initial method is required");
        }
        if self.n_intervals == 0 || self.components == 0 {
            return bad("n_intervals and components must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        self.synthetic.validate()
    }

    fn signal_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}

/// Mixes a per-signal seed with a stream tag so noise and gap placement
/// draw from unrelated generators.
fn stream(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Results for one signal of one cell. MAEs are `None` when the step failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalOutcome {
    pub index: usize,
    pub seed: u64,
    pub intervals: Vec<MissingInterval>,
    pub method_mae: Vec<(Method, Option<f64>)>,
    pub best: Option<Method>,
    pub hali_mae: Vec<(InterpolationScheme, Option<f64>)>,
    pub failures: Vec<String>,
}

impl SignalOutcome {
    pub fn best_mae(&self) -> Option<f64> {
        let b = self.best?;
        self.method_mae.iter().find(|(m, _)| *m == b).and_then(|(_, v)| *v)
    }

    pub fn hali(&self, scheme: InterpolationScheme) -> Option<f64> {
        self.hali_mae.iter().find(|(s, _)| *s == scheme).and_then(|(_, v)| *v)
    }

    pub fn flagged(&self) -> bool {
        !self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowKind {
    Initial(Method),
    BestInitial,
    Hali(InterpolationScheme),
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowKind::Initial(m) => write!(f, "{m}"),
            RowKind::BestInitial => f.write_str("BI"),
            RowKind::Hali(InterpolationScheme::CubicSpline) => f.write_str("HaLI-S"),
            RowKind::Hali(InterpolationScheme::Pchip) => f.write_str("HaLI-P"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub kind: RowKind,
    /// Per-signal MAEs of the signals where this step succeeded.
    pub maes: Vec<f64>,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: RowKind,
    pub b: RowKind,
    /// Number of signals where both MAEs exist.
    pub n_pairs: usize,
    pub p_value: Option<f64>,
    pub threshold: f64,
    pub significant: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub noise: NoiseLevel,
    pub p_ms: f64,
    pub outcomes: Vec<SignalOutcome>,
    /// How often each initial method was the best one.
    pub wins: Vec<(Method, usize)>,
    pub rows: Vec<MethodRow>,
    pub comparisons: Vec<Comparison>,
}

impl CellReport {
    pub fn row(&self, kind: RowKind) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }

    pub fn median(&self, kind: RowKind) -> f64 {
        self.row(kind).map_or(f64::NAN, |r| r.median)
    }

    pub fn comparison(&self, a: RowKind, b: RowKind) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| (c.a == a && c.b == b) || (c.a == b && c.b == a))
    }

    pub fn n_flagged(&self) -> usize {
        self.outcomes.iter().filter(|o| o.flagged()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub cells: Vec<CellReport>,
}

impl BenchmarkReport {
    pub fn cell(&self, noise: NoiseLevel, p_ms: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.noise == noise && c.p_ms == p_ms)
    }
}

/// Runs every configured initial method on one masked signal, picks the
/// best by MAE against `clean`, and refines it with each scheme.
pub fn evaluate_signal(
    clean: &Signal,
    observed: &Signal,
    intervals: &[MissingInterval],
    config: &BenchmarkConfig,
) -> (Vec<(Method, Option<f64>)>, Option<Method>, Vec<(InterpolationScheme, Option<f64>)>, Vec<String>) {
    let mut failures = Vec::new();
    let none_hali = |s: &[InterpolationScheme]| s.iter().map(|&k| (k, None)).collect::<Vec<_>>();
    let avg_period = match estimate_average_period(observed) {
        Ok(t) => t,
        Err(e) => {
            failures.push(format!("average period: {e}"));
            let methods = config.methods.iter().map(|&m| (m, None)).collect();
            return (methods, None, none_hali(&config.schemes), failures);
        }
    };
    let tuned = match auto_tune(observed, avg_period) {
        Ok(c) => c,
        Err(e) => {
            failures.push(format!("tuning: {e}"));
            let methods = config.methods.iter().map(|&m| (m, None)).collect();
            return (methods, None, none_hali(&config.schemes), failures);
        }
    };

    let mut outputs: Vec<(Method, Option<Signal>)> = Vec::new();
    let mut method_mae = Vec::new();
    for &m in &config.methods {
        let cfg: ImputerConfig = tuned.clone().with_method(m);
        let result = impute(observed, intervals, &cfg).and_then(|out| {
            for r in &out.records {
                if r.used != Some(m) {
                    let used = r.used.map_or("linear".to_string(), |u| u.to_string());
                    failures.push(format!("{m}: interval at {} fell back to {used}", r.interval.start));
                }
            }
            let e = mae(clean.samples(), out.signal.samples(), intervals)?;
            Ok((out.signal, e))
        });
        match result {
            Ok((s, e)) if e.is_finite() => {
                method_mae.push((m, Some(e)));
                outputs.push((m, Some(s)));
            }
            Ok(_) => {
                failures.push(format!("{m}: non-finite error"));
                method_mae.push((m, None));
                outputs.push((m, None));
            }
            Err(e) => {
                failures.push(format!("{m}: {e}"));
                method_mae.push((m, None));
                outputs.push((m, None));
            }
        }
    }

    let best = method_mae
        .iter()
        .filter_map(|(m, e)| e.map(|e| (*m, e)))
        .fold(None, |acc: Option<(Method, f64)>, (m, e)| match acc {
            Some((_, be)) if be <= e => acc,
            _ => Some((m, e)),
        })
        .map(|(m, _)| m);
    let Some(best) = best else {
        failures.push("no initial method succeeded".into());
        return (method_mae, None, none_hali(&config.schemes), failures);
    };
    let initial = outputs
        .iter()
        .find(|(m, _)| *m == best)
        .and_then(|(_, s)| s.clone())
        .expect("best method has an output");

    let mut params = config.decompose.clone();
    params.stft.avg_period.get_or_insert(avg_period);
    let decomposition = match harmonic_decompose(&initial, config.components, &params) {
        Ok(d) => d,
        Err(e) => {
            failures.push(format!("decomposition: {e}"));
            return (method_mae, Some(best), none_hali(&config.schemes), failures);
        }
    };
    let guard = config.guard.unwrap_or(decomposition.delta);
    let hali_mae = config
        .schemes
        .iter()
        .map(|&scheme| {
            let e = refine(&initial, intervals, &decomposition, scheme, guard)
                .and_then(|r| mae(clean.samples(), r.final_signal.samples(), intervals));
            match e {
                Ok(v) if v.is_finite() => (scheme, Some(v)),
                Ok(_) => {
                    failures.push(format!("HaLI-{scheme}: non-finite error"));
                    (scheme, None)
                }
                Err(err) => {
                    failures.push(format!("HaLI-{scheme}: {err}"));
                    (scheme, None)
                }
            }
        })
        .collect();
    (method_mae, Some(best), hali_mae, failures)
}

fn run_signal(config: &BenchmarkConfig, noise: NoiseLevel, noise_idx: usize, p_ms: f64, p_idx: usize, index: usize) -> SignalOutcome {
    let seed = config.signal_seed(index);
    let fail = |msg: String| SignalOutcome {
        index,
        seed,
        intervals: Vec::new(),
        method_mae: config.methods.iter().map(|&m| (m, None)).collect(),
        best: None,
        hali_mae: config.schemes.iter().map(|&s| (s, None)).collect(),
        failures: vec![msg],
    };
    let spec = SyntheticSpec {
        seed,
        snr_db: None,
        ..config.synthetic.clone()
    };
    let truth = match generate_synthetic(&spec) {
        Ok(t) => t,
        Err(e) => return fail(format!("generation: {e}")),
    };
    let (masked, intervals) = match apply_missingness(&truth, p_ms, config.n_intervals, stream(seed, 1 + p_idx as u64)) {
        Ok(v) => v,
        Err(e) => return fail(format!("missingness: {e}")),
    };
    let observed = match add_noise(&masked, noise.snr(), stream(seed, 1000 + noise_idx as u64)) {
        Ok(s) => s,
        Err(e) => return fail(format!("noise: {e}")),
    };
    let (method_mae, best, hali_mae, failures) = evaluate_signal(&truth.clean, &observed, &intervals, config);
    SignalOutcome {
        index,
        seed,
        intervals,
        method_mae,
        best,
        hali_mae,
        failures,
    }
}

/// Seeded synthetic sweep over noise levels and missing fractions. Signal
/// `i` uses seed `seed + i` in every cell, so cells share ground truths.
/// Per-signal failures are recorded in the outcomes and never abort the
/// sweep.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    run_benchmark_with(config, |_, _, _| {})
}

/// [`run_benchmark`] with a callback after each signal, given the noise
/// level, the missing fraction and the outcome.
pub fn run_benchmark_with<F>(config: &BenchmarkConfig, mut progress: F) -> Result<BenchmarkReport>
where
    F: FnMut(NoiseLevel, f64, &SignalOutcome),
{
    config.validate()?;
    let mut cells = Vec::new();
    for (ni, &noise) in config.noise_levels.iter().enumerate() {
        for (pi, &p_ms) in config.p_ms_levels.iter().enumerate() {
            let outcomes: Vec<SignalOutcome> = (0..config.n_signals)
                .map(|i| {
                    let o = run_signal(config, noise, ni, p_ms, pi, i);
                    progress(noise, p_ms, &o);
                    o
                })
                .collect();
            cells.push(aggregate(config, noise, p_ms, outcomes));
        }
    }
    Ok(BenchmarkReport { cells })
}

/// Builds the rows, win counts and pairwise tests of one cell.
pub fn aggregate(config: &BenchmarkConfig, noise: NoiseLevel, p_ms: f64, outcomes: Vec<SignalOutcome>) -> CellReport {
    let mut kinds: Vec<RowKind> = config.methods.iter().map(|&m| RowKind::Initial(m)).collect();
    kinds.push(RowKind::BestInitial);
    kinds.extend(config.schemes.iter().map(|&s| RowKind::Hali(s)));

    let value = |o: &SignalOutcome, k: RowKind| -> Option<f64> {
        match k {
            RowKind::Initial(m) => o.method_mae.iter().find(|(x, _)| *x == m).and_then(|(_, v)| *v),
            RowKind::BestInitial => o.best_mae(),
            RowKind::Hali(s) => o.hali(s),
        }
    };
    let rows = kinds
        .iter()
        .map(|&kind| {
            let maes: Vec<f64> = outcomes.iter().filter_map(|o| value(o, kind)).collect();
            MethodRow {
                kind,
                median: median(&maes),
                maes,
            }
        })
        .collect();

    let wins = config
        .methods
        .iter()
        .map(|&m| (m, outcomes.iter().filter(|o| o.best == Some(m)).count()))
        .collect();

    let mut family = vec![RowKind::BestInitial];
    family.extend(config.schemes.iter().map(|&s| RowKind::Hali(s)));
    let mut pairs = Vec::new();
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            pairs.push((family[i], family[j]));
        }
    }
    let threshold = bonferroni_threshold(config.alpha, pairs.len());
    let comparisons = pairs
        .into_iter()
        .map(|(a, b)| {
            let (xa, xb): (Vec<f64>, Vec<f64>) = outcomes
                .iter()
                .filter_map(|o| Some((value(o, a)?, value(o, b)?)))
                .unzip();
            let (p_value, note) = match wilcoxon_signed_rank(&xa, &xb) {
                Ok(r) => (Some(r.p_value), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Comparison {
                a,
                b,
                n_pairs: xa.len(),
                p_value,
                threshold,
                significant: p_value.is_some_and(|p| p < threshold),
                note,
            }
        })
        .collect();

    CellReport {
        noise,
        p_ms,
        outcomes,
        wins,
        rows,
        comparisons,
    }
}
