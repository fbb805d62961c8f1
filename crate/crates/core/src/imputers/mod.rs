//! Initial imputers: template matching, linear dynamics (LSE, DMD, kernel
//! EDMD), Gaussian-process regression and a seasonal autoregressive model.
//!
//! Intervals are filled left to right; a later interval may use values
//! imputed for an earlier one. Observed samples are never modified.

mod dynamics;
mod gpr;
mod sar;
mod seasonality;
mod tlm;
mod tune;

pub use dynamics::{dmd_eigenvalues, impute_dynamics, DynamicsVariant};
pub use gpr::{impute_gpr, GprImputation};
pub use sar::{impute_sar, Direction};
pub use seasonality::{estimate_seasonality, Side};
pub use tlm::impute_tlm;
pub use tune::{auto_tune, median_pairwise_distance};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::{fill_linear, validate_intervals, MissingInterval, Signal};
use crate::tfa::estimate_fundamental_phase;

/// Forecasts beyond this multiple of the largest observed magnitude are
/// clamped.
const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Tlm,
    Lse,
    Dmd,
    Edmd,
    Gpr,
    SarForward,
    SarBackward,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Tlm,
        Method::Lse,
        Method::Dmd,
        Method::Edmd,
        Method::Gpr,
        Method::SarForward,
        Method::SarBackward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tlm => "tlm",
            Method::Lse => "lse",
            Method::Dmd => "dmd",
            Method::Edmd => "edmd",
            Method::Gpr => "gpr",
            Method::SarForward => "sarf",
            Method::SarBackward => "sarb",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method '{s}' (expected one of tlm, lse, dmd, edmd, gpr, sarf, sarb)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputerConfig {
    pub method: Method,
    /// TLM template length `d`.
    pub template_len: usize,
    /// Delay-vector dimension `K`.
    pub embed_dim: usize,
    /// Number of delay vectors `M`.
    pub subsignal_len: usize,
    /// Kernel size for EDMD.
    pub kernel_size: f64,
    /// Fixed seasonal lag; estimated per interval when `None`.
    pub seasonality: Option<usize>,
    pub cycles_for_seasonality: usize,
    /// Average period used when a seasonal lag cannot be estimated.
    pub avg_period: f64,
    pub auto: bool,
}

impl ImputerConfig {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.template_len == 0 || self.embed_dim == 0 || self.subsignal_len == 0 {
            return Err(Error::InvalidConfig("d, K and M must be positive".into()));
        }
        if !(self.kernel_size.is_finite() && self.kernel_size > 0.0) {
            return Err(Error::InvalidConfig(format!("kernel size must be positive, got {}", self.kernel_size)));
        }
        if self.cycles_for_seasonality == 0 {
            return Err(Error::InvalidConfig("seasonality needs at least one cycle".into()));
        }
        if matches!(self.seasonality, Some(l) if l < 2) {
            return Err(Error::InvalidConfig("seasonal lag must be at least 2".into()));
        }
        if !(self.avg_period.is_finite() && self.avg_period >= 2.0) {
            return Err(Error::InvalidConfig(format!("average period must be at least 2, got {}", self.avg_period)));
        }
        Ok(())
    }

    /// Fallback seasonal lag.
    pub(crate) fn default_lag(&self) -> usize {
        self.seasonality.unwrap_or_else(|| self.avg_period.round().max(2.0) as usize)
    }
}

/// How one interval was filled.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRecord {
    pub interval: MissingInterval,
    /// Method that produced the values; `None` for linear interpolation.
    pub used: Option<Method>,
    /// Some forecast values hit the divergence clamp.
    pub clamped: bool,
    /// Posterior standard deviation per imputed sample (GPR only).
    pub posterior_sd: Option<Vec<f64>>,
    /// Reasons the preferred methods were skipped.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputeOutcome {
    pub signal: Signal,
    pub records: Vec<GapRecord>,
}

/// Values for one interval.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GapFill {
    pub values: Vec<f64>,
    pub clamped: bool,
    pub posterior_sd: Option<Vec<f64>>,
}

impl GapFill {
    pub fn plain(values: Vec<f64>) -> Self {
        Self {
            values,
            clamped: false,
            posterior_sd: None,
        }
    }
}

/// Mutable copy of a signal where filled intervals become available.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    pub x: Vec<f64>,
    pub avail: Vec<bool>,
    pub bound: f64,
}

impl Workspace {
    pub fn new(signal: &Signal) -> Self {
        let observed_max = signal
            .samples()
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        Self {
            x: signal.samples().to_vec(),
            avail: signal.missing().iter().map(|m| !m).collect(),
            bound: DIVERGENCE_FACTOR * observed_max.max(f64::MIN_POSITIVE),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// Available samples immediately before `start`.
    pub fn left_run(&self, start: usize) -> usize {
        self.avail[..start].iter().rev().take_while(|&&a| a).count()
    }

    /// Available samples from `end` onwards.
    pub fn right_run(&self, end: usize) -> usize {
        self.avail[end..].iter().take_while(|&&a| a).count()
    }

    /// The last `len` samples before `start`, oldest first.
    pub fn history_left(&self, start: usize, len: usize) -> Vec<f64> {
        self.x[start - len..start].to_vec()
    }

    /// The `len` samples from `end` onwards, reversed so that the sample
    /// adjacent to the gap comes last.
    pub fn history_right(&self, end: usize, len: usize) -> Vec<f64> {
        self.x[end..end + len].iter().rev().copied().collect()
    }

    pub fn clamp(&self, values: &mut [f64]) -> bool {
        let b = self.bound;
        let mut clamped = false;
        for v in values.iter_mut() {
            if !v.is_finite() {
                *v = 0.0;
                clamped = true;
            } else if v.abs() > b {
                *v = v.clamp(-b, b);
                clamped = true;
            }
        }
        clamped
    }

    pub fn write(&mut self, gap: &MissingInterval, values: &[f64]) {
        self.x[gap.range()].copy_from_slice(values);
        self.avail[gap.range()].iter_mut().for_each(|a| *a = true);
    }

    pub fn linear_fill(&self, gap: &MissingInterval) -> Vec<f64> {
        let left = (gap.start > 0 && self.avail[gap.start - 1]).then(|| (gap.start - 1, self.x[gap.start - 1]));
        let right = (gap.end() < self.len() && self.avail[gap.end()]).then(|| (gap.end(), self.x[gap.end()]));
        gap.range()
            .map(|n| match (left, right) {
                (Some((i0, a)), Some((i1, b))) => a + (b - a) * (n - i0) as f64 / (i1 - i0) as f64,
                (Some((_, a)), None) => a,
                (None, Some((_, b))) => b,
                (None, None) => 0.0,
            })
            .collect()
    }

    pub fn into_signal(self, fs: f64) -> Result<Signal> {
        let missing = self.avail.iter().map(|a| !a).collect();
        Signal::with_mask(self.x, fs, missing)
    }
}

/// Per-signal state shared by the interval fills.
pub(crate) struct Context<'a> {
    pub config: &'a ImputerConfig,
    /// Fundamental phase (cycles) of a preliminary linear fill, for the
    /// seasonal lag.
    pub phase: Option<Vec<f64>>,
}

fn fill_one(ws: &Workspace, gap: &MissingInterval, method: Method, ctx: &Context) -> Result<GapFill> {
    let cfg = ctx.config;
    match method {
        Method::Tlm => tlm::fill(ws, gap, cfg.template_len).map(GapFill::plain),
        Method::Lse => dynamics::fill(ws, gap, DynamicsVariant::Lse, cfg),
        Method::Dmd => dynamics::fill(ws, gap, DynamicsVariant::Dmd, cfg),
        Method::Edmd => dynamics::fill(ws, gap, DynamicsVariant::Edmd, cfg),
        Method::Gpr => gpr::fill(ws, gap, cfg),
        Method::SarForward | Method::SarBackward => sar::fill(ws, gap, ctx),
    }
}

/// Preliminary fundamental phase of `signal` after linear filling.
pub(crate) fn preliminary_phase(signal: &Signal, intervals: &[MissingInterval], avg_period: f64) -> Option<Vec<f64>> {
    let mut gaps: Vec<MissingInterval> = intervals.to_vec();
    // any stray missing sample outside the intervals is filled as well
    let scan = crate::signal::detect_missing_intervals(signal, 1).ok()?;
    gaps.extend(scan.intervals);
    gaps.sort_by_key(|g| g.start);
    gaps.dedup();
    let filled = fill_linear(signal, &gaps).ok()?;
    estimate_fundamental_phase(&filled, avg_period).ok()
}

fn prepare(signal: &Signal, intervals: &[MissingInterval], config: &ImputerConfig) -> Result<Vec<MissingInterval>> {
    config.validate()?;
    validate_intervals(intervals, signal.len())?;
    let mut gaps = intervals.to_vec();
    gaps.sort_by_key(|g| g.start);
    Ok(gaps)
}

/// Runs one method over every interval, left to right, failing on the first
/// interval it cannot fill.
pub(crate) fn run_strict(
    signal: &Signal,
    intervals: &[MissingInterval],
    config: &ImputerConfig,
    method: Method,
) -> Result<(Signal, Vec<GapFill>)> {
    let gaps = prepare(signal, intervals, config)?;
    if method == Method::SarBackward {
        let (rev, fills) = run_strict(&signal.reversed(), &reverse_intervals(&gaps, signal.len()), config, Method::SarForward)?;
        let fills = fills
            .into_iter()
            .rev()
            .map(|mut f| {
                f.values.reverse();
                f
            })
            .collect();
        return Ok((rev.reversed(), fills));
    }
    let ctx = Context {
        config,
        phase: (method == Method::SarForward && config.seasonality.is_none())
            .then(|| preliminary_phase(signal, &gaps, config.avg_period))
            .flatten(),
    };
    let mut ws = Workspace::new(signal);
    let mut fills = Vec::with_capacity(gaps.len());
    for gap in &gaps {
        let mut fill = fill_one(&ws, gap, method, &ctx)?;
        fill.clamped |= ws.clamp(&mut fill.values);
        ws.write(gap, &fill.values);
        fills.push(fill);
    }
    Ok((ws.into_signal(signal.fs())?, fills))
}

pub(crate) fn reverse_intervals(gaps: &[MissingInterval], n: usize) -> Vec<MissingInterval> {
    let mut out: Vec<MissingInterval> = gaps.iter().map(|g| MissingInterval::new(n - g.end(), g.len)).collect();
    out.sort_by_key(|g| g.start);
    out
}

/// Fills every interval with the configured method, falling back to LSE and
/// then to linear interpolation for intervals the method cannot handle.
pub fn impute(signal: &Signal, intervals: &[MissingInterval], config: &ImputerConfig) -> Result<ImputeOutcome> {
    let gaps = prepare(signal, intervals, config)?;
    if config.method == Method::SarBackward {
        let n = signal.len();
        let cfg = config.clone().with_method(Method::SarForward);
        let out = impute(&signal.reversed(), &reverse_intervals(&gaps, n), &cfg)?;
        let mut records: Vec<GapRecord> = out
            .records
            .into_iter()
            .rev()
            .map(|mut r| {
                r.interval = MissingInterval::new(n - r.interval.end(), r.interval.len);
                if r.used == Some(Method::SarForward) {
                    r.used = Some(Method::SarBackward);
                }
                if let Some(sd) = r.posterior_sd.as_mut() {
                    sd.reverse();
                }
                r
            })
            .collect();
        records.sort_by_key(|r| r.interval.start);
        return Ok(ImputeOutcome {
            signal: out.signal.reversed(),
            records,
        });
    }
    let ctx = Context {
        config,
        phase: (config.method == Method::SarForward && config.seasonality.is_none())
            .then(|| preliminary_phase(signal, &gaps, config.avg_period))
            .flatten(),
    };
    let chain: Vec<Method> = if config.method == Method::Lse {
        vec![Method::Lse]
    } else {
        vec![config.method, Method::Lse]
    };
    let mut ws = Workspace::new(signal);
    let mut records = Vec::with_capacity(gaps.len());
    for gap in &gaps {
        let mut failures = Vec::new();
        let mut result = None;
        for &m in &chain {
            match fill_one(&ws, gap, m, &ctx) {
                Ok(f) => {
                    result = Some((m, f));
                    break;
                }
                Err(e) => failures.push(e.to_string()),
            }
        }
        let (used, mut fill) = match result {
            Some((m, f)) => (Some(m), f),
            None => (None, GapFill::plain(ws.linear_fill(gap))),
        };
        fill.clamped |= ws.clamp(&mut fill.values);
        ws.write(gap, &fill.values);
        records.push(GapRecord {
            interval: *gap,
            used,
            clamped: fill.clamped,
            posterior_sd: fill.posterior_sd,
            failures,
        });
    }
    Ok(ImputeOutcome {
        signal: ws.into_signal(signal.fs())?,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ImputerConfig {
        auto_tune(&Signal::complete(vec![0.0; 10], 1.0).unwrap(), 10.0).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("arima".parse::<Method>().is_err());
    }

    #[test]
    fn fallback_to_linear_when_no_context() {
        // a gap with three samples of context cannot support any method
        let mut x = vec![1.0, 2.0, 3.0];
        x.extend(vec![f64::NAN; 4]);
        x.extend([8.0, 9.0, 10.0]);
        let s = Signal::new(x, 1.0).unwrap();
        let out = impute(&s, &[MissingInterval::new(3, 4)], &config()).unwrap();
        assert_eq!(out.records[0].used, None);
        assert_eq!(out.records[0].failures.len(), 2);
        assert_eq!(&out.signal.samples()[3..7], &[4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn linear_fill_at_edges_repeats_neighbour() {
        let mut x = vec![f64::NAN; 3];
        x.extend([5.0, 6.0]);
        let s = Signal::new(x, 1.0).unwrap();
        let ws = Workspace::new(&s);
        assert_eq!(ws.linear_fill(&MissingInterval::new(0, 3)), vec![5.0; 3]);
    }

    #[test]
    fn clamp_flags_divergence() {
        let s = Signal::complete(vec![1.0, -2.0], 1.0).unwrap();
        let ws = Workspace::new(&s);
        let mut v = vec![1.0, 5e3, f64::NAN];
        assert!(ws.clamp(&mut v));
        assert_eq!(v, vec![1.0, 2e3, 0.0]);
    }

    #[test]
    fn reversed_intervals_mirror() {
        let g = reverse_intervals(&[MissingInterval::new(2, 3), MissingInterval::new(7, 1)], 10);
        assert_eq!(g, vec![MissingInterval::new(2, 1), MissingInterval::new(5, 3)]);
    }
}
