use std::f64::consts::PI;

use super::clip::clip_and_interpolate;
use super::interp::InterpolationScheme;
use crate::error::{Error, Result};
use crate::imputers::{auto_tune, impute, GapRecord, ImputerConfig, Method};
use crate::signal::{detect_missing_intervals, estimate_average_period, fill_linear, validate_intervals, MissingInterval, Signal};
use crate::tfa::{harmonic_decompose, DecomposeParams, HarmonicDecomposition};

#[derive(Debug, Clone, PartialEq)]
pub struct HaliConfig {
    /// Number of oscillatory components `K`.
    pub components: usize,
    pub method: Method,
    pub scheme: InterpolationScheme,
    /// Missing runs shorter than this are filled linearly and not refined.
    pub min_gap: usize,
    /// Imputer parameters; tuned from the average period when `None`.
    pub imputer: Option<ImputerConfig>,
    pub decompose: DecomposeParams,
    /// Samples discarded on each side of a gap before interpolating the
    /// curves; the integration half-width in bins when `None`.
    pub guard: Option<usize>,
}

impl Default for HaliConfig {
    fn default() -> Self {
        Self {
            components: 1,
            method: Method::Tlm,
            scheme: InterpolationScheme::Pchip,
            min_gap: 3,
            imputer: None,
            decompose: DecomposeParams::default(),
            guard: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    /// Initial imputation with the gap samples rebuilt from the harmonics.
    pub final_signal: Signal,
    /// Initial imputation.
    pub initial: Signal,
    pub decomposition: Option<HarmonicDecomposition>,
    /// Trend plus harmonics over the whole record, after interpolation.
    pub denoised: Option<Vec<f64>>,
    /// Intervals that were imputed and refined.
    pub intervals: Vec<MissingInterval>,
    /// Short missing runs filled linearly.
    pub short_gaps: Vec<MissingInterval>,
    pub records: Vec<GapRecord>,
    /// The refinement stage was skipped because a step failed; the result
    /// is the initial imputation (or a linear fill).
    pub degraded: bool,
    pub warnings: Vec<String>,
}

/// Output of gap detection and initial imputation.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialStage {
    pub initial: Signal,
    pub intervals: Vec<MissingInterval>,
    pub short_gaps: Vec<MissingInterval>,
    pub records: Vec<GapRecord>,
    pub avg_period: Option<f64>,
    pub warnings: Vec<String>,
}

/// Gap detection (when `intervals` is `None`), linear filling of short runs
/// and initial imputation of the remaining intervals.
pub fn initial_imputation(
    signal: &Signal,
    intervals: Option<&[MissingInterval]>,
    config: &HaliConfig,
) -> Result<InitialStage> {
    if config.components == 0 {
        return Err(Error::InvalidConfig("need at least one component".into()));
    }
    let (intervals, short_gaps) = match intervals {
        Some(given) => {
            validate_intervals(given, signal.len())?;
            let mut given = given.to_vec();
            given.sort_by_key(|g| g.start);
            let covered = |n: usize| given.iter().any(|g| g.contains(n));
            let stray = detect_missing_intervals(signal, 1)?
                .intervals
                .into_iter()
                .flat_map(|g| g.range())
                .filter(|&n| !covered(n))
                .collect::<Vec<_>>();
            (given, runs(&stray))
        }
        None => {
            let scan = detect_missing_intervals(signal, config.min_gap.max(1))?;
            (scan.intervals, scan.short_gaps)
        }
    };
    let mut warnings = Vec::new();
    let base = if short_gaps.is_empty() {
        signal.clone()
    } else {
        fill_linear(signal, &short_gaps)?
    };
    if intervals.is_empty() {
        return Ok(InitialStage {
            initial: base,
            intervals,
            short_gaps,
            records: Vec::new(),
            avg_period: None,
            warnings,
        });
    }
    let (avg_period, imputer_cfg) = match &config.imputer {
        Some(c) => (Some(c.avg_period), Some(c.clone().with_method(config.method))),
        None => match estimate_average_period(&base) {
            Ok(t) => (Some(t), Some(auto_tune(&base, t)?.with_method(config.method))),
            Err(e) => {
                warnings.push(format!("average period unavailable ({e}); gaps filled linearly"));
                (None, None)
            }
        },
    };
    let (initial, records) = match imputer_cfg {
        Some(cfg) => {
            let out = impute(&base, &intervals, &cfg)?;
            (out.signal, out.records)
        }
        None => {
            let filled = fill_linear(&base, &intervals)?;
            let records = intervals
                .iter()
                .map(|g| GapRecord {
                    interval: *g,
                    used: None,
                    clamped: false,
                    posterior_sd: None,
                    failures: vec!["no average period".into()],
                })
                .collect();
            (filled, records)
        }
    };
    for r in &records {
        let g = r.interval;
        match r.used {
            Some(m) if m != config.method => warnings.push(format!("interval at {} (length {}): fell back to {m}", g.start, g.len)),
            None => warnings.push(format!("interval at {} (length {}): fell back to linear interpolation", g.start, g.len)),
            _ => {}
        }
        if r.clamped {
            warnings.push(format!("interval at {} (length {}): forecast clamped", g.start, g.len));
        }
    }
    Ok(InitialStage {
        initial,
        intervals,
        short_gaps,
        records,
        avg_period,
        warnings,
    })
}

fn runs(indices: &[usize]) -> Vec<MissingInterval> {
    let mut out: Vec<MissingInterval> = Vec::new();
    for &i in indices {
        match out.last_mut() {
            Some(g) if g.end() == i => g.len += 1,
            _ => out.push(MissingInterval::new(i, 1)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub final_signal: Signal,
    pub denoised: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Interpolates every amplitude (floored at zero), phase and the trend
/// across the guarded intervals and rebuilds the interval samples of the
/// initial imputation `x1` from them.
pub fn refine(
    x1: &Signal,
    intervals: &[MissingInterval],
    decomposition: &HarmonicDecomposition,
    scheme: InterpolationScheme,
    guard: usize,
) -> Result<Refinement> {
    let n = x1.len();
    if !x1.is_complete() {
        return Err(Error::InvalidInput("initial imputation still has missing samples".into()));
    }
    if decomposition.len() != n {
        return Err(Error::InvalidInput("decomposition length does not match the signal".into()));
    }
    let mut warnings = Vec::new();
    let mut note = |what: &str, c: &super::clip::Clipped| {
        if c.linear_fallback {
            warnings.push(format!("{what}: too few knots, linear interpolation used"));
        }
        if c.extrapolated {
            warnings.push(format!("{what}: continued linearly at the record edge"));
        }
    };
    let trend = clip_and_interpolate(&decomposition.trend, intervals, guard, scheme)?;
    note("trend", &trend);
    let mut denoised = trend.values;
    for (k, comp) in decomposition.components.iter().enumerate() {
        for h in &comp.harmonics {
            let amp = clip_and_interpolate(&h.amplitude, intervals, guard, scheme)?;
            note(&format!("component {} harmonic {} amplitude", k + 1, h.ell), &amp);
            let phase = clip_and_interpolate(&h.phase, intervals, guard, scheme)?;
            note(&format!("component {} harmonic {} phase", k + 1, h.ell), &phase);
            for (d, (a, p)) in denoised.iter_mut().zip(amp.values.iter().zip(&phase.values)) {
                *d += a.max(0.0) * (2.0 * PI * p).cos();
            }
        }
    }
    let mut out = x1.samples().to_vec();
    for g in intervals {
        out[g.range()].copy_from_slice(&denoised[g.range()]);
    }
    Ok(Refinement {
        final_signal: Signal::complete(out, x1.fs())?,
        denoised,
        warnings,
    })
}

/// Full pipeline: initial imputation, harmonic decomposition of the imputed
/// record, and harmonic-level interpolation over the gaps. Failures after
/// the initial stage leave the initial imputation in place and set
/// `degraded`.
pub fn hali_impute(signal: &Signal, intervals: Option<&[MissingInterval]>, config: &HaliConfig) -> Result<ImputationResult> {
    let stage = initial_imputation(signal, intervals, config)?;
    let mut warnings = stage.warnings;
    let bypass = |degraded: bool, warnings: Vec<String>, decomposition: Option<HarmonicDecomposition>| ImputationResult {
        final_signal: stage.initial.clone(),
        initial: stage.initial.clone(),
        decomposition,
        denoised: None,
        intervals: stage.intervals.clone(),
        short_gaps: stage.short_gaps.clone(),
        records: stage.records.clone(),
        degraded,
        warnings,
    };
    if stage.intervals.is_empty() {
        return Ok(bypass(false, warnings, None));
    }
    let mut params = config.decompose.clone();
    if params.stft.avg_period.is_none() {
        params.stft.avg_period = stage.avg_period;
    }
    let decomposition = match harmonic_decompose(&stage.initial, config.components, &params) {
        Ok(d) => d,
        Err(e) => {
            warnings.push(format!("decomposition failed ({e}); initial imputation returned"));
            return Ok(bypass(true, warnings, None));
        }
    };
    let guard = config.guard.unwrap_or(decomposition.delta);
    match refine(&stage.initial, &stage.intervals, &decomposition, config.scheme, guard) {
        Ok(r) => {
            warnings.extend(r.warnings);
            Ok(ImputationResult {
                final_signal: r.final_signal,
                initial: stage.initial,
                decomposition: Some(decomposition),
                denoised: Some(r.denoised),
                intervals: stage.intervals,
                short_gaps: stage.short_gaps,
                records: stage.records,
                degraded: false,
                warnings,
            })
        }
        Err(e) => {
            warnings.push(format!("interpolation failed ({e}); initial imputation returned"));
            Ok(bypass(true, warnings, Some(decomposition)))
        }
    }
}
