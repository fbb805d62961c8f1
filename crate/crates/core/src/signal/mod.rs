//! Signal containers, gap detection and the synthetic signal generator.

mod period;
mod synth;

pub use period::estimate_average_period;
pub use synth::{
    add_noise, apply_missingness, generate_synthetic, mask_signal, plan_missing_intervals,
    GroundTruth, SyntheticSpec,
};

use crate::error::{Error, Result};

/// A uniformly sampled real series with a missing-sample mask.
///
/// Samples flagged missing hold `NaN` and are never read by the numerical
/// routines. Every sample not flagged missing is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    fs: f64,
    missing: Vec<bool>,
}

impl Signal {
    /// Builds a signal, flagging every non-finite sample as missing.
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        let missing = samples.iter().map(|v| !v.is_finite()).collect();
        Self::with_mask(samples, fs, missing)
    }

    /// Builds a signal from samples and an explicit mask. Masked samples are
    /// overwritten with `NaN`.
    pub fn with_mask(mut samples: Vec<f64>, fs: f64, missing: Vec<bool>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("signal has no samples".into()));
        }
        if samples.len() != missing.len() {
            return Err(Error::InvalidInput(format!(
                "mask length {} does not match sample count {}",
                missing.len(),
                samples.len()
            )));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidInput(format!("sampling rate must be positive, got {fs}")));
        }
        for (i, (v, &m)) in samples.iter_mut().zip(&missing).enumerate() {
            if m {
                *v = f64::NAN;
            } else if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "observed sample {i} is not finite"
                )));
            }
        }
        Ok(Self {
            samples,
            fs,
            missing,
        })
    }

    /// Builds a signal that must not contain any missing sample.
    pub fn complete(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} is not finite")));
        }
        let missing = vec![false; samples.len()];
        Self::with_mask(samples, fs, missing)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn missing(&self) -> &[bool] {
        &self.missing
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        !self.missing.iter().any(|&m| m)
    }

    pub fn n_missing(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Multiplies every observed sample by `s`.
    pub fn scaled(&self, s: f64) -> Signal {
        let samples = self
            .samples
            .iter()
            .zip(&self.missing)
            .map(|(&v, &m)| if m { f64::NAN } else { v * s })
            .collect();
        Signal {
            samples,
            fs: self.fs,
            missing: self.missing.clone(),
        }
    }

    /// Time-reversed copy.
    pub fn reversed(&self) -> Signal {
        let mut samples = self.samples.clone();
        let mut missing = self.missing.clone();
        samples.reverse();
        missing.reverse();
        Signal {
            samples,
            fs: self.fs,
            missing,
        }
    }

    /// Longest run of observed samples as a half-open index range.
    pub fn longest_observed_run(&self) -> Option<std::ops::Range<usize>> {
        let mut best: Option<std::ops::Range<usize>> = None;
        let mut start = None;
        for i in 0..=self.len() {
            let observed = i < self.len() && !self.missing[i];
            match (observed, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    if best.as_ref().map_or(true, |b| i - s > b.len()) {
                        best = Some(s..i);
                    }
                    start = None;
                }
                _ => {}
            }
        }
        best
    }
}

/// One run of missing samples. `start` is a 0-based sample index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MissingInterval {
    pub start: usize,
    pub len: usize,
}

impl MissingInterval {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    /// One past the last missing index.
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn contains(&self, n: usize) -> bool {
        n >= self.start && n < self.end()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }
}

/// Checks that intervals are non-empty, sorted, disjoint and inside `[0, n)`.
pub fn validate_intervals(intervals: &[MissingInterval], n: usize) -> Result<()> {
    let mut prev_end = 0;
    for (i, iv) in intervals.iter().enumerate() {
        if iv.len == 0 {
            return Err(Error::InvalidInput(format!("interval {i} has zero length")));
        }
        if iv.end() > n {
            return Err(Error::InvalidInput(format!(
                "interval {i} ends at {} beyond signal length {n}",
                iv.end()
            )));
        }
        if i > 0 && iv.start < prev_end {
            return Err(Error::InvalidInput(format!(
                "interval {i} overlaps or precedes interval {}",
                i - 1
            )));
        }
        prev_end = iv.end();
    }
    Ok(())
}

/// Result of scanning a mask for missing runs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GapScan {
    /// Runs at least `min_len` long, handled by the imputers.
    pub intervals: Vec<MissingInterval>,
    /// Shorter runs, filled by linear interpolation.
    pub short_gaps: Vec<MissingInterval>,
}

/// Splits the maximal missing runs of `signal` by length.
pub fn detect_missing_intervals(signal: &Signal, min_len: usize) -> Result<GapScan> {
    if min_len == 0 {
        return Err(Error::InvalidInput("minimum interval length must be at least 1".into()));
    }
    let mut scan = GapScan::default();
    let mask = signal.missing();
    let mut i = 0;
    while i < mask.len() {
        if !mask[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < mask.len() && mask[i] {
            i += 1;
        }
        let run = MissingInterval::new(start, i - start);
        if run.len >= min_len {
            scan.intervals.push(run);
        } else {
            scan.short_gaps.push(run);
        }
    }
    Ok(scan)
}

/// Fills the given runs by linear interpolation between the observed
/// neighbours; runs touching a record edge repeat the nearest observed value.
pub fn fill_linear(signal: &Signal, gaps: &[MissingInterval]) -> Result<Signal> {
    let n = signal.len();
    validate_intervals(gaps, n)?;
    let x = signal.samples();
    let mask = signal.missing();
    let mut out = x.to_vec();
    let mut missing = mask.to_vec();
    for gap in gaps {
        let left = (0..gap.start).rev().find(|&i| !mask[i]);
        let right = (gap.end()..n).find(|&i| !mask[i]);
        for k in gap.range() {
            out[k] = match (left, right) {
                (Some(l), Some(r)) => {
                    let w = (k - l) as f64 / (r - l) as f64;
                    x[l] + w * (x[r] - x[l])
                }
                (Some(l), None) => x[l],
                (None, Some(r)) => x[r],
                (None, None) => {
                    return Err(Error::InvalidInput("signal has no observed samples".into()))
                }
            };
            missing[k] = false;
        }
    }
    Signal::with_mask(out, signal.fs(), missing)
}
