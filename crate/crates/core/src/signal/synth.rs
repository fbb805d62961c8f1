use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{validate_intervals, MissingInterval, Signal};
use crate::error::{Error, Result};

/// Parameters of the seeded multi-harmonic test signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub fs: f64,
    /// Record length in seconds.
    pub duration: f64,
    pub n_harmonics: usize,
    /// Mean fundamental frequency in Hz.
    pub base_freq: f64,
    /// Amplitude (in cycles) of the 1 Hz phase wobble.
    pub phase_wobble_amp: f64,
    /// Smoothing window in seconds of the random frequency drift; `None`
    /// disables the drift.
    pub random_walk: Option<f64>,
    /// Relative half-width of the support of each harmonic frequency ratio.
    pub harmonic_jitter: f64,
    /// Additive noise level; `None` means noiseless.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            fs: 4000.0,
            duration: 1.0,
            n_harmonics: 4,
            base_freq: 50.0,
            phase_wobble_amp: 5.0 / (2.0 * PI),
            random_walk: Some(0.5),
            harmonic_jitter: 0.05,
            snr_db: None,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn n_samples(&self) -> usize {
        (self.fs * self.duration).round() as usize
    }

    /// Upper bound of the fundamental's instantaneous frequency.
    pub fn max_fundamental_hz(&self) -> f64 {
        let drift = if self.random_walk.is_some() { 1.0 } else { 0.0 };
        self.base_freq + 2.0 * PI * self.phase_wobble_amp.abs() + drift
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.fs) || !positive(self.duration) || !positive(self.base_freq) {
            return Err(Error::InvalidSpec("rates and durations must be positive".into()));
        }
        if self.n_samples() < 2 {
            return Err(Error::InvalidSpec("record shorter than two samples".into()));
        }
        if self.n_harmonics == 0 {
            return Err(Error::InvalidSpec("at least one harmonic is required".into()));
        }
        if !(0.0..0.5).contains(&self.harmonic_jitter) {
            return Err(Error::InvalidSpec(format!(
                "harmonic jitter {} outside [0, 0.5)",
                self.harmonic_jitter
            )));
        }
        if let Some(w) = self.random_walk {
            if !positive(w) {
                return Err(Error::InvalidSpec("random-walk window must be positive".into()));
            }
        }
        if self.base_freq <= 2.0 * PI * self.phase_wobble_amp.abs() + 1.0 {
            return Err(Error::InvalidSpec(
                "phase wobble would make the fundamental frequency non-positive".into(),
            ));
        }
        let top = self.n_harmonics as f64 * (1.0 + self.harmonic_jitter) * self.max_fundamental_hz();
        if top >= self.fs / 2.0 {
            return Err(Error::InvalidSpec(format!(
                "highest harmonic reaches {top:.1} Hz, Nyquist is {:.1} Hz",
                self.fs / 2.0
            )));
        }
        Ok(())
    }
}

/// Clean synthetic record together with its generating curves.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub clean: Signal,
    /// `amplitudes[l][n]`: amplitude of harmonic `l + 1` at sample `n`.
    pub amplitudes: Vec<Vec<f64>>,
    /// Phases in cycles, same layout as `amplitudes`.
    pub phases: Vec<Vec<f64>>,
    pub trend: Vec<f64>,
    /// Frequency ratio of each harmonic to the fundamental.
    pub ratios: Vec<f64>,
}

impl GroundTruth {
    /// Sum of the stored harmonics and trend.
    pub fn resynthesize(&self) -> Vec<f64> {
        let mut out = self.trend.clone();
        for (amp, phase) in self.amplitudes.iter().zip(&self.phases) {
            for (o, (a, p)) in out.iter_mut().zip(amp.iter().zip(phase)) {
                *o += a * (2.0 * PI * p).cos();
            }
        }
        out
    }

    /// Mean fundamental period in samples.
    pub fn average_period(&self) -> f64 {
        let p = &self.phases[0];
        let cycles = p[p.len() - 1] - p[0];
        (p.len() - 1) as f64 / cycles
    }
}

fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    let window = window.max(1);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix[prefix.len() - 1] + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(window / 2);
            let hi = (lo + window).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn normalize_peak(x: &mut [f64]) {
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v /= peak);
    }
}

/// Draws one synthetic record.
///
/// The fundamental has amplitude `sqrt(t + 1)` and phase
/// `f0 t + w cos(2 pi t) + Y(t)`, `Y` being the running integral of
/// peak-normalized moving-averaged white noise. Harmonic `l` uses the phase
/// `e_l * phase_1` with `e_l` uniform around `l`, and an amplitude ratio to the
/// fundamental that wanders slowly and independently per harmonic.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let n = spec.n_samples();
    let fs = spec.fs;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let t: Vec<f64> = (0..n).map(|i| i as f64 / fs).collect();

    let mut drift = vec![0.0; n];
    if let Some(window_s) = spec.random_walk {
        let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut r = moving_average(&white, (window_s * fs).round() as usize);
        normalize_peak(&mut r);
        for i in 1..n {
            drift[i] = drift[i - 1] + r[i - 1] / fs;
        }
    }

    let base_amp: Vec<f64> = t.iter().map(|&ti| (ti + 1.0).sqrt()).collect();
    let base_phase: Vec<f64> = t
        .iter()
        .zip(&drift)
        .map(|(&ti, &y)| spec.base_freq * ti + spec.phase_wobble_amp * (2.0 * PI * ti).cos() + y)
        .collect();

    let mut ratios = vec![1.0];
    for l in 2..=spec.n_harmonics {
        let l = l as f64;
        let j = spec.harmonic_jitter;
        ratios.push(if j > 0.0 {
            rng.gen_range((1.0 - j) * l..=(1.0 + j) * l)
        } else {
            l
        });
    }

    let mut amplitudes = vec![base_amp.clone()];
    let mut phases = vec![base_phase.clone()];
    let smooth = fs.round() as usize;
    for &e in &ratios[1..] {
        let level = 0.25 + 0.5 * rng.gen::<f64>();
        let mut walk = Vec::with_capacity(n);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += rng.sample::<f64, _>(StandardNormal);
            walk.push(acc);
        }
        let mut z = moving_average(&walk, smooth);
        let mean = z.iter().sum::<f64>() / n as f64;
        z.iter_mut().for_each(|v| *v -= mean);
        normalize_peak(&mut z);
        let amp = z
            .iter()
            .zip(&base_amp)
            .map(|(zi, b)| (level * (1.0 + 0.5 * zi)).clamp(0.05, 0.999) * b)
            .collect();
        amplitudes.push(amp);
        phases.push(base_phase.iter().map(|p| e * p).collect());
    }

    let trend = vec![0.0; n];
    let mut truth = GroundTruth {
        clean: Signal::complete(vec![0.0; n], fs)?,
        amplitudes,
        phases,
        trend,
        ratios,
    };
    truth.clean = Signal::complete(truth.resynthesize(), fs)?;
    Ok(truth)
}

/// Adds zero-mean Gaussian noise at the requested signal-to-noise ratio,
/// measured on variances. An infinite SNR returns the input unchanged.
pub fn add_noise(signal: &Signal, snr_db: f64, seed: u64) -> Result<Signal> {
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidInput(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let observed: Vec<f64> = signal
        .samples()
        .iter()
        .zip(signal.missing())
        .filter(|(_, &m)| !m)
        .map(|(&v, _)| v)
        .collect();
    let variance = sample_variance(&observed);
    if !(variance > 0.0) {
        return Err(Error::InvalidInput("cannot set an SNR on a zero-variance signal".into()));
    }
    let sd = (variance / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = signal
        .samples()
        .iter()
        .map(|&v| v + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Signal::with_mask(noisy, signal.fs(), signal.missing().to_vec())
}

pub(crate) fn sample_variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64
}

/// Masks `intervals` out of `signal`.
pub fn mask_signal(signal: &Signal, intervals: &[MissingInterval]) -> Result<Signal> {
    validate_intervals(intervals, signal.len())?;
    let mut missing = signal.missing().to_vec();
    for iv in intervals {
        missing[iv.range()].iter_mut().for_each(|m| *m = true);
    }
    Signal::with_mask(signal.samples().to_vec(), signal.fs(), missing)
}

fn split_lengths(total: usize, parts: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let min_part = ((0.05 * total as f64).ceil() as usize).max(1);
    if parts * min_part + parts * (parts - 1) / 2 > total {
        return Err(Error::Generation(format!(
            "{total} missing samples cannot be split into {parts} distinct lengths"
        )));
    }
    let free = total - parts * min_part;
    for _ in 0..256 {
        let weights: Vec<f64> = (0..parts).map(|_| rng.sample(Exp1)).collect();
        let sum: f64 = weights.iter().sum();
        let mut lengths: Vec<usize> = weights
            .iter()
            .map(|w| min_part + (free as f64 * w / sum).floor() as usize)
            .collect();
        let mut rest = total - lengths.iter().sum::<usize>();
        let mut i = 0;
        while rest > 0 {
            lengths[i % parts] += 1;
            rest -= 1;
            i += 1;
        }
        let mut sorted = lengths.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() == parts {
            return Ok(lengths);
        }
    }
    Err(Error::Generation("could not draw distinct interval lengths".into()))
}

/// Draws `n_intervals` disjoint gaps of distinct lengths totalling
/// `round(n * p_ms)` samples. Gaps stay clear of the first and last 5% of
/// the record and are separated by at least `separation` samples.
pub fn plan_missing_intervals(
    n: usize,
    separation: usize,
    p_ms: f64,
    n_intervals: usize,
    seed: u64,
) -> Result<Vec<MissingInterval>> {
    if !(p_ms > 0.0 && p_ms < 0.5) {
        return Err(Error::InvalidInput(format!("missing fraction {p_ms} outside (0, 0.5)")));
    }
    if n_intervals == 0 {
        return Err(Error::InvalidInput("at least one interval is required".into()));
    }
    let total = ((n as f64 * p_ms).round() as usize).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lengths = split_lengths(total, n_intervals, &mut rng)?;
    lengths.shuffle(&mut rng);

    let margin = (0.05 * n as f64).ceil() as usize;
    let needed = total + (n_intervals - 1) * separation + 2 * margin;
    if needed > n {
        return Err(Error::Generation(format!(
            "{n_intervals} gaps of {total} samples do not fit in {n} samples"
        )));
    }
    let slack = n - needed;
    let mut offsets: Vec<usize> = (0..n_intervals).map(|_| rng.gen_range(0..=slack)).collect();
    offsets.sort_unstable();

    let mut intervals = Vec::with_capacity(n_intervals);
    let mut cursor = margin;
    for (len, off) in lengths.into_iter().zip(offsets) {
        intervals.push(MissingInterval::new(cursor + off, len));
        cursor += len + separation;
    }
    Ok(intervals)
}

/// Masks randomly placed gaps out of the clean record of `truth`.
pub fn apply_missingness(
    truth: &GroundTruth,
    p_ms: f64,
    n_intervals: usize,
    seed: u64,
) -> Result<(Signal, Vec<MissingInterval>)> {
    let separation = truth.average_period().round().max(1.0) as usize;
    let intervals = plan_missing_intervals(truth.clean.len(), separation, p_ms, n_intervals, seed)?;
    let masked = mask_signal(&truth.clean, &intervals)?;
    Ok((masked, intervals))
}
