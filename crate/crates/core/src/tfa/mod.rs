//! Time-frequency analysis: STFT, de-shaping, ridge tracking, band
//! reconstruction, trend estimation and harmonic-degree selection.

mod degree;
mod deshape;
mod reconstruct;
mod ridge;
mod stft;

pub use degree::{select_degree_from_phases, select_harmonic_degree, Criterion};
pub use deshape::{de_shape, DeShapeParams, RealMap};
pub use reconstruct::{estimate_trend, reconstruct_component, Reconstruction};
pub use ridge::{
    extract_harmonic_ridge, extract_harmonic_ridge_excluding, extract_ridge, extract_ridge_excluding, jump_bins, Ridge};
pub use stft::{stft, GaussianWindow, StftParams, TimeFrequencyMap};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::Signal;

const MAX_DEGREE: usize = 10;
/// Ridge powers below this fraction of the frame maximum are numerical
/// leakage, not spectral peaks.
const PEAK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeParams {
    pub stft: StftParams,
    pub deshape: DeShapeParams,
    /// Per-frame ridge jump bound in Hz; `10 fs / N` when `None`.
    pub fb_hz: Option<f64>,
    /// Largest harmonic degree tried; derived from the ridge when `None`.
    pub d_max: Option<usize>,
    pub criterion: Criterion,
}

impl Default for DecomposeParams {
    fn default() -> Self {
        Self {
            stft: StftParams::default(),
            deshape: DeShapeParams::default(),
            fb_hz: None,
            d_max: None,
            criterion: Criterion::default(),
        }
    }
}

impl DecomposeParams {
    pub fn jump_bound_hz(&self, n: usize, fs: f64) -> f64 {
        self.fb_hz.unwrap_or(10.0 * fs / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTrack {
    pub ell: usize,
    pub ridge: Ridge,
    pub amplitude: Vec<f64>,
    /// Unwrapped phase in cycles.
    pub phase: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub degree: usize,
    pub harmonics: Vec<HarmonicTrack>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicDecomposition {
    pub components: Vec<Component>,
    pub trend: Vec<f64>,
    pub fs: f64,
    /// Integration half-width in bins.
    pub delta: usize,
    pub bin_hz: f64,
    pub avg_period: f64,
}

impl HarmonicDecomposition {
    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    /// `T(n) + sum_k sum_ell A(n) cos(2 pi phi(n))`.
    pub fn resynthesize(&self) -> Vec<f64> {
        let mut out = self.trend.clone();
        for h in self.components.iter().flat_map(|c| &c.harmonics) {
            for (o, (a, p)) in out.iter_mut().zip(h.amplitude.iter().zip(&h.phase)) {
                *o += a * (2.0 * PI * p).cos();
            }
        }
        out
    }
}

/// A decomposition together with the maps it was computed from.
#[derive(Debug, Clone)]
pub struct DecompositionDetail {
    pub decomposition: HarmonicDecomposition,
    pub tfr: TimeFrequencyMap,
    pub deshaped: RealMap,
}

/// Splits a complete signal into a trend and `k` harmonic components.
pub fn harmonic_decompose(
    signal: &Signal,
    k: usize,
    params: &DecomposeParams,
) -> Result<HarmonicDecomposition> {
    decompose_detailed(signal, k, params).map(|d| d.decomposition)
}

pub fn decompose_detailed(
    signal: &Signal,
    k: usize,
    params: &DecomposeParams,
) -> Result<DecompositionDetail> {
    if k == 0 {
        return Err(Error::InvalidConfig("need at least one component".into()));
    }
    let tfr = stft(signal, &params.stft)?;
    let mut energy = de_shape(&tfr, &params.deshape)?;
    energy.square_in_place();
    let fs = signal.fs();
    let fb = params.jump_bound_hz(signal.len(), fs);
    let delta = tfr.delta();
    let exclusion = fb.max(delta as f64 * tfr.bin_hz());

    let mut fundamentals: Vec<Ridge> = Vec::with_capacity(k);
    for _ in 0..k {
        let coarse = extract_ridge_excluding(&energy, fb, None, &fundamentals, exclusion)?;
        let refined = extract_harmonic_ridge(&tfr, &coarse, 1, 0.25 * coarse.min_freq(), fb)?;
        fundamentals.push(refined);
    }
    let trend = estimate_trend(&tfr, &fundamentals)?;

    let x = signal.samples();
    let fund_recs = fundamentals
        .iter()
        .map(|r| reconstruct_component(&tfr, r, delta))
        .collect::<Result<Vec<_>>>()?;

    let h = tfr.window().half_len;
    let interior = if x.len() >= 2 * h + 64 { h..x.len() - h } else { 0..x.len() };
    let use_sample: Vec<bool> = (0..x.len()).map(|n| interior.contains(&n)).collect();

    let mut components = Vec::with_capacity(k);
    for (ci, fund) in fundamentals.iter().enumerate() {
        let max_f = fund.max_freq();
        let d_cap = match params.d_max {
            Some(d) => d.max(1),
            None if max_f > 0.0 => (((fs / 2.0) / max_f).floor() as usize).saturating_sub(1).clamp(1, MAX_DEGREE),
            None => 1,
        };
        let vicinity = 0.5 * fund.min_freq();
        let mut tracks = vec![HarmonicTrack {
            ell: 1,
            ridge: fund.clone(),
            amplitude: fund_recs[ci].amplitude.clone(),
            phase: fund_recs[ci].phase.clone(),
        }];
        for ell in 2..=d_cap {
            let found: Vec<Ridge> = tracks.iter().map(|t| t.ridge.clone()).collect();
            let ridge = match extract_harmonic_ridge_excluding(&tfr, fund, ell, vicinity, fb, &found, delta) {
                Ok(r) => r,
                Err(Error::HarmonicOutOfRange { .. }) => break,
                Err(e) => return Err(e),
            };
            // a band holding only the skirt of a neighbouring harmonic has no
            // peak of its own
            if !is_spectral_peak(&tfr, &ridge, interior.clone()) {
                break;
            }
            let rec = reconstruct_component(&tfr, &ridge, delta)?;
            tracks.push(HarmonicTrack {
                ell,
                ridge,
                amplitude: rec.amplitude,
                phase: rec.phase,
            });
        }
        // regress what is left once the trend and the other fundamentals
        // are removed
        let target: Vec<f64> = (0..x.len())
            .map(|n| {
                let others: f64 = fund_recs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != ci)
                    .map(|(_, r)| r.analytic[n].re)
                    .sum();
                x[n] - trend[n] - others
            })
            .collect();
        // each harmonic enters the regression as a fixed multiple of the
        // fundamental phase, so the regressors cannot follow the noise
        let base = &tracks[0].phase;
        let phases: Vec<Vec<f64>> = tracks
            .iter()
            .map(|t| {
                let r = phase_ratio(base, &t.phase, interior.clone());
                base.iter().map(|p| r * p).collect()
            })
            .collect();
        let degree = select_degree_from_phases(&target, &use_sample, &phases, params.criterion)?;
        tracks.truncate(degree);
        components.push(Component {
            degree,
            harmonics: tracks,
        });
    }

    let decomposition = HarmonicDecomposition {
        components,
        trend,
        fs,
        delta,
        bin_hz: tfr.bin_hz(),
        avg_period: tfr.avg_period(),
    };
    Ok(DecompositionDetail {
        decomposition,
        tfr,
        deshaped: energy,
    })
}

/// Least-squares slope of `phase` against `base` over `frames`.
fn phase_ratio(base: &[f64], phase: &[f64], frames: std::ops::Range<usize>) -> f64 {
    let m = frames.len() as f64;
    let mb = frames.clone().map(|n| base[n]).sum::<f64>() / m;
    let mp = frames.clone().map(|n| phase[n]).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for n in frames {
        sxy += (base[n] - mb) * (phase[n] - mp);
        sxx += (base[n] - mb) * (base[n] - mb);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        1.0
    }
}

/// True when the ridge sits on a local maximum of `|F|^2` along frequency in
/// at least half of the frames in `frames`.
fn is_spectral_peak(tfr: &TimeFrequencyMap, ridge: &Ridge, frames: std::ops::Range<usize>) -> bool {
    let total = frames.len();
    let peaks = frames
        .filter(|&n| {
            let f = tfr.frame(n);
            let j = ridge.bins[n];
            let p = f[j].norm_sqr();
            let frame_max = f.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
            j > 0
                && j + 1 < f.len()
                && p > f[j - 1].norm_sqr()
                && p >= f[j + 1].norm_sqr()
                && p > PEAK_FLOOR * frame_max
        })
        .count();
    2 * peaks >= total
}

/// Fundamental phase (cycles) of a complete signal from the `|F|^2` ridge
/// nearest the frequency implied by the average period. Uses a coarse grid.
pub fn estimate_fundamental_phase(signal: &Signal, avg_period: f64) -> Result<Vec<f64>> {
    let cycles = StftParams::default().cycles_in_window;
    let window = GaussianWindow::spanning(cycles * avg_period)?;
    let n_bins = 1024.max(window.len() / 2 + 2);
    let tfr = stft(
        signal,
        &StftParams {
            cycles_in_window: cycles,
            n_bins,
            avg_period: Some(avg_period),
        },
    )?;
    let f = signal.fs() / avg_period;
    let power = RealMap::power(&tfr);
    let fb = 10.0 * signal.fs() / signal.len() as f64;
    let ridge = extract_ridge(&power, fb, Some((0.5 * f, 1.5 * f)))?;
    Ok(reconstruct_component(&tfr, &ridge, tfr.delta())?.phase)
}
