use num_complex::Complex64;
use rustfft::FftPlanner;

use super::stft::TimeFrequencyMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DeShapeParams {
    /// Exponent applied to the STFT magnitude before the cepstrum.
    pub gamma: f64,
    /// Quantile of the positive cepstral values used as a soft threshold.
    pub threshold_quantile: f64,
    /// Quefrencies where the window's own cepstral envelope drops below this
    /// fraction of its zero-quefrency value are discarded.
    pub envelope_floor: f64,
}

impl Default for DeShapeParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            threshold_quantile: 0.05,
            envelope_floor: 1e-2,
        }
    }
}

/// Real-valued frame x bin map, row-major by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    values: Vec<f64>,
    n_frames: usize,
    n_bins: usize,
    bin_hz: f64,
}

impl RealMap {
    pub fn new(values: Vec<f64>, n_frames: usize, n_bins: usize, bin_hz: f64) -> Result<Self> {
        if values.len() != n_frames * n_bins {
            return Err(Error::InvalidInput(format!(
                "map holds {} values, expected {n_frames} x {n_bins}",
                values.len()
            )));
        }
        Ok(Self {
            values,
            n_frames,
            n_bins,
            bin_hz,
        })
    }

    /// `|F|^2` of an STFT.
    pub fn power(tfr: &TimeFrequencyMap) -> Self {
        let mut values = Vec::with_capacity(tfr.n_frames() * tfr.n_bins());
        for n in 0..tfr.n_frames() {
            values.extend(tfr.frame(n).iter().map(|v| v.norm_sqr()));
        }
        Self {
            values,
            n_frames: tfr.n_frames(),
            n_bins: tfr.n_bins(),
            bin_hz: tfr.bin_hz(),
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.values[n * self.n_bins + j]
    }

    pub fn frame(&self, n: usize) -> &[f64] {
        &self.values[n * self.n_bins..(n + 1) * self.n_bins]
    }

    pub fn square_in_place(&mut self) {
        self.values.iter_mut().for_each(|v| *v *= *v);
    }
}

/// De-shaped STFT: the magnitude spectrum multiplied by the inverted
/// cepstrum, which suppresses harmonic multiples and keeps energy near the
/// fundamental.
pub fn de_shape(tfr: &TimeFrequencyMap, params: &DeShapeParams) -> Result<RealMap> {
    if !(params.gamma > 0.0) {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {}", params.gamma)));
    }
    if !(0.0..1.0).contains(&params.threshold_quantile) {
        return Err(Error::InvalidConfig("threshold quantile must lie in [0, 1)".into()));
    }
    let nfft = tfr.nfft();
    let nb = tfr.n_bins();
    let half = nfft / 2;
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(nfft);
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];

    // cepstral envelope of the window itself
    let envelope = {
        let mut buf: Vec<Complex64> = (0..nfft)
            .map(|j| {
                let jj = if j <= half { j } else { nfft - j };
                Complex64::new(tfr.window().spectrum(jj, nfft).abs().powf(params.gamma), 0.0)
            })
            .collect();
        ifft.process_with_scratch(&mut buf, &mut scratch);
        let e0 = buf[0].re;
        buf[..=half].iter().map(|v| v.re / e0).collect::<Vec<f64>>()
    };
    let q_valid = envelope
        .iter()
        .position(|&e| e < params.envelope_floor)
        .unwrap_or(half + 1);

    // magnitudes on a two-sided scale: interior bins carry a factor of two
    let edge = |j: usize| if j == 0 || j == half { 2.0 } else { 1.0 };
    let gamma = params.gamma;

    let mut out = vec![0.0; tfr.n_frames() * nb];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let mut positives = Vec::with_capacity(q_valid);
    let mut ceps = vec![0.0; half + 1];
    let mut mag_a = vec![0.0; nb];
    let mut mag_b = vec![0.0; nb];
    let magnitudes = |frame: &[Complex64], out: &mut [f64]| {
        for (j, (m, v)) in out.iter_mut().zip(frame).enumerate() {
            let a = v.norm_sqr().sqrt() * edge(j);
            *m = if gamma == 1.0 { a } else { a.powf(gamma) };
        }
    };
    let mut n = 0;
    while n < tfr.n_frames() {
        let pair = n + 1 < tfr.n_frames();
        magnitudes(tfr.frame(n), &mut mag_a);
        if pair {
            magnitudes(tfr.frame(n + 1), &mut mag_b);
        } else {
            mag_b.iter_mut().for_each(|m| *m = 0.0);
        }
        for j in 0..nfft {
            let jj = if j <= half { j } else { nfft - j };
            buf[j] = Complex64::new(mag_a[jj], mag_b[jj]);
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);
        for (k, frame_idx) in [(0usize, n), (1, n + 1)] {
            if k == 1 && !pair {
                break;
            }
            let mags = if k == 0 { &mag_a } else { &mag_b };
            ceps.iter_mut().for_each(|c| *c = 0.0);
            positives.clear();
            for q in 0..q_valid {
                let raw = if k == 0 { buf[q].re } else { buf[q].im };
                let v = (raw / envelope[q]).max(0.0);
                ceps[q] = v;
                if v > 0.0 {
                    positives.push(v);
                }
            }
            let thr = quantile(&mut positives, params.threshold_quantile);
            ceps.iter_mut().for_each(|c| *c = (*c - thr).max(0.0));
            let row = &mut out[frame_idx * nb..(frame_idx + 1) * nb];
            for j in 1..nb {
                let q = nfft as f64 / j as f64;
                if q > half as f64 {
                    continue;
                }
                let q0 = q.floor() as usize;
                let frac = q - q0 as f64;
                let c0 = ceps[q0];
                let c1 = if q0 < half { ceps[q0 + 1] } else { 0.0 };
                let u = c0 + frac * (c1 - c0);
                if u > 0.0 {
                    row[j] = mags[j] * u;
                }
            }
        }
        n += 2;
    }
    RealMap::new(out, tfr.n_frames(), nb, tfr.bin_hz())
}

fn quantile(values: &mut [f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let k = ((values.len() - 1) as f64 * p).floor() as usize;
    let (_, v, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    *v
}
