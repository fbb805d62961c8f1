use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::Signal;
use crate::error::{Error, Result};

/// Average oscillation period in samples, `fs / f_p`, where `f_p` is the
/// strongest frequency of the longest observed stretch of the record.
///
/// The search band is `[2 / duration, fs / 2)`. The periodogram is
/// Hann-tapered, zero-padded eightfold and the peak refined by a parabola
/// through the three top bins.
pub fn estimate_average_period(signal: &Signal) -> Result<f64> {
    let run = signal
        .longest_observed_run()
        .filter(|r| r.len() >= 4)
        .ok_or_else(|| Error::InvalidInput("fewer than 4 contiguous observed samples".into()))?;
    let seg = &signal.samples()[run];
    let m = seg.len();
    let mean = seg.iter().sum::<f64>() / m as f64;
    let nfft = (8 * m).next_power_of_two();
    let mut buf: Vec<Complex64> = seg
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (m - 1) as f64).cos();
            Complex64::new((v - mean) * w, 0.0)
        })
        .collect();
    buf.resize(nfft, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let power: Vec<f64> = buf[..nfft / 2].iter().map(|c| c.norm_sqr()).collect();

    let fs = signal.fs();
    let df = fs / nfft as f64;
    let lo = ((2.0 / signal.duration()) / df).ceil().max(1.0) as usize;
    if lo >= power.len() {
        return Err(Error::NoDominantFrequency("search band is empty".into()));
    }
    let (k, &peak) = power[lo..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, p)| (i + lo, p))
        .expect("non-empty band");
    let total: f64 = power.iter().sum();
    if !(peak > 0.0) || peak <= 1e-24 * total.max(f64::MIN_POSITIVE) || total == 0.0 {
        return Err(Error::NoDominantFrequency("signal has no oscillation".into()));
    }
    let mut pos = k as f64;
    if k > 0 && k + 1 < power.len() {
        let (a, b, c) = (power[k - 1], peak, power[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            pos += (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    let period = fs / (pos * df);
    Ok(period.max(2.0))
}
