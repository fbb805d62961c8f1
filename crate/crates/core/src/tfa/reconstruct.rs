use num_complex::Complex64;

use super::ridge::Ridge;
use super::stft::TimeFrequencyMap;
use crate::error::{Error, Result};

/// Complex band sum around a ridge, with its amplitude and unwrapped phase
/// (in cycles).
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub analytic: Vec<Complex64>,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
}

/// `y(n) = g(0)^-1 sum_{|j - c(n)| < delta} F(n, j)`.
pub fn reconstruct_component(tfr: &TimeFrequencyMap, ridge: &Ridge, delta: usize) -> Result<Reconstruction> {
    if ridge.len() != tfr.n_frames() {
        return Err(Error::InvalidInput("ridge length does not match the map".into()));
    }
    let nb = tfr.n_bins();
    let inv_g0 = 1.0 / tfr.window().g0();
    let analytic: Vec<Complex64> = ridge
        .bins
        .iter()
        .enumerate()
        .map(|(n, &c)| {
            let lo = (c + 1).saturating_sub(delta);
            let hi = (c + delta).min(nb);
            tfr.frame(n)[lo.min(hi)..hi].iter().sum::<Complex64>() * inv_g0
        })
        .collect();
    let amplitude = analytic.iter().map(|z| z.norm()).collect();
    let phase = unwrap_cycles(analytic.iter().map(|z| z.arg()));
    Ok(Reconstruction {
        analytic,
        amplitude,
        phase,
    })
}

/// Unwraps angles in radians and returns the phase in cycles.
pub(crate) fn unwrap_cycles(angles: impl IntoIterator<Item = f64>) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut out = Vec::new();
    let mut prev_raw = 0.0;
    let mut acc = 0.0;
    for (i, a) in angles.into_iter().enumerate() {
        if i == 0 {
            acc = a;
        } else {
            let mut d = a - prev_raw;
            d -= 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
            acc += d;
        }
        prev_raw = a;
        out.push(acc / (2.0 * PI));
    }
    out
}

/// Low-band sum below the lowest fundamental ridge:
/// `T(n) = g(0)^-1 Re sum_{0 <= j < c_min(n) - delta} F(n, j)`.
pub fn estimate_trend(tfr: &TimeFrequencyMap, fundamentals: &[Ridge]) -> Result<Vec<f64>> {
    if fundamentals.is_empty() {
        return Err(Error::InvalidInput("trend needs at least one fundamental ridge".into()));
    }
    if fundamentals.iter().any(|r| r.len() != tfr.n_frames()) {
        return Err(Error::InvalidInput("ridge length does not match the map".into()));
    }
    let delta = tfr.delta();
    let inv_g0 = 1.0 / tfr.window().g0();
    Ok((0..tfr.n_frames())
        .map(|n| {
            let c = fundamentals.iter().map(|r| r.bins[n]).min().unwrap_or(0);
            let hi = c.saturating_sub(delta);
            tfr.frame(n)[..hi].iter().map(|z| z.re).sum::<f64>() * inv_g0
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Signal;
    use crate::tfa::stft::{stft, StftParams};
    use std::f64::consts::PI;

    fn setup(x: Vec<f64>) -> TimeFrequencyMap {
        let s = Signal::complete(x, 4000.0).unwrap();
        stft(
            &s,
            &StftParams {
                avg_period: Some(80.0),
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn flat_ridge(tfr: &TimeFrequencyMap, f: f64) -> Ridge {
        Ridge {
            bins: vec![(f / tfr.bin_hz()).round() as usize; tfr.n_frames()],
            bin_hz: tfr.bin_hz(),
        }
    }

    #[test]
    fn cosine_amplitude_and_phase() {
        let x: Vec<f64> = (0..4000).map(|i| 2.0 * (2.0 * PI * 50.0 * i as f64 / 4000.0).cos()).collect();
        let tfr = setup(x);
        let r = reconstruct_component(&tfr, &flat_ridge(&tfr, 50.0), tfr.delta()).unwrap();
        for n in 600..3400 {
            assert!((r.amplitude[n] - 2.0).abs() < 2e-2, "amp at {n}: {}", r.amplitude[n]);
            let expected = 50.0 * n as f64 / 4000.0;
            let d = r.phase[n] - r.phase[600] - (expected - 50.0 * 600.0 / 4000.0);
            assert!(d.abs() < 1e-3, "phase drift at {n}: {d}");
        }
    }

    #[test]
    fn constant_offset_goes_to_trend() {
        let x: Vec<f64> = (0..4000).map(|i| (2.0 * PI * 50.0 * i as f64 / 4000.0).cos() + 3.0).collect();
        let tfr = setup(x);
        let t = estimate_trend(&tfr, &[flat_ridge(&tfr, 50.0)]).unwrap();
        for n in 600..3400 {
            assert!((t[n] - 3.0).abs() < 1e-2, "trend at {n}: {}", t[n]);
        }
    }

    #[test]
    fn unwrap_is_continuous() {
        let raw: Vec<f64> = (0..100)
            .map(|i| {
                let a = 0.4 * i as f64;
                (a + PI).rem_euclid(2.0 * PI) - PI
            })
            .collect();
        let u = unwrap_cycles(raw);
        for (i, v) in u.iter().enumerate() {
            assert!((v - 0.4 * i as f64 / (2.0 * PI)).abs() < 1e-12);
        }
    }
}
