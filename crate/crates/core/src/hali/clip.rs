use super::interp::{interpolate_1d, interpolate_linear, InterpolationScheme};
use crate::error::{Error, Result};
use crate::signal::MissingInterval;

/// Knots used for the straight-line continuation at record edges.
const EDGE_FIT_KNOTS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Clipped {
    pub values: Vec<f64>,
    /// Too few knots for the scheme; linear interpolation was used.
    pub linear_fallback: bool,
    /// Some discarded samples lay beyond the first or last knot and were
    /// continued with a straight line.
    pub extrapolated: bool,
}

/// Discards each interval widened by `guard` samples on both sides and
/// refills the discarded samples from the remaining ones.
pub fn clip_and_interpolate(
    series: &[f64],
    intervals: &[MissingInterval],
    guard: usize,
    scheme: InterpolationScheme,
) -> Result<Clipped> {
    let n = series.len();
    let mut discard = vec![false; n];
    for g in intervals {
        if g.end() > n {
            return Err(Error::InvalidInput(format!("interval ending at {} exceeds the series", g.end())));
        }
        let a = g.start.saturating_sub(guard);
        let b = (g.end() + guard).min(n);
        discard[a..b].iter_mut().for_each(|d| *d = true);
    }
    let mut values = series.to_vec();
    let kx: Vec<f64> = (0..n).filter(|&i| !discard[i]).map(|i| i as f64).collect();
    let ky: Vec<f64> = (0..n).filter(|&i| !discard[i]).map(|i| series[i]).collect();
    let queries: Vec<usize> = (0..n).filter(|&i| discard[i]).collect();
    if queries.is_empty() {
        return Ok(Clipped {
            values,
            linear_fallback: false,
            extrapolated: false,
        });
    }
    if kx.is_empty() {
        return Ok(Clipped {
            values,
            linear_fallback: true,
            extrapolated: true,
        });
    }
    let (lo, hi) = (kx[0], kx[kx.len() - 1]);
    let inner: Vec<f64> = queries.iter().map(|&q| q as f64).filter(|&q| q >= lo && q <= hi).collect();
    let linear_fallback = kx.len() < scheme.min_knots();
    let filled = if linear_fallback {
        interpolate_linear(&kx, &ky, &inner)?
    } else {
        interpolate_1d(&kx, &ky, &inner, scheme)?
    };
    for (&q, v) in inner.iter().zip(filled) {
        values[q as usize] = v;
    }
    let mut extrapolated = false;
    let head: Vec<usize> = queries.iter().copied().filter(|&q| (q as f64) < lo).collect();
    let tail: Vec<usize> = queries.iter().copied().filter(|&q| (q as f64) > hi).collect();
    if !head.is_empty() {
        let m = EDGE_FIT_KNOTS.min(kx.len());
        let (a, b) = line_fit(&kx[..m], &ky[..m]);
        head.iter().for_each(|&q| values[q] = a + b * q as f64);
        extrapolated = true;
    }
    if !tail.is_empty() {
        let m = EDGE_FIT_KNOTS.min(kx.len());
        let (a, b) = line_fit(&kx[kx.len() - m..], &ky[ky.len() - m..]);
        tail.iter().for_each(|&q| values[q] = a + b * q as f64);
        extrapolated = true;
    }
    Ok(Clipped {
        values,
        linear_fallback,
        extrapolated,
    })
}

/// Least-squares line `a + b x`; flat through the mean for a single point.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOTH: [InterpolationScheme; 2] = [InterpolationScheme::CubicSpline, InterpolationScheme::Pchip];

    #[test]
    fn no_intervals_unchanged() {
        let x = vec![1.0, 5.0, -2.0, 4.0];
        for s in BOTH {
            let c = clip_and_interpolate(&x, &[], 3, s).unwrap();
            assert_eq!(c.values, x);
        }
    }

    #[test]
    fn line_with_gap_refilled() {
        let x: Vec<f64> = (0..200).map(|i| 0.5 * i as f64 - 3.0).collect();
        let mut y = x.clone();
        y[80..120].iter_mut().for_each(|v| *v = f64::NAN);
        for s in BOTH {
            let c = clip_and_interpolate(&y, &[MissingInterval::new(80, 40)], 10, s).unwrap();
            for (a, b) in c.values.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!(!c.linear_fallback && !c.extrapolated);
        }
    }

    #[test]
    fn affine_phase_across_long_gap() {
        let phase: Vec<f64> = (0..4000).map(|n| 50.0 * n as f64 / 4000.0 + 0.125).collect();
        for s in BOTH {
            let c = clip_and_interpolate(&phase, &[MissingInterval::new(1500, 100)], 46, s).unwrap();
            for (a, b) in c.values.iter().zip(&phase) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn edge_gap_extrapolated() {
        let x: Vec<f64> = (0..100).map(|i| 2.0 * i as f64).collect();
        let c = clip_and_interpolate(&x, &[MissingInterval::new(90, 10)], 5, InterpolationScheme::Pchip).unwrap();
        assert!(c.extrapolated);
        for (a, b) in c.values.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn few_knots_fall_back_to_linear() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let c = clip_and_interpolate(&x, &[MissingInterval::new(2, 3)], 0, InterpolationScheme::CubicSpline).unwrap();
        assert!(!c.linear_fallback);
        let c = clip_and_interpolate(&x, &[MissingInterval::new(2, 3)], 1, InterpolationScheme::CubicSpline).unwrap();
        assert!(c.linear_fallback);
        assert_eq!(c.values, x);
    }
}
