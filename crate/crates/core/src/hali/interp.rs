use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InterpolationScheme {
    /// Cubic spline with not-a-knot end conditions.
    CubicSpline,
    /// Monotone piecewise cubic Hermite (Fritsch-Carlson).
    #[default]
    Pchip,
}

impl InterpolationScheme {
    pub fn min_knots(self) -> usize {
        match self {
            InterpolationScheme::CubicSpline => 4,
            InterpolationScheme::Pchip => 2,
        }
    }

    /// Short label: `s` or `p`.
    pub fn label(self) -> &'static str {
        match self {
            InterpolationScheme::CubicSpline => "s",
            InterpolationScheme::Pchip => "p",
        }
    }
}

impl fmt::Display for InterpolationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for InterpolationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" | "spline" => Ok(Self::CubicSpline),
            "p" | "pchip" => Ok(Self::Pchip),
            other => Err(Error::InvalidConfig(format!("unknown interpolation scheme '{other}' (expected s or p)"))),
        }
    }
}

fn check_knots(kx: &[f64], ky: &[f64], min: usize) -> Result<()> {
    if kx.len() != ky.len() {
        return Err(Error::InvalidInput("knot abscissae and ordinates differ in length".into()));
    }
    if kx.len() < min {
        return Err(Error::InvalidInput(format!("{} knots given, at least {min} needed", kx.len())));
    }
    if kx.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("knots must be strictly increasing".into()));
    }
    if kx.iter().chain(ky).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("knots must be finite".into()));
    }
    Ok(())
}

/// Index `i` with `kx[i] <= q <= kx[i + 1]`.
fn segment(kx: &[f64], q: f64) -> usize {
    let i = kx.partition_point(|&x| x <= q);
    i.saturating_sub(1).min(kx.len() - 2)
}

/// Interpolates the knots at each query, which must lie within the knot
/// range.
pub fn interpolate_1d(kx: &[f64], ky: &[f64], qx: &[f64], scheme: InterpolationScheme) -> Result<Vec<f64>> {
    check_knots(kx, ky, scheme.min_knots())?;
    let (lo, hi) = (kx[0], kx[kx.len() - 1]);
    if let Some(q) = qx.iter().find(|&&q| !(q >= lo && q <= hi)) {
        return Err(Error::InvalidInput(format!("query {q} outside the knot range [{lo}, {hi}]")));
    }
    Ok(match scheme {
        InterpolationScheme::CubicSpline => {
            let m = spline_second_derivatives(kx, ky);
            qx.iter()
                .map(|&q| {
                    let i = segment(kx, q);
                    let h = kx[i + 1] - kx[i];
                    let a = kx[i + 1] - q;
                    let b = q - kx[i];
                    m[i] * a * a * a / (6.0 * h)
                        + m[i + 1] * b * b * b / (6.0 * h)
                        + (ky[i] - m[i] * h * h / 6.0) * a / h
                        + (ky[i + 1] - m[i + 1] * h * h / 6.0) * b / h
                })
                .collect()
        }
        InterpolationScheme::Pchip => {
            let d = pchip_slopes(kx, ky);
            qx.iter()
                .map(|&q| {
                    let i = segment(kx, q);
                    hermite(kx[i], kx[i + 1], ky[i], ky[i + 1], d[i], d[i + 1], q)
                })
                .collect()
        }
    })
}

/// Piecewise-linear interpolation; needs at least one knot and queries inside
/// the knot range.
pub fn interpolate_linear(kx: &[f64], ky: &[f64], qx: &[f64]) -> Result<Vec<f64>> {
    check_knots(kx, ky, 1)?;
    if kx.len() == 1 {
        return Ok(vec![ky[0]; qx.len()]);
    }
    Ok(qx
        .iter()
        .map(|&q| {
            let i = segment(kx, q);
            let t = (q - kx[i]) / (kx[i + 1] - kx[i]);
            ky[i] + t * (ky[i + 1] - ky[i])
        })
        .collect())
}

/// Cubic Hermite segment in Horner form about `x0`. Flat segments return
/// `y0` exactly, and the result is clamped to the endpoint range, which a
/// monotone segment never leaves, so rounding cannot break monotonicity at
/// the knots.
fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, q: f64) -> f64 {
    let h = x1 - x0;
    let t = (q - x0) / h;
    let dy = y1 - y0;
    let c1 = h * d0;
    let c2 = 3.0 * dy - 2.0 * h * d0 - h * d1;
    let c3 = h * d0 + h * d1 - 2.0 * dy;
    let v = y0 + t * (c1 + t * (c2 + t * c3));
    v.clamp(y0.min(y1), y0.max(y1))
}

/// Second derivatives at the knots with not-a-knot end conditions.
fn spline_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    // unknowns m[1..n-1]; m[0] and m[n-1] eliminated through the end
    // conditions
    let size = n - 2;
    let mut sub = vec![0.0; size];
    let mut diag = vec![0.0; size];
    let mut sup = vec![0.0; size];
    let mut rhs = vec![0.0; size];
    for r in 0..size {
        let i = r + 1;
        sub[r] = h[i - 1];
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        sup[r] = h[i];
        rhs[r] = 6.0 * (delta[i] - delta[i - 1]);
    }
    // m0 = m1 (1 + h0/h1) - m2 h0/h1
    let (h0, h1) = (h[0], h[1]);
    diag[0] += h0 * (1.0 + h0 / h1);
    sup[0] -= h0 * h0 / h1;
    // m[n-1] = m[n-2] (1 + a/b) - m[n-3] a/b with a = h[n-2], b = h[n-3]
    let (a, b) = (h[n - 2], h[n - 3]);
    let last = size - 1;
    diag[last] += a * (1.0 + a / b);
    sub[last] -= a * a / b;

    let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
    let mut m = vec![0.0; n];
    m[1..n - 1].copy_from_slice(&inner);
    m[0] = m[1] * (1.0 + h0 / h1) - m[2] * h0 / h1;
    m[n - 1] = m[n - 2] * (1.0 + a / b) - m[n - 3] * a / b;
    m
}

/// Solves a tridiagonal system; `sub[0]` and `sup[n-1]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![rhs[0] / diag[0]];
    }
    if n == 2 {
        let det = diag[0] * diag[1] - sup[0] * sub[1];
        return vec![
            (rhs[0] * diag[1] - sup[0] * rhs[1]) / det,
            (diag[0] * rhs[1] - sub[1] * rhs[0]) / det,
        ];
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / den } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Knot slopes: weighted harmonic means of adjacent secants, zero at local
/// extrema, one-sided three-point estimates at the ends.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a == 0.0 || b == 0.0 || (a > 0.0) != (b > 0.0) {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn straight_line_reproduced() {
        let kx = [0.0, 1.0, 3.0, 4.0, 7.0, 9.0];
        let ky: Vec<f64> = kx.iter().map(|x| 2.0 * x - 1.0).collect();
        let qx: Vec<f64> = (0..=90).map(|i| i as f64 * 0.1).collect();
        for scheme in [InterpolationScheme::CubicSpline, InterpolationScheme::Pchip] {
            let v = interpolate_1d(&kx, &ky, &qx, scheme).unwrap();
            for (q, y) in qx.iter().zip(v) {
                assert!((y - (2.0 * q - 1.0)).abs() <= 1e-12, "{scheme:?} at {q}");
            }
        }
    }

    #[test]
    fn spline_reproduces_cubic() {
        let p = |x: f64| 0.5 * x * x * x - 2.0 * x * x + x + 3.0;
        let kx = [0.0, 0.7, 2.0, 2.5, 4.0, 6.0, 6.2];
        let ky: Vec<f64> = kx.iter().map(|&x| p(x)).collect();
        let qx: Vec<f64> = (0..=62).map(|i| i as f64 * 0.1).collect();
        let v = interpolate_1d(&kx, &ky, &qx, InterpolationScheme::CubicSpline).unwrap();
        for (q, y) in qx.iter().zip(v) {
            assert!((y - p(*q)).abs() <= 1e-9 * p(*q).abs().max(1.0), "at {q}: {y} vs {}", p(*q));
        }
        // four knots: a single cubic
        let kx = [1.0, 2.0, 4.0, 5.0];
        let ky: Vec<f64> = kx.iter().map(|&x| p(x)).collect();
        let v = interpolate_1d(&kx, &ky, &[3.0], InterpolationScheme::CubicSpline).unwrap();
        assert!((v[0] - p(3.0)).abs() < 1e-9);
    }

    #[test]
    fn exact_at_knots() {
        let kx = [0.0, 1.0, 2.0, 5.0, 6.0];
        let ky = [1.0, -1.0, 4.0, 0.5, 2.0];
        for scheme in [InterpolationScheme::CubicSpline, InterpolationScheme::Pchip] {
            let v = interpolate_1d(&kx, &ky, &kx, scheme).unwrap();
            for (a, b) in v.iter().zip(&ky) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bad_knots_rejected() {
        let s = InterpolationScheme::Pchip;
        assert!(interpolate_1d(&[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0], &[0.5], s).is_err());
        assert!(interpolate_1d(&[0.0, 2.0, 1.0], &[1.0, 2.0, 3.0], &[0.5], s).is_err());
        assert!(interpolate_1d(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0], &[0.5], InterpolationScheme::CubicSpline).is_err());
        assert!(interpolate_1d(&[0.0, 1.0], &[1.0, 2.0], &[1.5], s).is_err());
    }

    #[test]
    fn scheme_labels() {
        assert_eq!("s".parse::<InterpolationScheme>().unwrap(), InterpolationScheme::CubicSpline);
        assert_eq!("pchip".parse::<InterpolationScheme>().unwrap(), InterpolationScheme::Pchip);
        assert!("linear".parse::<InterpolationScheme>().is_err());
    }

    proptest! {
        #[test]
        fn pchip_preserves_monotonicity(steps in prop::collection::vec((0.1f64..5.0, 0.0f64..3.0), 2..30)) {
            let mut kx = vec![0.0];
            let mut ky = vec![0.0];
            for (dx, dy) in &steps {
                kx.push(kx.last().unwrap() + dx);
                ky.push(ky.last().unwrap() + dy);
            }
            let end = *kx.last().unwrap();
            let qx: Vec<f64> = (0..=500).map(|i| (end * i as f64 / 500.0).min(end)).collect();
            let v = interpolate_1d(&kx, &ky, &qx, InterpolationScheme::Pchip).unwrap();
            for w in v.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
        }
    }
}
