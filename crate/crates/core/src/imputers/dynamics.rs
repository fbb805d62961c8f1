use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{GapFill, ImputerConfig, Method, Workspace};
use crate::error::{Error, Result};
use crate::linalg::truncated_svd;
use crate::signal::{MissingInterval, Signal};

/// Singular values below this fraction of the largest are discarded.
const RCOND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsVariant {
    Lse,
    Dmd,
    Edmd,
}

impl DynamicsVariant {
    fn method(self) -> Method {
        match self {
            DynamicsVariant::Lse => Method::Lse,
            DynamicsVariant::Dmd => Method::Dmd,
            DynamicsVariant::Edmd => Method::Edmd,
        }
    }
}

/// Fills every interval by rolling a linear (LSE, DMD) or kernel (EDMD)
/// one-step model fitted to the delay vectors just before the interval.
pub fn impute_dynamics(
    signal: &Signal,
    intervals: &[MissingInterval],
    variant: DynamicsVariant,
    config: &ImputerConfig,
) -> Result<Signal> {
    super::run_strict(signal, intervals, config, variant.method()).map(|(s, _)| s)
}

/// Context used to fit a forecaster for one interval.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct History {
    /// Oldest first; the last value is adjacent to the gap.
    pub values: Vec<f64>,
    /// True when taken from the right of the gap and time-reversed.
    pub reversed: bool,
    pub m: usize,
    pub k: usize,
}

impl History {
    /// Puts a forecast made in history order back into signal order.
    pub fn orient(&self, mut v: Vec<f64>) -> Vec<f64> {
        if self.reversed {
            v.reverse();
        }
        v
    }
}

/// Chooses the side and window sizes: the full `m + k` samples on the left,
/// else on the right (time-reversed), else the longer side with `m` and `k`
/// shrunk in proportion.
pub(crate) fn select_history(
    ws: &Workspace,
    gap: &MissingInterval,
    m: usize,
    k: usize,
    name: &'static str,
) -> Result<History> {
    let need = m + k;
    let left = ws.left_run(gap.start);
    let right = ws.right_run(gap.end());
    let build = |reversed: bool, m: usize, k: usize| History {
        values: if reversed {
            ws.history_right(gap.end(), m + k)
        } else {
            ws.history_left(gap.start, m + k)
        },
        reversed,
        m,
        k,
    };
    if left >= need {
        return Ok(build(false, m, k));
    }
    if right >= need {
        return Ok(build(true, m, k));
    }
    let (avail, reversed) = if left >= right { (left, false) } else { (right, true) };
    let m2 = ((avail as f64 / 3.5).floor() as usize).min(m);
    let k2 = ((2.5 * m2 as f64).round() as usize).min(avail.saturating_sub(m2));
    if m2 < 2 || k2 < 2 {
        return Err(Error::infeasible(
            name,
            gap.start,
            format!("{left} samples left and {right} right of the gap, {need} wanted"),
        ));
    }
    Ok(build(reversed, m2, k2))
}

/// Delay matrices `X = [x_0 .. x_{m-1}]` and `Y = [x_1 .. x_m]` with columns
/// of length `k` ending at the last value of `h`.
pub(crate) fn delay_matrices(h: &[f64], m: usize, k: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n0 = h.len() - m - k;
    let x = DMatrix::from_fn(k, m, |r, c| h[n0 + c + r]);
    let y = DMatrix::from_fn(k, m, |r, c| h[n0 + c + 1 + r]);
    (x, y)
}

pub(crate) fn fill(ws: &Workspace, gap: &MissingInterval, variant: DynamicsVariant, cfg: &ImputerConfig) -> Result<GapFill> {
    let name = variant.method().name();
    let hist = select_history(ws, gap, cfg.subsignal_len, cfg.embed_dim, name)?;
    let values = match variant {
        DynamicsVariant::Lse => lse_forecast(&hist.values, hist.m, hist.k, gap.len),
        DynamicsVariant::Dmd => dmd_forecast(&hist.values, hist.m, hist.k, gap.len),
        DynamicsVariant::Edmd => edmd_forecast(&hist.values, hist.m, hist.k, cfg.kernel_size, gap.len),
    };
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::infeasible(name, gap.start, "forecast is not a number"));
    }
    Ok(GapFill::plain(hist.orient(values)))
}

struct Reduced {
    u: DMatrix<f64>,
    /// `Y V S^-1`
    b: DMatrix<f64>,
    /// `U^T Y V S^-1`
    a_r: DMatrix<f64>,
    start: DVector<f64>,
}

fn reduce(h: &[f64], m: usize, k: usize) -> Option<Reduced> {
    let (x, y) = delay_matrices(h, m, k);
    let (u, s, v) = truncated_svd(&x, RCOND);
    if s.is_empty() {
        return None;
    }
    let s_inv = DMatrix::from_diagonal(&s.map(|v| 1.0 / v));
    let b = &y * v * s_inv;
    let a_r = u.transpose() * &b;
    let start = y.column(m - 1).into_owned();
    Some(Reduced { u, b, a_r, start })
}

/// Least-squares one-step operator `A = Y X^+`, iterated from the newest
/// delay vector.
pub(crate) fn lse_forecast(h: &[f64], m: usize, k: usize, len: usize) -> Vec<f64> {
    let Some(red) = reduce(h, m, k) else {
        return vec![0.0; len];
    };
    let mut v = red.start.clone();
    (0..len)
        .map(|_| {
            let w = red.u.tr_mul(&v);
            v = &red.b * w;
            v[k - 1]
        })
        .collect()
}

/// Operator projected onto the leading left singular vectors of `X`.
pub(crate) fn dmd_forecast(h: &[f64], m: usize, k: usize, len: usize) -> Vec<f64> {
    let Some(red) = reduce(h, m, k) else {
        return vec![0.0; len];
    };
    let mut z = red.u.tr_mul(&red.start);
    let last = red.u.row(k - 1).into_owned();
    (0..len)
        .map(|_| {
            z = &red.a_r * &z;
            (&last * &z)[0]
        })
        .collect()
}

/// Eigenvalues of the reduced DMD operator fitted to the last `m + k`
/// samples of `h`.
pub fn dmd_eigenvalues(h: &[f64], m: usize, k: usize) -> Result<Vec<Complex64>> {
    if m == 0 || k == 0 || h.len() < m + k {
        return Err(Error::InvalidInput(format!("need {} samples, got {}", m + k, h.len())));
    }
    let red = reduce(&h[h.len() - m - k..], m, k)
        .ok_or_else(|| Error::infeasible("dmd", 0, "data matrix is zero"))?;
    crate::linalg::eigenvalues(&red.a_r).ok_or_else(|| Error::infeasible("dmd", 0, "eigenvalue iteration did not converge"))
}

fn kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d.sqrt() / gamma).exp()
}

/// Kernel EDMD with `k(a, b) = exp(-|a - b| / gamma)` on the mean-removed
/// history. The one-step map is
/// `f(x) = k(x)^T G^+ A G^+ X`, with `G_ij = k(x_i, x_j)`,
/// `A_ij = k(y_i, x_j)` and the data vectors `x_i` as rows of `X`.
pub(crate) fn edmd_forecast(h: &[f64], m: usize, k: usize, gamma: f64, len: usize) -> Vec<f64> {
    // the fit runs on the centred history so that constant data maps to zero
    let window = &h[h.len() - m - k..];
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let centred: Vec<f64> = window.iter().map(|v| v - mean).collect();
    let (x, y) = delay_matrices(&centred, m, k);
    let cols: Vec<Vec<f64>> = (0..m).map(|c| x.column(c).iter().copied().collect()).collect();
    let ycols: Vec<Vec<f64>> = (0..m).map(|c| y.column(c).iter().copied().collect()).collect();
    let g = DMatrix::from_fn(m, m, |i, j| kernel(&cols[i], &cols[j], gamma));
    let a = DMatrix::from_fn(m, m, |i, j| kernel(&ycols[i], &cols[j], gamma));
    let (u, s, v) = truncated_svd(&g, RCOND);
    let g_pinv = v * DMatrix::from_diagonal(&s.map(|v| 1.0 / v)) * u.transpose();
    let w = &g_pinv * a * &g_pinv * x.transpose();
    let mut state: Vec<f64> = ycols[m - 1].clone();
    (0..len)
        .map(|_| {
            let kx = DVector::from_iterator(m, cols.iter().map(|c| kernel(&state, c, gamma)));
            let next = w.tr_mul(&kx);
            state = next.iter().copied().collect();
            state[k - 1] + mean
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn geometric_sequence_recovered() {
        let h: Vec<f64> = (0..200).map(|n| 0.99f64.powi(n)).collect();
        let f = lse_forecast(&h, 40, 30, 50);
        for (i, v) in f.iter().enumerate() {
            let truth = 0.99f64.powi(200 + i as i32);
            assert!((v - truth).abs() <= 1e-8, "step {i}: {v} vs {truth}");
        }
        let f = dmd_forecast(&h, 40, 30, 50);
        for (i, v) in f.iter().enumerate() {
            assert!((v - 0.99f64.powi(200 + i as i32)).abs() <= 1e-8);
        }
    }

    #[test]
    fn two_sinusoids_have_unit_modulus_eigenvalues() {
        let h: Vec<f64> = (0..300)
            .map(|n| (0.21 * n as f64).sin() + 0.5 * (0.57 * n as f64 + 0.3).cos())
            .collect();
        let mu = dmd_eigenvalues(&h, 60, 40).unwrap();
        assert_eq!(mu.len(), 4);
        for z in mu {
            assert!((z.norm() - 1.0).abs() <= 1e-6, "{z}");
        }
    }

    #[test]
    fn constant_forecast_for_every_variant() {
        let h = vec![1.7; 100];
        for f in [
            lse_forecast(&h, 20, 30, 10),
            dmd_forecast(&h, 20, 30, 10),
            edmd_forecast(&h, 20, 30, 1.0, 10),
        ] {
            assert!(f.iter().all(|v| (v - 1.7).abs() < 1e-9), "{f:?}");
        }
    }

    #[test]
    fn zero_history_forecasts_zero() {
        assert_eq!(lse_forecast(&[0.0; 40], 10, 10, 3), vec![0.0; 3]);
    }

    #[test]
    fn edmd_follows_a_sinusoid() {
        let h: Vec<f64> = (0..400).map(|n| (2.0 * std::f64::consts::PI * n as f64 / 40.0).sin()).collect();
        let f = edmd_forecast(&h[..360], 80, 200, 3.0, 20);
        for (i, v) in f.iter().enumerate() {
            assert!((v - h[360 + i]).abs() < 1e-2, "step {i}: {v} vs {}", h[360 + i]);
        }
    }

    #[test]
    fn short_context_is_shrunk_or_rejected() {
        let mut x: Vec<f64> = (0..120).map(|n| (n as f64 * 0.3).sin()).collect();
        x[70..80].iter_mut().for_each(|v| *v = f64::NAN);
        let s = Signal::new(x, 1.0).unwrap();
        let ws = Workspace::new(&s);
        let gap = MissingInterval::new(70, 10);
        let h = select_history(&ws, &gap, 40, 100, "lse").unwrap();
        assert!(!h.reversed && h.m + h.k <= 70 && h.m == 20);
        let h = select_history(&ws, &gap, 10, 25, "lse").unwrap();
        assert_eq!((h.m, h.k, h.reversed), (10, 25, false));
        let gap = MissingInterval::new(2, 10);
        let mut y = vec![0.0; 20];
        y[2..12].iter_mut().for_each(|v| *v = f64::NAN);
        let ws = Workspace::new(&Signal::new(y, 1.0).unwrap());
        let h = select_history(&ws, &gap, 10, 25, "lse").unwrap();
        assert!(h.reversed);
        let mut z = vec![0.0; 8];
        z[2..6].iter_mut().for_each(|v| *v = f64::NAN);
        let ws = Workspace::new(&Signal::new(z, 1.0).unwrap());
        assert!(select_history(&ws, &MissingInterval::new(2, 4), 10, 25, "lse").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn lse_and_dmd_agree_on_full_rank_data(seed in 0u64..1000, k in 3usize..12) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = 3 * k;
            let h: Vec<f64> = (0..m + k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = lse_forecast(&h, m, k, 5);
            let b = dmd_forecast(&h, m, k, 5);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-8 * (1.0 + x.abs()), "{} vs {}", x, y);
            }
        }
    }
}
