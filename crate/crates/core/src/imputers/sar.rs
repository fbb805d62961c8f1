use nalgebra::{DMatrix, DVector};

use super::seasonality::{estimate_seasonality, Side};
use super::{Context, GapFill, ImputerConfig, Method, Workspace};
use crate::error::{Error, Result};
use crate::linalg::{companion_spectral_radius, lstsq};
use crate::signal::{MissingInterval, Signal};
use crate::tfa::Criterion;

const NAME: &str = "sar";
const MAX_AR: usize = 4;
const MAX_SEASONAL: usize = 2;
/// Fit on at most this many seasonal cycles before the interval.
const FIT_CYCLES: usize = 8;
const MIN_CYCLES: usize = 3;
const MAX_ROOT: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Seasonal autoregressive imputation. Forward fits the data before each
/// interval; backward runs the forward procedure on the time-reversed
/// signal and flips the result. `lambda` fixes the seasonal lag; otherwise it
/// is estimated per interval.
pub fn impute_sar(
    signal: &Signal,
    intervals: &[MissingInterval],
    direction: Direction,
    lambda: Option<usize>,
    config: &ImputerConfig,
) -> Result<Signal> {
    let mut cfg = config.clone();
    if lambda.is_some() {
        cfg.seasonality = lambda;
    }
    let method = match direction {
        Direction::Forward => Method::SarForward,
        Direction::Backward => Method::SarBackward,
    };
    super::run_strict(signal, intervals, &cfg, method).map(|(s, _)| s)
}

fn lag_for(gap: &MissingInterval, ctx: &Context) -> usize {
    let cfg: &ImputerConfig = ctx.config;
    if let Some(l) = cfg.seasonality {
        return l;
    }
    ctx.phase
        .as_deref()
        .and_then(|p| estimate_seasonality(p, gap, Side::Before, cfg.cycles_for_seasonality).ok())
        .unwrap_or_else(|| cfg.default_lag())
}

pub(crate) fn fill(ws: &Workspace, gap: &MissingInterval, ctx: &Context) -> Result<GapFill> {
    let lambda = lag_for(gap, ctx);
    let avail = ws.left_run(gap.start);
    if avail < MIN_CYCLES * lambda {
        return Err(Error::infeasible(
            NAME,
            gap.start,
            format!("{avail} samples before the gap, {} needed for lag {lambda}", MIN_CYCLES * lambda),
        ));
    }
    let h = ws.history_left(gap.start, avail.min(FIT_CYCLES * lambda));
    let model = fit(&h, lambda).ok_or_else(|| Error::infeasible(NAME, gap.start, "no admissible model"))?;
    if model.spectral_radius() > MAX_ROOT {
        return Err(Error::infeasible(NAME, gap.start, "fitted model is unstable"));
    }
    Ok(GapFill::plain(model.forecast(&h, gap.len)))
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SarModel {
    pub lambda: usize,
    pub ar: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub intercept: f64,
}

impl SarModel {
    /// Coefficient of each lag `1..=max_lag` in the combined recurrence.
    fn lag_coefficients(&self) -> Vec<f64> {
        let max_lag = self.ar.len().max(self.seasonal.len() * self.lambda);
        let mut c = vec![0.0; max_lag];
        for (i, a) in self.ar.iter().enumerate() {
            c[i] += a;
        }
        for (j, b) in self.seasonal.iter().enumerate() {
            c[(j + 1) * self.lambda - 1] += b;
        }
        c
    }

    pub fn spectral_radius(&self) -> f64 {
        companion_spectral_radius(&self.lag_coefficients())
    }

    pub fn forecast(&self, h: &[f64], len: usize) -> Vec<f64> {
        let coeffs = self.lag_coefficients();
        let mut buf = h.to_vec();
        for _ in 0..len {
            let n = buf.len();
            let v = self.intercept + coeffs.iter().enumerate().map(|(i, c)| c * buf[n - 1 - i]).sum::<f64>();
            buf.push(v);
        }
        buf.split_off(h.len())
    }
}

/// Conditional least squares over every `(p, P)` order, chosen by AICc.
pub(crate) fn fit(h: &[f64], lambda: usize) -> Option<SarModel> {
    let r0 = MAX_AR.max(MAX_SEASONAL * lambda);
    if h.len() <= r0 + 1 {
        return None;
    }
    let rows: Vec<usize> = (r0..h.len()).collect();
    let n = rows.len();
    let target = DVector::from_iterator(n, rows.iter().map(|&t| h[t]));
    let floor = 1e-24 * target.norm_squared() + f64::MIN_POSITIVE;
    let mut best: Option<(f64, SarModel)> = None;
    for p in 1..=MAX_AR {
        for pp in 1..=MAX_SEASONAL {
            let cols = p + pp + 1;
            if n <= cols + 1 {
                continue;
            }
            let a = DMatrix::from_fn(n, cols, |r, c| {
                let t = rows[r];
                if c < p {
                    h[t - 1 - c]
                } else if c < p + pp {
                    h[t - (c - p + 1) * lambda]
                } else {
                    1.0
                }
            });
            let (beta, _) = lstsq(&a, &target, 1e-12);
            let rss = (&target - &a * &beta).norm_squared().max(floor);
            let score = Criterion::Aicc.score(n, rss, cols);
            if best.as_ref().map_or(true, |(s, _)| score < *s) {
                let model = SarModel {
                    lambda,
                    ar: beta.rows(0, p).iter().copied().collect(),
                    seasonal: beta.rows(p, pp).iter().copied().collect(),
                    intercept: beta[cols - 1],
                };
                best = Some((score, model));
            }
        }
    }
    best.map(|(_, m)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn periodic(period: usize, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = (i % period) as f64 / period as f64;
                (2.0 * std::f64::consts::PI * t).sin() + 0.4 * (4.0 * std::f64::consts::PI * t).cos()
            })
            .collect()
    }

    fn config() -> ImputerConfig {
        ImputerConfig::for_period(20.0).unwrap()
    }

    fn punch(x: &[f64], gap: MissingInterval) -> Signal {
        let mut y = x.to_vec();
        y[gap.range()].iter_mut().for_each(|v| *v = f64::NAN);
        Signal::new(y, 1.0).unwrap()
    }

    #[test]
    fn periodic_signal_is_exact() {
        let x = periodic(25, 600);
        let gap = MissingInterval::new(400, 40);
        for dir in [Direction::Forward, Direction::Backward] {
            let out = impute_sar(&punch(&x, gap), &[gap], dir, Some(25), &config()).unwrap();
            for n in gap.range() {
                assert!((out.samples()[n] - x[n]).abs() <= 1e-9, "{dir:?} at {n}");
            }
        }
    }

    #[test]
    fn constant_signal() {
        let x = vec![-1.25; 300];
        let gap = MissingInterval::new(200, 30);
        let out = impute_sar(&punch(&x, gap), &[gap], Direction::Forward, Some(20), &config()).unwrap();
        assert!(out.samples().iter().all(|v| (v + 1.25).abs() < 1e-9));
    }

    #[test]
    fn short_history_is_infeasible() {
        let x = periodic(25, 300);
        let gap = MissingInterval::new(60, 10);
        assert!(matches!(
            impute_sar(&punch(&x, gap), &[gap], Direction::Forward, Some(25), &config()),
            Err(Error::ImputerInfeasible { .. })
        ));
    }

    #[test]
    fn explosive_fit_rejected() {
        let h: Vec<f64> = (0..200).map(|n| 1.1f64.powi(n)).collect();
        let m = fit(&h, 10).unwrap();
        assert!(m.spectral_radius() > MAX_ROOT);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn backward_on_reversed_mirrors_forward(seed in 0u64..500, start in 150usize..250, len in 5usize..40) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..400)
                .map(|i| (i as f64 * 0.31).sin() + 0.3 * rng.gen_range(-1.0..1.0))
                .collect();
            let gap = MissingInterval::new(start, len);
            let s = punch(&x, gap);
            let fwd = impute_sar(&s, &[gap], Direction::Forward, Some(20), &config());
            let rgap = MissingInterval::new(400 - gap.end(), len);
            let bwd = impute_sar(&s.reversed(), &[rgap], Direction::Backward, Some(20), &config());
            match (fwd, bwd) {
                (Ok(f), Ok(b)) => {
                    for n in gap.range() {
                        prop_assert_eq!(f.samples()[n].to_bits(), b.samples()[399 - n].to_bits());
                    }
                }
                (Err(_), Err(_)) => {}
                (f, b) => prop_assert!(false, "one direction failed: {:?} / {:?}", f.is_ok(), b.is_ok()),
            }
        }
    }
}
