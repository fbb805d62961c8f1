use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::signal::Signal;

/// Residual sums below this fraction of the signal energy are treated as
/// exact fits.
const RSS_FLOOR: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    Aicc,
    /// Default: AICc keeps spurious harmonics too often once noise is present.
    #[default]
    Bic,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aicc" => Ok(Self::Aicc),
            "bic" => Ok(Self::Bic),
            other => Err(Error::InvalidConfig(format!("unknown criterion '{other}'"))),
        }
    }
}

impl Criterion {
    pub fn score(self, n: usize, rss: f64, p: usize) -> f64 {
        let nf = n as f64;
        let pf = p as f64;
        let fit = nf * (rss / nf).ln();
        match self {
            Criterion::Aicc => {
                if n <= p + 1 {
                    f64::INFINITY
                } else {
                    fit + 2.0 * pf + 2.0 * pf * (pf + 1.0) / (nf - pf - 1.0)
                }
            }
            Criterion::Bic => fit + pf * nf.ln(),
        }
    }
}

/// Picks the number of harmonics of `x` given the fundamental phase (in
/// cycles), using harmonic phases `ell * phi`. Only observed samples enter
/// the regression.
pub fn select_harmonic_degree(
    x: &Signal,
    fundamental_phase: &[f64],
    d_max: usize,
    criterion: Criterion,
) -> Result<usize> {
    if fundamental_phase.len() != x.len() {
        return Err(Error::InvalidInput("phase length does not match the signal".into()));
    }
    let phases: Vec<Vec<f64>> = (1..=d_max)
        .map(|l| fundamental_phase.iter().map(|p| l as f64 * p).collect())
        .collect();
    select_degree_from_phases(x.samples(), &x.missing().iter().map(|m| !m).collect::<Vec<_>>(), &phases, criterion)
}

/// Degree selection with explicit per-harmonic phases: candidate `D` uses the
/// first `D` entries of `phases`. Samples where `use_sample` is false are
/// skipped.
pub fn select_degree_from_phases(
    x: &[f64],
    use_sample: &[bool],
    phases: &[Vec<f64>],
    criterion: Criterion,
) -> Result<usize> {
    if phases.is_empty() {
        return Err(Error::DegreeSelection("no candidate harmonics".into()));
    }
    if use_sample.len() != x.len() || phases.iter().any(|p| p.len() != x.len()) {
        return Err(Error::InvalidInput("regression inputs differ in length".into()));
    }
    let rows: Vec<usize> = (0..x.len()).filter(|&i| use_sample[i]).collect();
    let n = rows.len();
    let d_max = phases.len();
    if n <= 2 * d_max + 1 {
        return Err(Error::DegreeSelection(format!(
            "{n} observations cannot support {} regressors",
            2 * d_max
        )));
    }
    let y = DVector::from_iterator(n, rows.iter().map(|&i| x[i]));
    let energy = y.norm_squared();
    let floor = (RSS_FLOOR * energy).max(f64::MIN_POSITIVE);
    let mut best: Option<(usize, f64)> = None;
    for d in 1..=d_max {
        let p = 2 * d;
        let a = DMatrix::from_fn(n, p, |r, c| {
            let arg = 2.0 * PI * phases[c / 2][rows[r]];
            if c % 2 == 0 {
                arg.cos()
            } else {
                arg.sin()
            }
        });
        let (beta, rank) = lstsq(&a, &y, RANK_TOL);
        if rank < p {
            if d == 1 {
                return Err(Error::DegreeSelection("fundamental regressors are rank-deficient".into()));
            }
            break;
        }
        let rss = (&y - &a * beta).norm_squared().max(floor);
        let score = criterion.score(n, rss, p);
        if best.map_or(true, |(_, s)| score < s) {
            best = Some((d, score));
        }
    }
    best.map(|(d, _)| d)
        .ok_or_else(|| Error::DegreeSelection("no admissible degree".into()))
}
