use nalgebra::{Cholesky, DMatrix, DVector};

use super::dynamics::{delay_matrices, select_history};
use super::tune::median_pairwise_distance;
use super::{GapFill, ImputerConfig, Method, Workspace};
use crate::error::{Error, Result};
use crate::signal::{MissingInterval, Signal};

const NAME: &str = "gpr";
const NOISE_RATIO: f64 = 1e-2;
const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct GprImputation {
    pub signal: Signal,
    /// Posterior standard deviation for each interval, one value per imputed
    /// sample.
    pub posterior_sd: Vec<Vec<f64>>,
}

/// Gaussian-process regression from delay vectors to the next sample, rolled
/// across each interval.
pub fn impute_gpr(signal: &Signal, intervals: &[MissingInterval], config: &ImputerConfig) -> Result<GprImputation> {
    let (signal, fills) = super::run_strict(signal, intervals, config, Method::Gpr)?;
    Ok(GprImputation {
        signal,
        posterior_sd: fills.into_iter().map(|f| f.posterior_sd.unwrap_or_default()).collect(),
    })
}

pub(crate) fn fill(ws: &Workspace, gap: &MissingInterval, cfg: &ImputerConfig) -> Result<GapFill> {
    let hist = select_history(ws, gap, cfg.subsignal_len, cfg.embed_dim, NAME)?;
    let (mean, sd) = gpr_forecast(&hist.values, hist.m, hist.k, gap.len).map_err(|reason| Error::infeasible(NAME, gap.start, reason))?;
    Ok(GapFill {
        values: hist.orient(mean),
        clamped: false,
        posterior_sd: Some(hist.orient(sd)),
    })
}

/// Posterior-mean forecast and the accumulated posterior standard deviation
/// `sqrt(sum of per-step variances)`.
pub(crate) fn gpr_forecast(h: &[f64], m: usize, k: usize, len: usize) -> std::result::Result<(Vec<f64>, Vec<f64>), String> {
    let (x, y) = delay_matrices(h, m, k);
    let targets: Vec<f64> = (0..m).map(|c| y[(k - 1, c)]).collect();
    let mu = targets.iter().sum::<f64>() / m as f64;
    let var = targets.iter().map(|t| (t - mu) * (t - mu)).sum::<f64>() / m as f64;
    if var <= 0.0 {
        return Ok((vec![mu; len], vec![0.0; len]));
    }
    let cols: Vec<Vec<f64>> = (0..m).map(|c| x.column(c).iter().copied().collect()).collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let mut ell = median_pairwise_distance(&refs);
    if !(ell > 0.0) {
        ell = 1.0;
    }
    let kern = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
        var * (-d / (2.0 * ell * ell)).exp()
    };
    let gram = DMatrix::from_fn(m, m, |i, j| kern(&cols[i], &cols[j]) + if i == j { NOISE_RATIO * var } else { 0.0 });
    let chol = factor(gram, var).ok_or_else(|| "Gram matrix is not positive definite".to_string())?;
    let centred = DVector::from_iterator(m, targets.iter().map(|t| t - mu));
    let alpha = chol.solve(&centred);

    let mut state: Vec<f64> = y.column(m - 1).iter().copied().collect();
    let mut means = Vec::with_capacity(len);
    let mut sds = Vec::with_capacity(len);
    let mut acc = 0.0;
    for _ in 0..len {
        let ks = DVector::from_iterator(m, cols.iter().map(|c| kern(&state, c)));
        let mean = mu + ks.dot(&alpha);
        let v = chol.solve(&ks);
        acc += (var - ks.dot(&v)).max(0.0);
        means.push(mean);
        sds.push(acc.sqrt());
        state.remove(0);
        state.push(mean);
    }
    Ok((means, sds))
}

fn factor(gram: DMatrix<f64>, var: f64) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(gram.clone()) {
        return Some(c);
    }
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut g = gram.clone();
        for i in 0..g.nrows() {
            g[(i, i)] += jitter * var;
        }
        if let Some(c) = Cholesky::new(g) {
            return Some(c);
        }
        jitter *= 10.0;
    }
    None
}
