use crate::error::{Error, Result};
use crate::signal::{validate_intervals, MissingInterval};

/// Mean absolute error over the samples of `intervals`.
pub fn mae(truth: &[f64], estimate: &[f64], intervals: &[MissingInterval]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::InvalidInput(format!(
            "truth has {} samples, estimate has {}",
            truth.len(),
            estimate.len()
        )));
    }
    validate_intervals(intervals, truth.len())?;
    let (sum, count) = intervals
        .iter()
        .flat_map(|g| g.range())
        .fold((0.0, 0usize), |(s, c), n| (s + (truth[n] - estimate[n]).abs(), c + 1));
    if count == 0 {
        return Err(Error::InvalidInput("no samples inside the intervals".into()));
    }
    Ok(sum / count as f64)
}

/// [`mae`] divided by the range of `truth` over the whole record.
pub fn nmae(truth: &[f64], estimate: &[f64], intervals: &[MissingInterval]) -> Result<f64> {
    let e = mae(truth, estimate, intervals)?;
    let (lo, hi) = truth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::InvalidInput("ground truth has zero range".into()));
    }
    Ok(e / range)
}

/// Median of the finite values; NaN when there are none.
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
