use crate::error::{Error, Result};
use crate::signal::MissingInterval;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    After,
}

/// Sample counts of the complete cycles of `phase` (cycles) inside
/// `segment`; cycle `k` holds the samples with `k - 1 < phase <= k`.
pub(crate) fn cycle_lengths(phase: &[f64], segment: std::ops::Range<usize>) -> Vec<(i64, usize)> {
    if segment.is_empty() {
        return Vec::new();
    }
    let seg = &phase[segment];
    let k_min = seg[0].ceil() as i64 + 1;
    let k_max = seg[seg.len() - 1].floor() as i64;
    if k_max < k_min {
        return Vec::new();
    }
    let mut counts = vec![0usize; (k_max - k_min + 1) as usize];
    for &p in seg {
        let k = p.ceil() as i64;
        if (k_min..=k_max).contains(&k) {
            counts[(k - k_min) as usize] += 1;
        }
    }
    (k_min..=k_max).zip(counts).collect()
}

/// Seasonal lag from the `n_c` complete cycles nearest to the interval on
/// the given side: their mean length, rounded, at least 2.
pub fn estimate_seasonality(phase: &[f64], interval: &MissingInterval, side: Side, n_c: usize) -> Result<usize> {
    if n_c == 0 {
        return Err(Error::InvalidConfig("need at least one cycle".into()));
    }
    if interval.end() > phase.len() {
        return Err(Error::InvalidInput("interval extends past the phase series".into()));
    }
    let segment = match side {
        Side::Before => 0..interval.start,
        Side::After => interval.end()..phase.len(),
    };
    let cycles = cycle_lengths(phase, segment);
    if cycles.len() < n_c {
        return Err(Error::Seasonality(format!(
            "{} complete cycles on the {:?} side, {n_c} needed",
            cycles.len(),
            side
        )));
    }
    let chosen = match side {
        Side::Before => &cycles[cycles.len() - n_c..],
        Side::After => &cycles[..n_c],
    };
    let mean = chosen.iter().map(|&(_, c)| c as f64).sum::<f64>() / n_c as f64;
    Ok((mean.round() as usize).max(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_phase() {
        let phase: Vec<f64> = (0..2000).map(|n| n as f64 / 80.0).collect();
        let gap = MissingInterval::new(1000, 50);
        assert_eq!(estimate_seasonality(&phase, &gap, Side::Before, 3).unwrap(), 80);
        assert_eq!(estimate_seasonality(&phase, &gap, Side::After, 3).unwrap(), 80);
        assert!(cycle_lengths(&phase, 0..1000).iter().all(|&(_, c)| c == 80));
    }

    #[test]
    fn mean_of_unequal_cycles() {
        // cycles of 78, 80 and 82 samples just before the gap
        let mut phase = Vec::new();
        let mut k = 0.0;
        for len in [90usize, 78, 80, 82] {
            for i in 0..len {
                phase.push(k + (i + 1) as f64 / len as f64);
            }
            k += 1.0;
        }
        let start = phase.len();
        phase.extend((1..=100).map(|i| k + i as f64 / 90.0));
        let gap = MissingInterval::new(start, 10);
        assert_eq!(estimate_seasonality(&phase, &gap, Side::Before, 3).unwrap(), 80);
    }

    #[test]
    fn too_few_cycles() {
        let phase: Vec<f64> = (0..200).map(|n| n as f64 / 80.0).collect();
        assert!(matches!(
            estimate_seasonality(&phase, &MissingInterval::new(190, 5), Side::Before, 3),
            Err(Error::Seasonality(_))
        ));
    }
}
