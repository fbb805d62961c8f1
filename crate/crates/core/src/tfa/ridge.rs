use super::deshape::RealMap;
use super::stft::TimeFrequencyMap;
use crate::error::{Error, Result};

/// One frequency bin per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Ridge {
    pub bins: Vec<usize>,
    pub bin_hz: f64,
}

impl Ridge {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn freq(&self, n: usize) -> f64 {
        self.bins[n] as f64 * self.bin_hz
    }

    pub fn freqs_hz(&self) -> Vec<f64> {
        self.bins.iter().map(|&b| b as f64 * self.bin_hz).collect()
    }

    pub fn min_freq(&self) -> f64 {
        self.bins.iter().min().map_or(0.0, |&b| b as f64 * self.bin_hz)
    }

    pub fn max_freq(&self) -> f64 {
        self.bins.iter().max().map_or(0.0, |&b| b as f64 * self.bin_hz)
    }

    /// Largest bin change between consecutive frames.
    pub fn max_jump(&self) -> usize {
        self.bins.windows(2).map(|w| w[0].abs_diff(w[1])).max().unwrap_or(0)
    }
}

/// Maximum per-frame jump in bins for a jump bound in Hz.
pub fn jump_bins(fb_hz: f64, bin_hz: f64) -> usize {
    (fb_hz / bin_hz + 1e-9).floor().max(0.0) as usize
}

/// Greedy ridge through the map: anchored at the allowed global maximum, then
/// extended frame by frame to the largest allowed value within `fb` bins of
/// the previous bin. Ties go to the bin closest to `center(n, prev)`. When no
/// allowed bin lies within reach, the reachable bin closest to the centre is
/// taken so the jump bound always holds.
fn trace(
    n_frames: usize,
    n_bins: usize,
    fb: usize,
    value: &dyn Fn(usize, usize) -> f64,
    allowed: &dyn Fn(usize, usize) -> bool,
    center: &dyn Fn(usize, Option<usize>) -> f64,
) -> Result<Vec<usize>> {
    if n_frames == 0 || n_bins == 0 {
        return Err(Error::InvalidInput("empty map".into()));
    }
    let better = |cand: (f64, f64), best: Option<(f64, f64)>| match best {
        None => true,
        Some((bv, bd)) => cand.0 > bv || (cand.0 == bv && cand.1 < bd),
    };

    let mut anchor: Option<(usize, usize)> = None;
    let mut best: Option<(f64, f64)> = None;
    for n in 0..n_frames {
        let c = center(n, None);
        for j in 0..n_bins {
            if !allowed(n, j) {
                continue;
            }
            let cand = (value(n, j), (j as f64 - c).abs());
            if better(cand, best) {
                best = Some(cand);
                anchor = Some((n, j));
            }
        }
    }
    let (n0, j0) = anchor.ok_or_else(|| Error::InvalidInput("no admissible bin for the ridge".into()))?;

    let mut bins = vec![0usize; n_frames];
    bins[n0] = j0;
    let step = |n: usize, prev: usize| -> usize {
        let lo = prev.saturating_sub(fb);
        let hi = (prev + fb).min(n_bins - 1);
        let c = center(n, Some(prev));
        let mut pick: Option<usize> = None;
        let mut best: Option<(f64, f64)> = None;
        for j in lo..=hi {
            if !allowed(n, j) {
                continue;
            }
            let cand = (value(n, j), (j as f64 - c).abs());
            if better(cand, best) {
                best = Some(cand);
                pick = Some(j);
            }
        }
        pick.unwrap_or_else(|| {
            (lo..=hi)
                .min_by(|&a, &b| (a as f64 - c).abs().total_cmp(&(b as f64 - c).abs()))
                .unwrap_or(prev)
        })
    };
    for n in n0 + 1..n_frames {
        bins[n] = step(n, bins[n - 1]);
    }
    for n in (0..n0).rev() {
        bins[n] = step(n, bins[n + 1]);
    }
    Ok(bins)
}

/// Greedy ridge on an energy map, optionally restricted to a seed band in Hz.
pub fn extract_ridge(energy: &RealMap, fb_hz: f64, seed_band: Option<(f64, f64)>) -> Result<Ridge> {
    extract_ridge_excluding(energy, fb_hz, seed_band, &[], 0.0)
}

/// Like [`extract_ridge`], but bins within `exclusion_hz` of any ridge in
/// `exclude` are not admissible.
pub fn extract_ridge_excluding(
    energy: &RealMap,
    fb_hz: f64,
    seed_band: Option<(f64, f64)>,
    exclude: &[Ridge],
    exclusion_hz: f64,
) -> Result<Ridge> {
    if !(fb_hz >= 0.0) {
        return Err(Error::InvalidConfig(format!("jump bound must be non-negative, got {fb_hz}")));
    }
    let bin_hz = energy.bin_hz();
    let band = match seed_band {
        Some((lo, hi)) if lo <= hi => Some(((lo / bin_hz).ceil().max(0.0) as usize, (hi / bin_hz).floor().max(0.0) as usize)),
        Some((lo, hi)) => return Err(Error::InvalidConfig(format!("seed band [{lo}, {hi}] is empty"))),
        None => None,
    };
    if exclude.iter().any(|r| r.len() != energy.n_frames()) {
        return Err(Error::InvalidInput("excluded ridge length does not match the map".into()));
    }
    let ex_bins = (exclusion_hz / bin_hz).floor() as usize;
    let allowed = |n: usize, j: usize| {
        band.map_or(true, |(lo, hi)| j >= lo && j <= hi)
            && exclude.iter().all(|r| r.bins[n].abs_diff(j) > ex_bins)
    };
    let bins = trace(
        energy.n_frames(),
        energy.n_bins(),
        jump_bins(fb_hz, bin_hz),
        &|n, j| energy.get(n, j),
        &allowed,
        &|_, prev| prev.map_or(0.0, |p| p as f64),
    )?;
    Ok(Ridge { bins, bin_hz })
}

/// Ridge of the `ell`-th harmonic, searched on `|F|^2` within `vicinity_hz` of
/// `ell` times the fundamental ridge.
pub fn extract_harmonic_ridge(
    tfr: &TimeFrequencyMap,
    fundamental: &Ridge,
    ell: usize,
    vicinity_hz: f64,
    fb_hz: f64,
) -> Result<Ridge> {
    extract_harmonic_ridge_excluding(tfr, fundamental, ell, vicinity_hz, fb_hz, &[], 0)
}

/// Like [`extract_harmonic_ridge`], but bins closer than `exclusion_bins` to
/// any ridge in `exclude` are not admissible.
pub fn extract_harmonic_ridge_excluding(
    tfr: &TimeFrequencyMap,
    fundamental: &Ridge,
    ell: usize,
    vicinity_hz: f64,
    fb_hz: f64,
    exclude: &[Ridge],
    exclusion_bins: usize,
) -> Result<Ridge> {
    if exclude.iter().any(|r| r.len() != tfr.n_frames()) {
        return Err(Error::InvalidInput("excluded ridge length does not match the map".into()));
    }
    if ell == 0 {
        return Err(Error::InvalidConfig("harmonic index starts at 1".into()));
    }
    if fundamental.len() != tfr.n_frames() {
        return Err(Error::InvalidInput("fundamental ridge length does not match the map".into()));
    }
    let nyquist = tfr.fs() / 2.0;
    let upper = ell as f64 * fundamental.max_freq() + vicinity_hz;
    if upper >= nyquist {
        return Err(Error::HarmonicOutOfRange {
            ell,
            upper_hz: upper,
            nyquist_hz: nyquist,
        });
    }
    let bin_hz = tfr.bin_hz();
    let v_bins = vicinity_hz / bin_hz;
    let centers: Vec<f64> = fundamental
        .bins
        .iter()
        .map(|&b| (ell * b) as f64 * fundamental.bin_hz / bin_hz)
        .collect();
    let bins = trace(
        tfr.n_frames(),
        tfr.n_bins(),
        jump_bins(fb_hz, bin_hz),
        &|n, j| tfr.get(n, j).norm_sqr(),
        &|n, j| {
            (j as f64 - centers[n]).abs() <= v_bins
                && exclude.iter().all(|r| r.bins[n].abs_diff(j) >= exclusion_bins)
        },
        &|n, _| centers[n],
    )?;
    Ok(Ridge { bins, bin_hz })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_with_peaks(peaks: &[usize], n_bins: usize) -> RealMap {
        let mut v = vec![0.0; peaks.len() * n_bins];
        for (n, &p) in peaks.iter().enumerate() {
            v[n * n_bins + p] = 1.0 + n as f64 * 1e-3;
        }
        RealMap::new(v, peaks.len(), n_bins, 1.0).unwrap()
    }

    #[test]
    fn follows_slow_peak() {
        let peaks: Vec<usize> = (0..50).map(|n| 20 + n / 5).collect();
        let r = extract_ridge(&map_with_peaks(&peaks, 64), 2.0, None).unwrap();
        assert_eq!(r.bins, peaks);
    }

    #[test]
    fn jump_bound_holds_when_peak_teleports() {
        let peaks: Vec<usize> = (0..40).map(|n| if n < 20 { 10 } else { 50 }).collect();
        let r = extract_ridge(&map_with_peaks(&peaks, 64), 3.0, None).unwrap();
        assert!(r.max_jump() <= 3);
    }

    #[test]
    fn seed_band_restricts_anchor() {
        let n_bins = 64;
        let mut v = vec![0.0; 10 * n_bins];
        for n in 0..10 {
            v[n * n_bins + 40] = 5.0;
            v[n * n_bins + 12] = 1.0;
        }
        let m = RealMap::new(v, 10, n_bins, 1.0).unwrap();
        assert!(extract_ridge(&m, 2.0, None).unwrap().bins.iter().all(|&b| b == 40));
        let r = extract_ridge(&m, 2.0, Some((5.0, 20.0))).unwrap();
        assert!(r.bins.iter().all(|&b| b == 12));
    }

    #[test]
    fn exclusion_finds_second_component() {
        let n_bins = 64;
        let mut v = vec![0.0; 10 * n_bins];
        for n in 0..10 {
            v[n * n_bins + 40] = 5.0;
            v[n * n_bins + 12] = 1.0;
        }
        let m = RealMap::new(v, 10, n_bins, 1.0).unwrap();
        let first = extract_ridge(&m, 2.0, None).unwrap();
        let second = extract_ridge_excluding(&m, 2.0, None, &[first], 4.0).unwrap();
        assert!(second.bins.iter().all(|&b| b == 12));
    }

    #[test]
    fn jump_bins_floor() {
        assert_eq!(jump_bins(10.0, 4000.0 / 8190.0), 20);
        assert_eq!(jump_bins(0.2, 0.5), 0);
    }
}
