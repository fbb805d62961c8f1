use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::{estimate_average_period, Signal};

/// Window values below this fraction of the peak are dropped.
const WINDOW_TRUNCATION: f64 = 1e-6;
/// Bins whose window spectrum falls below this fraction of its peak lie
/// outside the integration half-width.
const SPECTRUM_SUPPORT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct StftParams {
    /// Oscillation cycles covered by the window's +/-3 standard deviations.
    pub cycles_in_window: f64,
    /// One-sided bins from 0 Hz to fs/2 inclusive.
    pub n_bins: usize,
    /// Average period in samples; estimated from the signal when `None`.
    pub avg_period: Option<f64>,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            cycles_in_window: 7.0,
            n_bins: 4096,
            avg_period: None,
        }
    }
}

/// Sampled Gaussian window `g(m) = exp(-sigma m^2)`, `|m| <= half_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWindow {
    pub sigma: f64,
    pub half_len: usize,
    taps: Vec<f64>,
}

impl GaussianWindow {
    /// Window whose +/-3 standard deviations span `span` samples.
    pub fn spanning(span: f64) -> Result<Self> {
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::InvalidInput(format!("window span must be positive, got {span}")));
        }
        let std = span / 6.0;
        let sigma = 1.0 / (2.0 * std * std);
        let half_len = ((-WINDOW_TRUNCATION.ln()) / sigma).sqrt().floor() as usize;
        let taps = (0..=half_len)
            .map(|m| (-sigma * (m * m) as f64).exp())
            .collect();
        Ok(Self {
            sigma,
            half_len,
            taps,
        })
    }

    /// `g(|m|)` for `|m| <= half_len`.
    pub fn at(&self, m: isize) -> f64 {
        self.taps[m.unsigned_abs()]
    }

    pub fn g0(&self) -> f64 {
        self.taps[0]
    }

    pub fn len(&self) -> usize {
        2 * self.half_len + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// DFT of the centred window at bin `j` of an `nfft`-point transform.
    pub fn spectrum(&self, j: usize, nfft: usize) -> f64 {
        let w = 2.0 * std::f64::consts::PI * j as f64 / nfft as f64;
        self.taps[0]
            + 2.0
                * self.taps[1..]
                    .iter()
                    .enumerate()
                    .map(|(i, g)| g * (w * (i + 1) as f64).cos())
                    .sum::<f64>()
    }

    /// Smallest bin where the window spectrum drops below 1% of its peak.
    pub fn half_support_bins(&self, nfft: usize) -> usize {
        let peak = self.spectrum(0, nfft);
        (1..=nfft / 2)
            .find(|&j| self.spectrum(j, nfft).abs() < SPECTRUM_SUPPORT * peak)
            .unwrap_or(nfft / 2)
            .max(1)
    }
}

/// Short-time Fourier transform with hop 1: one frame per sample.
///
/// Frame `n` is the transform of `x(n + m) g(m)` with the phase referenced to
/// the frame centre. Values are scaled so that a component
/// `A cos(2 pi phi(n))` integrates to `A exp(2 pi i phi(n)) g(0)` over its
/// spectral bump, and `Re sum_j F(n, j) = x(n) g(0)` over all bins.
#[derive(Debug, Clone)]
pub struct TimeFrequencyMap {
    values: Vec<Complex64>,
    n_frames: usize,
    n_bins: usize,
    nfft: usize,
    fs: f64,
    window: GaussianWindow,
    delta: usize,
    avg_period: f64,
}

impl TimeFrequencyMap {
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn window(&self) -> &GaussianWindow {
        &self.window
    }

    /// Integration half-width in bins.
    pub fn delta(&self) -> usize {
        self.delta
    }

    /// Average period (samples) used to size the window.
    pub fn avg_period(&self) -> f64 {
        self.avg_period
    }

    pub fn bin_hz(&self) -> f64 {
        self.fs / self.nfft as f64
    }

    pub fn freq(&self, j: usize) -> f64 {
        j as f64 * self.bin_hz()
    }

    pub fn freq_axis(&self) -> Vec<f64> {
        (0..self.n_bins).map(|j| self.freq(j)).collect()
    }

    pub fn frame(&self, n: usize) -> &[Complex64] {
        &self.values[n * self.n_bins..(n + 1) * self.n_bins]
    }

    pub fn get(&self, n: usize, j: usize) -> Complex64 {
        self.values[n * self.n_bins + j]
    }
}

/// STFT of a complete signal with a Gaussian window sized from the average
/// period.
pub fn stft(signal: &Signal, params: &StftParams) -> Result<TimeFrequencyMap> {
    if !signal.is_complete() {
        return Err(Error::InvalidInput("STFT requires a signal without missing samples".into()));
    }
    if params.n_bins < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 bins, got {}", params.n_bins)));
    }
    if !(params.cycles_in_window > 0.0) {
        return Err(Error::InvalidInput("cycles in window must be positive".into()));
    }
    let avg_period = match params.avg_period {
        Some(p) if p.is_finite() && p >= 2.0 => p,
        Some(p) => return Err(Error::InvalidInput(format!("average period {p} below 2 samples"))),
        None => estimate_average_period(signal)?,
    };
    let window = GaussianWindow::spanning(params.cycles_in_window * avg_period)?;
    let x = signal.samples();
    let n = x.len();
    if window.len() > n {
        return Err(Error::InvalidInput(format!(
            "signal of {n} samples is shorter than the {}-sample window",
            window.len()
        )));
    }
    let nfft = 2 * (params.n_bins - 1);
    if window.len() > nfft {
        return Err(Error::InvalidInput(format!(
            "{} bins cannot hold a {}-sample window",
            params.n_bins,
            window.len()
        )));
    }
    let nb = params.n_bins;
    let h = window.half_len as isize;
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut values = vec![Complex64::new(0.0, 0.0); n * nb];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    let scale = |j: usize| {
        if j == 0 || j == nfft / 2 {
            1.0 / nfft as f64
        } else {
            2.0 / nfft as f64
        }
    };

    // two real frames per complex transform: frame a in the real part,
    // frame b in the imaginary part
    let mut frame = 0;
    while frame < n {
        let pair = frame + 1 < n;
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for m in -h..=h {
            let g = window.at(m);
            let slot = m.rem_euclid(nfft as isize) as usize;
            let ia = frame as isize + m;
            let re = if ia >= 0 && (ia as usize) < n { x[ia as usize] * g } else { 0.0 };
            let ib = ia + 1;
            let im = if pair && ib >= 0 && (ib as usize) < n { x[ib as usize] * g } else { 0.0 };
            buf[slot] = Complex64::new(re, im);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for j in 0..nb {
            let zj = buf[j];
            let zc = buf[(nfft - j) % nfft].conj();
            let s = scale(j);
            values[frame * nb + j] = (zj + zc) * 0.5 * s;
            if pair {
                values[(frame + 1) * nb + j] = (zj - zc) * Complex64::new(0.0, -0.5) * s;
            }
        }
        frame += 2;
    }

    let delta = window.half_support_bins(nfft);
    Ok(TimeFrequencyMap {
        values,
        n_frames: n,
        n_bins: nb,
        nfft,
        fs: signal.fs(),
        window,
        delta,
        avg_period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(period: f64) -> StftParams {
        StftParams {
            cycles_in_window: 7.0,
            n_bins: 1025,
            avg_period: Some(period),
        }
    }

    fn cosine(f: f64, fs: f64, n: usize) -> Signal {
        Signal::complete((0..n).map(|i| (2.0 * PI * f * i as f64 / fs).cos()).collect(), fs).unwrap()
    }

    #[test]
    fn zero_signal_gives_zero_map() {
        let s = Signal::complete(vec![0.0; 600], 1000.0).unwrap();
        let tfr = stft(&s, &params(20.0)).unwrap();
        assert!((0..tfr.n_frames()).all(|n| tfr.frame(n).iter().all(|v| v.norm() == 0.0)));
    }

    #[test]
    fn full_band_sum_reproduces_samples() {
        let x: Vec<f64> = (0..700).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let s = Signal::complete(x.clone(), 1000.0).unwrap();
        let tfr = stft(&s, &params(20.0)).unwrap();
        for n in [0, 1, 350, 699] {
            let sum: f64 = tfr.frame(n).iter().map(|v| v.re).sum();
            assert!((sum - x[n]).abs() < 1e-10, "frame {n}: {sum} vs {}", x[n]);
        }
    }

    #[test]
    fn cosine_peaks_at_its_frequency() {
        let fs = 4000.0;
        let s = cosine(50.0, fs, 4000);
        let tfr = stft(
            &s,
            &StftParams {
                avg_period: Some(80.0),
                ..Default::default()
            },
        )
        .unwrap();
        let target = (50.0 / tfr.bin_hz()).round() as usize;
        for n in 600..3400 {
            let (arg, _) = tfr
                .frame(n)
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap();
            assert_eq!(arg, target, "frame {n}");
        }
    }

    #[test]
    fn too_short_signal_rejected() {
        let s = cosine(50.0, 1000.0, 100);
        assert!(stft(&s, &params(20.0)).is_err());
    }

    #[test]
    fn missing_samples_rejected() {
        let mut x = vec![0.0; 600];
        x[10] = f64::NAN;
        let s = Signal::new(x, 1000.0).unwrap();
        assert!(stft(&s, &params(20.0)).is_err());
    }

    #[test]
    fn window_support_and_half_width() {
        let w = GaussianWindow::spanning(7.0 * 80.0).unwrap();
        let std = 7.0 * 80.0 / 6.0;
        assert!((w.sigma - 1.0 / (2.0 * std * std)).abs() < 1e-15);
        assert!(w.at(w.half_len as isize) >= 1e-6);
        // frequency-domain std is fs / (2 pi std_t); 1% level at 3.03 std
        let nfft = 8190;
        let delta = w.half_support_bins(nfft);
        let bin_hz = 4000.0 / nfft as f64;
        let expected = (2.0 * 100f64.ln()).sqrt() * 4000.0 / (2.0 * PI * std) / bin_hz;
        assert!((delta as f64 - expected).abs() <= 1.5, "{delta} vs {expected}");
    }
}
