use super::{ImputerConfig, Method};
use crate::error::{Error, Result};
use crate::signal::Signal;

/// Delay vectors sampled for the kernel-size heuristic.
const MAX_VECTORS: usize = 200;

impl ImputerConfig {
    /// Parameters derived from an average period `t` (samples): `d = M = 3t`,
    /// `K = 2.5 M`, three cycles for the seasonal lag and a unit kernel size.
    pub fn for_period(t: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 2.0) {
            return Err(Error::InvalidConfig(format!("average period must be at least 2, got {t}")));
        }
        let d = (3.0 * t).round() as usize;
        Ok(Self {
            method: Method::Tlm,
            template_len: d,
            embed_dim: (2.5 * d as f64).round() as usize,
            subsignal_len: d,
            kernel_size: 1.0,
            seasonality: None,
            cycles_for_seasonality: 3,
            avg_period: t,
            auto: false,
        })
    }
}

/// Automatic parameters for a signal with average period `t`; the EDMD
/// kernel size is the median distance between delay vectors of the longest
/// observed stretch.
pub fn auto_tune(signal: &Signal, t: f64) -> Result<ImputerConfig> {
    let mut cfg = ImputerConfig::for_period(t)?;
    cfg.auto = true;
    if let Some(run) = signal.longest_observed_run() {
        let x = &signal.samples()[run];
        let dim = cfg.embed_dim.min(x.len().saturating_sub(1)).max(1);
        let count = x.len() + 1 - dim.min(x.len());
        let stride = count.div_ceil(MAX_VECTORS).max(1);
        let vectors: Vec<&[f64]> = (0..count).step_by(stride).map(|i| &x[i..i + dim]).collect();
        let g = median_pairwise_distance(&vectors);
        if g.is_finite() && g > 0.0 {
            cfg.kernel_size = g;
        }
    }
    Ok(cfg)
}

pub(crate) fn fixed_config(signal: &Signal) -> ImputerConfig {
    let t = (signal.len() as f64 / 10.0).max(2.0);
    ImputerConfig::for_period(t).expect("period is at least 2")
}

/// Median Euclidean distance over distinct pairs; 0 for fewer than two
/// vectors.
pub fn median_pairwise_distance(vectors: &[&[f64]]) -> f64 {
    let mut d = Vec::with_capacity(vectors.len() * vectors.len().saturating_sub(1) / 2);
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let s: f64 = vectors[i].iter().zip(vectors[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d.push(s.sqrt());
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    let k = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(k, f64::total_cmp);
    let upper = *m;
    if d.len() % 2 == 1 {
        upper
    } else {
        let lower = d[..k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_eighty() {
        let c = ImputerConfig::for_period(80.0).unwrap();
        assert_eq!((c.template_len, c.subsignal_len, c.embed_dim), (240, 240, 600));
        assert_eq!(c.cycles_for_seasonality, 3);
    }

    #[test]
    fn period_two() {
        let c = ImputerConfig::for_period(2.0).unwrap();
        assert_eq!((c.template_len, c.subsignal_len, c.embed_dim), (6, 6, 15));
    }

    #[test]
    fn auto_config_validates() {
        let x: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.08).sin()).collect();
        let s = Signal::complete(x, 100.0).unwrap();
        let c = auto_tune(&s, 78.5).unwrap();
        assert!(c.auto);
        c.validate().unwrap();
        assert_eq!(c.template_len, (3.0f64 * 78.5).round() as usize);
        assert_eq!(c.embed_dim, (2.5 * c.subsignal_len as f64).round() as usize);
        assert!(c.kernel_size > 0.0);
    }

    #[test]
    fn below_two_rejected() {
        assert!(ImputerConfig::for_period(1.5).is_err());
    }

    #[test]
    fn median_distance() {
        let a = [0.0];
        let b = [1.0];
        let c = [3.0];
        // distances 1, 3, 2
        assert_eq!(median_pairwise_distance(&[&a, &b, &c]), 2.0);
        let d = [6.0];
        // 1, 3, 6, 2, 5, 3 -> sorted 1 2 3 3 5 6
        assert_eq!(median_pairwise_distance(&[&a, &b, &c, &d]), 3.0);
        assert_eq!(median_pairwise_distance(&[&a]), 0.0);
    }
}
