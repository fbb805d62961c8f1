use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of nonzero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of the ranks of the positive differences `a - b`.
    pub w_plus: f64,
    /// Number of nonzero differences.
    pub n: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sided Wilcoxon signed-rank test on the paired differences `a - b`.
/// Zero differences are dropped and tied magnitudes get average ranks.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let d = differences(a, b)?;
    let n = d.len();
    if n <= EXACT_MAX_N {
        exact(&d)
    } else {
        normal_approx(&d)
    }
}

/// Same as [`wilcoxon_signed_rank`] but always uses the normal approximation
/// with tie and continuity corrections.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    normal_approx(&differences(a, b)?)
}

/// Per-comparison significance level for a family of `m` tests.
pub fn bonferroni_threshold(alpha: f64, m: usize) -> f64 {
    alpha / m.max(1) as f64
}

fn differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!("paired samples of lengths {} and {}", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("paired samples must be finite".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return Err(Error::DegenerateTest("all paired differences are zero".into()));
    }
    Ok(d)
}

/// Average ranks of |d|, doubled so that ties stay integral.
fn doubled_ranks(d: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut ranks = vec![0u64; d.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        // positions i..=j share rank (i+1 + j+1)/2
        let r2 = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = r2;
        }
        i = j + 1;
    }
    ranks
}

fn exact(d: &[f64]) -> Result<WilcoxonResult> {
    let n = d.len();
    let ranks = doubled_ranks(d);
    let observed: u64 = ranks.iter().zip(d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let (mut below, mut above) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        let w: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed {
            below += 1;
        }
        if w >= observed {
            above += 1;
        }
    }
    let total = (1u64 << n) as f64;
    let p = (2.0 * below.min(above) as f64 / total).min(1.0);
    Ok(WilcoxonResult {
        w_plus: observed as f64 / 2.0,
        n,
        p_value: p,
        exact: true,
    })
}

fn normal_approx(d: &[f64]) -> Result<WilcoxonResult> {
    let n = d.len();
    let ranks = doubled_ranks(d);
    let w_plus = ranks.iter().zip(d).filter(|(_, v)| **v > 0.0).map(|(r, _)| *r as f64).sum::<f64>() / 2.0;
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if !(var > 0.0) {
        return Err(Error::DegenerateTest("zero variance of the rank statistic".into()));
    }
    let dev = ((w_plus - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * (1.0 - normal.cdf(z))).min(1.0);
    Ok(WilcoxonResult {
        w_plus,
        n,
        p_value: p,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force oracle: enumerate sign vectors with plain f64 ranks.
    fn oracle_p(d: &[f64]) -> f64 {
        let n = d.len();
        let mut abs: Vec<(f64, usize)> = d.iter().enumerate().map(|(i, v)| (v.abs(), i)).collect();
        abs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut rank = vec![0.0; n];
        for (v, i) in &abs {
            let ties: Vec<usize> = abs.iter().enumerate().filter(|(_, (w, _))| w == v).map(|(p, _)| p + 1).collect();
            rank[*i] = ties.iter().sum::<usize>() as f64 / ties.len() as f64;
        }
        let obs: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| rank[i]).sum();
        let mean = (n * (n + 1)) as f64 / 4.0;
        let mut extreme = 0usize;
        for mask in 0..(1usize << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| rank[i]).sum();
            if (w - mean).abs() >= (obs - mean).abs() - 1e-9 {
                extreme += 1;
            }
        }
        (extreme as f64 / (1usize << n) as f64).min(1.0)
    }

    #[test]
    fn all_positive_five() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = wilcoxon_signed_rank(&a, &[0.0; 5]).unwrap();
        assert!(r.exact);
        assert_eq!(r.p_value, 0.0625);
        assert_eq!(r.w_plus, 15.0);
    }

    #[test]
    fn balanced_signs_give_one() {
        let d = [-2.0, -1.0, 1.0, 2.0, 0.0];
        let r = wilcoxon_signed_rank(&d, &[0.0; 5]).unwrap();
        assert_eq!(r.n, 4);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn equal_samples_are_degenerate() {
        let a = [1.0, 2.0, 3.0];
        assert!(matches!(wilcoxon_signed_rank(&a, &a), Err(Error::DegenerateTest(_))));
    }

    #[test]
    fn exact_matches_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=10);
            // integer values to provoke ties
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-4i32..=4) as f64).filter(|v| *v != 0.0).collect();
            if d.is_empty() {
                continue;
            }
            let r = wilcoxon_signed_rank(&d, &vec![0.0; d.len()]).unwrap();
            // symmetric null: doubling the smaller tail equals the two-sided tail mass
            assert!((r.p_value - oracle_p(&d)).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn exact_and_normal_agree_at_twelve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for _ in 0..300 {
            let shift = rng.gen_range(-0.8..0.8);
            let d: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0) + shift).collect();
            let zeros = vec![0.0; 12];
            let e = wilcoxon_signed_rank(&d, &zeros).unwrap();
            let a = wilcoxon_normal(&d, &zeros).unwrap();
            assert!(e.exact && !a.exact);
            worst = worst.max((e.p_value - a.p_value).abs());
        }
        assert!(worst <= 0.02, "worst gap {worst}");
    }

    #[test]
    fn large_sample_uses_normal() {
        let a: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let r = wilcoxon_signed_rank(&a, &vec![0.0; 30]).unwrap();
        assert!(!r.exact && r.p_value < 1e-5);
    }

    #[test]
    fn bonferroni() {
        assert!((bonferroni_threshold(0.05, 3) - 0.0166666).abs() < 1e-6);
    }
}
