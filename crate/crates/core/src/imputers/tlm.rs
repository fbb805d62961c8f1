use super::Workspace;
use crate::error::{Error, Result};
use crate::signal::{MissingInterval, Signal};

const NAME: &str = "tlm";

/// Template-matching imputation: each gap is filled with the stretch of the
/// record whose surroundings best match the gap's surroundings.
pub fn impute_tlm(signal: &Signal, intervals: &[MissingInterval], d: usize) -> Result<Signal> {
    let config = super::ImputerConfig {
        template_len: d,
        ..super::tune::fixed_config(signal)
    };
    super::run_strict(signal, intervals, &config, super::Method::Tlm).map(|(s, _)| s)
}

/// Template offsets relative to the gap start: `d` samples on the left and
/// the `d - 1` samples that follow the first sample after the gap.
fn template_offsets(ws: &Workspace, gap: &MissingInterval, d: usize) -> Vec<isize> {
    let n = ws.len() as isize;
    let s = gap.start as isize;
    let l = gap.len as isize;
    let d = d as isize;
    let left = -d..0;
    let right = l + 1..l + d;
    left.chain(right)
        .filter(|&o| {
            let i = s + o;
            i >= 0 && i < n && ws.avail[i as usize]
        })
        .collect()
}

pub(crate) fn fill(ws: &Workspace, gap: &MissingInterval, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidConfig("template length must be positive".into()));
    }
    let offsets = template_offsets(ws, gap, d);
    if offsets.is_empty() {
        return Err(Error::infeasible(NAME, gap.start, "no observed samples around the gap"));
    }
    let n = ws.len() as isize;
    let l = gap.len as isize;
    let lo = offsets[0].min(0);
    let hi = offsets.last().copied().unwrap_or(0).max(l - 1) + 1;

    // prefix count of unavailable samples
    let mut holes = vec![0usize; ws.len() + 1];
    for (i, &a) in ws.avail.iter().enumerate() {
        holes[i + 1] = holes[i] + usize::from(!a);
    }
    let s = gap.start as isize;
    let target: Vec<f64> = offsets.iter().map(|&o| ws.x[(s + o) as usize]).collect();

    let mut best: Option<(f64, usize)> = None;
    for p in -lo..=n - hi {
        let (a, b) = ((p + lo) as usize, (p + hi) as usize);
        if holes[b] != holes[a] {
            continue;
        }
        let mut dist = 0.0;
        for (&o, &t) in offsets.iter().zip(&target) {
            let diff = ws.x[(p + o) as usize] - t;
            dist += diff * diff;
            if best.is_some_and(|(bd, _)| dist > bd) {
                break;
            }
        }
        if best.map_or(true, |(bd, _)| dist < bd) {
            best = Some((dist, p as usize));
        }
    }
    let (_, p) = best.ok_or_else(|| Error::infeasible(NAME, gap.start, "no complete candidate window"))?;
    Ok(ws.x[p..p + gap.len].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn periodic(period: usize, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = (i % period) as f64 / period as f64;
                (2.0 * std::f64::consts::PI * t).sin() + 0.3 * (6.0 * std::f64::consts::PI * t).cos() + t
            })
            .collect()
    }

    fn punch(x: &[f64], gap: MissingInterval) -> Signal {
        let mut y = x.to_vec();
        y[gap.range()].iter_mut().for_each(|v| *v = f64::NAN);
        Signal::new(y, 100.0).unwrap()
    }

    #[test]
    fn periodic_gap_is_exact() {
        let x = periodic(50, 1000);
        let gap = MissingInterval::new(500, 30);
        let out = impute_tlm(&punch(&x, gap), &[gap], 100).unwrap();
        assert_eq!(&out.samples()[gap.range()], &x[gap.range()]);
    }

    #[test]
    fn constant_signal() {
        let x = vec![2.5; 400];
        let gap = MissingInterval::new(200, 20);
        let out = impute_tlm(&punch(&x, gap), &[gap], 30).unwrap();
        assert!(out.samples().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn edge_gap_uses_one_sided_template() {
        let x = periodic(40, 600);
        let gap = MissingInterval::new(585, 15);
        let out = impute_tlm(&punch(&x, gap), &[gap], 80).unwrap();
        assert_eq!(&out.samples()[gap.range()], &x[gap.range()]);
    }

    #[test]
    fn no_candidate_is_infeasible() {
        let x = periodic(40, 100);
        let gap = MissingInterval::new(20, 60);
        assert!(matches!(
            impute_tlm(&punch(&x, gap), &[gap], 40),
            Err(Error::ImputerInfeasible { .. })
        ));
    }

    #[test]
    fn later_gaps_see_earlier_fills() {
        let x = periodic(30, 400);
        let gaps = [MissingInterval::new(100, 10), MissingInterval::new(150, 10)];
        let mut y = x.clone();
        for g in &gaps {
            y[g.range()].iter_mut().for_each(|v| *v = f64::NAN);
        }
        let out = impute_tlm(&Signal::new(y, 100.0).unwrap(), &gaps, 60).unwrap();
        for g in &gaps {
            assert_eq!(&out.samples()[g.range()], &x[g.range()]);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn periodic_signals_are_matched_exactly(period in 20usize..=200, frac in 0.05f64..0.95, pos in 0.3f64..0.7) {
            let n = 8 * period + 200;
            let x = periodic(period, n);
            let len = ((period as f64 * frac) as usize).clamp(1, period - 1);
            let start = (n as f64 * pos) as usize;
            let gap = MissingInterval::new(start, len);
            let out = impute_tlm(&punch(&x, gap), &[gap], period).unwrap();
            prop_assert_eq!(&out.samples()[gap.range()], &x[gap.range()]);
            for i in (0..n).filter(|&i| !gap.contains(i)) {
                prop_assert_eq!(out.samples()[i].to_bits(), x[i].to_bits());
            }
        }
    }
}
