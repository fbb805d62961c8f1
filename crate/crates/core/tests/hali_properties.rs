use std::f64::consts::PI;

use hali::evaluation::mae;
use hali::hali::{hali_impute, HaliConfig, InterpolationScheme};
use hali::imputers::Method;
use hali::signal::{mask_signal, MissingInterval, Signal};
use hali::tfa::{DecomposeParams, StftParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: f64 = 1000.0;
const N: usize = 2000;
const F0: f64 = 10.0;

/// Single-harmonic record with slow amplitude and frequency modulation.
fn clean(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a0: f64 = rng.gen_range(0.0..1.0);
    let b0: f64 = rng.gen_range(0.0..1.0);
    let p0: f64 = rng.gen_range(0.0..1.0);
    (0..N)
        .map(|i| {
            let t = i as f64 / FS;
            let amp = 1.0 + 0.2 * (2.0 * PI * (0.3 * t + a0)).sin();
            let phase = F0 * t + 0.3 / (2.0 * PI * 0.5) * (2.0 * PI * (0.5 * t + b0)).sin() + p0;
            amp * (2.0 * PI * phase).cos()
        })
        .collect()
}

fn config(scheme: InterpolationScheme) -> HaliConfig {
    HaliConfig {
        method: Method::Tlm,
        scheme,
        decompose: DecomposeParams {
            stft: StftParams {
                n_bins: 1024,
                ..StftParams::default()
            },
            ..DecomposeParams::default()
        },
        ..HaliConfig::default()
    }
}

fn two_cycle_gap(seed: u64) -> MissingInterval {
    let len = (2.0 * FS / F0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    MissingInterval::new(rng.gen_range(600..N - 600 - len), len)
}

fn run(x: &[f64], gap: MissingInterval, scheme: InterpolationScheme) -> hali::hali::ImputationResult {
    let masked = mask_signal(&Signal::complete(x.to_vec(), FS).unwrap(), &[gap]).unwrap();
    hali_impute(&masked, Some(&[gap]), &config(scheme)).unwrap()
}

#[test]
fn refinement_beats_template_matching_on_two_cycle_gap() {
    let mut wins = 0;
    for seed in 0..50 {
        let x = clean(seed);
        let gap = two_cycle_gap(seed);
        let out = run(&x, gap, InterpolationScheme::Pchip);
        assert!(!out.degraded, "seed {seed}: {:?}", out.warnings);
        let before = mae(&x, out.initial.samples(), &[gap]).unwrap();
        let after = mae(&x, out.final_signal.samples(), &[gap]).unwrap();
        wins += usize::from(after <= before);
    }
    assert!(wins >= 40, "refinement won {wins} of 50");
}

#[test]
fn complete_signal_passes_through() {
    let x = clean(3);
    let s = Signal::complete(x.clone(), FS).unwrap();
    let out = hali_impute(&s, None, &config(InterpolationScheme::Pchip)).unwrap();
    assert_eq!(out.final_signal.samples(), &x[..]);
    assert!(out.intervals.is_empty());
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let x = clean(11);
    let gap = two_cycle_gap(11);
    let a = run(&x, gap, InterpolationScheme::CubicSpline);
    let b = run(&x, gap, InterpolationScheme::CubicSpline);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(a.final_signal.samples()), bits(b.final_signal.samples()));
}

#[test]
fn denoised_matches_final_on_gap_samples() {
    let x = clean(5);
    let gap = two_cycle_gap(5);
    let out = run(&x, gap, InterpolationScheme::Pchip);
    let denoised = out.denoised.expect("refinement ran");
    for n in gap.range() {
        assert_eq!(denoised[n], out.final_signal.samples()[n], "sample {n}");
    }
}

#[test]
fn scaling_commutes_with_imputation() {
    let x = clean(8);
    let gap = two_cycle_gap(8);
    let base = run(&x, gap, InterpolationScheme::Pchip);
    for s in [0.01, 37.5] {
        let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
        let out = run(&scaled, gap, InterpolationScheme::Pchip);
        let peak = scaled.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for n in 0..N {
            let want = s * base.final_signal.samples()[n];
            let got = out.final_signal.samples()[n];
            assert!((got - want).abs() <= 1e-6 * peak, "s = {s}, sample {n}: {got} vs {want}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn observed_samples_are_untouched(
        seed in 0u64..1000,
        start in 200usize..1500,
        len in 20usize..250,
        spline in any::<bool>(),
    ) {
        let x = clean(seed);
        let gap = MissingInterval::new(start, len);
        let scheme = if spline { InterpolationScheme::CubicSpline } else { InterpolationScheme::Pchip };
        let out = run(&x, gap, scheme);
        for (n, (&got, &want)) in out.final_signal.samples().iter().zip(&x).enumerate() {
            if !gap.contains(n) {
                prop_assert_eq!(got.to_bits(), want.to_bits(), "sample {}", n);
            } else {
                prop_assert!(got.is_finite());
            }
        }
    }
}
