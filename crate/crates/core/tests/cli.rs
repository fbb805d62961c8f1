use std::fs;
use std::path::Path;
use std::process::Command;

use hali::io::read_signal_csv;

fn hali(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hali")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = hali(args);
    assert!(
        out.status.success(),
        "{args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["synth", "--fs", "4000", "--duration", "1", "--pms", "0.1", "--snr", "20", "--seed", "7", "--output", path(out)]);
    }
    for name in ["truth.csv", "masked.csv", "intervals.csv"] {
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        assert!(!x.is_empty(), "{name} is empty");
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn impute_fills_gaps_and_keeps_observed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--fs", "4000", "--duration", "1", "--pms", "0.1", "--seed", "3", "--output", path(&data)]);
    let masked = data.join("masked.csv");
    let output = dir.path().join("y.csv");
    ok(&[
        "impute", "--input", path(&masked), "--fs", "4000", "--method", "tlm", "--scheme", "p", "--components", "1",
        "--output", path(&output),
    ]);
    let x = read_signal_csv(&masked, Some(4000.0)).unwrap().signal;
    let y = read_signal_csv(&output, Some(4000.0)).unwrap().signal;
    assert_eq!(x.len(), y.len());
    assert!(y.is_complete());
    assert!(x.n_missing() > 0);
    for (n, (&a, &b)) in x.samples().iter().zip(y.samples()).enumerate() {
        assert!(b.is_finite(), "row {n} is not finite");
        if !x.missing()[n] {
            assert_eq!(a.to_bits(), b.to_bits(), "observed row {n} changed");
        }
    }
}

#[test]
fn bench_win_counts_cover_every_signal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.cfg");
    fs::write(
        &cfg,
        "# small grid\nsignals = 20\npms = 0.05, 0.1\nsnr = noiseless\nfs = 1000\nduration = 1\nbins = 512\n",
    )
    .unwrap();
    let prefix = dir.path().join("report");
    ok(&["bench", "--config", path(&cfg), "--report", path(&prefix)]);

    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut totals = std::collections::BTreeMap::new();
    for line in csv.lines().filter(|l| l.starts_with("wins,")) {
        let f: Vec<&str> = line.split(',').collect();
        *totals.entry(f[2].to_string()).or_insert(0usize) += f[5].parse::<usize>().unwrap();
    }
    assert_eq!(totals.len(), 2, "{csv}");
    for (p_ms, total) in totals {
        assert_eq!(total, 20, "p_ms {p_ms}");
    }
    assert!(dir.path().join("report_long.csv").exists());
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hali(&["impute", "--bogus"]).status.code(), Some(1));
    let missing = dir.path().join("nope.csv");
    let out = dir.path().join("y.csv");
    assert_eq!(hali(&["impute", "--input", path(&missing), "--output", path(&out)]).status.code(), Some(1));
    assert_eq!(hali(&["bench", "--signals", "0"]).status.code(), Some(1));
}
