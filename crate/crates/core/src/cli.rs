//! Command-line front end: `synth`, `impute`, `decompose` and `bench`.
//!
//! Settings come from built-in defaults, then an optional `key = value`
//! file (`--config`), then flags. Exit code 0 means success, 1 invalid
//! input and 2 a computational failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::evaluation::{run_benchmark_with, BenchmarkConfig, NoiseLevel};
use crate::hali::{hali_impute, HaliConfig, InterpolationScheme};
use crate::imputers::Method;
use crate::io::{
    format_columns_csv, format_intervals_csv, parse_intervals_csv, read_signal_csv, write_signal_csv, ConfigFile,
};
use crate::signal::{add_noise, apply_missingness, generate_synthetic, Signal, SyntheticSpec};
use crate::tfa::{decompose_detailed, DecomposeParams, DecompositionDetail};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hali", version, about = "Harmonic-level gap imputation for oscillatory signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic record: ground truth, masked copy and gaps.
    Synth(SynthArgs),
    /// Fill the gaps (NaN runs) of a CSV signal.
    Impute(ImputeArgs),
    /// Write per-harmonic amplitude and phase curves and the trend.
    Decompose(DecomposeArgs),
    /// Run the seeded synthetic benchmark.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct TfaFlags {
    /// Gaussian window span in average periods.
    #[arg(long)]
    window_cycles: Option<f64>,
    /// Number of frequency bins.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory for truth.csv, masked.csv and intervals.csv.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    fs: Option<f64>,
    /// Record length in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Fraction of missing samples.
    #[arg(long)]
    pms: Option<f64>,
    /// Noise level in dB, or `noiseless`.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    intervals: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImputeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    fs: Option<f64>,
    #[arg(long)]
    method: Option<String>,
    /// `s` (spline) or `p` (pchip).
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    components: Option<usize>,
    /// Shortest missing run treated as a gap; shorter runs are filled
    /// linearly.
    #[arg(long)]
    min_gap: Option<usize>,
    /// Intervals CSV (`start,length`, 1-based) overriding gap detection.
    #[arg(long)]
    intervals: Option<PathBuf>,
    #[command(flatten)]
    tfa: TfaFlags,
    /// Directory for time-frequency and ridge dumps.
    #[arg(long)]
    dump_tfr: Option<PathBuf>,
    /// Per-gap report CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    fs: Option<f64>,
    #[arg(long)]
    components: Option<usize>,
    #[command(flatten)]
    tfa: TfaFlags,
    #[arg(long)]
    dump_tfr: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of signals per cell.
    #[arg(long)]
    signals: Option<usize>,
    /// Comma-separated missing fractions.
    #[arg(long)]
    pms: Option<String>,
    /// Comma-separated noise levels (dB or `noiseless`).
    #[arg(long)]
    snr: Option<String>,
    /// Comma-separated initial methods.
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    tfa: TfaFlags,
    /// Output prefix: writes PREFIX.csv, PREFIX_long.csv and PREFIX.txt.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let (name, result) = match cli.command {
        Command::Synth(a) => ("synth", synth(a)),
        Command::Impute(a) => ("impute", impute(a)),
        Command::Decompose(a) => ("decompose", decompose(a)),
        Command::Bench(a) => ("bench", bench(a)),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {name}: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_COMPUTE
            }
        }
    }
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::read(p),
        None => Ok(ConfigFile::default()),
    }
}

/// Rejects config keys outside `allowed`, mirroring unknown-flag errors.
fn check_keys(cfg: &ConfigFile, allowed: &[&str]) -> Result<()> {
    match cfg.keys().find(|k| !allowed.contains(k)) {
        Some(k) => Err(Error::InvalidConfig(format!("unknown config key `{k}`"))),
        None => Ok(()),
    }
}

fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

fn parse_flag<T: std::str::FromStr>(flag: Option<String>, cfg: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(s) => s
            .parse::<T>()
            .map(Some)
            .map_err(|e| Error::InvalidConfig(format!("--{key}: {e}"))),
        None => cfg.get(key),
    }
}

fn parse_list<T: std::str::FromStr>(flag: Option<String>, cfg: &ConfigFile, key: &str) -> Result<Option<Vec<T>>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(s) => s
            .split(',')
            .map(|v| v.trim().parse::<T>())
            .collect::<std::result::Result<Vec<T>, _>>()
            .map(Some)
            .map_err(|e| Error::InvalidConfig(format!("--{key}: {e}"))),
        None => cfg.get_list(key),
    }
}

fn decompose_params(tfa: &TfaFlags, cfg: &ConfigFile) -> Result<DecomposeParams> {
    let mut p = DecomposeParams::default();
    if let Some(c) = pick(tfa.window_cycles, cfg, "window-cycles")? {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidConfig(format!("window-cycles must be positive, got {c}")));
        }
        p.stft.cycles_in_window = c;
    }
    if let Some(b) = pick(tfa.bins, cfg, "bins")? {
        if b < 16 {
            return Err(Error::InvalidConfig(format!("bins must be at least 16, got {b}")));
        }
        p.stft.n_bins = b;
    }
    Ok(p)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    check_keys(&cfg, &["fs", "duration", "pms", "snr", "seed", "intervals", "harmonics", "jitter"])?;
    let mut spec = SyntheticSpec::default();
    if let Some(fs) = pick(a.fs, &cfg, "fs")? {
        spec.fs = fs;
    }
    if let Some(d) = pick(a.duration, &cfg, "duration")? {
        spec.duration = d;
    }
    if let Some(h) = cfg.get("harmonics")? {
        spec.n_harmonics = h;
    }
    if let Some(j) = cfg.get("jitter")? {
        spec.harmonic_jitter = j;
    }
    spec.seed = pick(a.seed, &cfg, "seed")?.unwrap_or(0);
    let pms = pick(a.pms, &cfg, "pms")?.unwrap_or(0.1);
    let noise: NoiseLevel = parse_flag(a.snr, &cfg, "snr")?.unwrap_or(NoiseLevel::Noiseless);
    let n_intervals = pick(a.intervals, &cfg, "intervals")?.unwrap_or(3);
    spec.validate()?;

    let truth = generate_synthetic(&spec)?;
    let (masked, intervals) = apply_missingness(&truth, pms, n_intervals, spec.seed.wrapping_add(1))?;
    let observed = match noise {
        NoiseLevel::Noiseless => masked,
        NoiseLevel::SnrDb(db) => add_noise(&masked, db, spec.seed.wrapping_add(2))?,
    };
    ensure_dir(&a.output)?;
    write_signal_csv(&a.output.join("truth.csv"), &truth.clean, None)?;
    write_signal_csv(&a.output.join("masked.csv"), &observed, None)?;
    fs::write(a.output.join("intervals.csv"), format_intervals_csv(&intervals))?;
    Ok(())
}

fn impute(a: ImputeArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    check_keys(
        &cfg,
        &["fs", "method", "scheme", "components", "min-gap", "window-cycles", "bins", "guard", "criterion"],
    )?;
    let input = read_signal_csv(&a.input, pick(a.fs, &cfg, "fs")?)?;
    let signal = input.signal;
    let mut config = HaliConfig {
        method: parse_flag(a.method, &cfg, "method")?.unwrap_or(Method::Tlm),
        scheme: parse_flag(a.scheme, &cfg, "scheme")?.unwrap_or(InterpolationScheme::Pchip),
        components: pick(a.components, &cfg, "components")?.unwrap_or(1),
        min_gap: pick(a.min_gap, &cfg, "min-gap")?.unwrap_or(3),
        decompose: decompose_params(&a.tfa, &cfg)?,
        guard: cfg.get("guard")?,
        ..HaliConfig::default()
    };
    if let Some(c) = cfg.get("criterion")? {
        config.decompose.criterion = c;
    }
    if config.components == 0 {
        return Err(Error::InvalidConfig("components must be at least 1".into()));
    }
    if config.min_gap == 0 {
        return Err(Error::InvalidConfig("min-gap must be at least 1".into()));
    }
    let intervals = match &a.intervals {
        Some(p) => Some(parse_intervals_csv(&fs::read_to_string(p)?, &p.display().to_string(), signal.len())?),
        None => None,
    };

    let result = hali_impute(&signal, intervals.as_deref(), &config)?;
    for w in &result.warnings {
        warn(w);
    }
    write_signal_csv(&a.output, &result.final_signal, input.times.as_deref())?;

    if let Some(path) = &a.report {
        let mut out = String::from("start,length,method,clamped,failures\n");
        for r in &result.records {
            let used = r.used.map_or("linear".to_string(), |m| m.to_string());
            out.push_str(&format!(
                "{},{},{used},{},\"{}\"\n",
                r.interval.start + 1,
                r.interval.len,
                r.clamped,
                r.failures.join("; ").replace('"', "'")
            ));
        }
        fs::write(path, out)?;
    }
    if let Some(dir) = &a.dump_tfr {
        if result.intervals.is_empty() {
            warn("no gaps; time-frequency dump written for the input");
        }
        let mut params = config.decompose.clone();
        params.stft.avg_period = result.decomposition.as_ref().map(|d| d.avg_period);
        let detail = decompose_detailed(&result.initial, config.components, &params)?;
        dump_tfr(dir, &detail)?;
    }
    Ok(())
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    check_keys(&cfg, &["fs", "components", "window-cycles", "bins", "criterion"])?;
    let input = read_signal_csv(&a.input, pick(a.fs, &cfg, "fs")?)?;
    if !input.signal.is_complete() {
        return Err(Error::InvalidInput(format!(
            "{} has {} missing samples; run `impute` first",
            a.input.display(),
            input.signal.n_missing()
        )));
    }
    let k = pick(a.components, &cfg, "components")?.unwrap_or(1);
    let mut params = decompose_params(&a.tfa, &cfg)?;
    if let Some(c) = cfg.get("criterion")? {
        params.criterion = c;
    }
    let detail = decompose_detailed(&input.signal, k, &params)?;
    ensure_dir(&a.output)?;
    write_decomposition(&a.output, &input.signal, &detail)?;
    if let Some(dir) = &a.dump_tfr {
        dump_tfr(dir, &detail)?;
    }
    Ok(())
}

fn write_decomposition(dir: &Path, signal: &Signal, detail: &DecompositionDetail) -> Result<()> {
    let d = &detail.decomposition;
    let time: Vec<f64> = (0..signal.len()).map(|n| n as f64 / signal.fs()).collect();
    fs::write(dir.join("trend.csv"), format_columns_csv(&[("time", &time), ("trend", &d.trend)])?)?;
    for (k, comp) in d.components.iter().enumerate() {
        let names: Vec<(String, String)> = comp
            .harmonics
            .iter()
            .map(|h| (format!("amplitude_{}", h.ell), format!("phase_{}", h.ell)))
            .collect();
        let mut cols: Vec<(&str, &[f64])> = vec![("time", &time)];
        for (h, (an, pn)) in comp.harmonics.iter().zip(&names) {
            cols.push((an, &h.amplitude));
            cols.push((pn, &h.phase));
        }
        fs::write(dir.join(format!("component_{}.csv", k + 1)), format_columns_csv(&cols)?)?;
    }
    Ok(())
}

/// Sparse `frame,bin,value` dumps of `|F|` and the de-shaped map (values
/// below 1e-4 of the map maximum are skipped) plus every ridge.
fn dump_tfr(dir: &Path, detail: &DecompositionDetail) -> Result<()> {
    ensure_dir(dir)?;
    let tfr = &detail.tfr;
    let mut out = std::io::BufWriter::new(fs::File::create(dir.join("stft_magnitude.csv"))?);
    writeln!(out, "frame,bin,value")?;
    let max = (0..tfr.n_frames())
        .flat_map(|n| tfr.frame(n).iter().map(|v| v.norm()))
        .fold(0.0, f64::max);
    for n in 0..tfr.n_frames() {
        for (j, v) in tfr.frame(n).iter().enumerate() {
            let m = v.norm();
            if m >= 1e-4 * max && m > 0.0 {
                writeln!(out, "{n},{j},{m:.9e}")?;
            }
        }
    }
    out.flush()?;

    let ds = &detail.deshaped;
    let mut out = std::io::BufWriter::new(fs::File::create(dir.join("deshaped.csv"))?);
    writeln!(out, "frame,bin,value")?;
    let max = (0..ds.n_frames()).flat_map(|n| ds.frame(n).iter().copied()).fold(0.0, f64::max);
    for n in 0..ds.n_frames() {
        for (j, &v) in ds.frame(n).iter().enumerate() {
            if v >= 1e-4 * max && v > 0.0 {
                writeln!(out, "{n},{j},{v:.9e}")?;
            }
        }
    }
    out.flush()?;

    let mut out = std::io::BufWriter::new(fs::File::create(dir.join("ridges.csv"))?);
    writeln!(out, "component,harmonic,frame,bin,freq_hz")?;
    for (k, comp) in detail.decomposition.components.iter().enumerate() {
        for h in &comp.harmonics {
            for (n, &b) in h.ridge.bins.iter().enumerate() {
                writeln!(out, "{},{},{n},{b},{:.9e}", k + 1, h.ell, h.ridge.freq(n))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    check_keys(
        &cfg,
        &[
            "seed", "signals", "pms", "snr", "method", "scheme", "intervals", "components", "alpha", "fs", "duration",
            "harmonics", "jitter", "guard", "window-cycles", "bins", "criterion", "report",
        ],
    )?;
    let mut config = BenchmarkConfig::default();
    if let Some(v) = pick(a.seed, &cfg, "seed")? {
        config.seed = v;
    }
    if let Some(v) = pick(a.signals, &cfg, "signals")? {
        config.n_signals = v;
    }
    if let Some(v) = parse_list(a.pms, &cfg, "pms")? {
        config.p_ms_levels = v;
    }
    if let Some(v) = parse_list(a.snr, &cfg, "snr")? {
        config.noise_levels = v;
    }
    if let Some(v) = parse_list(a.method, &cfg, "method")? {
        config.methods = v;
    }
    if let Some(v) = cfg.get_list("scheme")? {
        config.schemes = v;
    }
    if let Some(v) = cfg.get("intervals")? {
        config.n_intervals = v;
    }
    if let Some(v) = cfg.get("components")? {
        config.components = v;
    }
    if let Some(v) = cfg.get("alpha")? {
        config.alpha = v;
    }
    if let Some(v) = cfg.get("fs")? {
        config.synthetic.fs = v;
    }
    if let Some(v) = cfg.get("duration")? {
        config.synthetic.duration = v;
    }
    if let Some(v) = cfg.get("harmonics")? {
        config.synthetic.n_harmonics = v;
    }
    if let Some(v) = cfg.get("jitter")? {
        config.synthetic.harmonic_jitter = v;
    }
    config.guard = cfg.get("guard")?;
    config.decompose = decompose_params(&a.tfa, &cfg)?;
    if let Some(c) = cfg.get("criterion")? {
        config.decompose.criterion = c;
    }
    let report_prefix: Option<PathBuf> = a.report.or(cfg.get::<String>("report")?.map(PathBuf::from));

    let report = run_benchmark_with(&config, |noise, p_ms, o| {
        for f in &o.failures {
            warn(&format!("{noise} p_ms={p_ms} signal {}: {f}", o.index));
        }
    })?;
    let table = report.to_table();
    print!("{table}");
    if let Some(prefix) = report_prefix {
        let with = |suffix: &str| {
            let mut s = prefix.clone().into_os_string();
            s.push(suffix);
            PathBuf::from(s)
        };
        if let Some(parent) = prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        fs::write(with(".csv"), report.to_csv())?;
        fs::write(with("_long.csv"), report.to_long_csv())?;
        fs::write(with(".txt"), table)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        run_cli(std::iter::once("hali").chain(args.iter().copied()))
    }

    #[test]
    fn unknown_flag_is_input_error() {
        assert_eq!(run(&["impute", "--input", "x", "--output", "y", "--bogus"]), EXIT_INPUT);
        assert_eq!(run(&["frobnicate"]), EXIT_INPUT);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(run(&["--help"]), EXIT_OK);
    }

    #[test]
    fn missing_input_file() {
        assert_eq!(run(&["impute", "--input", "/nonexistent/x.csv", "--output", "/tmp/y.csv", "--fs", "100"]), EXIT_INPUT);
    }

    #[test]
    fn unknown_config_key() {
        let dir = tempfile::tempdir().unwrap();
        let c = dir.path().join("c.cfg");
        fs::write(&c, "colour = blue\n").unwrap();
        let code = run(&["synth", "--output", dir.path().to_str().unwrap(), "--config", c.to_str().unwrap()]);
        assert_eq!(code, EXIT_INPUT);
    }
}
