//! CSV and config-file plumbing shared by the command-line tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{validate_intervals, MissingInterval, Signal};

/// A signal read from CSV, with the time column when the file had one.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSignal {
    pub signal: Signal,
    pub times: Option<Vec<f64>>,
}

/// Formats a sample with 17 significant digits, or `NaN`.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_value(field: &str) -> Option<f64> {
    let f = field.trim();
    if f.eq_ignore_ascii_case("nan") || f.is_empty() {
        return Some(f64::NAN);
    }
    f.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses `time,value` or single-column `value` CSV text. A header line is
/// optional. Without `fs`, the rate is taken from the first time step.
pub fn parse_signal_csv(text: &str, origin: &str, fs: Option<f64>) -> Result<CsvSignal> {
    let perr = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut columns: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if columns.is_none() && values.is_empty() && fields.iter().any(|f| f.chars().any(|c| c.is_ascii_alphabetic()) && !f.eq_ignore_ascii_case("nan")) {
            match fields.as_slice() {
                ["value"] => columns = Some(1),
                ["time", "value"] => columns = Some(2),
                _ => return Err(perr(i + 1, format!("unexpected header `{line}`"))),
            }
            continue;
        }
        let width = *columns.get_or_insert(fields.len());
        if fields.len() != width || !(1..=2).contains(&width) {
            return Err(perr(i + 1, format!("expected {width} column(s), found {}", fields.len())));
        }
        let value = parse_value(fields[width - 1]).ok_or_else(|| perr(i + 1, format!("bad value `{}`", fields[width - 1])))?;
        if width == 2 {
            let t = fields[0]
                .parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .ok_or_else(|| perr(i + 1, format!("bad time `{}`", fields[0])))?;
            times.push(t);
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(perr(0, "no samples".into()));
    }
    let times = (columns == Some(2)).then_some(times);
    let fs = match (fs, &times) {
        (Some(fs), _) => fs,
        (None, Some(t)) if t.len() >= 2 && t[1] > t[0] => 1.0 / (t[1] - t[0]),
        _ => return Err(Error::InvalidInput(format!("{origin}: sampling rate unknown; pass --fs"))),
    };
    Ok(CsvSignal {
        signal: Signal::new(values, fs)?,
        times,
    })
}

pub fn read_signal_csv(path: &Path, fs: Option<f64>) -> Result<CsvSignal> {
    let text = fs::read_to_string(path)?;
    parse_signal_csv(&text, &path.display().to_string(), fs)
}

/// CSV text of `signal`; missing samples are written as `NaN`.
pub fn format_signal_csv(signal: &Signal, times: Option<&[f64]>) -> String {
    let mut out = String::with_capacity(signal.len() * 48);
    let x = signal.samples();
    let miss = signal.missing();
    let value = |n: usize| if miss[n] { "NaN".to_string() } else { fmt_value(x[n]) };
    match times {
        Some(t) => {
            out.push_str("time,value\n");
            for n in 0..signal.len() {
                let _ = writeln!(out, "{},{}", fmt_value(t[n]), value(n));
            }
        }
        None => {
            out.push_str("value\n");
            for n in 0..signal.len() {
                let _ = writeln!(out, "{}", value(n));
            }
        }
    }
    out
}

pub fn write_signal_csv(path: &Path, signal: &Signal, times: Option<&[f64]>) -> Result<()> {
    if let Some(t) = times {
        if t.len() != signal.len() {
            return Err(Error::InvalidInput("time column length differs from the signal".into()));
        }
    }
    fs::write(path, format_signal_csv(signal, times))?;
    Ok(())
}

/// Intervals as `start,length` with 1-based start indices.
pub fn format_intervals_csv(intervals: &[MissingInterval]) -> String {
    let mut out = String::from("start,length\n");
    for g in intervals {
        let _ = writeln!(out, "{},{}", g.start + 1, g.len);
    }
    out
}

pub fn parse_intervals_csv(text: &str, origin: &str, n: usize) -> Result<Vec<MissingInterval>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("start")) {
            continue;
        }
        let perr = |message: String| Error::Parse {
            path: origin.to_string(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [s, l] = fields.as_slice() else {
            return Err(perr(format!("expected `start,length`, found `{line}`")));
        };
        let s: usize = s.parse().map_err(|_| perr(format!("bad start `{s}`")))?;
        let l: usize = l.parse().map_err(|_| perr(format!("bad length `{l}`")))?;
        if s == 0 {
            return Err(perr("interval starts are 1-based".into()));
        }
        out.push(MissingInterval::new(s - 1, l));
    }
    validate_intervals(&out, n)?;
    Ok(out)
}

/// Columns of equal length written side by side under their names.
pub fn format_columns_csv(columns: &[(&str, &[f64])]) -> Result<String> {
    let Some(len) = columns.first().map(|c| c.1.len()) else {
        return Err(Error::InvalidInput("no columns to write".into()));
    };
    if columns.iter().any(|c| c.1.len() != len) {
        return Err(Error::InvalidInput("columns differ in length".into()));
    }
    let mut out = columns.iter().map(|c| c.0).collect::<Vec<_>>().join(",");
    out.push('\n');
    for n in 0..len {
        let row: Vec<String> = columns.iter().map(|c| fmt_value(c.1[n])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Flat `key = value` configuration. Blank lines and `#` comments are
/// ignored; a repeated key keeps the last value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (usize, String)>,
    origin: String,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: i + 1,
                    message: format!("expected `key = value`, found `{line}`"),
                });
            };
            let key = k.trim().replace('_', "-");
            entries.insert(key, (i + 1, v.trim().to_string()));
        }
        Ok(Self {
            entries,
            origin: origin.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Parsed value of `key`, or `None` when absent.
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Parse {
                path: self.origin.clone(),
                line: *line,
                message: format!("{key}: {e}"),
            }),
        }
    }

    /// Comma-separated list under `key`.
    pub fn get_list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim().parse::<T>())
                .collect::<std::result::Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|e| Error::Parse {
                    path: self.origin.clone(),
                    line: *line,
                    message: format!("{key}: {e}"),
                }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn value_column_with_nan() {
        let c = parse_signal_csv("value\n1.5\nNaN\n-2\n", "x", Some(10.0)).unwrap();
        assert_eq!(c.signal.len(), 3);
        assert!(c.signal.missing()[1]);
        assert!(c.times.is_none());
    }

    #[test]
    fn time_column_gives_rate() {
        let c = parse_signal_csv("time,value\n0,1\n0.25,2\n0.5,NaN\n", "x", None).unwrap();
        assert_eq!(c.signal.fs(), 4.0);
        assert_eq!(c.times.unwrap(), vec![0.0, 0.25, 0.5]);
    }

    #[test]
    fn headerless_and_errors() {
        assert_eq!(parse_signal_csv("1\n2\n", "x", Some(1.0)).unwrap().signal.len(), 2);
        assert!(parse_signal_csv("1\n2\n", "x", None).is_err());
        let e = parse_signal_csv("value\n1\nabc\n", "f.csv", Some(1.0)).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert!(parse_signal_csv("a,b\n1,2\n", "x", Some(1.0)).is_err());
        assert!(parse_signal_csv("value\ninf\n", "x", Some(1.0)).is_err());
    }

    #[test]
    fn intervals_round_trip() {
        let g = vec![MissingInterval::new(0, 3), MissingInterval::new(10, 5)];
        let text = format_intervals_csv(&g);
        assert!(text.contains("1,3"));
        assert_eq!(parse_intervals_csv(&text, "x", 20).unwrap(), g);
        assert!(parse_intervals_csv("start,length\n0,2\n", "x", 20).is_err());
        assert!(parse_intervals_csv("start,length\n19,5\n", "x", 20).is_err());
    }

    #[test]
    fn config_parsing() {
        let c = ConfigFile::parse("# comment\nmethod = lse\nn_signals = 30 # trailing\nsnr = noiseless, 10\n", "c").unwrap();
        assert_eq!(c.raw("method"), Some("lse"));
        assert_eq!(c.get::<usize>("n-signals").unwrap(), Some(30));
        assert_eq!(c.get_list::<String>("snr").unwrap().unwrap(), vec!["noiseless", "10"]);
        assert!(c.get::<usize>("method").is_err());
        assert!(ConfigFile::parse("oops\n", "c").is_err());
    }

    #[test]
    fn columns_csv() {
        let t = format_columns_csv(&[("a", &[1.0, 2.0]), ("b", &[3.0, 4.0])]).unwrap();
        assert!(t.starts_with("a,b\n"));
        assert!(format_columns_csv(&[("a", &[1.0]), ("b", &[])]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(v in prop::collection::vec(prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), Just(f64::NAN)], 1..50)) {
            let s = Signal::new(v.clone(), 250.0).unwrap();
            let text = format_signal_csv(&s, None);
            let back = parse_signal_csv(&text, "x", Some(250.0)).unwrap().signal;
            prop_assert_eq!(back.missing(), s.missing());
            for (a, b) in back.samples().iter().zip(s.samples()) {
                prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()) || (*a == 0.0 && *b == 0.0));
            }
        }
    }
}
