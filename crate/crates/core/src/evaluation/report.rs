use std::fmt::Write as _;

use super::bench::{BenchmarkReport, CellReport, RowKind};

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        "NaN".into()
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl BenchmarkReport {
    /// One line per cell and row (`kind = median`), then one per pairwise
    /// test (`kind = wilcoxon`), then one per method win count
    /// (`kind = wins`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,noise,p_ms,label,n,value,threshold,significant,note\n");
        for c in &self.cells {
            for r in &c.rows {
                let _ = writeln!(out, "median,{},{},{},{},{},,,", c.noise, c.p_ms, r.kind, r.maes.len(), num(r.median));
            }
            for t in &c.comparisons {
                let _ = writeln!(
                    out,
                    "wilcoxon,{},{},{}-{},{},{},{},{},{}",
                    c.noise,
                    c.p_ms,
                    t.a,
                    t.b,
                    t.n_pairs,
                    t.p_value.map_or("NaN".into(), num),
                    num(t.threshold),
                    t.significant,
                    quote(t.note.as_deref().unwrap_or(""))
                );
            }
            for (m, w) in &c.wins {
                let _ = writeln!(out, "wins,{},{},{m},{},{w},,,", c.noise, c.p_ms, c.outcomes.len());
            }
        }
        out
    }

    /// Per-signal MAEs in long format, one line per signal and row, with
    /// flagged signals marked.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("noise,p_ms,signal,seed,label,mae,best,flagged\n");
        for c in &self.cells {
            for o in &c.outcomes {
                let best = o.best.map_or(String::new(), |m| m.to_string());
                let mut line = |label: String, v: Option<f64>| {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{label},{},{best},{}",
                        c.noise,
                        c.p_ms,
                        o.index,
                        o.seed,
                        v.map_or("NaN".into(), num),
                        o.flagged()
                    );
                };
                for (m, v) in &o.method_mae {
                    line(m.to_string(), *v);
                }
                line(RowKind::BestInitial.to_string(), o.best_mae());
                for (s, v) in &o.hali_mae {
                    line(RowKind::Hali(*s).to_string(), *v);
                }
            }
        }
        out
    }

    /// Median MAE of BI, HaLI-S and HaLI-P per cell with the three pairwise
    /// p-values; significant ones are starred.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>10} {:>10} {:>10} {:>11} {:>11} {:>11} {:>7}",
            "noise", "p_ms", "BI", "HaLI-S", "HaLI-P", "p(I-S)", "p(I-P)", "p(S-P)", "flagged"
        );
        for c in &self.cells {
            let _ = writeln!(out, "{}", table_line(c));
        }
        for c in &self.cells {
            let wins: Vec<String> = c.wins.iter().map(|(m, w)| format!("{m}={w}")).collect();
            let _ = writeln!(out, "wins {} {}: {}", c.noise, c.p_ms, wins.join(" "));
        }
        out
    }
}

fn table_line(c: &CellReport) -> String {
    use crate::hali::InterpolationScheme::{CubicSpline, Pchip};
    let (bi, s, p) = (RowKind::BestInitial, RowKind::Hali(CubicSpline), RowKind::Hali(Pchip));
    let pv = |a, b| match c.comparison(a, b) {
        Some(t) => match t.p_value {
            Some(v) => format!("{v:.2e}{}", if t.significant { "*" } else { " " }),
            None => "n/a ".into(),
        },
        None => "-".into(),
    };
    format!(
        "{:<10} {:>6} {:>10.4} {:>10.4} {:>10.4} {:>11} {:>11} {:>11} {:>7}",
        c.noise.to_string(),
        c.p_ms,
        c.median(bi),
        c.median(s),
        c.median(p),
        pv(bi, s),
        pv(bi, p),
        pv(s, p),
        c.n_flagged()
    )
}
