use std::fmt::Write as _;
use std::path::Path;

use super::experiment::{RegretRow, RegretSeries};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "episode,benchmark_value,algo_value,regret,cum_regret,stderr";
pub const POSTERIOR_WEIGHTS_HEADER: &str = "episode,arm,weight_on_true";

/// Formats `x` with `digits` significant digits in the shorter of fixed and
/// scientific notation, trailing zeros removed (like C's `%g`).
pub fn format_sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The CSV document for `series`.
pub fn write_csv(series: &RegretSeries) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &series.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.episode,
            format_sig(r.benchmark_value, 6),
            format_sig(r.algo_value, 6),
            format_sig(r.regret, 6),
            format_sig(r.cum_regret, 6),
            format_sig(r.stderr, 6)
        );
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn emit_csv(series: &RegretSeries, path: &Path) -> Result<()> {
    write_file(path, &write_csv(series))
}

/// Writes the replication-averaged weight on each arm's true parameters;
/// arms are numbered from 0. Does nothing for series without weights.
pub fn emit_posterior_weights(series: &RegretSeries, path: &Path) -> Result<()> {
    let Some(weights) = &series.posterior_weights else {
        return Ok(());
    };
    let mut out = String::from(POSTERIOR_WEIGHTS_HEADER);
    out.push('\n');
    for (l, row) in weights.iter().enumerate() {
        for (k, w) in row.iter().enumerate() {
            let _ = writeln!(out, "{},{k},{}", l + 1, format_sig(*w, 6));
        }
    }
    write_file(path, &out)
}

/// Parses a CSV written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<RegretSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config(format!("{}: missing regret CSV header", path.display())));
    }
    let bad = |n: usize| Error::Config(format!("{}: malformed row {n}", path.display()));
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(n + 2));
        }
        let num = |i: usize| fields[i].parse::<f64>().map_err(|_| bad(n + 2));
        rows.push(RegretRow {
            episode: fields[0].parse().map_err(|_| bad(n + 2))?,
            benchmark_value: num(1)?,
            algo_value: num(2)?,
            regret: num(3)?,
            cum_regret: num(4)?,
            stderr: num(5)?,
            regret_stderr: 0.0,
        });
    }
    Ok(RegretSeries {
        rows,
        posterior_weights: None,
        replications: 0,
    })
}

/// Second half of `episodes` episodes, as a 1-based inclusive range.
pub fn default_window(episodes: usize) -> (usize, usize) {
    (episodes / 2 + 1, episodes)
}

/// Least-squares slope of `ln cum[l-1]` against `ln l` for `l` in
/// `from..=to` (1-based).
pub fn loglog_slope_values(cum: &[f64], from: usize, to: usize) -> Result<f64> {
    if from == 0 || to > cum.len() || from >= to {
        return Err(Error::Config(format!(
            "slope window {from}..={to} needs two episodes within 1..={}",
            cum.len()
        )));
    }
    let mut xs = Vec::with_capacity(to - from + 1);
    let mut ys = Vec::with_capacity(to - from + 1);
    for l in from..=to {
        let c = cum[l - 1];
        if c.is_nan() || c <= 0.0 {
            return Err(Error::NonPositiveRegret { episode: l, value: c });
        }
        xs.push((l as f64).ln());
        ys.push(c.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Log-log slope of the cumulative regret over `window` (default: the
/// second half of the episodes).
pub fn loglog_slope(series: &RegretSeries, window: Option<(usize, usize)>) -> Result<f64> {
    let (from, to) = window.unwrap_or_else(|| default_window(series.rows.len()));
    loglog_slope_values(&series.cum_regret(), from, to)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(50.2, 6), "50.2");
        assert_eq!(format_sig(1.0 / 3.0, 6), "0.333333");
        assert_eq!(format_sig(123456.7, 6), "123457");
        assert_eq!(format_sig(999999.7, 6), "1e6");
        assert_eq!(format_sig(-2.5e-7, 6), "-2.5e-7");
        assert_eq!(format_sig(0.000123456789, 6), "0.000123457");
    }

    #[test]
    fn synthetic_slopes() {
        for (alpha, c) in [(1.0, 3.0), (0.5, 2.0), (0.0, 7.0)] {
            let cum: Vec<f64> = (1..=30).map(|l| c * (l as f64).powf(alpha)).collect();
            assert!((loglog_slope_values(&cum, 1, 30).unwrap() - alpha).abs() < 1e-9);
        }
    }

    #[test]
    fn non_positive_regret_is_rejected() {
        let cum = [1.0, 0.0, 2.0];
        assert!(matches!(
            loglog_slope_values(&cum, 1, 3),
            Err(Error::NonPositiveRegret { episode: 2, .. })
        ));
        assert!(loglog_slope_values(&cum, 3, 3).is_err());
    }

    #[test]
    fn header_only_and_single_row() {
        assert_eq!(write_csv(&RegretSeries::default()), format!("{CSV_HEADER}\n"));
        let s = RegretSeries::from_values(&[10.0], &[10.0]);
        let text = write_csv(&s);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().nth(1), Some("1,10,10,0,0,0"));
    }

    #[test]
    fn default_window_is_second_half() {
        assert_eq!(default_window(30), (16, 30));
        assert_eq!(default_window(5), (3, 5));
    }
}
