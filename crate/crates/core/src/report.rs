//! CSV and JSON rendering for the command-line tool.
//!
//! Numbers are printed with 12 significant digits in `%g` style and no
//! locale dependence. Every CSV starts with a `#` line carrying the tool
//! version and the SHA-256 of the resolved configuration.

use num_rational::BigRational;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adversarial::ReportRow;
use crate::analytic::RateRow;
use crate::error::Result;
use crate::montecarlo::{ErrorSeries, SlopeFit, SweepRow};
use crate::oracle::{ratio_parts, ratio_to_f64};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.{digits}g` formatting.
pub fn format_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn num(x: f64) -> String {
    format_g(x, SIGNIFICANT_DIGITS)
}

/// Lowercase hex SHA-256 of the JSON form of `config`.
pub fn config_digest<T: Serialize + ?Sized>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn header_comment(tool: &str, version: &str, digest: &str) -> String {
    format!("# {tool} {version} config-sha256={digest}")
}

/// Header comment, column line and rows, newline-terminated.
pub fn render_csv(comment: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    out.push_str(comment);
    out.push('\n');
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub const RATE_CURVE_COLUMNS: [&str; 5] = ["gamma", "rho", "c_p", "rate", "regime_tag"];
pub const SERIES_COLUMNS: [&str; 7] = ["t", "p_t", "q_t", "err_count", "trials", "p_hat", "stderr"];
pub const ORACLE_COLUMNS: [&str; 4] = ["t", "p_e_exact_num", "p_e_exact_den", "p_e_float"];
pub const ADVERSARIAL_COLUMNS: [&str; 7] = ["placement", "rule", "N", "V", "te_mean", "te_stderr", "lower_bound"];
pub const SWEEP_COLUMNS: [&str; 10] = [
    "gamma",
    "rho",
    "c_p",
    "empirical_rate",
    "ci_low",
    "ci_high",
    "analytic_rate",
    "regime_tag",
    "p_hat_last",
    "te_mean",
];

pub fn rate_curve_rows(rows: &[RateRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                num(r.gamma),
                num(r.rho),
                num(r.c_p),
                num(r.rate),
                r.regime_tag.as_str().to_string(),
            ]
        })
        .collect()
}

pub fn series_rows(s: &ErrorSeries) -> Vec<Vec<String>> {
    (0..s.checkpoints.len())
        .map(|i| {
            vec![
                s.checkpoints[i].to_string(),
                num(s.p_t[i]),
                num(s.q_t[i]),
                s.error_counts[i].to_string(),
                s.trials.to_string(),
                num(s.p_hat[i]),
                num(s.stderr[i]),
            ]
        })
        .collect()
}

pub fn oracle_rows(series: &[BigRational]) -> Vec<Vec<String>> {
    series
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let (n, d) = ratio_parts(x);
            vec![(i + 1).to_string(), n, d, num(ratio_to_f64(x))]
        })
        .collect()
}

pub fn adversarial_rows(rows: &[ReportRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.placement.name().to_string(),
                r.rule.to_string(),
                r.n_players.to_string(),
                r.revealers.to_string(),
                num(r.te_mean),
                num(r.te_stderr),
                num(r.lower_bound),
            ]
        })
        .collect()
}

pub fn sweep_rows(rows: &[SweepRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            let (lo, hi) = r
                .fit
                .as_ref()
                .map_or((f64::NAN, f64::NAN), |f| (-f.ci_high, -f.ci_low));
            vec![
                num(r.gamma),
                num(r.rho),
                num(r.parameter),
                num(r.empirical_rate()),
                num(lo),
                num(hi),
                num(r.analytic.value),
                r.analytic.regime_tag.as_str().to_string(),
                num(r.p_hat_last),
                num(r.te_mean),
            ]
        })
        .collect()
}

/// JSON summary of one fitted experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// `None` when no fit was possible.
    pub slope: Option<f64>,
    pub ci: Option<[f64; 2]>,
    pub window: Option<[u64; 2]>,
    pub analytic_rate: Option<f64>,
    pub regime_tag: Option<String>,
    pub runtime_seconds: f64,
}

impl Summary {
    pub fn new(fit: Option<&SlopeFit>, analytic: Option<(f64, &str)>, runtime_seconds: f64) -> Self {
        Self {
            slope: fit.map(|f| f.slope),
            ci: fit.map(|f| [f.ci_low, f.ci_high]),
            window: fit.map(|f| [f.window.t_min, f.window.t_max]),
            analytic_rate: analytic.map(|a| a.0),
            regime_tag: analytic.map(|a| a.1.to_string()),
            runtime_seconds,
        }
    }
}

/// Inverse of [`series_rows`]: parse `t,...,err_count,trials,...` rows,
/// skipping `#` comments and the column line.
pub fn parse_series_csv(text: &str) -> Result<ErrorSeries> {
    use crate::error::Error;
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::config("csv", "empty file"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::config(format!("csv.{name}"), "missing column"))
    };
    let (it, ic, in_) = (find("t")?, find("err_count")?, find("trials")?);
    let mut cps = Vec::new();
    let mut counts = Vec::new();
    let mut trials = None;
    for (row, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize, name: &str| -> Result<u64> {
            f.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::config(format!("csv.{name}"), format!("row {}: not an integer", row + 1)))
        };
        cps.push(get(it, "t")?);
        counts.push(get(ic, "err_count")?);
        let n = get(in_, "trials")?;
        if trials.is_some_and(|m| m != n) {
            return Err(Error::config("csv.trials", "trial count varies between rows"));
        }
        trials = Some(n);
    }
    if !cps.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::config("csv.t", "must be strictly increasing"));
    }
    ErrorSeries::from_counts(cps, counts, trials.ok_or_else(|| Error::config("csv", "no data rows"))?)
}
