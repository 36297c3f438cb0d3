//! Deterministic CSV/JSON rendering of sweep and experiment rows.
//!
//! Every float is rounded to 12 significant digits before rendering, and
//! the JSON is produced from the rounded values, so both formats carry the
//! same numbers.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::htp::SweepRow;
use crate::optics::{ExperimentRow, OpticalFilter};

pub const CSV_HEADER: &str =
    "family,d,param,F_before,F_after_named,F_after_opt,p_success,cost_K,delta_F,boundary_flag";

pub const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Json,
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

/// `%.{digits}g`-style formatting: shortest of fixed or scientific notation,
/// trailing zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Round to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    format_sig(x, SIG_DIGITS).parse().unwrap_or(x)
}

/// A row type that renders to CSV and JSON with identical values.
pub trait DataRow: Serialize {
    const HEADER: &'static str;

    fn csv_cells(&self) -> Vec<String>;

    /// Copy with every float passed through [`round_sig`].
    fn rounded(&self) -> Self;
}

fn sig(x: f64) -> String {
    format_sig(x, SIG_DIGITS)
}

fn opt_sig(x: Option<f64>) -> String {
    x.map(sig).unwrap_or_default()
}

impl DataRow for SweepRow {
    const HEADER: &'static str = CSV_HEADER;

    fn csv_cells(&self) -> Vec<String> {
        vec![
            self.family.clone(),
            self.d.to_string(),
            sig(self.param),
            sig(self.f_before),
            sig(self.f_after_named),
            opt_sig(self.f_after_opt),
            sig(self.p_success),
            sig(self.cost_k),
            sig(self.delta_f),
            self.boundary_flag.to_string(),
        ]
    }

    fn rounded(&self) -> Self {
        let r = round_sig;
        SweepRow {
            family: self.family.clone(),
            d: self.d,
            param: r(self.param),
            f_before: r(self.f_before),
            f_after_named: r(self.f_after_named),
            f_after_opt: self.f_after_opt.map(r),
            p_success: r(self.p_success),
            cost_k: r(self.cost_k),
            delta_f: r(self.delta_f),
            boundary_flag: self.boundary_flag,
        }
    }
}

pub const EXPERIMENT_HEADER: &str = "q,theta1,filter,kappa,F_before,F_after,F_p,f,p_success,rate_shared,rate_filtered";

impl DataRow for ExperimentRow {
    const HEADER: &'static str = EXPERIMENT_HEADER;

    fn csv_cells(&self) -> Vec<String> {
        let filter = match self.filter {
            OpticalFilter::None => "none",
            OpticalFilter::Kappa => "kappa",
            OpticalFilter::KappaPrime => "kappa_prime",
        };
        vec![
            sig(self.q),
            sig(self.theta1),
            filter.to_string(),
            opt_sig(self.kappa),
            sig(self.f_before),
            sig(self.f_after),
            sig(self.f_p),
            sig(self.f),
            sig(self.p_success),
            sig(self.rate_shared),
            sig(self.rate_filtered),
        ]
    }

    fn rounded(&self) -> Self {
        let r = round_sig;
        ExperimentRow {
            q: r(self.q),
            theta1: r(self.theta1),
            filter: self.filter,
            kappa: self.kappa.map(r),
            f_before: r(self.f_before),
            f_after: r(self.f_after),
            f_p: r(self.f_p),
            f: r(self.f),
            p_success: r(self.p_success),
            rate_shared: r(self.rate_shared),
            rate_filtered: r(self.rate_filtered),
        }
    }
}

pub fn render_csv<R: DataRow>(rows: &[R]) -> String {
    let mut out = String::from(R::HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_cells().join(","));
        out.push('\n');
    }
    out
}

pub fn render_json<R: DataRow>(rows: &[R]) -> Result<String> {
    let rounded: Vec<R> = rows.iter().map(DataRow::rounded).collect();
    let mut s = serde_json::to_string_pretty(&rounded)?;
    s.push('\n');
    Ok(s)
}

pub fn render_dataset<R: DataRow>(rows: &[R], format: DataFormat) -> Result<String> {
    match format {
        DataFormat::Csv => Ok(render_csv(rows)),
        DataFormat::Json => render_json(rows),
    }
}

/// Write rows to `dest`, or to stdout when `dest` is `None`.
pub fn emit_dataset<R: DataRow>(rows: &[R], format: DataFormat, dest: Option<&Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("no rows to emit".into()));
    }
    let text = render_dataset(rows, format)?;
    match dest {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
