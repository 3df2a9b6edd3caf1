//! CSV and JSON writers. Numbers carry nine significant digits, so output
//! is byte-identical for identical inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Nine significant digits; scientific notation for `|x| < 1e-4` or `≥ 1e9`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if !(1e-4..1e9).contains(&a) {
        return format!("{x:.8e}");
    }
    // Round first so that values like 9.9999999999 get the right exponent.
    let rounded: f64 = format!("{x:.8e}").parse().unwrap();
    let exponent = rounded.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Column-oriented table with a one-line header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    headers: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn column(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        if let Some(first) = self.columns.first() {
            assert_eq!(first.len(), values.len(), "column lengths differ");
        }
        self.headers.push(name.into());
        self.columns.push(values);
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.headers.join(",");
        s.push('\n');
        for r in 0..self.rows() {
            for (c, col) in self.columns.iter().enumerate() {
                if c > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{}", format_number(col[r]));
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Numerical(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}
