//! Number formatting and CSV read/write.
//!
//! All numeric output is rendered at 12 significant digits with a
//! locale-independent decimal point and `\n` line endings; the golden-file
//! tests depend on this formatting staying frozen.

use std::fmt::Write as _;

/// Significant digits used in every emitted number.
pub const SIG_DIGITS: usize = 12;

/// Render `x` with [`SIG_DIGITS`] significant digits. Values with decimal
/// exponent in `[-4, 12)` are written in positional notation, everything
/// else in `e` notation; trailing zeros are trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (_, exp) = sci.split_once('e').expect("exponent in scientific form");
    let exp: i32 = exp.parse().expect("numeric exponent");
    if (-4..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let (mantissa, _) = sci.split_once('e').unwrap();
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    // avoid the ambiguous "-0"
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// A parsed CSV: header fields plus data rows (comment lines starting with
/// `#` are skipped).
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    /// Numeric view of one column; fails on non-numeric cells.
    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>, String> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("no column named {name}"))?;
        self.rows
            .iter()
            .map(|r| {
                r.get(idx)
                    .ok_or_else(|| format!("short row in column {name}"))?
                    .parse::<f64>()
                    .map_err(|e| format!("bad number in column {name}: {e}"))
            })
            .collect()
    }
}

/// Parse CSV text produced by this tool (no quoting or escapes needed).
pub fn parse_csv(text: &str) -> Result<CsvTable, String> {
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header = lines
        .next()
        .ok_or("empty CSV")?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for line in lines {
        let row: Vec<String> = line.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(format!(
                "row has {} fields, header has {}",
                row.len(),
                header.len()
            ));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// Serialize a header and numeric-or-text rows with `\n` endings.
pub fn write_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
