//! Plain CSV documents with `#` metadata lines.

use std::fmt::Write as _;
use std::io::{self, Write};

/// Significant digits used for every numeric cell.
pub const SIG_DIGITS: usize = 9;

/// Formats `x` like C's `%.9g`, independent of locale.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIG_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
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

/// Metadata lines, a column header and rows of preformatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvDoc {
    meta: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            meta: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Adds a `# key: value` line.
    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.meta.push(format!("{key}: {value}"));
        self
    }

    /// Adds every line of `block` as a metadata line.
    pub fn meta_block(&mut self, block: &str) -> &mut Self {
        self.meta.extend(
            block
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string),
        );
        self
    }

    /// Appends a row; panics if its width differs from the header.
    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(
            cells.len(),
            self.header.len(),
            "row width must match header"
        );
        self.rows.push(cells);
    }

    pub fn push_numeric(&mut self, values: &[f64]) {
        self.push_row(values.iter().map(|&v| fmt_num(v)).collect());
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn meta_lines(&self) -> &[String] {
        &self.meta
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_string().as_bytes())?;
        w.flush()
    }
}

impl std::fmt::Display for CsvDoc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut out = String::new();
        for m in &self.meta {
            writeln!(out, "# {m}")?;
        }
        writeln!(out, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(out, "{}", r.join(","))?;
        }
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.11), "0.11");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_num(257.46494), "257.46494");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(123456789.0), "123456789");
        assert_eq!(fmt_num(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_num(1e-6), "1e-06");
        assert_eq!(fmt_num(0.0001234), "0.0001234");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    #[test]
    fn rounding_carries_into_exponent() {
        assert_eq!(fmt_num(9.9999999999), "10");
        assert_eq!(fmt_num(0.99999999999), "1");
    }

    #[test]
    fn layout() {
        let mut d = CsvDoc::new(["a", "b"]);
        d.meta("seed", 7);
        d.push_numeric(&[1.0, 0.5]);
        assert_eq!(d.to_string(), "# seed: 7\na,b\n1,0.5\n");
    }

    #[test]
    #[should_panic]
    fn width_checked() {
        CsvDoc::new(["a"]).push_numeric(&[1.0, 2.0]);
    }
}
