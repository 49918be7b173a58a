//! Number and table formatting for CSV output.

use std::fmt::Write;

/// Significant digits used in CSV cells.
pub const CSV_DIGITS: usize = 12;

/// `%g`-style rendering with `digits` significant digits and trailing zeros
/// removed.
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= digits as i32 {
        format!(
            "{}e{}{:02}",
            trim(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_num(x: f64) -> String {
    sig(x, CSV_DIGITS)
}

/// Minimal CSV builder; cells are numbers or plain identifiers, so no
/// quoting is needed.
pub struct Table {
    out: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Self { out }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        for (k, c) in cells.iter().enumerate() {
            if k > 0 {
                self.out.push(',');
            }
            let _ = write!(self.out, "{}", c.as_ref());
        }
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}
