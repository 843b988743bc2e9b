//! Small pieces shared by the text formats.

use std::path::Path;

use leadoff_core::state::{enumerate_states, GameState, LeadGrid};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// `min:max:step`, e.g. `0.0:20.0:0.1`.
pub fn parse_grid(s: &str) -> Result<LeadGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[min, max, step]) => Ok(LeadGrid::new(min, max, step)?),
        _ => Err(Error::Usage(format!("lead grid {s:?} is not of the form min:max:step"))),
    }
}

pub fn format_grid(g: &LeadGrid) -> String {
    let d = lead_decimals(g);
    format!("{:.d$}:{:.d$}:{:.d$}", g.min(), g.max(), g.step())
}

/// Decimal places that resolve every point of the grid.
pub fn lead_decimals(g: &LeadGrid) -> usize {
    let places = |x: f64| x.to_string().split_once('.').map_or(0, |(_, frac)| frac.len());
    places(g.step()).max(places(g.min())).max(1)
}

/// A lead printed at the grid's resolution.
pub fn format_lead(g: &LeadGrid, lead: f64) -> String {
    format!("{:.*}", lead_decimals(g), lead)
}

/// State name without spaces, e.g. `b100/c0-0/d0/o0`, `pen1`, `end`.
pub fn state_label(s: GameState) -> String {
    s.to_string().replace(' ', "/")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    Ok(sha256_hex(&bytes))
}

/// Hash of the canonical state order, one label per line.
pub fn state_order_hash() -> String {
    let names: Vec<String> = enumerate_states().into_iter().map(state_label).collect();
    sha256_hex(names.join("\n").as_bytes())
}

/// `key value...` header lines, read in a fixed order.
pub(crate) struct Header<'a, I: Iterator<Item = (usize, &'a str)>> {
    pub lines: I,
    pub path: &'a Path,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Header<'a, I> {
    /// The next line, which must start with `key`; returns its fields and line number.
    pub fn expect(&mut self, key: &str) -> Result<(Vec<&'a str>, u64)> {
        let (i, line) = self
            .lines
            .next()
            .ok_or_else(|| Error::parse(self.path, None, format!("unexpected end of file, expected {key}")))?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some(key) {
            return Err(Error::parse(self.path, Some(i as u64 + 1), format!("expected a {key} line")));
        }
        Ok((fields.collect(), i as u64 + 1))
    }

    pub fn single(&mut self, key: &str) -> Result<(&'a str, u64)> {
        let (f, line) = self.expect(key)?;
        match f.as_slice() {
            [x] => Ok((x, line)),
            _ => Err(Error::parse(self.path, Some(line), format!("{key} takes one value"))),
        }
    }

    pub fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (x, line) = self.single(key)?;
        parse_field(self.path, line, key, x)
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, what: &str, x: &str) -> Result<T> {
    x.parse().map_err(|_| Error::parse(path, Some(line), format!("bad {what} {x:?}")))
}

/// Shortest decimal that reads back to `x`, in exponent form when tiny or huge.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// `NA` or a number.
pub(crate) fn opt_f64(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), fmt_f64)
}

pub(crate) fn parse_opt_f64(path: &Path, line: u64, what: &str, x: &str) -> Result<Option<f64>> {
    if x == "NA" {
        Ok(None)
    } else {
        parse_field(path, line, what, x).map(Some)
    }
}
