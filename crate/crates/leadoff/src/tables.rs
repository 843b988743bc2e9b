//! Lead tables and the disengagement report, as aligned text or CSV.

use std::fmt::Write as _;

use leadoff_core::sim::TwoFootReport;
use leadoff_core::solver::RunnerPolicy;
use leadoff_core::state::{BaseState, Count, LeadGrid, PlayState};

use crate::error::Result;
use crate::text::format_lead;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
}

/// Optimal leads with one row per count or per outs and one column per
/// prior-disengagement count.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadTable {
    pub title: String,
    pub axis: &'static str,
    pub rows: Vec<(String, [f64; 3])>,
}

fn leads(grid: &LeadGrid, runner: &RunnerPolicy, count: Count, outs: u8) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (d, lead) in out.iter_mut().enumerate() {
        let s = PlayState::new(BaseState::FIRST_ONLY, count, d as u8, outs)?;
        *lead = grid.value(runner.action(s.index()));
    }
    Ok(out)
}

pub fn by_count(grid: &LeadGrid, runner: &RunnerPolicy, outs: u8, title: &str) -> Result<LeadTable> {
    let rows = Count::all().map(|c| Ok((c.to_string(), leads(grid, runner, c, outs)?))).collect::<Result<_>>()?;
    Ok(LeadTable { title: format!("{title}, {outs} out(s)"), axis: "count", rows })
}

pub fn by_outs(grid: &LeadGrid, runner: &RunnerPolicy, count: Count, title: &str) -> Result<LeadTable> {
    let rows = (0..3).map(|o| Ok((o.to_string(), leads(grid, runner, count, o)?))).collect::<Result<_>>()?;
    Ok(LeadTable { title: format!("{title}, count {count}"), axis: "outs", rows })
}

impl LeadTable {
    pub fn render(&self, grid: &LeadGrid, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Text => {
                let _ = writeln!(out, "# {}", self.title);
                let _ = writeln!(out, "{:<6}{:>7}{:>7}{:>7}", self.axis, "d=0", "d=1", "d=2");
                for (label, l) in &self.rows {
                    let f = |x: f64| format_lead(grid, x);
                    let _ = writeln!(out, "{label:<6}{:>7}{:>7}{:>7}", f(l[0]), f(l[1]), f(l[2]));
                }
            }
            Format::Csv => {
                let _ = writeln!(out, "{},d0,d1,d2", self.axis);
                for (label, l) in &self.rows {
                    let f = |x: f64| format_lead(grid, x);
                    let _ = writeln!(out, "{label},{},{},{}", f(l[0]), f(l[1]), f(l[2]));
                }
            }
        }
        out
    }
}

pub fn render_two_foot(report: &TwoFootReport, grid: &LeadGrid, format: Format) -> String {
    let f = |x: f64| format_lead(grid, x);
    let inc = |x: f64| format!("{x:+.1}");
    let mut out = String::new();
    match format {
        Format::Text => {
            let _ = writeln!(out, "{:<6}{:>5}{:>7}{:>7}{:>7}{:>7}{:>7}", "count", "outs", "d=0", "d=1", "d=2", "0->1", "1->2");
            for c in &report.cells {
                let [a, b] = c.increments();
                let _ = writeln!(
                    out,
                    "{:<6}{:>5}{:>7}{:>7}{:>7}{:>7}{:>7}",
                    c.count.to_string(),
                    c.outs,
                    f(c.leads[0]),
                    f(c.leads[1]),
                    f(c.leads[2]),
                    inc(a),
                    inc(b)
                );
            }
            let [a, b] = report.mean_increments;
            let _ = writeln!(out, "mean increment 0->1 {a:.2} ft, 1->2 {b:.2} ft, overall {:.2} ft", report.mean_increment());
            let _ = writeln!(out, "non-decreasing in every cell: {}", if report.non_decreasing() { "yes" } else { "no" });
        }
        Format::Csv => {
            let _ = writeln!(out, "count,outs,d0,d1,d2,inc01,inc12");
            for c in &report.cells {
                let [a, b] = c.increments();
                let _ = writeln!(out, "{},{},{},{},{},{a:.1},{b:.1}", c.count, c.outs, f(c.leads[0]), f(c.leads[1]), f(c.leads[2]));
            }
        }
    }
    out
}
