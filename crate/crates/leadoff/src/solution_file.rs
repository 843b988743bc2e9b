//! Solution text file.
//!
//! ```text
//! leadoff-solution 1
//! mode two-player
//! grid 0.0:20.0:0.1
//! kernel <sha256 of the kernel file>
//! method vi
//! iterations 95
//! converged true
//! residual 8.1e-11
//! decay-rate 0.76          (NA when unavailable)
//! error-bound 4.7e-9       (NA when unavailable)
//! halting 50 0.00041
//! history <n> <residual per iteration...>
//! manifest <sha256>
//! states 869
//! <index> <label> <value> <lead|NA> <pitcher decisions|NA>
//! ```
//! Pitcher decisions cover every grid lead of an agency state as runs of
//! `P` (pitch) and `K` (pickoff), e.g. `P118K83`.

use std::fmt::Write as _;
use std::path::Path;

use leadoff_core::solver::{PitcherPolicy, RunnerPolicy, Solution, SolveReport, ValueFunction};
use leadoff_core::state::{GameState, LeadGrid, NUM_STATES};
use leadoff_core::transitions::KernelMode;

use crate::error::{Error, Result};
use crate::text::{fmt_f64, format_grid, format_lead, opt_f64, parse_field, parse_grid, parse_opt_f64, state_label, Header};

pub const MAGIC: &str = "leadoff-solution";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub mode: KernelMode,
    pub grid: LeadGrid,
    pub kernel: String,
    pub method: String,
    pub halting: (usize, f64),
    pub manifest: String,
    pub solution: Solution,
}

/// Number of runner actions per state in a kernel over `grid`.
fn actions_in(s: usize, grid: &LeadGrid) -> usize {
    if GameState::from_index(s).is_some_and(GameState::has_agency) {
        grid.len()
    } else {
        1
    }
}

pub fn encode_decisions(rows: &[u8]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < rows.len() {
        let j = rows[i..].iter().position(|&r| r != rows[i]).map_or(rows.len(), |k| i + k);
        let _ = write!(out, "{}{}", if rows[i] == 0 { 'P' } else { 'K' }, j - i);
        i = j;
    }
    out
}

pub fn decode_decisions(s: &str) -> Option<Vec<u8>> {
    let mut out = Vec::new();
    let mut rest = s;
    while !rest.is_empty() {
        let row = match rest.as_bytes()[0] {
            b'P' => 0,
            b'K' => 1,
            _ => return None,
        };
        let digits = rest[1..].find(|c: char| !c.is_ascii_digit()).map_or(rest.len() - 1, |k| k);
        let n: usize = rest[1..1 + digits].parse().ok()?;
        out.extend(std::iter::repeat_n(row, n));
        rest = &rest[1 + digits..];
    }
    Some(out)
}

pub fn write_solution(f: &SolutionFile) -> String {
    let sol = &f.solution;
    let r = &sol.report;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "mode {}", f.mode.name());
    let _ = writeln!(out, "grid {}", format_grid(&f.grid));
    let _ = writeln!(out, "kernel {}", f.kernel);
    let _ = writeln!(out, "method {}", f.method);
    let _ = writeln!(out, "iterations {}", r.iterations);
    let _ = writeln!(out, "converged {}", r.converged);
    let _ = writeln!(out, "residual {}", fmt_f64(r.residual));
    let _ = writeln!(out, "decay-rate {}", opt_f64(r.decay_rate));
    let _ = writeln!(out, "error-bound {}", opt_f64(r.error_bound));
    let _ = writeln!(out, "halting {} {}", f.halting.0, fmt_f64(f.halting.1));
    let _ = write!(out, "history {}", r.residual_history.len());
    for x in &r.residual_history {
        let _ = write!(out, " {}", fmt_f64(*x));
    }
    out.push('\n');
    let _ = writeln!(out, "manifest {}", f.manifest);
    let _ = writeln!(out, "states {NUM_STATES}");
    let mut action = 0;
    for s in 0..NUM_STATES {
        let st = GameState::from_index(s).expect("canonical index");
        let n = actions_in(s, &f.grid);
        let (lead, decisions) = if st.has_agency() {
            let rows = &sol.pitcher.0[action..action + n];
            (format_lead(&f.grid, f.grid.value(sol.runner.action(s))), encode_decisions(rows))
        } else {
            ("NA".to_string(), "NA".to_string())
        };
        let _ = writeln!(out, "{s} {} {} {lead} {decisions}", state_label(st), fmt_f64(sol.values.get(s)));
        action += n;
    }
    out
}

pub fn parse_solution(text: &str, path: &Path) -> Result<SolutionFile> {
    let mut lines = text.lines().enumerate();
    let mut h = Header { lines: lines.by_ref(), path };
    let (v, line) = h.expect(MAGIC)?;
    if v != [VERSION.to_string().as_str()] {
        return Err(Error::parse(path, Some(line), format!("unsupported solution version {v:?}")));
    }
    let (mode, line) = h.single("mode")?;
    let mode = KernelMode::from_name(mode).ok_or_else(|| Error::parse(path, Some(line), format!("unknown mode {mode}")))?;
    let grid = parse_grid(h.single("grid")?.0)?;
    let kernel = h.single("kernel")?.0.to_string();
    let method = h.single("method")?.0.to_string();
    let iterations = h.parsed("iterations")?;
    let converged = h.parsed("converged")?;
    let residual = h.parsed("residual")?;
    let (x, line) = h.single("decay-rate")?;
    let decay_rate = parse_opt_f64(path, line, "decay rate", x)?;
    let (x, line) = h.single("error-bound")?;
    let error_bound = parse_opt_f64(path, line, "error bound", x)?;
    let (hv, line) = h.expect("halting")?;
    let halting = match hv.as_slice() {
        [m, rho] => (parse_field(path, line, "horizon", m)?, parse_field(path, line, "rho", rho)?),
        _ => return Err(Error::parse(path, Some(line), "halting takes m and rho")),
    };
    let (hist, line) = h.expect("history")?;
    let n: usize = parse_field(path, line, "history length", hist.first().copied().unwrap_or(""))?;
    let residual_history: Vec<f64> =
        hist[1..].iter().map(|x| parse_field(path, line, "residual", x)).collect::<Result<_>>()?;
    if residual_history.len() != n {
        return Err(Error::parse(path, Some(line), "history length does not match its entries"));
    }
    let manifest = h.single("manifest")?.0.to_string();
    let states: usize = h.parsed("states")?;
    if states != NUM_STATES {
        return Err(Error::parse(path, None, format!("expected {NUM_STATES} states, found {states}")));
    }

    let mut values = Vec::with_capacity(NUM_STATES);
    let mut runner = Vec::with_capacity(NUM_STATES);
    let mut pitcher = Vec::new();
    for (i, line) in lines {
        let ln = Some(i as u64 + 1);
        let s = values.len();
        if s == NUM_STATES {
            return Err(Error::parse(path, ln, "more state lines than states"));
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let [idx, label, value, lead, decisions] = f.as_slice() else {
            return Err(Error::parse(path, ln, "state lines have five fields"));
        };
        let st = GameState::from_index(s).expect("canonical index");
        if *idx != s.to_string() || *label != state_label(st) {
            return Err(Error::parse(path, ln, format!("expected state {s} {}", state_label(st))));
        }
        values.push(parse_field(path, i as u64 + 1, "value", value)?);
        if st.has_agency() {
            let lead: f64 = parse_field(path, i as u64 + 1, "lead", lead)?;
            runner.push(grid.nearest_index(lead));
            let rows = decode_decisions(decisions)
                .filter(|r| r.len() == grid.len())
                .ok_or_else(|| Error::parse(path, ln, format!("bad pitcher decisions {decisions:?}")))?;
            pitcher.extend(rows);
        } else {
            if (*lead, *decisions) != ("NA", "NA") {
                return Err(Error::parse(path, ln, "a state without a runner alone on first takes NA NA"));
            }
            runner.push(0);
            pitcher.push(0);
        }
    }
    if values.len() != NUM_STATES {
        return Err(Error::parse(path, None, format!("found {} of {NUM_STATES} states", values.len())));
    }
    let report = SolveReport {
        iterations,
        converged,
        residual,
        residual_history,
        decay_rate,
        error_bound,
        wall_time_secs: None,
    };
    Ok(SolutionFile {
        mode,
        grid,
        kernel,
        method,
        halting,
        manifest,
        solution: Solution {
            values: ValueFunction(values),
            runner: RunnerPolicy(runner),
            pitcher: PitcherPolicy(pitcher),
            report,
        },
    })
}

pub fn load_solution(path: &Path) -> Result<SolutionFile> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_solution(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn decisions_round_trip(rows in proptest::collection::vec(0u8..2, 0..300)) {
            prop_assert_eq!(decode_decisions(&encode_decisions(&rows)), Some(rows));
        }
    }

    #[test]
    fn decision_runs() {
        assert_eq!(encode_decisions(&[0, 0, 0, 1, 1]), "P3K2");
        assert_eq!(decode_decisions("P3K2"), Some(vec![0, 0, 0, 1, 1]));
        assert_eq!(decode_decisions("X3"), None);
        assert_eq!(decode_decisions("P"), None);
    }

    #[test]
    fn round_trip() {
        let grid = LeadGrid::new(5.0, 15.0, 5.0).unwrap();
        let agency = (0..NUM_STATES).filter(|&s| actions_in(s, &grid) == 3).count();
        let n_actions = NUM_STATES + agency * 2;
        let values: Vec<f64> = (0..NUM_STATES).map(|s| if s + 1 == NUM_STATES { 0.0 } else { 1.0 / (s as f64 + 3.0) }).collect();
        let runner: Vec<usize> = (0..NUM_STATES).map(|s| if actions_in(s, &grid) == 3 { s % 3 } else { 0 }).collect();
        let mut pitcher = Vec::new();
        for s in 0..NUM_STATES {
            for a in 0..actions_in(s, &grid) {
                pitcher.push(u8::from(actions_in(s, &grid) == 3 && (a + s) % 2 == 1));
            }
        }
        assert_eq!(pitcher.len(), n_actions);
        let f = SolutionFile {
            mode: KernelMode::TwoPlayer,
            grid,
            kernel: "k".into(),
            method: "vi".into(),
            halting: (50, 1e-3),
            manifest: "m".into(),
            solution: Solution {
                values: ValueFunction(values),
                runner: RunnerPolicy(runner),
                pitcher: PitcherPolicy(pitcher),
                report: SolveReport {
                    iterations: 3,
                    converged: true,
                    residual: 1e-11,
                    residual_history: vec![1.0, 0.1, 1e-11],
                    decay_rate: None,
                    error_bound: Some(2e-9),
                    wall_time_secs: None,
                },
            },
        };
        let text = write_solution(&f);
        assert_eq!(parse_solution(&text, Path::new("s.txt")).unwrap(), f);
        let cut: String = text.lines().take(30).map(|l| format!("{l}\n")).collect();
        assert!(parse_solution(&cut, Path::new("s.txt")).is_err());
    }
}
