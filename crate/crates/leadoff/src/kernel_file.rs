//! Kernel text file.
//!
//! ```text
//! leadoff-kernel 1
//! mode two-player
//! grid 0:20:0.1
//! state-order <sha256 of the canonical state labels>
//! assembly <rows at fallback levels 0..3> <redirections> <dropped>
//! halting <m> <rho>
//! manifest <sha256>
//! rows <count>
//! <state> <runner action> <pitcher row> <to>:<prob> <to>:<prob> ...
//! ```
//! Rows are listed in canonical order with successors ascending. Rewards are
//! not stored; they follow from the state pair. Floats use the shortest
//! decimal that reads back to the same value.

use std::fmt::Write as _;
use std::path::Path;

use leadoff_core::game::{Entry, GameBuilder};
use leadoff_core::state::{reward, GameState, NUM_STATES, TERMINAL_INDEX};
use leadoff_core::transitions::{AssemblyStats, KernelMode, TransitionKernel};

use crate::error::{Error, Result};
use crate::text::{fmt_f64, format_grid, parse_field, parse_grid, state_order_hash, Header};

pub const MAGIC: &str = "leadoff-kernel";
pub const VERSION: u32 = 1;

/// A kernel with the metadata stored alongside it.
#[derive(Debug, Clone)]
pub struct KernelFile {
    pub kernel: TransitionKernel,
    /// Halting horizon and coefficient recorded when the file was written.
    pub halting: (usize, f64),
    pub manifest: String,
}

pub fn write_kernel(k: &TransitionKernel, halting: (usize, f64), manifest: &str) -> String {
    let g = &k.game;
    let st = &k.stats;
    let mut out = String::with_capacity(g.num_entries() * 24);
    let l = st.rows_by_level;
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "mode {}", k.mode.name());
    let _ = writeln!(out, "grid {}", format_grid(&k.grid));
    let _ = writeln!(out, "state-order {}", state_order_hash());
    let _ = writeln!(out, "assembly {} {} {} {} {} {}", l[0], l[1], l[2], l[3], st.redirections, st.dropped);
    let _ = writeln!(out, "halting {} {}", halting.0, fmt_f64(halting.1));
    let _ = writeln!(out, "manifest {manifest}");
    let _ = writeln!(out, "rows {}", g.num_rows());
    for s in 0..g.num_states() {
        for (ai, a) in g.runner_actions(s).enumerate() {
            for (pi, row) in g.pitcher_rows(a).enumerate() {
                let _ = write!(out, "{s} {ai} {pi}");
                let (to, prob, _) = g.row(row);
                for (t, p) in to.iter().zip(prob) {
                    let _ = write!(out, " {t}:{}", fmt_f64(*p));
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn parse_kernel(text: &str, path: &Path) -> Result<KernelFile> {
    let mut lines = text.lines().enumerate();
    let mut h = Header { lines: lines.by_ref(), path };
    let (magic, line) = h.expect(MAGIC)?;
    if magic != [VERSION.to_string().as_str()] {
        return Err(Error::parse(path, Some(line), format!("unsupported kernel version {magic:?}")));
    }
    let (mode, line) = h.single("mode")?;
    let mode = KernelMode::from_name(mode).ok_or_else(|| Error::parse(path, Some(line), format!("unknown mode {mode}")))?;
    let grid = parse_grid(h.single("grid")?.0)?;
    let (order, line) = h.single("state-order")?;
    if order != state_order_hash() {
        return Err(Error::parse(path, Some(line), "state order differs from this build's canonical order"));
    }
    let (a, line) = h.expect("assembly")?;
    let nums: Vec<u64> = a.iter().map(|x| parse_field(path, line, "assembly counter", x)).collect::<Result<_>>()?;
    let stats = match nums.as_slice() {
        &[l0, l1, l2, l3, redirections, dropped] => AssemblyStats {
            rows_by_level: [l0, l1, l2, l3].map(|x| x as u32),
            redirections,
            dropped,
        },
        _ => return Err(Error::parse(path, Some(line), "assembly takes six counters")),
    };
    let (hv, line) = h.expect("halting")?;
    let halting = match hv.as_slice() {
        [m, rho] => (parse_field(path, line, "horizon", m)?, parse_field(path, line, "rho", rho)?),
        _ => return Err(Error::parse(path, Some(line), "halting takes m and rho")),
    };
    let manifest = h.single("manifest")?.0.to_string();
    let n_rows: usize = h.parsed("rows")?;

    let bad_kernel = |line: usize, msg: String| Error::Core(leadoff_core::Error::Kernel(format!("{}:{}: {msg}", path.display(), line + 1)));
    let mut builder = GameBuilder::new(NUM_STATES, TERMINAL_INDEX);
    let mut block: Vec<Vec<Vec<Entry>>> = Vec::new();
    let mut state = 0usize;
    let mut seen = 0usize;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split_whitespace();
        let mut idx = |what: &str| -> Result<usize> {
            let x = f.next().ok_or_else(|| Error::parse(path, Some(i as u64 + 1), format!("missing {what}")))?;
            parse_field(path, i as u64 + 1, what, x)
        };
        let (s, a, p) = (idx("state")?, idx("runner action")?, idx("pitcher row")?);
        while s > state {
            builder.push_state(std::mem::take(&mut block)).map_err(|e| bad_kernel(i, e.to_string()))?;
            state += 1;
        }
        let expected = s == state && if p == 0 { a == block.len() } else { a + 1 == block.len() && p == block[a].len() };
        if !expected {
            return Err(Error::parse(path, Some(i as u64 + 1), format!("row {s} {a} {p} is out of order")));
        }
        let from = GameState::from_index(s).ok_or_else(|| bad_kernel(i, format!("no state {s}")))?;
        let mut row = Vec::new();
        for e in f {
            let (t, prob) = e
                .split_once(':')
                .ok_or_else(|| Error::parse(path, Some(i as u64 + 1), format!("entry {e:?} is not to:prob")))?;
            let t: usize = parse_field(path, i as u64 + 1, "successor", t)?;
            let prob: f64 = parse_field(path, i as u64 + 1, "probability", prob)?;
            let to = GameState::from_index(t).ok_or_else(|| bad_kernel(i, format!("no state {t}")))?;
            let r = match (from, to) {
                (GameState::Terminal, GameState::Terminal) => 0,
                _ => reward(from, to).map_err(|e| bad_kernel(i, e.to_string()))?,
            };
            row.push(Entry::new(t, prob, r as f64));
        }
        if p == 0 {
            block.push(vec![row]);
        } else {
            block[a].push(row);
        }
        seen += 1;
    }
    if seen != n_rows {
        return Err(Error::parse(path, None, format!("header promises {n_rows} rows, found {seen}")));
    }
    builder.push_state(block).map_err(|e| bad_kernel(text.lines().count().saturating_sub(1), e.to_string()))?;
    let game = builder.build()?;
    let kernel = TransitionKernel::new(game, mode, grid, stats)?;
    Ok(KernelFile { kernel, halting, manifest })
}

pub fn load_kernel(path: &Path) -> Result<KernelFile> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_kernel(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use leadoff_core::models::{CovariateConvention, CovariateMeans, LogisticModel, ModelKind, ModelSet};
    use leadoff_core::sim::{GroundTruth, PitchModel};
    use leadoff_core::state::LeadGrid;
    use leadoff_core::transitions::{assemble_kernel, AssemblyOptions, ConditionalRows};

    fn small_kernel(mode: KernelMode) -> TransitionKernel {
        let ms = ModelSet::new(
            LogisticModel::zeros(ModelKind::PickoffAttempt),
            LogisticModel::zeros(ModelKind::PickoffSuccess),
            LogisticModel::zeros(ModelKind::StealAttempt),
            LogisticModel::zeros(ModelKind::StealSuccess),
            CovariateMeans { sprint_speed: 27.0, arm_strength: 82.0 },
            CovariateConvention::Centered,
        )
        .unwrap();
        let rows = ConditionalRows::collect(&GroundTruth::new(PitchModel::default()).unwrap()).unwrap();
        let opts = AssemblyOptions { grid: LeadGrid::new(5.0, 15.0, 5.0).unwrap(), ..AssemblyOptions::new(mode) };
        assemble_kernel(&rows, &ms, &opts).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        for mode in [KernelMode::TwoPlayer, KernelMode::OnePlayer] {
            let k = small_kernel(mode);
            let text = write_kernel(&k, (50, 0.25), "abc");
            let back = parse_kernel(&text, Path::new("k.txt")).unwrap();
            assert_eq!(back.kernel, k);
            assert_eq!(back.halting, (50, 0.25));
            assert_eq!(write_kernel(&back.kernel, back.halting, &back.manifest), text);
        }
    }

    #[test]
    fn tampered_rows_rejected() {
        let text = write_kernel(&small_kernel(KernelMode::TwoPlayer), (50, 0.25), "abc");
        let bumped = text.replacen(":1\n", ":0.9\n", 1);
        assert_ne!(bumped, text);
        let err = parse_kernel(&bumped, Path::new("k.txt")).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::exit::INVALID_KERNEL, "{err}");
        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(parse_kernel(&truncated, Path::new("k.txt")).is_err());
        let versioned = text.replacen("leadoff-kernel 1", "leadoff-kernel 9", 1);
        assert!(matches!(parse_kernel(&versioned, Path::new("k.txt")), Err(Error::Parse { line: Some(1), .. })));
    }
}
