//! Pooled transition frequencies and kernel assembly.
//!
//! Given the runner outcome, the next state is assumed not to depend on the
//! lead or on who threw what, so the kernel factors as
//! `p(s' | s, a) = sum_r P(r | s, a) C(s, r, s')`. The outcome factor comes from
//! the logistic models; the conditional rows `C` come from any
//! [`ConditionalTransitions`] source, normally a [`PooledFrequencyTable`].
//!
//! Disengagement bookkeeping for pooled rows follows fixed rules rather than
//! the literal `d' = d + e`, because pooling over `d` mixes resets from
//! different starting counts:
//!
//! * a failed pickoff at `d = 2` advances every runner and resets `d`
//!   (never pooled);
//! * any pickoff outcome sets `d' = min(d + 1, 2)`;
//! * a stolen base, a new plate appearance, or a recorded decrease resets
//!   `d' = 0`;
//! * otherwise `d' = d + e`, clamped to `0..=2`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{Entry, GameBuilder, StateBlock, StochasticGame};
use crate::models::{Matchup, ModelSet, OutcomeDistribution, PlayContext};
use crate::par::map_indices;
use crate::records::{PlayRecord, PostState};
use crate::state::{
    reward, runners_on_base, third_disengagement, BaseState, Count, GameState, LeadGrid,
    PitcherAction, PlayState, ReducedState, RunnerOutcome, NUM_STATES, TERMINAL_INDEX,
};

/// Next state with the disengagement count dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NextReduced {
    Play(ReducedState),
    /// The inning ended with this many runs on the play.
    End(u8),
}

/// Observed `(next reduced state, disengagement delta)` counts for one cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyCell {
    total: u64,
    counts: BTreeMap<(NextReduced, i8), u64>,
}

impl FrequencyCell {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> impl Iterator<Item = (NextReduced, i8, u64)> + '_ {
        self.counts.iter().map(|(&(n, e), &c)| (n, e, c))
    }

    /// Empirical conditional distribution: each count over the cell total.
    pub fn frequencies(&self) -> Vec<(NextReduced, i8, f64)> {
        let t = self.total as f64;
        self.counts().map(|(n, e, c)| (n, e, c as f64 / t)).collect()
    }

    fn add(&mut self, next: NextReduced, e: i8) {
        self.total += 1;
        *self.counts.entry((next, e)).or_insert(0) += 1;
    }
}

/// Counts keyed by `(reduced state, runner outcome)` for plays with a runner
/// alone on first, and by full state for every other play.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PooledFrequencyTable {
    agency: BTreeMap<(ReducedState, RunnerOutcome), FrequencyCell>,
    no_agency: BTreeMap<PlayState, FrequencyCell>,
    third_disengagements: u64,
}

impl PooledFrequencyTable {
    pub fn agency_cell(&self, s: ReducedState, r: RunnerOutcome) -> Option<&FrequencyCell> {
        self.agency.get(&(s, r))
    }

    pub fn no_agency_cell(&self, s: PlayState) -> Option<&FrequencyCell> {
        self.no_agency.get(&s)
    }

    pub fn agency_cells(&self) -> impl Iterator<Item = (ReducedState, RunnerOutcome, &FrequencyCell)> {
        self.agency.iter().map(|(&(s, r), c)| (s, r, c))
    }

    pub fn no_agency_cells(&self) -> impl Iterator<Item = (PlayState, &FrequencyCell)> {
        self.no_agency.iter().map(|(&s, c)| (s, c))
    }

    /// Failed pickoffs at two prior disengagements; excluded from pooling.
    pub fn third_disengagements(&self) -> u64 {
        self.third_disengagements
    }

    pub fn num_plays(&self) -> u64 {
        self.agency.values().chain(self.no_agency.values()).map(|c| c.total).sum::<u64>()
            + self.third_disengagements
    }
}

impl PooledFrequencyTable {
    /// Count one validated play.
    pub fn add_record(&mut self, p: &PlayRecord) -> Result<()> {
        let (next, e) = match p.post {
            PostState::Play(t) => (
                NextReduced::Play(t.reduced()),
                t.disengagements() as i8 - p.pre.disengagements() as i8,
            ),
            PostState::InningEnd { runs } => (NextReduced::End(runs), 0),
        };
        match (p.pre.has_agency(), p.runner_outcome) {
            (true, Some(RunnerOutcome::PickoffFail)) if p.pre.disengagements() == 2 => {
                self.third_disengagements += 1;
            }
            (true, Some(r)) => self.agency.entry((p.pre.reduced(), r)).or_default().add(next, e),
            (true, None) => {
                return Err(Error::Record(format!("play from {} has no runner outcome", p.pre)))
            }
            (false, _) => self.no_agency.entry(p.pre).or_default().add(next, e),
        }
        Ok(())
    }
}

/// Count transitions into a [`PooledFrequencyTable`]. Records must already be
/// validated.
pub fn estimate_pooled_frequencies(plays: &[PlayRecord]) -> Result<PooledFrequencyTable> {
    if plays.is_empty() {
        return Err(Error::Input("no plays to estimate from".into()));
    }
    let mut table = PooledFrequencyTable::default();
    for p in plays {
        table.add_record(p)?;
    }
    Ok(table)
}

/// Next disengagement count for a pooled transition; see the module docs.
/// `outcome` is `None` for plays without a runner alone on first.
pub fn reconstruct_disengagements(
    d: u8,
    outcome: Option<RunnerOutcome>,
    next: ReducedState,
    e: i8,
) -> u8 {
    match outcome {
        Some(r) if r.is_pickoff() => (d + 1).min(2),
        Some(RunnerOutcome::StealSuccess) => 0,
        _ if next.count == Count::FRESH => 0,
        _ if e < 0 => 0,
        _ => (d as i8 + e).clamp(0, 2) as u8,
    }
}

/// A conditional successor distribution and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRow {
    /// `(successor, probability)`, successors distinct.
    pub entries: Vec<(GameState, f64)>,
    /// 0 for an exact cell, higher for coarser fallbacks.
    pub fallback_level: u8,
    /// Pooled entries whose literal `d + e` disagreed with the rules.
    pub redirections: u32,
    /// Pooled entries that could not be mapped onto this state.
    pub dropped: u32,
}

impl ConditionalRow {
    pub fn exact(entries: Vec<(GameState, f64)>) -> Self {
        ConditionalRow { entries, fallback_level: 0, redirections: 0, dropped: 0 }
    }
}

/// Source of `C(s, r, .)`, the next-state distribution given the runner outcome.
pub trait ConditionalTransitions {
    /// Successors of an agency state `s` given runner outcome `r`.
    fn agency_row(&self, s: PlayState, r: RunnerOutcome) -> Result<ConditionalRow>;
    /// Successors of a state without agency.
    fn no_agency_row(&self, s: PlayState) -> Result<ConditionalRow>;
}

/// Runs on a source transition, with a new plate appearance inferred from a
/// fresh count after a pitch.
fn source_runs(src: ReducedState, pitch: bool, t: ReducedState) -> i32 {
    let before = (runners_on_base(src.bases) + src.outs) as i32;
    let after = (runners_on_base(t.bases) + t.outs) as i32;
    before - after + (pitch && t.count == Count::FRESH) as i32
}

/// Re-express a transition observed from `src` as one from `target`
/// (same bases), shifting count and outs by the observed change.
fn translate(src: ReducedState, pitch: bool, next: NextReduced, target: ReducedState) -> Option<NextReduced> {
    if src == target {
        return Some(next);
    }
    match next {
        NextReduced::End(k) => (target.outs >= src.outs).then_some(NextReduced::End(k)),
        NextReduced::Play(t) => {
            let outs = target.outs as i32 + t.outs as i32 - src.outs as i32;
            if outs >= 3 {
                return (source_runs(src, pitch, t) == 0).then_some(NextReduced::End(0));
            }
            let count = if pitch && t.count == Count::FRESH {
                Count::FRESH
            } else {
                target.count.shifted(
                    t.count.balls() as i8 - src.count.balls() as i8,
                    t.count.strikes() as i8 - src.count.strikes() as i8,
                )?
            };
            Some(NextReduced::Play(ReducedState { bases: t.bases, count, outs: outs as u8 }))
        }
    }
}

/// Accumulates pooled counts into successor weights for one target state.
struct Pool {
    target: PlayState,
    outcome: Option<RunnerOutcome>,
    weights: BTreeMap<GameState, f64>,
    redirections: u32,
    dropped: u32,
    strict: bool,
}

impl Pool {
    fn new(target: PlayState, outcome: Option<RunnerOutcome>, strict: bool) -> Self {
        Pool { target, outcome, weights: BTreeMap::new(), redirections: 0, dropped: 0, strict }
    }

    fn pitch(&self) -> bool {
        self.outcome.is_none_or(RunnerOutcome::is_pitch)
    }

    fn add(&mut self, src: ReducedState, next: NextReduced, e: i8, weight: f64) -> Result<()> {
        let Some(next) = translate(src, self.pitch(), next, self.target.reduced()) else {
            self.dropped += 1;
            return Ok(());
        };
        let succ = match next {
            NextReduced::End(k) => GameState::penultimate(k)?,
            NextReduced::Play(t) => {
                let d = self.target.disengagements();
                let d2 = reconstruct_disengagements(d, self.outcome, t, e);
                if d as i8 + e != d2 as i8 {
                    self.redirections += 1;
                }
                GameState::Play(t.with_disengagements(d2)?)
            }
        };
        if let Err(err) = reward(GameState::Play(self.target), succ) {
            if self.strict {
                return Err(Error::Assembly {
                    cell: cell_name(self.target, self.outcome),
                    reason: err.to_string(),
                });
            }
            self.dropped += 1;
            return Ok(());
        }
        *self.weights.entry(succ).or_insert(0.0) += weight;
        Ok(())
    }

    fn add_cell(&mut self, src: ReducedState, cell: &FrequencyCell) -> Result<()> {
        for (n, e, c) in cell.counts() {
            self.add(src, n, e, c as f64)?;
        }
        Ok(())
    }

    fn finish(self, level: u8) -> Option<ConditionalRow> {
        let total: f64 = self.weights.values().sum();
        if total <= 0.0 {
            return None;
        }
        if level > 0 {
            log::debug!("{} resolved at fallback level {level}", cell_name(self.target, self.outcome));
        }
        Some(ConditionalRow {
            entries: self.weights.into_iter().map(|(s, w)| (s, w / total)).collect(),
            fallback_level: level,
            redirections: self.redirections,
            dropped: self.dropped,
        })
    }
}

fn cell_name(s: PlayState, r: Option<RunnerOutcome>) -> alloc::string::String {
    match r {
        Some(r) => format!("({}, {})", s.reduced(), r.code()),
        None => format!("({s}, no agency)"),
    }
}

/// Deterministic base-running consequence of a pickoff or steal outcome.
fn synthesized(s: ReducedState, r: RunnerOutcome) -> Option<NextReduced> {
    let out = |bases| {
        if s.outs == 2 {
            NextReduced::End(0)
        } else {
            NextReduced::Play(ReducedState { bases, count: s.count, outs: s.outs + 1 })
        }
    };
    match r {
        RunnerOutcome::PickoffSuccess | RunnerOutcome::StealFail => Some(out(BaseState::EMPTY)),
        RunnerOutcome::PickoffFail => Some(NextReduced::Play(s)),
        RunnerOutcome::StealSuccess => Some(NextReduced::Play(ReducedState {
            bases: BaseState::new(false, true, false),
            ..s
        })),
        RunnerOutcome::NoAction => None,
    }
}

impl ConditionalTransitions for PooledFrequencyTable {
    /// Fallbacks for an empty cell: (1) same bases, outs and outcome pooled
    /// over counts; (2) pooled over counts and outs; (3) for pickoff and
    /// steal outcomes, the deterministic base-running consequence.
    fn agency_row(&self, s: PlayState, r: RunnerOutcome) -> Result<ConditionalRow> {
        if r == RunnerOutcome::PickoffFail && s.disengagements() == 2 {
            return Ok(ConditionalRow::exact(alloc::vec![(third_disengagement(s), 1.0)]));
        }
        let red = s.reduced();
        if let Some(cell) = self.agency.get(&(red, r)).filter(|c| c.total > 0) {
            let mut pool = Pool::new(s, Some(r), true);
            pool.add_cell(red, cell)?;
            if let Some(row) = pool.finish(0) {
                return Ok(row);
            }
        }
        let mut by_count = Pool::new(s, Some(r), false);
        let mut by_outs = Pool::new(s, Some(r), false);
        for (&(src, r2), cell) in &self.agency {
            if r2 != r || src.bases != red.bases {
                continue;
            }
            if src.outs == red.outs {
                by_count.add_cell(src, cell)?;
            }
            by_outs.add_cell(src, cell)?;
        }
        if let Some(row) = by_count.finish(1) {
            return Ok(row);
        }
        if let Some(row) = by_outs.finish(2) {
            return Ok(row);
        }
        if let Some(next) = synthesized(red, r) {
            let mut pool = Pool::new(s, Some(r), true);
            pool.add(red, next, 0, 1.0)?;
            if let Some(row) = pool.finish(3) {
                return Ok(row);
            }
        }
        Err(Error::Assembly {
            cell: cell_name(s, Some(r)),
            reason: "no observations and no fallback applies".into(),
        })
    }

    /// Fallbacks: same reduced state pooled over disengagements, then over
    /// counts, then over counts and outs.
    fn no_agency_row(&self, s: PlayState) -> Result<ConditionalRow> {
        let red = s.reduced();
        if let Some(cell) = self.no_agency.get(&s).filter(|c| c.total > 0) {
            let mut pool = Pool::new(s, None, true);
            pool.add_cell(red, cell)?;
            if let Some(row) = pool.finish(0) {
                return Ok(row);
            }
        }
        let mut by_d = Pool::new(s, None, false);
        let mut by_count = Pool::new(s, None, false);
        let mut by_outs = Pool::new(s, None, false);
        for (&src, cell) in &self.no_agency {
            if src.bases != red.bases {
                continue;
            }
            let sr = src.reduced();
            if sr == red {
                by_d.add_cell(sr, cell)?;
            }
            if sr.outs == red.outs {
                by_count.add_cell(sr, cell)?;
            }
            by_outs.add_cell(sr, cell)?;
        }
        for (level, pool) in [(1, by_d), (2, by_count), (3, by_outs)] {
            if let Some(row) = pool.finish(level) {
                return Ok(row);
            }
        }
        Err(Error::Assembly {
            cell: cell_name(s, None),
            reason: "no observations for these bases".into(),
        })
    }
}

/// Two-player kernels offer the pitcher a pickoff-or-pitch choice; one-player
/// kernels replace it with the modelled pickoff attempt probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    TwoPlayer,
    OnePlayer,
}

impl KernelMode {
    pub fn name(self) -> &'static str {
        match self {
            KernelMode::TwoPlayer => "two-player",
            KernelMode::OnePlayer => "one-player",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "two-player" => Some(KernelMode::TwoPlayer),
            "one-player" => Some(KernelMode::OnePlayer),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyOptions {
    pub mode: KernelMode,
    pub grid: LeadGrid,
    pub matchup: Matchup,
    /// One-player mode only: use this pickoff attempt probability everywhere
    /// instead of the model's.
    pub pickoff_override: Option<f64>,
}

impl AssemblyOptions {
    pub fn new(mode: KernelMode) -> Self {
        AssemblyOptions {
            mode,
            grid: LeadGrid::default(),
            matchup: Matchup::average(),
            pickoff_override: None,
        }
    }
}

/// Counters describing how the conditional rows were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssemblyStats {
    /// Number of conditional rows resolved at each fallback level.
    pub rows_by_level: [u32; 4],
    pub redirections: u64,
    pub dropped: u64,
}

/// Every conditional row the kernel needs, resolved once.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRows {
    agency: BTreeMap<(PlayState, RunnerOutcome), ConditionalRow>,
    no_agency: BTreeMap<PlayState, ConditionalRow>,
}

impl ConditionalRows {
    pub fn collect<C: ConditionalTransitions + ?Sized>(src: &C) -> Result<Self> {
        let mut agency = BTreeMap::new();
        let mut no_agency = BTreeMap::new();
        for s in (0..crate::state::NUM_PLAY_STATES).filter_map(PlayState::from_index) {
            if s.has_agency() {
                for r in RunnerOutcome::ALL {
                    agency.insert((s, r), src.agency_row(s, r)?);
                }
            } else {
                no_agency.insert(s, src.no_agency_row(s)?);
            }
        }
        Ok(ConditionalRows { agency, no_agency })
    }

    pub fn agency(&self, s: PlayState, r: RunnerOutcome) -> &ConditionalRow {
        &self.agency[&(s, r)]
    }

    pub fn no_agency(&self, s: PlayState) -> &ConditionalRow {
        &self.no_agency[&s]
    }

    pub fn stats(&self) -> AssemblyStats {
        let mut st = AssemblyStats::default();
        for row in self.agency.values().chain(self.no_agency.values()) {
            st.rows_by_level[row.fallback_level.min(3) as usize] += 1;
            st.redirections += row.redirections as u64;
            st.dropped += row.dropped as u64;
        }
        st
    }
}

/// An assembled game over the canonical 869 states.
///
/// In agency states runner action `i` is the lead `grid.value(i)`; in
/// two-player mode its pitcher rows are `[Pitch, Pickoff]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    pub game: StochasticGame,
    pub mode: KernelMode,
    pub grid: LeadGrid,
    pub stats: AssemblyStats,
}

impl TransitionKernel {
    /// Wrap a game after checking it matches the canonical layout.
    pub fn new(game: StochasticGame, mode: KernelMode, grid: LeadGrid, stats: AssemblyStats) -> Result<Self> {
        if game.num_states() != NUM_STATES || game.terminal() != TERMINAL_INDEX {
            return Err(Error::Kernel("kernel does not use the canonical state space".into()));
        }
        let rows_per_action = match mode {
            KernelMode::TwoPlayer => 2,
            KernelMode::OnePlayer => 1,
        };
        for s in 0..NUM_STATES {
            let agency = GameState::from_index(s).is_some_and(GameState::has_agency);
            let acts = game.runner_actions(s);
            let ok = if agency {
                acts.len() == grid.len()
                    && acts.clone().all(|a| game.pitcher_rows(a).len() == rows_per_action)
            } else {
                acts.len() == 1 && game.pitcher_rows(acts.start).len() == 1
            };
            if !ok {
                return Err(Error::Kernel(format!(
                    "state {} has the wrong action layout",
                    GameState::from_index(s).unwrap()
                )));
            }
        }
        Ok(TransitionKernel { game, mode, grid, stats })
    }

    /// Global runner action id of lead index `lead` in agency state `s`.
    pub fn lead_action(&self, s: usize, lead: usize) -> Option<usize> {
        self.game.runner_action_id(s, lead)
    }

    /// Row of `(state, runner action, pitcher action)`.
    pub fn row_id(&self, action: usize, pitcher: PitcherAction) -> usize {
        let rows = self.game.pitcher_rows(action);
        match self.mode {
            KernelMode::OnePlayer => rows.start,
            KernelMode::TwoPlayer => rows.start + pitcher.row_index().min(rows.len() - 1),
        }
    }
}

fn mixture(s: PlayState, dist: &OutcomeDistribution, rows: &ConditionalRows) -> Result<Vec<Entry>> {
    let from = GameState::Play(s);
    let mut out: Vec<Entry> = Vec::new();
    for (r, p) in dist.iter() {
        if p == 0.0 {
            continue;
        }
        for &(succ, q) in &rows.agency(s, r).entries {
            let w = p * q;
            let idx = succ.index();
            match out.iter_mut().find(|e| e.to as usize == idx) {
                Some(e) => e.prob += w,
                None => out.push(Entry::new(idx, w, reward(from, succ)? as f64)),
            }
        }
    }
    Ok(out)
}

fn state_block(i: usize, rows: &ConditionalRows, models: &ModelSet, opts: &AssemblyOptions) -> Result<StateBlock> {
    let state = GameState::from_index(i).expect("index in range");
    let one = |to: GameState, r: f64| alloc::vec![alloc::vec![alloc::vec![Entry::new(to.index(), 1.0, r)]]];
    match state {
        GameState::Terminal => Ok(one(GameState::Terminal, 0.0)),
        GameState::Penultimate(_) => Ok(one(GameState::Terminal, 0.0)),
        GameState::Play(s) if !s.has_agency() => {
            let row = rows
                .no_agency(s)
                .entries
                .iter()
                .map(|&(succ, q)| Ok(Entry::new(succ.index(), q, reward(state, succ)? as f64)))
                .collect::<Result<Vec<_>>>()?;
            Ok(alloc::vec![alloc::vec![row]])
        }
        GameState::Play(s) => {
            let ctx = PlayContext::new(s, &opts.matchup);
            let mut block = Vec::with_capacity(opts.grid.len());
            for lead in opts.grid.values() {
                let probs = models.probabilities(&ctx, lead)?;
                let pitcher_rows = match opts.mode {
                    KernelMode::TwoPlayer => [PitcherAction::Pitch, PitcherAction::Pickoff]
                        .into_iter()
                        .map(|a| mixture(s, &OutcomeDistribution::two_player(&probs, a)?, rows))
                        .collect::<Result<Vec<_>>>()?,
                    KernelMode::OnePlayer => {
                        let attempt = opts.pickoff_override.unwrap_or(probs.pickoff_attempt);
                        alloc::vec![mixture(s, &OutcomeDistribution::mixed(&probs, attempt), rows)?]
                    }
                };
                block.push(pitcher_rows);
            }
            Ok(block)
        }
    }
}

/// Assemble a kernel from resolved conditional rows.
pub fn assemble_kernel(rows: &ConditionalRows, models: &ModelSet, opts: &AssemblyOptions) -> Result<TransitionKernel> {
    if let Some(p) = opts.pickoff_override {
        if opts.mode != KernelMode::OnePlayer || !(0.0..=1.0).contains(&p) {
            return Err(Error::Contract("pickoff override needs one-player mode and a probability".into()));
        }
    }
    let stats = rows.stats();
    log::info!(
        "conditional rows by fallback level {:?}, {} redirected and {} dropped pooled entries",
        stats.rows_by_level,
        stats.redirections,
        stats.dropped
    );
    let blocks = map_indices(NUM_STATES, |i| state_block(i, rows, models, opts));
    let mut builder = GameBuilder::new(NUM_STATES, TERMINAL_INDEX);
    for block in blocks {
        builder.push_state(block?)?;
    }
    TransitionKernel::new(builder.build()?, opts.mode, opts.grid, stats)
}

pub fn assemble_two_player_kernel<C: ConditionalTransitions + ?Sized>(
    q: &C,
    models: &ModelSet,
    matchup: &Matchup,
    grid: LeadGrid,
) -> Result<TransitionKernel> {
    let opts = AssemblyOptions { grid, matchup: matchup.clone(), ..AssemblyOptions::new(KernelMode::TwoPlayer) };
    assemble_kernel(&ConditionalRows::collect(q)?, models, &opts)
}

pub fn assemble_one_player_kernel<C: ConditionalTransitions + ?Sized>(
    q: &C,
    models: &ModelSet,
    matchup: &Matchup,
    grid: LeadGrid,
) -> Result<TransitionKernel> {
    let opts = AssemblyOptions { grid, matchup: matchup.clone(), ..AssemblyOptions::new(KernelMode::OnePlayer) };
    assemble_kernel(&ConditionalRows::collect(q)?, models, &opts)
}
