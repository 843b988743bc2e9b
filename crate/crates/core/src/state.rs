//! State space, action spaces and the run-counting reward of the game.
//!
//! Canonical state order (used by every kernel row and file format):
//! play states sorted lexicographically by `(bases, balls, strikes,
//! disengagements, outs)` with bases ordered as the bit string `b1 b2 b3`,
//! then `Penultimate(0..=3)`, then `Terminal` at index 868.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

pub const NUM_PLAY_STATES: usize = 864;
pub const NUM_PENULTIMATE: usize = 4;
pub const NUM_STATES: usize = NUM_PLAY_STATES + NUM_PENULTIMATE + 1;
pub const TERMINAL_INDEX: usize = NUM_STATES - 1;

/// Occupancy of first, second and third base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BaseState {
    pub b1: bool,
    pub b2: bool,
    pub b3: bool,
}

impl BaseState {
    pub const EMPTY: BaseState = BaseState::new(false, false, false);
    /// Runner on first only: the one configuration where both players act.
    pub const FIRST_ONLY: BaseState = BaseState::new(true, false, false);

    pub const fn new(b1: bool, b2: bool, b3: bool) -> Self {
        BaseState { b1, b2, b3 }
    }

    /// Position in `0..8` under the `b1 b2 b3` bit-string order.
    pub fn index(self) -> usize {
        (self.b1 as usize) << 2 | (self.b2 as usize) << 1 | self.b3 as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        (i < 8).then(|| BaseState::new(i & 4 != 0, i & 2 != 0, i & 1 != 0))
    }

    pub fn all() -> impl Iterator<Item = BaseState> {
        (0..8).filter_map(BaseState::from_index)
    }

    /// Every runner moves up one base; the runner on third scores.
    pub fn advance_all(self) -> (BaseState, u8) {
        (BaseState::new(false, self.b1, self.b2), self.b3 as u8)
    }

    /// Batter awarded first; only forced runners move.
    pub fn force_batter_to_first(self) -> (BaseState, u8) {
        match (self.b1, self.b2, self.b3) {
            (false, b2, b3) => (BaseState::new(true, b2, b3), 0),
            (true, false, b3) => (BaseState::new(true, true, b3), 0),
            (true, true, false) => (BaseState::new(true, true, true), 0),
            (true, true, true) => (BaseState::new(true, true, true), 1),
        }
    }
}

impl fmt::Display for BaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.b1 as u8, self.b2 as u8, self.b3 as u8)
    }
}

/// Number of runners on base.
pub fn runners_on_base(b: BaseState) -> u8 {
    b.b1 as u8 + b.b2 as u8 + b.b3 as u8
}

/// Ball-strike count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Count {
    balls: u8,
    strikes: u8,
}

impl Count {
    pub const FRESH: Count = Count { balls: 0, strikes: 0 };

    pub fn new(balls: u8, strikes: u8) -> Result<Self> {
        if balls > 3 || strikes > 2 {
            return Err(Error::Input(alloc::format!("count {balls}-{strikes} out of range")));
        }
        Ok(Count { balls, strikes })
    }

    pub fn balls(self) -> u8 {
        self.balls
    }

    pub fn strikes(self) -> u8 {
        self.strikes
    }

    pub fn index(self) -> usize {
        self.balls as usize * 3 + self.strikes as usize
    }

    pub fn all() -> impl Iterator<Item = Count> {
        (0..4u8).flat_map(|b| (0..3u8).map(move |s| Count { balls: b, strikes: s }))
    }

    /// Count after adding `(balls, strikes)`, or `None` if it leaves the domain.
    pub fn shifted(self, balls: i8, strikes: i8) -> Option<Count> {
        let b = self.balls as i8 + balls;
        let s = self.strikes as i8 + strikes;
        ((0..=3).contains(&b) && (0..=2).contains(&s)).then_some(Count {
            balls: b as u8,
            strikes: s as u8,
        })
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.balls, self.strikes)
    }
}

/// A state in which a play begins: `(bases, count, disengagements, outs)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayState {
    pub bases: BaseState,
    pub count: Count,
    disengagements: u8,
    outs: u8,
}

impl PlayState {
    /// Start of an inning: bases empty, 0-0, no disengagements, no outs.
    pub const START: PlayState = PlayState {
        bases: BaseState::EMPTY,
        count: Count::FRESH,
        disengagements: 0,
        outs: 0,
    };

    pub fn new(bases: BaseState, count: Count, disengagements: u8, outs: u8) -> Result<Self> {
        if disengagements > 2 {
            return Err(Error::Input(alloc::format!(
                "disengagements {disengagements} out of range"
            )));
        }
        if outs > 2 {
            return Err(Error::Input(alloc::format!("outs {outs} out of range")));
        }
        Ok(PlayState { bases, count, disengagements, outs })
    }

    pub fn disengagements(self) -> u8 {
        self.disengagements
    }

    pub fn outs(self) -> u8 {
        self.outs
    }

    /// Whether both players have a decision here (runner on first only).
    pub fn has_agency(self) -> bool {
        self.bases == BaseState::FIRST_ONLY
    }

    pub fn reduced(self) -> ReducedState {
        ReducedState { bases: self.bases, count: self.count, outs: self.outs }
    }

    pub fn with_disengagements(self, d: u8) -> Result<Self> {
        PlayState::new(self.bases, self.count, d, self.outs)
    }

    pub fn index(self) -> usize {
        (((self.bases.index() * 4 + self.count.balls as usize) * 3 + self.count.strikes as usize) * 3
            + self.disengagements as usize)
            * 3
            + self.outs as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        if i >= NUM_PLAY_STATES {
            return None;
        }
        let outs = (i % 3) as u8;
        let d = (i / 3 % 3) as u8;
        let strikes = (i / 9 % 3) as u8;
        let balls = (i / 27 % 4) as u8;
        let bases = BaseState::from_index(i / 108)?;
        Some(PlayState { bases, count: Count { balls, strikes }, disengagements: d, outs })
    }
}

impl fmt::Display for PlayState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{} c{} d{} o{}", self.bases, self.count, self.disengagements, self.outs)
    }
}

/// A play state with the disengagement count dropped, used for pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReducedState {
    pub bases: BaseState,
    pub count: Count,
    pub outs: u8,
}

impl ReducedState {
    pub fn with_disengagements(self, d: u8) -> Result<PlayState> {
        PlayState::new(self.bases, self.count, d, self.outs)
    }
}

impl fmt::Display for ReducedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{} c{} o{}", self.bases, self.count, self.outs)
    }
}

/// Any state of the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GameState {
    Play(PlayState),
    /// The inning just ended with this many runs scoring on the last play.
    Penultimate(u8),
    Terminal,
}

impl GameState {
    pub const START: GameState = GameState::Play(PlayState::START);

    pub fn penultimate(runs: u8) -> Result<Self> {
        if runs as usize >= NUM_PENULTIMATE {
            return Err(Error::Input(alloc::format!("penultimate runs {runs} out of range")));
        }
        Ok(GameState::Penultimate(runs))
    }

    pub fn index(self) -> usize {
        match self {
            GameState::Play(p) => p.index(),
            GameState::Penultimate(k) => NUM_PLAY_STATES + k as usize,
            GameState::Terminal => TERMINAL_INDEX,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            _ if i < NUM_PLAY_STATES => PlayState::from_index(i).map(GameState::Play),
            _ if i < TERMINAL_INDEX => Some(GameState::Penultimate((i - NUM_PLAY_STATES) as u8)),
            TERMINAL_INDEX => Some(GameState::Terminal),
            _ => None,
        }
    }

    pub fn as_play(self) -> Option<PlayState> {
        match self {
            GameState::Play(p) => Some(p),
            _ => None,
        }
    }

    pub fn has_agency(self) -> bool {
        self.as_play().is_some_and(PlayState::has_agency)
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameState::Play(p) => p.fmt(f),
            GameState::Penultimate(k) => write!(f, "pen{k}"),
            GameState::Terminal => f.write_str("end"),
        }
    }
}

/// All 869 states in canonical order.
pub fn enumerate_states() -> Vec<GameState> {
    (0..NUM_STATES).filter_map(GameState::from_index).collect()
}

/// Runs scored on the transition `from -> to`.
///
/// Play to play: `(g(b) + o) - (g(b') + o') + [c' = 0-0 and d' = 0]`, where the
/// indicator accounts for a new batter. Play to `Penultimate(k)`: `k`. Anything
/// to `Terminal`: 0. Pairs that no transition can produce are rejected.
pub fn reward(from: GameState, to: GameState) -> Result<u8> {
    let bad = |reason| Err(Error::InadmissibleTransition { from, to, reason });
    match (from, to) {
        (GameState::Terminal, _) => bad("terminal state has no successors"),
        (GameState::Penultimate(_), GameState::Terminal) => Ok(0),
        (GameState::Penultimate(_), _) => bad("penultimate states only lead to terminal"),
        (GameState::Play(_), GameState::Terminal) => Ok(0),
        (GameState::Play(_), GameState::Penultimate(k)) => Ok(k),
        (GameState::Play(s), GameState::Play(t)) => {
            let before = (runners_on_base(s.bases) + s.outs) as i32;
            let after = (runners_on_base(t.bases) + t.outs) as i32;
            let batter = (t.count == Count::FRESH && t.disengagements == 0) as i32;
            let runs = before - after + batter;
            if t.outs < s.outs {
                return bad("outs decreased within an inning");
            }
            match runs {
                0..=4 => Ok(runs as u8),
                r if r < 0 => bad("negative run count"),
                _ => bad("more than four runs on one play"),
            }
        }
    }
}

/// Discretized set of lead distances `{min, min + step, ..., max}` in feet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadGrid {
    min: f64,
    step: f64,
    len: usize,
}

impl Default for LeadGrid {
    fn default() -> Self {
        LeadGrid { min: 0.0, step: 0.1, len: 201 }
    }
}

impl LeadGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) || step <= 0.0 || max < min {
            return Err(Error::Input(alloc::format!("bad lead grid {min}:{max}:{step}")));
        }
        if min < 0.0 || max > 20.0 + 1e-9 {
            return Err(Error::Input(alloc::format!(
                "lead grid {min}:{max} must lie within [0, 20] feet"
            )));
        }
        let spans = (max - min) / step;
        let n = libm::round(spans);
        if libm::fabs(spans - n) > 1e-6 {
            return Err(Error::Input(alloc::format!(
                "lead grid step {step} does not divide [{min}, {max}]"
            )));
        }
        Ok(LeadGrid { min, step, len: n as usize + 1 })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Lead at grid position `i`, computed as `min + i * step` (no accumulation).
    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    /// Nearest grid position to `lead`, clamped to the grid.
    pub fn nearest_index(&self, lead: f64) -> usize {
        let raw = libm::round((lead - self.min) / self.step);
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.len - 1)
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunnerAction {
    Lead(f64),
    NoAgency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PitcherAction {
    Pickoff,
    Pitch,
    NoAgency,
}

impl PitcherAction {
    /// Position within an agency state's pitcher rows. Pitch comes first so
    /// that lowest-index tie-breaking prefers Pitch.
    pub fn row_index(self) -> usize {
        match self {
            PitcherAction::Pitch | PitcherAction::NoAgency => 0,
            PitcherAction::Pickoff => 1,
        }
    }
}

/// What happened to the runner on first during a play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RunnerOutcome {
    PickoffSuccess,
    PickoffFail,
    StealSuccess,
    StealFail,
    NoAction,
}

impl RunnerOutcome {
    pub const ALL: [RunnerOutcome; 5] = [
        RunnerOutcome::PickoffSuccess,
        RunnerOutcome::PickoffFail,
        RunnerOutcome::StealSuccess,
        RunnerOutcome::StealFail,
        RunnerOutcome::NoAction,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_pickoff(self) -> bool {
        matches!(self, RunnerOutcome::PickoffSuccess | RunnerOutcome::PickoffFail)
    }

    /// Outcomes resolved on a pitch (as opposed to a throw to first).
    pub fn is_pitch(self) -> bool {
        !self.is_pickoff()
    }

    pub fn code(self) -> &'static str {
        match self {
            RunnerOutcome::PickoffSuccess => "PO_SUCCESS",
            RunnerOutcome::PickoffFail => "PO_FAIL",
            RunnerOutcome::StealSuccess => "SB_SUCCESS",
            RunnerOutcome::StealFail => "SB_FAIL",
            RunnerOutcome::NoAction => "NONE",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        RunnerOutcome::ALL.into_iter().find(|r| r.code() == code)
    }
}

/// Runner's admissible actions in `s`.
pub fn runner_actions(s: GameState, grid: &LeadGrid) -> Vec<RunnerAction> {
    if s.has_agency() {
        grid.values().map(RunnerAction::Lead).collect()
    } else {
        alloc::vec![RunnerAction::NoAgency]
    }
}

/// Pitcher's admissible responses to `runner` in `s`, in kernel row order.
pub fn pitcher_actions(s: GameState, runner: RunnerAction) -> Vec<PitcherAction> {
    match runner {
        RunnerAction::Lead(_) if s.has_agency() => {
            alloc::vec![PitcherAction::Pitch, PitcherAction::Pickoff]
        }
        _ => alloc::vec![PitcherAction::NoAgency],
    }
}

/// Successor of a failed pickoff with two prior disengagements: every runner
/// advances one base, the disengagement count resets, count and outs stay.
pub fn third_disengagement(s: PlayState) -> GameState {
    let (bases, _) = s.bases.advance_all();
    GameState::Play(PlayState { bases, count: s.count, disengagements: 0, outs: s.outs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn play(b: (bool, bool, bool), c: (u8, u8), d: u8, o: u8) -> GameState {
        GameState::Play(
            PlayState::new(BaseState::new(b.0, b.1, b.2), Count::new(c.0, c.1).unwrap(), d, o)
                .unwrap(),
        )
    }

    const T: bool = true;
    const F: bool = false;

    #[test]
    fn enumeration_has_869_states_terminal_last() {
        let states = enumerate_states();
        assert_eq!(states.len(), 869);
        assert_eq!(states.iter().filter(|s| matches!(s, GameState::Play(_))).count(), 864);
        assert_eq!(*states.last().unwrap(), GameState::Terminal);
        assert_eq!(GameState::Terminal.index(), 868);
        for (i, s) in states.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(GameState::from_index(s.index()), Some(*s));
        }
        assert!(GameState::from_index(869).is_none());
    }

    #[test]
    fn canonical_order_is_lexicographic() {
        let states = enumerate_states();
        let plays: Vec<_> = states.iter().filter_map(|s| s.as_play()).collect();
        for w in plays.windows(2) {
            let key = |p: &PlayState| {
                (p.bases.index(), p.count.balls(), p.count.strikes(), p.disengagements(), p.outs())
            };
            assert!(key(&w[0]) < key(&w[1]));
        }
        assert_eq!(states[864], GameState::Penultimate(0));
        assert_eq!(states[867], GameState::Penultimate(3));
    }

    #[test]
    fn runner_counts() {
        assert_eq!(runners_on_base(BaseState::new(F, F, F)), 0);
        assert_eq!(runners_on_base(BaseState::new(T, F, T)), 2);
        assert_eq!(runners_on_base(BaseState::new(T, T, T)), 3);
    }

    #[test]
    fn reward_examples() {
        // walk or single, nobody scores
        assert_eq!(reward(play((T, F, F), (0, 0), 0, 0), play((T, T, F), (0, 0), 0, 0)), Ok(0));
        // two-run homer on a full count
        assert_eq!(reward(play((T, F, F), (3, 2), 2, 1), play((F, F, F), (0, 0), 0, 1)), Ok(2));
        // stolen base
        assert_eq!(reward(play((T, F, F), (1, 1), 1, 0), play((F, T, F), (1, 1), 1, 0)), Ok(0));
        assert_eq!(reward(play((T, T, T), (2, 1), 0, 1), GameState::Penultimate(3)), Ok(3));
        assert_eq!(reward(GameState::Penultimate(2), GameState::Terminal), Ok(0));
    }

    #[test]
    fn reward_rejects_inadmissible_pairs() {
        assert!(reward(GameState::Terminal, GameState::Terminal).is_err());
        assert!(reward(GameState::Penultimate(1), GameState::START).is_err());
        // a runner appears from nowhere mid plate appearance
        assert!(reward(play((F, F, F), (1, 0), 0, 0), play((T, F, F), (2, 0), 0, 0)).is_err());
        // outs go down
        assert!(reward(play((F, F, F), (1, 0), 0, 2), play((F, F, F), (0, 0), 0, 0)).is_err());
    }

    #[test]
    fn lead_grid_default_has_201_exact_points() {
        let g = LeadGrid::default();
        assert_eq!(g.len(), 201);
        assert_eq!(g, LeadGrid::new(0.0, 20.0, 0.1).unwrap());
        assert_eq!(g.value(0), 0.0);
        assert_eq!(g.value(200), 20.0);
        assert_eq!(g.value(151), 151.0 * 0.1);
        assert_eq!(g.nearest_index(15.1), 151);
        assert_eq!(g.nearest_index(-3.0), 0);
        assert_eq!(g.nearest_index(25.0), 200);
        assert!(LeadGrid::new(0.0, 20.0, 0.3).is_err());
        assert!(LeadGrid::new(0.0, 25.0, 0.1).is_err());
    }

    #[test]
    fn action_spaces() {
        let g = LeadGrid::default();
        let agency = play((T, F, F), (0, 0), 0, 0);
        let acts = runner_actions(agency, &g);
        assert_eq!(acts.len(), 201);
        assert_eq!(acts[0], RunnerAction::Lead(0.0));
        assert_eq!(acts[200], RunnerAction::Lead(20.0));
        assert_eq!(runner_actions(play((F, T, F), (0, 0), 0, 0), &g), [RunnerAction::NoAgency]);
        assert_eq!(runner_actions(GameState::Terminal, &g), [RunnerAction::NoAgency]);

        let p = pitcher_actions(agency, RunnerAction::Lead(10.0));
        assert_eq!(p, [PitcherAction::Pitch, PitcherAction::Pickoff]);
        assert_eq!(
            pitcher_actions(play((T, T, F), (0, 0), 0, 0), RunnerAction::NoAgency),
            [PitcherAction::NoAgency]
        );
        assert_eq!(
            pitcher_actions(GameState::Penultimate(1), RunnerAction::NoAgency),
            [PitcherAction::NoAgency]
        );
    }

    #[test]
    fn action_space_exclusivity() {
        let g = LeadGrid::new(0.0, 20.0, 1.0).unwrap();
        for s in enumerate_states() {
            let acts = runner_actions(s, &g);
            let leads = acts.iter().all(|a| matches!(a, RunnerAction::Lead(_)));
            let none = acts == [RunnerAction::NoAgency];
            assert!(leads ^ none);
            assert_eq!(leads, s.as_play().is_some_and(|p| p.bases == BaseState::FIRST_ONLY));
        }
    }

    #[test]
    fn third_disengagement_advances_runner() {
        let s = PlayState::new(BaseState::FIRST_ONLY, Count::new(2, 1).unwrap(), 2, 1).unwrap();
        assert_eq!(third_disengagement(s), play((F, T, F), (2, 1), 0, 1));
    }

    #[test]
    fn outcome_codes_round_trip() {
        for r in RunnerOutcome::ALL {
            assert_eq!(RunnerOutcome::from_code(r.code()), Some(r));
        }
        assert_eq!(RunnerOutcome::from_code("NA"), None);
    }
}
