//! Observed plays.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::models::Matchup;
use crate::solver::MixedRunnerPolicy;
use crate::state::{reward, GameState, LeadGrid, PlayState, RunnerOutcome, NUM_PENULTIMATE, NUM_STATES};

/// Where a play left the inning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostState {
    Play(PlayState),
    /// Third out recorded; `runs` scored on the play.
    InningEnd { runs: u8 },
}

impl PostState {
    pub fn game_state(self) -> GameState {
        match self {
            PostState::Play(p) => GameState::Play(p),
            PostState::InningEnd { runs } => GameState::Penultimate(runs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayRecord {
    pub pre: PlayState,
    pub post: PostState,
    /// Present exactly when the runner on first is alone on base.
    pub runner_outcome: Option<RunnerOutcome>,
    pub lead: Option<f64>,
    pub pickoff_attempt: Option<bool>,
    pub runner_id: Option<String>,
    pub pitcher_id: Option<String>,
    pub catcher_id: Option<String>,
    pub sprint_speed: Option<f64>,
    pub arm_strength: Option<f64>,
}

impl PlayRecord {
    /// A record with no player information.
    pub fn new(pre: PlayState, post: PostState, runner_outcome: Option<RunnerOutcome>) -> Self {
        PlayRecord {
            pre,
            post,
            runner_outcome,
            lead: None,
            pickoff_attempt: runner_outcome.map(RunnerOutcome::is_pickoff),
            runner_id: None,
            pitcher_id: None,
            catcher_id: None,
            sprint_speed: None,
            arm_strength: None,
        }
    }

    pub fn matchup(&self) -> Matchup {
        Matchup {
            runner_id: self.runner_id.clone(),
            pitcher_id: self.pitcher_id.clone(),
            catcher_id: self.catcher_id.clone(),
            sprint_speed: self.sprint_speed,
            arm_strength: self.arm_strength,
            synthetic: None,
        }
    }

    /// Runs scored on the play.
    pub fn runs(&self) -> Result<u8> {
        reward(GameState::Play(self.pre), self.post.game_state())
    }

    /// Check the record's internal consistency. A missing lead on a
    /// runner-on-first play is allowed here and handled by [`MissingLeadPolicy`].
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Record(msg));
        let agency = self.pre.has_agency();
        match (agency, self.runner_outcome) {
            (true, None) => return bad("runner outcome missing with a runner alone on first".into()),
            (false, Some(r)) => {
                return bad(format!("runner outcome {} without a runner alone on first", r.code()))
            }
            _ => {}
        }
        if !agency && self.lead.is_some() {
            return bad("lead given without a runner alone on first".into());
        }
        if let Some(lead) = self.lead {
            if !(0.0..=20.0).contains(&lead) {
                return bad(format!("lead {lead} outside [0, 20]"));
            }
        }
        if let (Some(attempt), Some(r)) = (self.pickoff_attempt, self.runner_outcome) {
            if attempt != r.is_pickoff() {
                return bad(format!("pickoff_attempt={} contradicts outcome {}", attempt as u8, r.code()));
            }
        }
        if !agency && self.pickoff_attempt == Some(true) {
            return bad("pickoff attempt without a runner alone on first".into());
        }
        for (name, v) in [("sprint_speed", self.sprint_speed), ("arm_strength", self.arm_strength)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        match self.post {
            PostState::InningEnd { runs } if runs as usize >= NUM_PENULTIMATE => {
                return bad(format!("{runs} runs on an inning-ending play"));
            }
            PostState::Play(t) if t.disengagements() > self.pre.disengagements() + 1 => {
                return bad("disengagements rose by more than one".into());
            }
            _ => {}
        }
        self.runs().map_err(|e| Error::Record(format!("{e}")))?;
        Ok(())
    }
}

/// What to do with runner-on-first plays that lack a lead measurement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MissingLeadPolicy {
    #[default]
    Drop,
    /// Fill in this lead (typically the league mean).
    Impute(f64),
}

impl MissingLeadPolicy {
    /// The record as it should enter estimation, or `None` if dropped.
    pub fn apply(self, mut r: PlayRecord) -> Option<PlayRecord> {
        if r.pre.has_agency() && r.lead.is_none() {
            match self {
                MissingLeadPolicy::Drop => return None,
                MissingLeadPolicy::Impute(x) => r.lead = Some(x),
            }
        }
        Some(r)
    }
}

/// Apply `policy`; returns the kept records and how many were dropped.
pub fn apply_missing_lead_policy(
    records: Vec<PlayRecord>,
    policy: MissingLeadPolicy,
) -> (Vec<PlayRecord>, usize) {
    let before = records.len();
    let kept: Vec<PlayRecord> = records.into_iter().filter_map(|r| policy.apply(r)).collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Observed leads per agency state, snapped to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadHistogram {
    grid: LeadGrid,
    by_state: BTreeMap<usize, BTreeMap<usize, u64>>,
}

impl LeadHistogram {
    pub fn new(grid: LeadGrid) -> Self {
        LeadHistogram { grid, by_state: BTreeMap::new() }
    }

    /// Count the record's lead if it has one.
    pub fn add(&mut self, r: &PlayRecord) {
        if let (true, Some(lead)) = (r.pre.has_agency(), r.lead) {
            let i = self.grid.nearest_index(lead);
            *self.by_state.entry(r.pre.index()).or_default().entry(i).or_insert(0) += 1;
        }
    }

    pub fn observations(&self) -> u64 {
        self.by_state.values().flat_map(|h| h.values()).sum()
    }

    /// Empirical lead mix per state. Unobserved states borrow the pooled mix
    /// at the same disengagement count, then the mix over all states.
    pub fn policy(&self) -> Result<MixedRunnerPolicy> {
        let mut by_d: [BTreeMap<usize, u64>; 3] = Default::default();
        let mut all = BTreeMap::new();
        for (&s, h) in &self.by_state {
            let d = PlayState::from_index(s).map_or(0, |p| p.disengagements()) as usize;
            for (&i, &n) in h {
                *by_d[d].entry(i).or_insert(0) += n;
                *all.entry(i).or_insert(0) += n;
            }
        }
        if all.is_empty() {
            return Err(Error::Input("no observed leads to build an empirical policy from".into()));
        }
        let mix = |h: &BTreeMap<usize, u64>| {
            let total = h.values().sum::<u64>() as f64;
            h.iter().map(|(&i, &n)| (i, n as f64 / total)).collect::<Vec<_>>()
        };
        Ok(MixedRunnerPolicy(
            (0..NUM_STATES)
                .map(|s| match GameState::from_index(s).and_then(GameState::as_play) {
                    Some(p) if p.has_agency() => {
                        let d = p.disengagements() as usize;
                        let h = self.by_state.get(&s).unwrap_or(if by_d[d].is_empty() { &all } else { &by_d[d] });
                        mix(h)
                    }
                    _ => vec![(0, 1.0)],
                })
                .collect(),
        ))
    }
}
