//! Mixed-effects logistic outcome models and the runner-outcome distributions
//! built from them.
//!
//! Four models are evaluated: pickoff attempt (`phi`), pickoff success
//! (`phi+`), steal attempt (`psi`, never depends on the lead) and steal
//! success (`psi+`). Each is `sigmoid(intercept + fixed terms + player terms)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::state::{PitcherAction, PlayState, RunnerOutcome};

/// Evaluated probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]`.
pub const PROB_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    PickoffAttempt,
    PickoffSuccess,
    StealAttempt,
    StealSuccess,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::PickoffAttempt,
        ModelKind::PickoffSuccess,
        ModelKind::StealAttempt,
        ModelKind::StealSuccess,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Block name in the coefficient file.
    pub fn key(self) -> &'static str {
        match self {
            ModelKind::PickoffAttempt => "po_attempt",
            ModelKind::PickoffSuccess => "po_success",
            ModelKind::StealAttempt => "sb_attempt",
            ModelKind::StealSuccess => "sb_success",
        }
    }

    /// Fixed terms this model kind carries, no more and no less.
    pub fn terms(self) -> &'static [FixedTerm] {
        use FixedTerm::*;
        match self {
            ModelKind::PickoffAttempt => &[Balls, Strikes, Outs, Diseng1, Diseng2, Lead],
            ModelKind::PickoffSuccess => &[Lead],
            ModelKind::StealAttempt => {
                &[Balls, Strikes, Outs, Diseng1, Diseng2, SprintSpeed, ArmStrength]
            }
            ModelKind::StealSuccess => &[Lead, SprintSpeed, ArmStrength],
        }
    }

    pub fn roles(self) -> &'static [Role] {
        match self {
            ModelKind::PickoffAttempt | ModelKind::PickoffSuccess => &[Role::Pitcher],
            ModelKind::StealAttempt | ModelKind::StealSuccess => {
                &[Role::Runner, Role::Pitcher, Role::Catcher]
            }
        }
    }

    pub fn uses_lead(self) -> bool {
        self.terms().contains(&FixedTerm::Lead)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FixedTerm {
    Balls,
    Strikes,
    Outs,
    Diseng1,
    Diseng2,
    Lead,
    SprintSpeed,
    ArmStrength,
}

impl FixedTerm {
    pub const ALL: [FixedTerm; 8] = [
        FixedTerm::Balls,
        FixedTerm::Strikes,
        FixedTerm::Outs,
        FixedTerm::Diseng1,
        FixedTerm::Diseng2,
        FixedTerm::Lead,
        FixedTerm::SprintSpeed,
        FixedTerm::ArmStrength,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixedTerm::Balls => "balls",
            FixedTerm::Strikes => "strikes",
            FixedTerm::Outs => "outs",
            FixedTerm::Diseng1 => "diseng_1",
            FixedTerm::Diseng2 => "diseng_2",
            FixedTerm::Lead => "lead",
            FixedTerm::SprintSpeed => "sprint_speed",
            FixedTerm::ArmStrength => "arm_strength",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        FixedTerm::ALL.into_iter().find(|t| t.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Runner,
    Pitcher,
    Catcher,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Runner, Role::Pitcher, Role::Catcher];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Runner => "runner",
            Role::Pitcher => "pitcher",
            Role::Catcher => "catcher",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Role::ALL.into_iter().find(|r| r.name() == name)
    }
}

/// One fitted mixed-effects logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    kind: ModelKind,
    intercept: f64,
    fixed: BTreeMap<FixedTerm, f64>,
    re_sd: BTreeMap<Role, f64>,
    re: BTreeMap<Role, BTreeMap<String, f64>>,
}

impl LogisticModel {
    pub fn new(
        kind: ModelKind,
        intercept: f64,
        fixed: BTreeMap<FixedTerm, f64>,
        re_sd: BTreeMap<Role, f64>,
        re: BTreeMap<Role, BTreeMap<String, f64>>,
    ) -> Result<Self> {
        let name = kind.key();
        for term in kind.terms() {
            if !fixed.contains_key(term) {
                return Err(Error::Input(format!("{name}: missing fixed term {}", term.name())));
            }
        }
        for term in fixed.keys() {
            if !kind.terms().contains(term) {
                return Err(Error::Input(format!(
                    "{name}: fixed term {} does not belong to this model",
                    term.name()
                )));
            }
        }
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Input(format!("{name}: non-finite {what}")))
            }
        };
        finite(intercept, "intercept")?;
        for (t, v) in &fixed {
            finite(*v, t.name())?;
        }
        for (role, sd) in &re_sd {
            if !kind.roles().contains(role) {
                return Err(Error::Input(format!("{name}: no {} random effect", role.name())));
            }
            if !(sd.is_finite() && *sd >= 0.0) {
                return Err(Error::Input(format!(
                    "{name}: {} standard deviation must be >= 0",
                    role.name()
                )));
            }
        }
        for (role, effects) in &re {
            if !kind.roles().contains(role) {
                return Err(Error::Input(format!("{name}: no {} random effect", role.name())));
            }
            for (id, v) in effects {
                finite(*v, id)?;
            }
        }
        Ok(LogisticModel { kind, intercept, fixed, re_sd, re })
    }

    /// A model with every coefficient and standard deviation at zero.
    pub fn zeros(kind: ModelKind) -> Self {
        let fixed = kind.terms().iter().map(|t| (*t, 0.0)).collect();
        let re_sd = kind.roles().iter().map(|r| (*r, 0.0)).collect();
        LogisticModel { kind, intercept: 0.0, fixed, re_sd, re: BTreeMap::new() }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficient(&self, term: FixedTerm) -> Option<f64> {
        self.fixed.get(&term).copied()
    }

    pub fn fixed(&self) -> &BTreeMap<FixedTerm, f64> {
        &self.fixed
    }

    pub fn random_effect_sd(&self, role: Role) -> Option<f64> {
        self.re_sd.get(&role).copied()
    }

    pub fn random_effect_sds(&self) -> &BTreeMap<Role, f64> {
        &self.re_sd
    }

    pub fn random_effects(&self) -> &BTreeMap<Role, BTreeMap<String, f64>> {
        &self.re
    }

    /// Random effect of a player; unknown players sit at the prior mean 0.
    pub fn player_effect(&self, role: Role, id: Option<&str>) -> f64 {
        id.and_then(|id| self.re.get(&role)?.get(id).copied()).unwrap_or(0.0)
    }
}

/// League-average covariates, used when a player's value is unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariateMeans {
    /// feet per second
    pub sprint_speed: f64,
    /// miles per hour
    pub arm_strength: f64,
}

/// How covariates enter the linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovariateConvention {
    /// `beta * (z - mean)`
    #[default]
    Centered,
    /// `beta * z`
    Raw,
}

/// The four outcome models plus shared covariate conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    models: [LogisticModel; 4],
    pub covariate_means: CovariateMeans,
    pub convention: CovariateConvention,
    /// Drop the disengagement effects (emulates a fit that encoded d as 0).
    pub zero_disengagement_effects: bool,
}

impl ModelSet {
    pub fn new(
        po_attempt: LogisticModel,
        po_success: LogisticModel,
        sb_attempt: LogisticModel,
        sb_success: LogisticModel,
        covariate_means: CovariateMeans,
        convention: CovariateConvention,
    ) -> Result<Self> {
        let models = [po_attempt, po_success, sb_attempt, sb_success];
        for (m, kind) in models.iter().zip(ModelKind::ALL) {
            if m.kind != kind {
                return Err(Error::Input(format!(
                    "expected a {} model, got {}",
                    kind.key(),
                    m.kind.key()
                )));
            }
        }
        let CovariateMeans { sprint_speed, arm_strength } = covariate_means;
        if !(sprint_speed > 0.0 && arm_strength > 0.0) {
            return Err(Error::Input("covariate means must be strictly positive".into()));
        }
        Ok(ModelSet {
            models,
            covariate_means,
            convention,
            zero_disengagement_effects: false,
        })
    }

    pub fn model(&self, kind: ModelKind) -> &LogisticModel {
        &self.models[kind.index()]
    }

    pub fn models(&self) -> &[LogisticModel; 4] {
        &self.models
    }

    /// Evaluate all four probabilities at `lead`.
    pub fn probabilities(&self, ctx: &PlayContext<'_>, lead: f64) -> Result<OutcomeProbabilities> {
        Ok(OutcomeProbabilities {
            pickoff_attempt: self.eval(ModelKind::PickoffAttempt, ctx, Some(lead))?,
            pickoff_success: self.eval(ModelKind::PickoffSuccess, ctx, Some(lead))?,
            steal_attempt: self.eval(ModelKind::StealAttempt, ctx, None)?,
            steal_success: self.eval(ModelKind::StealSuccess, ctx, Some(lead))?,
        })
    }

    pub fn eval(&self, kind: ModelKind, ctx: &PlayContext<'_>, lead: Option<f64>) -> Result<f64> {
        eval_logistic(self.model(kind), self, ctx, lead)
    }
}

/// Who is playing and what we know about them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matchup {
    pub runner_id: Option<String>,
    pub pitcher_id: Option<String>,
    pub catcher_id: Option<String>,
    /// feet per second; league mean when absent
    pub sprint_speed: Option<f64>,
    /// miles per hour; league mean when absent
    pub arm_strength: Option<f64>,
    /// Replaces id lookups with hypothetical percentile players.
    pub synthetic: Option<SyntheticPlayers>,
}

impl Matchup {
    /// Average runner facing an average battery.
    pub fn average() -> Self {
        Matchup::default()
    }

    pub fn with_synthetic(mut self, players: SyntheticPlayers) -> Self {
        self.synthetic = Some(players);
        self
    }
}

/// Situation-specific inputs to the outcome models.
#[derive(Debug, Clone, Copy)]
pub struct PlayContext<'a> {
    pub balls: u8,
    pub strikes: u8,
    pub outs: u8,
    pub disengagements: u8,
    pub matchup: &'a Matchup,
}

impl<'a> PlayContext<'a> {
    pub fn new(state: PlayState, matchup: &'a Matchup) -> Self {
        PlayContext {
            balls: state.count.balls(),
            strikes: state.count.strikes(),
            outs: state.outs(),
            disengagements: state.disengagements(),
            matchup,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Probability from one logistic model, clamped away from 0 and 1.
pub fn eval_logistic(
    model: &LogisticModel,
    set: &ModelSet,
    ctx: &PlayContext<'_>,
    lead: Option<f64>,
) -> Result<f64> {
    let kind = model.kind;
    match (kind.uses_lead(), lead) {
        (false, Some(_)) => {
            return Err(Error::Contract(format!("{} takes no lead distance", kind.key())))
        }
        (true, None) => {
            return Err(Error::Contract(format!("{} requires a lead distance", kind.key())))
        }
        (_, Some(l)) if !l.is_finite() => {
            return Err(Error::Input(format!("lead {l} is not finite")));
        }
        _ => {}
    }
    if ctx.balls > 3 || ctx.strikes > 2 || ctx.outs > 2 || ctx.disengagements > 2 {
        return Err(Error::Input("play context outside the state domain".into()));
    }

    let m = ctx.matchup;
    let covariate = |value: Option<f64>, mean: f64, what: &str| -> Result<f64> {
        let z = value.unwrap_or(mean);
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::Input(format!("{what} must be strictly positive, got {z}")));
        }
        Ok(match set.convention {
            CovariateConvention::Centered => z - mean,
            CovariateConvention::Raw => z,
        })
    };

    let mut eta = model.intercept;
    for (&term, &beta) in &model.fixed {
        eta += beta
            * match term {
                FixedTerm::Balls => ctx.balls as f64,
                FixedTerm::Strikes => ctx.strikes as f64,
                FixedTerm::Outs => ctx.outs as f64,
                FixedTerm::Diseng1 => {
                    (ctx.disengagements == 1 && !set.zero_disengagement_effects) as u8 as f64
                }
                FixedTerm::Diseng2 => {
                    (ctx.disengagements == 2 && !set.zero_disengagement_effects) as u8 as f64
                }
                FixedTerm::Lead => lead.unwrap_or(0.0),
                FixedTerm::SprintSpeed => covariate(
                    m.sprint_speed,
                    set.covariate_means.sprint_speed,
                    "sprint speed",
                )?,
                FixedTerm::ArmStrength => covariate(
                    m.arm_strength,
                    set.covariate_means.arm_strength,
                    "arm strength",
                )?,
            };
    }
    for &role in kind.roles() {
        eta += match &m.synthetic {
            Some(players) => players.effect(kind, role),
            None => {
                let id = match role {
                    Role::Runner => m.runner_id.as_deref(),
                    Role::Pitcher => m.pitcher_id.as_deref(),
                    Role::Catcher => m.catcher_id.as_deref(),
                };
                model.player_effect(role, id)
            }
        };
    }
    Ok(sigmoid(eta).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))
}

/// The four modelled probabilities at one `(context, lead)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbabilities {
    pub pickoff_attempt: f64,
    pub pickoff_success: f64,
    pub steal_attempt: f64,
    pub steal_success: f64,
}

/// Probabilities of the five runner outcomes, indexed by `RunnerOutcome::index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution([f64; 5]);

impl OutcomeDistribution {
    pub fn new(probs: [f64; 5]) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Input("outcome probability outside [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if libm::fabs(total - 1.0) > 1e-12 {
            return Err(Error::Input(format!("outcome probabilities sum to {total}")));
        }
        Ok(OutcomeDistribution(probs))
    }

    /// Pickoff: `(phi+, 1 - phi+, 0, 0, 0)`; pitch: `(0, 0, psi psi+, psi (1 - psi+), 1 - psi)`.
    pub fn two_player(p: &OutcomeProbabilities, action: PitcherAction) -> Result<Self> {
        match action {
            PitcherAction::Pickoff => Ok(Self::mixed(p, 1.0)),
            PitcherAction::Pitch => Ok(Self::mixed(p, 0.0)),
            PitcherAction::NoAgency => Err(Error::Contract(
                "runner outcomes need a pickoff or pitch decision".into(),
            )),
        }
    }

    /// The pitcher's decision replaced by the pickoff attempt probability.
    pub fn one_player(p: &OutcomeProbabilities) -> Self {
        Self::mixed(p, p.pickoff_attempt)
    }

    /// Pickoff branch with weight `attempt`, pitch branch with `1 - attempt`.
    pub fn mixed(p: &OutcomeProbabilities, attempt: f64) -> Self {
        let pitch = 1.0 - attempt;
        OutcomeDistribution([
            attempt * p.pickoff_success,
            attempt * (1.0 - p.pickoff_success),
            pitch * p.steal_attempt * p.steal_success,
            pitch * p.steal_attempt * (1.0 - p.steal_success),
            pitch * (1.0 - p.steal_attempt),
        ])
    }

    pub fn get(&self, r: RunnerOutcome) -> f64 {
        self.0[r.index()]
    }

    pub fn as_array(&self) -> &[f64; 5] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (RunnerOutcome, f64)> + '_ {
        RunnerOutcome::ALL.into_iter().zip(self.0.iter().copied())
    }
}

pub fn outcome_distribution_two_player(
    set: &ModelSet,
    ctx: &PlayContext<'_>,
    lead: f64,
    action: PitcherAction,
) -> Result<OutcomeDistribution> {
    OutcomeDistribution::two_player(&set.probabilities(ctx, lead)?, action)
}

pub fn outcome_distribution_one_player(
    set: &ModelSet,
    ctx: &PlayContext<'_>,
    lead: f64,
) -> Result<OutcomeDistribution> {
    Ok(OutcomeDistribution::one_player(&set.probabilities(ctx, lead)?))
}

/// Roles a percentile profile can describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileRole {
    Runner,
    Pitcher,
    Catcher,
    /// Pitcher and catcher together.
    Battery,
}

impl ProfileRole {
    fn roles(self) -> &'static [Role] {
        match self {
            ProfileRole::Runner => &[Role::Runner],
            ProfileRole::Pitcher => &[Role::Pitcher],
            ProfileRole::Catcher => &[Role::Catcher],
            ProfileRole::Battery => &[Role::Pitcher, Role::Catcher],
        }
    }
}

/// Random-effect values for hypothetical players, per model and role.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SyntheticPlayers {
    effects: [[f64; 3]; 4],
}

impl SyntheticPlayers {
    pub fn effect(&self, kind: ModelKind, role: Role) -> f64 {
        self.effects[kind.index()][role.index()]
    }

    pub fn set_effect(&mut self, kind: ModelKind, role: Role, value: f64) {
        self.effects[kind.index()][role.index()] = value;
    }

    /// Combine profiles describing different roles.
    pub fn merge(mut self, other: &SyntheticPlayers) -> Self {
        for (row, other_row) in self.effects.iter_mut().zip(other.effects.iter()) {
            for (a, b) in row.iter_mut().zip(other_row) {
                *a += b;
            }
        }
        self
    }
}

/// Direction in which a larger effect helps `role` in model `kind`.
fn favorable_sign(kind: ModelKind, role: Role) -> f64 {
    match (kind, role) {
        // the offense wants more (and more successful) steal attempts
        (_, Role::Runner) => 1.0,
        // the battery wants more (and better) pickoffs and fewer, worse steals
        (ModelKind::PickoffAttempt | ModelKind::PickoffSuccess, _) => 1.0,
        (ModelKind::StealAttempt | ModelKind::StealSuccess, _) => -1.0,
    }
}

/// Random effects of a hypothetical player at quantile `q` of each model's
/// `Normal(0, sd^2)` random-effect distribution, signed so that larger `q`
/// always favors `role`.
pub fn percentile_profile(set: &ModelSet, role: ProfileRole, q: f64) -> Result<SyntheticPlayers> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Input(format!("quantile {q} must lie in (0, 1)")));
    }
    let z = standard_normal_quantile(q);
    let mut out = SyntheticPlayers::default();
    for &r in role.roles() {
        let mut found = false;
        for m in set.models() {
            if let Some(sd) = m.random_effect_sd(r) {
                found = true;
                out.set_effect(m.kind, r, favorable_sign(m.kind, r) * z * sd);
            }
        }
        if !found {
            return Err(Error::Input(format!("no model has a {} random effect", r.name())));
        }
    }
    Ok(out)
}

/// Inverse of the standard normal CDF, by bisection on `erfc`.
pub fn standard_normal_quantile(q: f64) -> f64 {
    if q == 0.5 {
        return 0.0;
    }
    if q < 0.5 {
        return -standard_normal_quantile(1.0 - q);
    }
    let cdf = |x: f64| 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if libm::fabs(cdf(lo) - q) < libm::fabs(cdf(hi) - q) {
        lo
    } else {
        hi
    }
}

/// Convenience for building fixed-effect maps in code.
pub fn fixed_terms(entries: &[(FixedTerm, f64)]) -> BTreeMap<FixedTerm, f64> {
    entries.iter().copied().collect()
}

/// Player ids present in any model, per role.
pub fn known_players(set: &ModelSet, role: Role) -> Vec<&str> {
    let mut ids: Vec<&str> = set
        .models()
        .iter()
        .filter_map(|m| m.re.get(&role))
        .flat_map(|e| e.keys().map(String::as_str))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}
