//! Monte Carlo rollouts and synthetic play-by-play generation.
//!
//! Randomness comes from ChaCha8 seeded once per run, with inning `i` drawn
//! from stream `i`, so results do not depend on thread scheduling.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::StochasticGame;
use crate::models::{Matchup, ModelSet, PlayContext};
use crate::par::{map_indices, pairwise_sum};
use crate::records::{PlayRecord, PostState};
use crate::solver::{MixedRunnerPolicy, PitcherPolicy, RunnerPolicy};
use crate::state::{
    third_disengagement, BaseState, Count, GameState, LeadGrid, PlayState, RunnerOutcome,
    NUM_PLAY_STATES, NUM_STATES,
};
use crate::transitions::{ConditionalRow, ConditionalRows, ConditionalTransitions, TransitionKernel};

/// Plays after which an inning is cut off.
pub const PLAY_CAP: usize = 10_000;
/// Truncation rate above which the kernel is suspected of not halting.
pub const TRUNCATION_ALARM: f64 = 1e-6;

fn inning_rng(seed: u64, inning: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(inning);
    rng
}

/// Index drawn from unnormalized nonnegative weights.
fn sample_index<I: IntoIterator<Item = f64>>(rng: &mut ChaCha8Rng, weights: I) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.into_iter().enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last
}

/// Policies a rollout can follow.
#[derive(Debug, Clone, Copy)]
pub enum RolloutPolicy<'a> {
    Pure(&'a RunnerPolicy, &'a PitcherPolicy),
    Mixed(&'a MixedRunnerPolicy, &'a PitcherPolicy),
}

impl RolloutPolicy<'_> {
    fn check(&self, game: &StochasticGame) -> Result<()> {
        match self {
            RolloutPolicy::Pure(r, p) => r.check(game).and(p.check(game)),
            RolloutPolicy::Mixed(r, p) => r.check(game).and(p.check(game)),
        }
    }

    fn row(&self, game: &StochasticGame, s: usize, rng: &mut ChaCha8Rng) -> usize {
        let base = game.runner_actions(s).start;
        let (a, pitcher) = match self {
            RolloutPolicy::Pure(r, p) => (base + r.action(s), p),
            RolloutPolicy::Mixed(r, p) => {
                let mix = &r.0[s];
                let k = if mix.len() == 1 { 0 } else { sample_index(rng, mix.iter().map(|x| x.1)) };
                (base + mix[k].0, p)
            }
        };
        game.pitcher_rows(a).start + pitcher.response(a)
    }
}

/// One simulated inning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inning {
    pub runs: u32,
    pub plays: u32,
    pub truncated: bool,
}

/// Follow the policies from `start` until the terminal state or the play cap.
pub fn simulate_inning(
    game: &StochasticGame,
    start: usize,
    policy: RolloutPolicy<'_>,
    rng: &mut ChaCha8Rng,
) -> Inning {
    let t = game.terminal();
    let (mut s, mut runs, mut plays) = (start, 0.0_f64, 0u32);
    while s != t {
        if plays as usize >= PLAY_CAP {
            return Inning { runs: runs as u32, plays, truncated: true };
        }
        let row = policy.row(game, s, rng);
        let (to, p, r) = game.row(row);
        let k = if to.len() == 1 { 0 } else { sample_index(rng, p.iter().copied()) };
        runs += r[k];
        s = to[k] as usize;
        plays += 1;
    }
    Inning { runs: runs as u32, plays, truncated: false }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(innings)`.
    pub std_error: f64,
    pub innings: u64,
    pub max_plays: u32,
    pub truncated: u64,
    /// Set when the truncation rate exceeds [`TRUNCATION_ALARM`].
    pub halting_suspect: bool,
}

/// Mean runs over `n` innings from `start`. Reproducible for a given seed.
pub fn monte_carlo_value(
    game: &StochasticGame,
    start: usize,
    policy: RolloutPolicy<'_>,
    n: u64,
    seed: u64,
) -> Result<RolloutResult> {
    if n == 0 {
        return Err(Error::Contract("need at least one inning".into()));
    }
    game.certificate()?;
    policy.check(game)?;
    let innings = map_indices(n as usize, |i| simulate_inning(game, start, policy, &mut inning_rng(seed, i as u64)));
    let runs: Vec<f64> = innings.iter().map(|x| x.runs as f64).collect();
    let mean = pairwise_sum(&runs) / n as f64;
    let sq: Vec<f64> = runs.iter().map(|r| (r - mean) * (r - mean)).collect();
    let var = if n > 1 { pairwise_sum(&sq) / (n - 1) as f64 } else { 0.0 };
    let truncated = innings.iter().filter(|x| x.truncated).count() as u64;
    Ok(RolloutResult {
        mean,
        std_error: libm::sqrt(var / n as f64),
        innings: n,
        max_plays: innings.iter().map(|x| x.plays).max().unwrap_or(0),
        truncated,
        halting_suspect: truncated as f64 / n as f64 > TRUNCATION_ALARM,
    })
}

/// Pitch result probabilities, in the order ball, strike, foul, in play,
/// hit by pitch.
pub type PitchProbabilities = [f64; 5];
/// Ball-in-play results: out (runners hold), single, double, triple, home run.
pub type InPlayProbabilities = [f64; 5];

/// Pitch-by-pitch plate appearance model used as generator ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchModel {
    /// Indexed by `Count::index`.
    pub by_count: [PitchProbabilities; 12],
    pub in_play: InPlayProbabilities,
}

impl Default for PitchModel {
    fn default() -> Self {
        let mut by_count = [[0.0; 5]; 12];
        for c in Count::all() {
            let (b, s) = (c.balls() as f64, c.strikes() as f64);
            let ball = 0.37 - 0.025 * b - 0.03 * s;
            let strike = 0.17 - 0.02 * s + 0.01 * b;
            let foul = 0.17 + 0.04 * s;
            let hbp = 0.01;
            by_count[c.index()] = [ball, strike, foul, 1.0 - ball - strike - foul - hbp, hbp];
        }
        PitchModel { by_count, in_play: [0.68, 0.2, 0.06, 0.005, 0.055] }
    }
}

impl PitchModel {
    pub fn validate(&self) -> Result<()> {
        let rows = self.by_count.iter().chain(core::iter::once(&self.in_play));
        for row in rows {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || libm::fabs(total - 1.0) > 1e-12 {
                return Err(Error::Input(format!("pitch model row {row:?} is not a distribution")));
            }
        }
        Ok(())
    }
}

/// Exact conditional transitions implied by a [`PitchModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub pitch: PitchModel,
}

#[derive(Default)]
struct Successors {
    out: BTreeMap<GameState, f64>,
}

impl Successors {
    fn add(&mut self, to: GameState, p: f64) {
        if p > 0.0 {
            *self.out.entry(to).or_insert(0.0) += p;
        }
    }

    /// A new plate appearance with the given bases and outs.
    fn new_batter(&mut self, bases: BaseState, outs: u8, p: f64) {
        let to = if outs >= 3 {
            GameState::Penultimate(0)
        } else {
            GameState::Play(PlayState::new(bases, Count::FRESH, 0, outs).expect("valid state"))
        };
        self.add(to, p);
    }

    /// Same plate appearance continues.
    fn continue_pa(&mut self, bases: BaseState, count: Count, d: u8, outs: u8, p: f64) {
        let t = PlayState::new(bases, count, d, outs).expect("valid state");
        self.add(GameState::Play(t), p);
    }

    fn into_row(self) -> ConditionalRow {
        ConditionalRow::exact(self.out.into_iter().collect())
    }
}

impl GroundTruth {
    pub fn new(pitch: PitchModel) -> Result<Self> {
        pitch.validate()?;
        Ok(GroundTruth { pitch })
    }

    /// Any pitch, with the runners (if any) not running.
    fn pitch_outcomes(&self, sx: &mut Successors, bases: BaseState, count: Count, d: u8, outs: u8, w: f64) {
        let [ball, strike, foul, in_play, hbp] = self.pitch.by_count[count.index()];
        self.taken_pitch(sx, bases, count, d, outs, w, ball, strike);
        let fouled = count.shifted(0, 1).unwrap_or(count);
        sx.continue_pa(bases, fouled, d, outs, w * foul);
        let (forced, _) = bases.force_batter_to_first();
        sx.new_batter(forced, outs, w * hbp);
        let [out, single, double, triple, hr] = self.pitch.in_play;
        let w = w * in_play;
        sx.new_batter(bases, outs + 1, w * out);
        let (b1, _) = bases.advance_all();
        sx.new_batter(BaseState { b1: true, ..b1 }, outs, w * single);
        let (b2, _) = b1.advance_all();
        sx.new_batter(BaseState { b2: true, ..b2 }, outs, w * double);
        sx.new_batter(BaseState::new(false, false, true), outs, w * triple);
        sx.new_batter(BaseState::EMPTY, outs, w * hr);
    }

    /// A pitch not put in play: ball with weight `ball`, strike with `strike`.
    #[allow(clippy::too_many_arguments)]
    fn taken_pitch(&self, sx: &mut Successors, bases: BaseState, count: Count, d: u8, outs: u8, w: f64, ball: f64, strike: f64) {
        match count.shifted(1, 0) {
            Some(c) => sx.continue_pa(bases, c, d, outs, w * ball),
            None => sx.new_batter(bases.force_batter_to_first().0, outs, w * ball),
        }
        match count.shifted(0, 1) {
            Some(c) => sx.continue_pa(bases, c, d, outs, w * strike),
            None => sx.new_batter(bases, outs + 1, w * strike),
        }
    }

    /// A steal attempt happens on a taken ball or strike.
    fn steal_pitch(&self, sx: &mut Successors, bases: BaseState, count: Count, d: u8, outs: u8) {
        let [ball, strike, ..] = self.pitch.by_count[count.index()];
        let total = ball + strike;
        self.taken_pitch(sx, bases, count, d, outs, 1.0, ball / total, strike / total);
    }
}

impl ConditionalTransitions for GroundTruth {
    fn agency_row(&self, s: PlayState, r: RunnerOutcome) -> Result<ConditionalRow> {
        if !s.has_agency() {
            return Err(Error::Contract(format!("{s} has no runner alone on first")));
        }
        let mut sx = Successors::default();
        let (count, d, outs) = (s.count, s.disengagements(), s.outs());
        let next_d = (d + 1).min(2);
        match r {
            RunnerOutcome::PickoffSuccess if outs == 2 => sx.add(GameState::Penultimate(0), 1.0),
            RunnerOutcome::PickoffSuccess => {
                let t = PlayState::new(BaseState::EMPTY, count, next_d, outs + 1)?;
                sx.add(GameState::Play(t), 1.0);
            }
            RunnerOutcome::PickoffFail if d == 2 => sx.add(third_disengagement(s), 1.0),
            RunnerOutcome::PickoffFail => sx.add(GameState::Play(s.with_disengagements(next_d)?), 1.0),
            RunnerOutcome::StealSuccess => {
                self.steal_pitch(&mut sx, BaseState::new(false, true, false), count, 0, outs)
            }
            RunnerOutcome::StealFail if outs == 2 => sx.add(GameState::Penultimate(0), 1.0),
            RunnerOutcome::StealFail => self.steal_pitch(&mut sx, BaseState::EMPTY, count, d, outs + 1),
            RunnerOutcome::NoAction => self.pitch_outcomes(&mut sx, s.bases, count, d, outs, 1.0),
        }
        Ok(sx.into_row())
    }

    fn no_agency_row(&self, s: PlayState) -> Result<ConditionalRow> {
        let mut sx = Successors::default();
        self.pitch_outcomes(&mut sx, s.bases, s.count, s.disengagements(), s.outs(), 1.0);
        Ok(sx.into_row())
    }
}

/// Behavioral settings of the synthetic league.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub innings: u64,
    pub seed: u64,
    pub grid: LeadGrid,
    /// Mean lead at 0, 1 and 2 prior disengagements.
    pub lead_means: [f64; 3],
    /// Spread of the (discretized normal) lead distribution; 0 for deterministic.
    pub lead_sd: f64,
    pub pitch: PitchModel,
    /// When false, nobody attempts a pickoff or a steal.
    pub run_game: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            innings: 100_000,
            seed: 1,
            grid: LeadGrid::default(),
            lead_means: [9.6, 10.3, 11.0],
            lead_sd: 0.5,
            pitch: PitchModel::default(),
            run_game: true,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.pitch.validate()?;
        if self.lead_means.iter().any(|m| !(0.0..=20.0).contains(m)) || !(self.lead_sd >= 0.0) {
            return Err(Error::Input("lead means must lie in [0, 20] and the spread be nonnegative".into()));
        }
        Ok(())
    }

    /// Lead distribution over grid indices at `d` prior disengagements.
    pub fn lead_distribution(&self, d: u8) -> Vec<(usize, f64)> {
        let mu = self.lead_means[d as usize];
        if self.lead_sd == 0.0 {
            return vec![(self.grid.nearest_index(mu), 1.0)];
        }
        let w: Vec<f64> = self
            .grid
            .values()
            .map(|x| {
                let z = (x - mu) / self.lead_sd;
                libm::exp(-0.5 * z * z)
            })
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter()
            .enumerate()
            .filter(|&(_, x)| x / total > 1e-15)
            .map(|(i, x)| (i, x / total))
            .collect::<Vec<_>>()
            .renormalized()
    }

    /// The behavioral lead policy on a kernel with this config's grid.
    pub fn behavior_policy(&self, kernel: &TransitionKernel) -> Result<MixedRunnerPolicy> {
        if kernel.grid != self.grid {
            return Err(Error::Contract("kernel grid differs from the generator grid".into()));
        }
        let dists: Vec<_> = (0..3).map(|d| self.lead_distribution(d)).collect();
        Ok(MixedRunnerPolicy(
            (0..NUM_STATES)
                .map(|s| match GameState::from_index(s).and_then(GameState::as_play) {
                    Some(p) if p.has_agency() => dists[p.disengagements() as usize].clone(),
                    _ => vec![(0, 1.0)],
                })
                .collect(),
        ))
    }
}

trait Renormalized {
    fn renormalized(self) -> Self;
}

impl Renormalized for Vec<(usize, f64)> {
    fn renormalized(mut self) -> Self {
        let total: f64 = self.iter().map(|x| x.1).sum();
        for x in &mut self {
            x.1 /= total;
        }
        self
    }
}

/// Simulate innings under the behavioral policies and pass every play to
/// `sink` in inning order. Innings are simulated in parallel batches when the
/// `parallel` feature is on; output is identical either way.
pub fn generate_synthetic_plays<F>(cfg: &GeneratorConfig, models: &ModelSet, mut sink: F) -> Result<u64>
where
    F: FnMut(PlayRecord) -> Result<()>,
{
    cfg.validate()?;
    let truth = GroundTruth::new(cfg.pitch.clone())?;
    let rows = ConditionalRows::collect(&truth)?;
    let matchup = Matchup::average();
    let speed = models.covariate_means.sprint_speed;
    let arm = models.covariate_means.arm_strength;
    // (lead index, weight) per disengagement count
    let leads: Vec<Vec<(usize, f64)>> = (0..3).map(|d| cfg.lead_distribution(d)).collect();
    // outcome model probabilities per agency state and grid lead, computed lazily
    let mut probs: BTreeMap<(usize, usize), [f64; 5]> = BTreeMap::new();
    for s in (0..NUM_PLAY_STATES).filter_map(PlayState::from_index).filter(|s| s.has_agency()) {
        let ctx = PlayContext::new(s, &matchup);
        for &(i, _) in &leads[s.disengagements() as usize] {
            let p = models.probabilities(&ctx, cfg.grid.value(i))?;
            let (a, ps, sa, ss) = (p.pickoff_attempt, p.pickoff_success, p.steal_attempt, p.steal_success);
            let dist = if cfg.run_game {
                [a * ps, a * (1.0 - ps), (1.0 - a) * sa * ss, (1.0 - a) * sa * (1.0 - ss), (1.0 - a) * (1.0 - sa)]
            } else {
                [0.0, 0.0, 0.0, 0.0, 1.0]
            };
            probs.insert((s.index(), i), dist);
        }
    }
    let one_inning = |inning: u64| -> Vec<PlayRecord> {
        let mut rng = inning_rng(cfg.seed, inning);
        let mut out = Vec::new();
        let mut s = PlayState::START;
        loop {
            let (row, outcome, lead) = if s.has_agency() {
                let dist = &leads[s.disengagements() as usize];
                let k = if dist.len() == 1 { 0 } else { sample_index(&mut rng, dist.iter().map(|x| x.1)) };
                let li = dist[k].0;
                let p = &probs[&(s.index(), li)];
                let r = RunnerOutcome::ALL[sample_index(&mut rng, p.iter().copied())];
                (rows.agency(s, r), Some(r), Some(cfg.grid.value(li)))
            } else {
                (rows.no_agency(s), None, None)
            };
            let k = sample_index(&mut rng, row.entries.iter().map(|e| e.1));
            let next = row.entries[k].0;
            let post = match next {
                GameState::Play(t) => PostState::Play(t),
                GameState::Penultimate(runs) => PostState::InningEnd { runs },
                GameState::Terminal => unreachable!("plays never jump straight to the terminal state"),
            };
            let mut rec = PlayRecord::new(s, post, outcome);
            rec.lead = lead;
            rec.sprint_speed = Some(speed);
            rec.arm_strength = Some(arm);
            out.push(rec);
            match post {
                PostState::Play(t) if out.len() < PLAY_CAP => s = t,
                _ => break,
            }
        }
        out
    };
    const BATCH: u64 = 8192;
    let mut emitted = 0;
    let mut start = 0;
    while start < cfg.innings {
        let n = BATCH.min(cfg.innings - start);
        let batch = map_indices(n as usize, |i| one_inning(start + i as u64));
        for rec in batch.into_iter().flatten() {
            sink(rec)?;
            emitted += 1;
        }
        start += n;
    }
    Ok(emitted)
}

/// Leads at 0, 1 and 2 prior disengagements for one `(count, outs)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFootCell {
    pub count: Count,
    pub outs: u8,
    pub leads: [f64; 3],
}

impl TwoFootCell {
    pub fn increments(&self) -> [f64; 2] {
        [self.leads[1] - self.leads[0], self.leads[2] - self.leads[1]]
    }
}

/// Per-disengagement lead summary of a runner policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFootReport {
    pub cells: Vec<TwoFootCell>,
    /// Mean increase from 0 to 1 and from 1 to 2 prior disengagements.
    pub mean_increments: [f64; 2],
}

impl TwoFootReport {
    /// Mean of both increments over all cells.
    pub fn mean_increment(&self) -> f64 {
        0.5 * (self.mean_increments[0] + self.mean_increments[1])
    }

    /// Whether the lead never shrinks with more disengagements.
    pub fn non_decreasing(&self) -> bool {
        self.cells.iter().all(|c| c.increments().iter().all(|&x| x >= 0.0))
    }
}

/// Lead chosen by `runner` in agency state `s`, on a kernel built over `grid`.
pub fn policy_lead(grid: &LeadGrid, runner: &RunnerPolicy, s: PlayState) -> f64 {
    grid.value(runner.action(s.index()))
}

pub fn two_foot_rule_report(grid: &LeadGrid, runner: &RunnerPolicy) -> Result<TwoFootReport> {
    if runner.0.len() != NUM_STATES {
        return Err(Error::Contract("runner policy is not over the canonical states".into()));
    }
    let mut cells = Vec::new();
    for count in Count::all() {
        for outs in 0..3 {
            let mut leads = [0.0; 3];
            for (d, lead) in leads.iter_mut().enumerate() {
                let s = PlayState::new(BaseState::FIRST_ONLY, count, d as u8, outs)?;
                let a = runner.action(s.index());
                if a >= grid.len() {
                    return Err(Error::Contract(format!("lead index {a} is off the grid")));
                }
                *lead = grid.value(a);
            }
            cells.push(TwoFootCell { count, outs, leads });
        }
    }
    let n = cells.len() as f64;
    let mut mean_increments = [0.0; 2];
    for c in &cells {
        let inc = c.increments();
        mean_increments[0] += inc[0] / n;
        mean_increments[1] += inc[1] / n;
    }
    Ok(TwoFootReport { cells, mean_increments })
}
