//! Value iteration, policy iteration and policy evaluation for
//! [`StochasticGame`]s under the undiscounted total-reward criterion.
//!
//! The runner maximizes, the pitcher minimizes after seeing the runner's
//! action. Policies are stationary and deterministic. Ties go to the lowest
//! index: the shortest lead for the runner, `Pitch` for the pitcher.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::game::{HaltingReport, StochasticGame};
use crate::par::map_indices;

/// Values within this distance of the best are treated as tied.
pub const TIE_EPS: f64 = 1e-12;
/// Allowed per-step decrease of policy-iteration values.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-10, max_iters: 100_000 }
    }
}

impl SolveOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::Contract("tolerance must be positive and max_iters at least 1".into()));
        }
        Ok(())
    }
}

/// Expected remaining runs per state, canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn zeros(n: usize) -> Self {
        ValueFunction(vec![0.0; n])
    }

    pub fn get(&self, s: usize) -> f64 {
        self.0[s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        sup_diff(&self.0, &other.0)
    }
}

/// Local runner action index chosen in each state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunnerPolicy(pub Vec<usize>);

impl RunnerPolicy {
    /// The first action in every state (the shortest lead).
    pub fn first(game: &StochasticGame) -> Self {
        RunnerPolicy(vec![0; game.num_states()])
    }

    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn check(&self, game: &StochasticGame) -> Result<()> {
        if self.0.len() != game.num_states()
            || self.0.iter().enumerate().any(|(s, &a)| a >= game.runner_actions(s).len())
        {
            return Err(Error::Contract("runner policy does not fit the game".into()));
        }
        Ok(())
    }
}

/// Local pitcher row chosen against every global runner action, including
/// actions the runner's policy never takes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PitcherPolicy(pub Vec<u8>);

impl PitcherPolicy {
    pub fn first(game: &StochasticGame) -> Self {
        PitcherPolicy(vec![0; game.num_runner_actions()])
    }

    pub fn response(&self, action: usize) -> usize {
        self.0[action] as usize
    }

    pub fn check(&self, game: &StochasticGame) -> Result<()> {
        if self.0.len() != game.num_runner_actions()
            || self
                .0
                .iter()
                .enumerate()
                .any(|(a, &p)| p as usize >= game.pitcher_rows(a).len())
        {
            return Err(Error::Contract("pitcher policy does not fit the game".into()));
        }
        Ok(())
    }
}

/// A runner that randomizes over its actions: `(local action, weight)` per state.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRunnerPolicy(pub Vec<Vec<(usize, f64)>>);

impl MixedRunnerPolicy {
    pub fn check(&self, game: &StochasticGame) -> Result<()> {
        if self.0.len() != game.num_states() {
            return Err(Error::Contract("mixed policy does not fit the game".into()));
        }
        for (s, mix) in self.0.iter().enumerate() {
            let n = game.runner_actions(s).len();
            let total: f64 = mix.iter().map(|&(_, w)| w).sum();
            if mix.is_empty() || mix.iter().any(|&(a, w)| a >= n || !(w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::Contract(format!("mixed policy at state {s} is not a distribution")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Final sup-norm successive difference.
    pub residual: f64,
    pub residual_history: Vec<f64>,
    /// `exp` of the least-squares slope of `ln residual` over the second
    /// half of the history.
    pub decay_rate: Option<f64>,
    /// Bound on the distance to the fixed point from the halting certificate.
    pub error_bound: Option<f64>,
    /// Filled in by callers that can read a clock.
    pub wall_time_secs: Option<f64>,
}

impl SolveReport {
    fn from_history(history: Vec<f64>, tol: f64, cert: Option<&HaltingReport>) -> Self {
        let residual = history.last().copied().unwrap_or(0.0);
        SolveReport {
            iterations: history.len(),
            converged: residual < tol,
            residual,
            decay_rate: fit_decay_rate(&history),
            error_bound: cert.map(|c| c.error_bound(residual)),
            residual_history: history,
            wall_time_secs: None,
        }
    }
}

/// Geometric rate of a residual sequence, from its second half.
pub fn fit_decay_rate(history: &[f64]) -> Option<f64> {
    let start = history.len() / 2;
    let pts: Vec<(f64, f64)> = history[start..]
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r > 0.0 && r.is_finite())
        .map(|(i, &r)| ((start + i) as f64, libm::log(r)))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(libm::exp(sxy / sxx))
}

/// Values with matching policies and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: ValueFunction,
    pub runner: RunnerPolicy,
    pub pitcher: PitcherPolicy,
    pub report: SolveReport,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| libm::fabs(x - y)).fold(0.0, f64::max)
}

fn certified(game: &StochasticGame) -> Result<&HaltingReport> {
    game.certificate()
}

fn check_values(game: &StochasticGame, v: &[f64]) -> Result<()> {
    if v.len() != game.num_states() {
        return Err(Error::Contract("value function has the wrong length".into()));
    }
    if v[game.terminal()] != 0.0 {
        return Err(Error::Contract("value of the terminal state must be 0".into()));
    }
    Ok(())
}

/// Pitcher's best row against runner action `a`: `(local row, value)`.
fn min_row(game: &StochasticGame, a: usize, v: &[f64]) -> (usize, f64) {
    let rows = game.pitcher_rows(a);
    let mut best = (0, game.row_value(rows.start, v));
    for (k, row) in rows.enumerate().skip(1) {
        let q = game.row_value(row, v);
        if q < best.1 - TIE_EPS {
            best.0 = k;
        }
        best.1 = best.1.min(q);
    }
    best
}

/// Runner's best action in `s` against a best-responding pitcher. The index
/// moves only when a value beats the running best by more than `TIE_EPS`.
fn max_min(game: &StochasticGame, s: usize, v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, a) in game.runner_actions(s).enumerate() {
        let q = min_row(game, a, v).1;
        if q > best.1 + TIE_EPS || k == 0 {
            best.0 = k;
        }
        best.1 = best.1.max(q);
    }
    best
}

fn maximin_sweep(game: &StochasticGame, v: &[f64]) -> Vec<f64> {
    let t = game.terminal();
    map_indices(game.num_states(), |s| if s == t { 0.0 } else { max_min(game, s, v).1 })
}

/// One application of the maximin Bellman operator.
pub fn bellman_maximin_update(game: &StochasticGame, v: &ValueFunction) -> Result<ValueFunction> {
    certified(game)?;
    check_values(game, &v.0)?;
    Ok(ValueFunction(maximin_sweep(game, &v.0)))
}

fn iterate<F>(game: &StochasticGame, v0: Vec<f64>, opts: &SolveOptions, step: F) -> Result<(Vec<f64>, SolveReport)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    opts.check()?;
    let cert = certified(game)?;
    check_values(game, &v0)?;
    let mut v = v0;
    let mut history = Vec::new();
    for _ in 0..opts.max_iters {
        let next = step(&v);
        let r = sup_diff(&next, &v);
        v = next;
        history.push(r);
        if r < opts.tol {
            break;
        }
    }
    let report = SolveReport::from_history(history, opts.tol, Some(cert));
    Ok((v, report))
}

/// Maximin value iteration from `V = 0`; stops when successive iterates
/// differ by less than `tol` in sup norm. Running out of iterations returns
/// the partial result with `report.converged == false`.
pub fn value_iteration(game: &StochasticGame, opts: &SolveOptions) -> Result<(ValueFunction, SolveReport)> {
    value_iteration_from(game, ValueFunction::zeros(game.num_states()), opts)
}

pub fn value_iteration_from(
    game: &StochasticGame,
    v0: ValueFunction,
    opts: &SolveOptions,
) -> Result<(ValueFunction, SolveReport)> {
    let (v, report) = iterate(game, v0.0, opts, |v| maximin_sweep(game, v))?;
    Ok((ValueFunction(v), report))
}

/// Greedy maximin policies for `v`.
pub fn extract_equilibrium_policies(game: &StochasticGame, v: &ValueFunction) -> Result<(RunnerPolicy, PitcherPolicy)> {
    check_values(game, &v.0)?;
    let runner = map_indices(game.num_states(), |s| max_min(game, s, &v.0).0);
    let pitcher = map_indices(game.num_runner_actions(), |a| min_row(game, a, &v.0).0 as u8);
    Ok((RunnerPolicy(runner), PitcherPolicy(pitcher)))
}

/// Value iteration followed by policy extraction.
pub fn solve(game: &StochasticGame, opts: &SolveOptions) -> Result<Solution> {
    let (values, report) = value_iteration(game, opts)?;
    let (runner, pitcher) = extract_equilibrium_policies(game, &values)?;
    Ok(Solution { values, runner, pitcher, report })
}

fn best_response_sweep(game: &StochasticGame, runner: &RunnerPolicy, v: &[f64]) -> Vec<f64> {
    let t = game.terminal();
    map_indices(game.num_states(), |s| {
        if s == t {
            return 0.0;
        }
        let a = game.runner_actions(s).start + runner.action(s);
        min_row(game, a, v).1
    })
}

/// The pitcher's optimal reply to a fixed runner policy and the resulting
/// values `V^{pi_R} = min_{pi_P} V^{pi_R, pi_P}`.
pub fn pitcher_best_response(
    game: &StochasticGame,
    runner: &RunnerPolicy,
    opts: &SolveOptions,
) -> Result<(PitcherPolicy, ValueFunction, SolveReport)> {
    pitcher_best_response_from(game, runner, ValueFunction::zeros(game.num_states()), opts)
}

pub fn pitcher_best_response_from(
    game: &StochasticGame,
    runner: &RunnerPolicy,
    v0: ValueFunction,
    opts: &SolveOptions,
) -> Result<(PitcherPolicy, ValueFunction, SolveReport)> {
    runner.check(game)?;
    let (v, report) = iterate(game, v0.0, opts, |v| best_response_sweep(game, runner, v))?;
    let pitcher = map_indices(game.num_runner_actions(), |a| min_row(game, a, &v).0 as u8);
    Ok((PitcherPolicy(pitcher), ValueFunction(v), report))
}

/// Policy iteration: alternate the pitcher's best response with greedy runner
/// improvement, starting from the first action everywhere. Values are
/// checked to be non-decreasing across iterations.
///
/// The report's history holds the largest per-state improvement of each round.
pub fn policy_iteration(game: &StochasticGame, opts: &SolveOptions) -> Result<(Solution, Vec<ValueFunction>)> {
    policy_iteration_from(game, RunnerPolicy::first(game), opts)
}

pub fn policy_iteration_from(
    game: &StochasticGame,
    start: RunnerPolicy,
    opts: &SolveOptions,
) -> Result<(Solution, Vec<ValueFunction>)> {
    opts.check()?;
    start.check(game)?;
    let inner = SolveOptions { tol: opts.tol * 0.1, max_iters: opts.max_iters };
    let mut runner = start;
    let mut v = ValueFunction::zeros(game.num_states());
    let mut trajectory: Vec<ValueFunction> = Vec::new();
    let mut history = Vec::new();
    let mut pitcher;
    loop {
        let (p, v_new, rep) = pitcher_best_response_from(game, &runner, v.clone(), &inner)?;
        if !rep.converged {
            return Err(Error::NotConverged { iterations: rep.iterations, residual: rep.residual });
        }
        if let Some(prev) = trajectory.last() {
            if let Some(s) = (0..v_new.0.len()).find(|&s| v_new.0[s] < prev.0[s] - MONOTONE_SLACK) {
                return Err(Error::Invariant(format!(
                    "policy iteration value fell at state {s}: {} -> {}",
                    prev.0[s], v_new.0[s]
                )));
            }
        }
        pitcher = p;
        v = v_new;
        trajectory.push(v.clone());
        let t = game.terminal();
        let improved: Vec<(usize, f64)> = map_indices(game.num_states(), |s| {
            if s == t {
                return (0, 0.0);
            }
            let (best, best_val) = max_min(game, s, &v.0);
            let cur = runner.action(s);
            let cur_val = min_row(game, game.runner_actions(s).start + cur, &v.0).1;
            if cur_val >= best_val - TIE_EPS {
                (cur, best_val - v.0[s])
            } else {
                (best, best_val - v.0[s])
            }
        });
        let gain = improved.iter().map(|x| x.1).fold(0.0, f64::max);
        let next = RunnerPolicy(improved.iter().map(|x| x.0).collect());
        history.push(gain);
        if next == runner || gain < opts.tol || history.len() >= opts.max_iters {
            let converged = next == runner || gain < opts.tol;
            let mut report = SolveReport::from_history(history, f64::INFINITY, game.halting_report());
            report.converged = converged;
            report.decay_rate = None;
            return Ok((Solution { values: v, runner, pitcher, report }, trajectory));
        }
        runner = next;
    }
}

fn pair_rows(game: &StochasticGame, runner: &RunnerPolicy, pitcher: &PitcherPolicy) -> Vec<usize> {
    (0..game.num_states())
        .map(|s| {
            let a = game.runner_actions(s).start + runner.action(s);
            game.pitcher_rows(a).start + pitcher.response(a)
        })
        .collect()
}

/// Value of a fixed policy pair by iterating its evaluation operator.
pub fn evaluate_policy_pair(
    game: &StochasticGame,
    runner: &RunnerPolicy,
    pitcher: &PitcherPolicy,
    opts: &SolveOptions,
) -> Result<(ValueFunction, SolveReport)> {
    runner.check(game)?;
    pitcher.check(game)?;
    let rows = pair_rows(game, runner, pitcher);
    let t = game.terminal();
    let (v, report) = iterate(game, vec![0.0; game.num_states()], opts, |v| {
        map_indices(game.num_states(), |s| if s == t { 0.0 } else { game.row_value(rows[s], v) })
    })?;
    Ok((ValueFunction(v), report))
}

/// Value of a fixed policy pair by solving `(I - P) v = r` over the
/// non-terminal states with a dense LU factorization.
pub fn evaluate_policy_pair_direct(
    game: &StochasticGame,
    runner: &RunnerPolicy,
    pitcher: &PitcherPolicy,
) -> Result<ValueFunction> {
    runner.check(game)?;
    pitcher.check(game)?;
    certified(game)?;
    let rows = pair_rows(game, runner, pitcher);
    solve_chain(game, |s| vec![(rows[s], 1.0)])
}

/// Solve the linear system for a Markov chain whose row in state `s` is the
/// given mixture of game rows.
fn solve_chain<F>(game: &StochasticGame, rows_of: F) -> Result<ValueFunction>
where
    F: Fn(usize) -> Vec<(usize, f64)>,
{
    use nalgebra::{DMatrix, DVector};
    let n = game.num_states();
    let t = game.terminal();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in 0..n {
        if s == t {
            continue;
        }
        for (row, w) in rows_of(s) {
            b[s] += w * game.row_reward(row);
            let (to, p, _) = game.row(row);
            for (&j, &pr) in to.iter().zip(p) {
                if j as usize != t {
                    a[(s, j as usize)] -= w * pr;
                }
            }
        }
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Kernel("policy evaluation system is singular".into()))?;
    Ok(ValueFunction(x.iter().copied().collect()))
}

/// Value of a randomizing runner against a fixed pitcher policy.
pub fn evaluate_mixed_runner(
    game: &StochasticGame,
    runner: &MixedRunnerPolicy,
    pitcher: &PitcherPolicy,
    opts: &SolveOptions,
) -> Result<(ValueFunction, SolveReport)> {
    runner.check(game)?;
    pitcher.check(game)?;
    let t = game.terminal();
    let (v, report) = iterate(game, vec![0.0; game.num_states()], opts, |v| {
        map_indices(game.num_states(), |s| {
            if s == t {
                return 0.0;
            }
            let base = game.runner_actions(s).start;
            runner.0[s]
                .iter()
                .map(|&(a, w)| {
                    let a = base + a;
                    w * game.row_value(game.pitcher_rows(a).start + pitcher.response(a), v)
                })
                .sum()
        })
    })?;
    Ok((ValueFunction(v), report))
}

/// Direct linear solve for a randomizing runner.
pub fn evaluate_mixed_runner_direct(
    game: &StochasticGame,
    runner: &MixedRunnerPolicy,
    pitcher: &PitcherPolicy,
) -> Result<ValueFunction> {
    runner.check(game)?;
    pitcher.check(game)?;
    certified(game)?;
    solve_chain(game, |s| {
        let base = game.runner_actions(s).start;
        runner.0[s]
            .iter()
            .map(|&(a, w)| (game.pitcher_rows(base + a).start + pitcher.response(base + a), w))
            .collect()
    })
}

/// Value iteration on a game where every runner action has a single row.
pub fn solve_one_player(game: &StochasticGame, opts: &SolveOptions) -> Result<Solution> {
    if (0..game.num_runner_actions()).any(|a| game.pitcher_rows(a).len() != 1) {
        return Err(Error::Contract("one-player solve needs a single row per runner action".into()));
    }
    solve(game, opts)
}
