//! Finite two-player stochastic games with an absorbing terminal state.
//!
//! Each state offers the runner a list of actions; each runner action offers
//! the pitcher a list of responses, and each response is a sparse probability
//! row over successor states with a reward on every edge. Runner actions and
//! pitcher rows are numbered globally, in state order, so that policies are
//! plain index vectors.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::par::map_indices;

/// Row sums must be within this distance of 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-10;
/// A halting coefficient at or above this value makes a kernel unsolvable.
pub const REFUSAL_THRESHOLD: f64 = 1.0 - 1e-12;

/// One edge of a probability row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub to: u32,
    pub prob: f64,
    pub reward: f64,
}

impl Entry {
    pub fn new(to: usize, prob: f64, reward: f64) -> Self {
        Entry { to: to as u32, prob, reward }
    }
}

/// Rows for one state: `rows[runner_action][pitcher_action]`.
pub type StateBlock = Vec<Vec<Vec<Entry>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGame {
    terminal: usize,
    state_actions: Vec<usize>,
    action_rows: Vec<usize>,
    row_entries: Vec<usize>,
    to: Vec<u32>,
    prob: Vec<f64>,
    reward: Vec<f64>,
    row_reward: Vec<f64>,
    certificate: Option<HaltingReport>,
}

/// Incrementally builds a [`StochasticGame`], one state at a time in index order.
#[derive(Debug)]
pub struct GameBuilder {
    game: StochasticGame,
    n_states: usize,
}

impl GameBuilder {
    pub fn new(n_states: usize, terminal: usize) -> Self {
        GameBuilder {
            game: StochasticGame {
                terminal,
                state_actions: alloc::vec![0],
                action_rows: alloc::vec![0],
                row_entries: alloc::vec![0],
                to: Vec::new(),
                prob: Vec::new(),
                reward: Vec::new(),
                row_reward: Vec::new(),
                certificate: None,
            },
            n_states,
        }
    }

    pub fn states_added(&self) -> usize {
        self.game.state_actions.len() - 1
    }

    /// Append the next state's rows. Entries are merged per successor and
    /// sorted into canonical successor order.
    pub fn push_state(&mut self, block: StateBlock) -> Result<()> {
        let s = self.states_added();
        if s >= self.n_states {
            return Err(Error::Kernel(format!("more than {} states pushed", self.n_states)));
        }
        if block.is_empty() || block.iter().any(Vec::is_empty) {
            return Err(Error::Kernel(format!("state {s} has an empty action set")));
        }
        let g = &mut self.game;
        for pitcher_rows in block {
            for mut row in pitcher_rows {
                row.sort_by_key(|e| e.to);
                let mut merged: Vec<Entry> = Vec::with_capacity(row.len());
                for e in row {
                    if (e.to as usize) >= self.n_states {
                        return Err(Error::Kernel(format!("state {s}: successor {} out of range", e.to)));
                    }
                    if !(e.prob >= 0.0 && e.prob.is_finite() && e.reward.is_finite()) {
                        return Err(Error::Kernel(format!("state {s}: bad entry {e:?}")));
                    }
                    match merged.last_mut() {
                        Some(last) if last.to == e.to => {
                            if last.reward != e.reward {
                                return Err(Error::Kernel(format!(
                                    "state {s}: conflicting rewards to {}",
                                    e.to
                                )));
                            }
                            last.prob += e.prob;
                        }
                        _ if e.prob == 0.0 => {}
                        _ => merged.push(e),
                    }
                }
                let total: f64 = merged.iter().map(|e| e.prob).sum();
                if libm::fabs(total - 1.0) > ROW_SUM_TOLERANCE {
                    return Err(Error::Kernel(format!("state {s}: row sums to {total}")));
                }
                let mut expected = 0.0;
                for e in &merged {
                    g.to.push(e.to);
                    g.prob.push(e.prob);
                    g.reward.push(e.reward);
                    expected += e.prob * e.reward;
                }
                g.row_reward.push(expected);
                g.row_entries.push(g.to.len());
            }
            g.action_rows.push(g.row_reward.len());
        }
        g.state_actions.push(g.action_rows.len() - 1);
        Ok(())
    }

    pub fn build(self) -> Result<StochasticGame> {
        let g = self.game;
        if g.num_states() != self.n_states {
            return Err(Error::Kernel(format!(
                "expected {} states, got {}",
                self.n_states,
                g.num_states()
            )));
        }
        if g.terminal >= self.n_states {
            return Err(Error::Kernel("terminal index out of range".into()));
        }
        let t = g.terminal;
        let acts = g.runner_actions(t);
        let absorbing = acts.len() == 1 && {
            let rows = g.pitcher_rows(acts.start);
            rows.len() == 1 && {
                let (to, p, r) = g.row(rows.start);
                to == [t as u32] && p == [1.0] && r == [0.0]
            }
        };
        if !absorbing {
            return Err(Error::Kernel("terminal state must be absorbing with zero reward".into()));
        }
        Ok(g)
    }
}

impl StochasticGame {
    pub fn num_states(&self) -> usize {
        self.state_actions.len() - 1
    }

    pub fn terminal(&self) -> usize {
        self.terminal
    }

    pub fn num_runner_actions(&self) -> usize {
        self.action_rows.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.row_reward.len()
    }

    pub fn num_entries(&self) -> usize {
        self.to.len()
    }

    /// Global ids of the runner actions available in `state`.
    pub fn runner_actions(&self, state: usize) -> Range<usize> {
        self.state_actions[state]..self.state_actions[state + 1]
    }

    /// Global row ids of the pitcher responses to runner action `action`.
    pub fn pitcher_rows(&self, action: usize) -> Range<usize> {
        self.action_rows[action]..self.action_rows[action + 1]
    }

    /// `(successors, probabilities, rewards)` of one row.
    pub fn row(&self, row: usize) -> (&[u32], &[f64], &[f64]) {
        let r = self.row_entries[row]..self.row_entries[row + 1];
        (&self.to[r.clone()], &self.prob[r.clone()], &self.reward[r])
    }

    pub fn row_entries(&self, row: usize) -> impl Iterator<Item = Entry> + '_ {
        let (to, p, r) = self.row(row);
        to.iter().zip(p).zip(r).map(|((&to, &prob), &reward)| Entry { to, prob, reward })
    }

    /// Expected one-step reward of a row.
    pub fn row_reward(&self, row: usize) -> f64 {
        self.row_reward[row]
    }

    /// `sum_s' p(s') (r(s') + values(s'))`.
    pub fn row_value(&self, row: usize, values: &[f64]) -> f64 {
        let (to, p, _) = self.row(row);
        let mut acc = self.row_reward[row];
        for (&t, &pr) in to.iter().zip(p) {
            acc += pr * values[t as usize];
        }
        acc
    }

    pub fn max_reward(&self) -> f64 {
        self.reward.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_reward(&self) -> f64 {
        self.reward.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Global runner action id of the `local`-th action in `state`.
    pub fn runner_action_id(&self, state: usize, local: usize) -> Option<usize> {
        let r = self.runner_actions(state);
        (local < r.len()).then(|| r.start + local)
    }

    /// The state owning a global runner action id.
    pub fn state_of_action(&self, action: usize) -> usize {
        self.state_actions.partition_point(|&start| start <= action) - 1
    }

    /// Compute the halting report over `horizon` steps and attach it.
    /// Returns the report, or `KernelRefused` if the kernel cannot be solved.
    pub fn certify(&mut self, horizon: usize) -> Result<&HaltingReport> {
        let report = validate_halting(self, horizon)?;
        self.certificate = Some(report);
        self.certificate()
    }

    /// The attached halting report, if the kernel passed validation.
    pub fn certificate(&self) -> Result<&HaltingReport> {
        match &self.certificate {
            None => Err(Error::NotCertified),
            Some(r) if r.refused() => Err(Error::KernelRefused { rho: r.rho, horizon: r.horizon }),
            Some(r) => Ok(r),
        }
    }

    pub fn halting_report(&self) -> Option<&HaltingReport> {
        self.certificate.as_ref()
    }
}

/// Worst-case probability, over all action sequences, that the inning has
/// not ended after `horizon` plays.
#[derive(Debug, Clone, PartialEq)]
pub struct HaltingReport {
    pub horizon: usize,
    pub rho: f64,
    pub per_state: Vec<f64>,
}

impl HaltingReport {
    pub fn refused(&self) -> bool {
        self.rho >= REFUSAL_THRESHOLD
    }

    /// Bound on any policy value: `m * max r / (1 - rho)`.
    pub fn value_bound(&self, max_reward: f64) -> f64 {
        self.horizon as f64 * max_reward / (1.0 - self.rho)
    }

    /// Bound on `|V_k - V*|` given successive-difference residual `residual`.
    /// The `m`-step operator contracts by `rho`, and each step moves at most
    /// `residual`, so the tail sums to at most `m * residual / (1 - rho)`.
    pub fn error_bound(&self, residual: f64) -> f64 {
        self.horizon as f64 * residual / (1.0 - self.rho)
    }
}

/// Backward recursion `rho_j(s) = max_{a_R, a_P} sum_{s' != terminal} p(s') rho_{j-1}(s')`
/// with `rho_0 = 1` off the terminal state. Maximizing over deterministic
/// Markov action choices attains the worst case over all policies.
pub fn validate_halting(game: &StochasticGame, horizon: usize) -> Result<HaltingReport> {
    if horizon == 0 {
        return Err(Error::Contract("halting horizon must be at least 1".into()));
    }
    let n = game.num_states();
    let t = game.terminal();
    let mut rho: Vec<f64> = (0..n).map(|s| if s == t { 0.0 } else { 1.0 }).collect();
    for _ in 0..horizon {
        let prev = rho;
        rho = map_indices(n, |s| {
            if s == t {
                return 0.0;
            }
            let mut worst = 0.0_f64;
            for a in game.runner_actions(s) {
                for row in game.pitcher_rows(a) {
                    let (to, p, _) = game.row(row);
                    let mut alive = 0.0;
                    for (&succ, &pr) in to.iter().zip(p) {
                        alive += pr * prev[succ as usize];
                    }
                    worst = worst.max(alive);
                }
            }
            worst.min(1.0)
        });
    }
    let worst = rho.iter().copied().fold(0.0, f64::max);
    Ok(HaltingReport { horizon, rho: worst, per_state: rho })
}
