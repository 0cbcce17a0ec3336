//! LUCB1 best-arm identification, paced on a continuous clock.
//!
//! Each round samples the empirical leader `h` and the strongest challenger
//! `l` (largest upper confidence bound among the others), and identification
//! ends once the leader's lower bound clears every challenger's upper bound.
//! Radii use the exploration rate `beta(t) = ln(1.25 K t^4 / delta)`:
//!
//! ```text
//! radius(n, t) = sqrt(beta(t) / (2 n))
//! ```
//!
//! where `t` is the total number of pulls so far.

use std::collections::VecDeque;

use crate::env::{Bandit, SampleEvent};
use crate::error::{Error, Result};
use crate::model::{argmax, PayoffLedger};
use crate::stats::EmpiricalStats;

const EXPLORATION_K1: f64 = 1.25;
const EXPLORATION_POWER: f64 = 4.0;

pub fn confidence_radius(count: u64, total_pulls: u64, delta: f64, arms: usize) -> f64 {
    debug_assert!(count >= 1 && total_pulls >= 1);
    let beta = EXPLORATION_K1.ln() + (arms as f64).ln() + EXPLORATION_POWER * (total_pulls as f64).ln()
        - delta.ln();
    (beta / (2.0 * count as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LucbState {
    stats: Vec<EmpiricalStats>,
    delta: f64,
}

impl LucbState {
    pub fn new(arms: usize, delta: f64) -> Result<Self> {
        Self::from_stats(vec![EmpiricalStats::new(); arms], delta)
    }

    /// Starts from existing per-arm statistics.
    pub fn from_stats(stats: Vec<EmpiricalStats>, delta: f64) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::config("identification needs at least one arm"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { stats, delta })
    }

    pub fn stats(&self) -> &[EmpiricalStats] {
        &self.stats
    }

    pub fn into_stats(self) -> Vec<EmpiricalStats> {
        self.stats
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn arms(&self) -> usize {
        self.stats.len()
    }

    pub fn total_pulls(&self) -> u64 {
        self.stats.iter().map(EmpiricalStats::count).sum()
    }

    pub fn record(&mut self, arm: usize, reward: u8) {
        self.stats[arm].record(reward);
    }

    pub fn all_sampled(&self) -> bool {
        self.stats.iter().all(|s| s.count() > 0)
    }

    /// Empirical leader; ties go to the lowest index.
    pub fn leader(&self) -> usize {
        let means: Vec<f64> = self.stats.iter().map(EmpiricalStats::mean).collect();
        argmax(&means)
    }

    pub fn radius(&self, arm: usize) -> f64 {
        confidence_radius(self.stats[arm].count(), self.total_pulls(), self.delta, self.arms())
    }

    fn ucb(&self, arm: usize) -> f64 {
        self.stats[arm].mean() + self.radius(arm)
    }

    fn lcb(&self, arm: usize) -> f64 {
        self.stats[arm].mean() - self.radius(arm)
    }

    /// Challenger with the largest UCB among arms other than `h`.
    fn challenger(&self, h: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for arm in (0..self.arms()).filter(|&a| a != h) {
            let u = self.ucb(arm);
            if best.is_none_or(|(_, b)| u > b) {
                best = Some((arm, u));
            }
        }
        best.map(|(arm, _)| arm)
    }
}

/// Leader and challenger to sample next. Requires at least two arms, each
/// sampled at least once.
pub fn lucb_step(state: &LucbState) -> (usize, usize) {
    debug_assert!(state.all_sampled());
    let h = state.leader();
    let l = state
        .challenger(h)
        .expect("lucb_step needs at least two arms");
    (h, l)
}

/// True once the leader's LCB is at least every other arm's UCB.
pub fn lucb_stopped(state: &LucbState) -> bool {
    if state.arms() == 1 {
        return true;
    }
    if !state.all_sampled() {
        return false;
    }
    let h = state.leader();
    let l = state.challenger(h).expect("two or more arms");
    state.lcb(h) >= state.ucb(l)
}

/// Turns LUCB1 into a stream of arm requests: first every unsampled arm once,
/// then leader/challenger pairs until the stopping rule holds. The rule is
/// checked whenever the pending queue is empty.
#[derive(Debug, Clone)]
pub struct LucbSampler {
    state: LucbState,
    pending: VecDeque<usize>,
    pulls: u64,
}

impl LucbSampler {
    pub fn new(state: LucbState) -> Self {
        Self {
            state,
            pending: VecDeque::new(),
            pulls: 0,
        }
    }

    /// Arm to sample next, or `None` once identification is complete.
    pub fn next_arm(&mut self) -> Option<usize> {
        if self.pending.is_empty() {
            if !self.state.all_sampled() {
                self.pending.extend((0..self.state.arms()).filter(|&a| self.state.stats[a].count() == 0));
            } else if lucb_stopped(&self.state) {
                return None;
            } else {
                let (h, l) = lucb_step(&self.state);
                self.pending.extend([h, l]);
            }
        }
        self.pending.front().copied()
    }

    pub fn observe(&mut self, arm: usize, reward: u8) {
        let expected = self.pending.pop_front();
        debug_assert_eq!(expected, Some(arm));
        self.state.record(arm, reward);
        self.pulls += 1;
    }

    /// Pulls made by this sampler (not counting carried-over statistics).
    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn state(&self) -> &LucbState {
        &self.state
    }

    pub fn into_state(self) -> LucbState {
        self.state
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub best_arm: usize,
    pub events: Vec<SampleEvent>,
    pub ledger: PayoffLedger,
    pub end_time: f64,
    pub pulls: u64,
    /// The horizon arrived before the stopping rule fired; `best_arm` is the
    /// empirical leader at that point.
    pub truncated: bool,
    pub state: LucbState,
}

/// Runs LUCB1 from scratch, one sample every `sample_interval` starting
/// `sample_interval` after `start_time`, until it stops or the next sample
/// would fall past `horizon`.
pub fn run_identification<B: Bandit + ?Sized>(
    bandit: &mut B,
    delta: f64,
    sample_interval: f64,
    start_time: f64,
    horizon: f64,
) -> Result<Identification> {
    if !(sample_interval > 0.0 && sample_interval.is_finite()) {
        return Err(Error::domain(format!(
            "sample interval must be positive, got {sample_interval}"
        )));
    }
    let lambda = bandit.instance().lambda();
    let mut sampler = LucbSampler::new(LucbState::new(bandit.instance().num_arms(), delta)?);
    let mut ledger = PayoffLedger::starting_at(lambda, start_time);
    let mut events = Vec::new();
    let mut end_time = start_time;
    let mut truncated = false;

    while let Some(arm) = sampler.next_arm() {
        let time = start_time + (sampler.pulls() + 1) as f64 * sample_interval;
        if time > horizon {
            truncated = true;
            break;
        }
        let reward = bandit.draw_reward(arm)?;
        let payoff_increment = ledger.record(time, f64::from(reward))?;
        events.push(SampleEvent {
            time,
            arm,
            reward,
            interval: time - end_time,
            payoff_increment,
        });
        sampler.observe(arm, reward);
        end_time = time;
    }

    let pulls = sampler.pulls();
    let state = sampler.into_state();
    Ok(Identification {
        best_arm: state.leader(),
        events,
        ledger,
        end_time,
        pulls,
        truncated,
        state,
    })
}
