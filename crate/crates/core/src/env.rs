//! Seeded Bernoulli arms and the continuous-time decision loop.
//!
//! A [`Policy`] is pulled for its next `(time, arm)` decision and pushed each
//! observed reward. [`run_policy`] owns the clock: it rejects decisions that
//! do not move time forward and ends the run once a decision falls past the
//! horizon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{PayoffLedger, ProblemInstance};

/// Source of binary rewards for a fixed problem instance.
pub trait Bandit {
    fn instance(&self) -> &ProblemInstance;

    fn draw_reward(&mut self, arm: usize) -> Result<u8>;

    /// Seed recorded in trace metadata.
    fn seed(&self) -> u64 {
        0
    }
}

/// Bernoulli arms driven by a ChaCha8 stream.
///
/// The k-th draw consumes the k-th 64-bit word of the stream keyed by `seed`,
/// so rewards depend only on `(seed, draw_counter)` and the arm queried.
#[derive(Debug, Clone)]
pub struct Environment {
    instance: ProblemInstance,
    seed: u64,
    rng: ChaCha8Rng,
    draw_counter: u64,
}

impl Environment {
    pub fn new(instance: ProblemInstance, seed: u64) -> Self {
        Self {
            instance,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            draw_counter: 0,
        }
    }

    pub fn draw_counter(&self) -> u64 {
        self.draw_counter
    }
}

impl Bandit for Environment {
    fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    fn draw_reward(&mut self, arm: usize) -> Result<u8> {
        let mean = self.instance.mean(arm).ok_or_else(|| {
            Error::domain(format!(
                "arm {arm} out of range for {} arms",
                self.instance.num_arms()
            ))
        })?;
        self.draw_counter += 1;
        let u: f64 = self.rng.gen();
        Ok(u8::from(u < mean))
    }

    fn seed(&self) -> u64 {
        self.seed
    }
}

/// One realized sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEvent {
    pub time: f64,
    pub arm: usize,
    pub reward: u8,
    /// Time since the previous sample of any arm (or since 0).
    pub interval: f64,
    /// `reward - lambda / interval`.
    pub payoff_increment: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    AlgorithmFailed,
}

/// A named instant at which a policy switched period or phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBoundary {
    pub label: String,
    pub time: f64,
}

impl PhaseBoundary {
    pub fn new(label: impl Into<String>, time: f64) -> Self {
        Self {
            label: label.into(),
            time,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub algorithm: String,
    pub instance: ProblemInstance,
    pub seed: u64,
    pub boundaries: Vec<PhaseBoundary>,
    /// Set when a policy ran out of horizon in a period it could not finish
    /// (e.g. best-arm identification).
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub events: Vec<SampleEvent>,
    pub termination: Termination,
    pub metadata: RunMetadata,
    pub ledger: PayoffLedger,
}

impl RunTrace {
    pub fn cumulative_payoff(&self) -> f64 {
        self.ledger.cumulative_payoff()
    }

    /// Payoff re-summed from the event increments.
    pub fn reconstructed_payoff(&self) -> f64 {
        self.events.iter().map(|e| e.payoff_increment).sum()
    }

    pub fn failed(&self) -> bool {
        self.termination == Termination::AlgorithmFailed
    }

    pub fn boundary(&self, label: &str) -> Option<f64> {
        self.metadata
            .boundaries
            .iter()
            .find(|b| b.label == label)
            .map(|b| b.time)
    }

    /// Cumulative payoff and sample count at each checkpoint.
    ///
    /// Checkpoints must be sorted ascending. A sample at time `t` counts
    /// toward every checkpoint `>= t`.
    pub fn checkpoints(&self, times: &[f64]) -> Vec<(f64, u64)> {
        let mut out = Vec::with_capacity(times.len());
        let mut payoff = 0.0;
        let mut count = 0u64;
        let mut events = self.events.iter().peekable();
        for &t in times {
            while let Some(e) = events.next_if(|e| e.time <= t) {
                payoff += e.payoff_increment;
                count += 1;
            }
            out.push((payoff, count));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Sample { time: f64, arm: usize },
    Stop,
    Fail,
}

/// A stateful sampling strategy.
pub trait Policy {
    fn name(&self) -> String;

    /// Next sample to take, given the time of the most recent one.
    fn next_decision(&mut self, now: f64) -> Decision;

    fn observe(&mut self, arm: usize, reward: u8, time: f64);

    fn phase_boundaries(&self) -> Vec<PhaseBoundary> {
        Vec::new()
    }

    fn truncated(&self) -> bool {
        false
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn next_decision(&mut self, now: f64) -> Decision {
        (**self).next_decision(now)
    }

    fn observe(&mut self, arm: usize, reward: u8, time: f64) {
        (**self).observe(arm, reward, time)
    }

    fn phase_boundaries(&self) -> Vec<PhaseBoundary> {
        (**self).phase_boundaries()
    }

    fn truncated(&self) -> bool {
        (**self).truncated()
    }
}

/// Drives `policy` against `bandit` until it stops, fails, or asks for a
/// sample after `horizon`.
pub fn run_policy<P, B>(policy: &mut P, bandit: &mut B, horizon: f64) -> Result<RunTrace>
where
    P: Policy + ?Sized,
    B: Bandit + ?Sized,
{
    let mut ledger = PayoffLedger::new(bandit.instance().lambda());
    let mut events = Vec::new();
    let mut now = 0.0;

    let termination = loop {
        match policy.next_decision(now) {
            Decision::Stop => break Termination::Completed,
            Decision::Fail => break Termination::AlgorithmFailed,
            Decision::Sample { time, .. } if time > horizon => break Termination::Completed,
            Decision::Sample { time, arm } => {
                if !(time > now) {
                    return Err(Error::Protocol(format!(
                        "{} asked for a sample at {time}, not after {now}",
                        policy.name()
                    )));
                }
                let reward = bandit.draw_reward(arm)?;
                let payoff_increment = ledger.record(time, f64::from(reward))?;
                events.push(SampleEvent {
                    time,
                    arm,
                    reward,
                    interval: time - now,
                    payoff_increment,
                });
                policy.observe(arm, reward, time);
                now = time;
            }
        }
    };

    Ok(RunTrace {
        events,
        termination,
        metadata: RunMetadata {
            algorithm: policy.name(),
            instance: bandit.instance().clone(),
            seed: bandit.seed(),
            boundaries: policy.phase_boundaries(),
            truncated: policy.truncated(),
        },
        ledger,
    })
}
