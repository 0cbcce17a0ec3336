//! Single-arm learner with a phased learning period and a data-driven stop.
//!
//! Learning phase `i` covers `[T^((i-1)eps), T^(i eps)]` (phase 1 starts at 0)
//! and takes `ceil(kappa ln(T) T^(2 i eps / 3))` equally spaced samples. After
//! each learning phase the learner stops if
//!
//! ```text
//! sqrt(ln(2 / delta) / N) < mu_hat / 2
//! ```
//!
//! over all `N` samples so far. The phase where this first holds is `i*`.
//! Exploit phases of fixed width `T^(i* eps)` follow, each taking
//! `mu_hat * width / 2` samples, the oracle rate for the current estimate.

use crate::env::{run_policy, Bandit, Decision, PhaseBoundary, Policy, RunTrace};
use crate::error::{Error, Result};
use crate::phase::{PhaseKind, PhasePlan};
use crate::stats::EmpiricalStats;

pub const DEFAULT_KAPPA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtsabConfig {
    pub epsilon: f64,
    pub kappa: f64,
    pub delta: f64,
    pub horizon: f64,
}

impl CtsabConfig {
    pub fn new(epsilon: f64, kappa: f64, delta: f64, horizon: f64) -> Result<Self> {
        let config = Self {
            epsilon,
            kappa,
            delta,
            horizon,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        validate_phase_params(self.epsilon, self.kappa, self.delta, self.horizon)
    }

    /// `T^(i eps)`, the right edge of learning phase `i`.
    pub fn phase_edge(&self, i: usize) -> f64 {
        horizon_pow(self.horizon, i as f64 * self.epsilon)
    }
}

pub(crate) fn validate_phase_params(epsilon: f64, kappa: f64, delta: f64, horizon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(Error::config(format!("kappa must exceed 1, got {kappa}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(horizon.is_finite() && horizon.powf(epsilon) > 1.0) {
        return Err(Error::config(format!(
            "T^epsilon must exceed 1 for phases to have width (T = {horizon}, epsilon = {epsilon})"
        )));
    }
    Ok(())
}

/// `T^exponent`, returning `T` itself when the exponent is 1 up to rounding,
/// so that a phase edge meant to sit on the horizon does not overshoot it.
pub(crate) fn horizon_pow(horizon: f64, exponent: f64) -> f64 {
    if (exponent - 1.0).abs() < 1e-12 {
        horizon
    } else {
        horizon.powf(exponent)
    }
}

/// Per-arm sample count of learning phase `i`: `ceil(kappa ln(T) T^(2 i eps / 3))`.
pub(crate) fn learning_count(i: usize, epsilon: f64, kappa: f64, horizon: f64) -> u64 {
    let raw = kappa * horizon.ln() * horizon.powf(2.0 * i as f64 * epsilon / 3.0);
    raw.ceil() as u64
}

pub(crate) fn learning_window(i: usize, epsilon: f64, horizon: f64) -> (f64, f64) {
    let start = if i == 1 {
        0.0
    } else {
        horizon_pow(horizon, (i - 1) as f64 * epsilon)
    };
    (start, horizon_pow(horizon, i as f64 * epsilon))
}

pub fn learning_phase_plan(i: usize, config: &CtsabConfig) -> Result<PhasePlan> {
    if i == 0 {
        return Err(Error::domain("learning phases are numbered from 1"));
    }
    config.validate()?;
    let (start, end) = learning_window(i, config.epsilon, config.horizon);
    let count = learning_count(i, config.epsilon, config.kappa, config.horizon);
    PhasePlan::new(i, start, end, count, PhaseKind::Learning)
}

/// True once `sqrt(ln(2/delta) / N) < mean / 2`.
pub fn stopping_condition(stats: &EmpiricalStats, delta: f64) -> Result<bool> {
    if stats.count() == 0 {
        return Err(Error::domain("stopping condition needs at least one sample"));
    }
    Ok(confidence_width(stats.count(), delta) < stats.mean() / 2.0)
}

/// `sqrt(ln(2/delta) / n)`.
pub fn confidence_width(n: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / n as f64).sqrt()
}

/// Plan for exploit phase `r >= 1` after a learning period ending at
/// `learning_end`, with phases of `width` each.
///
/// The last phase is cut at `horizon`; its count is scaled to the shorter
/// window and may round to zero, in which case `None` is returned. `None` is
/// also returned once the phase would start at or past the horizon.
pub fn exploit_phase_plan(
    r: usize,
    mu_hat_prev: f64,
    learning_end: f64,
    width: f64,
    horizon: f64,
) -> Result<Option<PhasePlan>> {
    if r == 0 {
        return Err(Error::domain("exploit phases are numbered from 1"));
    }
    if !(width > 0.0) {
        return Err(Error::domain(format!("exploit width must be positive, got {width}")));
    }
    if !(0.0..=1.0).contains(&mu_hat_prev) {
        return Err(Error::domain(format!("estimate {mu_hat_prev} is not a probability")));
    }
    if mu_hat_prev == 0.0 {
        return Err(Error::DegenerateEstimate(
            "zero mean estimate gives a zero exploit rate".into(),
        ));
    }
    let start = learning_end + (r - 1) as f64 * width;
    if start >= horizon {
        return Ok(None);
    }
    let nominal_end = learning_end + r as f64 * width;
    let count = if nominal_end <= horizon {
        ((mu_hat_prev * width / 2.0).round() as u64).max(1)
    } else {
        (mu_hat_prev * (horizon - start) / 2.0).round() as u64
    };
    if count == 0 {
        return Ok(None);
    }
    PhasePlan::new(r, start, nominal_end.min(horizon), count, PhaseKind::Exploit).map(Some)
}

/// Walks exploit phases one sample at a time, re-planning from the current
/// estimate whenever a phase is used up.
#[derive(Debug, Clone)]
pub(crate) struct ExploitScheduler {
    start: f64,
    width: f64,
    horizon: f64,
    current: Option<PhasePlan>,
    next_sample: u64,
    plans: Vec<PhasePlan>,
}

impl ExploitScheduler {
    pub(crate) fn new(start: f64, width: f64, horizon: f64, mean: f64) -> Self {
        let mut scheduler = Self {
            start,
            width,
            horizon,
            current: None,
            next_sample: 1,
            plans: Vec::new(),
        };
        scheduler.plan(1, mean);
        scheduler
    }

    fn plan(&mut self, r: usize, mean: f64) {
        self.next_sample = 1;
        self.current = match exploit_phase_plan(r, mean, self.start, self.width, self.horizon) {
            Ok(plan) => plan,
            // a zero estimate still earns one sample per phase so it can recover
            Err(Error::DegenerateEstimate(_)) => {
                let start = self.start + (r - 1) as f64 * self.width;
                let end = (self.start + r as f64 * self.width).min(self.horizon);
                PhasePlan::new(r, start, end, 1, PhaseKind::Exploit).ok()
            }
            Err(_) => None,
        };
        if let Some(plan) = &self.current {
            self.plans.push(plan.clone());
        }
    }

    /// Time of the next exploit sample, or `None` once the horizon is used up.
    /// `mean` is read only when a new phase has to be planned.
    pub(crate) fn next_time(&mut self, mean: impl Fn() -> f64) -> Option<f64> {
        loop {
            let plan = self.current.as_ref()?;
            if self.next_sample <= plan.sample_count {
                return Some(plan.sample_time(self.next_sample));
            }
            if plan.window_end >= self.horizon {
                self.current = None;
                return None;
            }
            let r = plan.index + 1;
            self.plan(r, mean());
        }
    }

    pub(crate) fn advance(&mut self) {
        self.next_sample += 1;
    }

    pub(crate) fn plans(&self) -> &[PhasePlan] {
        &self.plans
    }
}

#[derive(Debug, Clone)]
enum Period {
    Learning { plan: PhasePlan, next_sample: u64 },
    Exploit(ExploitScheduler),
    Done,
}

/// Single-arm learner; always samples arm 0.
#[derive(Debug, Clone)]
pub struct CtsabPolicy {
    config: CtsabConfig,
    stats: EmpiricalStats,
    period: Period,
    learning_plans: Vec<PhasePlan>,
    i_star: Option<usize>,
    stats_at_stop: Option<EmpiricalStats>,
    learning_end: Option<f64>,
    exploit_width: Option<f64>,
    exploit_plans: Vec<PhasePlan>,
    failed: bool,
}

impl CtsabPolicy {
    pub fn new(config: CtsabConfig) -> Result<Self> {
        let first = learning_phase_plan(1, &config)?;
        Ok(Self {
            config,
            stats: EmpiricalStats::new(),
            period: Period::Learning {
                plan: first.clone(),
                next_sample: 1,
            },
            learning_plans: vec![first],
            i_star: None,
            stats_at_stop: None,
            learning_end: None,
            exploit_width: None,
            exploit_plans: Vec::new(),
            failed: false,
        })
    }

    pub fn config(&self) -> &CtsabConfig {
        &self.config
    }

    /// Phase at which the learning period ended, if it did.
    pub fn i_star(&self) -> Option<usize> {
        self.i_star
    }

    /// Sample statistics at the moment the stopping rule fired.
    pub fn stats_at_stop(&self) -> Option<EmpiricalStats> {
        self.stats_at_stop
    }

    pub fn learning_end(&self) -> Option<f64> {
        self.learning_end
    }

    pub fn exploit_width(&self) -> Option<f64> {
        self.exploit_width
    }

    pub fn stats(&self) -> &EmpiricalStats {
        &self.stats
    }

    pub fn learning_plans(&self) -> &[PhasePlan] {
        &self.learning_plans
    }

    /// Exploit phases planned so far (the final one may not have been fully sampled
    /// if a run was cut short).
    pub fn exploit_plans(&self) -> &[PhasePlan] {
        match &self.period {
            Period::Exploit(s) => s.plans(),
            _ => &self.exploit_plans,
        }
    }

    pub fn failed(&self) -> bool {
        self.failed
    }

    /// Called when every sample of the current learning phase is in.
    fn finish_learning_phase(&mut self, plan: &PhasePlan) -> Result<()> {
        if stopping_condition(&self.stats, self.config.delta)? {
            let tau = plan.window_end;
            let width = self.config.phase_edge(plan.index);
            self.i_star = Some(plan.index);
            self.stats_at_stop = Some(self.stats);
            self.learning_end = Some(tau);
            self.exploit_width = Some(width);
            self.period = if tau >= self.config.horizon {
                Period::Done
            } else {
                Period::Exploit(ExploitScheduler::new(
                    tau,
                    width,
                    self.config.horizon,
                    self.stats.mean(),
                ))
            };
        } else {
            let next = learning_phase_plan(plan.index + 1, &self.config)?;
            self.learning_plans.push(next.clone());
            self.period = Period::Learning {
                plan: next,
                next_sample: 1,
            };
        }
        Ok(())
    }
}

impl Policy for CtsabPolicy {
    fn name(&self) -> String {
        "ctsab".into()
    }

    fn next_decision(&mut self, _now: f64) -> Decision {
        loop {
            match &mut self.period {
                Period::Done => return Decision::Stop,
                Period::Learning { plan, next_sample } => {
                    if *next_sample <= plan.sample_count {
                        let time = plan.sample_time(*next_sample);
                        if time > self.config.horizon {
                            self.failed = true;
                            self.period = Period::Done;
                            return Decision::Fail;
                        }
                        return Decision::Sample { time, arm: 0 };
                    }
                    let plan = plan.clone();
                    if self.finish_learning_phase(&plan).is_err() {
                        self.failed = true;
                        self.period = Period::Done;
                        return Decision::Fail;
                    }
                }
                Period::Exploit(scheduler) => {
                    let stats = self.stats;
                    match scheduler.next_time(|| stats.mean()) {
                        Some(time) => return Decision::Sample { time, arm: 0 },
                        None => {
                            self.exploit_plans = scheduler.plans().to_vec();
                            self.period = Period::Done;
                        }
                    }
                }
            }
        }
    }

    fn observe(&mut self, _arm: usize, reward: u8, _time: f64) {
        self.stats.record(reward);
        match &mut self.period {
            Period::Learning { next_sample, .. } => *next_sample += 1,
            Period::Exploit(scheduler) => scheduler.advance(),
            Period::Done => {}
        }
    }

    fn phase_boundaries(&self) -> Vec<PhaseBoundary> {
        self.learning_end
            .map(|t| PhaseBoundary::new("learning_end", t))
            .into_iter()
            .collect()
    }
}

/// Runs the single-arm learner on arm 0 of `bandit` over `config.horizon`.
pub fn run_ctsab<B: Bandit + ?Sized>(bandit: &mut B, config: &CtsabConfig) -> Result<RunTrace> {
    let mut policy = CtsabPolicy::new(*config)?;
    run_policy(&mut policy, bandit, config.horizon)
}
