//! Payoff model for continuous-time sampling.
//!
//! A learner picks sampling instants `0 = t_0 < t_1 < t_2 < ...` inside `[0, T]`
//! and an arm for each one. The i-th sample earns a Bernoulli reward with the
//! arm's mean and pays `lambda / (t_i - t_{i-1})`, so frequent sampling is
//! expensive regardless of which arms are involved.
//!
//! Everything in this module works with expectations. Realized rewards are
//! handled by [`crate::env`].

use crate::error::{Error, Result};

/// Relative slack used when checking that a schedule fits inside a horizon.
pub(crate) const HORIZON_RTOL: f64 = 1e-9;

/// Means, cost weight and horizon of one bandit problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    means: Vec<f64>,
    lambda: f64,
    horizon: f64,
}

impl ProblemInstance {
    pub fn new(means: Vec<f64>, lambda: f64, horizon: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::config("instance needs at least one arm"));
        }
        if let Some(bad) = means.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
            return Err(Error::config(format!(
                "arm means must lie strictly inside (0, 1), got {bad}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be positive, got {lambda}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            means,
            lambda,
            horizon,
        })
    }

    /// Single-arm instance.
    pub fn single(mean: f64, lambda: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![mean], lambda, horizon)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, arm: usize) -> Option<f64> {
        self.means.get(arm).copied()
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Index of the largest mean; ties resolve to the lowest index.
    pub fn best_arm(&self) -> usize {
        argmax(&self.means)
    }

    pub fn best_mean(&self) -> f64 {
        self.means[self.best_arm()]
    }

    /// Means in decreasing order, i.e. `mu[1] >= mu[2] >= ...`.
    pub fn sorted_means(&self) -> Vec<f64> {
        let mut sorted = self.means.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted
    }

    /// `mu[1] - mu[2]`, or `None` for a single arm.
    pub fn gap(&self) -> Option<f64> {
        let sorted = self.sorted_means();
        (sorted.len() >= 2).then(|| sorted[0] - sorted[1])
    }
}

/// Index of the maximum, lowest index on ties. Panics on an empty slice.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Inter-sample gaps and the arm played at the end of each gap.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SamplingSchedule {
    intervals: Vec<f64>,
    arms: Vec<usize>,
}

impl SamplingSchedule {
    pub fn new(intervals: Vec<f64>, arms: Vec<usize>) -> Result<Self> {
        if intervals.len() != arms.len() {
            return Err(Error::domain(format!(
                "{} intervals but {} arm choices",
                intervals.len(),
                arms.len()
            )));
        }
        if let Some(bad) = intervals.iter().find(|dt| !(**dt > 0.0 && dt.is_finite())) {
            return Err(Error::domain(format!("sampling interval must be positive, got {bad}")));
        }
        Ok(Self { intervals, arms })
    }

    /// `n` samples of one arm at equal spacing over `[0, span]`.
    pub fn uniform(arm: usize, n: usize, span: f64) -> Result<Self> {
        if !(span > 0.0) {
            return Err(Error::domain(format!("span must be positive, got {span}")));
        }
        Self::new(vec![span / n as f64; n], vec![arm; n])
    }

    pub fn intervals(&self) -> &[f64] {
        &self.intervals
    }

    pub fn arms(&self) -> &[usize] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.intervals.iter().sum()
    }

    /// Absolute sample times `t_1, t_2, ...` measured from `t_0 = 0`.
    pub fn times(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .scan(0.0, |t, dt| {
                *t += dt;
                Some(*t)
            })
            .collect()
    }

    /// Every interval multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::domain(format!("scale factor must be positive, got {c}")));
        }
        Self::new(
            self.intervals.iter().map(|dt| dt * c).collect(),
            self.arms.clone(),
        )
    }
}

/// Running totals of realized reward and sampling cost for one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PayoffLedger {
    lambda: f64,
    cumulative_reward: f64,
    cumulative_cost: f64,
    sample_count: u64,
    last_sample_time: f64,
}

impl PayoffLedger {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    /// Ledger for a run segment whose previous sample was at `time`.
    pub fn starting_at(lambda: f64, time: f64) -> Self {
        Self {
            lambda,
            last_sample_time: time,
            ..Self::default()
        }
    }

    /// Books one sample taken at `time`; returns its payoff increment.
    pub fn record(&mut self, time: f64, reward: f64) -> Result<f64> {
        let interval = time - self.last_sample_time;
        let cost = sampling_cost(interval)?;
        self.cumulative_reward += reward;
        self.cumulative_cost += cost;
        self.sample_count += 1;
        self.last_sample_time = time;
        Ok(reward - self.lambda * cost)
    }

    pub fn cumulative_payoff(&self) -> f64 {
        self.cumulative_reward - self.lambda * self.cumulative_cost
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.cumulative_reward
    }

    pub fn cumulative_cost(&self) -> f64 {
        self.cumulative_cost
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn last_sample_time(&self) -> f64 {
        self.last_sample_time
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `f(dt) = 1 / dt`.
pub fn sampling_cost(dt: f64) -> Result<f64> {
    if dt > 0.0 {
        Ok(1.0 / dt)
    } else {
        Err(Error::domain(format!("sampling interval must be positive, got {dt}")))
    }
}

/// Expected payoff of one sample: `mean - lambda / dt`.
pub fn instantaneous_expected_payoff(mean: f64, dt: f64, lambda: f64) -> Result<f64> {
    Ok(mean - lambda * sampling_cost(dt)?)
}

/// Smallest total cost of `n` samples inside `[0, span]`, attained by equal spacing.
pub fn uniform_cost(n: u64, span: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("uniform_cost needs at least one sample"));
    }
    if !(span > 0.0) {
        return Err(Error::domain(format!("span must be positive, got {span}")));
    }
    let n = n as f64;
    Ok(n * n / span)
}

/// Expected payoff of `n` equally spaced samples of an arm with `mean` over `span`.
pub fn uniform_expected_payoff(mean: f64, n: u64, span: f64, lambda: f64) -> f64 {
    let n = n as f64;
    mean * n - lambda * n * n / span
}

/// Integer sample count maximizing `mu[1] N - lambda N^2 / T`.
///
/// The continuous maximizer is `mu[1] T / (2 lambda)`; otherwise the floor and
/// ceiling are compared and a tie goes to the floor. A floor of zero is kept
/// when it wins, which only happens for `mu[1] T / lambda < 1`.
pub fn oracle_sample_count(instance: &ProblemInstance) -> u64 {
    let mu = instance.best_mean();
    let (lambda, horizon) = (instance.lambda(), instance.horizon());
    let target = mu * horizon / (2.0 * lambda);
    let lo = target.floor() as u64;
    let hi = target.ceil() as u64;
    if lo == hi {
        return lo;
    }
    let payoff = |n| uniform_expected_payoff(mu, n, horizon, lambda);
    if payoff(hi) > payoff(lo) {
        hi
    } else {
        lo
    }
}

/// Expected payoff of the oracle, `mu[1] N* - lambda N*^2 / T`.
pub fn oracle_payoff(instance: &ProblemInstance) -> f64 {
    let n = oracle_sample_count(instance);
    uniform_expected_payoff(instance.best_mean(), n, instance.horizon(), instance.lambda())
}

/// Unrounded oracle payoff `mu[1]^2 T / (4 lambda)`.
pub fn oracle_payoff_closed_form(instance: &ProblemInstance) -> f64 {
    let mu = instance.best_mean();
    mu * mu * instance.horizon() / (4.0 * instance.lambda())
}

/// `sum_i (mu[k_i] - lambda / dt_i)`.
pub fn schedule_expected_payoff(schedule: &SamplingSchedule, instance: &ProblemInstance) -> Result<f64> {
    let duration = schedule.duration();
    if duration > instance.horizon() * (1.0 + HORIZON_RTOL) {
        return Err(Error::domain(format!(
            "schedule spans {duration} but the horizon is {}",
            instance.horizon()
        )));
    }
    let mut total = 0.0;
    for (&dt, &arm) in schedule.intervals().iter().zip(schedule.arms()) {
        let mean = instance
            .mean(arm)
            .ok_or_else(|| Error::domain(format!("arm {arm} out of range")))?;
        total += instantaneous_expected_payoff(mean, dt, instance.lambda())?;
    }
    Ok(total)
}

/// Oracle value minus achieved payoff. Negative on runs that beat the expectation.
pub fn regret(oracle_value: f64, achieved: f64) -> f64 {
    oracle_value - achieved
}

/// Expected payoff `a T (mean - lambda a)` of sampling at rate `a` for time `horizon`.
pub fn baseline_expected_payoff(rate: f64, mean: f64, lambda: f64, horizon: f64) -> f64 {
    rate * horizon * (mean - lambda * rate)
}

/// Scales `lambda` and `T` by `c`; the ratio `T / lambda` and hence every
/// optimal payoff is unchanged.
pub fn rescale_instance(instance: &ProblemInstance, c: f64) -> Result<ProblemInstance> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("scale factor must be positive, got {c}")));
    }
    ProblemInstance::new(
        instance.means().to_vec(),
        instance.lambda() * c,
        instance.horizon() * c,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inst(mu: f64, lambda: f64, horizon: f64) -> ProblemInstance {
        ProblemInstance::single(mu, lambda, horizon).unwrap()
    }

    #[test]
    fn instance_validation() {
        assert!(ProblemInstance::new(vec![], 1.0, 1.0).is_err());
        assert!(ProblemInstance::new(vec![0.0], 1.0, 1.0).is_err());
        assert!(ProblemInstance::new(vec![1.0], 1.0, 1.0).is_err());
        assert!(ProblemInstance::new(vec![0.5], 0.0, 1.0).is_err());
        assert!(ProblemInstance::new(vec![0.5], 1.0, -1.0).is_err());
        assert!(ProblemInstance::new(vec![0.5, f64::NAN], 1.0, 1.0).is_err());
    }

    #[test]
    fn sorted_view_and_gap() {
        let i = ProblemInstance::new(vec![0.1, 0.35, 0.2, 0.35], 1.0, 10.0).unwrap();
        assert_eq!(i.best_arm(), 1);
        assert_eq!(i.sorted_means(), vec![0.35, 0.35, 0.2, 0.1]);
        assert_eq!(i.gap(), Some(0.0));
        assert_eq!(inst(0.3, 1.0, 1.0).gap(), None);
    }

    #[test]
    fn sampling_cost_examples() {
        assert_eq!(sampling_cost(1.0).unwrap(), 1.0);
        assert_eq!(sampling_cost(0.5).unwrap(), 2.0);
        assert!(matches!(sampling_cost(0.0), Err(Error::Domain(_))));
        assert!(sampling_cost(-1.0).is_err());
    }

    #[test]
    fn instantaneous_payoff_examples() {
        assert_relative_eq!(instantaneous_expected_payoff(0.5, 4.0, 1.0).unwrap(), 0.25);
        // at the oracle spacing 2 lambda / mu the per-sample payoff is mu / 2
        assert_relative_eq!(instantaneous_expected_payoff(0.5, 2.0 / 0.5, 1.0).unwrap(), 0.25);
        assert_relative_eq!(
            instantaneous_expected_payoff(0.05, 1.0 / 0.06, 1.0).unwrap(),
            -0.01,
            epsilon = 1e-15
        );
        assert!(instantaneous_expected_payoff(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn uniform_cost_examples() {
        assert_eq!(uniform_cost(4, 2.0).unwrap(), 8.0);
        assert_eq!(uniform_cost(1, 1.0).unwrap(), 1.0);
        assert_relative_eq!(uniform_cost(25, 100.0).unwrap(), 6.25);
        assert!(uniform_cost(0, 1.0).is_err());
        assert!(uniform_cost(3, 0.0).is_err());
    }

    #[test]
    fn oracle_count_examples() {
        assert_eq!(oracle_sample_count(&inst(0.5, 1.0, 100.0)), 25);
        assert_eq!(oracle_sample_count(&inst(0.3, 1.0, 60000.0)), 9000);
        assert_eq!(oracle_sample_count(&inst(0.5, 1.0, 101.0)), 25);
    }

    #[test]
    fn oracle_count_tie_goes_to_floor() {
        // mu T / (2 lambda) = 2.5 exactly: N = 2 and N = 3 earn the same
        let i = inst(0.5, 1.0, 10.0);
        assert_eq!(
            uniform_expected_payoff(0.5, 2, 10.0, 1.0),
            uniform_expected_payoff(0.5, 3, 10.0, 1.0)
        );
        assert_eq!(oracle_sample_count(&i), 2);
    }

    #[test]
    fn oracle_count_is_exhaustive_maximizer() {
        // brute-force scan over every integer count up to T / lambda
        for &(mu, lambda, horizon) in &[
            (0.5, 1.0, 101.0),
            (0.3, 1.0, 77.0),
            (0.91, 2.5, 40.0),
            (0.05, 0.3, 13.0),
            (0.2, 1.0, 3.0),
        ] {
            let i = inst(mu, lambda, horizon);
            let n_max = (horizon / lambda).ceil() as u64;
            let best = (0..=n_max)
                .map(|n| uniform_expected_payoff(mu, n, horizon, lambda))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_relative_eq!(oracle_payoff(&i), best, max_relative = 1e-12);
        }
    }

    #[test]
    fn oracle_payoff_examples() {
        assert_relative_eq!(oracle_payoff(&inst(0.5, 1.0, 100.0)), 6.25, max_relative = 1e-12);
        assert_relative_eq!(oracle_payoff(&inst(0.3, 1.0, 60000.0)), 1350.0, max_relative = 1e-12);
        let five = ProblemInstance::new(vec![0.35, 0.2, 0.15, 0.1, 0.08], 1.0, 60000.0).unwrap();
        assert_relative_eq!(oracle_payoff(&five), 1837.5, max_relative = 1e-12);
    }

    #[test]
    fn schedule_payoff_examples() {
        let i = inst(0.5, 1.0, 100.0);
        assert_eq!(schedule_expected_payoff(&SamplingSchedule::default(), &i).unwrap(), 0.0);

        let oracle = SamplingSchedule::uniform(0, 25, 100.0).unwrap();
        assert_relative_eq!(schedule_expected_payoff(&oracle, &i).unwrap(), 6.25, max_relative = 1e-12);

        let two = SamplingSchedule::new(vec![1.0, 3.0], vec![0, 0]).unwrap();
        assert_relative_eq!(
            schedule_expected_payoff(&two, &i).unwrap(),
            -1.0 / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn schedule_errors() {
        let i = inst(0.5, 1.0, 10.0);
        let long = SamplingSchedule::new(vec![6.0, 6.0], vec![0, 0]).unwrap();
        assert!(schedule_expected_payoff(&long, &i).is_err());
        let bad_arm = SamplingSchedule::new(vec![1.0], vec![3]).unwrap();
        assert!(schedule_expected_payoff(&bad_arm, &i).is_err());
        assert!(SamplingSchedule::new(vec![1.0, 0.0], vec![0, 0]).is_err());
        assert!(SamplingSchedule::new(vec![1.0], vec![0, 0]).is_err());
    }

    #[test]
    fn regret_examples() {
        assert_eq!(regret(6.25, 6.25), 0.0);
        assert_eq!(regret(1350.0, 1000.0), 350.0);
        assert_eq!(regret(1350.0, 1400.0), -50.0);
    }

    #[test]
    fn baseline_payoff_examples() {
        let (mu, lambda, horizon) = (0.3, 1.0, 60000.0);
        assert_relative_eq!(
            baseline_expected_payoff(mu / (2.0 * lambda), mu, lambda, horizon),
            mu * mu * horizon / (4.0 * lambda),
            max_relative = 1e-12
        );
        assert_relative_eq!(baseline_expected_payoff(0.06, 0.05, 1.0, 60000.0), -36.0, max_relative = 1e-9);
        assert_relative_eq!(baseline_expected_payoff(0.045, 0.3, 1.0, 60000.0), 688.5, max_relative = 1e-9);
    }

    #[test]
    fn rescale_examples() {
        let i = inst(0.5, 1.0, 100.0);
        assert_eq!(rescale_instance(&i, 1.0).unwrap(), i);
        let r = rescale_instance(&i, 2.0).unwrap();
        assert_eq!((r.lambda(), r.horizon()), (2.0, 200.0));
        assert_relative_eq!(oracle_payoff(&r), 0.25 * 100.0 / 4.0, max_relative = 1e-12);
        assert!(rescale_instance(&i, 0.0).is_err());
    }

    #[test]
    fn ledger_tracks_payoff_identity() {
        let mut ledger = PayoffLedger::new(2.0);
        let inc = ledger.record(0.5, 1.0).unwrap();
        assert_relative_eq!(inc, 1.0 - 2.0 * 2.0);
        ledger.record(2.5, 0.0).unwrap();
        assert_eq!(ledger.sample_count(), 2);
        assert_relative_eq!(ledger.cumulative_cost(), 2.0 + 0.5);
        assert_relative_eq!(
            ledger.cumulative_payoff(),
            ledger.cumulative_reward() - 2.0 * ledger.cumulative_cost()
        );
        // a second sample at the same instant has infinite cost
        assert!(ledger.record(2.5, 1.0).is_err());
    }
}
