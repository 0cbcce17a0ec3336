//! Non-adaptive reference policies.

use crate::env::{Decision, Policy};
use crate::error::{Error, Result};
use crate::model::{oracle_sample_count, ProblemInstance, SamplingSchedule};

/// Samples `count` times at `time_of(j)`, `j = 1..=count`, always on one arm.
#[derive(Debug, Clone)]
struct FixedGrid {
    arm: usize,
    count: u64,
    spacing: f64,
    horizon: f64,
    taken: u64,
}

impl FixedGrid {
    fn time_of(&self, j: u64) -> f64 {
        // j * spacing can overshoot the horizon by an ulp on the last sample
        (j as f64 * self.spacing).min(self.horizon)
    }

    fn next(&self) -> Decision {
        if self.taken < self.count {
            Decision::Sample {
                time: self.time_of(self.taken + 1),
                arm: self.arm,
            }
        } else {
            Decision::Stop
        }
    }

    fn schedule(&self) -> SamplingSchedule {
        let mut prev = 0.0;
        let mut intervals = Vec::with_capacity(self.count as usize);
        for j in 1..=self.count {
            let t = self.time_of(j);
            intervals.push(t - prev);
            prev = t;
        }
        SamplingSchedule::new(intervals, vec![self.arm; self.count as usize])
            .expect("grid times are strictly increasing")
    }
}

/// Knows the means: samples the best arm `N*` times at spacing `T / N*`.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    grid: FixedGrid,
}

impl OraclePolicy {
    pub fn new(instance: &ProblemInstance) -> Self {
        let count = oracle_sample_count(instance);
        let horizon = instance.horizon();
        Self {
            grid: FixedGrid {
                arm: instance.best_arm(),
                count,
                spacing: if count == 0 { horizon } else { horizon / count as f64 },
                horizon,
                taken: 0,
            },
        }
    }

    pub fn sample_count(&self) -> u64 {
        self.grid.count
    }

    pub fn interval(&self) -> f64 {
        self.grid.spacing
    }

    /// The full deterministic schedule this policy follows.
    pub fn schedule(&self) -> SamplingSchedule {
        self.grid.schedule()
    }
}

impl Policy for OraclePolicy {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn next_decision(&mut self, _now: f64) -> Decision {
        self.grid.next()
    }

    fn observe(&mut self, _arm: usize, _reward: u8, _time: f64) {
        self.grid.taken += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedRateConfig {
    /// Samples per unit time `a`.
    pub rate: f64,
    pub arm: usize,
}

impl FixedRateConfig {
    pub fn new(rate: f64, arm: usize) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::config(format!("baseline rate must be positive, got {rate}")));
        }
        Ok(Self { rate, arm })
    }
}

/// Samples one arm every `1 / a` time units, `floor(a T)` times in total.
#[derive(Debug, Clone)]
pub struct FixedRatePolicy {
    config: FixedRateConfig,
    grid: FixedGrid,
}

impl FixedRatePolicy {
    pub fn new(config: FixedRateConfig, instance: &ProblemInstance) -> Result<Self> {
        if config.arm >= instance.num_arms() {
            return Err(Error::config(format!(
                "baseline arm {} out of range for {} arms",
                config.arm,
                instance.num_arms()
            )));
        }
        let horizon = instance.horizon();
        // a*T is often a whole number that floating point lands just below
        let count = (config.rate * horizon * (1.0 + 1e-12)).floor() as u64;
        Ok(Self {
            config,
            grid: FixedGrid {
                arm: config.arm,
                count,
                spacing: 1.0 / config.rate,
                horizon,
                taken: 0,
            },
        })
    }

    pub fn sample_count(&self) -> u64 {
        self.grid.count
    }

    pub fn schedule(&self) -> SamplingSchedule {
        self.grid.schedule()
    }
}

impl Policy for FixedRatePolicy {
    fn name(&self) -> String {
        format!("baseline({})", self.config.rate)
    }

    fn next_decision(&mut self, _now: f64) -> Decision {
        self.grid.next()
    }

    fn observe(&mut self, _arm: usize, _reward: u8, _time: f64) {
        self.grid.taken += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{run_policy, Environment};
    use crate::model::{baseline_expected_payoff, oracle_payoff, schedule_expected_payoff};
    use approx::assert_relative_eq;

    #[test]
    fn oracle_samples_best_arm_uniformly() {
        let inst = ProblemInstance::new(vec![0.1, 0.5], 1.0, 100.0).unwrap();
        let mut p = OraclePolicy::new(&inst);
        assert_eq!((p.sample_count(), p.interval()), (25, 4.0));
        let trace = run_policy(&mut p, &mut Environment::new(inst.clone(), 1), 100.0).unwrap();
        assert_eq!(trace.events.len(), 25);
        assert!(trace.events.iter().all(|e| e.arm == 1 && (e.interval - 4.0).abs() < 1e-12));
        assert_eq!(trace.events.last().unwrap().time, 100.0);
    }

    #[test]
    fn oracle_schedule_matches_closed_form() {
        for means in [vec![0.5], vec![0.3, 0.2], vec![0.35, 0.2, 0.15, 0.1, 0.08], vec![0.77]] {
            for horizon in [13.0, 100.0, 60000.0] {
                let inst = ProblemInstance::new(means.clone(), 1.0, horizon).unwrap();
                let p = OraclePolicy::new(&inst);
                assert_relative_eq!(
                    schedule_expected_payoff(&p.schedule(), &inst).unwrap(),
                    oracle_payoff(&inst),
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn fixed_rate_grid() {
        let inst = ProblemInstance::single(0.3, 1.0, 100.0).unwrap();
        let mut p = FixedRatePolicy::new(FixedRateConfig::new(0.05, 0).unwrap(), &inst).unwrap();
        let trace = run_policy(&mut p, &mut Environment::new(inst, 2), 100.0).unwrap();
        let times: Vec<f64> = trace.events.iter().map(|e| e.time).collect();
        assert_eq!(times.len(), 5);
        for (t, want) in times.iter().zip([20.0, 40.0, 60.0, 80.0, 100.0]) {
            assert_relative_eq!(*t, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn fixed_rate_expected_payoffs() {
        let cases = [(0.06, 0.3, 864.0), (0.045, 0.3, 688.5), (0.06, 0.05, -36.0)];
        for (rate, mu, want) in cases {
            let inst = ProblemInstance::single(mu, 1.0, 60000.0).unwrap();
            let p = FixedRatePolicy::new(FixedRateConfig::new(rate, 0).unwrap(), &inst).unwrap();
            assert_eq!(p.sample_count(), (rate * 60000.0_f64).round() as u64);
            let got = schedule_expected_payoff(&p.schedule(), &inst).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-9);
            assert_relative_eq!(got, baseline_expected_payoff(rate, mu, 1.0, 60000.0), max_relative = 1e-9);
        }
    }

    #[test]
    fn fixed_rate_rejects_bad_config() {
        assert!(FixedRateConfig::new(0.0, 0).is_err());
        let inst = ProblemInstance::single(0.3, 1.0, 10.0).unwrap();
        assert!(FixedRatePolicy::new(FixedRateConfig { rate: 1.0, arm: 2 }, &inst).is_err());
    }
}
