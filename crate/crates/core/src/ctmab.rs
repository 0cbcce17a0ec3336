//! Multi-arm learner: estimation, identification, exploit.
//!
//! * **Estimation.** The single-arm learning phases, run on all `K` arms at
//!   once: phase `i` takes `K * ceil(kappa ln(T) T^(2 i eps / 3))` samples on
//!   one uniform grid, assigned to arms round-robin. After every sample, if
//!   any arm passes the single-arm stopping rule the period ends and the
//!   empirical leader's mean becomes `mu_hat[1]`.
//! * **Identification.** LUCB1, one sample every `1 / mu_hat[1]`.
//! * **Exploit.** Single-arm exploit phases of width `T^nu_m` on the
//!   identified arm, using that arm's samples from both earlier periods.

use crate::ctsab::{
    confidence_width, horizon_pow, learning_count, learning_window, validate_phase_params,
    ExploitScheduler,
};
use crate::env::{run_policy, Bandit, Decision, PhaseBoundary, Policy, RunTrace};
use crate::error::{Error, Result};
use crate::lucb::{LucbSampler, LucbState};
use crate::model::argmax;
use crate::phase::{PhaseKind, PhasePlan};
use crate::stats::EmpiricalStats;

/// Exploit width used when the estimation period's `T^(i* eps)` is below 2.
pub const FALLBACK_EXPLOIT_WIDTH: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtmabConfig {
    pub epsilon: f64,
    pub kappa: f64,
    pub delta: f64,
    /// Exploit phases have width `T^nu_m`. `None` uses `T^(i* eps)` from the
    /// estimation period.
    pub nu_m: Option<f64>,
    pub horizon: f64,
}

impl CtmabConfig {
    pub fn new(epsilon: f64, kappa: f64, delta: f64, nu_m: Option<f64>, horizon: f64) -> Result<Self> {
        let config = Self {
            epsilon,
            kappa,
            delta,
            nu_m,
            horizon,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        validate_phase_params(self.epsilon, self.kappa, self.delta, self.horizon)?;
        if let Some(nu) = self.nu_m {
            if !(nu > 0.0 && self.horizon.powf(nu) >= 2.0) {
                return Err(Error::config(format!(
                    "T^nu_m must be at least 2, got T^{nu} = {}",
                    self.horizon.powf(nu)
                )));
            }
        }
        Ok(())
    }

    /// Width of exploit phases once the estimation period ended in phase `i_star`.
    pub fn exploit_width(&self, i_star: usize) -> f64 {
        match self.nu_m {
            Some(nu) => horizon_pow(self.horizon, nu),
            None => {
                let w = horizon_pow(self.horizon, i_star as f64 * self.epsilon);
                if w >= 2.0 {
                    w
                } else {
                    FALLBACK_EXPLOIT_WIDTH
                }
            }
        }
    }
}

/// Estimation phase `i` for `arms` arms sampled round-robin on one grid.
pub fn estimation_phase_plan(i: usize, arms: usize, config: &CtmabConfig) -> Result<PhasePlan> {
    if i == 0 {
        return Err(Error::domain("estimation phases are numbered from 1"));
    }
    if arms == 0 {
        return Err(Error::domain("estimation needs at least one arm"));
    }
    config.validate()?;
    let (start, end) = learning_window(i, config.epsilon, config.horizon);
    let per_arm = learning_count(i, config.epsilon, config.kappa, config.horizon);
    PhasePlan::new(i, start, end, per_arm * arms as u64, PhaseKind::Learning)
}

/// Arm assigned to the `j`-th sample (1-based) of a round-robin phase.
pub fn round_robin_arm(j: u64, arms: usize) -> usize {
    ((j - 1) % arms as u64) as usize
}

/// If any sampled arm satisfies the single-arm stopping rule, the empirical
/// leader (lowest index on ties) and its mean.
pub fn estimation_stop_check(stats: &[EmpiricalStats], delta: f64) -> Option<(usize, f64)> {
    let fired = stats
        .iter()
        .any(|s| s.count() > 0 && confidence_width(s.count(), delta) < s.mean() / 2.0);
    fired.then(|| {
        let means: Vec<f64> = stats.iter().map(EmpiricalStats::mean).collect();
        let leader = argmax(&means);
        (leader, means[leader])
    })
}

#[derive(Debug, Clone)]
enum Period {
    Estimation {
        plan: PhasePlan,
        next_sample: u64,
        stats: Vec<EmpiricalStats>,
    },
    Identification {
        sampler: LucbSampler,
        start: f64,
        interval: f64,
    },
    Exploit {
        arm: usize,
        stats: EmpiricalStats,
        scheduler: ExploitScheduler,
    },
    Done,
}

/// What happened in each period of a finished (or cut short) run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CtmabReport {
    pub i_star: Option<usize>,
    /// Leader chosen when estimation stopped.
    pub estimation_leader: Option<usize>,
    pub mu_hat_1: Option<f64>,
    pub estimation_end: Option<f64>,
    /// Per-arm statistics at the end of the estimation period.
    pub estimation_stats: Vec<EmpiricalStats>,
    pub identification_interval: Option<f64>,
    pub identification_pulls: u64,
    pub identification_end: Option<f64>,
    pub identified_arm: Option<usize>,
    pub identification_truncated: bool,
    pub exploit_width: Option<f64>,
    pub exploit_plans: Vec<PhasePlan>,
    pub failed: bool,
}

#[derive(Debug, Clone)]
pub struct CtmabPolicy {
    config: CtmabConfig,
    arms: usize,
    period: Period,
    report: CtmabReport,
}

impl CtmabPolicy {
    pub fn new(config: CtmabConfig, arms: usize) -> Result<Self> {
        if arms < 2 {
            return Err(Error::config(format!("multi-arm learner needs K >= 2, got {arms}")));
        }
        let plan = estimation_phase_plan(1, arms, &config)?;
        Ok(Self {
            config,
            arms,
            period: Period::Estimation {
                plan,
                next_sample: 1,
                stats: vec![EmpiricalStats::new(); arms],
            },
            report: CtmabReport::default(),
        })
    }

    pub fn config(&self) -> &CtmabConfig {
        &self.config
    }

    pub fn report(&self) -> &CtmabReport {
        &self.report
    }

    fn fail(&mut self) -> Decision {
        self.report.failed = true;
        self.period = Period::Done;
        Decision::Fail
    }

    fn start_identification(&mut self, now: f64, i_star: usize, leader: usize, mu_hat: f64, stats: Vec<EmpiricalStats>) {
        let interval = 1.0 / mu_hat;
        self.report.i_star = Some(i_star);
        self.report.estimation_leader = Some(leader);
        self.report.mu_hat_1 = Some(mu_hat);
        self.report.estimation_end = Some(now);
        self.report.estimation_stats = stats.clone();
        self.report.identification_interval = Some(interval);
        let state = LucbState::from_stats(stats, self.config.delta)
            .expect("delta validated with the config");
        self.period = Period::Identification {
            sampler: LucbSampler::new(state),
            start: now,
            interval,
        };
    }

    fn start_exploit(&mut self, now: f64, arm: usize, stats: EmpiricalStats) {
        let i_star = self.report.i_star.expect("estimation finished");
        let width = self.config.exploit_width(i_star);
        self.report.identification_end = Some(now);
        self.report.identified_arm = Some(arm);
        self.report.exploit_width = Some(width);
        self.period = if now >= self.config.horizon {
            Period::Done
        } else {
            Period::Exploit {
                arm,
                stats,
                scheduler: ExploitScheduler::new(now, width, self.config.horizon, stats.mean()),
            }
        };
    }
}

impl Policy for CtmabPolicy {
    fn name(&self) -> String {
        "ctmab".into()
    }

    fn next_decision(&mut self, now: f64) -> Decision {
        let horizon = self.config.horizon;
        loop {
            match &mut self.period {
                Period::Done => return Decision::Stop,
                Period::Estimation {
                    plan,
                    next_sample,
                    stats,
                } => {
                    if let Some((leader, mu_hat)) = estimation_stop_check(stats, self.config.delta) {
                        let i_star = plan.index;
                        let stats = std::mem::take(stats);
                        self.start_identification(now, i_star, leader, mu_hat, stats);
                        continue;
                    }
                    if *next_sample > plan.sample_count {
                        match estimation_phase_plan(plan.index + 1, self.arms, &self.config) {
                            Ok(next) => {
                                *plan = next;
                                *next_sample = 1;
                            }
                            Err(_) => return self.fail(),
                        }
                        continue;
                    }
                    let time = plan.sample_time(*next_sample);
                    if time > horizon {
                        return self.fail();
                    }
                    let arm = round_robin_arm(*next_sample, self.arms);
                    return Decision::Sample { time, arm };
                }
                Period::Identification {
                    sampler,
                    start,
                    interval,
                } => match sampler.next_arm() {
                    Some(arm) => {
                        let time = *start + (sampler.pulls() + 1) as f64 * *interval;
                        if time > horizon {
                            let leader = sampler.state().leader();
                            self.report.identification_pulls = sampler.pulls();
                            self.report.identification_truncated = true;
                            self.report.identification_end = Some(now);
                            self.report.identified_arm = Some(leader);
                            self.period = Period::Done;
                            return Decision::Stop;
                        }
                        return Decision::Sample { time, arm };
                    }
                    None => {
                        let pulls = sampler.pulls();
                        let state = sampler.state().clone();
                        let arm = state.leader();
                        let stats = state.stats()[arm];
                        self.report.identification_pulls = pulls;
                        self.start_exploit(now, arm, stats);
                    }
                },
                Period::Exploit {
                    arm,
                    stats,
                    scheduler,
                } => {
                    let s = *stats;
                    match scheduler.next_time(|| s.mean()) {
                        Some(time) => return Decision::Sample { time, arm: *arm },
                        None => {
                            self.report.exploit_plans = scheduler.plans().to_vec();
                            self.period = Period::Done;
                        }
                    }
                }
            }
        }
    }

    fn observe(&mut self, arm: usize, reward: u8, _time: f64) {
        match &mut self.period {
            Period::Estimation {
                next_sample, stats, ..
            } => {
                stats[arm].record(reward);
                *next_sample += 1;
            }
            Period::Identification { sampler, .. } => sampler.observe(arm, reward),
            Period::Exploit {
                stats, scheduler, ..
            } => {
                stats.record(reward);
                scheduler.advance();
            }
            Period::Done => {}
        }
    }

    fn phase_boundaries(&self) -> Vec<PhaseBoundary> {
        let mut out = Vec::new();
        if let Some(t) = self.report.estimation_end {
            out.push(PhaseBoundary::new("estimation_end", t));
        }
        if let Some(t) = self.report.identification_end {
            out.push(PhaseBoundary::new("identification_end", t));
        }
        out
    }

    fn truncated(&self) -> bool {
        self.report.identification_truncated
    }
}

/// Runs the multi-arm learner over `config.horizon`.
pub fn run_ctmab<B: Bandit + ?Sized>(bandit: &mut B, config: &CtmabConfig) -> Result<RunTrace> {
    let mut policy = CtmabPolicy::new(*config, bandit.instance().num_arms())?;
    run_policy(&mut policy, bandit, config.horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctsab::{learning_phase_plan, CtsabConfig};
    use crate::env::Environment;
    use crate::model::{uniform_cost, ProblemInstance};
    use approx::assert_relative_eq;

    fn default_config() -> CtmabConfig {
        CtmabConfig::new(0.05, 2.0, 0.05, None, 60000.0).unwrap()
    }

    #[test]
    fn single_arm_plan_matches_learning_plan() {
        let c = default_config();
        let single = CtsabConfig::new(c.epsilon, c.kappa, c.delta, c.horizon).unwrap();
        for i in 1..8 {
            assert_eq!(
                estimation_phase_plan(i, 1, &c).unwrap(),
                learning_phase_plan(i, &single).unwrap()
            );
        }
    }

    #[test]
    fn five_arm_first_phase() {
        let p = estimation_phase_plan(1, 5, &default_config()).unwrap();
        assert_eq!(p.sample_count, 160);
        let arm0: Vec<u64> = (1..=160).filter(|&j| round_robin_arm(j, 5) == 0).collect();
        assert_eq!(arm0.len(), 32);
        assert!(arm0.windows(2).all(|w| w[1] - w[0] == 5));
        let mut prev = p.window_start;
        let mut cost = 0.0;
        for j in 1..=p.sample_count {
            let t = p.sample_time(j);
            cost += 1.0 / (t - prev);
            prev = t;
        }
        assert_relative_eq!(cost, uniform_cost(160, p.width()).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn stop_check_picks_leader() {
        let delta = 0.05;
        let none = [EmpiricalStats::from_counts(20, 2), EmpiricalStats::from_counts(20, 3)];
        assert_eq!(estimation_stop_check(&none, delta), None);
        assert_eq!(estimation_stop_check(&[EmpiricalStats::new(); 3], delta), None);

        // arm 2 alone passes at its own count, arm 0 has the larger mean
        let stats = [
            EmpiricalStats::from_counts(10, 9),
            EmpiricalStats::from_counts(100, 10),
            EmpiricalStats::from_counts(100, 60),
        ];
        assert!(confidence_width(10, delta) > 0.45);
        assert_eq!(estimation_stop_check(&stats, delta), Some((0, 0.9)));
    }

    #[test]
    fn config_rules() {
        assert!(CtmabConfig::new(0.05, 2.0, 0.05, Some(0.01), 60000.0).is_err());
        let c = CtmabConfig::new(0.05, 2.0, 0.05, Some(0.5), 60000.0).unwrap();
        assert_relative_eq!(c.exploit_width(3), 60000f64.sqrt());
        let d = default_config();
        assert_eq!(d.exploit_width(1), FALLBACK_EXPLOIT_WIDTH);
        assert_relative_eq!(d.exploit_width(3), 60000f64.powf(0.15), max_relative = 1e-12);
        let inst = ProblemInstance::single(0.3, 1.0, 100.0).unwrap();
        assert!(run_ctmab(&mut Environment::new(inst, 0), &d).is_err());
    }

    #[test]
    fn periods_partition_the_run() {
        let c = CtmabConfig::new(0.1, 2.0, 0.05, None, 20000.0).unwrap();
        let inst = ProblemInstance::new(vec![0.8, 0.3, 0.2], 1.0, c.horizon).unwrap();
        let mut policy = CtmabPolicy::new(c, 3).unwrap();
        let trace = run_policy(&mut policy, &mut Environment::new(inst, 21), c.horizon).unwrap();
        let rep = policy.report();
        assert!(!rep.failed && !rep.identification_truncated);

        let t_es = rep.estimation_end.unwrap();
        let t_id = rep.identification_end.unwrap();
        assert_eq!(trace.boundary("estimation_end"), Some(t_es));
        assert_eq!(trace.boundary("identification_end"), Some(t_id));

        // equal per-arm counts whenever estimation ends on a full round
        let counts: Vec<u64> = rep.estimation_stats.iter().map(|s| s.count()).collect();
        assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);

        let estimation = trace.events.iter().filter(|e| e.time <= t_es).count() as u64;
        assert_eq!(estimation, counts.iter().sum::<u64>());

        let interval = rep.identification_interval.unwrap();
        assert_eq!(interval, 1.0 / rep.mu_hat_1.unwrap());
        let ident: Vec<_> = trace.events.iter().filter(|e| e.time > t_es && e.time <= t_id).collect();
        assert_eq!(ident.len() as u64, rep.identification_pulls);
        assert!(ident.iter().all(|e| (e.interval - interval).abs() < 1e-9 * interval.max(1.0)));
        assert_relative_eq!(t_id - t_es, rep.identification_pulls as f64 * interval, max_relative = 1e-12);

        let arm = rep.identified_arm.unwrap();
        assert_eq!(arm, 0);
        assert!(trace.events.iter().filter(|e| e.time > t_id).all(|e| e.arm == arm));
        let mut edge = t_id;
        for p in &rep.exploit_plans {
            assert_eq!(p.window_start, edge);
            edge = p.window_end;
        }
        let mu_hat = rep.mu_hat_1.unwrap();
        assert!(edge == c.horizon || (c.horizon - edge) * mu_hat / 2.0 < 0.5);
    }

    #[test]
    fn estimation_can_fail() {
        let c = CtmabConfig::new(0.25, 2.0, 1e-6, None, 300.0).unwrap();
        let inst = ProblemInstance::new(vec![1e-4, 1e-4], 1.0, c.horizon).unwrap();
        let mut policy = CtmabPolicy::new(c, 2).unwrap();
        let trace = run_policy(&mut policy, &mut Environment::new(inst, 0), c.horizon).unwrap();
        assert!(trace.failed());
        assert!(policy.report().failed);
        assert!(trace.metadata.boundaries.is_empty());
    }

    #[test]
    fn identification_truncation_is_flagged() {
        // nearly tied arms cannot be separated before T
        let c = CtmabConfig::new(0.1, 2.0, 0.05, None, 3000.0).unwrap();
        let inst = ProblemInstance::new(vec![0.6, 0.59], 1.0, c.horizon).unwrap();
        let trace = run_ctmab(&mut Environment::new(inst, 8), &c).unwrap();
        assert!(trace.metadata.truncated);
        assert!(!trace.failed());
        assert!(trace.events.last().unwrap().time <= c.horizon);
    }
}
