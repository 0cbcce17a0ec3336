//! Replicated experiments: many seeded runs per algorithm, checkpointed
//! payoff trajectories and regret summaries.
//!
//! Run `r` of every algorithm uses environment seed `base_seed + r`, so
//! algorithms face the same reward streams (common random numbers).

mod config;
mod summary;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rayon::prelude::*;

pub use config::{AlgorithmSpec, ExperimentConfig};
pub use summary::{format_sig9, write_trajectories, AlgorithmSummary, CheckpointStat, RegretSummary, Trajectory};

use crate::baselines::{FixedRateConfig, FixedRatePolicy, OraclePolicy};
use crate::ctmab::run_ctmab;
use crate::ctsab::run_ctsab;
use crate::env::{run_policy, Environment, RunTrace};
use crate::error::{Error, Result};
use crate::model::{oracle_payoff, schedule_expected_payoff, ProblemInstance};

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

/// Evenly spaced checkpoints `T j / (grid - 1)`, `j = 0..grid`.
pub fn checkpoint_grid(horizon: f64, grid: usize) -> Vec<f64> {
    let last = (grid - 1) as f64;
    (0..grid)
        .map(|j| if j + 1 == grid { horizon } else { horizon * j as f64 / last })
        .collect()
}

/// One run of one algorithm on a fresh environment.
pub fn run_algorithm(
    config: &ExperimentConfig,
    instance: &ProblemInstance,
    spec: AlgorithmSpec,
    seed: u64,
) -> Result<RunTrace> {
    let mut env = Environment::new(instance.clone(), seed);
    let horizon = instance.horizon();
    match spec {
        AlgorithmSpec::Oracle => run_policy(&mut OraclePolicy::new(instance), &mut env, horizon),
        AlgorithmSpec::Baseline(_) => {
            let rate = config.baseline_rate(spec)?;
            let mut policy = FixedRatePolicy::new(FixedRateConfig::new(rate, instance.best_arm())?, instance)?;
            run_policy(&mut policy, &mut env, horizon)
        }
        AlgorithmSpec::Ctsab => run_ctsab(&mut env, &config.ctsab()?),
        AlgorithmSpec::Ctmab => run_ctmab(&mut env, &config.ctmab()?),
    }
}

/// Closed-form expected payoff, for algorithms whose schedule does not depend
/// on rewards.
pub fn expected_payoff(config: &ExperimentConfig, instance: &ProblemInstance, spec: AlgorithmSpec) -> Result<Option<f64>> {
    let schedule = match spec {
        AlgorithmSpec::Oracle => OraclePolicy::new(instance).schedule(),
        AlgorithmSpec::Baseline(_) => {
            let rate = config.baseline_rate(spec)?;
            FixedRatePolicy::new(FixedRateConfig::new(rate, instance.best_arm())?, instance)?.schedule()
        }
        AlgorithmSpec::Ctsab | AlgorithmSpec::Ctmab => return Ok(None),
    };
    schedule_expected_payoff(&schedule, instance).map(Some)
}

enum RunOutcome {
    Done { trace: RunTrace },
    Errored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: RegretSummary,
    pub trajectories: Vec<Trajectory>,
    pub oracle_payoff: f64,
}

/// Runs every configured algorithm `runs` times without touching the disk.
pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let instance = config.instance()?;
    let oracle = oracle_payoff(&instance);
    let grid = checkpoint_grid(instance.horizon(), config.trajectory_grid);

    let mut summary = RegretSummary::default();
    let mut trajectories = Vec::new();
    for &spec in &config.algorithms {
        let label = config.label(spec);
        let outcomes: Vec<RunOutcome> = (0..config.runs)
            .into_par_iter()
            .map(|r| {
                let seed = config.base_seed.wrapping_add(r as u64);
                match catch_unwind(AssertUnwindSafe(|| run_algorithm(config, &instance, spec, seed))) {
                    Ok(Ok(trace)) => RunOutcome::Done { trace },
                    Ok(Err(_)) | Err(_) => RunOutcome::Errored,
                }
            })
            .collect();

        let mut per_checkpoint = vec![Vec::with_capacity(config.runs); grid.len()];
        let (mut failed, mut truncated, mut errored) = (0, 0, 0);
        for (run_id, outcome) in outcomes.into_iter().enumerate() {
            let trace = match outcome {
                RunOutcome::Done { trace } => trace,
                RunOutcome::Errored => {
                    errored += 1;
                    continue;
                }
            };
            failed += usize::from(trace.failed());
            truncated += usize::from(trace.metadata.truncated);
            let points = trace.checkpoints(&grid);
            for (slot, &(payoff, _)) in per_checkpoint.iter_mut().zip(&points) {
                slot.push(payoff);
            }
            trajectories.push(Trajectory {
                algorithm: label.clone(),
                run_id,
                points: grid.iter().zip(points).map(|(&t, (p, n))| (t, p, n)).collect(),
            });
        }

        let checkpoints: Vec<CheckpointStat> = grid
            .iter()
            .zip(&per_checkpoint)
            .map(|(&t, values)| CheckpointStat::from_values(t, values))
            .collect();
        let final_mean = checkpoints.last().map_or(f64::NAN, |c| c.mean_payoff);
        summary.algorithms.push(AlgorithmSummary {
            algorithm: label,
            checkpoints,
            regret_at_horizon: oracle - final_mean,
            expected_regret_at_horizon: expected_payoff(config, &instance, spec)?.map(|p| oracle - p),
            runs: config.runs,
            failed_runs: failed,
            truncated_runs: truncated,
            errored_runs: errored,
        });
    }
    Ok(ExperimentOutput {
        summary,
        trajectories,
        oracle_payoff: oracle,
    })
}

/// Simulates and writes `trajectories.csv` and `summary.csv` into `output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let output = simulate(config)?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(TRAJECTORIES_FILE);
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_trajectories(&output.trajectories, std::io::BufWriter::new(file))?;
    output.summary.write_file(&dir.join(SUMMARY_FILE))?;
    Ok(output)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    pub regret: f64,
    pub stderr: f64,
    pub oracle_payoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `ln regret` against `ln mu`; `None` with fewer
    /// than two points or any non-positive regret.
    pub slope: Option<f64>,
}

/// Single-arm CTSAB regret at the horizon for each mean in `mus`. Every other
/// setting comes from `base`.
pub fn regret_vs_mu_sweep(mus: &[f64], base: &ExperimentConfig) -> Result<SweepTable> {
    if mus.is_empty() {
        return Err(Error::config("empty mean grid"));
    }
    let mut rows = Vec::with_capacity(mus.len());
    for &mu in mus {
        let mut config = base.clone();
        config.means = vec![mu];
        config.algorithms = vec![AlgorithmSpec::Ctsab];
        let out = simulate(&config)?;
        let algo = &out.summary.algorithms[0];
        let last = algo.final_checkpoint().expect("grid has at least two points");
        rows.push(SweepRow {
            mu,
            regret: algo.regret_at_horizon,
            stderr: last.stderr,
            oracle_payoff: out.oracle_payoff,
        });
    }
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.regret > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.mu.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.regret.ln()).collect();
        least_squares_slope(&xs, &ys)
    } else {
        None
    };
    Ok(SweepTable { rows, slope })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl SweepTable {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("mu,regret_at_horizon,stderr,oracle_payoff\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_sig9(r.mu),
                format_sig9(r.regret),
                format_sig9(r.stderr),
                format_sig9(r.oracle_payoff)
            ));
        }
        if let Some(s) = self.slope {
            out.push_str(&format!("slope,{},,\n", format_sig9(s)));
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(algorithms: Vec<AlgorithmSpec>) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(vec![0.3], 2000.0, algorithms);
        c.runs = 8;
        c.trajectory_grid = 11;
        c
    }

    #[test]
    fn grid_endpoints() {
        let g = checkpoint_grid(60000.0, 61);
        assert_eq!(g.len(), 61);
        assert_eq!((g[0], g[1], g[60]), (0.0, 1000.0, 60000.0));
    }

    #[test]
    fn deterministic_schedules_match_closed_form() {
        let c = small(vec![AlgorithmSpec::Oracle, AlgorithmSpec::Baseline(Some(0.06))]);
        let out = simulate(&c).unwrap();
        for a in &out.summary.algorithms {
            assert_eq!(a.errored_runs, 0);
            let exp = a.expected_regret_at_horizon.unwrap();
            let se = a.final_checkpoint().unwrap().stderr;
            assert!((a.regret_at_horizon - exp).abs() <= 5.0 * se + 1e-9, "{}", a.algorithm);
        }
        assert_eq!(out.trajectories.len(), 16);
        let oracle = out.summary.get("oracle").unwrap();
        assert!(oracle.expected_regret_at_horizon.unwrap().abs() < 1e-9);
    }

    #[test]
    fn simulation_is_reproducible() {
        let c = small(vec![AlgorithmSpec::Ctsab]);
        let a = simulate(&c).unwrap();
        let b = simulate(&c).unwrap();
        assert_eq!(a.summary.to_csv_string(), b.summary.to_csv_string());
        assert_eq!(a.trajectories, b.trajectories);
    }

    #[test]
    fn trajectories_are_monotone_in_samples() {
        let out = simulate(&small(vec![AlgorithmSpec::Ctsab])).unwrap();
        for t in &out.trajectories {
            assert!(t.points.windows(2).all(|w| w[0].2 <= w[1].2));
            assert_eq!(t.points[0].2, 0);
        }
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|x| (3.0 * x.powf(-1.5)).ln()).collect();
        assert!((least_squares_slope(&xs, &ys).unwrap() + 1.5).abs() < 1e-12);
        assert!(least_squares_slope(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }
}
