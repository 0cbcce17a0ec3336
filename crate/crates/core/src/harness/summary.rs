//! Per-algorithm summaries and the CSV files they are written to.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with 9 significant digits, like C's `%.9g`.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointStat {
    pub time: f64,
    pub mean_payoff: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CheckpointStat {
    /// Mean, standard error and normal 95% interval of `values`.
    pub fn from_values(time: f64, values: &[f64]) -> Self {
        let n = values.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / n as f64
        };
        let stderr = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self {
            time,
            mean_payoff: mean,
            stderr,
            ci_low: mean - Z95 * stderr,
            ci_high: mean + Z95 * stderr,
        }
    }
}

const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub checkpoints: Vec<CheckpointStat>,
    /// Oracle payoff minus the mean payoff at the horizon.
    pub regret_at_horizon: f64,
    /// Closed-form regret, for deterministic schedules.
    pub expected_regret_at_horizon: Option<f64>,
    pub runs: usize,
    pub failed_runs: usize,
    pub truncated_runs: usize,
    /// Runs that returned an error or panicked; excluded from the statistics.
    pub errored_runs: usize,
}

impl AlgorithmSummary {
    pub fn final_checkpoint(&self) -> Option<&CheckpointStat> {
        self.checkpoints.last()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretSummary {
    pub algorithms: Vec<AlgorithmSummary>,
}

const SUMMARY_HEADER: [&str; 6] = [
    "algorithm",
    "checkpoint_time",
    "mean_payoff",
    "stderr",
    "ci_low",
    "ci_high",
];

impl RegretSummary {
    pub fn get(&self, algorithm: &str) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }

    pub fn regret(&self, algorithm: &str) -> Option<f64> {
        self.get(algorithm).map(|a| a.regret_at_horizon)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        let csv_err = |e: csv::Error| Error::parse("summary csv", e.to_string());
        w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
        for a in &self.algorithms {
            for c in &a.checkpoints {
                w.write_record([
                    a.algorithm.clone(),
                    format_sig9(c.time),
                    format_sig9(c.mean_payoff),
                    format_sig9(c.stderr),
                    format_sig9(c.ci_low),
                    format_sig9(c.ci_high),
                ])
                .map_err(csv_err)?;
            }
        }
        for a in &self.algorithms {
            let mut trailer = vec![("regret_at_horizon", format_sig9(a.regret_at_horizon))];
            if let Some(e) = a.expected_regret_at_horizon {
                trailer.push(("expected_regret_at_horizon", format_sig9(e)));
            }
            trailer.push(("runs", a.runs.to_string()));
            trailer.push(("failed_runs", a.failed_runs.to_string()));
            trailer.push(("truncated_runs", a.truncated_runs.to_string()));
            trailer.push(("errored_runs", a.errored_runs.to_string()));
            for (key, value) in trailer {
                w.write_record([a.algorithm.as_str(), key, value.as_str()])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::parse("summary csv", e.to_string()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .flexible(true)
            .from_reader(text.as_bytes());
        let bad = |detail: String| Error::parse("summary csv", detail);
        let header = r.headers().map_err(|e| bad(e.to_string()))?;
        if header.iter().ne(SUMMARY_HEADER) {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        let mut summary = RegretSummary::default();
        for (row, record) in r.records().enumerate() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            let name = &record[0];
            let idx = match summary.algorithms.iter().position(|a| a.algorithm == name) {
                Some(i) => i,
                None => {
                    summary.algorithms.push(AlgorithmSummary {
                        algorithm: name.to_string(),
                        checkpoints: Vec::new(),
                        regret_at_horizon: f64::NAN,
                        expected_regret_at_horizon: None,
                        runs: 0,
                        failed_runs: 0,
                        truncated_runs: 0,
                        errored_runs: 0,
                    });
                    summary.algorithms.len() - 1
                }
            };
            let a = &mut summary.algorithms[idx];
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| bad(format!("row {}: bad number `{s}`", row + 2)))
            };
            let count = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| bad(format!("row {}: bad count `{s}`", row + 2)))
            };
            match record.len() {
                6 => a.checkpoints.push(CheckpointStat {
                    time: num(&record[1])?,
                    mean_payoff: num(&record[2])?,
                    stderr: num(&record[3])?,
                    ci_low: num(&record[4])?,
                    ci_high: num(&record[5])?,
                }),
                3 => match &record[1] {
                    "regret_at_horizon" => a.regret_at_horizon = num(&record[2])?,
                    "expected_regret_at_horizon" => {
                        a.expected_regret_at_horizon = Some(num(&record[2])?)
                    }
                    "runs" => a.runs = count(&record[2])?,
                    "failed_runs" => a.failed_runs = count(&record[2])?,
                    "truncated_runs" => a.truncated_runs = count(&record[2])?,
                    "errored_runs" => a.errored_runs = count(&record[2])?,
                    other => return Err(bad(format!("row {}: unknown field `{other}`", row + 2))),
                },
                n => return Err(bad(format!("row {}: {n} fields", row + 2))),
            }
        }
        Ok(summary)
    }
}

/// Checkpoint values of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algorithm: String,
    pub run_id: usize,
    /// `(checkpoint_time, cumulative_payoff, cumulative_samples)`
    pub points: Vec<(f64, f64, u64)>,
}

pub fn write_trajectories<W: Write>(trajectories: &[Trajectory], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::parse("trajectory csv", e.to_string());
    w.write_record([
        "algorithm",
        "run_id",
        "checkpoint_time",
        "cumulative_payoff",
        "cumulative_samples",
    ])
    .map_err(csv_err)?;
    for t in trajectories {
        let run_id = t.run_id.to_string();
        for &(time, payoff, samples) in &t.points {
            w.write_record([
                t.algorithm.as_str(),
                run_id.as_str(),
                &format_sig9(time),
                &format_sig9(payoff),
                &samples.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::parse("trajectory csv", e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_matches_printf() {
        let cases = [
            (1350.0, "1350"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (-6632.123456789, "-6632.12346"),
            (60000.0, "60000"),
            (123456789.4, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (999999999.6, "1e+09"),
            (-0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig9(x), want, "{x}");
        }
        assert_eq!(format_sig9(f64::NAN), "NaN");
    }

    #[test]
    fn checkpoint_stats() {
        let c = CheckpointStat::from_values(5.0, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(c.mean_payoff, 2.5);
        let se = (5.0f64 / 3.0 / 4.0).sqrt();
        assert!((c.stderr - se).abs() < 1e-15);
        assert!((c.ci_high - c.ci_low - 2.0 * Z95 * se).abs() < 1e-12);
        assert_eq!(CheckpointStat::from_values(0.0, &[7.0]).stderr, 0.0);
        assert!(CheckpointStat::from_values(0.0, &[]).mean_payoff.is_nan());
    }

    fn sample() -> RegretSummary {
        RegretSummary {
            algorithms: vec![
                AlgorithmSummary {
                    algorithm: "oracle".into(),
                    checkpoints: vec![
                        CheckpointStat::from_values(0.0, &[0.0, 0.0]),
                        CheckpointStat::from_values(100.0, &[13.0, 11.0]),
                    ],
                    regret_at_horizon: 0.25,
                    expected_regret_at_horizon: Some(0.0),
                    runs: 2,
                    failed_runs: 0,
                    truncated_runs: 0,
                    errored_runs: 0,
                },
                AlgorithmSummary {
                    algorithm: "baseline(0.06)".into(),
                    checkpoints: vec![CheckpointStat::from_values(100.0, &[1.0 / 3.0, 2.0])],
                    regret_at_horizon: 11.0 + 1.0 / 3.0,
                    expected_regret_at_horizon: None,
                    runs: 3,
                    failed_runs: 1,
                    truncated_runs: 0,
                    errored_runs: 1,
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip_is_stable() {
        let text = sample().to_csv_string();
        assert!(text.starts_with("algorithm,checkpoint_time,mean_payoff,stderr,ci_low,ci_high\n"));
        assert!(text.contains("oracle,regret_at_horizon,0.25\n"));
        let parsed = RegretSummary::from_csv_str(&text).unwrap();
        assert_eq!(parsed.algorithms.len(), 2);
        assert_eq!(parsed.get("baseline(0.06)").unwrap().errored_runs, 1);
        assert_eq!(parsed.to_csv_string(), text);
    }

    #[test]
    fn rejects_malformed_summary() {
        assert!(RegretSummary::from_csv_str("a,b\n").is_err());
        let bad = "algorithm,checkpoint_time,mean_payoff,stderr,ci_low,ci_high\nx,1,2\n";
        assert!(RegretSummary::from_csv_str(bad).is_err());
    }

    #[test]
    fn trajectory_rows() {
        let t = Trajectory {
            algorithm: "ctsab".into(),
            run_id: 3,
            points: vec![(0.0, 0.0, 0), (10.0, -2.5, 4)],
        };
        let mut buf = Vec::new();
        write_trajectories(&[t], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "algorithm,run_id,checkpoint_time,cumulative_payoff,cumulative_samples\n\
             ctsab,3,0,0,0\nctsab,3,10,-2.5,4\n"
        );
    }
}
