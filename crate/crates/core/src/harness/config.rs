//! Experiment configuration files.
//!
//! One `key = value` pair per line, `#` starts a comment, lists are
//! comma-separated. Example:
//!
//! ```text
//! means = 0.3
//! horizon = 60000
//! algorithms = oracle, baseline(0.06), baseline(0.045), ctsab
//! epsilon = 0.05
//! delta = 0.05
//! runs = 50
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::ctmab::CtmabConfig;
use crate::ctsab::{CtsabConfig, DEFAULT_KAPPA};
use crate::error::{Error, Result};
use crate::model::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgorithmSpec {
    Oracle,
    /// Fixed-rate sampling of the best arm; `None` takes `rate_param`.
    Baseline(Option<f64>),
    Ctsab,
    Ctmab,
}

impl FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "oracle" => return Ok(Self::Oracle),
            "ctsab" => return Ok(Self::Ctsab),
            "ctmab" => return Ok(Self::Ctmab),
            "baseline" => return Ok(Self::Baseline(None)),
            _ => {}
        }
        let rate = s
            .strip_prefix("baseline(")
            .and_then(|rest| rest.strip_suffix(')'))
            .ok_or_else(|| Error::config(format!("unknown algorithm `{s}`")))?;
        let rate: f64 = rate
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad baseline rate in `{s}`")))?;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::config(format!("baseline rate must be positive in `{s}`")));
        }
        Ok(Self::Baseline(Some(rate)))
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Oracle => f.write_str("oracle"),
            Self::Baseline(Some(rate)) => write!(f, "baseline({rate})"),
            Self::Baseline(None) => f.write_str("baseline"),
            Self::Ctsab => f.write_str("ctsab"),
            Self::Ctmab => f.write_str("ctmab"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub means: Vec<f64>,
    pub lambda: f64,
    pub horizon: f64,
    pub algorithms: Vec<AlgorithmSpec>,
    pub epsilon: f64,
    pub kappa: f64,
    pub delta: f64,
    pub nu_m: Option<f64>,
    pub rate_param: Option<f64>,
    pub runs: usize,
    pub base_seed: u64,
    pub trajectory_grid: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Config with the defaults used for every key that a file leaves out.
    pub fn new(means: Vec<f64>, horizon: f64, algorithms: Vec<AlgorithmSpec>) -> Self {
        Self {
            means,
            lambda: 1.0,
            horizon,
            algorithms,
            epsilon: 0.05,
            kappa: DEFAULT_KAPPA,
            delta: 0.05,
            nu_m: None,
            rate_param: None,
            runs: 50,
            base_seed: 0,
            trajectory_grid: 101,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn instance(&self) -> Result<ProblemInstance> {
        ProblemInstance::new(self.means.clone(), self.lambda, self.horizon)
    }

    pub fn ctsab(&self) -> Result<CtsabConfig> {
        CtsabConfig::new(self.epsilon, self.kappa, self.delta, self.horizon)
    }

    pub fn ctmab(&self) -> Result<CtmabConfig> {
        CtmabConfig::new(self.epsilon, self.kappa, self.delta, self.nu_m, self.horizon)
    }

    /// Rate for a baseline entry, falling back to `rate_param`.
    pub fn baseline_rate(&self, spec: AlgorithmSpec) -> Result<f64> {
        match spec {
            AlgorithmSpec::Baseline(Some(rate)) => Ok(rate),
            AlgorithmSpec::Baseline(None) => self
                .rate_param
                .ok_or_else(|| Error::config("`baseline` without a rate needs rate_param")),
            other => Err(Error::config(format!("{other} has no rate"))),
        }
    }

    /// Column label of an algorithm in output files.
    pub fn label(&self, spec: AlgorithmSpec) -> String {
        match spec {
            AlgorithmSpec::Baseline(None) => match self.rate_param {
                Some(rate) => AlgorithmSpec::Baseline(Some(rate)).to_string(),
                None => spec.to_string(),
            },
            _ => spec.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let instance = self.instance()?;
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.trajectory_grid < 2 {
            return Err(Error::config("trajectory_grid must be at least 2"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("no algorithms configured"));
        }
        let mut labels = BTreeSet::new();
        for &spec in &self.algorithms {
            if !labels.insert(self.label(spec)) {
                return Err(Error::config(format!("algorithm {} listed twice", self.label(spec))));
            }
            match spec {
                AlgorithmSpec::Oracle => {}
                AlgorithmSpec::Baseline(_) => {
                    self.baseline_rate(spec)?;
                }
                AlgorithmSpec::Ctsab => {
                    if instance.num_arms() != 1 {
                        return Err(Error::config("ctsab is a single-arm algorithm"));
                    }
                    self.ctsab()?;
                }
                AlgorithmSpec::Ctmab => {
                    if instance.num_arms() < 2 {
                        return Err(Error::config("ctmab needs at least two arms"));
                    }
                    self.ctmab()?;
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut means = None;
        let mut horizon = None;
        let mut algorithms = None;
        let mut config = Self::new(Vec::new(), 0.0, Vec::new());
        let mut seen = BTreeSet::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            let at = |e: Error| Error::config(format!("line {}: {e}", lineno + 1));
            match key {
                "means" => means = Some(parse_list::<f64>(key, value).map_err(at)?),
                "lambda" => config.lambda = parse_value(key, value).map_err(at)?,
                "horizon" => horizon = Some(parse_value(key, value).map_err(at)?),
                "algorithms" => {
                    algorithms = Some(
                        split_list(value)
                            .map(str::parse)
                            .collect::<Result<Vec<AlgorithmSpec>>>()
                            .map_err(at)?,
                    )
                }
                "epsilon" => config.epsilon = parse_value(key, value).map_err(at)?,
                "kappa" => config.kappa = parse_value(key, value).map_err(at)?,
                "delta" => config.delta = parse_value(key, value).map_err(at)?,
                "nu_m" => config.nu_m = Some(parse_value(key, value).map_err(at)?),
                "rate_param" => config.rate_param = Some(parse_value(key, value).map_err(at)?),
                "runs" => config.runs = parse_value(key, value).map_err(at)?,
                "base_seed" => config.base_seed = parse_value(key, value).map_err(at)?,
                "trajectory_grid" => config.trajectory_grid = parse_value(key, value).map_err(at)?,
                "output_dir" => config.output_dir = PathBuf::from(value),
                _ => return Err(Error::config(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }

        config.means = means.ok_or_else(|| Error::config("missing key `means`"))?;
        config.horizon = horizon.ok_or_else(|| Error::config("missing key `horizon`"))?;
        config.algorithms = algorithms.ok_or_else(|| Error::config("missing key `algorithms`"))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serializes back to the file format; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        out.push_str(&format!("means = {}\n", list(&self.means)));
        out.push_str(&format!("lambda = {}\n", self.lambda));
        out.push_str(&format!("horizon = {}\n", self.horizon));
        let algos: Vec<String> = self.algorithms.iter().map(ToString::to_string).collect();
        out.push_str(&format!("algorithms = {}\n", algos.join(", ")));
        out.push_str(&format!("epsilon = {}\n", self.epsilon));
        out.push_str(&format!("kappa = {}\n", self.kappa));
        out.push_str(&format!("delta = {}\n", self.delta));
        if let Some(nu) = self.nu_m {
            out.push_str(&format!("nu_m = {nu}\n"));
        }
        if let Some(rate) = self.rate_param {
            out.push_str(&format!("rate_param = {rate}\n"));
        }
        out.push_str(&format!("runs = {}\n", self.runs));
        out.push_str(&format!("base_seed = {}\n", self.base_seed));
        out.push_str(&format!("trajectory_grid = {}\n", self.trajectory_grid));
        out.push_str(&format!("output_dir = {}\n", self.output_dir.display()));
        out
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("cannot parse `{value}` for `{key}`")))
}

pub(crate) fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items = split_list(value)
        .map(|v| parse_value(key, v))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::config(format!("`{key}` is empty")));
    }
    Ok(items)
}
