//! Continuous-time multi-arm bandits with a sampling cost.
//!
//! A learner chooses both *which* arm to play and *when*. Each play returns a
//! Bernoulli reward and costs `lambda / dt`, where `dt` is the time since the
//! previous play of any arm. The oracle that knows the means samples the best
//! arm `mu[1] T / (2 lambda)` times at equal spacing and earns
//! `mu[1]^2 T / (4 lambda)`.
//!
//! Modules:
//!
//! * [`model`]: closed-form payoff, cost and oracle arithmetic.
//! * [`env`]: seeded Bernoulli arms, the [`Policy`] contract and [`run_policy`].
//! * [`baselines`]: oracle and fixed-rate reference policies.
//! * [`ctsab`]: the single-arm phased learner.
//! * [`lucb`]: LUCB1 best-arm identification on a continuous clock.
//! * [`ctmab`]: the multi-arm learner (estimation, identification, exploit).
//! * [`harness`]: replicated experiments, regret summaries and CSV output.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod ctmab;
pub mod ctsab;
pub mod env;
pub mod error;
pub mod harness;
pub mod lucb;
pub mod model;
pub mod phase;
pub mod stats;

pub use baselines::{FixedRateConfig, FixedRatePolicy, OraclePolicy};
pub use ctmab::{run_ctmab, CtmabConfig, CtmabPolicy, CtmabReport};
pub use ctsab::{run_ctsab, CtsabConfig, CtsabPolicy};
pub use env::{run_policy, Bandit, Decision, Environment, Policy, RunTrace, SampleEvent, Termination};
pub use error::{Error, Result};
pub use harness::{AlgorithmSpec, ExperimentConfig, RegretSummary};
pub use lucb::{run_identification, LucbState};
pub use model::{PayoffLedger, ProblemInstance, SamplingSchedule};
pub use phase::{PhaseKind, PhasePlan};
pub use stats::EmpiricalStats;
