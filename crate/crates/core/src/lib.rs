//! Optimal liquidation of a block of shares when the market impact of each
//! sale is the product of a deterministic function of the traded amount and a
//! positive random factor driven by a Gamma subordinator.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: market, impact and noise parameters, Laplace identities,
//!   sufficient-condition checks and the TOML run configuration.
//! - [`strategy`]: discrete block schedules and piecewise-constant rate
//!   schedules, with CSV I/O.
//! - [`dp`]: backward-induction solver for the risk-neutral discrete value
//!   function, policy extraction and exact schedule evaluation.
//! - [`evaluator`]: semi-analytic continuous-time evaluator and the `J`
//!   operator for instantaneous liquidation.
//! - [`mc`]: Monte Carlo simulation of the discrete recursion and the
//!   Lévy-driven continuous dynamics.
//! - [`analysis`]: closed-form values, total market-impact cost and the
//!   random-versus-deterministic impact comparison.
//! - [`experiment`]: end-to-end experiment runner emitting CSV artifacts.
//!
//! All values are computed in normalized coordinates (cash `w = 0`, price
//! `s = 1`) unless a function takes `w` and `s` explicitly; risk-neutral
//! values map out as `w + s * value`.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dp;
pub mod error;
pub mod evaluator;
pub mod experiment;
pub mod mc;
pub mod model;
pub mod strategy;

pub use analysis::{
    compare_random_vs_baseline, fixed_gamma_tilde_params, loglinear_value, total_mi_cost,
    ComparisonPoint, ComparisonReport,
};
pub use dp::{
    convergence_sweep, evaluate_discrete, extract_schedule, solve, solve_selloff, ConvergenceRow,
    Mode, SolveSpec, ValueSurface,
};
pub use error::{Error, Result};
pub use evaluator::{evaluate_rate_analytic, j_operator, j_operator_for};
pub use experiment::{ExperimentPlan, Manifest, NoiseFamily, Scenario};
pub use mc::{
    simulate_continuous, simulate_discrete, simulate_subordinator, ConstantCoefficients, Estimate,
    McConfig, PathState, PriceDynamics, SampleMoments,
};
pub use model::{
    effective_impact_ghat, effective_impact_hhat, laplace_exponent, step_decay_factor,
    validate_conditions, ConditionReport, Config, ImpactKind, ImpactModel, MarketParams,
    NoiseModel, UtilityFn,
};
pub use strategy::{append_terminal_block, nearly_block, to_rate, DiscreteSchedule, RateSchedule};
