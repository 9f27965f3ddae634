//! Market, impact and noise parameters and the closed-form identities built
//! on them.

mod conditions;
mod config;
mod params;
mod utility;

pub use conditions::{
    eg_cond_table, validate_conditions, ConditionCheck, ConditionReport, EgCondRow,
};
pub use config::{Config, ImpactSection, MarketSection, NoiseSection, ProblemSection};
pub use params::{
    effective_impact_ghat, effective_impact_hhat, laplace_exponent, log_step_decay_factor,
    step_decay_factor, ImpactKind, ImpactModel, MarketParams, NoiseModel,
};
pub use utility::UtilityFn;
