//! Closed-form machinery: normal distribution, effect functions, the
//! efficiency bound, power and sample size.

pub mod effect;
pub mod normal;
pub mod params;
pub mod power;
pub mod variance;

pub use effect::{effect_and_derivatives, EffectDefinition, EffectEval};
pub use normal::{normal_cdf, normal_pdf, normal_quantile};
pub use params::{DesignInputs, PopulationParams};
pub use power::{power, required_sample_size};
pub use variance::{efficient_variance, unadjusted_variance};
