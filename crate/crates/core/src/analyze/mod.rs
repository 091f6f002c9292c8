//! Post-identification analysis: Sobol sensitivity over dimension
//! aggregates, partial dependence, lag correlation, and beeswarm export.

mod aggregate;
mod beeswarm;
mod lag;
mod pdp;
mod sobol;

pub use aggregate::dimension_aggregate;
pub use beeswarm::beeswarm_export;
pub use lag::{lag_correlation, lags_csv, LagReport, MIN_OVERLAP};
pub use pdp::{partial_dependence, PdpCurve};
pub use sobol::{sobol_indices, sobol_pointwise, PairIndex, SobolReport, BOOTSTRAP_RESAMPLES, MAX_SAMPLES, MIN_SAMPLES};
