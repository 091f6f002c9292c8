//! Feature discovery, identification and analysis for short-term power
//! demand forecasting.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`corpus`] scores candidate feature words against an anchor word
//!    (`load`) by PMI over cosine similarity (DCW).
//! 2. [`cluster`] groups the kept words into domain dimensions.
//! 3. [`stdb`] assembles the dated feature store (geography, astronomy,
//!    integrated energy, society, plus historical load).
//! 4. [`identify`] ranks dimensions by grouped Shapley attribution and
//!    filters features by variance and univariate F-score.
//! 5. [`models`] and [`analyze`] benchmark feature schemes and explain the
//!    result with Sobol indices, partial dependence, and lag correlation.

pub mod analyze;
pub mod artifact;
pub mod cluster;
pub mod corpus;
pub mod error;
pub mod identify;
mod linalg;
pub mod models;
pub mod stats;
pub mod stdb;
pub mod svg;

pub use error::{Error, Result};
