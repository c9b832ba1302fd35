//! Surrogate modeling of an analytic turbofan over its flight envelope,
//! with output-space rebalancing of the training data.
//!
//! The pipeline runs in stages:
//!
//! 1. [`envelope`]: Latin hypercube sampling of the flight envelope.
//! 2. [`simulator`]: evaluation of the stand-in engine model.
//! 3. [`active_learning`]: nearest-neighbour downsampling toward a uniform
//!    output distribution.
//! 4. [`surrogate`]: feedforward network training and hyperparameter sweep.
//! 5. [`metrics`]: relative-error buckets, uniformity and boundary analysis.
//!
//! [`pipeline`] chains the stages from a [`config::PipelineConfig`].

// Negated comparisons such as `!(x > 0.0)` are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_learning;
pub mod config;
pub mod dataset;
pub mod envelope;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod qmc;
pub mod simulator;
pub mod surrogate;

pub use dataset::{Dataset, NormStats, OutputBounds, Provenance};
pub use envelope::{Envelope, FlightPoint, InputDim, Interval};
pub use error::{Error, Result};
pub use simulator::{EngineOutputs, OutputDim, TurbofanModel};
pub use surrogate::{HyperParams, SurrogateModel};
