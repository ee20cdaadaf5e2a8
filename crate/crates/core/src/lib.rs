//! Entry, exit and size-dependent growth model of the mutual fund industry.
//!
//! Funds enter as a Poisson process, exit at a size-independent hazard and
//! grow multiplicatively with size-dependent drift and volatility. The crate
//! provides closed-form densities for constant coefficients, Monte Carlo
//! engines for the general case, the estimators that calibrate the model from
//! fund-month data, and distribution utilities for comparing the two.
//!
//! Time is in months and sizes in millions of USD throughout; `omega` is the
//! natural log of size.

// Negated float comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod analytic;
pub mod calibrate;
pub mod curve;
pub mod error;
pub mod params;
pub mod quadrature;
pub mod rng;
pub mod simulator;
pub mod special;
pub mod stats;
pub mod synth;

pub use calibrate::panel::{FundRecord, Month};
pub use calibrate::pipeline::{calibrate, CalibrationOptions, CalibrationReport};
pub use calibrate::regression::{Estimate, FitResult};
pub use curve::DensityCurve;
pub use error::{Error, Result};
pub use params::{DiffusionConstants, EntryVariance, ModelParams};
pub use simulator::{run_ensemble, Engine, EnsembleResult, PopulationState, SimulationOptions};
pub use stats::{ReferenceDistribution, StdDev};
