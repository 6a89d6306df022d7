//! Nonadiabatic dressed states (NADS) of a driven, damped two-level system.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`]: carrier-envelope pulse models with derivative stacks.
//! * [`dressed`]: closed-form NADS quantities and dressed-state construction,
//!   with the adiabatic (ADS) and bare (BS) limits.
//! * [`adiabaticity`]: the generalized adiabatic condition for all orders
//!   `(n, k)` and its frequency-form counterpart.
//! * [`dynamics`]: an independent Schrödinger-equation integrator used as an
//!   oracle for the analytic states, plus population diagnostics.
//! * [`measurement`]: stochastic nonadiabatic-loop engine, collapse on
//!   field-off and pointer readout.
//! * [`scenario`]: sectioned `key = value` scenario files and the built-in
//!   scenarios; [`export`] writes the CSV tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabaticity;
pub mod dressed;
pub mod dynamics;
pub mod export;
pub mod field;
pub mod measurement;
pub mod numerics;
pub mod scenario;
pub mod units;

pub use num_complex::Complex64 as C64;

pub use adiabaticity::{AdiabaticityOptions, AdiabaticityReport, GammaConvention};
pub use dressed::{DressedComponents, ExcitedForm, NadsError, NadsModel, NadsOptions, NadsQuantities, SystemSpec};
pub use dynamics::{IntegrationMode, PopulationSeries, StateVector};
pub use field::{Envelope, FieldError, LogDerivative, PulseSpec};
pub use measurement::{EnsembleStats, LoopState, McConfig, Outcome, RateModel};
pub use scenario::{Scenario, ScenarioError, TimeGrid};
pub use units::FrequencyUnit;
