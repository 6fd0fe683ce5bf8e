//! Algorithms for evaluating machine learning on clinical-trial data.
//!
//! The crate is `no_std` (with `alloc`) so that every metric, audit and
//! generator can be embedded anywhere; file formats, persistence and the
//! command line live in the companion `trialml` crate.
//!
//! Module map:
//!
//! * [`data_model`]: dataset types, validation, splitting and feature encoding
//! * [`demo_data`]: seeded generators reproducing published dataset statistics
//! * [`metrics`]: prediction, ranking and site-selection metrics
//! * [`audit`]: privacy, fidelity and utility audits of synthetic patient data
//! * [`baselines`]: logistic regression trained by full-batch gradient descent
//! * [`search`]: BM25 trial retrieval and the relevance-judgment harness
//! * [`simulation`]: Gaussian copula and Simulants patient generators
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// `!(x > 0.0)` deliberately treats NaN as failing the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod audit;
pub mod baselines;
pub mod data_model;
pub mod demo_data;
pub mod math;
pub mod metrics;
pub mod rng;
pub mod search;
pub mod simulation;

pub use metrics::MetricValue;
