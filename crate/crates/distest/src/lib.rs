//! Distributed nonparametric estimation under bit-budget constraints.
//!
//! `m` machines each observe a noisy Haar coefficient sequence of an unknown
//! signal, encode a budget-limited bit message, and a centre aggregates the
//! messages into a global estimate. The crate provides:
//!
//! - the sequence model and deterministic, stream-addressed sampling
//!   ([`model`], [`rng`]),
//! - coefficient-ladder containers with smoothness-class norms ([`coeff`]),
//! - signal generators, including hard instances near the fixed point of the
//!   budget recursion and self-similar truths ([`signal`]),
//! - the quantize-and-frame bit channel with budget ledgers ([`channel`]),
//! - smoothness tests and data-driven smoothness selectors ([`smooth`]),
//! - non-adaptive and adaptive distributed estimators ([`estimators`]),
//! - an experiment harness measuring risk, bit usage, and empirical rate
//!   exponents ([`harness`]).
//!
//! The [`book`] module mounts the narrative guide so its examples are
//! compiled with the crate.

pub mod book;
pub mod channel;
pub mod coeff;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod rng;
pub mod signal;
pub mod smooth;

pub use error::{Error, Result};
