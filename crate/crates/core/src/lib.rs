//! A desk-scale quantum key distribution laboratory.
//!
//! The crate simulates the EPR-based key agreement scheme, BB84 and its
//! asymmetric-basis variant, exact coherent eavesdropping on a handful of
//! pairs, and evaluates the information-theoretic bounds that back the
//! security argument.
//!
//! Module map:
//!
//! * [`qstate`]: small dense complex linear algebra, Bell basis, measurement,
//!   partial trace, entropy.
//! * [`channel`]: the spherically symmetric (Werner) noisy channel.
//! * [`protocol`]: session state machines and accept/reject logic.
//! * [`adversary`]: eavesdropping strategies, passing probabilities and the
//!   conditional ancilla state.
//! * [`postprocess`]: error estimation, reconciliation, privacy amplification.
//! * [`bounds`]: entropy function, atypical-subspace counting and capacity
//!   bounds.

pub mod adversary;
pub mod bounds;
pub mod channel;
mod error;
pub mod postprocess;
pub mod protocol;
pub mod qstate;
pub mod rng;

pub use error::{Error, Result};
