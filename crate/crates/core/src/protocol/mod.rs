//! Session state machines for the EPR scheme and (asymmetric) BB84.
//!
//! A session runs in a fixed order: transmission (the only phase an
//! eavesdropper can touch), delivery acknowledgment, public announcement of
//! axes or bases, comparison of a random test sample, verdict. The ordering
//! is enforced by the types in [`transit`]: announcement needs a
//! [`transit::Delivered`] value, which only exists once the attack hook has
//! been consumed.

mod bb84;
mod config;
mod epr;
pub mod transcript;
pub mod transit;

pub use bb84::{
    epr_bb84_equivalence_check, run_bb84_session, run_bb84_session_with_source, EquivalenceReport,
    JointFrequencies, PhotonSource,
};
pub use config::{
    acceptance_window, default_bb84_test_size, default_test_size, select_test_set, AcceptanceWindow,
    Basis, DiagonalTestPolicy, SessionConfig, Threshold, ThresholdMode, Verdict,
};
pub use epr::run_epr_session;
pub use transcript::{PositionRecord, ProtocolKind, SessionEvent, Setting, Transcript};
