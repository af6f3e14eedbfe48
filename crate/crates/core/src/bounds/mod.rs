//! Closed-form information-theoretic quantities: the entropy function, the
//! binomial–entropy inequality, exact atypical-subspace counting with its
//! dimension chain, and secrecy-capacity bounds.
//!
//! Large values are carried as exact big integers where possible and as
//! `log₂` otherwise; `2^{3N·H}` overflows `f64` at modest `N`.

mod capacity;
mod chain;
mod entropy;

pub use capacity::{mixture_error_rate, secrecy_lower_bound, MixtureReport};
pub use chain::{
    atypical_count_exact, atypical_dim_chain, eve_info_upper, typicality_threshold, BoundReport,
    CapacityEntry, ChainOrdering, ChainValue, MuPolicy,
};
pub use entropy::{
    binary_entropy, binomial, binomial_entropy_inequality, log2_big, BinomialEntropyCheck,
};
