//! Classical distillation of a raw key: error estimation, parity-bisection
//! reconciliation with leakage accounting, Toeplitz privacy amplification,
//! and final-length sizing from the secrecy-capacity bound.

mod amplify;
mod reconcile;

pub use amplify::{bits_to_hex, privacy_amplify};
pub use reconcile::{reconcile, reconcile_with, ReconcileOutcome, ReconcileParams};

use rand::Rng;
use serde::Serialize;

use crate::bounds::secrecy_lower_bound;
use crate::channel::ErrorRate;
use crate::protocol::Transcript;
use crate::{Error, Result};

/// Default `k'` for key sizing.
pub const DEFAULT_KPRIME: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub rate: ErrorRate,
    /// `3·√(ε̂(1−ε̂)/m)`
    pub half_width: f64,
    pub tested: usize,
}

pub fn estimate_error_rate(errors: usize, m: usize) -> Result<ErrorEstimate> {
    if m == 0 {
        return Err(Error::Config("cannot estimate an error rate from zero test outcomes".into()));
    }
    if errors > m {
        return Err(Error::Config(format!("{errors} errors in only {m} tests")));
    }
    let p = errors as f64 / m as f64;
    Ok(ErrorEstimate {
        rate: ErrorRate::new(p)?,
        half_width: 3.0 * (p * (1.0 - p) / m as f64).sqrt(),
        tested: m,
    })
}

/// `⌊n_raw · max(0, 1 + k'·ε·log₂ ε)⌋ − leaked`, clamped at zero.
/// Defined for `ε ∈ [0, 1/4)`.
pub fn final_key_length(n_raw: usize, epsilon: f64, leaked_bits: usize, kprime: f64) -> Result<usize> {
    let c = secrecy_lower_bound(epsilon, kprime)?;
    let secret = (n_raw as f64 * c).floor() as usize;
    Ok(secret.saturating_sub(leaked_bits))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawKeyPair {
    pub key_a: Vec<u8>,
    pub key_b: Vec<u8>,
    pub estimated_error: ErrorRate,
    pub leaked_bits: usize,
}

impl RawKeyPair {
    pub fn new(key_a: Vec<u8>, key_b: Vec<u8>, estimated_error: ErrorRate) -> Result<Self> {
        if key_a.len() != key_b.len() {
            return Err(Error::DimensionMismatch {
                expected: key_a.len(),
                found: key_b.len(),
            });
        }
        Ok(RawKeyPair {
            key_a,
            key_b,
            estimated_error,
            leaked_bits: 0,
        })
    }

    pub fn from_transcript(t: &Transcript) -> Result<Self> {
        let est = estimate_error_rate(t.observed_error_count, t.tested())?;
        RawKeyPair::new(t.sifted_key_a.clone(), t.sifted_key_b.clone(), est.rate)
    }
}

/// Result of the full classical pipeline on one raw key pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistilledKeys {
    pub n_raw: usize,
    pub estimated_error: f64,
    pub leaked_bits: usize,
    pub kprime: f64,
    pub final_len: usize,
    #[serde(skip)]
    pub final_a: Vec<u8>,
    #[serde(skip)]
    pub final_b: Vec<u8>,
    pub reconciled: bool,
}

impl DistilledKeys {
    pub fn keys_equal(&self) -> bool {
        self.final_a == self.final_b
    }
}

/// Reconciles, sizes the output with [`final_key_length`], and hashes both
/// sides with the same Toeplitz seed.
pub fn distill<R: Rng + ?Sized>(raw: &RawKeyPair, kprime: f64, hash_seed: u64, rng: &mut R) -> Result<DistilledKeys> {
    let eps = raw.estimated_error.value();
    let params = ReconcileParams {
        error_hint: eps.max(1e-3),
        ..ReconcileParams::default()
    };
    let rec = reconcile_with(&raw.key_a, &raw.key_b, &params, rng)?;
    let leaked = raw.leaked_bits + rec.leaked_bits;
    let final_len = final_key_length(raw.key_a.len(), eps, leaked, kprime)?;
    let final_a = privacy_amplify(&raw.key_a, final_len, hash_seed)?;
    let final_b = privacy_amplify(&rec.corrected, final_len, hash_seed)?;
    Ok(DistilledKeys {
        n_raw: raw.key_a.len(),
        estimated_error: eps,
        leaked_bits: leaked,
        kprime,
        final_len,
        final_a,
        final_b,
        reconciled: rec.converged,
    })
}
