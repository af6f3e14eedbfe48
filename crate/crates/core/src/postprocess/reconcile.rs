use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconcileParams {
    /// Expected disagreement rate; sets the first block size `0.73/ε`.
    pub error_hint: f64,
    /// Later passes double the block size up to this multiple of the first.
    pub max_growth: usize,
    pub max_passes: usize,
}

impl Default for ReconcileParams {
    fn default() -> Self {
        ReconcileParams {
            error_hint: 0.05,
            max_growth: 4,
            max_passes: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconcileOutcome {
    #[serde(skip)]
    pub corrected: Vec<u8>,
    /// Every parity bit exchanged over the public channel.
    pub leaked_bits: usize,
    pub passes: usize,
    pub corrections: usize,
    /// Two consecutive passes ended clean before `max_passes`.
    pub converged: bool,
}

fn parity(key: &[u8], idx: &[usize]) -> u8 {
    idx.iter().fold(0, |acc, &i| acc ^ key[i])
}

/// Parity-bisection reconciliation with default parameters.
pub fn reconcile<R: Rng + ?Sized>(key_a: &[u8], key_b: &[u8], rng: &mut R) -> Result<ReconcileOutcome> {
    reconcile_with(key_a, key_b, &ReconcileParams::default(), rng)
}

/// Each pass shuffles the positions, splits them into blocks and compares
/// block parities; a mismatched block is bisected (one parity per level) to
/// find and flip one error. Stops after two consecutive clean passes.
pub fn reconcile_with<R: Rng + ?Sized>(
    key_a: &[u8],
    key_b: &[u8],
    params: &ReconcileParams,
    rng: &mut R,
) -> Result<ReconcileOutcome> {
    if key_a.len() != key_b.len() {
        return Err(Error::DimensionMismatch {
            expected: key_a.len(),
            found: key_b.len(),
        });
    }
    if key_a.iter().chain(key_b).any(|&b| b > 1) {
        return Err(Error::Config("keys must hold bits 0 or 1".into()));
    }
    if !(params.error_hint > 0.0 && params.error_hint < 1.0) {
        return Err(Error::out_of_range("error_hint", params.error_hint, "must lie in (0, 1)"));
    }
    let n = key_a.len();
    let mut corrected = key_b.to_vec();
    let mut out = ReconcileOutcome {
        corrected: Vec::new(),
        leaked_bits: 0,
        passes: 0,
        corrections: 0,
        converged: n == 0,
    };
    if n == 0 {
        return Ok(out);
    }
    let first = ((0.73 / params.error_hint).round() as usize).max(8).min(n);
    let cap = (first * params.max_growth.max(1)).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut clean = 0;
    while clean < 2 && out.passes < params.max_passes {
        let block = (first << out.passes.min(20)).min(cap);
        order.shuffle(rng);
        let mut found = false;
        for chunk in order.chunks(block) {
            out.leaked_bits += 1;
            if parity(key_a, chunk) == parity(&corrected, chunk) {
                continue;
            }
            found = true;
            let mut span = chunk;
            while span.len() > 1 {
                let (left, right) = span.split_at(span.len() / 2);
                out.leaked_bits += 1;
                span = if parity(key_a, left) != parity(&corrected, left) { left } else { right };
            }
            corrected[span[0]] ^= 1;
            out.corrections += 1;
        }
        out.passes += 1;
        clean = if found { 0 } else { clean + 1 };
    }
    out.converged = clean >= 2;
    out.corrected = corrected;
    Ok(out)
}
