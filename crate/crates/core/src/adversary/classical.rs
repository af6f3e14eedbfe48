use rand::seq::index::sample;
use rand::Rng;

use super::{BasisPolicy, LabelDistribution};
use crate::protocol::Basis;
use crate::qstate::{measure_qubit, BellLabel, Outcome, QuantumState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InterceptOutcome {
    /// State forwarded to the receiver.
    pub resent: QuantumState,
    pub eve_basis: Basis,
    pub eve_result: Outcome,
}

fn choose_basis<R: Rng + ?Sized>(policy: BasisPolicy, rng: &mut R) -> Basis {
    match policy {
        BasisPolicy::Rectilinear => Basis::Rectilinear,
        BasisPolicy::Diagonal => Basis::Diagonal,
        BasisPolicy::Random => {
            if rng.gen::<bool>() {
                Basis::Rectilinear
            } else {
                Basis::Diagonal
            }
        }
    }
}

/// Measures a single photon in a basis chosen by `policy` and resends the
/// eigenstate matching the result.
pub fn intercept_resend<R: Rng + ?Sized>(
    photon: &QuantumState,
    policy: BasisPolicy,
    rng: &mut R,
) -> Result<InterceptOutcome> {
    let subs = photon.factorization().subsystems();
    if subs.len() != 1 || !subs[0].is_qubit() {
        return Err(Error::InvalidState("intercept-resend expects a single qubit".into()));
    }
    intercept_resend_on(photon, 0, policy, rng)
}

/// Intercept-resend on one qubit of a larger state (Bob's half of a pair).
/// A projective measurement already leaves the measured qubit in the
/// eigenstate Eve would resend.
pub(crate) fn intercept_resend_on<R: Rng + ?Sized>(
    state: &QuantumState,
    qubit: usize,
    policy: BasisPolicy,
    rng: &mut R,
) -> Result<InterceptOutcome> {
    let eve_basis = choose_basis(policy, rng);
    let (eve_result, resent) = measure_qubit(state, qubit, &eve_basis.axis(), rng)?;
    Ok(InterceptOutcome {
        resent,
        eve_basis,
        eve_result,
    })
}

/// Exactly `round(a·N)` distinct positions, uniformly at random, sorted.
pub(crate) fn substitution_positions<R: Rng + ?Sized>(
    n: usize,
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::out_of_range("substitution fraction", fraction, "must lie in [0, 1]"));
    }
    let k = ((fraction * n as f64).round() as usize).min(n);
    let mut idx = sample(rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Bell labels for `N` pairs where a fraction `a` of the positions carry
/// labels drawn from `labels` and the rest are singlets.
pub fn substitute_pairs<R: Rng + ?Sized>(
    n: usize,
    fraction: f64,
    labels: &LabelDistribution,
    rng: &mut R,
) -> Result<Vec<BellLabel>> {
    let mut out = vec![BellLabel::SINGLET; n];
    for p in substitution_positions(n, fraction, rng)? {
        out[p] = labels.sample(rng);
    }
    Ok(out)
}
