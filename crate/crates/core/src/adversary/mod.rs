//! Eavesdropping strategies.
//!
//! Classical strategies (intercept-resend, Bell-state substitution) act on
//! individual pairs or photons and scale to long sessions. Coherent attacks
//! prepare one joint state of `N ≤ 6` pairs entangled with an ancilla of
//! dimension `≤ 16`; for those the passing probability of a sampling test and
//! the ancilla state conditioned on passing are computed exactly by
//! enumerating Born weights.

mod classical;
mod coherent;
mod format;
pub mod no_cloning;

pub use classical::{intercept_resend, substitute_pairs, InterceptOutcome};
pub(crate) use classical::{intercept_resend_on, substitution_positions};
pub use coherent::{
    conditional_ancilla_state, eve_info_bound, passing_probability,
    passing_probability_averaged, typicality_split, Acceptance, AveragedPassing, CoherentAttack,
    TestPlan, TypicalitySplit, MAX_ANCILLA_DIM, MAX_COHERENT_PAIRS,
};

use serde::{Deserialize, Serialize};

use crate::qstate::BellLabel;
use crate::{Error, Result};

/// Which basis an intercepting eavesdropper measures in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisPolicy {
    Rectilinear,
    Diagonal,
    /// Fair coin between the two.
    Random,
}

/// Distribution over replacement Bell labels; label 0 must carry no weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution([f64; 4]);

impl LabelDistribution {
    pub fn new(weights: [f64; 4]) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Config("label weights must be nonnegative".into()));
        }
        if weights[0] != 0.0 {
            return Err(Error::Config(
                "a substitution distribution must not put weight on the singlet".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("label weights sum to {total}, not 1")));
        }
        Ok(LabelDistribution(weights))
    }

    pub fn uniform_triplets() -> Self {
        LabelDistribution([0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])
    }

    pub fn weights(&self) -> [f64; 4] {
        self.0
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> BellLabel {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for label in BellLabel::ALL {
            acc += self.0[label.index()];
            if u < acc {
                return label;
            }
        }
        // round-off at the top end: last label with positive weight
        BellLabel::ALL
            .into_iter()
            .rev()
            .find(|l| self.0[l.index()] > 0.0)
            .expect("weights sum to one")
    }
}

/// An eavesdropping strategy plugged into a session.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackSpec {
    None,
    /// Measure a fraction of the transmitted particles and resend the result.
    InterceptResend { policy: BasisPolicy, fraction: f64 },
    /// Replace a fraction of the pairs by non-singlet Bell states.
    Substitute { fraction: f64, labels: LabelDistribution },
    /// Prepare a joint state of all pairs and an ancilla.
    Coherent(CoherentAttack),
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            AttackSpec::InterceptResend { fraction, .. } | AttackSpec::Substitute { fraction, .. }
                if !(0.0..=1.0).contains(fraction) =>
            {
                Err(Error::out_of_range("attack fraction", *fraction, "must lie in [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::None => "none",
            AttackSpec::InterceptResend { .. } => "intercept_resend",
            AttackSpec::Substitute { .. } => "substitute",
            AttackSpec::Coherent(_) => "coherent",
        }
    }
}
