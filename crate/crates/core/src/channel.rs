//! The spherically symmetric noisy channel.
//!
//! Each transmitted pair arrives in the Werner state
//! `F·|ψ0⟩⟨ψ0| + (1−F)/3 · Σ_{i≥1} |ψ_i⟩⟨ψ_i|`. For protocol statistics the
//! channel is realized as a classical mixture over Bell labels, which is
//! exactly equivalent and scales to millions of pairs.
//!
//! The error rate `ε` is the probability of a *parallel* outcome on a
//! uniformly random common axis, `ε = 1 − (1+2F)/3 = (2/3)(1−F)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qstate::{
    bell_vector, pauli_x, pauli_y, pauli_z, BellLabel, CMatrix, DensityMatrix, Factorization,
    MeasurementAxis, Outcome,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    fidelity: f64,
}

impl ChannelModel {
    pub fn new(fidelity: f64) -> Result<Self> {
        check_fidelity(fidelity)?;
        Ok(ChannelModel { fidelity })
    }

    pub fn ideal() -> Self {
        ChannelModel { fidelity: 1.0 }
    }

    pub fn from_error_rate(epsilon: ErrorRate) -> Result<Self> {
        ChannelModel::new(fidelity_from_epsilon(epsilon)?)
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn error_rate(&self) -> ErrorRate {
        epsilon_from_fidelity(self.fidelity).expect("fidelity validated on construction")
    }

    pub fn sample_label<R: Rng + ?Sized>(&self, rng: &mut R) -> BellLabel {
        sample_pair_label(self.fidelity, rng).expect("fidelity validated on construction")
    }
}

/// Probability of a parallel outcome on a random common axis.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ErrorRate(f64);

impl TryFrom<f64> for ErrorRate {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        ErrorRate::new(v)
    }
}

impl From<ErrorRate> for f64 {
    fn from(e: ErrorRate) -> f64 {
        e.0
    }
}

impl ErrorRate {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::out_of_range("epsilon", epsilon, "must lie in [0, 1]"));
        }
        Ok(ErrorRate(epsilon))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub const MAX_WERNER_EPSILON: f64 = 2.0 / 3.0;

fn check_fidelity(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::out_of_range("fidelity", f, "must lie in [0, 1]"));
    }
    Ok(())
}

pub fn werner_state(fidelity: f64) -> Result<DensityMatrix> {
    check_fidelity(fidelity)?;
    let mut m = CMatrix::zeros(4, 4);
    for label in BellLabel::ALL {
        let w = if label.is_singlet() { fidelity } else { (1.0 - fidelity) / 3.0 };
        let v = bell_vector(label);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] += v[i] * v[j].conj() * w;
            }
        }
    }
    DensityMatrix::new(m, Factorization::pairs(1, None)?)
}

/// `(1 + 2F)/3`.
pub fn antiparallel_prob(fidelity: f64) -> Result<f64> {
    check_fidelity(fidelity)?;
    Ok((1.0 + 2.0 * fidelity) / 3.0)
}

pub fn epsilon_from_fidelity(fidelity: f64) -> Result<ErrorRate> {
    check_fidelity(fidelity)?;
    Ok(ErrorRate(2.0 * (1.0 - fidelity) / 3.0))
}

/// Inverse of [`epsilon_from_fidelity`]; only `ε ≤ 2/3` (reached at `F = 0`)
/// has a Werner fidelity.
pub fn fidelity_from_epsilon(epsilon: ErrorRate) -> Result<f64> {
    let e = epsilon.value();
    if e > MAX_WERNER_EPSILON + 1e-15 {
        return Err(Error::out_of_range(
            "epsilon",
            e,
            "no Werner fidelity exists above 2/3",
        ));
    }
    Ok((1.0 - 1.5 * e).clamp(0.0, 1.0))
}

/// Draws a Bell label: 0 with probability `F`, each triplet with `(1−F)/3`.
pub fn sample_pair_label<R: Rng + ?Sized>(fidelity: f64, rng: &mut R) -> Result<BellLabel> {
    check_fidelity(fidelity)?;
    let u: f64 = rng.gen();
    if u < fidelity {
        return Ok(BellLabel::SINGLET);
    }
    let t = ((u - fidelity) / (1.0 - fidelity) * 3.0).floor() as u8;
    BellLabel::new(1 + t.min(2))
}

/// Correlation tensor `⟨σ_k ⊗ σ_l⟩` of a Bell state; diagonal in x, y, z.
pub fn bell_correlations(label: BellLabel) -> [f64; 3] {
    match label.index() {
        0 => [-1.0, -1.0, -1.0],
        1 => [1.0, 1.0, -1.0],
        2 => [1.0, -1.0, 1.0],
        _ => [-1.0, 1.0, 1.0],
    }
}

/// Joint outcome probabilities `P(o_a, o_b)` for a Bell-labelled pair
/// measured along `axis_a` (first qubit) and `axis_b` (second qubit).
/// Index `[a][b]` with `0 = Up`.
///
/// Bell states have uniform marginals, so `P = (1 + s_a s_b · aᵀ C b)/4`.
pub fn pair_outcome_probabilities(
    label: BellLabel,
    axis_a: &MeasurementAxis,
    axis_b: &MeasurementAxis,
) -> [[f64; 2]; 2] {
    let c = bell_correlations(label);
    let (a, b) = (axis_a.components(), axis_b.components());
    let corr: f64 = (0..3).map(|k| a[k] * c[k] * b[k]).sum();
    let same = ((1.0 + corr) / 4.0).clamp(0.0, 0.5);
    let diff = 0.5 - same;
    [[same, diff], [diff, same]]
}

/// Samples the outcomes of a Bell-labelled pair without building a state vector.
pub fn sample_pair_outcomes<R: Rng + ?Sized>(
    label: BellLabel,
    axis_a: &MeasurementAxis,
    axis_b: &MeasurementAxis,
    rng: &mut R,
) -> (Outcome, Outcome) {
    let p = pair_outcome_probabilities(label, axis_a, axis_b);
    let u: f64 = rng.gen();
    if u < p[0][0] {
        (Outcome::Up, Outcome::Up)
    } else if u < p[0][0] + p[0][1] {
        (Outcome::Up, Outcome::Down)
    } else if u < p[0][0] + p[0][1] + p[1][0] {
        (Outcome::Down, Outcome::Up)
    } else {
        (Outcome::Down, Outcome::Down)
    }
}

/// Pauli on the second qubit that maps the singlet to `ψ_label` (up to phase):
/// ψ1 ∝ (I⊗Z)ψ0, ψ2 ∝ (I⊗Y)ψ0, ψ3 ∝ (I⊗X)ψ0.
pub fn label_pauli(label: BellLabel) -> CMatrix {
    match label.index() {
        0 => CMatrix::identity(2, 2),
        1 => pauli_z(),
        2 => pauli_y(),
        _ => pauli_x(),
    }
}
