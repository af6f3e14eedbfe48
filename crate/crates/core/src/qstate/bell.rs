use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CMatrix, DensityMatrix, Factorization, QuantumState, C64};
use crate::{Error, Result};

/// Index of a Bell-basis state: 0 is the singlet, 1..=3 the triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BellLabel(u8);

impl BellLabel {
    pub const SINGLET: BellLabel = BellLabel(0);
    pub const ALL: [BellLabel; 4] = [BellLabel(0), BellLabel(1), BellLabel(2), BellLabel(3)];

    pub fn new(index: u8) -> Result<Self> {
        if index < 4 {
            Ok(BellLabel(index))
        } else {
            Err(Error::out_of_range("bell label", index as f64, "must be 0..=3"))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_singlet(self) -> bool {
        self.0 == 0
    }
}

impl TryFrom<u8> for BellLabel {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        BellLabel::new(v)
    }
}

impl From<BellLabel> for u8 {
    fn from(l: BellLabel) -> u8 {
        l.0
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ψ{}", self.0)
    }
}

/// Amplitudes of `ψ_label` in the computational basis `|00⟩,|01⟩,|10⟩,|11⟩`.
///
/// ψ0 = (|01⟩−|10⟩)/√2, ψ1 = (|01⟩+|10⟩)/√2,
/// ψ2 = (|00⟩+|11⟩)/√2, ψ3 = (|00⟩−|11⟩)/√2.
pub fn bell_vector(label: BellLabel) -> [C64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let p = C64::new(h, 0.0);
    let m = C64::new(-h, 0.0);
    match label.0 {
        0 => [z, p, m, z],
        1 => [z, p, p, z],
        2 => [p, z, z, p],
        _ => [p, z, z, m],
    }
}

pub fn bell_state(label: BellLabel) -> QuantumState {
    QuantumState::new(bell_vector(label).to_vec(), Factorization::pairs(1, None).expect("one pair"))
        .expect("Bell vectors are normalized")
}

/// The four Bell states, ψ0 (singlet) first.
pub fn bell_basis() -> [QuantumState; 4] {
    BellLabel::ALL.map(bell_state)
}

/// Unitary whose row `i` is `⟨ψ_i|`; maps computational amplitudes of a pair
/// to Bell coordinates. Its adjoint maps back.
pub fn bell_change_matrix() -> CMatrix {
    CMatrix::from_fn(4, 4, |i, k| bell_vector(BellLabel(i as u8))[k].conj())
}

/// `⟨ψ0|M|ψ0⟩` for a single-pair density matrix.
pub fn fidelity(m: &DensityMatrix) -> Result<f64> {
    let subs = m.factorization().subsystems();
    if m.dim() != 4 || subs.len() != 2 || !subs.iter().all(|s| s.is_qubit()) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: m.dim(),
        });
    }
    let v = bell_vector(BellLabel::SINGLET);
    let e = m.entries();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += v[i].conj() * e[(i, j)] * v[j];
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Converts a state over `n` pairs (subsystems `a0 b0 … a_{n−1} b_{n−1}`,
/// optionally followed by further subsystems) between computational and Bell
/// coordinates. `to_bell = true` applies `⟨ψ_i|` per pair.
pub fn change_pair_coordinates(state: &QuantumState, n_pairs: usize, to_bell: bool) -> Result<QuantumState> {
    let b = bell_change_matrix();
    let op = if to_bell { b } else { b.adjoint() };
    let mut s = state.clone();
    for p in 0..n_pairs {
        s = s.apply(&[2 * p, 2 * p + 1], &op)?;
    }
    Ok(s)
}
