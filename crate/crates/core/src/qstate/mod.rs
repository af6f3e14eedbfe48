//! Small-dimension complex linear algebra and quantum primitives.
//!
//! States are dense double-precision vectors over a [`Factorization`]; the
//! joint dimension is capped at [`MAX_JOINT_ENTRIES`] (six pairs plus a
//! 16-dimensional ancilla). Entropies are in bits.

mod axis;
mod bell;
mod density;
mod state;

pub use axis::{
    measure_pair, measure_qubit, random_rotation, random_unitary, rotation, spin_eigenstate,
    spin_projectors, MeasurementAxis, Outcome, SpinProjectors,
};
pub use bell::{
    bell_basis, bell_change_matrix, bell_state, bell_vector, change_pair_coordinates, fidelity,
    BellLabel,
};
pub use density::{entropy_of_hermitian, partial_trace, von_neumann_entropy, DensityMatrix};
pub use state::{Factorization, QuantumState, Subsystem};

pub(crate) use state::{apply_operator as apply_operator_to, norm_sqr, reduced_unnormalized};

use crate::Result;

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Largest joint state-vector length: 4⁶ pair amplitudes × 16 ancilla levels.
pub const MAX_JOINT_ENTRIES: usize = 1 << 16;
/// Tolerance for norms of states.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance for algebraic identities (hermiticity, trace).
pub const ALGEBRA_TOL: f64 = 1e-9;
/// Eigenvalues below `−EIGEN_NEG_TOL` are non-physical.
pub const EIGEN_NEG_TOL: f64 = 1e-6;

pub fn pauli_x() -> CMatrix {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    CMatrix::from_row_slice(2, 2, &[o, l, l, o])
}

pub fn pauli_y() -> CMatrix {
    let o = C64::new(0.0, 0.0);
    CMatrix::from_row_slice(2, 2, &[o, C64::new(0.0, -1.0), C64::new(0.0, 1.0), o])
}

pub fn pauli_z() -> CMatrix {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    CMatrix::from_row_slice(2, 2, &[l, o, o, -l])
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Lifts an operator on `targets` to the full space of `factorization`.
pub fn embed(factorization: &Factorization, targets: &[usize], op: &CMatrix) -> Result<CMatrix> {
    let d = factorization.dim();
    let mut out = CMatrix::zeros(d, d);
    for col in 0..d {
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[col] = C64::new(1.0, 0.0);
        let v = state::apply_operator(factorization, &e, targets, op)?;
        for (row, z) in v.into_iter().enumerate() {
            out[(row, col)] = z;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    /// Weight of a Bell-coordinate state on each non-singlet count 0..=n.
    fn count_weights(bell_coords: &QuantumState, n_pairs: usize) -> Vec<f64> {
        let mut w = vec![0.0; n_pairs + 1];
        for (idx, a) in bell_coords.amplitudes().iter().enumerate() {
            let mut rest = idx;
            let mut count = 0;
            for _ in 0..n_pairs {
                if rest % 4 != 0 {
                    count += 1;
                }
                rest /= 4;
            }
            w[count] += a.norm_sqr();
        }
        w
    }

    #[test]
    fn pair_rotations_preserve_non_singlet_count() {
        let mut rng = stream(31, 0);
        let n_pairs = 3;
        for labels in [[0u8, 0, 0], [1, 0, 0], [2, 3, 0], [1, 2, 3], [0, 3, 0]] {
            let n = labels.iter().filter(|&&l| l != 0).count();
            let mut s = bell_state(BellLabel::new(labels[0]).unwrap());
            for &l in &labels[1..] {
                s = s.tensor(&bell_state(BellLabel::new(l).unwrap())).unwrap();
            }
            for _ in 0..20 {
                let mut rotated = s.clone();
                for p in 0..n_pairs {
                    let r = random_rotation(&mut rng);
                    rotated = rotated.apply(&[2 * p, 2 * p + 1], &kron(&r, &r)).unwrap();
                }
                assert!((rotated.norm_sqr() - 1.0).abs() < 1e-9);
                let coords = change_pair_coordinates(&rotated, n_pairs, true).unwrap();
                let w = count_weights(&coords, n_pairs);
                assert!((w[n] - 1.0).abs() < 1e-9, "labels {labels:?}: {w:?}");
            }
        }
    }

    #[test]
    fn embed_matches_apply() {
        let mut rng = stream(32, 0);
        let f = Factorization::new(vec![Subsystem::qubit("a"), Subsystem::ancilla(3), Subsystem::qubit("b")]).unwrap();
        let u = random_unitary(6, &mut rng);
        let full = embed(&f, &[2, 1], &u).unwrap();
        let s = QuantumState::basis(f.clone(), 4).unwrap();
        let direct = s.apply(&[2, 1], &u).unwrap();
        let via: Vec<C64> = full.column(4).iter().copied().collect();
        for (a, b) in direct.amplitudes().iter().zip(&via) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
