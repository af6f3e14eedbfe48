//! Numeric check that distinguishing two non-orthogonal signals requires
//! disturbing at least one of them.
//!
//! Eve couples a signal qubit `|u_i⟩` to an ancilla prepared in `|Ψ⟩` with a
//! unitary `U` on `C² ⊗ C^d`. If `U|u_i⟩|Ψ⟩ = |u_i⟩|Φ_i⟩` for both signals
//! then unitarity forces `⟨Φ₁|Φ₂⟩ = 1` whenever `⟨u₁|u₂⟩ ≠ 0`.

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::bounds::binary_entropy;
use crate::qstate::{kron, random_unitary, CMatrix, Factorization, QuantumState, C64};
use crate::{Error, Result};

/// Two single-qubit signal states with `|⟨u₁|u₂⟩|` drawn in `[0.1, 0.95]`.
pub fn random_signal_pair<R: Rng + ?Sized>(rng: &mut R) -> (QuantumState, QuantumState) {
    let f = Factorization::qubits(1).expect("one qubit");
    let u = random_unitary(2, rng);
    let e0 = DVector::from_fn(2, |i, _| u[(i, 0)]);
    let e1 = DVector::from_fn(2, |i, _| u[(i, 1)]);
    let overlap: f64 = rng.gen_range(0.1..0.95);
    let phase = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    let v1 = e0.clone();
    let v2 = &e0 * C64::new(overlap, 0.0) + &e1 * (phase * (1.0 - overlap * overlap).sqrt());
    (
        QuantumState::normalized(v1.iter().copied().collect(), f.clone()).expect("nonzero"),
        QuantumState::normalized(v2.iter().copied().collect(), f).expect("nonzero"),
    )
}

fn check_signal(u: &QuantumState) -> Result<()> {
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: u.dim(),
        });
    }
    Ok(())
}

/// A random unitary on signal ⊗ ancilla that leaves every signal state
/// untouched when the ancilla starts in `ready`: identity on
/// `C² ⊗ |ready⟩`, a random unitary on its orthogonal complement, followed
/// by a random unitary on the ancilla alone.
pub fn fixing_unitary<R: Rng + ?Sized>(ready: &QuantumState, rng: &mut R) -> Result<CMatrix> {
    let d = ready.dim();
    let big = 2 * d;
    let psi = DVector::from_column_slice(ready.amplitudes());
    let mut m = CMatrix::zeros(big, big);
    for s in 0..2 {
        for a in 0..d {
            m[(s * d + a, s)] = psi[a];
        }
    }
    let fill = random_unitary(big, rng);
    for j in 2..big {
        m.set_column(j, &fill.column(j));
    }
    let q = m.qr().q();
    let mut inner = CMatrix::identity(big, big);
    if big > 2 {
        let r = random_unitary(big - 2, rng);
        inner.view_mut((2, 2), (big - 2, big - 2)).copy_from(&r);
    }
    let w = &q * inner * q.adjoint();
    let v = random_unitary(d, rng);
    Ok(kron(&CMatrix::identity(2, 2), &v) * w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionReport {
    /// `|⟨u₁|u₂⟩|`
    pub signal_overlap: f64,
    /// `⟨u_i|ρ_i|u_i⟩` for the signal after the interaction.
    pub signal_fidelity: [f64; 2],
    /// `max_i (1 − signal_fidelity[i])`
    pub fidelity_deficit: f64,
    /// `|⟨Φ₁|Φ₂⟩|` for the ancilla components along the undisturbed signals.
    pub ancilla_overlap: f64,
    /// Mutual information (bits) of the optimal two-outcome measurement on
    /// the ancilla, with equal priors on the two signals.
    pub distinguishing_bits: f64,
}

/// Runs both signals through `unitary` with the ancilla in `ready`.
pub fn analyze_interaction(
    u1: &QuantumState,
    u2: &QuantumState,
    ready: &QuantumState,
    unitary: &CMatrix,
) -> Result<InteractionReport> {
    check_signal(u1)?;
    check_signal(u2)?;
    let d = ready.dim();
    let big = 2 * d;
    if unitary.nrows() != big || unitary.ncols() != big {
        return Err(Error::DimensionMismatch {
            expected: big,
            found: unitary.nrows(),
        });
    }
    let run = |u: &QuantumState| -> DVector<C64> {
        let mut input = DVector::zeros(big);
        for s in 0..2 {
            for a in 0..d {
                input[s * d + a] = u.amplitudes()[s] * ready.amplitudes()[a];
            }
        }
        unitary * input
    };
    let outs = [run(u1), run(u2)];
    let signals = [u1, u2];

    // ancilla component along the undisturbed signal: (⟨u_i| ⊗ I) out_i
    let mut phi = Vec::with_capacity(2);
    let mut signal_fidelity = [0.0; 2];
    for i in 0..2 {
        let u = signals[i].amplitudes();
        let comp = DVector::from_fn(d, |a, _| u[0].conj() * outs[i][a] + u[1].conj() * outs[i][d + a]);
        signal_fidelity[i] = comp.norm_squared().clamp(0.0, 1.0);
        phi.push(comp);
    }
    let ancilla_overlap = if phi.iter().all(|p| p.norm() > 1e-12) {
        (phi[0].dotc(&phi[1]) / (phi[0].norm() * phi[1].norm())).norm()
    } else {
        0.0
    };

    // reduced ancilla states and the Helstrom projector
    let sigma = |out: &DVector<C64>| -> CMatrix {
        let m = CMatrix::from_fn(d, 2, |a, s| out[s * d + a]);
        &m * m.adjoint()
    };
    let (s1, s2) = (sigma(&outs[0]), sigma(&outs[1]));
    let delta = &s1 - &s2;
    let delta = (&delta + delta.adjoint()) * C64::new(0.5, 0.0);
    let eig = delta.symmetric_eigen();
    let mut proj = CMatrix::zeros(d, d);
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda > 0.0 {
            let v = eig.eigenvectors.column(k);
            proj += &v * v.adjoint();
        }
    }
    let p1 = (&proj * &s1).trace().re.clamp(0.0, 1.0);
    let p2 = (&proj * &s2).trace().re.clamp(0.0, 1.0);
    let h = |x: f64| binary_entropy(x.clamp(0.0, 1.0));
    let distinguishing_bits = (h((p1 + p2) / 2.0)? - (h(p1)? + h(p2)?) / 2.0).max(0.0);

    Ok(InteractionReport {
        signal_overlap: u1.inner(u2)?.norm(),
        signal_fidelity,
        fidelity_deficit: signal_fidelity.iter().map(|f| 1.0 - f).fold(0.0, f64::max),
        ancilla_overlap,
        distinguishing_bits,
    })
}
