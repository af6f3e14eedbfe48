use serde::{Deserialize, Serialize};

use super::{CMatrix, C64, MAX_JOINT_ENTRIES, NORM_TOL};
use crate::{Error, Result};

/// One tensor factor of a joint Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

impl Subsystem {
    pub fn qubit(label: impl Into<String>) -> Self {
        Subsystem {
            label: label.into(),
            dim: 2,
        }
    }

    pub fn ancilla(dim: usize) -> Self {
        Subsystem {
            label: "ancilla".into(),
            dim,
        }
    }

    pub fn is_qubit(&self) -> bool {
        self.dim == 2
    }
}

/// Ordered list of subsystems. The first subsystem is the most significant
/// digit of a flat basis index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization(Vec<Subsystem>);

impl Factorization {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::InvalidState("empty factorization".into()));
        }
        if let Some(s) = subsystems.iter().find(|s| s.dim == 0) {
            return Err(Error::InvalidState(format!("subsystem {} has dimension 0", s.label)));
        }
        let f = Factorization(subsystems);
        let total = f
            .0
            .iter()
            .try_fold(1usize, |acc, s| acc.checked_mul(s.dim))
            .unwrap_or(usize::MAX);
        if total > MAX_JOINT_ENTRIES {
            return Err(Error::CapExceeded {
                requested: total,
                cap: MAX_JOINT_ENTRIES,
            });
        }
        Ok(f)
    }

    /// `n` pairs laid out as `a0 b0 a1 b1 ...`, optionally followed by an ancilla.
    pub fn pairs(n: usize, ancilla_dim: Option<usize>) -> Result<Self> {
        let mut subs = Vec::with_capacity(2 * n + 1);
        for p in 0..n {
            subs.push(Subsystem::qubit(format!("a{p}")));
            subs.push(Subsystem::qubit(format!("b{p}")));
        }
        if let Some(d) = ancilla_dim {
            subs.push(Subsystem::ancilla(d));
        }
        Factorization::new(subs)
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Factorization::new((0..n).map(|i| Subsystem::qubit(format!("q{i}"))).collect())
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0.iter().map(|s| s.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.0.iter().map(|s| s.dim).collect()
    }

    /// Factorization restricted to `keep`, in the original order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let keep = self.normalize_subset(keep)?;
        Factorization::new(keep.iter().map(|&k| self.0[k].clone()).collect())
    }

    pub(crate) fn normalize_subset(&self, subset: &[usize]) -> Result<Vec<usize>> {
        if subset.is_empty() {
            return Err(Error::InvalidState("subsystem subset is empty".into()));
        }
        let mut s = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.len() != subset.len() {
            return Err(Error::InvalidState("subsystem subset has duplicates".into()));
        }
        if let Some(&bad) = s.iter().find(|&&k| k >= self.0.len()) {
            return Err(Error::InvalidState(format!(
                "subsystem {bad} not in a factorization of {} subsystems",
                self.0.len()
            )));
        }
        Ok(s)
    }

    pub(crate) fn complement(&self, subset: &[usize]) -> Vec<usize> {
        (0..self.0.len()).filter(|k| !subset.contains(k)).collect()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.0[k + 1].dim;
        }
        strides
    }

    /// Flat-index offsets of every basis state of `targets` (in the given
    /// order, first target most significant) with all other digits zero.
    pub(crate) fn offsets(&self, targets: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &t in targets {
            let mut next = Vec::with_capacity(out.len() * self.0[t].dim);
            for &base in &out {
                for d in 0..self.0[t].dim {
                    next.push(base + d * strides[t]);
                }
            }
            out = next;
        }
        out
    }
}

/// A normalized pure state over a factorized Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<C64>,
    factorization: Factorization,
}

impl QuantumState {
    /// Validates length and norm; unnormalized input is rejected.
    pub fn new(amplitudes: Vec<C64>, factorization: Factorization) -> Result<Self> {
        if amplitudes.len() != factorization.dim() {
            return Err(Error::DimensionMismatch {
                expected: factorization.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = norm_sqr(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(QuantumState {
            amplitudes,
            factorization,
        })
    }

    /// Rescales `amplitudes` to unit norm. Fails on the zero vector.
    pub fn normalized(mut amplitudes: Vec<C64>, factorization: Factorization) -> Result<Self> {
        let norm = norm_sqr(&amplitudes).sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        QuantumState::new(amplitudes, factorization)
    }

    pub fn basis(factorization: Factorization, index: usize) -> Result<Self> {
        let dim = factorization.dim();
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(QuantumState {
            amplitudes: amps,
            factorization,
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    pub fn tensor(&self, other: &QuantumState) -> Result<Self> {
        let mut subs = self.factorization.subsystems().to_vec();
        subs.extend_from_slice(other.factorization.subsystems());
        let factorization = Factorization::new(subs)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        Ok(QuantumState {
            amplitudes: amps,
            factorization,
        })
    }

    /// Applies a unitary acting on `targets`. The operator's row ordering
    /// follows the order of `targets`.
    pub fn apply(&self, targets: &[usize], unitary: &CMatrix) -> Result<Self> {
        let amps = apply_operator(&self.factorization, &self.amplitudes, targets, unitary)?;
        QuantumState::new(amps, self.factorization.clone())
    }

    /// Applies an arbitrary operator without renormalizing. Used for
    /// projections, whose output norm is a Born weight.
    pub fn apply_raw(&self, targets: &[usize], op: &CMatrix) -> Result<Vec<C64>> {
        apply_operator(&self.factorization, &self.amplitudes, targets, op)
    }

    /// Reduced density matrix of `keep` (pure-state partial trace).
    pub fn reduced(&self, keep: &[usize]) -> Result<super::DensityMatrix> {
        reduced_from_amplitudes(&self.factorization, &self.amplitudes, keep)
    }

    pub fn density(&self) -> super::DensityMatrix {
        let n = self.dim();
        let v = CMatrix::from_column_slice(n, 1, &self.amplitudes);
        super::DensityMatrix::from_parts_unchecked(&v * v.adjoint(), self.factorization.clone())
    }
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn apply_operator(
    factorization: &Factorization,
    amplitudes: &[C64],
    targets: &[usize],
    op: &CMatrix,
) -> Result<Vec<C64>> {
    if targets.is_empty() {
        return Err(Error::InvalidState("operator has no target subsystems".into()));
    }
    let sorted = factorization.normalize_subset(targets)?;
    let target_dim: usize = targets
        .iter()
        .map(|&t| factorization.subsystems()[t].dim)
        .product();
    if op.nrows() != target_dim || op.ncols() != target_dim {
        return Err(Error::DimensionMismatch {
            expected: target_dim,
            found: op.nrows().max(op.ncols()),
        });
    }
    let t_off = factorization.offsets(targets);
    let r_off = factorization.offsets(&factorization.complement(&sorted));
    let mut out = vec![C64::new(0.0, 0.0); amplitudes.len()];
    let mut local = vec![C64::new(0.0, 0.0); target_dim];
    for &r in &r_off {
        for (slot, &t) in local.iter_mut().zip(&t_off) {
            *slot = amplitudes[r + t];
        }
        for (i, &ti) in t_off.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, l) in local.iter().enumerate() {
                acc += op[(i, j)] * l;
            }
            out[r + ti] = acc;
        }
    }
    Ok(out)
}

/// `Tr_rest |v⟩⟨v|` for a possibly unnormalized vector; the result is left
/// unnormalized so callers can accumulate Born-weighted branches.
pub(crate) fn reduced_unnormalized(
    factorization: &Factorization,
    amplitudes: &[C64],
    keep: &[usize],
) -> Result<CMatrix> {
    let keep = factorization.normalize_subset(keep)?;
    let k_off = factorization.offsets(&keep);
    let r_off = factorization.offsets(&factorization.complement(&keep));
    let m = CMatrix::from_fn(k_off.len(), r_off.len(), |i, j| amplitudes[k_off[i] + r_off[j]]);
    Ok(&m * m.adjoint())
}

fn reduced_from_amplitudes(
    factorization: &Factorization,
    amplitudes: &[C64],
    keep: &[usize],
) -> Result<super::DensityMatrix> {
    let rho = reduced_unnormalized(factorization, amplitudes, keep)?;
    super::DensityMatrix::new(rho, factorization.restrict(keep)?)
}
