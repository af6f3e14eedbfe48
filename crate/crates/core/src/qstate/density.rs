use super::{CMatrix, Factorization, ALGEBRA_TOL, C64, EIGEN_NEG_TOL};
use crate::{Error, Result};

/// A positive, unit-trace Hermitian matrix over a factorized space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    factorization: Factorization,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix, factorization: Factorization) -> Result<Self> {
        let dim = factorization.dim();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.nrows().max(entries.ncols()),
            });
        }
        let herm_dev = (&entries - entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_dev > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm_dev:e})")));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > ALGEBRA_TOL || tr.im.abs() > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eigenvalues(&entries)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -EIGEN_NEG_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix {
            entries,
            factorization,
        })
    }

    pub(crate) fn from_parts_unchecked(entries: CMatrix, factorization: Factorization) -> Self {
        DensityMatrix {
            entries,
            factorization,
        }
    }

    /// `I/d` over the given factorization.
    pub fn maximally_mixed(factorization: Factorization) -> Self {
        let d = factorization.dim();
        DensityMatrix {
            entries: CMatrix::identity(d, d).map(|z| z / d as f64),
            factorization,
        }
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    /// `ρ_A ⊗ ρ_B`.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        let mut subs = self.factorization.subsystems().to_vec();
        subs.extend_from_slice(other.factorization.subsystems());
        Ok(DensityMatrix {
            entries: super::kron(&self.entries, &other.entries),
            factorization: Factorization::new(subs)?,
        })
    }

    /// `U ρ U†` with `U` acting on `targets`.
    pub fn conjugate(&self, targets: &[usize], unitary: &CMatrix) -> Result<Self> {
        let full = super::embed(&self.factorization, targets, unitary)?;
        DensityMatrix::new(&full * &self.entries * full.adjoint(), self.factorization.clone())
    }

    /// `Tr ρ A` for an observable `A` of matching dimension.
    pub fn expectation(&self, observable: &CMatrix) -> Result<C64> {
        if observable.nrows() != self.dim() || observable.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: observable.nrows(),
            });
        }
        Ok((&self.entries * observable).trace())
    }
}

/// Traces out every subsystem not listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let f = rho.factorization();
    let keep = f.normalize_subset(keep)?;
    if keep.len() == f.len() {
        return Ok(rho.clone());
    }
    let k_off = f.offsets(&keep);
    let r_off = f.offsets(&f.complement(&keep));
    let e = rho.entries();
    let out = CMatrix::from_fn(k_off.len(), k_off.len(), |i, j| {
        r_off
            .iter()
            .map(|&r| e[(k_off[i] + r, k_off[j] + r)])
            .sum::<C64>()
    });
    DensityMatrix::new(out, f.restrict(&keep)?)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_hermitian(rho.entries())
}

/// `−Σ λ log₂ λ` over the eigenvalues of a Hermitian matrix. Eigenvalues in
/// `[−1e-6, 0)` are clamped to zero; anything more negative is rejected.
pub fn entropy_of_hermitian(m: &CMatrix) -> Result<f64> {
    let mut s = 0.0;
    for lambda in hermitian_eigenvalues(m) {
        if lambda < -EIGEN_NEG_TOL {
            return Err(Error::InvalidState(format!(
                "eigenvalue {lambda:e} is not physical"
            )));
        }
        if lambda > 0.0 {
            s -= lambda * lambda.log2();
        }
    }
    Ok(s.max(0.0))
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    // symmetrize to suppress round-off skew before the Hermitian solve
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    h.symmetric_eigenvalues().iter().copied().collect()
}
