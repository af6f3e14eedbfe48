use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::bounds::typicality_threshold;
use crate::protocol::AcceptanceWindow;
use crate::qstate::{
    change_pair_coordinates, kron, norm_sqr, reduced_unnormalized, spin_projectors, BellLabel,
    CMatrix, DensityMatrix, Factorization, MeasurementAxis, QuantumState, C64, NORM_TOL,
};
use crate::qstate::von_neumann_entropy;
use crate::{Error, Result};

pub const MAX_COHERENT_PAIRS: usize = 6;
pub const MAX_ANCILLA_DIM: usize = 16;

/// Eve's joint state of `N` pairs and an ancilla, `Σ a_{i₁…i_N} |ψ_{i₁}⟩…|ψ_{i_N}⟩|R_{i₁…i_N}⟩`.
///
/// Stored both in Bell coordinates (pair digit = Bell label) and in the
/// computational basis (`a0 b0 … a_{N−1} b_{N−1} R`). The ancilla block is
/// always present; dimension 1 means Eve holds nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentAttack {
    n_pairs: usize,
    ancilla_dim: usize,
    bell: QuantumState,
    computational: QuantumState,
}

impl CoherentAttack {
    /// From amplitudes in Bell coordinates. Rejects unnormalized input.
    pub fn from_bell_amplitudes(n_pairs: usize, ancilla_dim: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_caps(n_pairs, ancilla_dim)?;
        let f = Factorization::pairs(n_pairs, Some(ancilla_dim))?;
        let bell = QuantumState::new(amplitudes, f)?;
        let computational = change_pair_coordinates(&bell, n_pairs, false)?;
        Ok(CoherentAttack {
            n_pairs,
            ancilla_dim,
            bell,
            computational,
        })
    }

    /// From a computational-basis state laid out as `n_pairs` pairs followed
    /// by one ancilla block.
    pub fn from_computational(n_pairs: usize, state: QuantumState) -> Result<Self> {
        let subs = state.factorization().subsystems();
        let layout_ok = subs.len() == 2 * n_pairs + 1 && subs[..2 * n_pairs].iter().all(|s| s.is_qubit());
        if !layout_ok {
            return Err(Error::InvalidState(format!(
                "expected {n_pairs} pairs followed by one ancilla block"
            )));
        }
        let ancilla_dim = subs[2 * n_pairs].dim;
        check_caps(n_pairs, ancilla_dim)?;
        let bell = change_pair_coordinates(&state, n_pairs, true)?;
        Ok(CoherentAttack {
            n_pairs,
            ancilla_dim,
            bell,
            computational: state,
        })
    }

    /// `|ψ_{l₁}⟩…|ψ_{l_N}⟩ ⊗ |ancilla⟩`.
    pub fn product(labels: &[BellLabel], ancilla: &[C64]) -> Result<Self> {
        let d = ancilla.len();
        check_caps(labels.len(), d)?;
        let mut amps = vec![C64::new(0.0, 0.0); 4usize.pow(labels.len() as u32) * d];
        let base = bell_index(labels) * d;
        amps[base..base + d].copy_from_slice(ancilla);
        Self::from_bell_amplitudes(labels.len(), d, amps)
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn ancilla_subsystem(&self) -> usize {
        2 * self.n_pairs
    }

    /// Bell-coordinate state.
    pub fn bell_state(&self) -> &QuantumState {
        &self.bell
    }

    pub fn computational_state(&self) -> &QuantumState {
        &self.computational
    }

    /// Amplitude of `|ψ_{labels}⟩|r⟩`.
    pub fn amplitude(&self, labels: &[BellLabel], r: usize) -> C64 {
        self.bell.amplitudes()[bell_index(labels) * self.ancilla_dim + r]
    }

    /// Squared weight on Bell-product vectors with exactly `k` non-singlet
    /// slots, for `k = 0..=N`.
    pub fn weights_by_non_singlet_count(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_pairs + 1];
        for (idx, a) in self.bell.amplitudes().iter().enumerate() {
            let labels = idx / self.ancilla_dim;
            w[non_singlet_count(labels, self.n_pairs)] += a.norm_sqr();
        }
        w
    }

    /// Weight outside the all-singlet component.
    pub fn non_singlet_weight(&self) -> f64 {
        let w = self.weights_by_non_singlet_count();
        w[1..].iter().sum()
    }
}

fn check_caps(n_pairs: usize, ancilla_dim: usize) -> Result<()> {
    if n_pairs == 0 {
        return Err(Error::Config("a coherent attack needs at least one pair".into()));
    }
    if n_pairs > MAX_COHERENT_PAIRS {
        return Err(Error::CapExceeded {
            requested: n_pairs,
            cap: MAX_COHERENT_PAIRS,
        });
    }
    if ancilla_dim == 0 || ancilla_dim > MAX_ANCILLA_DIM {
        return Err(Error::CapExceeded {
            requested: ancilla_dim,
            cap: MAX_ANCILLA_DIM,
        });
    }
    Ok(())
}

pub(super) fn bell_index(labels: &[BellLabel]) -> usize {
    labels.iter().fold(0, |acc, l| acc * 4 + l.index())
}

fn non_singlet_count(mut label_index: usize, n_pairs: usize) -> usize {
    let mut k = 0;
    for _ in 0..n_pairs {
        k += usize::from(label_index % 4 != 0);
        label_index /= 4;
    }
    k
}

/// Acceptance predicate over the number of parallel (error) outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Acceptance {
    /// Every tested pair antiparallel.
    Strict,
    /// Error count inside `[lo, hi]`.
    Window { lo: usize, hi: usize },
}

impl Acceptance {
    pub fn from_window(w: AcceptanceWindow) -> Self {
        Acceptance::Window { lo: w.lo, hi: w.hi }
    }

    fn bounds(self) -> (usize, usize) {
        match self {
            Acceptance::Strict => (0, 0),
            Acceptance::Window { lo, hi } => (lo, hi),
        }
    }

    pub fn accepts(self, errors: usize) -> bool {
        let (lo, hi) = self.bounds();
        (lo..=hi).contains(&errors)
    }
}

/// Test pairs, the common axis each is measured along, and the predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPlan {
    indices: Vec<usize>,
    axes: Vec<MeasurementAxis>,
    acceptance: Acceptance,
}

impl TestPlan {
    pub fn new(indices: Vec<usize>, axes: Vec<MeasurementAxis>, acceptance: Acceptance) -> Result<Self> {
        if indices.len() != axes.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                found: axes.len(),
            });
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(Error::Config("test indices must be distinct".into()));
        }
        if let Acceptance::Window { lo, hi } = acceptance {
            if hi < lo {
                return Err(Error::Config(format!("empty acceptance window [{lo}, {hi}]")));
            }
        }
        Ok(TestPlan {
            indices,
            axes,
            acceptance,
        })
    }

    /// `m` distinct pairs out of `n`, each with its own uniformly random axis.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, acceptance: Acceptance, rng: &mut R) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::Config(format!("test size {m} must lie in 1..={n}")));
        }
        let indices = sample(rng, n, m).into_vec();
        let axes = (0..m).map(|_| MeasurementAxis::random(rng)).collect();
        TestPlan::new(indices, axes, acceptance)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn axes(&self) -> &[MeasurementAxis] {
        &self.axes
    }

    pub fn acceptance(&self) -> Acceptance {
        self.acceptance
    }

    fn check_against(&self, attack: &CoherentAttack) -> Result<()> {
        if let Some(&bad) = self.indices.iter().find(|&&i| i >= attack.n_pairs) {
            return Err(Error::Config(format!(
                "test index {bad} outside {} pairs",
                attack.n_pairs
            )));
        }
        Ok(())
    }
}

/// `P_↑⊗P_↓ + P_↓⊗P_↑` along `axis` and its complement.
fn pair_projectors(axis: &MeasurementAxis) -> Result<(CMatrix, CMatrix)> {
    let p = spin_projectors(axis)?;
    let anti = kron(&p.up, &p.down) + kron(&p.down, &p.up);
    let par = CMatrix::identity(4, 4) - &anti;
    Ok((anti, par))
}

/// Walks every error pattern over the test pairs, calling `leaf` with each
/// accepted branch vector.
fn for_each_passing_branch(
    attack: &CoherentAttack,
    plan: &TestPlan,
    mut leaf: impl FnMut(&[C64]) -> Result<()>,
) -> Result<()> {
    plan.check_against(attack)?;
    let f = attack.computational.factorization();
    let projectors = plan
        .axes
        .iter()
        .map(pair_projectors)
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = plan.acceptance.bounds();
    let m = plan.indices.len();

    // explicit stack of (depth, errors, vector)
    let mut stack = vec![(0usize, 0usize, attack.computational.amplitudes().to_vec())];
    while let Some((depth, errors, v)) = stack.pop() {
        if errors > hi || errors + (m - depth) < lo || norm_sqr(&v) < 1e-30 {
            continue;
        }
        if depth == m {
            leaf(&v)?;
            continue;
        }
        let p = plan.indices[depth];
        let (anti, par) = &projectors[depth];
        let targets = [2 * p, 2 * p + 1];
        let keep = crate::qstate::apply_operator_to(f, &v, &targets, anti)?;
        let flip = crate::qstate::apply_operator_to(f, &v, &targets, par)?;
        stack.push((depth + 1, errors + 1, flip));
        stack.push((depth + 1, errors, keep));
    }
    Ok(())
}

/// Exact probability that `attack` passes `plan` with the plan's axes fixed.
pub fn passing_probability(attack: &CoherentAttack, plan: &TestPlan) -> Result<f64> {
    let mut total = 0.0;
    for_each_passing_branch(attack, plan, |v| {
        total += norm_sqr(v);
        Ok(())
    })?;
    Ok(total.clamp(0.0, 1.0))
}

/// Ancilla state conditioned on passing `plan`.
pub fn conditional_ancilla_state(attack: &CoherentAttack, plan: &TestPlan) -> Result<DensityMatrix> {
    let f = attack.computational.factorization().clone();
    let keep = [attack.ancilla_subsystem()];
    let d = attack.ancilla_dim;
    let mut acc = CMatrix::zeros(d, d);
    let mut total = 0.0;
    for_each_passing_branch(attack, plan, |v| {
        total += norm_sqr(v);
        acc += reduced_unnormalized(&f, v, &keep)?;
        Ok(())
    })?;
    if total < 1e-15 {
        return Err(Error::ZeroPassingProbability);
    }
    acc /= C64::new(total, 0.0);
    DensityMatrix::new(acc, f.restrict(&keep)?)
}

/// Holevo bound on what Eve can learn from her ancilla: `S(ρ_R)` in bits.
pub fn eve_info_bound(rho_r: &DensityMatrix) -> Result<f64> {
    von_neumann_entropy(rho_r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedPassing {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Passing probability averaged over uniformly random test subsets of size
/// `m` and uniformly random axes, by Monte-Carlo over `samples` draws.
pub fn passing_probability_averaged<R: Rng + ?Sized>(
    attack: &CoherentAttack,
    m: usize,
    acceptance: Acceptance,
    samples: usize,
    rng: &mut R,
) -> Result<AveragedPassing> {
    if samples < 2 {
        return Err(Error::Config("axis averaging needs at least two samples".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let plan = TestPlan::random(attack.n_pairs, m, acceptance, rng)?;
        let p = passing_probability(attack, &plan)?;
        sum += p;
        sum_sq += p * p;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(AveragedPassing {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypicalitySplit {
    /// `T = ⌈2Nε⌉`
    pub threshold: u64,
    /// Weight on Bell-product vectors with at least `T` non-singlet slots.
    pub typical: f64,
    /// Weight on those with fewer than `T`.
    pub atypical: f64,
}

/// Splits the particle weight of `attack` at `T = ⌈2Nε⌉` non-singlet slots.
pub fn typicality_split(attack: &CoherentAttack, epsilon: f64) -> Result<TypicalitySplit> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::out_of_range("epsilon", epsilon, "must lie in [0, 1]"));
    }
    let t = typicality_threshold(attack.n_pairs as u64, epsilon);
    let w = attack.weights_by_non_singlet_count();
    let atypical: f64 = w.iter().take(t as usize).sum();
    let typical: f64 = w.iter().skip(t as usize).sum();
    if ((typical + atypical) - 1.0).abs() > NORM_TOL {
        return Err(Error::Internal("typicality weights do not sum to one".into()));
    }
    Ok(TypicalitySplit {
        threshold: t,
        typical,
        atypical,
    })
}
