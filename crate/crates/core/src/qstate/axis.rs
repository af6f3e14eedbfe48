use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{pauli_x, pauli_y, pauli_z, CMatrix, QuantumState, C64};
use crate::{Error, Result};

const AXIS_TOL: f64 = 1e-12;

/// Unit vector on the Bloch sphere defining a spin measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementAxis {
    x: f64,
    y: f64,
    z: f64,
}

impl MeasurementAxis {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = x * x + y * y + z * z;
        if !n.is_finite() || (n - 1.0).abs() > AXIS_TOL {
            return Err(Error::out_of_range("axis norm²", n, "axis must be a unit vector"));
        }
        Ok(MeasurementAxis { x, y, z })
    }

    /// Normalizes an arbitrary nonzero direction.
    pub fn from_direction(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !(n > 1e-300) {
            return Err(Error::out_of_range("axis norm", n, "direction must be nonzero"));
        }
        Ok(MeasurementAxis {
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    pub const fn plus_x() -> Self {
        MeasurementAxis { x: 1.0, y: 0.0, z: 0.0 }
    }

    pub const fn plus_y() -> Self {
        MeasurementAxis { x: 0.0, y: 1.0, z: 0.0 }
    }

    pub const fn plus_z() -> Self {
        MeasurementAxis { x: 0.0, y: 0.0, z: 1.0 }
    }

    /// Uniform on the sphere (normalized standard normal triple).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            let z: f64 = rng.sample(StandardNormal);
            if let Ok(a) = MeasurementAxis::from_direction(x, y, z) {
                return a;
            }
        }
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &MeasurementAxis) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// `n·σ`
    pub fn sigma(&self) -> CMatrix {
        pauli_x() * C64::new(self.x, 0.0) + pauli_y() * C64::new(self.y, 0.0) + pauli_z() * C64::new(self.z, 0.0)
    }
}

/// Result of a spin measurement along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Up,
    Down,
}

impl Outcome {
    /// `Up ↦ 0`, `Down ↦ 1`.
    pub fn bit(self) -> u8 {
        match self {
            Outcome::Up => 0,
            Outcome::Down => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Outcome::Up
        } else {
            Outcome::Down
        }
    }

    /// `Up ↦ +1`, `Down ↦ −1`.
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Up => 1.0,
            Outcome::Down => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Up => Outcome::Down,
            Outcome::Down => Outcome::Up,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinProjectors {
    pub up: CMatrix,
    pub down: CMatrix,
}

impl SpinProjectors {
    pub fn for_outcome(&self, o: Outcome) -> &CMatrix {
        match o {
            Outcome::Up => &self.up,
            Outcome::Down => &self.down,
        }
    }
}

/// `P_up = (I + n·σ)/2`, `P_down = (I − n·σ)/2`.
pub fn spin_projectors(axis: &MeasurementAxis) -> Result<SpinProjectors> {
    // re-validate: the fields are private but deserialization bypasses `new`
    let axis = MeasurementAxis::new(axis.x, axis.y, axis.z)?;
    let id = CMatrix::identity(2, 2);
    let s = axis.sigma();
    Ok(SpinProjectors {
        up: (&id + &s).map(|z| z * 0.5),
        down: (&id - &s).map(|z| z * 0.5),
    })
}

/// Spinor of the `Up` (or `Down`) eigenstate along `axis`, as a one-qubit state.
pub fn spin_eigenstate(axis: &MeasurementAxis, outcome: Outcome) -> Result<QuantumState> {
    let p = spin_projectors(axis)?;
    let proj = p.for_outcome(outcome);
    // the column of the projector with the larger norm spans its range
    let col = if proj.column(0).norm() >= proj.column(1).norm() { 0 } else { 1 };
    let v: Vec<C64> = proj.column(col).iter().copied().collect();
    QuantumState::normalized(v, super::Factorization::qubits(1)?)
}

/// SU(2) rotation by `angle` about `axis`: `cos(θ/2) I − i sin(θ/2) n·σ`.
pub fn rotation(axis: &MeasurementAxis, angle: f64) -> CMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    CMatrix::identity(2, 2).map(|z| z * c) - axis.sigma().map(|z| z * C64::new(0.0, s))
}

/// Haar-random SU(2) element from a uniformly random unit quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let mut q = [0.0f64; 4];
    loop {
        for v in q.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            q.iter_mut().for_each(|v| *v /= n);
            break;
        }
    }
    let [a, b, c, d] = q;
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(a, b), C64::new(c, d), C64::new(-c, d), C64::new(a, -b)],
    )
}

/// Haar-random unitary of dimension `d` (QR of a complex Ginibre matrix with
/// the phase correction on the diagonal of R).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Projectively measures subsystem `qubit` along `axis`. Returns the sampled
/// outcome and the normalized post-measurement state.
pub fn measure_qubit<R: Rng + ?Sized>(
    state: &QuantumState,
    qubit: usize,
    axis: &MeasurementAxis,
    rng: &mut R,
) -> Result<(Outcome, QuantumState)> {
    let subs = state.factorization().subsystems();
    match subs.get(qubit) {
        Some(s) if s.is_qubit() => {}
        _ => {
            return Err(Error::InvalidState(format!(
                "subsystem {qubit} is not a qubit of this state"
            )))
        }
    }
    let proj = spin_projectors(axis)?;
    let up = state.apply_raw(&[qubit], &proj.up)?;
    let p_up = super::state::norm_sqr(&up);
    let outcome = if rng.gen::<f64>() < p_up { Outcome::Up } else { Outcome::Down };
    let branch = match outcome {
        Outcome::Up => up,
        Outcome::Down => state.apply_raw(&[qubit], &proj.down)?,
    };
    if super::state::norm_sqr(&branch) < 1e-24 {
        return Err(Error::Internal(format!(
            "sampled a zero-probability branch (p_up = {p_up})"
        )));
    }
    Ok((outcome, QuantumState::normalized(branch, state.factorization().clone())?))
}

/// Measures pair `pair_index` (subsystems `2p` and `2p+1`) along the two axes.
pub fn measure_pair<R: Rng + ?Sized>(
    state: &QuantumState,
    pair_index: usize,
    axis_a: &MeasurementAxis,
    axis_b: &MeasurementAxis,
    rng: &mut R,
) -> Result<(Outcome, Outcome, QuantumState)> {
    let (qa, qb) = (2 * pair_index, 2 * pair_index + 1);
    let subs = state.factorization().subsystems();
    if qb >= subs.len() || !subs[qa].is_qubit() || !subs[qb].is_qubit() {
        return Err(Error::InvalidState(format!(
            "pair {pair_index} does not name two qubit subsystems"
        )));
    }
    let (oa, s1) = measure_qubit(state, qa, axis_a, rng)?;
    let (ob, s2) = measure_qubit(&s1, qb, axis_b, rng)?;
    Ok((oa, ob, s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{bell_basis, kron};
    use crate::rng::stream;
    use proptest::prelude::*;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn z_and_x_projectors() {
        let p = spin_projectors(&MeasurementAxis::plus_z()).unwrap();
        let mut diag = CMatrix::zeros(2, 2);
        diag[(0, 0)] = C64::new(1.0, 0.0);
        assert!(close(&p.up, &diag, 1e-15));
        let px = spin_projectors(&MeasurementAxis::plus_x()).unwrap();
        for z in px.up.iter() {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn non_unit_axis_is_rejected() {
        assert!(MeasurementAxis::new(1.0, 1.0, 0.0).is_err());
        let bogus: MeasurementAxis = serde_json::from_str(r#"{"x":2.0,"y":0.0,"z":0.0}"#).unwrap();
        assert!(spin_projectors(&bogus).is_err());
    }

    #[test]
    fn projectors_idempotent_over_random_axes() {
        let mut rng = stream(7, 0);
        for _ in 0..1000 {
            let a = MeasurementAxis::random(&mut rng);
            let p = spin_projectors(&a).unwrap();
            assert!(close(&(&p.up * &p.up), &p.up, 1e-9));
            assert!(close(&(&p.down * &p.down), &p.down, 1e-9));
            assert!(close(&(&p.up + &p.down), &CMatrix::identity(2, 2), 1e-12));
        }
    }

    #[test]
    fn eigenstates_have_definite_outcome() {
        let mut rng = stream(8, 0);
        for _ in 0..50 {
            let a = MeasurementAxis::random(&mut rng);
            for o in [Outcome::Up, Outcome::Down] {
                let s = spin_eigenstate(&a, o).unwrap();
                let (got, _) = measure_qubit(&s, 0, &a, &mut rng).unwrap();
                assert_eq!(got, o);
            }
        }
    }

    #[test]
    fn random_rotation_is_unitary_and_special() {
        let mut rng = stream(9, 0);
        for _ in 0..100 {
            let u = random_rotation(&mut rng);
            assert!(close(&(&u * u.adjoint()), &CMatrix::identity(2, 2), 1e-12));
            assert!((u.determinant() - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = stream(10, 0);
        let u = random_unitary(6, &mut rng);
        assert!(close(&(&u * u.adjoint()), &CMatrix::identity(6, 6), 1e-10));
    }

    #[test]
    fn rotation_about_z_by_pi_maps_x_to_minus_x() {
        let r = rotation(&MeasurementAxis::plus_z(), std::f64::consts::PI);
        let sx = MeasurementAxis::plus_x().sigma();
        let rotated = &r * &sx * r.adjoint();
        assert!(close(&rotated, &sx.map(|z| -z), 1e-12));
    }

    #[test]
    fn singlet_is_always_antiparallel() {
        let mut rng = stream(11, 0);
        let psi0 = &bell_basis()[0];
        for _ in 0..500 {
            let a = MeasurementAxis::random(&mut rng);
            let (oa, ob, post) = measure_pair(psi0, 0, &a, &a, &mut rng).unwrap();
            assert_ne!(oa, ob);
            assert!((post.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn triplet_psi1_z_antiparallel_x_parallel() {
        let mut rng = stream(12, 0);
        let psi1 = &bell_basis()[1];
        let (z, x) = (MeasurementAxis::plus_z(), MeasurementAxis::plus_x());
        for _ in 0..200 {
            let (a, b, _) = measure_pair(psi1, 0, &z, &z, &mut rng).unwrap();
            assert_ne!(a, b);
            let (a, b, _) = measure_pair(psi1, 0, &x, &x, &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn non_singlets_antiparallel_one_third_on_random_axes() {
        let mut rng = stream(13, 0);
        let basis = bell_basis();
        for psi in &basis[1..] {
            let trials = 100_000;
            let mut anti = 0;
            for _ in 0..trials {
                let a = MeasurementAxis::random(&mut rng);
                let (oa, ob, _) = measure_pair(psi, 0, &a, &a, &mut rng).unwrap();
                anti += usize::from(oa != ob);
            }
            let f = anti as f64 / trials as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.01, "frequency {f}");
        }
    }

    #[test]
    fn measure_pair_rejects_bad_index() {
        let mut rng = stream(14, 0);
        let z = MeasurementAxis::plus_z();
        assert!(measure_pair(&bell_basis()[0], 1, &z, &z, &mut rng).is_err());
    }

    #[test]
    fn measurement_marginals_match_born_weights() {
        // |0⟩ measured along an axis at polar angle θ: P(up) = cos²(θ/2)
        let mut rng = stream(15, 0);
        let theta: f64 = 1.1;
        let axis = MeasurementAxis::new(theta.sin(), 0.0, theta.cos()).unwrap();
        let zero = QuantumState::basis(crate::qstate::Factorization::qubits(1).unwrap(), 0).unwrap();
        let trials = 100_000;
        let ups = (0..trials)
            .filter(|_| measure_qubit(&zero, 0, &axis, &mut rng).unwrap().0 == Outcome::Up)
            .count();
        let p = (theta / 2.0).cos().powi(2);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((ups as f64 / trials as f64 - p).abs() < 4.0 * sigma);
    }

    proptest! {
        #[test]
        fn unitary_application_preserves_norm(seed in any::<u64>()) {
            let mut rng = stream(seed, 0);
            let psi = &bell_basis()[(seed % 4) as usize];
            let u = kron(&random_rotation(&mut rng), &random_unitary(2, &mut rng));
            let out = psi.apply(&[0, 1], &u).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }
}
