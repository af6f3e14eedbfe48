use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::transcript::{PositionRecord, ProtocolKind, Setting, Transcript};
use super::transit::Transmission;
use super::{Basis, DiagonalTestPolicy, SessionConfig};
use crate::adversary::{intercept_resend_on, substitution_positions, AttackSpec};
use crate::channel::{label_pauli, ChannelModel};
use crate::qstate::{bell_state, measure_qubit, spin_eigenstate, BellLabel, CMatrix, Outcome};
use crate::{Error, Result};

/// How Alice's photons come into being.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PhotonSource {
    /// Alice prepares the eigenstate for a random bit in her basis.
    #[default]
    Direct,
    /// Alice makes a singlet and measures her half before sending the other.
    EprAliceFirst,
    /// As above, but Alice measures after Bob has received and measured.
    EprAliceAfter,
}

impl PhotonSource {
    fn is_epr(self) -> bool {
        !matches!(self, PhotonSource::Direct)
    }
}

/// Runs BB84 with direct photon preparation.
pub fn run_bb84_session<R: Rng + ?Sized>(
    config: &SessionConfig,
    channel: &ChannelModel,
    attack: &AttackSpec,
    rng: &mut R,
) -> Result<Transcript> {
    run_bb84_session_with_source(config, channel, attack, PhotonSource::Direct, rng)
}

/// Runs BB84 with bases drawn rectilinear w.p. `1−ω`, diagonal w.p. `ω`.
///
/// The test set is every (or `m` random) diagonal-matched position plus `m`
/// random rectilinear-matched positions. Too few matched positions in either
/// basis aborts with [`Error::Undersampled`].
pub fn run_bb84_session_with_source<R: Rng + ?Sized>(
    config: &SessionConfig,
    channel: &ChannelModel,
    attack: &AttackSpec,
    source: PhotonSource,
    rng: &mut R,
) -> Result<Transcript> {
    config.validate()?;
    attack.validate()?;
    if let AttackSpec::Coherent(_) = attack {
        return Err(Error::Config("coherent attacks apply to the EPR scheme only".into()));
    }
    let n = config.n;
    let omega = config.omega;
    let paulis: Vec<CMatrix> = BellLabel::ALL.iter().map(|&l| label_pauli(l)).collect();
    // Bob's qubit index inside each transmitted state
    let bob_q = usize::from(source.is_epr());

    // Alice: basis, and either a bit (direct) or a singlet
    let bases_a: Vec<Basis> = (0..n).map(|_| Basis::sample(omega, rng)).collect();
    let mut outcomes_a: Vec<Option<Outcome>> = vec![None; n];
    let mut states = Vec::with_capacity(n);
    for (i, &basis) in bases_a.iter().enumerate() {
        let st = match source {
            PhotonSource::Direct => {
                let bit = Outcome::from_bit(rng.gen_range(0..2));
                outcomes_a[i] = Some(bit);
                spin_eigenstate(&basis.axis(), bit)?
            }
            PhotonSource::EprAliceFirst => {
                let (o, st) = measure_qubit(&bell_state(BellLabel::SINGLET), 0, &basis.axis(), rng)?;
                outcomes_a[i] = Some(o);
                st
            }
            PhotonSource::EprAliceAfter => bell_state(BellLabel::SINGLET),
        };
        // channel noise on the travelling qubit
        let label = channel.sample_label(rng);
        let st = if label.is_singlet() {
            st
        } else {
            st.apply(&[bob_q], &paulis[label.index()])?
        };
        states.push(st);
    }

    let mut transmission = Transmission::send(states, n);
    let in_flight = transmission.intercept(attack.name());
    match attack {
        AttackSpec::None | AttackSpec::Coherent(_) => {}
        AttackSpec::InterceptResend { policy, fraction } => {
            for p in substitution_positions(n, *fraction, rng)? {
                in_flight[p] = intercept_resend_on(&in_flight[p], bob_q, *policy, rng)?.resent;
            }
        }
        AttackSpec::Substitute { fraction, labels } => {
            // the photon analogue of a Bell substitution is a Pauli error
            for p in substitution_positions(n, *fraction, rng)? {
                let l = labels.sample(rng);
                in_flight[p] = in_flight[p].apply(&[bob_q], &paulis[l.index()])?;
            }
        }
    }
    let mut delivered = transmission.deliver();

    // Bob measures on arrival; a late Alice measures after him
    let bases_b: Vec<Basis> = (0..n).map(|_| Basis::sample(omega, rng)).collect();
    let mut outcomes_b = Vec::with_capacity(n);
    for (i, st) in delivered.received_mut().iter_mut().enumerate() {
        let (ob, after) = measure_qubit(st, bob_q, &bases_b[i].axis(), rng)?;
        outcomes_b.push(ob);
        if source == PhotonSource::EprAliceAfter {
            let (oa, _) = measure_qubit(&after, 0, &bases_a[i].axis(), rng)?;
            outcomes_a[i] = Some(oa);
        }
    }
    let announced = delivered.announce((bases_a, bases_b));
    let (bases_a, bases_b) = &announced.settings;

    let records: Vec<PositionRecord> = (0..n)
        .map(|i| PositionRecord {
            index: i,
            basis_a: Setting::from(bases_a[i]),
            basis_b: Setting::from(bases_b[i]),
            outcome_a: outcomes_a[i].expect("Alice measured every position"),
            outcome_b: outcomes_b[i],
            in_test: false,
            sifted: bases_a[i] == bases_b[i],
        })
        .collect();

    let matched = |b: Basis| -> Vec<usize> {
        (0..n)
            .filter(|&i| bases_a[i] == b && bases_b[i] == b)
            .collect()
    };
    let rect = matched(Basis::Rectilinear);
    let diag = matched(Basis::Diagonal);
    let m = config.m;
    if diag.len() < m {
        return Err(Error::Undersampled {
            basis: "diagonal",
            available: diag.len(),
            required: m,
        });
    }
    if rect.len() < m {
        return Err(Error::Undersampled {
            basis: "rectilinear",
            available: rect.len(),
            required: m,
        });
    }
    let mut test: Vec<usize> = match config.diagonal_policy {
        DiagonalTestPolicy::All => diag,
        DiagonalTestPolicy::Sample => sample(rng, diag.len(), m).into_iter().map(|k| diag[k]).collect(),
    };
    test.extend(sample(rng, rect.len(), m).into_iter().map(|k| rect[k]));
    test.sort_unstable();

    let threshold = config.threshold(test.len())?;
    Ok(Transcript::finish(
        ProtocolKind::Bb84,
        records,
        test,
        threshold,
        source.is_epr(),
        announced.events,
    ))
}

/// Counts of (Alice basis, Bob basis, Alice bit, Bob bit) over all positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JointFrequencies {
    /// `counts[basis_a][basis_b][bit_a][bit_b]`
    pub counts: [[[[u64; 2]; 2]; 2]; 2],
    pub total: u64,
}

impl JointFrequencies {
    pub fn from_transcript(t: &Transcript) -> Self {
        let mut counts = [[[[0u64; 2]; 2]; 2]; 2];
        for (i, r) in t.records.iter().enumerate() {
            let (Setting::Basis(ba), Setting::Basis(bb)) = (r.basis_a, r.basis_b) else {
                continue;
            };
            let (a, b) = t.key_bits(i);
            counts[ba.index()][bb.index()][a as usize][b as usize] += 1;
        }
        JointFrequencies {
            counts,
            total: t.records.len() as u64,
        }
    }

    fn cells(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts.iter().flatten().flatten().flatten().copied()
    }

    /// Errors over sifted positions.
    pub fn sifted_qber(&self) -> f64 {
        let mut err = 0;
        let mut all = 0;
        for b in 0..2 {
            let c = &self.counts[b][b];
            err += c[0][1] + c[1][0];
            all += c[0][0] + c[0][1] + c[1][0] + c[1][1];
        }
        if all == 0 {
            0.0
        } else {
            err as f64 / all as f64
        }
    }

    /// Largest two-sample z-score over the 16 cells.
    pub fn max_z(&self, other: &JointFrequencies) -> f64 {
        let (n1, n2) = (self.total as f64, other.total as f64);
        self.cells()
            .zip(other.cells())
            .map(|(a, b)| {
                let (p1, p2) = (a as f64 / n1, b as f64 / n2);
                let pooled = (a + b) as f64 / (n1 + n2);
                let sigma = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
                if sigma == 0.0 {
                    if p1 == p2 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (p1 - p2).abs() / sigma
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub direct: JointFrequencies,
    pub epr_alice_first: JointFrequencies,
    pub epr_alice_after: JointFrequencies,
    pub max_z_direct_vs_first: f64,
    pub max_z_first_vs_after: f64,
    pub qber_direct: f64,
    pub qber_epr_first: f64,
    pub qber_epr_after: f64,
    /// Every cell within 3σ in both comparisons.
    pub agree: bool,
}

/// Runs the same configuration with direct preparation and with the EPR
/// construction (Alice measuring before and after transmission) and compares
/// the per-basis joint outcome frequencies.
pub fn epr_bb84_equivalence_check<R: Rng + ?Sized>(
    config: &SessionConfig,
    channel: &ChannelModel,
    rng: &mut R,
) -> Result<EquivalenceReport> {
    let run = |src, rng: &mut R| {
        run_bb84_session_with_source(config, channel, &AttackSpec::None, src, rng)
            .map(|t| JointFrequencies::from_transcript(&t))
    };
    let direct = run(PhotonSource::Direct, rng)?;
    let first = run(PhotonSource::EprAliceFirst, rng)?;
    let after = run(PhotonSource::EprAliceAfter, rng)?;
    let z1 = direct.max_z(&first);
    let z2 = first.max_z(&after);
    Ok(EquivalenceReport {
        qber_direct: direct.sifted_qber(),
        qber_epr_first: first.sifted_qber(),
        qber_epr_after: after.sifted_qber(),
        max_z_direct_vs_first: z1,
        max_z_first_vs_after: z2,
        agree: z1 <= 3.0 && z2 <= 3.0,
        direct,
        epr_alice_first: first,
        epr_alice_after: after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::BasisPolicy;
    use crate::channel::{antiparallel_prob, ErrorRate};
    use crate::protocol::{default_bb84_test_size, Verdict};
    use crate::rng::stream;

    fn config(n: usize, omega: f64, eps: f64) -> SessionConfig {
        let mut c = SessionConfig::new(n, default_bb84_test_size(n, omega), ErrorRate::new(eps).unwrap());
        c.omega = omega;
        c
    }

    #[test]
    fn ideal_half_sifts_half() {
        let mut rng = stream(131, 0);
        let n = 20_000;
        let t = run_bb84_session(&config(n, 0.5, 0.0), &ChannelModel::ideal(), &AttackSpec::None, &mut rng).unwrap();
        assert_eq!(t.observed_error_count, 0);
        assert_eq!(t.sifted_key_a, t.sifted_key_b);
        assert_eq!(t.verdict, Verdict::Accepted);
        assert!((t.sifted_fraction() - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
        t.check_invariants().unwrap();
    }

    #[test]
    fn asymmetric_sifting() {
        let mut rng = stream(132, 0);
        let n = 100_000;
        let t = run_bb84_session(&config(n, 0.05, 0.0), &ChannelModel::ideal(), &AttackSpec::None, &mut rng).unwrap();
        let p = 0.95f64.powi(2) + 0.05f64.powi(2);
        assert!((t.sifted_fraction() - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn intercept_resend_quarter() {
        let mut rng = stream(133, 0);
        let attack = AttackSpec::InterceptResend {
            policy: BasisPolicy::Random,
            fraction: 1.0,
        };
        let t = run_bb84_session(&config(40_000, 0.5, 0.02), &ChannelModel::ideal(), &attack, &mut rng).unwrap();
        let k = t.tested() as f64;
        assert!((t.qber_estimate() - 0.25).abs() < 3.0 * (0.1875 / k).sqrt());
        assert_eq!(t.verdict, Verdict::Rejected);
    }

    #[test]
    fn undersampling_aborts() {
        let mut rng = stream(134, 0);
        let mut c = config(1000, 0.05, 0.01);
        c.m = 50; // about 2.5 diagonal matches expected
        assert!(matches!(
            run_bb84_session(&c, &ChannelModel::ideal(), &AttackSpec::None, &mut rng),
            Err(Error::Undersampled { basis: "diagonal", .. })
        ));
    }

    #[test]
    fn coherent_attack_rejected() {
        let mut rng = stream(135, 0);
        let c = crate::adversary::CoherentAttack::product(&[BellLabel::SINGLET], &[crate::qstate::C64::new(1.0, 0.0)]).unwrap();
        assert!(run_bb84_session(&config(100, 0.5, 0.0), &ChannelModel::ideal(), &AttackSpec::Coherent(c), &mut rng).is_err());
    }

    #[test]
    fn equivalence_ideal_and_noisy() {
        let mut rng = stream(136, 1);
        let r = epr_bb84_equivalence_check(&config(4000, 0.5, 0.0), &ChannelModel::ideal(), &mut rng).unwrap();
        assert_eq!((r.qber_direct, r.qber_epr_first, r.qber_epr_after), (0.0, 0.0, 0.0));
        assert!(r.agree, "{r:?}");

        let f = 0.97;
        let eps = 1.0 - antiparallel_prob(f).unwrap();
        let n = 40_000;
        let r = epr_bb84_equivalence_check(&config(n, 0.5, eps), &ChannelModel::new(f).unwrap(), &mut rng).unwrap();
        let s = (eps * (1.0 - eps) / (n as f64 / 2.0)).sqrt();
        for q in [r.qber_direct, r.qber_epr_first, r.qber_epr_after] {
            assert!((q - eps).abs() < 3.0 * s, "{q}");
        }
        assert!(r.agree, "{r:?}");
    }

    #[test]
    fn epr_source_transcript_invariants() {
        let mut rng = stream(137, 0);
        for src in [PhotonSource::EprAliceFirst, PhotonSource::EprAliceAfter] {
            let t = run_bb84_session_with_source(&config(2000, 0.5, 0.0), &ChannelModel::ideal(), &AttackSpec::None, src, &mut rng).unwrap();
            assert_eq!(t.observed_error_count, 0);
            t.check_invariants().unwrap();
        }
    }
}
