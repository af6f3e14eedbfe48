use rand::Rng;

use super::transcript::{PositionRecord, ProtocolKind, Setting, Transcript};
use super::transit::Transmission;
use super::{select_test_set, SessionConfig};
use crate::adversary::{intercept_resend_on, substitution_positions, AttackSpec};
use crate::channel::{sample_pair_outcomes, ChannelModel};
use crate::qstate::{bell_state, measure_pair, BellLabel, MeasurementAxis, Outcome, QuantumState};
use crate::{Error, Result};

/// The pairs as they travel.
enum Register {
    /// Each pair is a Bell basis state; measured by the closed-form sampler.
    Labels(Vec<BellLabel>),
    /// Each pair is an arbitrary two-qubit pure state.
    Pairs(Vec<QuantumState>),
    /// One joint state of all pairs and Eve's ancilla.
    Joint(QuantumState),
}

impl Register {
    fn into_pairs(self) -> Result<Vec<QuantumState>> {
        match self {
            Register::Labels(ls) => Ok(ls.into_iter().map(bell_state).collect()),
            Register::Pairs(ps) => Ok(ps),
            Register::Joint(_) => Err(Error::Internal("joint register has no per-pair states".into())),
        }
    }
}

fn apply_attack<R: Rng + ?Sized>(attack: &AttackSpec, reg: &mut Register, n: usize, rng: &mut R) -> Result<()> {
    match attack {
        AttackSpec::None => {}
        AttackSpec::InterceptResend { policy, fraction } => {
            let taken = std::mem::replace(reg, Register::Labels(Vec::new()));
            let mut pairs = taken.into_pairs()?;
            for p in substitution_positions(n, *fraction, rng)? {
                // Eve only holds Bob's half (qubit 1) in flight
                pairs[p] = intercept_resend_on(&pairs[p], 1, *policy, rng)?.resent;
            }
            *reg = Register::Pairs(pairs);
        }
        AttackSpec::Substitute { fraction, labels } => {
            let positions = substitution_positions(n, *fraction, rng)?;
            match reg {
                Register::Labels(ls) => {
                    for p in positions {
                        ls[p] = labels.sample(rng);
                    }
                }
                Register::Pairs(ps) => {
                    for p in positions {
                        ps[p] = bell_state(labels.sample(rng));
                    }
                }
                Register::Joint(_) => return Err(Error::Internal("substitution on a joint register".into())),
            }
        }
        AttackSpec::Coherent(c) => {
            // Eve replaces every pair by her prepared joint state
            *reg = Register::Joint(c.computational_state().clone());
        }
    }
    Ok(())
}

/// Runs the EPR scheme: `N` pairs sent, attacked in flight, delivered and
/// acknowledged; then one random axis per pair is announced and both
/// parties measure along it; `m` random pairs are compared.
///
/// Alice's key bit is her outcome, Bob's the complement of his, so an
/// antiparallel pair yields agreeing bits.
pub fn run_epr_session<R: Rng + ?Sized>(
    config: &SessionConfig,
    channel: &ChannelModel,
    attack: &AttackSpec,
    rng: &mut R,
) -> Result<Transcript> {
    config.validate()?;
    attack.validate()?;
    let n = config.n;
    if let AttackSpec::Coherent(c) = attack {
        if c.n_pairs() != n {
            return Err(Error::Config(format!(
                "coherent attack prepares {} pairs but the session sends N = {n}",
                c.n_pairs()
            )));
        }
    }
    let threshold = config.threshold(config.m)?;

    let labels: Vec<BellLabel> = (0..n).map(|_| channel.sample_label(rng)).collect();
    let mut transmission = Transmission::send(Register::Labels(labels), n);
    apply_attack(attack, transmission.intercept(attack.name()), n, rng)?;
    let delivered = transmission.deliver();

    let axes: Vec<MeasurementAxis> = (0..n).map(|_| MeasurementAxis::random(rng)).collect();
    let announced = delivered.announce(axes);

    let outcomes: Vec<(Outcome, Outcome)> = match announced.received {
        Register::Labels(ls) => ls
            .iter()
            .zip(&announced.settings)
            .map(|(&l, ax)| sample_pair_outcomes(l, ax, ax, rng))
            .collect(),
        Register::Pairs(ps) => ps
            .iter()
            .zip(&announced.settings)
            .map(|(st, ax)| measure_pair(st, 0, ax, ax, rng).map(|(a, b, _)| (a, b)))
            .collect::<Result<_>>()?,
        Register::Joint(mut st) => {
            let mut out = Vec::with_capacity(n);
            for (p, ax) in announced.settings.iter().enumerate() {
                let (a, b, next) = measure_pair(&st, p, ax, ax, rng)?;
                out.push((a, b));
                st = next;
            }
            out
        }
    };

    let records = outcomes
        .into_iter()
        .zip(&announced.settings)
        .enumerate()
        .map(|(index, ((outcome_a, outcome_b), ax))| PositionRecord {
            index,
            basis_a: Setting::from(ax),
            basis_b: Setting::from(ax),
            outcome_a,
            outcome_b,
            in_test: false,
            sifted: true,
        })
        .collect();
    let test = select_test_set(n, config.m, rng)?;
    Ok(Transcript::finish(
        ProtocolKind::Epr,
        records,
        test,
        threshold,
        true,
        announced.events,
    ))
}
