use std::io::Write;
use std::path::PathBuf;

use qkdlab_core::adversary::{
    conditional_ancilla_state, eve_info_bound, Acceptance, AttackSpec, BasisPolicy, CoherentAttack,
    LabelDistribution, TestPlan,
};
use qkdlab_core::channel::{epsilon_from_fidelity, ChannelModel, ErrorRate};
use qkdlab_core::postprocess::{distill, RawKeyPair};
use qkdlab_core::protocol::{
    default_bb84_test_size, default_test_size, run_bb84_session, run_epr_session, SessionConfig, Setting,
    Threshold, ThresholdMode, Transcript, Verdict,
};
use qkdlab_core::qstate::MeasurementAxis;
use qkdlab_core::rng::stream;
use qkdlab_core::Error;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolChoice {
    #[default]
    Epr,
    Bb84,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AttackChoice {
    #[default]
    None,
    InterceptResend,
    Substitute,
    Coherent,
}

fn default_name() -> String {
    "scenario".into()
}
fn default_one() -> f64 {
    1.0
}
fn default_omega() -> f64 {
    0.5
}
fn default_trials() -> usize {
    1
}
fn default_kprime() -> f64 {
    qkdlab_core::postprocess::DEFAULT_KPRIME
}
fn default_policy() -> BasisPolicy {
    BasisPolicy::Random
}
fn default_true() -> bool {
    true
}

/// One experiment. Deserializes from the JSON scenario file format; every
/// field except `n` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub protocol: ProtocolChoice,
    pub n: usize,
    /// Test-set size. Defaults to `⌈10√N⌉` (EPR) or `⌊Nω² − 5√(Nω²)⌋` (BB84).
    #[serde(default)]
    pub m: Option<usize>,
    /// Channel fidelity. If only `epsilon` is given the channel is the
    /// Werner state with that error rate.
    #[serde(default)]
    pub fidelity: Option<f64>,
    /// Error rate the parties expect; derived from `fidelity` when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_one")]
    pub c: f64,
    #[serde(default)]
    pub threshold_mode: ThresholdMode,
    #[serde(default)]
    pub attack: AttackChoice,
    #[serde(default = "default_one")]
    pub attack_fraction: f64,
    #[serde(default = "default_policy")]
    pub attack_policy: BasisPolicy,
    #[serde(default)]
    pub attack_file: Option<PathBuf>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_kprime")]
    pub kprime: f64,
    /// Run reconciliation and privacy amplification on accepted sessions.
    #[serde(default = "default_true")]
    pub distill: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

impl Scenario {
    pub fn new(protocol: ProtocolChoice, n: usize) -> Self {
        Scenario {
            name: default_name(),
            protocol,
            n,
            m: None,
            fidelity: None,
            epsilon: None,
            omega: default_omega(),
            c: 1.0,
            threshold_mode: ThresholdMode::default(),
            attack: AttackChoice::None,
            attack_fraction: 1.0,
            attack_policy: BasisPolicy::Random,
            attack_file: None,
            trials: 1,
            seed: 0,
            kprime: default_kprime(),
            distill: true,
            out: None,
            summary: None,
        }
    }

    /// Parses a scenario file. Keys present in `text` replace the matching
    /// fields of `base`.
    pub fn overlay(base: &Scenario, text: &str) -> CliResult<Scenario> {
        let mut merged = serde_json::to_value(base)?;
        let file: serde_json::Value = serde_json::from_str(text)?;
        let serde_json::Value::Object(fields) = file else {
            return Err(CliError::Config("scenario file must hold a JSON object".into()));
        };
        let target = merged.as_object_mut().expect("scenario serializes to an object");
        for (k, v) in fields {
            target.insert(k, v);
        }
        Ok(serde_json::from_value(merged)?)
    }

    pub fn from_json(text: &str) -> CliResult<Scenario> {
        Ok(serde_json::from_str(text)?)
    }

    /// Resolved channel and expected error rate.
    fn channel(&self) -> CliResult<(ChannelModel, ErrorRate)> {
        Ok(match (self.fidelity, self.epsilon) {
            (Some(f), eps) => {
                let ch = ChannelModel::new(f).map_err(|e| field_err("fidelity", e))?;
                let eps = match eps {
                    Some(e) => ErrorRate::new(e).map_err(|e| field_err("epsilon", e))?,
                    None => epsilon_from_fidelity(f).map_err(|e| field_err("fidelity", e))?,
                };
                (ch, eps)
            }
            (None, Some(e)) => {
                let eps = ErrorRate::new(e).map_err(|e| field_err("epsilon", e))?;
                (ChannelModel::from_error_rate(eps).map_err(|e| field_err("epsilon", e))?, eps)
            }
            (None, None) => (ChannelModel::ideal(), ErrorRate::new(0.0)?),
        })
    }

    fn test_size(&self) -> usize {
        self.m.unwrap_or_else(|| match self.protocol {
            ProtocolChoice::Epr => default_test_size(self.n),
            ProtocolChoice::Bb84 => default_bb84_test_size(self.n, self.omega),
        })
    }

    fn attack_spec(&self) -> CliResult<AttackSpec> {
        let spec = match self.attack {
            AttackChoice::None => AttackSpec::None,
            AttackChoice::InterceptResend => AttackSpec::InterceptResend {
                policy: self.attack_policy,
                fraction: self.attack_fraction,
            },
            AttackChoice::Substitute => AttackSpec::Substitute {
                fraction: self.attack_fraction,
                labels: LabelDistribution::uniform_triplets(),
            },
            AttackChoice::Coherent => {
                let path = self
                    .attack_file
                    .as_ref()
                    .ok_or_else(|| CliError::Config("attack_file: required for a coherent attack".into()))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("attack_file: cannot read {}: {e}", path.display())))?;
                AttackSpec::Coherent(CoherentAttack::parse(&text).map_err(|e| field_err("attack_file", e))?)
            }
        };
        spec.validate().map_err(|e| field_err("attack_fraction", e))?;
        Ok(spec)
    }

    fn session_config(&self) -> CliResult<(SessionConfig, ChannelModel)> {
        if self.trials == 0 {
            return Err(CliError::Config("trials: must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(CliError::Config("n: must be at least 1".into()));
        }
        if !(self.kprime > 0.0) {
            return Err(CliError::Config(format!("kprime: must be positive, got {}", self.kprime)));
        }
        let (channel, eps) = self.channel()?;
        let mut cfg = SessionConfig::new(self.n, self.test_size(), eps);
        cfg.c = self.c;
        cfg.omega = self.omega;
        cfg.threshold_mode = self.threshold_mode;
        cfg.seed = self.seed;
        cfg.validate().map_err(|e| field_err("m/omega/c", e))?;
        Ok((cfg, channel))
    }
}

fn field_err(field: &str, e: Error) -> CliError {
    match e {
        Error::Regime { .. } | Error::Internal(_) => CliError::Core(e),
        other => CliError::Config(format!("{field}: {other}")),
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub verdict: Verdict,
    pub error_count: usize,
    pub m: usize,
    pub qber_estimate: f64,
    pub sifted_len: usize,
    pub final_len: usize,
    pub leaked_bits: usize,
    pub eve_holevo_bits: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct TrialResult {
    row: TrialRow,
    sifted_fraction: f64,
    keys_equal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub protocol: ProtocolChoice,
    pub rng: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub n: usize,
    pub m: usize,
    pub fidelity: f64,
    pub epsilon_expected: f64,
    pub omega: f64,
    pub kprime: f64,
    pub attack: &'static str,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub qber_mean: f64,
    pub qber_std_error: f64,
    pub sifted_fraction_mean: f64,
    pub sifted_fraction_std_error: f64,
    pub final_len_mean: f64,
    pub leaked_bits_mean: f64,
    /// Accepted trials whose final keys came out identical.
    pub keys_equal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
}

pub const RNG_NAME: &str = "ChaCha20 (rand_chacha), seed_from_u64(seed), stream = trial index";

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Rebuilds the test the coherent attack faced and returns `S(ρ_R)`, or
/// `None` when that test could never pass.
fn coherent_holevo(attack: &CoherentAttack, t: &Transcript) -> CliResult<Option<f64>> {
    let axes = t
        .test_indices
        .iter()
        .map(|&i| match t.records[i].basis_a {
            Setting::Axis([x, y, z]) => Ok(MeasurementAxis::new(x, y, z)?),
            Setting::Basis(b) => Ok(b.axis()),
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let acceptance = match t.threshold {
        Threshold::Window(w) => Acceptance::from_window(w),
        Threshold::TwoEpsilon { epsilon } => {
            let m = t.tested() as f64;
            let hi = if epsilon == 0.0 {
                0
            } else {
                ((2.0 * epsilon * m - 1e-9).ceil() as usize).saturating_sub(1)
            };
            Acceptance::Window { lo: 0, hi }
        }
    };
    let plan = TestPlan::new(t.test_indices.clone(), axes, acceptance)?;
    match conditional_ancilla_state(attack, &plan) {
        Ok(rho) => Ok(Some(eve_info_bound(&rho)?)),
        Err(Error::ZeroPassingProbability) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn run_trial(
    scenario: &Scenario,
    cfg: &SessionConfig,
    channel: &ChannelModel,
    attack: &AttackSpec,
    trial: usize,
) -> CliResult<TrialResult> {
    let mut rng = stream(scenario.seed, trial as u64);
    let t = match scenario.protocol {
        ProtocolChoice::Epr => run_epr_session(cfg, channel, attack, &mut rng)?,
        ProtocolChoice::Bb84 => run_bb84_session(cfg, channel, attack, &mut rng)?,
    };
    let mut row = TrialRow {
        trial,
        verdict: t.verdict,
        error_count: t.observed_error_count,
        m: t.tested(),
        qber_estimate: t.qber_estimate(),
        sifted_len: t.sifted_count(),
        final_len: 0,
        leaked_bits: 0,
        eve_holevo_bits: None,
    };
    let mut keys_equal = None;
    if scenario.distill && t.verdict == Verdict::Accepted && !t.sifted_key_a.is_empty() {
        let hash_seed: u64 = rng.gen();
        let raw = RawKeyPair::from_transcript(&t)?;
        match distill(&raw, scenario.kprime, hash_seed, &mut rng) {
            Ok(d) => {
                row.final_len = d.final_len;
                row.leaked_bits = d.leaked_bits;
                keys_equal = Some(d.keys_equal());
            }
            // estimated error too large for the capacity bound: no key
            Err(Error::Regime { .. }) => keys_equal = Some(true),
            Err(e) => return Err(e.into()),
        }
    }
    if let AttackSpec::Coherent(a) = attack {
        row.eve_holevo_bits = coherent_holevo(a, &t)?;
    }
    Ok(TrialResult {
        row,
        sifted_fraction: t.sifted_fraction(),
        keys_equal,
    })
}

/// Runs every trial (in parallel) and returns rows in trial order together
/// with the summary. Writes nothing; see [`write_csv`].
pub fn run_scenario(scenario: &Scenario) -> CliResult<ScenarioOutput> {
    let (cfg, channel) = scenario.session_config()?;
    let attack = scenario.attack_spec()?;
    if let AttackSpec::Coherent(a) = &attack {
        if scenario.protocol == ProtocolChoice::Bb84 {
            return Err(CliError::Config("attack: coherent attacks need the epr protocol".into()));
        }
        if a.n_pairs() != scenario.n {
            return Err(CliError::Config(format!(
                "n: attack file describes {} pairs but n = {}",
                a.n_pairs(),
                scenario.n
            )));
        }
    }
    let results = (0..scenario.trials)
        .into_par_iter()
        .map(|i| run_trial(scenario, &cfg, &channel, &attack, i))
        .collect::<CliResult<Vec<_>>>()?;

    let accepted = results.iter().filter(|r| r.row.verdict == Verdict::Accepted).count();
    let (qber_mean, qber_std_error) = mean_and_se(results.iter().map(|r| r.row.qber_estimate));
    let (sf_mean, sf_se) = mean_and_se(results.iter().map(|r| r.sifted_fraction));
    let trials = results.len() as f64;
    let summary = Summary {
        name: scenario.name.clone(),
        protocol: scenario.protocol,
        rng: RNG_NAME,
        seed: scenario.seed,
        trials: results.len(),
        n: scenario.n,
        m: cfg.m,
        fidelity: channel.fidelity(),
        epsilon_expected: cfg.epsilon_expected.value(),
        omega: cfg.omega,
        kprime: scenario.kprime,
        attack: attack.name(),
        accepted,
        acceptance_rate: accepted as f64 / trials,
        qber_mean,
        qber_std_error,
        sifted_fraction_mean: sf_mean,
        sifted_fraction_std_error: sf_se,
        final_len_mean: results.iter().map(|r| r.row.final_len as f64).sum::<f64>() / trials,
        leaked_bits_mean: results.iter().map(|r| r.row.leaked_bits as f64).sum::<f64>() / trials,
        keys_equal: results.iter().filter(|r| r.keys_equal == Some(true)).count(),
    };
    Ok(ScenarioOutput {
        rows: results.into_iter().map(|r| r.row).collect(),
        summary,
    })
}

/// Header plus one row per trial.
pub fn write_csv<W: Write>(rows: &[TrialRow], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "trial",
            "verdict",
            "error_count",
            "m",
            "qber_estimate",
            "sifted_len",
            "final_len",
            "leaked_bits",
            "eve_holevo_bits",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
