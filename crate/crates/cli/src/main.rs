use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qkdlab::{bounds_grid, run_bounds, run_scenario, write_csv, AttackChoice, CliError, CliResult, ProtocolChoice, Scenario};
use qkdlab_core::adversary::{
    conditional_ancilla_state, eve_info_bound, passing_probability, passing_probability_averaged,
    typicality_split, Acceptance, BasisPolicy, CoherentAttack, TestPlan,
};
use qkdlab_core::channel::{epsilon_from_fidelity, ChannelModel, ErrorRate};
use qkdlab_core::protocol::{acceptance_window, default_bb84_test_size, epr_bb84_equivalence_check, SessionConfig, ThresholdMode};
use qkdlab_core::rng::stream;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "qkdlab", version, about = "Seeded simulations and bounds for EPR-based key distribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: one CSV row per trial plus a JSON summary.
    Simulate(SimulateArgs),
    /// Atypical-dimension chain, capacity and information bounds.
    Bounds(BoundsArgs),
    /// Passing probability and Eve's Holevo bound for a coherent attack file.
    AttackEval(AttackEvalArgs),
    /// Compare direct BB84 with its EPR construction.
    Equivalence(EquivalenceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Window,
    TwoEpsilon,
}

impl From<ModeArg> for ThresholdMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Window => ThresholdMode::Window,
            ModeArg::TwoEpsilon => ThresholdMode::TwoEpsilon,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Rectilinear,
    Diagonal,
    Random,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON scenario file; its keys override the flags.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "epr")]
    protocol: ProtocolArg,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    fidelity: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, value_enum, default_value = "none")]
    attack: AttackArg,
    #[arg(long, default_value_t = 1.0)]
    attack_fraction: f64,
    #[arg(long, value_enum, default_value = "random")]
    attack_policy: PolicyArg,
    #[arg(long)]
    attack_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = qkdlab_core::postprocess::DEFAULT_KPRIME)]
    kprime: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, value_enum, default_value = "two-epsilon")]
    threshold_mode: ModeArg,
    /// Skip reconciliation and privacy amplification.
    #[arg(long)]
    no_distill: bool,
    /// CSV destination (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary destination (stderr if absent).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Epr,
    Bb84,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    None,
    InterceptResend,
    Substitute,
    Coherent,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 100)]
    n: u64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = qkdlab_core::postprocess::DEFAULT_KPRIME)]
    kprime: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Comma-separated N values; with --grid-eps emits a CSV table.
    #[arg(long, value_delimiter = ',')]
    grid_n: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    grid_eps: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackEvalArgs {
    #[arg(long)]
    attack_file: PathBuf,
    /// Test-set size (defaults to all pairs).
    #[arg(long)]
    m: Option<usize>,
    /// Acceptance window error rate; 0 means strict acceptance.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Random test plans for the averaged passing probability.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EquivalenceArgs {
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    fidelity: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: &Option<PathBuf>) -> CliResult<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let mut base = Scenario::new(
        match a.protocol {
            ProtocolArg::Epr => ProtocolChoice::Epr,
            ProtocolArg::Bb84 => ProtocolChoice::Bb84,
        },
        a.n,
    );
    base.m = a.m;
    base.fidelity = a.fidelity;
    base.epsilon = a.epsilon;
    base.omega = a.omega;
    base.c = a.c;
    base.threshold_mode = a.threshold_mode.into();
    base.attack = match a.attack {
        AttackArg::None => AttackChoice::None,
        AttackArg::InterceptResend => AttackChoice::InterceptResend,
        AttackArg::Substitute => AttackChoice::Substitute,
        AttackArg::Coherent => AttackChoice::Coherent,
    };
    base.attack_fraction = a.attack_fraction;
    base.attack_policy = match a.attack_policy {
        PolicyArg::Rectilinear => BasisPolicy::Rectilinear,
        PolicyArg::Diagonal => BasisPolicy::Diagonal,
        PolicyArg::Random => BasisPolicy::Random,
    };
    base.attack_file = a.attack_file;
    base.trials = a.trials;
    base.seed = a.seed;
    base.kprime = a.kprime;
    base.distill = !a.no_distill;
    base.out = a.out;
    base.summary = a.summary;
    let scenario = match &a.scenario {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("scenario: cannot read {}: {e}", p.display())))?;
            Scenario::overlay(&base, &text)?
        }
        None => base,
    };
    let output = run_scenario(&scenario)?;
    write_csv(&output.rows, sink(&scenario.out)?)?;
    match &scenario.summary {
        Some(_) => write_json(&output.summary, &scenario.summary)?,
        None => eprintln!("{}", serde_json::to_string_pretty(&output.summary)?),
    }
    Ok(())
}

fn bounds(a: BoundsArgs) -> CliResult<()> {
    if !a.grid_n.is_empty() || !a.grid_eps.is_empty() {
        if a.grid_n.is_empty() || a.grid_eps.is_empty() {
            return Err(CliError::Config("grid: both --grid-n and --grid-eps are required".into()));
        }
        bounds_grid(&a.grid_n, &a.grid_eps, a.kprime, sink(&a.out)?)?;
        return Ok(());
    }
    write_json(&run_bounds(a.n, a.epsilon, a.kprime, a.theta)?, &a.out)
}

#[derive(Serialize)]
struct AttackEvalReport {
    n_pairs: usize,
    ancilla_dim: usize,
    m: usize,
    acceptance: Acceptance,
    non_singlet_weight: f64,
    typicality: Option<qkdlab_core::adversary::TypicalitySplit>,
    averaged_passing: qkdlab_core::adversary::AveragedPassing,
    sample_plan_passing: f64,
    sample_plan_eve_holevo_bits: Option<f64>,
}

fn attack_eval(a: AttackEvalArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.attack_file)
        .map_err(|e| CliError::Config(format!("attack_file: cannot read {}: {e}", a.attack_file.display())))?;
    let attack = CoherentAttack::parse(&text)?;
    let n = attack.n_pairs();
    let m = a.m.unwrap_or(n);
    let acceptance = if a.epsilon == 0.0 {
        Acceptance::Strict
    } else {
        Acceptance::from_window(acceptance_window(a.epsilon, a.c, m)?)
    };
    let mut rng = stream(a.seed, 0);
    let averaged = passing_probability_averaged(&attack, m, acceptance, a.samples, &mut rng)?;
    let plan = TestPlan::random(n, m, acceptance, &mut rng)?;
    let p = passing_probability(&attack, &plan)?;
    let holevo = match conditional_ancilla_state(&attack, &plan) {
        Ok(rho) => Some(eve_info_bound(&rho)?),
        Err(qkdlab_core::Error::ZeroPassingProbability) => None,
        Err(e) => return Err(e.into()),
    };
    let report = AttackEvalReport {
        n_pairs: n,
        ancilla_dim: attack.ancilla_dim(),
        m,
        acceptance,
        non_singlet_weight: attack.non_singlet_weight(),
        typicality: if a.epsilon > 0.0 { Some(typicality_split(&attack, a.epsilon)?) } else { None },
        averaged_passing: averaged,
        sample_plan_passing: p,
        sample_plan_eve_holevo_bits: holevo,
    };
    write_json(&report, &a.out)
}

fn equivalence(a: EquivalenceArgs) -> CliResult<()> {
    let (channel, eps) = match (a.fidelity, a.epsilon) {
        (Some(f), e) => (
            ChannelModel::new(f)?,
            match e {
                Some(e) => ErrorRate::new(e)?,
                None => epsilon_from_fidelity(f)?,
            },
        ),
        (None, Some(e)) => {
            let eps = ErrorRate::new(e)?;
            (ChannelModel::from_error_rate(eps)?, eps)
        }
        (None, None) => (ChannelModel::ideal(), ErrorRate::new(0.0)?),
    };
    let mut cfg = SessionConfig::new(a.n, a.m.unwrap_or_else(|| default_bb84_test_size(a.n, a.omega)), eps);
    cfg.omega = a.omega;
    cfg.seed = a.seed;
    let mut rng = stream(a.seed, 0);
    let report = epr_bb84_equivalence_check(&cfg, &channel, &mut rng)?;
    write_json(&report, &a.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bounds(a) => bounds(a),
        Command::AttackEval(a) => attack_eval(a),
        Command::Equivalence(a) => equivalence(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
