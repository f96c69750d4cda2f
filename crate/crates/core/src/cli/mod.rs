//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when a strict bound check fails, 2 on
//! usage, configuration or I/O errors.

pub mod io;
pub mod simulate;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::engine::{
    alpha_threshold, hedge_bound_check, potential_bound_monitor, run_game, Check, EtaChoice,
    GameConfig, HedgerSpec, POTENTIAL_CAP,
};
use crate::environments::{EnvironmentSpec, GoodBadSpec, ScriptedSpec};
use crate::error::{Error, Result};
use crate::hedgers::{tuned_eta, EtaVariant};
use crate::hmm::{convergence_fixture_bank, run_hmm_experiment, HmmExperimentConfig, HmmSource};
use crate::potential::PotentialParams;
use crate::rng::replica_seed;
use simulate::{horizon_for, Preset, SimulationPlan, DEFAULT_ALPHA, DEFAULT_C_GRID};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "NORMALHEDGE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "normalhedge-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "normalhedge",
    version,
    about = "Discounted NormalHedge and Hedge simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep good/bad environments and write averaged regret traces.
    Simulate(SimulateArgs),
    /// Check the NormalHedge potential bound (and optionally the Hedge
    /// regret bound) over a grid of games.
    Verify(VerifyArgs),
    /// Replay a gain matrix through one algorithm.
    Replay(ReplayArgs),
    /// Write the gains an environment produces, for later replay.
    Record(RecordArgs),
    /// Predict a binary HMM sequence with a bank of candidate models.
    Hmm(HmmArgs),
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, short, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Preset::Sim1)]
    pub preset: Preset,
    /// Numbers of experts (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Edges of the good experts.
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Fractions of good experts.
    #[arg(long, value_delimiter = ',')]
    pub f: Option<Vec<f64>>,
    /// NormalHedge potential constants.
    #[arg(long, value_delimiter = ',')]
    pub c: Option<Vec<f64>>,
    #[arg(long, default_value_t = simulate::DEFAULT_REPLICAS)]
    pub replicas: usize,
    /// Iterations per game [default: round(5/α)].
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Offset of the first good set.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Iterations between good-set shifts [default: ceil(1/α)].
    #[arg(long)]
    pub shift_period: Option<usize>,
    /// Hedge learning-rate tuning.
    #[arg(long, value_enum, default_value_t = EtaArg::Simulation)]
    pub eta: EtaArg,
    /// Fixed Hedge learning rate; overrides `--eta`.
    #[arg(long)]
    pub eta_value: Option<f64>,
    /// Leave Hedge out of the sweep.
    #[arg(long)]
    pub no_hedge: bool,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EtaArg {
    Simulation,
    Analysis,
}

impl From<EtaArg> for EtaVariant {
    fn from(e: EtaArg) -> Self {
        match e {
            EtaArg::Simulation => EtaVariant::Simulation,
            EtaArg::Analysis => EtaVariant::Analysis,
        }
    }
}

fn hedge_spec(eta: EtaArg, eta_value: Option<f64>) -> HedgerSpec {
    match eta_value {
        Some(value) => HedgerSpec::Hedge {
            eta: EtaChoice::Fixed { value },
        },
        None => HedgerSpec::hedge_tuned(eta.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnvKind {
    /// Shifting good/bad experts.
    GoodBad,
    /// Action 0 always gains +1, the rest −1.
    PersistentWinner,
    /// Independent fair ±1 coins.
    FairCoins,
    /// All gains zero.
    Zeros,
}

#[derive(Debug, Args)]
pub struct EnvArgs {
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub f: f64,
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long)]
    pub shift_period: Option<usize>,
}

impl EnvArgs {
    fn build(&self, kind: EnvKind, n: usize, alpha: f64) -> EnvironmentSpec {
        match kind {
            EnvKind::GoodBad => {
                let mut spec = GoodBadSpec::with_alpha(n, self.f, self.gamma, alpha);
                spec.start = self.start;
                if let Some(p) = self.shift_period {
                    spec.shift_period = p;
                }
                EnvironmentSpec::GoodBad(spec)
            }
            EnvKind::PersistentWinner => EnvironmentSpec::PersistentWinner {
                n_actions: n,
                winner: 0,
            },
            EnvKind::FairCoins => EnvironmentSpec::FairCoins { n_actions: n },
            EnvKind::Zeros => EnvironmentSpec::Constant {
                gains: vec![0.0; n],
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [10, 100, 1000])]
    pub n: Vec<usize>,
    /// Discount rates [default: half the threshold for each N].
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [EnvKind::GoodBad, EnvKind::PersistentWinner, EnvKind::FairCoins])]
    pub env: Vec<EnvKind>,
    /// Horizon in units of `1/α`.
    #[arg(long, default_value_t = 10.0)]
    pub horizon_multiple: f64,
    /// Seeds per grid point.
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = PotentialParams::DEFAULT_C)]
    pub c: f64,
    /// Also check discounted Hedge at the analysis learning rate.
    #[arg(long)]
    pub hedge: bool,
    #[command(flatten)]
    pub env_args: EnvArgs,
    /// Write the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Normalhedge,
    Hedge,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Gain CSV with header g_1..g_N.
    pub gains: PathBuf,
    /// Optional confidence CSV with header c_1..c_N.
    #[arg(long)]
    pub confidences: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Algorithm::Normalhedge)]
    pub algorithm: Algorithm,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = PotentialParams::DEFAULT_C)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = EtaArg::Simulation)]
    pub eta: EtaArg,
    #[arg(long)]
    pub eta_value: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Trace CSV to write [default: <out>/replay.csv].
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    #[arg(long, value_enum, default_value_t = EnvKind::GoodBad)]
    pub env: EnvKind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Iterations [default: round(5/α)].
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub env_args: EnvArgs,
    /// Gain CSV to write [default: <out>/gains.csv].
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct HmmArgs {
    /// Candidate models (plain-text matrix format). Defaults to the
    /// built-in five-candidate bank.
    #[arg(long)]
    pub bank: Option<PathBuf>,
    /// Model that generates the data [default: the bank's truth].
    #[arg(long, conflicts_with = "sequence")]
    pub truth: Option<PathBuf>,
    /// Observed 0/1 sequence to replay instead of sampling.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
    /// Index (0-based) of the true model within the bank.
    #[arg(long)]
    pub truth_index: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = PotentialParams::DEFAULT_C)]
    pub c: f64,
    /// Iterations [default: round(10/α)].
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report CSV [default: <out>/hmm.csv].
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutDir,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{rendered}")
            } else {
                write!(stdout, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, stdout),
        Command::Verify(a) => cmd_verify(&a, stdout, stderr),
        Command::Replay(a) => cmd_replay(&a, stdout),
        Command::Record(a) => cmd_record(&a, stdout),
        Command::Hmm(a) => cmd_hmm(&a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn say(out: &mut dyn Write, line: impl std::fmt::Display) {
    let _ = writeln!(out, "{line}");
}

pub fn simulation_plan(a: &SimulateArgs) -> Result<SimulationPlan> {
    let mut hedgers = Vec::new();
    if !a.no_hedge {
        hedgers.push(hedge_spec(a.eta, a.eta_value));
    }
    let cs = a.c.clone().unwrap_or_else(|| DEFAULT_C_GRID.to_vec());
    hedgers.extend(cs.iter().map(|&c| HedgerSpec::normalhedge(c)));
    let horizon = a
        .horizon
        .unwrap_or_else(|| horizon_for(a.alpha, simulate::DEFAULT_HORIZON_MULTIPLE));
    let mut plan = SimulationPlan::grid(
        Some(a.preset),
        &a.n.clone().unwrap_or_else(|| a.preset.n_grid()),
        &a.gamma.clone().unwrap_or_else(|| a.preset.gamma_grid()),
        &a.f.clone().unwrap_or_else(|| a.preset.f_grid()),
        hedgers,
        a.alpha,
        horizon,
    );
    plan.replicas = a.replicas;
    plan.seed = a.seed;
    plan.record_every = a.record_every;
    plan.start = a.start;
    plan.shift_period = a.shift_period;
    plan.runs()?;
    Ok(plan)
}

fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let plan = simulation_plan(a)?;
    let manifest = plan.write(&a.out.out)?;
    for run in &manifest.runs {
        say(
            stdout,
            format!(
                "{}  final regret_best {:.4}",
                run.file, run.final_regret_best
            ),
        );
    }
    say(
        stdout,
        format!(
            "wrote {} traces and {}",
            manifest.runs.len(),
            a.out.out.join(simulate::MANIFEST_FILE).display()
        ),
    );
    Ok(EXIT_OK)
}

/// One verified game.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyCase {
    pub n_actions: usize,
    pub alpha: f64,
    pub threshold: f64,
    pub environment: String,
    pub seed: u64,
    pub horizon: usize,
    pub strict: bool,
    pub checks: Vec<Check>,
    pub saturated_steps: usize,
}

impl VerifyCase {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn failed_strict(&self) -> bool {
        self.strict && !self.passed()
    }
}

/// Runs the verification grid.
pub fn verify_cases(a: &VerifyArgs) -> Result<Vec<VerifyCase>> {
    let mut jobs = Vec::new();
    for &n in &a.n {
        let threshold = alpha_threshold(n, POTENTIAL_CAP)?;
        let alphas = a.alpha.clone().unwrap_or_else(|| vec![threshold / 2.0]);
        for &alpha in &alphas {
            for &kind in &a.env {
                for s in 0..a.seeds {
                    jobs.push((n, threshold, alpha, kind, replica_seed(a.seed, s)));
                }
            }
        }
    }
    use rayon::prelude::*;
    jobs.into_par_iter()
        .map(|(n, threshold, alpha, kind, seed)| {
            let env = a.env_args.build(kind, n, alpha);
            let horizon = horizon_for(alpha, a.horizon_multiple);
            let label = env.label().to_owned();
            let config = GameConfig::new(
                HedgerSpec::normalhedge(a.c),
                env.clone(),
                alpha,
                horizon,
                seed,
            );
            let trace = run_game(&config)?;
            let report = potential_bound_monitor(&trace.summary, n, alpha, a.c)?;
            let mut checks: Vec<Check> = report.checks().into_iter().cloned().collect();
            if a.hedge {
                let eta = tuned_eta(alpha, n, EtaVariant::Analysis)?;
                let config = GameConfig::new(
                    HedgerSpec::hedge_tuned(EtaVariant::Analysis),
                    env,
                    alpha,
                    horizon,
                    seed,
                );
                let trace = run_game(&config)?;
                checks.push(hedge_bound_check(&trace.summary, n, alpha, eta)?);
            }
            Ok(VerifyCase {
                n_actions: n,
                alpha,
                threshold,
                environment: label,
                seed,
                horizon,
                strict: report.strict,
                checks,
                saturated_steps: report.saturated_steps,
            })
        })
        .collect()
}

fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cases = verify_cases(a)?;
    let mut failed = 0;
    for case in &cases {
        if !case.strict {
            say(
                stderr,
                format!(
                    "warning: n={} alpha={} c={} is outside the range where the potential bound is guaranteed (threshold {:.6e}); checks are advisory",
                    case.n_actions, case.alpha, a.c, case.threshold
                ),
            );
        }
        let status = match (case.passed(), case.strict) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "ADVISORY",
        };
        if case.failed_strict() {
            failed += 1;
        }
        let detail: Vec<String> = case
            .checks
            .iter()
            .map(|c| format!("{}={:.6e}/{:.6e}", c.name, c.observed, c.limit))
            .collect();
        say(
            stdout,
            format!(
                "{status:<8} n={} alpha={:.6e} env={} seed={} {}",
                case.n_actions,
                case.alpha,
                case.environment,
                case.seed,
                detail.join(" ")
            ),
        );
    }
    if let Some(path) = &a.report {
        io::write_atomic(
            path,
            &serde_json::to_vec_pretty(&cases).expect("report serializes"),
        )?;
    }
    say(
        stdout,
        format!("{} cases, {failed} strict failures", cases.len()),
    );
    Ok(if failed > 0 {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    })
}

fn output_path(explicit: &Option<PathBuf>, out: &OutDir, default: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out.out.join(default))
}

/// The game a replay runs.
pub fn replay_config(a: &ReplayArgs) -> Result<GameConfig> {
    let rows = io::read_gain_csv(&a.gains)?;
    let mut script = ScriptedSpec::new(rows)?;
    if let Some(path) = &a.confidences {
        script = script.with_confidences(io::read_confidence_csv(path)?)?;
    }
    let hedger = match a.algorithm {
        Algorithm::Normalhedge => HedgerSpec::normalhedge(a.c),
        Algorithm::Hedge => hedge_spec(a.eta, a.eta_value),
    };
    let horizon = script.horizon();
    let mut config = GameConfig::new(
        hedger,
        EnvironmentSpec::Scripted(script),
        a.alpha,
        horizon,
        0,
    );
    config.confidence_rated = a.confidences.is_some();
    config.record_every = a.record_every;
    config.diagnostic_c = a.c;
    Ok(config)
}

fn cmd_replay(a: &ReplayArgs, stdout: &mut dyn Write) -> Result<i32> {
    let config = replay_config(a)?;
    let trace = run_game(&config)?;
    let path = output_path(&a.output, &a.out, "replay.csv");
    io::write_atomic(&path, &io::trace_csv(&trace.rows))?;
    say(
        stdout,
        format!(
            "{} iterations, final regret_best {:.6}, wrote {}",
            config.horizon,
            trace.final_regret_best(),
            path.display()
        ),
    );
    Ok(EXIT_OK)
}

fn cmd_record(a: &RecordArgs, stdout: &mut dyn Write) -> Result<i32> {
    let spec = a.env_args.build(a.env, a.n, a.alpha);
    spec.validate()?;
    let horizon = a
        .horizon
        .unwrap_or_else(|| horizon_for(a.alpha, simulate::DEFAULT_HORIZON_MULTIPLE));
    let mut env = spec.build(a.seed)?;
    let rows = (0..horizon)
        .map(|j| env.gains(j).map(|g| g.into_inner()))
        .collect::<Result<Vec<_>>>()?;
    let path = output_path(&a.output, &a.out, "gains.csv");
    io::write_atomic(&path, &io::gain_csv(&rows))?;
    say(
        stdout,
        format!(
            "wrote {horizon} rows of {} gains to {}",
            a.n,
            path.display()
        ),
    );
    Ok(EXIT_OK)
}

/// The experiment an `hmm` invocation runs.
pub fn hmm_config(a: &HmmArgs) -> Result<HmmExperimentConfig> {
    let (bank, default_truth) = match &a.bank {
        Some(path) => (
            io::read_models(path)?
                .into_iter()
                .map(|m| m.params)
                .collect::<Vec<_>>(),
            None,
        ),
        None => (convergence_fixture_bank(), Some(0)),
    };
    let truth_candidate = a.truth_index.or(if a.truth.is_none() {
        default_truth
    } else {
        None
    });
    let source = match (&a.sequence, &a.truth) {
        (Some(path), _) => HmmSource::Sequence {
            observations: io::read_observations(path)?,
        },
        (None, Some(path)) => HmmSource::Sampled {
            truth: first_model(path)?,
        },
        (None, None) => {
            let m = truth_candidate.ok_or_else(|| {
                Error::invalid("truth", "give --truth, --sequence or --truth-index")
            })?;
            let truth = bank.get(m).cloned().ok_or_else(|| {
                Error::invalid(
                    "truth_index",
                    format!("{m} is not in a bank of {}", bank.len()),
                )
            })?;
            HmmSource::Sampled { truth }
        }
    };
    let horizon = match (a.horizon, &source) {
        (Some(h), _) => h,
        (None, HmmSource::Sequence { observations }) => observations.len(),
        (None, HmmSource::Sampled { .. }) => horizon_for(a.alpha, 10.0),
    };
    let config = HmmExperimentConfig {
        source,
        bank,
        truth_candidate,
        horizon,
        alpha: a.alpha,
        c: a.c,
        seed: a.seed,
    };
    config.validate()?;
    Ok(config)
}

fn first_model(path: &Path) -> Result<crate::hmm::HmmParams> {
    Ok(io::read_models(path)?.swap_remove(0).params)
}

fn cmd_hmm(a: &HmmArgs, stdout: &mut dyn Write) -> Result<i32> {
    let config = hmm_config(a)?;
    let report = run_hmm_experiment(&config)?;
    let path = output_path(&a.output, &a.out, "hmm.csv");
    io::write_atomic(&path, &io::hmm_report_csv(&report))?;
    say(
        stdout,
        format!(
            "normalhedge cumulative L1 loss {:.4}",
            report.cumulative_normalhedge_loss
        ),
    );
    say(
        stdout,
        format!(
            "bayes average cumulative L1 loss {:.4}",
            report.cumulative_bayes_loss
        ),
    );
    for (m, l) in report.cumulative_candidate_losses.iter().enumerate() {
        say(
            stdout,
            format!("candidate {} cumulative L1 loss {l:.4}", m + 1),
        );
    }
    if let Some(mass) = report.final_truth_mass {
        say(
            stdout,
            format!("final weight on the true model's experts {mass:.4}"),
        );
    }
    say(stdout, format!("wrote {}", path.display()));
    Ok(EXIT_OK)
}
