//! Command-line front end for the gate-synthesis toolkit.
//!
//! Subcommands: `solve-perfect`, `solve-perturbative`, `verify`,
//! `sweep-k`, `field-trace`, and `presets list`. JSON is the canonical
//! machine format; sweeps and traces default to CSV. Exit codes:
//! 0 success, 1 I/O failure, 2 infeasible problem, 3 parse or argument
//! error, 4 residual failure during verification.

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qbf_core::boundary::{solve_perfect, verify_constants, verify_solution, SolveError};
use qbf_core::model::target;
use qbf_core::oracle::IntegrationSpec;
use qbf_core::perturbative::{
    fidelity_ceiling, optimal_constants, root_solve_exact, PerturbationError, PerturbativeSolution,
    RootSolution,
};
use qbf_core::presets;
use qbf_core::report::{sweep_csv, trace_csv, PhysicalTime, SolveReport, SweepRow};
use qbf_core::search::fidelity_trace;
use qbf_core::{Frame, GateKind, ModelParams};

const EXIT_IO: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_RESIDUAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "qbf",
    version,
    about = "Time-optimal entangling gates for a three-qubit Ising chain",
    long_about = "Solves the quantum brachistochrone for U_s^13 and CNOT(1,3) in a \
                  three-qubit Ising chain controlled by a bounded-energy field on the \
                  middle qubit, and certifies every solution with numeric oracles."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the perfect-fidelity branch and verify it with the numeric oracle.
    SolvePerfect(SolvePerfectArgs),
    /// Solve the perturbative branch and certify it against the exact root solve.
    SolvePerturbative(SolvePerturbativeArgs),
    /// Re-verify a solved report file; nonzero exit on any failing residual.
    Verify(VerifyArgs),
    /// Sweep the coupling ratio and tabulate durations and the fidelity ceiling.
    SweepK(SweepKArgs),
    /// Export the control field and fidelity along the optimal evolution.
    FieldTrace(FieldTraceArgs),
    /// Inspect the molecule preset catalog.
    Presets(PresetsArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TargetChoice {
    Us13,
    Cnot13,
}

impl TargetChoice {
    fn kind(self) -> GateKind {
        match self {
            TargetChoice::Us13 => GateKind::Us13,
            TargetChoice::Cnot13 => GateKind::Cnot13,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct CouplingArgs {
    /// Coupling ratio K = J23/J12.
    #[arg(long, conflicts_with = "preset")]
    k: Option<f64>,
    /// Molecule preset supplying the couplings (see `qbf presets list`).
    #[arg(long)]
    preset: Option<String>,
}

impl CouplingArgs {
    fn resolve(&self) -> Result<(f64, Option<f64>), Failure> {
        match (self.k, self.preset.as_deref()) {
            (Some(k), None) => {
                if !k.is_finite() {
                    return Err(Failure::new(
                        EXIT_PARSE,
                        format!("--k must be finite, got {k}"),
                    ));
                }
                Ok((k, None))
            }
            (None, Some(name)) => {
                let preset = presets::find(name).map_err(|e| Failure::new(EXIT_PARSE, e))?;
                Ok((preset.k(), Some(preset.j12_hz)))
            }
            (None, None) => Err(Failure::new(
                EXIT_PARSE,
                "either --k or --preset is required",
            )),
            (Some(_), Some(_)) => unreachable!("clap rejects conflicting flags"),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the result to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolvePerfectArgs {
    /// Gate to synthesize.
    #[arg(long, value_enum, default_value_t = TargetChoice::Us13)]
    target: TargetChoice,
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Largest sector winding searched.
    #[arg(long, default_value_t = 6)]
    n_max: u32,
    /// Largest precession winding magnitude searched.
    #[arg(long, default_value_t = 3)]
    m_max: u32,
    /// Integration steps of the verifying oracle.
    #[arg(long, default_value_t = 4096)]
    steps: usize,
    /// Output format; this command emits JSON only.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SolvePerturbativeArgs {
    /// Gate to synthesize.
    #[arg(long, value_enum, default_value_t = TargetChoice::Us13)]
    target: TargetChoice,
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Requested gate fidelity in (0, 1].
    #[arg(long, default_value_t = 0.999)]
    fidelity: f64,
    /// Output format; this command emits JSON only.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Report file produced by solve-perfect or verify.
    file: PathBuf,
    /// Override the integration step count of the oracle.
    #[arg(long)]
    steps: Option<usize>,
    /// Output format; this command emits JSON only.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepKArgs {
    /// Gate the sweep solves for.
    #[arg(long, value_enum, default_value_t = TargetChoice::Us13)]
    target: TargetChoice,
    /// First coupling ratio.
    #[arg(long, default_value_t = 0.8)]
    from: f64,
    /// Last coupling ratio.
    #[arg(long, default_value_t = 1.2)]
    to: f64,
    /// Number of ratio samples.
    #[arg(long, default_value_t = 41)]
    steps: usize,
    /// Requested gate fidelity in (0, 1].
    #[arg(long, default_value_t = 0.999)]
    fidelity: f64,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FieldTraceArgs {
    /// Gate to synthesize.
    #[arg(long, value_enum, default_value_t = TargetChoice::Us13)]
    target: TargetChoice,
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Largest sector winding searched.
    #[arg(long, default_value_t = 6)]
    n_max: u32,
    /// Largest precession winding magnitude searched.
    #[arg(long, default_value_t = 3)]
    m_max: u32,
    /// Number of trace samples along the evolution.
    #[arg(long, default_value_t = 512)]
    steps: u32,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PresetsArgs {
    #[command(subcommand)]
    action: PresetsAction,
}

#[derive(Subcommand)]
enum PresetsAction {
    /// List the shipped molecule presets.
    List {
        /// Output format.
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
        #[command(flatten)]
        output: OutputArgs,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }
}

fn solve_failure(err: SolveError) -> Failure {
    let code = match &err {
        SolveError::BoundsTooSmall { .. } => EXIT_PARSE,
        _ => EXIT_INFEASIBLE,
    };
    Failure::new(code, err)
}

fn perturbation_failure(err: PerturbationError) -> Failure {
    let code = match &err {
        PerturbationError::FidelityOutOfRange { .. } | PerturbationError::NonFinite { .. } => {
            EXIT_PARSE
        }
        _ => EXIT_INFEASIBLE,
    };
    Failure::new(code, err)
}

fn emit(output: &OutputArgs, content: &str) -> Result<(), Failure> {
    let content = if content.ends_with('\n') {
        content.to_owned()
    } else {
        format!("{content}\n")
    };
    match &output.out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::new(EXIT_IO, format!("could not write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Failure::new(EXIT_IO, format!("serialization failed: {e}")))
}

fn require_json(format: OutputFormat) -> Result<(), Failure> {
    if format == OutputFormat::Csv {
        return Err(Failure::new(
            EXIT_PARSE,
            "csv output is not available for this command; use --format json",
        ));
    }
    Ok(())
}

/// Placeholder parameters for commands that only need the ratio: the
/// enumeration depends on `K` alone and every solution carries its own
/// derived energy budget.
fn ratio_params(k: f64, j12_hz: Option<f64>) -> ModelParams {
    let p = ModelParams::new(k, (k * k + 3.0).sqrt());
    match j12_hz {
        Some(j) => p.with_j12_hz(j),
        None => p,
    }
}

fn cmd_solve_perfect(args: &SolvePerfectArgs) -> Result<(), Failure> {
    require_json(args.format)?;
    let (k, j12_hz) = args.coupling.resolve()?;
    let kind = args.target.kind();
    let p = ratio_params(k, j12_hz);
    let solutions = solve_perfect(&p, kind, args.n_max, args.m_max).map_err(solve_failure)?;
    let integration = IntegrationSpec {
        steps: args.steps,
        ..IntegrationSpec::default()
    };
    let gate = target(kind, Frame::Computational);
    let report = verify_solution(&solutions[0], &gate, &integration).map_err(solve_failure)?;
    let json = to_pretty_json(&report)?;
    emit(&args.output, &json)?;
    if !report.within_tolerances() {
        return Err(Failure::new(
            EXIT_RESIDUAL,
            format!("verification failed: {}", report.failures().join(", ")),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct Deviation {
    tau_star: f64,
    bz: f64,
    b0: f64,
    omega_k_sq: f64,
}

#[derive(Serialize)]
struct PerturbativeReport {
    target: GateKind,
    k: f64,
    delta_k: f64,
    requested_fidelity: f64,
    f_max: f64,
    perturbative: PerturbativeSolution,
    exact: RootSolution,
    deviation: Deviation,
    #[serde(skip_serializing_if = "Option::is_none")]
    physical_time: Option<PhysicalTime>,
}

fn cmd_solve_perturbative(args: &SolvePerturbativeArgs) -> Result<(), Failure> {
    require_json(args.format)?;
    let (k, j12_hz) = args.coupling.resolve()?;
    let kind = args.target.kind();
    let inp = qbf_core::perturbative::PerturbationInputs::new(k - 1.0, args.fidelity)
        .map_err(perturbation_failure)?;
    let seed = optimal_constants(&inp, kind).map_err(perturbation_failure)?;
    let mut p = ModelParams::implied_by(k, &seed.constants);
    p.j12_hz = j12_hz;
    let root = root_solve_exact(&p, &seed.profile, args.fidelity, &seed.constants)
        .map_err(perturbation_failure)?;
    let report = PerturbativeReport {
        target: kind,
        k,
        delta_k: inp.delta_k,
        requested_fidelity: args.fidelity,
        f_max: seed.f_max,
        deviation: Deviation {
            tau_star: (seed.constants.tau_star - root.constants.tau_star).abs(),
            bz: (seed.constants.bz - root.constants.bz).abs(),
            b0: (seed.constants.b0 - root.constants.b0).abs(),
            omega_k_sq: (seed.omega_k_sq - root.omega_k_sq).abs(),
        },
        physical_time: j12_hz.map(|j| PhysicalTime::from_tau(root.constants.tau_star, j)),
        perturbative: seed,
        exact: root,
    };
    let json = to_pretty_json(&report)?;
    emit(&args.output, &json)
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    require_json(args.format)?;
    let raw = std::fs::read_to_string(&args.file).map_err(|e| {
        Failure::new(
            EXIT_PARSE,
            format!("could not read {}: {e}", args.file.display()),
        )
    })?;
    let input = SolveReport::from_json(&raw).map_err(|e| {
        Failure::new(
            EXIT_PARSE,
            format!("could not parse {}: {e}", args.file.display()),
        )
    })?;
    let mut integration = input.integration;
    if let Some(steps) = args.steps {
        integration.steps = steps;
    }
    let gate = target(input.target, Frame::Computational);
    let mut report = verify_constants(
        &input.params,
        &input.constants,
        &gate,
        input.requested_fidelity,
        &integration,
    )
    .map_err(solve_failure)?;
    report.profile = input.profile;
    let json = to_pretty_json(&report)?;
    emit(&args.output, &json)?;
    if !report.within_tolerances() {
        return Err(Failure::new(
            EXIT_RESIDUAL,
            format!("verification failed: {}", report.failures().join(", ")),
        ));
    }
    Ok(())
}

fn cmd_sweep_k(args: &SweepKArgs) -> Result<(), Failure> {
    if args.steps < 2 {
        return Err(Failure::new(
            EXIT_PARSE,
            format!("--steps must be at least 2, got {}", args.steps),
        ));
    }
    if !(args.fidelity > 0.0 && args.fidelity <= 1.0) {
        return Err(Failure::new(
            EXIT_PARSE,
            format!("--fidelity must lie in (0, 1], got {}", args.fidelity),
        ));
    }
    let kind = args.target.kind();
    let mut rows = Vec::with_capacity(args.steps);
    for i in 0..args.steps {
        let k = args.from + (args.to - args.from) * i as f64 / (args.steps - 1) as f64;
        let f_max = fidelity_ceiling(k - 1.0);
        let row = solve_sweep_row(k, args.fidelity, kind, f_max);
        rows.push(row);
    }
    let content = match args.format {
        OutputFormat::Csv => sweep_csv(&rows),
        OutputFormat::Json => to_pretty_json(&rows)?,
    };
    emit(&args.output, &content)
}

fn solve_sweep_row(k: f64, fidelity: f64, kind: GateKind, f_max: f64) -> SweepRow {
    let infeasible = SweepRow {
        k,
        tau_perturbative: None,
        tau_exact: None,
        f_max,
        feasible: false,
    };
    let Ok(inp) = qbf_core::perturbative::PerturbationInputs::new(k - 1.0, fidelity) else {
        return infeasible;
    };
    let Ok(seed) = optimal_constants(&inp, kind) else {
        return infeasible;
    };
    let p = ModelParams::implied_by(k, &seed.constants);
    match root_solve_exact(&p, &seed.profile, fidelity, &seed.constants) {
        Ok(root) => SweepRow {
            k,
            tau_perturbative: Some(seed.constants.tau_star),
            tau_exact: Some(root.constants.tau_star),
            f_max,
            feasible: true,
        },
        Err(_) => SweepRow {
            k,
            tau_perturbative: Some(seed.constants.tau_star),
            tau_exact: None,
            f_max,
            feasible: false,
        },
    }
}

fn cmd_field_trace(args: &FieldTraceArgs) -> Result<(), Failure> {
    let (k, j12_hz) = args.coupling.resolve()?;
    let kind = args.target.kind();
    let p = ratio_params(k, j12_hz);
    let solutions = solve_perfect(&p, kind, args.n_max, args.m_max).map_err(solve_failure)?;
    let best = &solutions[0];
    let rows = fidelity_trace(&best.params, &best.constants, kind, args.steps)
        .map_err(|e| Failure::new(EXIT_INFEASIBLE, e))?;
    let content = match args.format {
        OutputFormat::Csv => trace_csv(&rows),
        OutputFormat::Json => to_pretty_json(&rows)?,
    };
    emit(&args.output, &content)
}

#[derive(Serialize)]
struct PresetRow {
    name: &'static str,
    j12_hz: f64,
    j23_hz: f64,
    k: f64,
}

fn cmd_presets(args: &PresetsArgs) -> Result<(), Failure> {
    match &args.action {
        PresetsAction::List { format, output } => {
            let rows: Vec<PresetRow> = presets::list()
                .iter()
                .map(|preset| PresetRow {
                    name: preset.name,
                    j12_hz: preset.j12_hz,
                    j23_hz: preset.j23_hz,
                    k: preset.k(),
                })
                .collect();
            let content = match format {
                OutputFormat::Json => to_pretty_json(&rows)?,
                OutputFormat::Csv => {
                    let mut out = String::from("name,j12_hz,j23_hz,k\n");
                    for row in &rows {
                        out.push_str(&format!(
                            "{},{},{},{}\n",
                            row.name, row.j12_hz, row.j23_hz, row.k
                        ));
                    }
                    out
                }
            };
            emit(output, &content)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::SolvePerfect(args) => cmd_solve_perfect(args),
        Command::SolvePerturbative(args) => cmd_solve_perturbative(args),
        Command::Verify(args) => cmd_verify(args),
        Command::SweepK(args) => cmd_sweep_k(args),
        Command::FieldTrace(args) => cmd_field_trace(args),
        Command::Presets(args) => cmd_presets(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_PARSE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
