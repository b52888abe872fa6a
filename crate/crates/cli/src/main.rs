use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use giantbic_cli::output::to_json_string;
use giantbic_cli::{
    load, run, CliError, Command, Format, RunOptions, EXIT_INTERNAL, EXIT_OK, EXIT_VALIDATION,
};

#[derive(Parser)]
#[command(name = "giantbic", version, about = "Giant atom in a coupled-resonator waveguide")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Diagonalize and classify every eigenstate.
    Spectrum(RunArgs),
    /// Closed-form BIC profile against the numeric eigenstate.
    Bic(RunArgs),
    /// Bound states outside the band: transcendental roots and eigenvalues.
    Boc(RunArgs),
    /// Quench from the excited atom.
    Dynamics(RunArgs),
    /// Beat spectrum of P_e and the tracked site intensities.
    Beats(RunArgs),
    /// Run `sweep.command` over `sweep.values`.
    Sweep(RunArgs),
    /// Invariant suite and long-time model calibration.
    Selfcheck(RunArgs),
    /// Report every violated invariant without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Subcommand the configuration is meant for.
        #[arg(long = "for", value_enum, default_value_t = Target::Spectrum)]
        target: Target,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `output.directory`, then `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for the synthetic-signal checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Spectrum,
    Bic,
    Boc,
    Dynamics,
    Beats,
    Sweep,
    Selfcheck,
}

impl Target {
    fn command(self) -> Command {
        match self {
            Target::Spectrum => Command::Spectrum,
            Target::Bic => Command::Bic,
            Target::Boc => Command::Boc,
            Target::Dynamics => Command::Dynamics,
            Target::Beats => Command::Beats,
            Target::Sweep => Command::Sweep,
            Target::Selfcheck => Command::Selfcheck,
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn execute(command: Command, args: RunArgs) -> Result<(), CliError> {
    let text = read(&args.config)?;
    let (config, report) = load(&text, command);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let config = config.ok_or(CliError::Validation(report))?;
    let options = RunOptions {
        out: giantbic_cli::commands::resolve_out(args.out.as_deref(), &config),
        format: match args.format {
            Some(FormatArg::Csv) => Format::Csv,
            Some(FormatArg::Json) => Format::Json,
            None => config.format,
        },
        jobs: args.jobs,
        seed: args.seed,
    };
    let manifest = run(command, &config, &options)?;
    eprintln!(
        "{}: {} file(s) in {}",
        command.name(),
        manifest.files.len(),
        options.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Validate { config, target } => {
            let text = match read(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INTERNAL as u8);
                }
            };
            let (_, report) = load(&text, target.command());
            print!("{}", to_json_string(&report));
            let code = if report.is_empty() { EXIT_OK } else { EXIT_VALIDATION };
            return ExitCode::from(code as u8);
        }
        Sub::Spectrum(a) => (Command::Spectrum, a),
        Sub::Bic(a) => (Command::Bic, a),
        Sub::Boc(a) => (Command::Boc, a),
        Sub::Dynamics(a) => (Command::Dynamics, a),
        Sub::Beats(a) => (Command::Beats, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Selfcheck(a) => (Command::Selfcheck, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
