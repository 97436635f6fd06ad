use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use froblab_cli::{examples, parse_window, regression_suite, report, CliError, Command, Format, Perturbation, RunConfig, Source};

#[derive(Parser)]
#[command(name = "froblab", version, about = "Canonical frames, R-matrices and elliptic 1-forms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a bundled example or a config file.
    Run {
        /// Bundled example name.
        #[arg(required_unless_present = "config", conflicts_with = "config")]
        example: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Truncation order in q.
        #[arg(long)]
        order: Option<i64>,
        /// Window of hbar powers, `a:b`.
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        hbar_window: Option<(i64, i64)>,
        /// Largest lattice denominator tried for fractional exponents.
        #[arg(long, default_value_t = 6)]
        max_lattice: u32,
        #[arg(long, value_enum, default_value_t = Fmt::Json)]
        format: Fmt,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Suite {
        #[arg(long)]
        order: Option<i64>,
        #[arg(long, value_enum, default_value_t = Fmt::Text)]
        format: Fmt,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true, default_value = "none")]
        perturb: String,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io { path: p.display().to_string(), source: e }),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn format(f: Fmt) -> Format {
    match f {
        Fmt::Json => Format::Json,
        Fmt::Text => Format::Text,
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Cmd::Run { example, config, order, hbar_window, max_lattice, format: f, out } => {
            let source = match (example, config) {
                (_, Some(p)) => Source::Config(p),
                (Some(e), None) => Source::Example(e),
                (None, None) => return Err(CliError::InvalidConfig("need an example or --config".into())),
            };
            let cfg = RunConfig { command: Command::Run(source), order, hbar_window, max_lattice, format: format(f), out };
            cfg.validate()?;
            let outcome = examples::run_example(&cfg)?;
            emit(&outcome.render(cfg.format), cfg.out.as_ref())?;
            Ok(outcome.ok())
        }
        Cmd::Suite { order, format: f, out, perturb } => {
            let p = Perturbation::parse(&perturb).ok_or_else(|| CliError::InvalidConfig(format!("unknown perturbation `{}`", perturb)))?;
            if let Some(o) = order {
                if o <= 0 {
                    return Err(CliError::InvalidConfig(format!("order must be positive, got {}", o)));
                }
            }
            let summary = regression_suite(order, p);
            let text = match format(f) {
                Format::Json => report::to_json(&summary.to_value()),
                Format::Text => summary.lines(),
            };
            emit(&text, out.as_ref())?;
            Ok(summary.ok())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("froblab: {}", e);
            ExitCode::from(2)
        }
    }
}
