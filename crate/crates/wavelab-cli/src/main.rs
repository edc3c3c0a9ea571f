//! `wavelab`: runs scenarios, re-checks saved logs, reproduces the splitting
//! construction, prints envelopes and sweeps the construction scale.
//!
//! Exit status: 0 when every check passes, 2 when a bound fails, 1 on usage,
//! parse or input errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wavelab::verifier::counterexample::CounterexampleParams;
use wavelab_cli::commands::{self, SchemeChoice};

#[derive(Parser)]
#[command(name = "wavelab", version, about = "Wave interaction and cancellation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Wft,
    Glimm,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write events.csv, series.csv and report.json.
    Run {
        /// Scenario file.
        scenario: PathBuf,
        /// Override the scheme of the scenario.
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        /// Output directory; defaults to the scenario's [output] dir, then `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a saved run directory.
    Verify {
        /// Directory holding report.json, events.csv and series.csv.
        dir: PathBuf,
    },
    /// Reproduce the splitting construction and write report.json.
    Counterexample {
        /// Flux amplitude.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Scale L.
        #[arg(long = "L", default_value_t = 0.1)]
        l: f64,
        /// Scale eps.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Value grid refinement: grid step eps / q.
        #[arg(long, default_value_t = 64)]
        q: u32,
        /// Also verify every event of the run.
        #[arg(long)]
        verify: bool,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the convex (or concave) envelope of a flux table as CSV runs.
    Envelope {
        /// Table with one `u,f` pair per line.
        #[arg(long)]
        flux: PathBuf,
        /// Left state.
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        /// Right state.
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        /// Concave envelope instead of the convex one.
        #[arg(long)]
        upper: bool,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ratio study of the splitting construction with eps = L^3.
    Sweep {
        /// Flux amplitude.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Comma separated scales L.
        #[arg(long = "L", value_delimiter = ',', default_values_t = [0.1, 0.05, 0.025])]
        ls: Vec<f64>,
        /// Value grid refinement.
        #[arg(long, default_value_t = 4)]
        q: u32,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cmd: Command) -> wavelab_cli::Result<bool> {
    match cmd {
        Command::Run { scenario, scheme, out } => {
            let scheme = scheme.map(|s| match s {
                SchemeArg::Wft => SchemeChoice::Wft,
                SchemeArg::Glimm => SchemeChoice::Glimm,
            });
            commands::run(&scenario, scheme, out.as_deref())
        }
        Command::Verify { dir } => commands::verify(&dir),
        Command::Counterexample { alpha, l, eps, q, verify, out } => {
            commands::run_counterexample(&CounterexampleParams { alpha, l, eps, q, verify }, &out)
        }
        Command::Envelope { flux, a, b, upper, out } => {
            let text = std::fs::read_to_string(&flux).map_err(wavelab_cli::error::io(&flux))?;
            let f = commands::read_flux_table(&text)?;
            commands::emit(&commands::envelope_csv(&f, a, b, upper)?, out.as_deref())?;
            Ok(true)
        }
        Command::Sweep { alpha, ls, q, out } => {
            commands::emit(&commands::sweep_csv(alpha, &ls, q)?, out.as_deref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
