//! `histories`: Copenhagen, Bell-process, Everett and memory probabilities of
//! observer histories in the built-in Wigner's-friend scenarios.
//!
//! ```text
//! histories run --scenario brukner --c1 0.8367 --c2 0.5477 --method copenhagen --method bell
//! histories run --scenario frauchiger-renner --observer joint --method bell --prune-zeros --format csv
//! histories check --scenario fr-memory
//! histories list-scenarios
//! ```
//!
//! Exit status: 0 on success, 1 when an invariant check fails or the engine
//! rejects a computation, 2 on usage errors.

mod check;
mod config;
mod error;
mod output;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use histories_core::scenario::SCENARIO_NAMES;
use histories_core::{Scenario, C64};

use config::{Format, Method, Overrides};
use error::CliResult;

#[derive(Parser)]
#[command(
    name = "histories",
    version,
    about = "Probabilities of quantum histories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate history probabilities for the selected methods.
    Run(RunArgs),
    /// Check invariants (closure, rates, Born marginals, kernel chaining, step guard).
    Check(RunArgs),
    /// List scenarios with their observers.
    ListScenarios,
}

#[derive(Args)]
struct RunArgs {
    /// brukner, frauchiger-renner or fr-memory.
    #[arg(long)]
    scenario: Option<String>,
    /// Observer name or alias; defaults to the scenario's first (or recorded) observer.
    #[arg(long)]
    observer: Option<String>,
    /// Repeatable.
    #[arg(long = "method", value_enum)]
    methods: Vec<Method>,
    /// Brukner coefficient of |1⟩, as `re+imi`.
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<String>,
    /// Brukner coefficient of |2⟩, as `re+imi`.
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<String>,
    /// Integration and sampling step (absolute time).
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    trajectories: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Drop histories whose probability is zero under every method.
    #[arg(long)]
    prune_zeros: bool,
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> CliResult<config::RunConfig> {
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            scenario: self.scenario,
            observer: self.observer,
            methods: (!self.methods.is_empty()).then_some(self.methods),
            c1: self.c1,
            c2: self.c2,
            step: self.step,
            trajectories: self.trajectories,
            seed: self.seed,
            format: self.format,
            prune_zeros: self.prune_zeros.then_some(true),
        };
        flags.or(file).resolve()
    }
}

fn emit(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn list_scenarios() -> CliResult<()> {
    let c = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut text = String::new();
    for name in SCENARIO_NAMES {
        let s = Scenario::by_name(name, c, c)?;
        text.push_str(&format!("{name} (dimension {})\n", s.space.dim()));
        for o in &s.observers {
            let aliases = if o.aliases.is_empty() {
                String::new()
            } else {
                format!(" alias {}", o.aliases.join(", "))
            };
            let times: Vec<String> = o.times.iter().map(|t| output::significant(*t)).collect();
            text.push_str(&format!(
                "  {}{aliases}: {} labels, times {}\n",
                o.name,
                o.family.len(),
                times.join(", ")
            ));
        }
    }
    emit(&text)
}

fn dispatch(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.into_config()?;
            let t = table::run(&cfg)?;
            emit(&output::render_table(&t, cfg.format)?)?;
            Ok(t.passed())
        }
        Command::Check(args) => {
            let cfg = args.into_config()?;
            let r = check::check(&cfg)?;
            emit(&output::render_report(&r, cfg.format)?)?;
            Ok(r.passed())
        }
        Command::ListScenarios => list_scenarios().map(|_| true),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: invariant check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
