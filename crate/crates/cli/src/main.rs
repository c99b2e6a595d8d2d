use std::path::PathBuf;
use std::process::ExitCode;

use bloch_cat::runner::{self, RunOptions, Scenario, ScenarioConfig};
use bloch_cat::Error;
use clap::{Args, Parser, Subcommand};

/// Bloch-oscillation cat-state simulator.
#[derive(Parser, Debug)]
#[command(name = "bloch-cat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Scenario for `run` (fig1, semiclassical, fig2+fig3, cat, reverse_at_half, freeze_at_half, coherence, convergence).
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Parent directory for run output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (the two spins run concurrently when ≥ 2).
    #[arg(long, global = true, default_value_t = 2)]
    threads: usize,
    /// Override a config value, e.g. `--override lattice.depth=4`.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Also write a gnuplot script (plot.gp) into the run directory.
    #[arg(long, global = true)]
    gnuplot: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band tables of both spins (scenario fig1).
    Bands,
    /// Semiclassical trajectories of both spins.
    Semiclassical,
    /// Exact evolution of the configured scenario (fig2+fig3 if it does not evolve packets).
    Evolve,
    /// Full cat protocol with separation, fidelity and coherence scan.
    Cat,
    /// Evolution to half a period and the microwave-rotation scan.
    Coherence,
    /// Time-step, cutoff and grid self-tests.
    Convergence,
    /// Run the scenario given by --scenario or the config.
    Run,
    /// Print the effective config as TOML.
    Config,
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::ZeroForce | Error::GridMismatch(_) => 2,
        Error::Convergence(_) | Error::CutoffNotConverged { .. } | Error::Eigensolver { .. } => 3,
        Error::DomainOverflow { .. } | Error::WallReflection { .. } => 4,
        _ => 1,
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let text = match &cli.common.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    let fixed = match cli.command {
        Command::Bands => Some(Scenario::Fig1),
        Command::Semiclassical => Some(Scenario::Semiclassical),
        Command::Cat => Some(Scenario::Cat),
        Command::Coherence => Some(Scenario::Coherence),
        Command::Convergence => Some(Scenario::Convergence),
        Command::Evolve | Command::Run | Command::Config => None,
    };
    if let (Some(f), Some(s)) = (fixed, &cli.common.scenario) {
        if s.parse::<Scenario>()? != f {
            return Err(Error::Config(format!("--scenario {s} conflicts with the subcommand")));
        }
    }
    if let Some(f) = fixed {
        overrides.push(format!("scenario=\"{}\"", f.name()));
    } else if let Some(s) = &cli.common.scenario {
        overrides.push(format!("scenario=\"{}\"", s.parse::<Scenario>()?.name()));
    }
    if let Some(out) = &cli.common.out {
        overrides.push(format!("output_dir={}", toml_string(&out.to_string_lossy())));
    }
    let mut all = cli.common.overrides.clone();
    all.extend(overrides);
    let mut cfg = runner::parse_config_with(&text, &all)?;
    if matches!(cli.command, Command::Evolve) && !cfg.scenario.evolves() {
        if cli.common.scenario.is_some() {
            return Err(Error::Config(format!("scenario {} does not evolve packets", cfg.scenario)));
        }
        cfg.scenario = Scenario::Fig2Fig3;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn toml_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if matches!(cli.command, Command::Config) {
        return match cfg.to_toml() {
            Ok(t) => {
                print!("{t}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        };
    }
    let opts = RunOptions { threads: cli.common.threads.max(1), gnuplot: cli.common.gnuplot };
    match runner::run_scenario_with(&cfg, &opts) {
        Ok(record) => {
            eprintln!("wrote {}", cfg.run_dir().display());
            match serde_json::to_string_pretty(&record.summary) {
                Ok(s) => println!("{s}"),
                Err(e) => eprintln!("error: {e}"),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
