use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use formation_core::presets;
use formation_sim::app::{self, Mode, RunConfig, ScenarioSource};
use formation_sim::scenario_file;

#[derive(Parser)]
#[command(name = "formation", version, about = "Leader-follower quadrotor formation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trace.csv, summary.json and plots.
    #[command(group(ArgGroup::new("source").required(true).args(["scenario", "preset"])))]
    Simulate {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Built-in scenario: 1 (circling leader) or 2 (hovering leader).
        #[arg(long)]
        preset: Option<u8>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Integration step override [s].
        #[arg(long)]
        dt: Option<f64>,
        /// Horizon override [s].
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long, value_enum, default_value_t = ModeArg::Full)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = Toggle::On)]
        plots: Toggle,
    },
    /// Print a built-in scenario as JSON.
    Preset {
        case: u8,
        /// Write to this file instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    IdealReference,
    ValidateOnly,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Preset { case, output } => {
            let sc = match presets::preset(case) {
                Ok(sc) => sc,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match output {
                Some(path) => {
                    if let Err(e) = scenario_file::save(&sc, &path) {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                }
                None => println!("{}", scenario_file::to_json(&sc)),
            }
            ExitCode::SUCCESS
        }
        Command::Simulate {
            scenario,
            preset,
            out,
            dt,
            t_final,
            mode,
            plots,
        } => {
            let source = match (scenario, preset) {
                (Some(path), _) => ScenarioSource::File(path),
                (None, Some(case)) => ScenarioSource::Preset(case),
                (None, None) => unreachable!("clap enforces a scenario source"),
            };
            let config = RunConfig {
                source,
                out,
                dt,
                t_final,
                mode: match mode {
                    ModeArg::Full => Mode::Full,
                    ModeArg::IdealReference => Mode::IdealReference,
                    ModeArg::ValidateOnly => Mode::ValidateOnly,
                },
                plots: plots == Toggle::On,
            };
            run(&config)
        }
    }
}

fn run(config: &RunConfig) -> ExitCode {
    match app::simulate(config) {
        Ok(outcome) => {
            let Some(summary) = outcome.summary else {
                println!("scenario valid ({} agents)", outcome.scenario.n_agents());
                return ExitCode::SUCCESS;
            };
            println!(
                "t = {} s, {} samples, max formation error {:.3e} m",
                summary.t_reached, summary.samples, summary.max_formation_error
            );
            if let Some(report) = &summary.monitors {
                for c in report.checks() {
                    let tag = if c.passed { "ok  " } else { "FAIL" };
                    println!("  {tag} {:<20} {:.6e} (limit {:.6e})", c.name, c.value, c.limit);
                }
            }
            println!("wrote {}", config.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            match e.exit_code() {
                3 => eprintln!("error: {e}; partial trace written to {}", config.out.display()),
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
