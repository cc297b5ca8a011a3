use clap::{Parser, Subcommand};
use infofusion_cli::commands::{cmd_compare, cmd_plan, cmd_run, parse_point};
use infofusion_cli::EXIT_INPUT;
use infofusion_core::sim::ControllerKind;
use infofusion_core::Point;
use std::path::PathBuf;
use std::process::ExitCode;

/// Global planning plus fused local control on occupancy-grid maps.
///
/// Exit codes: 0 success, 1 input error, 2 planning failure, 3 timeout or collision.
#[derive(Parser)]
#[command(name = "infofusion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a global path and write it as `x,y` lines plus a cost line.
    Plan {
        #[arg(long)]
        map: PathBuf,
        /// Start position "x,y" in meters.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        start: Point,
        /// Goal position "x,y" in meters.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        goal: Point,
        /// JSON file with an optional `planner` block and `seed`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one scenario and write its traces and summary.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's controller.
        #[arg(long)]
        controller: Option<String>,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run several controllers over a seed sweep and tabulate the results.
    Compare {
        scenario: PathBuf,
        /// Comma-separated controller names.
        #[arg(long, value_delimiter = ',', default_value = "mpc-basic,pursuit,info-fusion")]
        controllers: Vec<String>,
        /// Seed count; defaults to the scenario's `seeds`.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_controllers(names: &[String]) -> Result<Vec<ControllerKind>, String> {
    names
        .iter()
        .map(|n| n.parse::<ControllerKind>().map_err(|e| e.to_string()))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan {
            map,
            start,
            goal,
            config,
            out,
        } => cmd_plan(&map, start, goal, config.as_deref(), &out),
        Command::Run {
            scenario,
            out,
            controller,
            seed,
        } => match controller.map(|c| c.parse::<ControllerKind>()).transpose() {
            Ok(c) => cmd_run(&scenario, &out, c, seed),
            Err(e) => Err(infofusion_cli::CliError::input(e.to_string())),
        },
        Command::Compare {
            scenario,
            controllers,
            seeds,
            out,
        } => match parse_controllers(&controllers) {
            Ok(ks) => cmd_compare(&scenario, &ks, seeds, &out),
            Err(e) => Err(infofusion_cli::CliError::input(e)),
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code.max(EXIT_INPUT))
        }
    }
}
