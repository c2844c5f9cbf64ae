use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use greencell::harness::{emit_csv, run_experiment, ExperimentConfig, SchemeKind};
use greencell::power::{p_nonrenew_total, PowerParams, RenewableRealization};
use greencell::scenario::{desk_scenario, paper_scenario, Scenario};
use greencell::schemes::{
    carbon_aware, minimized_power, oracle_exact, shortest_distance, OracleObjective,
    DEFAULT_ORACLE_BUDGET,
};
use greencell::SolverConfig;
use std::path::PathBuf;

/// Planner and experiment driver for wind-assisted heterogeneous cellular
/// networks: picks small-cell ON/OFF modes and a user association that
/// minimize non-renewable power draw.
#[derive(Parser)]
#[command(name = "greencell", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Paper,
    Desk,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    /// Exact clipped non-renewable draw.
    #[value(alias = "p1")]
    Exact,
    /// Clipped shortfall of the linear upper bound (the planner objective).
    #[value(alias = "p2")]
    Surrogate,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment from a JSON config and write the CSV
    /// report.
    Run {
        /// Experiment config (JSON). Defaults to the desk profile.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one scenario with one scheme; prints the decision as JSON.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        /// Renewable realization (JSON); zero harvest when omitted.
        #[arg(long)]
        renewables: Option<PathBuf>,
        #[arg(long)]
        scheme: SchemeKind,
        /// Solver time limit in seconds.
        #[arg(long)]
        time_limit_s: Option<f64>,
    },
    /// Exhaustively minimize an objective on a small scenario.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        /// Renewable realization (JSON); zero harvest when omitted.
        #[arg(long)]
        renewables: Option<PathBuf>,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Evaluation budget guard.
        #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
        budget: u64,
    },
    /// Generate a scenario snapshot and write it as JSON.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "paper")]
        profile: Profile,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GREENCELL_LOG", "warn"))
        .init();
    match Cli::parse().command {
        Command::Run { config, out } => cmd_run(config, out),
        Command::Solve {
            scenario,
            renewables,
            scheme,
            time_limit_s,
        } => cmd_solve(scenario, renewables, scheme, time_limit_s),
        Command::Oracle {
            scenario,
            renewables,
            objective,
            budget,
        } => cmd_oracle(scenario, renewables, objective, budget),
        Command::Gen { seed, out, profile } => cmd_gen(seed, out, profile),
    }
}

fn cmd_run(config_path: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let mut config = match config_path {
        Some(path) => ExperimentConfig::load(&path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::desk(),
    };
    if let Some(out) = out {
        config.output = out;
    }
    let report = run_experiment(&config)?;
    emit_csv(&report, &config.output)?;
    print!("{}", report.summary());
    println!("report written to {}", config.output.display());
    Ok(())
}

fn load_inputs(
    scenario_path: &PathBuf,
    renewables_path: Option<&PathBuf>,
) -> Result<(Scenario, RenewableRealization)> {
    let scenario = Scenario::load(scenario_path)
        .with_context(|| format!("loading scenario {}", scenario_path.display()))?;
    let renew = match renewables_path {
        Some(path) => {
            let realization = RenewableRealization::load(path)
                .with_context(|| format!("loading renewables {}", path.display()))?;
            if realization.len() != scenario.n_stations() {
                bail!(
                    "renewables cover {} stations, scenario has {}",
                    realization.len(),
                    scenario.n_stations()
                );
            }
            realization
        }
        None => RenewableRealization::zeros(scenario.n_stations()),
    };
    Ok((scenario, renew))
}

fn cmd_solve(
    scenario_path: PathBuf,
    renewables_path: Option<PathBuf>,
    scheme: SchemeKind,
    time_limit_s: Option<f64>,
) -> Result<()> {
    let (scenario, renew) = load_inputs(&scenario_path, renewables_path.as_ref())?;
    let params = PowerParams::default();
    let solver = SolverConfig {
        time_limit_s,
        ..SolverConfig::default()
    };
    let decision = match scheme {
        SchemeKind::CarbonAware => carbon_aware(&scenario, &params, &renew, &solver)?,
        SchemeKind::ShortestDistance => shortest_distance(&scenario)?,
        SchemeKind::MinimizedPower => minimized_power(&scenario, &params, &solver)?,
    };
    let score = p_nonrenew_total(&scenario, &params, &decision, &renew);
    eprintln!("{scheme}: exact non-renewable draw {score:.6} W");
    println!("{}", decision.to_json());
    Ok(())
}

fn cmd_oracle(
    scenario_path: PathBuf,
    renewables_path: Option<PathBuf>,
    objective: ObjectiveArg,
    budget: u64,
) -> Result<()> {
    let (scenario, renew) = load_inputs(&scenario_path, renewables_path.as_ref())?;
    let params = PowerParams::default();
    let objective = match objective {
        ObjectiveArg::Exact => OracleObjective::Exact,
        ObjectiveArg::Surrogate => OracleObjective::Surrogate,
    };
    let (decision, value) = oracle_exact(&scenario, &params, &renew, objective, budget)?;
    eprintln!("oracle optimum: {value:.6} W");
    println!("{}", decision.to_json());
    Ok(())
}

fn cmd_gen(seed: u64, out: PathBuf, profile: Profile) -> Result<()> {
    let scenario = match profile {
        Profile::Paper => paper_scenario(seed),
        Profile::Desk => desk_scenario(seed),
    };
    scenario
        .save(&out)
        .with_context(|| format!("writing scenario {}", out.display()))?;
    println!(
        "wrote {} ({} stations, {} users)",
        out.display(),
        scenario.n_stations(),
        scenario.n_users()
    );
    Ok(())
}
