use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use feederflow::commands;
use feederflow::config::{Scenario, ScenarioOptions};
use feederflow::error::{CliError, Result};
use feederflow_core::SolveOptions;

/// Voltage profiles of radial distribution feeders.
#[derive(Debug, Parser)]
#[command(name = "feederflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Network description (JSON).
    network: PathBuf,
    /// Target grid spacing in km.
    #[arg(long, default_value_t = 0.002)]
    grid_h_km: f64,
    /// Gaussian coarse-graining width in km.
    #[arg(long, default_value_t = 0.05)]
    sigma_km: f64,
    /// Loading magnitude; the physical density is fixed, this only sets the
    /// scale of the shape functions.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let opts = self.options();
        for (name, v) in [("--grid-h-km", opts.grid_h_km), ("--sigma-km", opts.sigma_km), ("--epsilon", opts.epsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
            }
        }
        Scenario::load(&self.network, opts)
    }

    fn options(&self) -> ScenarioOptions {
        ScenarioOptions { grid_h_km: self.grid_h_km, sigma_km: self.sigma_km, epsilon: self.epsilon }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the network and the coarse-grained density without solving.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Nonlinear solve; writes profile.csv and report.json.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Perturbation orders; writes order_N.csv and assembled.csv.
    Expand {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// EV impact given the loads; writes impact.csv and impact_summary.json.
    Impact {
        #[command(flatten)]
        common: Common,
        /// Share of the loading magnitude attributed to EVs, in [0, 1].
        #[arg(long)]
        eps_ev_fraction: f64,
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// Series impact error against the nonlinear solver per EV share; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.4,0.5,0.6")]
        eps_ev_fraction: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// Series versus nonlinear per order; writes compare.csv and compare.txt.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        orders: Vec<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let solve = SolveOptions::default();
    let written = match &cli.command {
        Command::Validate { common } => {
            let summary = commands::validate(&common.scenario()?);
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
            return Ok(());
        }
        Command::Solve { common } => commands::run_solve(&common.scenario()?, common.options(), &solve, &common.out)?,
        Command::Expand { common, order } => {
            commands::run_expand(&common.scenario()?, *order, common.epsilon, &common.out)?
        }
        Command::Impact { common, eps_ev_fraction, order } => {
            commands::run_impact(&common.scenario()?, *eps_ev_fraction, *order, &common.out)?
        }
        Command::Sweep { common, eps_ev_fraction, order } => {
            commands::run_sweep(&common.scenario()?, eps_ev_fraction, *order, &solve, &common.out)?
        }
        Command::Compare { common, orders } => commands::run_compare(&common.scenario()?, orders, &solve, &common.out)?,
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FEEDERFLOW_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help, --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            fail(&CliError::Usage(e.render().to_string().trim().to_string()));
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            fail(&e);
            ExitCode::FAILURE
        }
    }
}

fn fail(e: &CliError) {
    let body = serde_json::json!({ "error": e.report() });
    eprintln!("{}", serde_json::to_string_pretty(&body).expect("serializable"));
}
