mod commands;
mod config;
mod error;
mod schema;

use clap::{Args, Parser, Subcommand};
use commands::{EstimateArgs, SimulateArgs, VerifyArgs};
use config::{ConfigFile, Overrides, RunConfig};
use error::CliError;
use gerryopt::estimation::TypeSpec;
use gerryopt::Taste;
use std::path::PathBuf;
use std::process::ExitCode;

/// Optimal partisan districting under aggregate and idiosyncratic uncertainty.
#[derive(Debug, Parser)]
#[command(name = "gerryopt", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON file with default settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Ratio of idiosyncratic to aggregate shock dispersion [default: 6]
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Number of voter types on [-1, 1]; odd and at least 3 [default: 201]
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Taste-shock family: normal or logistic [default: normal]
    #[arg(long, global = true)]
    taste: Option<Taste>,
    /// Output directory [default: $GERRYOPT_OUT, else ./gerryopt-out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel work [default: all cores]
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Random seed [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Extra thresholds per type-grid gap is `refine - 1` [default: 1]
    #[arg(long, global = true)]
    refine: Option<usize>,
    /// Mass below which an assignment is inactive [default: 1e-9]
    #[arg(long, global = true)]
    tol_mass: Option<f64>,
    /// Allowed dual slack on the active support [default: 1e-6]
    #[arg(long, global = true)]
    tol_dual: Option<f64>,
    /// Allowed primal-dual objective gap [default: 1e-7]
    #[arg(long, global = true)]
    tol_gap: Option<f64>,
    /// Allowed type-mass and threshold residuals [default: 1e-8]
    #[arg(long, global = true)]
    tol_feasibility: Option<f64>,
    /// Print the output file contract of the command and exit.
    #[arg(long, global = true)]
    schema: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the designer LP at one gamma.
    Solve,
    /// Solve the LP at each gamma in a list.
    Sweep {
        /// Comma-separated gamma values.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
    },
    /// Evaluate the closed-form benchmark plans.
    Benchmark {
        /// Also solve the LP and report the gaps.
        #[arg(long)]
        lp: bool,
    },
    /// Check the structure and certificate of a solved assignment.
    Verify {
        /// Assignment CSV (s,r,mass).
        #[arg(long, value_name = "FILE")]
        assignment: Option<PathBuf>,
        /// Dual CSV (r,lambda) for the certificate checks.
        #[arg(long, value_name = "FILE")]
        duals: Option<PathBuf>,
        /// Scan the pack-and-pair grid condition at --gamma.
        #[arg(long)]
        pap: bool,
        /// Make the envelope-multiplier check affect the exit code.
        #[arg(long)]
        strict_envelope: bool,
    },
    /// Estimate gamma from precinct returns.
    Estimate {
        /// Precinct CSV: state,year,precinct_id,district_id,total_votes,rep_share,contested
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// One minus the interval coverage [default: 0.1]
        #[arg(long)]
        alpha: Option<f64>,
        /// Skip malformed rows instead of failing.
        #[arg(long)]
        permissive: bool,
        /// Also write vote-share and swing histograms and Q-Q curves.
        #[arg(long)]
        describe: bool,
        /// Base election for the Q-Q curves [default: earliest year]
        #[arg(long)]
        base_year: Option<i32>,
    },
    /// Draw synthetic precinct returns.
    Simulate {
        /// uniform:LO,HI or normal:MEAN,SD
        #[arg(long, default_value = "uniform:-1,1", value_parser = commands::parse_types)]
        types: TypeSpec,
        #[arg(long, default_value_t = 3)]
        elections: usize,
        #[arg(long, default_value_t = 1000)]
        precincts: usize,
        #[arg(long, default_value_t = 1000)]
        votes: u64,
        #[arg(long, default_value_t = 10)]
        districts: usize,
        #[arg(long, default_value = "SIM")]
        state: String,
        #[arg(long, default_value_t = 2016)]
        first_year: i32,
        /// Also report CI coverage over this many seeded replications.
        #[arg(long, value_name = "REPS")]
        coverage: Option<usize>,
        /// One minus the interval coverage [default: 0.1]
        #[arg(long)]
        alpha: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep { .. } => "sweep",
            Command::Benchmark { .. } => "benchmark",
            Command::Verify { .. } => "verify",
            Command::Estimate { .. } => "estimate",
            Command::Simulate { .. } => "simulate",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let g = &cli.global;
    let file = match &g.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut flags = Overrides {
        gamma: g.gamma,
        grid: g.grid,
        taste: g.taste,
        out: g.out.clone(),
        jobs: g.jobs,
        seed: g.seed,
        refine: g.refine,
        tol_mass: g.tol_mass,
        tol_dual: g.tol_dual,
        tol_gap: g.tol_gap,
        tol_feasibility: g.tol_feasibility,
        ..Default::default()
    };
    match &cli.command {
        Command::Sweep { gammas } => flags.gammas = gammas.clone(),
        Command::Estimate { alpha, .. } | Command::Simulate { alpha, .. } => flags.alpha = *alpha,
        _ => {}
    }
    let env_out = std::env::var_os("GERRYOPT_OUT").filter(|v| !v.is_empty()).map(PathBuf::from);
    let file = ConfigFile { out: file.out.or(env_out), ..file };
    RunConfig::resolve(flags, file)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.global.schema {
        return commands::print_json(&schema::contract(cli.command.name()));
    }
    let cfg = resolve(&cli)?;
    let dispatch = || match cli.command {
        Command::Solve => commands::solve(&cfg),
        Command::Sweep { .. } => commands::sweep(&cfg),
        Command::Benchmark { lp } => commands::benchmark(&cfg, lp),
        Command::Verify { assignment, duals, pap, strict_envelope } => {
            commands::verify(&cfg, &VerifyArgs { assignment, duals, pap, strict_envelope })
        }
        Command::Estimate { input, permissive, describe, base_year, .. } => {
            commands::estimate(&cfg, &EstimateArgs { input, permissive, describe, base_year })
        }
        Command::Simulate { types, elections, precincts, votes, districts, state, first_year, coverage, .. } => {
            commands::simulate(
                &cfg,
                &SimulateArgs { types, elections, precincts, votes, districts, state, first_year, coverage },
            )
        }
    };
    match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(format!("cannot start {n} worker threads: {e}")))?
            .install(dispatch),
        None => dispatch(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.kind.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.kind.exit_code())
        }
    }
}
