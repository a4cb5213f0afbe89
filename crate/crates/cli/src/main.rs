use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sparsewire::diagnostics::{diagnose, DiagnoseOptions};
use sparsewire::experiment::{
    list_presets, load_preset, run_experiment, solve_from_files, write_outputs, ExperimentConfig, SolveConfig,
};
use sparsewire::matrix_io::read_matrix;
use sparsewire::Error;

#[derive(Parser)]
#[command(name = "sparsewire", version, about = "Sparse recovery toolkit for wireless systems")]
struct Cli {
    /// Override the base seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the number of trials per sweep point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print coherence, spark and RIP diagnostics of a matrix file.
    Diagnose {
        matrix: PathBuf,
        /// Largest subset size searched for the spark.
        #[arg(long)]
        spark_budget: Option<usize>,
        /// Compute RIP constants up to this order.
        #[arg(long, default_value_t = 3)]
        rip_max_k: usize,
    },
    /// Recover one sparse vector described by a config file.
    Solve { config: PathBuf },
    /// Run a Monte-Carlo sweep from a config file or preset id.
    Experiment { config: String },
    /// List the built-in experiment presets.
    ListPresets,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } => 2,
        _ => 1,
    }
}

fn load_experiment(arg: &str) -> Result<ExperimentConfig, Error> {
    let path = Path::new(arg);
    if path.is_file() {
        ExperimentConfig::from_path(path)
    } else if list_presets().contains(&arg) {
        load_preset(arg)
    } else {
        Err(Error::Config(format!(
            "'{arg}' is neither a config file nor a preset; presets: {}",
            list_presets().join(", ")
        )))
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Diagnose {
            matrix,
            spark_budget,
            rip_max_k,
        } => {
            let h = read_matrix(&matrix)?;
            let opts = DiagnoseOptions {
                spark_budget: spark_budget.unwrap_or(h.ncols()).min(h.ncols()),
                rip_max_k,
                ..DiagnoseOptions::default()
            };
            print!("{}", diagnose(&h, &opts)?.to_key_value());
        }
        Command::Solve { config } => {
            let mut cfg = SolveConfig::from_path(&config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let r = solve_from_files(&cfg)?;
            println!("solver={}", cfg.solver.label);
            println!("support={:?}", r.support);
            println!("iterations={}", r.iterations);
            println!("converged={}", r.converged);
            println!("residual_norm={:.6e}", r.residual_norm());
            for &i in &r.support {
                let z = r.estimate[i];
                println!("s[{i}]={:.6e}{:+.6e}i", z.re, z.im);
            }
        }
        Command::Experiment { config } => {
            let mut cfg = load_experiment(&config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(trials) = cli.trials {
                if trials == 0 {
                    return Err(Error::Config("--trials must be at least 1".into()));
                }
                cfg.trials = trials;
            }
            if let Some(out) = cli.out {
                cfg.output = out;
            }
            let result = run_experiment(&cfg)?;
            for path in write_outputs(&result, &cfg.output)? {
                println!("{}", path.display());
            }
        }
        Command::ListPresets => {
            for id in list_presets() {
                println!("{id}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
