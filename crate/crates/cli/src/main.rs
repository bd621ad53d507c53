//! Deterministic benchmark runner and theory verification for MADGRAD.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use madgrad::runner::{grid_sweep, run};
use madgrad::{presets, verify, Error, RunConfig};

#[derive(Parser)]
#[command(name = "madgrad-bench", version)]
#[command(about = "Seeded optimizer runs, learning-rate sweeps and theory checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file or preset and write its CSV
    Run {
        /// Path to a TOML config, or a preset name
        config: String,
        /// Output directory
        #[arg(long, env = "MADGRAD_BENCH_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Sweep the learning rate over {1, 2.5, 5} x 10^i, crossed with weight decays
    Sweep {
        config: String,
        #[arg(long, allow_negative_numbers = true)]
        i_min: i32,
        #[arg(long, allow_negative_numbers = true)]
        i_max: i32,
        /// Comma-separated weight decays; defaults to the config's
        #[arg(long, value_delimiter = ',')]
        decays: Vec<f64>,
        #[arg(long, env = "MADGRAD_BENCH_OUT_DIR", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run a verification suite: all, lemmas, support, lyapunov, theorem1,
    /// allocation, identities, momentum, sparsity or adaptive
    Verify { suite: String },
    /// List the shipped presets
    ListPresets,
}

fn load(config: &str) -> madgrad::Result<RunConfig> {
    let path = Path::new(config);
    if path.is_file() {
        RunConfig::load(path)
    } else {
        presets::get(config)
    }
}

fn execute(cmd: Command) -> madgrad::Result<ExitCode> {
    match cmd {
        Command::Run { config, out_dir } => {
            let cfg = load(&config)?;
            let out = run(&cfg)?;
            let path = cfg.output_path(Some(&out_dir));
            out.write_csv(&path)?;
            if let Some(last) = out.aggregate.last() {
                println!(
                    "{}: k={} mean subopt {:.6e} +/- {:.3e} over {} seeds",
                    cfg.name,
                    last.k,
                    last.subopt_mean(),
                    last.subopt_two_se(),
                    last.seeds
                );
            }
            for rec in out.records.iter().filter(|r| r.diverged()) {
                println!(
                    "seed {} halted: {}",
                    rec.seed,
                    rec.halted.as_deref().unwrap_or("")
                );
            }
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            i_min,
            i_max,
            decays,
            out_dir,
        } => {
            let cfg = load(&config)?;
            let table = grid_sweep(&cfg, i_min, i_max, &decays)?;
            print!("{table}");
            let path = out_dir.join(format!("{}-sweep.csv", cfg.name));
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(&path, table.to_csv()?)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite } => {
            let report = verify::verify(&suite)?;
            print!("{report}");
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::ListPresets => {
            for name in presets::list() {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e @ Error::UnknownSuite(..)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
