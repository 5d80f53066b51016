use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use cvim::harness::{self, Preset, PresetOptions};
use cvim::ising::{brute_force_ground, npp_to_ising, parse_assets, partition_imbalance};
use cvim::semiclassical::bifurcation_thresholds;

#[derive(Parser)]
#[command(
    name = "cvim",
    version,
    about = "Coupled Kerr parametric oscillator Ising machine simulator"
)]
struct Cli {
    /// Base seed for trajectory ensembles.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for CSV and manifest files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Trajectories per grid cell.
    #[arg(long, global = true)]
    n_traj: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (T, rate) grid described by a TOML config.
    Sweep { config: PathBuf },
    /// Run a built-in experiment: fig2a, fig2b, fig3a_slice or fig3c_slice.
    Preset { name: Preset },
    /// Print the exact ground states of a partition instance (one positive
    /// integer per line).
    Oracle { problem: PathBuf },
    /// Print the soft and hard bifurcation thresholds of a coupled pair.
    Thresholds {
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        detuning: f64,
        #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
        coupling: f64,
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
    },
}

fn run(cli: Cli) -> cvim::Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(cvim::Error::Config {
                field: "workers".into(),
                rule: "must be >= 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .expect("global thread pool is configured once");
    }
    match cli.command {
        Command::Sweep { config } => {
            let mut config = harness::load_config(&config)?;
            if let Some(s) = cli.seed {
                config.sweep.base_seed = s;
            }
            if let Some(n) = cli.n_traj {
                if n == 0 {
                    return Err(cvim::Error::Config {
                        field: "n_traj".into(),
                        rule: "must be >= 1".into(),
                    });
                }
                config.sweep.n_traj = n;
            }
            if let Some(dir) = &cli.out_dir {
                let name = config
                    .output_path
                    .file_name()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| "sweep.csv".into());
                config.output_path = dir.join(name);
            }
            info!("resolved config: {}", serde_json::to_string(&config)?);
            let result = harness::run_sweep(&config)?;
            let (csv, manifest) = harness::write_sweep(&result, &config.output_path)?;
            println!("{}", csv.display());
            println!("{}", manifest.display());
        }
        Command::Preset { name } => {
            let opts = PresetOptions {
                seed: cli.seed,
                n_traj: cli.n_traj,
                out_dir: cli.out_dir,
            };
            for path in harness::run_preset(name, &opts)? {
                println!("{}", path.display());
            }
        }
        Command::Oracle { problem } => {
            let assets = parse_assets(&std::fs::read_to_string(&problem)?)?;
            let ising = npp_to_ising(&assets)?;
            let ground = brute_force_ground(&ising)?;
            println!("assets: {assets:?}");
            println!("J0: {}", ising.j0.unwrap_or(1.0));
            println!("ground energy: {}", ground.energy);
            for s in &ground.configs {
                let spins: Vec<String> = s.iter().map(|v| format!("{v:+}")).collect();
                println!(
                    "  [{}]  imbalance {}",
                    spins.join(", "),
                    partition_imbalance(&assets, s)
                );
            }
        }
        Command::Thresholds {
            detuning,
            coupling,
            kappa,
        } => {
            let t = bifurcation_thresholds(detuning, coupling, kappa);
            println!("epsilon_soft = {}", t.soft);
            println!("epsilon_hard = {}", t.hard);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
