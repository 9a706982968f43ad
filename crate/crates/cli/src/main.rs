use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gan_cli::{
    cmd_eval_parzen, cmd_fig1, cmd_interpolate, cmd_sample, cmd_theory_check, cmd_train, resolve_out_dir, CliError,
    CliResult, ExperimentConfig,
};

const DEFAULT_FIG1: &str = include_str!("../../../configs/fig1.toml");
const DEFAULT_TRAIN: &str = include_str!("../../../configs/ring.toml");

#[derive(Parser)]
#[command(name = "gan", version, about = "Adversarial nets on the CPU: training runs, theory checks, Parzen scoring")]
struct Cli {
    /// Experiment config (TOML). `train` and `fig1` fall back to a built-in default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed; replaces the config's seeds where there is a config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; beats GAN_OUT_DIR and the config's out_dir.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a GAN and write metrics, checkpoint and run manifest.
    Train,
    /// Train a 1-D GAN and export density and discriminator curves.
    Fig1,
    /// Run the property suite on random discretized densities.
    TheoryCheck {
        #[arg(long, default_value_t = 32)]
        bins: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, hide = true)]
        corrupt_tolerance: bool,
    },
    /// Cross-validate a Parzen window and score held-out points.
    EvalParzen {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        /// `auto`, a single value, a comma list, or `lo:hi:n` (log-spaced).
        #[arg(long, default_value = "auto")]
        sigma_grid: String,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw generator samples into a CSV.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Walk a straight line in noise space and write G along it.
    Interpolate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
        /// Start point, comma separated. Default: first prior draw under --seed.
        #[arg(long, requires = "zb", allow_hyphen_values = true)]
        za: Option<String>,
        /// End point, comma separated. Default: second prior draw under --seed.
        #[arg(long, requires = "za", allow_hyphen_values = true)]
        zb: Option<String>,
    },
}

fn load_config(cli: &Cli, builtin: &str) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::from_toml_str(builtin, "built-in config", Path::new("."))?,
    };
    cfg.apply_seed(cli.seed);
    Ok(cfg)
}

fn parse_point(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| CliError::input(format!("bad latent coordinate {c:?}"))))
        .collect()
}

fn run(cli: &Cli) -> CliResult<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Train => {
            let cfg = load_config(cli, DEFAULT_TRAIN)?;
            let out = resolve_out_dir(cli.out_dir.as_deref(), &cfg, "runs/train");
            let outcome = cmd_train(&cfg, &out)?;
            println!(
                "trained {} iterations; outputs in {}",
                outcome.manifest.iterations_completed,
                out.display()
            );
        }
        Command::Fig1 => {
            let cfg = load_config(cli, DEFAULT_FIG1)?;
            let out = resolve_out_dir(cli.out_dir.as_deref(), &cfg, "runs/fig1");
            let (summary, _) = cmd_fig1(&cfg, &out)?;
            println!("{:>9} {:>10} {:>12}  file", "iteration", "jsd", "mean|D-1/2|");
            for s in &summary.snapshots {
                println!("{:>9} {:>10.5} {:>12.5}  {}", s.iteration, s.jsd, s.d_deviation, s.file);
            }
        }
        Command::TheoryCheck { bins, trials, corrupt_tolerance } => {
            let report = cmd_theory_check(*bins, *trials, seed, *corrupt_tolerance)?;
            print!("{}", report.render());
            if !report.all_passed() {
                return Err(CliError::failed("theory check failed"));
            }
        }
        Command::EvalParzen { samples, test, valid, sigma_grid, out } => {
            let report = cmd_eval_parzen(samples, test, valid, sigma_grid)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            if let Some(path) = out {
                gan_cli::write_atomic(path, json.as_bytes())?;
            }
            println!("{json}");
        }
        Command::Sample { checkpoint, n, out } => {
            let m = cmd_sample(checkpoint, *n, out, seed)?;
            println!("wrote {} samples to {}", m.rows(), out.display());
        }
        Command::Interpolate { checkpoint, steps, out, za, zb } => {
            let endpoints = match (za, zb) {
                (Some(a), Some(b)) => Some((parse_point(a)?, parse_point(b)?)),
                _ => None,
            };
            let m = cmd_interpolate(checkpoint, *steps, out, seed, endpoints)?;
            println!("wrote {} points to {}", m.rows(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
