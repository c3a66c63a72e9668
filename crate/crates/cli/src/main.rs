use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ringtrack::config::RunConfig;
use ringtrack::Result;
use ringtrack_cli as pipeline;

#[derive(Parser)]
#[command(
    name = "ringtrack",
    version,
    about = "Human position estimation from lidar rings on a robot arm",
    after_help = "Any configuration key can be overridden with a flag named after it, \
                  e.g. --tracker.n_particles 1000 or --sim.dt=0.02."
)]
struct Cli {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate episodes and write the dataset CSV.
    Simgen {
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 2000)]
        ticks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the network on a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Model file (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss CSV; defaults to the model path with `.history.csv`.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Shorthand for --train.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Shorthand for --train.epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Track the test partition of a dataset and write the trajectory CSV.
    Track {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Shorthand for --tracker.n_particles.
        #[arg(long)]
        particles: Option<usize>,
        /// Shorthand for --tracker.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print network and filter RMSE of a trajectory.
    Eval {
        #[arg(long)]
        traj: PathBuf,
    },
    /// Draw a trajectory as a top-view SVG.
    Plot {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

// A closed pipe on stdout is not an error for a batch tool.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn run(cli: Cli, overrides: Vec<(String, String)>) -> Result<()> {
    let mut overrides = overrides;
    match &cli.command {
        Command::Train { seed, epochs, .. } => {
            overrides.extend(seed.map(|s| ("train.seed".to_string(), s.to_string())));
            overrides.extend(epochs.map(|e| ("train.epochs".to_string(), e.to_string())));
        }
        Command::Track { particles, seed, .. } => {
            overrides.extend(particles.map(|n| ("tracker.n_particles".to_string(), n.to_string())));
            overrides.extend(seed.map(|s| ("tracker.seed".to_string(), s.to_string())));
        }
        _ => {}
    }
    let cfg: RunConfig = pipeline::load_config(cli.config.as_deref(), &overrides)?;

    match cli.command {
        Command::Simgen {
            episodes,
            ticks,
            seed,
            out,
        } => {
            for s in pipeline::cmd_simgen(&cfg, episodes, ticks, seed, &out)? {
                say!(
                    "episode {:>3}: {} ticks, human visible {:.1}%",
                    s.episode,
                    s.ticks,
                    100.0 * s.visible_fraction
                );
            }
            say!("wrote {}", out.display());
        }
        Command::Train {
            data, out, history, ..
        } => {
            let history = history.unwrap_or_else(|| out.with_extension("history.csv"));
            let records = pipeline::cmd_train(&cfg, &data, &out, &history, |r| match r.val_rmse {
                Some(v) => say!("epoch={} train_rmse={:.6} test_rmse={:.6} lr={:.6e}", r.epoch, r.train_rmse, v, r.lr),
                None => say!("epoch={} train_rmse={:.6} lr={:.6e}", r.epoch, r.train_rmse, r.lr),
            })?;
            say!("trained {} epochs", records.len() - 1);
            say!("wrote {} and {}", out.display(), history.display());
        }
        Command::Track {
            model, data, out, ..
        } => {
            let traj = pipeline::cmd_track(&cfg, &model, &data, &out)?;
            say!("tracked {} ticks with {} particles", traj.rows.len(), traj.n_particles);
            say!("wrote {}", out.display());
        }
        Command::Eval { traj } => say!("{}", pipeline::cmd_eval(&traj)?),
        Command::Plot { traj, out } => {
            pipeline::cmd_plot(&traj, &out)?;
            say!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let (args, overrides) = match pipeline::split_overrides(&args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(pipeline::exit_code(&e) as u8)
        }
    }
}
