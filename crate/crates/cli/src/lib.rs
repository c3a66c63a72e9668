//! Pipeline driver behind the `ringtrack` binary: generate data, train the
//! network, run the tracker, score and plot the result.

pub mod plot;
pub mod trajectory;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use ringtrack::config::{RunConfig, TargetMode};
use ringtrack::dataset::{self, has_human_return, nearest_surface_point, normalize, Dataset, DatasetMeta};
use ringtrack::neuralnet::{self, loss_rmse, EpochRecord, Examples, MlpModel};
use ringtrack::simworld::{associate, Simulator};
use ringtrack::tracker::{ParticleFilter, Prior};
use ringtrack::{Error, Result};

pub use trajectory::{Trajectory, TrajectoryRow};

/// Process exit code for an error: 1 for bad usage or configuration, 3 for
/// a diverged training run, 2 for everything touching data.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 1,
        Error::Divergence { .. } => 3,
        _ => 2,
    }
}

/// Short digest of the fully merged configuration.
pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    hex::encode(digest)[..16].to_string()
}

/// Pulls `--section.key value` and `--section.key=value` pairs out of an
/// argument list, leaving everything else in order.
pub fn split_overrides(args: &[String]) -> Result<(Vec<String>, Vec<(String, String)>)> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            rest.push(arg.clone());
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (flag, None),
        };
        if !name.contains('.') {
            rest.push(arg.clone());
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it
                .next()
                .cloned()
                .ok_or_else(|| Error::Config(format!("--{name} needs a value")))?,
        };
        overrides.push((name.to_string(), value));
    }
    Ok((rest, overrides))
}

/// Reads the config file (or the defaults) and applies overrides in order.
pub fn load_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for (k, v) in overrides {
        cfg.apply_override(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub ticks: usize,
    /// Share of ticks with at least one human return.
    pub visible_fraction: f64,
}

/// Start time of an episode; consecutive episodes are separated by the
/// configured idle gap so the tracker can tell them apart.
pub fn episode_start(cfg: &RunConfig, episode: usize, ticks: usize) -> f64 {
    episode as f64 * (ticks as f64 * cfg.sim.dt + cfg.sim.episode_gap)
}

fn run_episode(cfg: &RunConfig, episode: usize, ticks: usize, seed: u64) -> Result<Vec<dataset::TrainingSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    let mut sim = Simulator::new(
        cfg.robot_model()?,
        cfg.ring_specs()?,
        cfg.human_geometry(),
        cfg.sim_params(),
        episode_start(cfg, episode, ticks),
        rng,
    )?;
    let mut samples = Vec::with_capacity(ticks);
    for _ in 0..ticks {
        let kept = associate(&sim.observe()?);
        samples.push(dataset::record(&sim.state, &kept, &sim.state.q));
        sim.advance();
    }
    Ok(samples)
}

/// Simulates `episodes` independent episodes of `ticks` ticks each. Episodes
/// run in parallel and are merged by index.
pub fn generate(cfg: &RunConfig, episodes: usize, ticks: usize, seed: u64) -> Result<(Dataset, Vec<EpisodeSummary>)> {
    cfg.validate()?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).clamp(1, episodes.max(1));
    let mut results: Vec<Option<Result<Vec<dataset::TrainingSample>>>> = (0..episodes).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..episodes)
                        .step_by(workers)
                        .map(|e| (e, run_episode(cfg, e, ticks, seed)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (e, r) in h.join().expect("episode worker panicked") {
                results[e] = Some(r);
            }
        }
    });

    let mut ds = Dataset::new(DatasetMeta {
        seed,
        config_hash: config_hash(cfg),
    });
    let mut summaries = Vec::with_capacity(episodes);
    for (episode, r) in results.into_iter().enumerate() {
        let samples = r.expect("every episode ran")?;
        let visible = samples.iter().filter(|s| s.has_return()).count();
        summaries.push(EpisodeSummary {
            episode,
            ticks,
            visible_fraction: if ticks == 0 { 0.0 } else { visible as f64 / ticks as f64 },
        });
        ds.samples.extend(samples);
    }
    Ok((ds, summaries))
}

pub fn cmd_simgen(cfg: &RunConfig, episodes: usize, ticks: usize, seed: u64, out: &Path) -> Result<Vec<EpisodeSummary>> {
    let (ds, summaries) = generate(cfg, episodes, ticks, seed)?;
    ds.save(out)?;
    Ok(summaries)
}

/// Training target for a sample under the configured target mode.
pub fn target(cfg: &RunConfig, y: [f64; 2]) -> [f64; 2] {
    match cfg.dataset.target {
        TargetMode::Center => y,
        TargetMode::NearestSurface => nearest_surface_point(y, cfg.human.body_radius),
    }
}

/// Network inputs and targets for every sample that has a human return.
pub fn examples(cfg: &RunConfig, ds: &Dataset) -> Examples {
    let valid = ds.samples.iter().filter(|s| has_human_return(&s.z));
    let (inputs, targets) = valid
        .map(|s| (normalize(&s.z).to_vec(), target(cfg, s.y).to_vec()))
        .unzip();
    Examples { inputs, targets }
}

/// Splits, augments the training part, and trains a fresh network. The
/// test part is the validation set.
pub fn train_model(
    cfg: &RunConfig,
    ds: &Dataset,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<(MlpModel, Vec<EpochRecord>)> {
    cfg.validate()?;
    let (train_part, test_part) = ds.split(cfg.dataset.test_fraction, cfg.dataset.split_seed)?;
    let mut aug_rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    aug_rng.set_stream(1);
    let augmented = train_part.augment(cfg.dataset.augment_copies, &cfg.dataset.noise(), &mut aug_rng)?;
    let train_set = examples(cfg, &augmented);
    let val_set = examples(cfg, &test_part);
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    init_rng.set_stream(2);
    let net = MlpModel::new(
        &cfg.network.layer_dims(),
        &cfg.network.activations,
        cfg.network.dropout_rate,
        &mut init_rng,
    )?;
    let val = (!val_set.is_empty()).then_some(&val_set);
    neuralnet::train(&net, &train_set, val, &cfg.train_config(), on_epoch)
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_rmse,val_rmse,lr\n");
    for r in history {
        let val = r.val_rmse.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_rmse, val, r.lr));
    }
    out
}

pub fn cmd_train(
    cfg: &RunConfig,
    data: &Path,
    model_out: &Path,
    history_out: &Path,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>> {
    let ds = Dataset::load(data)?;
    let (model, history) = train_model(cfg, &ds, on_epoch)?;
    model.save(model_out)?;
    std::fs::write(history_out, history_csv(&history)).map_err(|e| Error::Io {
        path: history_out.to_path_buf(),
        source: e,
    })?;
    Ok(history)
}

/// Runs the gated tracker over `samples` in time order. The filter restarts
/// from a uniform prior over the workspace at the first sample and after any
/// gap longer than `tracker.reset_gap`.
pub fn track(cfg: &RunConfig, net: &MlpModel, samples: &[dataset::TrainingSample]) -> Result<Trajectory> {
    cfg.validate()?;
    if net.input_dim() != dataset::INPUT_DIM || net.output_dim() != dataset::OUTPUT_DIM {
        return Err(Error::Shape {
            layer: 0,
            message: format!(
                "model maps {} -> {}, the data needs {} -> {}",
                net.input_dim(),
                net.output_dim(),
                dataset::INPUT_DIM,
                dataset::OUTPUT_DIM
            ),
        });
    }
    let fcfg = cfg.filter_config();
    let mut pf = ParticleFilter::new(fcfg)?;
    let prior = Prior::UniformDisc {
        radius: cfg.sim.workspace_radius,
    };
    let mut rows = Vec::with_capacity(samples.len());
    let mut last_t: Option<f64> = None;
    for s in samples {
        let dt = match last_t {
            Some(t0) if s.t > t0 && s.t - t0 <= cfg.tracker.reset_gap => s.t - t0,
            _ => {
                pf.initialize(prior);
                cfg.sim.dt
            }
        };
        last_t = Some(s.t);
        let out = pf.step(Some(&s.z), net, dt)?;
        rows.push(TrajectoryRow {
            t: s.t,
            truth: s.y,
            nn: out.measurement,
            pf: out.estimate,
        });
    }
    Ok(Trajectory {
        n_particles: fcfg.n_particles,
        seed: fcfg.seed,
        rows,
    })
}

/// The test partition of a dataset under the configured split.
pub fn test_partition(cfg: &RunConfig, ds: &Dataset) -> Result<Dataset> {
    Ok(ds.split(cfg.dataset.test_fraction, cfg.dataset.split_seed)?.1)
}

pub fn cmd_track(cfg: &RunConfig, model: &Path, data: &Path, out: &Path) -> Result<Trajectory> {
    let net = MlpModel::load(model)?;
    let ds = Dataset::load(data)?;
    let traj = track(cfg, &net, &test_partition(cfg, &ds)?.samples)?;
    traj.save(out)?;
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub rows: usize,
    /// Over ticks with a network estimate; `None` when there are none.
    pub nn_rmse: Option<f64>,
    /// Over all ticks.
    pub pf_rmse: f64,
    pub valid_fraction: f64,
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.nn_rmse {
            Some(v) => writeln!(f, "nn_rmse        {v:.4}")?,
            None => writeln!(f, "nn_rmse        n/a")?,
        }
        writeln!(f, "pf_rmse        {:.4}", self.pf_rmse)?;
        writeln!(f, "valid_fraction {:.4}", self.valid_fraction)?;
        write!(f, "rows           {}", self.rows)
    }
}

pub fn evaluate(traj: &Trajectory) -> Result<EvalReport> {
    if traj.rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (nn_pred, nn_truth): (Vec<[f64; 2]>, Vec<[f64; 2]>) =
        traj.rows.iter().filter_map(|r| r.nn.map(|p| (p, r.truth))).unzip();
    let pf_pred: Vec<[f64; 2]> = traj.rows.iter().map(|r| r.pf).collect();
    let truth: Vec<[f64; 2]> = traj.rows.iter().map(|r| r.truth).collect();
    Ok(EvalReport {
        rows: traj.rows.len(),
        nn_rmse: if nn_pred.is_empty() { None } else { Some(loss_rmse(&nn_pred, &nn_truth)?) },
        pf_rmse: loss_rmse(&pf_pred, &truth)?,
        valid_fraction: nn_pred.len() as f64 / traj.rows.len() as f64,
    })
}

pub fn cmd_eval(traj_path: &Path) -> Result<EvalReport> {
    evaluate(&Trajectory::load(traj_path)?)
}

pub fn cmd_plot(traj_path: &Path, out: &Path) -> Result<()> {
    let traj = Trajectory::load(traj_path)?;
    std::fs::write(out, plot::render_svg(&traj)).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })
}
