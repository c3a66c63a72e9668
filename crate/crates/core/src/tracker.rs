//! Particle filter over the human's planar position and velocity.
//!
//! Each tick first checks whether the lidar input carries any human return.
//! If it does, the network's position estimate is used as the measurement and
//! the filter predicts, corrects and (when the effective sample size drops)
//! resamples. If it does not, the filter only predicts, coasting on the
//! constant-velocity model.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{has_human_return, normalize, INPUT_DIM};
use crate::error::{Error, Result};
use crate::neuralnet::{MlpModel, Mode};

/// `[x, y, vx, vy]` in meters and meters per second.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParticleState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<ParticleState>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Effective sample size `1 / Σ w²`.
    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub n_particles: usize,
    /// Position noise per prediction step, meters.
    pub sigma_process_pos: f64,
    /// Velocity noise per prediction step, m/s.
    pub sigma_process_vel: f64,
    /// Standard deviation of the isotropic measurement likelihood, meters.
    pub sigma_meas: f64,
    pub dt: f64,
    /// Resample when `ESS < fraction * N`.
    pub ess_threshold_fraction: f64,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n_particles: 500,
            sigma_process_pos: 0.1,
            sigma_process_vel: 0.05,
            sigma_meas: 0.12,
            dt: 0.05,
            ess_threshold_fraction: 0.5,
            seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::Config(format!("n_particles {} must be >= 2", self.n_particles)));
        }
        for (name, s) in [
            ("sigma_process_pos", self.sigma_process_pos),
            ("sigma_process_vel", self.sigma_process_vel),
            ("sigma_meas", self.sigma_meas),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("{name} {s} must be >= 0")));
            }
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("filter dt {} must be > 0", self.dt)));
        }
        if !(self.ess_threshold_fraction > 0.0 && self.ess_threshold_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "ess threshold fraction {} must lie in (0, 1]",
                self.ess_threshold_fraction
            )));
        }
        Ok(())
    }
}

/// Initial position distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    /// Uniform over the disc of this radius around the world origin.
    UniformDisc { radius: f64 },
    Gaussian { mean: [f64; 2], sigma: f64 },
}

fn normal(sigma: f64, rng: &mut impl Rng) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
    }
}

/// Draws `n_particles` from the prior with Gaussian velocities and uniform
/// weights.
pub fn initialize(cfg: &FilterConfig, prior: Prior, rng: &mut impl Rng) -> ParticleSet {
    let n = cfg.n_particles;
    let particles = (0..n)
        .map(|_| {
            let (x, y) = match prior {
                Prior::UniformDisc { radius } => {
                    let r = radius * rng.random::<f64>().sqrt();
                    let phi = rng.random_range(-PI..PI);
                    (r * phi.cos(), r * phi.sin())
                }
                Prior::Gaussian { mean, sigma } => {
                    (mean[0] + normal(sigma, rng), mean[1] + normal(sigma, rng))
                }
            };
            ParticleState {
                x,
                y,
                vx: normal(cfg.sigma_process_vel, rng),
                vy: normal(cfg.sigma_process_vel, rng),
            }
        })
        .collect();
    ParticleSet {
        particles,
        weights: vec![1.0 / n as f64; n],
    }
}

/// Constant-velocity motion with additive Gaussian process noise.
pub fn predict(p: &mut ParticleSet, dt: f64, sigma_pos: f64, sigma_vel: f64, rng: &mut impl Rng) {
    for s in &mut p.particles {
        s.x += s.vx * dt + normal(sigma_pos, rng);
        s.y += s.vy * dt + normal(sigma_pos, rng);
        s.vx += normal(sigma_vel, rng);
        s.vy += normal(sigma_vel, rng);
    }
}

/// Reweights by an isotropic Gaussian likelihood around `measurement`.
pub fn correct(p: &mut ParticleSet, measurement: [f64; 2], sigma_meas: f64) -> Result<()> {
    if !(sigma_meas > 0.0) {
        return Err(Error::DegenerateLikelihood(sigma_meas));
    }
    if !measurement.iter().all(|m| m.is_finite()) {
        return Err(Error::InvalidParameter(format!("measurement {measurement:?} is not finite")));
    }
    let k = 1.0 / (2.0 * sigma_meas * sigma_meas);
    for (w, s) in p.weights.iter_mut().zip(&p.particles) {
        let d2 = (s.x - measurement[0]).powi(2) + (s.y - measurement[1]).powi(2);
        *w *= (-d2 * k).exp();
    }
    let total: f64 = p.weights.iter().sum();
    if total > 0.0 && total.is_finite() {
        for w in &mut p.weights {
            *w /= total;
        }
    } else {
        // Every likelihood underflowed: fall back to uniform weights.
        let u = 1.0 / p.len() as f64;
        p.weights.fill(u);
    }
    Ok(())
}

/// Number of copies of each particle picked by systematic resampling with
/// the given start offset `u0 ∈ [0, 1/N)`.
pub fn systematic_counts(weights: &[f64], u0: f64) -> Vec<usize> {
    let n = weights.len();
    let step = 1.0 / n as f64;
    let mut counts = vec![0; n];
    let mut i = 0;
    let mut cumulative = weights[0];
    for k in 0..n {
        let u = u0 + k as f64 * step;
        while u > cumulative && i + 1 < n {
            i += 1;
            cumulative += weights[i];
        }
        counts[i] += 1;
    }
    counts
}

/// Systematic resampling; weights come back uniform.
pub fn resample(p: &mut ParticleSet, rng: &mut impl Rng) {
    let n = p.len();
    let u0 = rng.random::<f64>() / n as f64;
    let counts = systematic_counts(&p.weights, u0);
    let mut next = Vec::with_capacity(n);
    for (s, &c) in p.particles.iter().zip(&counts) {
        next.extend(std::iter::repeat_n(*s, c));
    }
    p.particles = next;
    p.weights.fill(1.0 / n as f64);
}

/// Weighted mean position.
pub fn estimate(p: &ParticleSet) -> [f64; 2] {
    p.particles
        .iter()
        .zip(&p.weights)
        .fold([0.0, 0.0], |acc, (s, w)| [acc[0] + w * s.x, acc[1] + w * s.y])
}

/// Weighted mean velocity.
pub fn estimate_velocity(p: &ParticleSet) -> [f64; 2] {
    p.particles
        .iter()
        .zip(&p.weights)
        .fold([0.0, 0.0], |acc, (s, w)| [acc[0] + w * s.vx, acc[1] + w * s.vy])
}

/// Result of one tracking tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub estimate: [f64; 2],
    /// Network output used as the measurement; `None` on coasting ticks.
    pub measurement: Option<[f64; 2]>,
    pub resampled: bool,
}

/// A filter instance with its own random stream.
#[derive(Debug, Clone)]
pub struct ParticleFilter {
    pub cfg: FilterConfig,
    particles: Option<ParticleSet>,
    rng: ChaCha8Rng,
}

impl ParticleFilter {
    pub fn new(cfg: FilterConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            particles: None,
        })
    }

    pub fn initialize(&mut self, prior: Prior) {
        self.particles = Some(initialize(&self.cfg, prior, &mut self.rng));
    }

    pub fn particles(&self) -> Option<&ParticleSet> {
        self.particles.as_ref()
    }

    pub fn estimate(&self) -> Result<[f64; 2]> {
        self.particles.as_ref().map(estimate).ok_or(Error::NotInitialized)
    }

    /// One tick given an already computed measurement (`None` = no valid
    /// input this tick).
    pub fn step_measurement(&mut self, measurement: Option<[f64; 2]>, dt: f64) -> Result<StepOutcome> {
        let p = self.particles.as_mut().ok_or(Error::NotInitialized)?;
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt {dt} must be > 0")));
        }
        predict(p, dt, self.cfg.sigma_process_pos, self.cfg.sigma_process_vel, &mut self.rng);
        let mut resampled = false;
        if let Some(m) = measurement {
            correct(p, m, self.cfg.sigma_meas)?;
            if p.ess() < self.cfg.ess_threshold_fraction * p.len() as f64 {
                resample(p, &mut self.rng);
                resampled = true;
            }
        }
        Ok(StepOutcome {
            estimate: estimate(p),
            measurement,
            resampled,
        })
    }

    /// One tick of the gated estimate-and-track loop on a raw input vector.
    pub fn step(&mut self, input: Option<&[f64; INPUT_DIM]>, net: &MlpModel, dt: f64) -> Result<StepOutcome> {
        if self.particles.is_none() {
            return Err(Error::NotInitialized);
        }
        let measurement = match input {
            Some(z) if has_human_return(z) => {
                let out = net.forward(&normalize(z), Mode::Eval)?;
                if out.len() != 2 {
                    return Err(Error::Shape {
                        layer: net.layers.len(),
                        message: format!("network emits {} outputs, expected 2", out.len()),
                    });
                }
                Some([out[0], out[1]])
            }
            _ => None,
        };
        self.step_measurement(measurement, dt)
    }
}
