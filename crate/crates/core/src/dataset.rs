//! Time-synchronised training samples and their CSV persistence.
//!
//! A sample's input vector holds 48 per-unit ranges (ring-major, unit-minor)
//! followed by the 6 joint angles. Any unit without a human return carries the
//! sentinel [`SENTINEL_RANGE`], the unit's maximum reach.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kinematics::{JointConfig, JOINT_COUNT, LIDAR_COUNT, MAX_RANGE, UNITS_PER_RING};
use crate::simworld::{Label, LidarObservation, WorldState};

/// Length of the network input vector.
pub const INPUT_DIM: usize = LIDAR_COUNT + JOINT_COUNT;
/// Length of the network target vector.
pub const OUTPUT_DIM: usize = 2;
/// Range recorded for units without a human return.
pub const SENTINEL_RANGE: f64 = MAX_RANGE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub z: [f64; INPUT_DIM],
    pub y: [f64; OUTPUT_DIM],
    pub t: f64,
}

impl TrainingSample {
    pub fn ranges(&self) -> &[f64] {
        &self.z[..LIDAR_COUNT]
    }

    pub fn angles(&self) -> &[f64] {
        &self.z[LIDAR_COUNT..]
    }

    /// At least one unit reported a human return.
    pub fn has_return(&self) -> bool {
        has_human_return(&self.z)
    }
}

/// The validity gate of the tracking loop: some range slot is below the
/// sentinel.
pub fn has_human_return(z: &[f64; INPUT_DIM]) -> bool {
    z[..LIDAR_COUNT].iter().any(|&r| r < SENTINEL_RANGE)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetMeta {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<TrainingSample>,
    pub meta: DatasetMeta,
}

/// Slot of a 1-based `(ring, unit)` pair in the input vector.
pub fn range_slot(ring: usize, unit: usize) -> usize {
    (ring - 1) * UNITS_PER_RING + (unit - 1)
}

/// Builds one sample from the readings of a single tick.
pub fn record(w: &WorldState, filtered_obs: &[LidarObservation], q: &JointConfig) -> TrainingSample {
    let mut z = [SENTINEL_RANGE; INPUT_DIM];
    for o in filtered_obs {
        if o.label != Label::Human {
            continue;
        }
        if let Some(r) = o.range {
            z[range_slot(o.ring, o.unit)] = r;
        }
    }
    z[LIDAR_COUNT..].copy_from_slice(&q.angles);
    TrainingSample {
        z,
        y: [w.human.x_h, w.human.y_h],
        t: w.time,
    }
}

/// Standard deviations of the Gaussian perturbations used for training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLevels {
    pub sigma_range: f64,
    pub sigma_angle: f64,
    pub sigma_gt: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        Self {
            sigma_range: 0.01,
            sigma_angle: 0.002,
            sigma_gt: 0.02,
        }
    }
}

impl NoiseLevels {
    pub const ZERO: NoiseLevels = NoiseLevels {
        sigma_range: 0.0,
        sigma_angle: 0.0,
        sigma_gt: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("sigma_range", self.sigma_range),
            ("sigma_angle", self.sigma_angle),
            ("sigma_gt", self.sigma_gt),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {s} must be >= 0")));
            }
        }
        Ok(())
    }
}

fn gaussian(sigma: f64, rng: &mut impl Rng) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("sigma validated").sample(rng)
}

/// Perturbs ranges, angles and targets with independent zero-mean Gaussian
/// noise. Sentinel slots are left alone so "no return" stays unambiguous.
pub fn add_noise(s: &TrainingSample, noise: &NoiseLevels, rng: &mut impl Rng) -> Result<TrainingSample> {
    noise.validate()?;
    let mut out = *s;
    for r in &mut out.z[..LIDAR_COUNT] {
        if *r == SENTINEL_RANGE {
            continue;
        }
        *r = (*r + gaussian(noise.sigma_range, rng)).clamp(0.0, MAX_RANGE);
    }
    for a in &mut out.z[LIDAR_COUNT..] {
        *a += gaussian(noise.sigma_angle, rng);
    }
    for y in &mut out.y {
        *y += gaussian(noise.sigma_gt, rng);
    }
    Ok(out)
}

impl Dataset {
    pub fn new(meta: DatasetMeta) -> Self {
        Self {
            samples: Vec::new(),
            meta,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks that timestamps strictly increase.
    pub fn is_time_ordered(&self) -> bool {
        self.samples.windows(2).all(|w| w[0].t < w[1].t)
    }

    /// Appends `copies` noisy replicas of every sample after the originals.
    pub fn augment(&self, copies: usize, noise: &NoiseLevels, rng: &mut impl Rng) -> Result<Dataset> {
        noise.validate()?;
        let mut samples = Vec::with_capacity(self.len() * (copies + 1));
        samples.extend_from_slice(&self.samples);
        for _ in 0..copies {
            for s in &self.samples {
                samples.push(add_noise(s, noise, rng)?);
            }
        }
        Ok(Dataset {
            samples,
            meta: self.meta.clone(),
        })
    }

    /// Seeded random partition into `(train, test)`; each part keeps the
    /// original sample order.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if self.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test fraction {test_fraction} must lie in (0, 1)"
            )));
        }
        let n = self.len();
        let n_test = (test_fraction * n as f64).round() as usize;
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut is_test = vec![false; n];
        for &i in &idx[..n_test] {
            is_test[i] = true;
        }
        let (test, train): (Vec<_>, Vec<_>) = self
            .samples
            .iter()
            .zip(&is_test)
            .partition(|(_, &t)| t);
        let collect = |v: Vec<(&TrainingSample, &bool)>| Dataset {
            samples: v.into_iter().map(|(s, _)| *s).collect(),
            meta: self.meta.clone(),
        };
        Ok((collect(train), collect(test)))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, path)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# seed={} config_hash={}", self.meta.seed, self.meta.config_hash).unwrap();
        out.push_str(&header().join(","));
        out.push('\n');
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        for s in &self.samples {
            let row = std::iter::once(s.t)
                .chain(s.z.iter().copied())
                .chain(s.y.iter().copied())
                .map(|v| v.to_string());
            w.write_record(row).expect("write to memory");
        }
        out.push_str(std::str::from_utf8(&w.into_inner().expect("flush to memory")).expect("ascii"));
        out
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Dataset> {
        let mut meta = DatasetMeta::default();
        let mut header_line = None;
        for (i, line) in text.lines().enumerate() {
            if let Some(comment) = line.strip_prefix('#') {
                for kv in comment.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("seed", v)) => {
                            meta.seed = v.parse().map_err(|_| {
                                Error::parse(path, i as u64 + 1, format!("bad seed '{v}'"))
                            })?
                        }
                        Some(("config_hash", v)) => meta.config_hash = v.to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            header_line = Some(i as u64 + 1);
            let expected = header();
            let got: Vec<&str> = line.split(',').collect();
            if got != expected {
                return Err(Error::parse(
                    path,
                    i as u64 + 1,
                    format!(
                        "header has {} columns ({} features), expected {} columns ({} features)",
                        got.len(),
                        got.len().saturating_sub(1 + OUTPUT_DIM),
                        expected.len(),
                        INPUT_DIM
                    ),
                ));
            }
            break;
        }
        if header_line.is_none() {
            return Err(Error::parse(path, 1, "missing header row"));
        }

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(text.as_bytes());
        let width = 1 + INPUT_DIM + OUTPUT_DIM;
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::parse(path, line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != width {
                return Err(Error::parse(
                    path,
                    line,
                    format!(
                        "row has {} columns ({} features), expected {} columns ({} features)",
                        record.len(),
                        record.len().saturating_sub(1 + OUTPUT_DIM),
                        width,
                        INPUT_DIM
                    ),
                ));
            }
            let mut vals = [0.0; 1 + INPUT_DIM + OUTPUT_DIM];
            for (j, (field, v)) in record.iter().zip(vals.iter_mut()).enumerate() {
                *v = field.trim().parse().map_err(|_| {
                    Error::parse(path, line, format!("column {} ('{field}') is not a number", j + 1))
                })?;
            }
            let mut z = [0.0; INPUT_DIM];
            z.copy_from_slice(&vals[1..1 + INPUT_DIM]);
            let sample = TrainingSample {
                t: vals[0],
                z,
                y: [vals[1 + INPUT_DIM], vals[2 + INPUT_DIM]],
            };
            if let Some(bad) = sample.ranges().iter().find(|r| !(0.0..=MAX_RANGE).contains(*r)) {
                return Err(Error::parse(path, line, format!("range {bad} outside [0, {MAX_RANGE}]")));
            }
            samples.push(sample);
        }
        Ok(Dataset { samples, meta })
    }
}

/// Column names of the dataset CSV.
pub fn header() -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for ring in 1..=LIDAR_COUNT / UNITS_PER_RING {
        for unit in 1..=UNITS_PER_RING {
            cols.push(format!("r_{ring}_{unit}"));
        }
    }
    for j in 1..=JOINT_COUNT {
        cols.push(format!("theta_{j}"));
    }
    cols.push("x_h".into());
    cols.push("y_h".into());
    cols
}

/// Point of a round body of radius `r` centered at `center` that lies
/// nearest the origin; the origin itself once the body covers it.
pub fn nearest_surface_point(center: [f64; 2], r: f64) -> [f64; 2] {
    let d = center[0].hypot(center[1]);
    if d <= r {
        return [0.0, 0.0];
    }
    let k = (d - r) / d;
    [center[0] * k, center[1] * k]
}

/// Scales ranges into `[0, 1]` and angles into `[-1, 1]`.
pub fn normalize(z: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
    let mut out = *z;
    for r in &mut out[..LIDAR_COUNT] {
        *r /= MAX_RANGE;
    }
    for a in &mut out[LIDAR_COUNT..] {
        *a = (*a / PI).clamp(-1.0, 1.0);
    }
    out
}

pub fn denormalize(z: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
    let mut out = *z;
    for r in &mut out[..LIDAR_COUNT] {
        *r *= MAX_RANGE;
    }
    for a in &mut out[LIDAR_COUNT..] {
        *a *= PI;
    }
    out
}
