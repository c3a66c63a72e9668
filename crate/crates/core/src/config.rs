//! One TOML file configures every stage. Keys are grouped by section and can
//! be written either as tables or as flat dotted keys (`tracker.n_particles =
//! 500`); [`RunConfig::apply_override`] sets any key from its dotted name.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{NoiseLevels, INPUT_DIM, OUTPUT_DIM};
use crate::error::{Error, Result};
use crate::kinematics::{DhRow, JointLimit, RingSpec, RobotModel, Transform, JOINT_COUNT, RING_COUNT};
use crate::neuralnet::{Activation, TrainConfig};
use crate::simworld::{HumanGeometry, SimParams};
use crate::tracker::FilterConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotSection {
    pub dh: Vec<DhRow>,
    /// `[low, high]` per joint, radians.
    pub joint_limits: Vec<[f64; 2]>,
    /// Capsule radius per link, meters.
    pub link_radii: Vec<f64>,
    pub base_height: f64,
    pub base_yaw: f64,
}

impl Default for RobotSection {
    fn default() -> Self {
        let ur = RobotModel::ur10();
        Self {
            dh: ur.dh_rows.to_vec(),
            joint_limits: ur.joint_limits.iter().map(|l| [l.low, l.high]).collect(),
            link_radii: ur.link_radii.to_vec(),
            base_height: 0.0,
            base_yaw: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingEntry {
    /// 1-based link index.
    pub link: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorsSection {
    pub rings: Vec<RingEntry>,
}

impl Default for SensorsSection {
    fn default() -> Self {
        Self {
            rings: vec![
                RingEntry { link: 2, radius: 0.1 },
                RingEntry { link: 3, radius: 0.1 },
                RingEntry { link: 4, radius: 0.1 },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanSection {
    pub body_radius: f64,
    pub body_height: f64,
}

impl Default for HumanSection {
    fn default() -> Self {
        let g = HumanGeometry::default();
        Self {
            body_radius: g.body_radius,
            body_height: g.body_height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub workspace_radius: f64,
    pub human_min_radius: f64,
    pub human_speed: f64,
    pub p_turn: f64,
    pub max_turn: f64,
    pub max_joint_speed: f64,
    pub reach_eps: f64,
    pub rays_per_unit: usize,
    /// Idle time inserted between consecutive episodes, seconds.
    pub episode_gap: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let p = SimParams::default();
        Self {
            dt: p.dt,
            workspace_radius: p.workspace_radius,
            human_min_radius: p.human_min_radius,
            human_speed: p.human_speed,
            p_turn: p.p_turn,
            max_turn: p.max_turn,
            max_joint_speed: p.max_joint_speed,
            reach_eps: p.reach_eps,
            rays_per_unit: p.rays_per_unit,
            episode_gap: 10.0,
        }
    }
}

/// What the network is trained to output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// The human's ground-plane center.
    #[default]
    Center,
    /// The point of the body outline nearest the robot base.
    NearestSurface,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub sigma_range: f64,
    pub sigma_angle: f64,
    pub sigma_gt: f64,
    pub test_fraction: f64,
    pub augment_copies: usize,
    pub split_seed: u64,
    pub target: TargetMode,
}

impl Default for DatasetSection {
    fn default() -> Self {
        let n = NoiseLevels::default();
        Self {
            sigma_range: n.sigma_range,
            sigma_angle: n.sigma_angle,
            sigma_gt: n.sigma_gt,
            test_fraction: 0.2,
            augment_copies: 1,
            split_seed: 0,
            target: TargetMode::Center,
        }
    }
}

impl DatasetSection {
    pub fn noise(&self) -> NoiseLevels {
        NoiseLevels {
            sigma_range: self.sigma_range,
            sigma_angle: self.sigma_angle,
            sigma_gt: self.sigma_gt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub hidden: Vec<usize>,
    /// One per layer including the output layer.
    pub activations: Vec<Activation>,
    pub dropout_rate: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64, 32],
            activations: vec![Activation::Relu, Activation::Tanh, Activation::Relu, Activation::Identity],
            dropout_rate: 0.2,
        }
    }
}

impl NetworkSection {
    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(INPUT_DIM)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(OUTPUT_DIM))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr0: f64,
    pub decay: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            lr0: t.lr0,
            decay: t.decay,
            momentum: t.momentum,
            epochs: t.epochs,
            batch_size: t.batch_size,
            seed: t.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerSection {
    pub n_particles: usize,
    pub sigma_process_pos: f64,
    pub sigma_process_vel: f64,
    pub sigma_meas: f64,
    pub ess_threshold_fraction: f64,
    pub seed: u64,
    /// A gap between consecutive samples longer than this restarts the filter.
    pub reset_gap: f64,
}

impl Default for TrackerSection {
    fn default() -> Self {
        let f = FilterConfig::default();
        Self {
            n_particles: f.n_particles,
            sigma_process_pos: f.sigma_process_pos,
            sigma_process_vel: f.sigma_process_vel,
            sigma_meas: f.sigma_meas,
            ess_threshold_fraction: f.ess_threshold_fraction,
            seed: f.seed,
            reset_gap: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub robot: RobotSection,
    pub sensors: SensorsSection,
    pub human: HumanSection,
    pub sim: SimSection,
    pub dataset: DatasetSection,
    pub network: NetworkSection,
    pub train: TrainSection,
    pub tracker: TrackerSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            robot: RobotSection::default(),
            sensors: SensorsSection::default(),
            human: HumanSection::default(),
            sim: SimSection::default(),
            dataset: DatasetSection::default(),
            network: NetworkSection::default(),
            train: TrainSection::default(),
            tracker: TrackerSection::default(),
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets one dotted key, e.g. `("tracker.n_particles", "800")`. The value
    /// is read as a TOML literal, falling back to a bare string.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let mut root = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let mut parts: Vec<&str> = key.split('.').collect();
        let leaf = parts.pop().filter(|l| !l.is_empty()).ok_or_else(|| Error::Config(format!("empty key '{key}'")))?;
        let mut table = &mut root;
        for part in parts {
            table = table
                .get_mut(part)
                .and_then(toml::Value::as_table_mut)
                .ok_or_else(|| Error::Config(format!("unknown config section '{part}' in '{key}'")))?;
        }
        if !table.contains_key(leaf) {
            return Err(Error::Config(format!("unknown config key '{key}'")));
        }
        table.insert(leaf.to_string(), parse_override_value(value));
        let updated: RunConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("{key}: {e}")))?;
        *self = updated;
        Ok(())
    }

    pub fn robot_model(&self) -> Result<RobotModel> {
        let r = &self.robot;
        if r.dh.len() != JOINT_COUNT || r.joint_limits.len() != JOINT_COUNT || r.link_radii.len() != JOINT_COUNT {
            return Err(Error::Config(format!(
                "robot needs exactly {JOINT_COUNT} dh rows, joint limits and link radii (got {}, {}, {})",
                r.dh.len(),
                r.joint_limits.len(),
                r.link_radii.len()
            )));
        }
        RobotModel::new(
            std::array::from_fn(|i| r.dh[i]),
            std::array::from_fn(|i| JointLimit::new(r.joint_limits[i][0], r.joint_limits[i][1])),
            Transform::from_translation(0.0, 0.0, r.base_height) * Transform::rot_z(r.base_yaw),
            std::array::from_fn(|i| r.link_radii[i]),
        )
    }

    pub fn ring_specs(&self) -> Result<Vec<RingSpec>> {
        let rings = &self.sensors.rings;
        if rings.len() != RING_COUNT {
            return Err(Error::Config(format!(
                "exactly {RING_COUNT} rings are required, got {}",
                rings.len()
            )));
        }
        rings.iter().map(|r| RingSpec::new(r.link, r.radius)).collect()
    }

    pub fn human_geometry(&self) -> HumanGeometry {
        HumanGeometry {
            body_radius: self.human.body_radius,
            body_height: self.human.body_height,
        }
    }

    pub fn sim_params(&self) -> SimParams {
        let s = &self.sim;
        SimParams {
            dt: s.dt,
            workspace_radius: s.workspace_radius,
            human_min_radius: s.human_min_radius,
            human_speed: s.human_speed,
            p_turn: s.p_turn,
            max_turn: s.max_turn,
            max_joint_speed: s.max_joint_speed,
            reach_eps: s.reach_eps,
            rays_per_unit: s.rays_per_unit,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            lr0: t.lr0,
            decay: t.decay,
            momentum: t.momentum,
            epochs: t.epochs,
            batch_size: t.batch_size,
            seed: t.seed,
        }
    }

    pub fn filter_config(&self) -> FilterConfig {
        let t = &self.tracker;
        FilterConfig {
            n_particles: t.n_particles,
            sigma_process_pos: t.sigma_process_pos,
            sigma_process_vel: t.sigma_process_vel,
            sigma_meas: t.sigma_meas,
            dt: self.sim.dt,
            ess_threshold_fraction: t.ess_threshold_fraction,
            seed: t.seed,
        }
    }

    /// Checks every section against its module's invariants.
    pub fn validate(&self) -> Result<()> {
        self.robot_model()?;
        self.ring_specs()?;
        self.human_geometry().validate()?;
        self.sim_params().validate()?;
        if !(self.sim.episode_gap >= 0.0) {
            return Err(Error::Config(format!("episode gap {} must be >= 0", self.sim.episode_gap)));
        }
        self.dataset.noise().validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.dataset.test_fraction > 0.0 && self.dataset.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test fraction {} must lie in (0, 1)",
                self.dataset.test_fraction
            )));
        }
        let n = &self.network;
        if n.activations.len() != n.hidden.len() + 1 {
            return Err(Error::Config(format!(
                "{} hidden layers need {} activations, got {}",
                n.hidden.len(),
                n.hidden.len() + 1,
                n.activations.len()
            )));
        }
        if n.activations.last() != Some(&Activation::Identity) {
            return Err(Error::Config("output activation must be identity".into()));
        }
        if n.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&n.dropout_rate) {
            return Err(Error::Config(format!("dropout rate {} must lie in [0, 1)", n.dropout_rate)));
        }
        self.train_config().validate()?;
        self.filter_config().validate()?;
        if !(self.tracker.reset_gap > 0.0) {
            return Err(Error::Config(format!("reset gap {} must be > 0", self.tracker.reset_gap)));
        }
        for (i, lim) in self.robot.joint_limits.iter().enumerate() {
            if lim[0] < -PI || lim[1] > PI {
                return Err(Error::Config(format!(
                    "joint {} limits [{}, {}] must lie within [-pi, pi] for input scaling",
                    i + 1,
                    lim[0],
                    lim[1]
                )));
            }
        }
        Ok(())
    }
}
