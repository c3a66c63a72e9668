//! Workspace simulation: one walking human, one randomly moving arm, and the
//! labelled returns of the 48 lidar units at each tick.
//!
//! Association of returns with bodies is done analytically: every cone ray is
//! intersected with the human cylinder and with one capsule per robot link, and
//! the nearest surface wins. Only human-labelled returns survive
//! [`associate`].

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{Capsule, VerticalCylinder};
use crate::kinematics::{
    forward_kinematics, sensing_axis, JointConfig, RingSpec, RobotModel, Transform, JOINT_COUNT,
    MAX_RANGE, UNITS_PER_RING,
};

/// Planar human state. The vertical coordinate is always zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanState {
    pub x_h: f64,
    pub y_h: f64,
    pub heading: f64,
    pub speed: f64,
}

impl HumanState {
    pub fn position(&self) -> [f64; 2] {
        [self.x_h, self.y_h]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanGeometry {
    pub body_radius: f64,
    pub body_height: f64,
}

impl Default for HumanGeometry {
    fn default() -> Self {
        Self {
            body_radius: 0.25,
            body_height: 1.7,
        }
    }
}

impl HumanGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.body_radius > 0.0 && self.body_height > 0.0) {
            return Err(Error::Config(format!(
                "human body radius {} and height {} must be positive",
                self.body_radius, self.body_height
            )));
        }
        Ok(())
    }

    pub fn cylinder(&self, human: &HumanState) -> VerticalCylinder {
        VerticalCylinder {
            cx: human.x_h,
            cy: human.y_h,
            radius: self.body_radius,
            z_min: 0.0,
            z_max: self.body_height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Human,
    Robot,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub label: Label,
}

/// One unit's reading. `range` is `None` for no return within reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarObservation {
    /// 1-based ring index.
    pub ring: usize,
    /// 1-based unit index within the ring.
    pub unit: usize,
    pub range: Option<f64>,
    pub hit_point_world: Option<Vector3<f64>>,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldState {
    pub time: f64,
    pub q: JointConfig,
    pub q_target: JointConfig,
    pub human: HumanState,
}

/// Numeric knobs of the simulated experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    /// Outer radius of the walkable disc around the world origin.
    pub workspace_radius: f64,
    /// Keep-out radius around the robot base the human never enters.
    pub human_min_radius: f64,
    pub human_speed: f64,
    /// Probability per tick of a random heading change.
    pub p_turn: f64,
    pub max_turn: f64,
    /// Joint rate limit in rad/s.
    pub max_joint_speed: f64,
    /// All joints within this distance of the target count as arrived.
    pub reach_eps: f64,
    /// Rays used to approximate one unit's cone.
    pub rays_per_unit: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.05,
            workspace_radius: 2.5,
            human_min_radius: 0.5,
            human_speed: 0.5,
            p_turn: 0.05,
            max_turn: PI / 2.0,
            max_joint_speed: 0.6,
            reach_eps: 0.01,
            rays_per_unit: 5,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0) {
            return err(format!("sim dt {} must be > 0", self.dt));
        }
        if !(self.workspace_radius > 0.0) {
            return err(format!("workspace radius {} must be > 0", self.workspace_radius));
        }
        if !(self.human_min_radius >= 0.0 && self.human_min_radius < self.workspace_radius) {
            return err(format!(
                "human keep-out radius {} must lie in [0, workspace radius)",
                self.human_min_radius
            ));
        }
        if !(self.human_speed >= 0.0) {
            return err(format!("human speed {} must be >= 0", self.human_speed));
        }
        if !(0.0..=1.0).contains(&self.p_turn) {
            return err(format!("p_turn {} must be a probability", self.p_turn));
        }
        if !(self.max_turn >= 0.0) {
            return err(format!("max turn {} must be >= 0", self.max_turn));
        }
        if !(self.max_joint_speed > 0.0) {
            return err(format!("max joint speed {} must be > 0", self.max_joint_speed));
        }
        if !(self.reach_eps > 0.0) {
            return err(format!("reach eps {} must be > 0", self.reach_eps));
        }
        if self.rays_per_unit == 0 {
            return err("rays per unit must be >= 1".into());
        }
        Ok(())
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Advances the walker by one tick of a random-turn walk, reflecting off the
/// workspace rim and the keep-out disc around the robot base.
pub fn step_human(h: &HumanState, params: &SimParams, dt: f64, rng: &mut impl Rng) -> HumanState {
    let mut next = *h;
    let (s, c) = h.heading.sin_cos();
    next.x_h += h.speed * dt * c;
    next.y_h += h.speed * dt * s;

    let r = next.x_h.hypot(next.y_h);
    let outer = params.workspace_radius;
    let inner = params.human_min_radius;
    if r > outer || (r < inner && r > 0.0) {
        let (nx, ny) = (next.x_h / r, next.y_h / r);
        let (bound, outward) = if r > outer { (outer, 1.0) } else { (inner, -1.0) };
        // Mirror the overshoot back inside and reflect the heading off the
        // boundary normal when moving into it.
        let mirrored = (2.0 * bound - r).clamp(inner, outer);
        next.x_h = nx * mirrored;
        next.y_h = ny * mirrored;
        let (dx, dy) = (c, s);
        let dn = (dx * nx + dy * ny) * outward;
        if dn > 0.0 {
            let k = 2.0 * (dx * nx + dy * ny);
            next.heading = (dy - k * ny).atan2(dx - k * nx);
        }
    }

    if rng.random::<f64>() < params.p_turn {
        next.heading += rng.random_range(-params.max_turn..=params.max_turn);
    }
    next.heading = wrap_angle(next.heading);
    next
}

/// Uniform joint target within limits.
pub fn draw_joint_target(model: &RobotModel, rng: &mut impl Rng) -> JointConfig {
    let mut q = JointConfig::zero();
    for (a, lim) in q.angles.iter_mut().zip(&model.joint_limits) {
        *a = if lim.low < lim.high {
            rng.random_range(lim.low..=lim.high)
        } else {
            lim.low
        };
    }
    q
}

/// Rate-limited joint controller. Returns the new `(q, q_target)`.
///
/// When every joint is within `reach_eps` of its target a fresh target is
/// drawn and the arm holds still for that tick.
pub fn step_robot(
    w: &WorldState,
    model: &RobotModel,
    params: &SimParams,
    dt: f64,
    rng: &mut impl Rng,
) -> (JointConfig, JointConfig) {
    let arrived = w
        .q
        .angles
        .iter()
        .zip(&w.q_target.angles)
        .all(|(q, t)| (t - q).abs() <= params.reach_eps);
    if arrived {
        return (w.q, draw_joint_target(model, rng));
    }
    let max_step = params.max_joint_speed * dt;
    let mut q = w.q;
    for (i, a) in q.angles.iter_mut().enumerate() {
        let diff = w.q_target.angles[i] - *a;
        *a += diff.clamp(-max_step, max_step);
        *a = model.joint_limits[i].clamp(*a);
    }
    (q, w.q_target)
}

/// Link capsules of the arm at one joint configuration. Link `i` spans from
/// the origin of frame `i - 1` (the base for link 1) to the origin of frame `i`.
#[derive(Debug, Clone)]
pub struct RobotBody {
    pub capsules: [Capsule; JOINT_COUNT],
    pub links: [Transform; JOINT_COUNT],
}

impl RobotBody {
    pub fn new(model: &RobotModel, q: &JointConfig) -> Result<Self> {
        let links = forward_kinematics(model, q)?;
        let mut prev = model.base_in_world.translation;
        let capsules = std::array::from_fn(|i| {
            let next = links[i].translation;
            let c = Capsule::new(prev, next, model.link_radii[i]);
            prev = next;
            c
        });
        Ok(Self { capsules, links })
    }

    pub fn contains_strictly(&self, p: &Vector3<f64>, tol: f64) -> bool {
        self.capsules.iter().any(|c| c.contains_strictly(p, tol))
    }
}

/// Static scene of one tick: the human cylinder and the robot capsules.
#[derive(Debug, Clone)]
pub struct Scene {
    pub human: Option<VerticalCylinder>,
    pub robot: RobotBody,
}

impl Scene {
    pub fn new(w: &WorldState, geom: &HumanGeometry, model: &RobotModel) -> Result<Self> {
        Ok(Self {
            human: Some(geom.cylinder(&w.human)),
            robot: RobotBody::new(model, &w.q)?,
        })
    }

    /// Nearest surface within [`MAX_RANGE`]; ties go to the robot.
    ///
    /// A human surface point lying inside robot material cannot be seen and
    /// is skipped.
    pub fn cast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<RayHit> {
        let robot = self
            .robot
            .capsules
            .iter()
            .filter_map(|c| c.ray(origin, dir))
            .fold(f64::INFINITY, f64::min);
        let human = self
            .human
            .and_then(|h| h.ray(origin, dir))
            .filter(|&t| !self.robot.contains_strictly(&(origin + t * dir), 0.0))
            .unwrap_or(f64::INFINITY);

        let hit = if human < robot {
            RayHit {
                distance: human,
                label: Label::Human,
            }
        } else {
            RayHit {
                distance: robot,
                label: Label::Robot,
            }
        };
        (hit.distance <= MAX_RANGE).then_some(hit)
    }
}

fn check_unit(dir: &Vector3<f64>) -> Result<()> {
    let n = dir.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDirection(n));
    }
    Ok(())
}

/// Casts one ray into the world. `None` means nothing within 2 m.
pub fn cast_ray(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    w: &WorldState,
    geom: &HumanGeometry,
    model: &RobotModel,
) -> Result<Option<RayHit>> {
    check_unit(dir)?;
    Ok(Scene::new(w, geom, model)?.cast(origin, dir))
}

/// Directions approximating a unit's field of view, in the unit's own frame:
/// the central axis followed by `rays - 1` directions evenly spaced on the
/// rim of the half-angle cone.
pub fn cone_directions(rays: usize, half_angle: f64) -> Vec<Vector3<f64>> {
    let mut dirs = vec![sensing_axis()];
    let rim = rays.saturating_sub(1);
    let (sh, ch) = half_angle.sin_cos();
    for k in 0..rim {
        let psi = 2.0 * PI * k as f64 / rim as f64;
        let (sp, cp) = psi.sin_cos();
        dirs.push(Vector3::new(ch, sh * cp, sh * sp));
    }
    dirs
}

/// Reads one unit given its world pose.
pub fn sense_unit(scene: &Scene, pose: &Transform, cone: &[Vector3<f64>]) -> (Option<RayHit>, Vector3<f64>) {
    let mut best: Option<(RayHit, Vector3<f64>)> = None;
    for local in cone {
        let dir = pose.transform_vector(local);
        if let Some(hit) = scene.cast(&pose.translation, &dir) {
            let better = match &best {
                None => true,
                Some((b, _)) => {
                    hit.distance < b.distance
                        || (hit.distance == b.distance && hit.label == Label::Robot)
                }
            };
            if better {
                best = Some((hit, dir));
            }
        }
    }
    match best {
        Some((hit, dir)) => (Some(hit), pose.translation + hit.distance * dir),
        None => (None, pose.translation),
    }
}

/// Readings of every unit on every ring, ring-major then unit-minor.
pub fn sense_scene(
    scene: &Scene,
    rings: &[RingSpec],
    rays_per_unit: usize,
) -> Result<Vec<LidarObservation>> {
    let mut out = Vec::with_capacity(rings.len() * UNITS_PER_RING);
    for (ri, ring) in rings.iter().enumerate() {
        let cone = cone_directions(rays_per_unit, ring.fov_half_angle);
        let link = scene.robot.links[ring.link_index - 1];
        for unit in 1..=ring.unit_count {
            let pose = link * ring.unit_in_ring(unit)?;
            let (hit, point) = sense_unit(scene, &pose, &cone);
            out.push(match hit {
                Some(h) => LidarObservation {
                    ring: ri + 1,
                    unit,
                    range: Some(h.distance),
                    hit_point_world: Some(point),
                    label: h.label,
                },
                None => LidarObservation {
                    ring: ri + 1,
                    unit,
                    range: None,
                    hit_point_world: None,
                    label: Label::None,
                },
            });
        }
    }
    Ok(out)
}

/// All 48 labelled readings for a world state.
pub fn sense(
    w: &WorldState,
    rings: &[RingSpec],
    geom: &HumanGeometry,
    model: &RobotModel,
    rays_per_unit: usize,
) -> Result<Vec<LidarObservation>> {
    sense_scene(&Scene::new(w, geom, model)?, rings, rays_per_unit)
}

/// Keeps only returns attributed to the human.
pub fn associate(obs: &[LidarObservation]) -> Vec<LidarObservation> {
    obs.iter().filter(|o| o.label == Label::Human).copied().collect()
}

/// A running episode: owns the world state and its random stream.
#[derive(Debug, Clone)]
pub struct Simulator<R> {
    pub model: RobotModel,
    pub rings: Vec<RingSpec>,
    pub geom: HumanGeometry,
    pub params: SimParams,
    pub state: WorldState,
    rng: R,
}

impl<R: Rng> Simulator<R> {
    /// Starts an episode at `t0` with a random arm pose and target and a
    /// human placed uniformly in the walkable annulus.
    pub fn new(
        model: RobotModel,
        rings: Vec<RingSpec>,
        geom: HumanGeometry,
        params: SimParams,
        t0: f64,
        mut rng: R,
    ) -> Result<Self> {
        model.validate()?;
        geom.validate()?;
        params.validate()?;
        let q = draw_joint_target(&model, &mut rng);
        let q_target = draw_joint_target(&model, &mut rng);
        let (r0, r1) = (params.human_min_radius, params.workspace_radius);
        let r = (rng.random_range(r0 * r0..=r1 * r1)).sqrt();
        let phi = rng.random_range(-PI..PI);
        let human = HumanState {
            x_h: r * phi.cos(),
            y_h: r * phi.sin(),
            heading: rng.random_range(-PI..PI),
            speed: params.human_speed,
        };
        Ok(Self {
            model,
            rings,
            geom,
            params,
            state: WorldState {
                time: t0,
                q,
                q_target,
                human,
            },
            rng,
        })
    }

    pub fn observe(&self) -> Result<Vec<LidarObservation>> {
        sense(&self.state, &self.rings, &self.geom, &self.model, self.params.rays_per_unit)
    }

    pub fn advance(&mut self) {
        let dt = self.params.dt;
        self.state.human = step_human(&self.state.human, &self.params, dt, &mut self.rng);
        let (q, q_target) = step_robot(&self.state, &self.model, &self.params, dt, &mut self.rng);
        self.state.q = q;
        self.state.q_target = q_target;
        self.state.time += dt;
    }
}
