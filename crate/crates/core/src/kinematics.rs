//! Forward kinematics of a 6-DOF arm and the world poses of its lidar rings.
//!
//! Every lidar return is lifted into the world frame through the chain
//!
//! ```text
//! world <- robot base <- link i <- ring i <- lidar j <- observation
//! ```
//!
//! Link frames follow the standard Denavit–Hartenberg convention. A ring frame
//! coincides with its link frame; each unit sits on the ring circle and looks
//! radially outward, perpendicular to the link's local x axis.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Number of joints (and links) of the arm.
pub const JOINT_COUNT: usize = 6;
/// Number of lidar units on one ring.
pub const UNITS_PER_RING: usize = 16;
/// Number of rings mounted on the arm.
pub const RING_COUNT: usize = 3;
/// Total number of single-unit lidars.
pub const LIDAR_COUNT: usize = UNITS_PER_RING * RING_COUNT;
/// Maximum distance a unit can report, in meters.
pub const MAX_RANGE: f64 = 2.0;
/// Half of the 25 degree field of view of a unit.
pub const FOV_HALF_ANGLE: f64 = 12.5 * PI / 180.0;

/// The direction a unit looks along, in its own frame.
pub fn sensing_axis() -> Vector3<f64> {
    Vector3::x()
}

/// Rigid 3-D pose: `p_parent = rotation * p_child + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Matrix3::identity(), Vector3::new(x, y, z))
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::new(*Rotation3::from_axis_angle(&Vector3::x_axis(), angle).matrix(), Vector3::zeros())
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::new(*Rotation3::from_axis_angle(&Vector3::y_axis(), angle).matrix(), Vector3::zeros())
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::new(*Rotation3::from_axis_angle(&Vector3::z_axis(), angle).matrix(), Vector3::zeros())
    }

    /// Standard DH link transform `Rz(theta) * Tz(d) * Tx(a) * Rx(alpha)`.
    pub fn dh(a: f64, alpha: f64, d: f64, theta: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sa, ca) = alpha.sin_cos();
        #[rustfmt::skip]
        let rotation = Matrix3::new(
            ct, -st * ca,  st * sa,
            st,  ct * ca, -ct * sa,
            0.0,      sa,       ca,
        );
        Self::new(rotation, Vector3::new(a * ct, a * st, d))
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.transpose();
        Transform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Checks `RᵀR = I` and `det R = +1` within `tol`.
    pub fn is_rigid(&self, tol: f64) -> bool {
        let orth = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        orth <= tol && (self.rotation.determinant() - 1.0).abs() <= tol
    }
}

impl Mul for Transform {
    type Output = Transform;

    fn mul(self, rhs: Transform) -> Transform {
        self.compose(&rhs)
    }
}

impl Mul<&Transform> for &Transform {
    type Output = Transform;

    fn mul(self, rhs: &Transform) -> Transform {
        self.compose(rhs)
    }
}

/// One row of a standard DH table. `theta_offset` is added to the joint angle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    #[serde(default)]
    pub theta_offset: f64,
}

impl DhRow {
    pub const fn new(a: f64, alpha: f64, d: f64, theta_offset: f64) -> Self {
        Self {
            a,
            alpha,
            d,
            theta_offset,
        }
    }

    pub fn transform(&self, q: f64) -> Transform {
        Transform::dh(self.a, self.alpha, self.d, q + self.theta_offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimit {
    pub low: f64,
    pub high: f64,
}

impl JointLimit {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.low && q <= self.high
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.low, self.high)
    }
}

/// Kinematic description of the arm plus the capsule radius of each link,
/// used for self-occlusion tests.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub dh_rows: [DhRow; JOINT_COUNT],
    pub joint_limits: [JointLimit; JOINT_COUNT],
    pub base_in_world: Transform,
    pub link_radii: [f64; JOINT_COUNT],
}

impl RobotModel {
    pub fn new(
        dh_rows: [DhRow; JOINT_COUNT],
        joint_limits: [JointLimit; JOINT_COUNT],
        base_in_world: Transform,
        link_radii: [f64; JOINT_COUNT],
    ) -> Result<Self> {
        let model = Self {
            dh_rows,
            joint_limits,
            base_in_world,
            link_radii,
        };
        model.validate()?;
        Ok(model)
    }

    /// A UR10-like arm standing at the world origin.
    pub fn ur10() -> Self {
        Self {
            dh_rows: [
                DhRow::new(0.0, PI / 2.0, 0.1273, 0.0),
                DhRow::new(-0.612, 0.0, 0.0, 0.0),
                DhRow::new(-0.5723, 0.0, 0.0, 0.0),
                DhRow::new(0.0, PI / 2.0, 0.163941, 0.0),
                DhRow::new(0.0, -PI / 2.0, 0.1157, 0.0),
                DhRow::new(0.0, 0.0, 0.0922, 0.0),
            ],
            joint_limits: [
                JointLimit::new(-PI, PI),
                JointLimit::new(-PI, 0.0),
                JointLimit::new(-2.5, 2.5),
                JointLimit::new(-PI, PI),
                JointLimit::new(-PI, PI),
                JointLimit::new(-PI, PI),
            ],
            base_in_world: Transform::identity(),
            link_radii: [0.08, 0.065, 0.055, 0.045, 0.045, 0.04],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, lim) in self.joint_limits.iter().enumerate() {
            if !(lim.low.is_finite() && lim.high.is_finite() && lim.low <= lim.high) {
                return Err(Error::Config(format!(
                    "joint {} limits [{}, {}] are not an ordered finite pair",
                    i + 1,
                    lim.low,
                    lim.high
                )));
            }
        }
        for (i, r) in self.link_radii.iter().enumerate() {
            if !(r.is_finite() && *r >= 0.0) {
                return Err(Error::Config(format!("link {} radius {r} must be >= 0", i + 1)));
            }
        }
        if !self.base_in_world.is_rigid(1e-9) {
            return Err(Error::Config("base_in_world rotation is not a rotation".into()));
        }
        let t = self.base_in_world.translation;
        if t.x != 0.0 || t.y != 0.0 {
            return Err(Error::Config(format!(
                "robot base must sit on the world origin, got x={} y={}",
                t.x, t.y
            )));
        }
        Ok(())
    }

    /// Sum of link lengths; an upper bound on how far any link origin can be
    /// from the base.
    pub fn reach(&self) -> f64 {
        self.dh_rows.iter().map(|r| r.a.abs() + r.d.abs()).sum()
    }

    pub fn check_limits(&self, q: &JointConfig) -> Result<()> {
        for (i, (&angle, lim)) in q.angles.iter().zip(&self.joint_limits).enumerate() {
            if !lim.contains(angle) {
                return Err(Error::JointLimit {
                    joint: i + 1,
                    value: angle,
                    low: lim.low,
                    high: lim.high,
                });
            }
        }
        Ok(())
    }
}

/// Six joint angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointConfig {
    pub angles: [f64; JOINT_COUNT],
}

impl JointConfig {
    pub const fn new(angles: [f64; JOINT_COUNT]) -> Self {
        Self { angles }
    }

    pub const fn zero() -> Self {
        Self {
            angles: [0.0; JOINT_COUNT],
        }
    }
}

/// A circular array of 16 single-unit lidars around one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSpec {
    /// 1-based link index the ring is mounted on.
    pub link_index: usize,
    pub radius: f64,
    pub unit_count: usize,
    pub fov_half_angle: f64,
    pub max_range: f64,
}

impl RingSpec {
    pub fn new(link_index: usize, radius: f64) -> Result<Self> {
        if !(1..=JOINT_COUNT).contains(&link_index) {
            return Err(Error::Config(format!(
                "ring link index {link_index} not in 1..={JOINT_COUNT}"
            )));
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::Config(format!("ring radius {radius} must be >= 0")));
        }
        Ok(Self {
            link_index,
            radius,
            unit_count: UNITS_PER_RING,
            fov_half_angle: FOV_HALF_ANGLE,
            max_range: MAX_RANGE,
        })
    }

    /// Azimuth of a 1-based unit around the link's x axis.
    pub fn azimuth(&self, unit_index: usize) -> f64 {
        2.0 * PI * (unit_index - 1) as f64 / self.unit_count as f64
    }

    /// Pose of a unit relative to the ring (= link) frame. Independent of the
    /// joint configuration.
    pub fn unit_in_ring(&self, unit_index: usize) -> Result<Transform> {
        if !(1..=self.unit_count).contains(&unit_index) {
            return Err(Error::UnitIndex(unit_index));
        }
        // Rz(pi/2) turns the sensing axis onto the ring's local y axis, which
        // Rx(azimuth) then sweeps around the link axis.
        Ok(Transform::rot_x(self.azimuth(unit_index))
            * Transform::rot_z(PI / 2.0)
            * Transform::from_translation(self.radius, 0.0, 0.0))
    }
}

/// World poses of the six link frames; entry `i` is link `i + 1`.
pub fn forward_kinematics(model: &RobotModel, q: &JointConfig) -> Result<[Transform; JOINT_COUNT]> {
    model.check_limits(q)?;
    let mut links = [Transform::identity(); JOINT_COUNT];
    let mut acc = model.base_in_world;
    for (i, (row, &angle)) in model.dh_rows.iter().zip(&q.angles).enumerate() {
        acc = acc * row.transform(angle);
        links[i] = acc;
    }
    Ok(links)
}

/// World pose of one lidar unit (1-based `unit_index`).
pub fn lidar_pose(
    model: &RobotModel,
    q: &JointConfig,
    ring: &RingSpec,
    unit_index: usize,
) -> Result<Transform> {
    let local = ring.unit_in_ring(unit_index)?;
    let links = forward_kinematics(model, q)?;
    Ok(links[ring.link_index - 1] * local)
}

/// World poses of all units of all rings, ring-major then unit-minor.
pub fn lidar_poses(model: &RobotModel, q: &JointConfig, rings: &[RingSpec]) -> Result<Vec<Transform>> {
    let links = forward_kinematics(model, q)?;
    let mut poses = Vec::with_capacity(rings.len() * UNITS_PER_RING);
    for ring in rings {
        let link = links[ring.link_index - 1];
        for unit in 1..=ring.unit_count {
            poses.push(link * ring.unit_in_ring(unit)?);
        }
    }
    Ok(poses)
}

/// Lifts a range reading along the unit's sensing axis into a world point.
pub fn observation_to_world(pose: &Transform, range: f64) -> Result<Vector3<f64>> {
    if !(range > 0.0 && range <= MAX_RANGE) {
        return Err(Error::InvalidRange(range));
    }
    Ok(pose.translation + range * pose.transform_vector(&sensing_axis()))
}
