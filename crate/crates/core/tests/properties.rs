//! Property tests of the library against brute-force oracles.

use std::f64::consts::PI;

use nalgebra::Vector3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ringtrack::dataset::{denormalize, normalize, Dataset, DatasetMeta, TrainingSample, INPUT_DIM};
use ringtrack::geometry::{Capsule, VerticalCylinder};
use ringtrack::kinematics::{
    forward_kinematics, lidar_poses, JointConfig, RingSpec, RobotModel, JOINT_COUNT, LIDAR_COUNT,
};
use ringtrack::tracker::{correct, resample, systematic_counts, ParticleSet, ParticleState};

const STEP: f64 = 1e-3;

fn march(origin: &Vector3<f64>, dir: &Vector3<f64>, inside: impl Fn(&Vector3<f64>) -> bool) -> Option<f64> {
    let start = inside(origin);
    (1..=2000)
        .find(|&k| inside(&(origin + k as f64 * STEP * dir)) != start)
        .map(|k| (k as f64 - 0.5) * STEP)
}

fn point_segment(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + s * ab)).norm()
}

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vector3<f64>> {
    vec3(1.0)
        .prop_filter("non-degenerate", |v| v.norm() > 0.1)
        .prop_map(|v| v.normalize())
}

/// True when the marching oracle can resolve the crossing: the ray does not
/// merely graze the surface within one step.
fn resolvable(t: Option<f64>, analytic: Option<f64>) -> bool {
    match (t, analytic) {
        (Some(a), Some(b)) => (a - b).abs() < 2.0 * STEP || a > 1.9,
        _ => true,
    }
}

fn particles(weights: &[f64]) -> ParticleSet {
    let total: f64 = weights.iter().sum();
    ParticleSet {
        particles: (0..weights.len())
            .map(|i| ParticleState {
                x: i as f64,
                y: -(i as f64),
                vx: 0.0,
                vy: 0.0,
            })
            .collect(),
        weights: weights.iter().map(|w| w / total).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn capsule_ray_matches_marching(
        origin in vec3(1.0),
        dir in unit(),
        a in vec3(0.6),
        b in vec3(0.6),
        radius in 0.05f64..0.3,
    ) {
        let cap = Capsule::new(a, b, radius);
        let analytic = cap.ray(&origin, &dir).filter(|&t| t <= 2.0);
        let marched = march(&origin, &dir, |p| point_segment(p, &a, &b) <= radius);
        prop_assume!(resolvable(marched, analytic));
        match (analytic, marched) {
            (Some(t), Some(m)) => prop_assert!((t - m).abs() <= STEP, "{t} vs {m}"),
            (None, None) => {}
            (t, m) => {
                // A grazing ray may slip between two marching samples.
                let t = t.or(m).unwrap();
                let p = origin + t * dir;
                prop_assert!((point_segment(&p, &a, &b) - radius).abs() < 1e-6 + STEP);
            }
        }
    }

    #[test]
    fn cylinder_ray_matches_marching(
        origin in vec3(1.5),
        dir in unit(),
        cx in -0.8f64..0.8,
        cy in -0.8f64..0.8,
        radius in 0.1f64..0.4,
        height in 0.5f64..1.8,
    ) {
        let cyl = VerticalCylinder { cx, cy, radius, z_min: 0.0, z_max: height };
        let inside = |p: &Vector3<f64>| (p.x - cx).hypot(p.y - cy) <= radius && (0.0..=height).contains(&p.z);
        let analytic = cyl.ray(&origin, &dir).filter(|&t| t <= 2.0);
        let marched = march(&origin, &dir, inside);
        prop_assume!(resolvable(marched, analytic));
        if let (Some(t), Some(m)) = (analytic, marched) {
            prop_assert!((t - m).abs() <= STEP, "{t} vs {m}");
        } else if analytic.is_some() != marched.is_some() {
            let t = analytic.or(marched).unwrap();
            prop_assert!(cyl.surface_distance(&(origin + t * dir)) < 1e-6 + STEP);
        }
    }

    #[test]
    fn units_sit_on_their_ring(q in proptest::array::uniform6(-PI..PI), radius in 0.0f64..0.3) {
        let model = RobotModel::ur10();
        let rings: Vec<RingSpec> = (2..=4).map(|l| RingSpec::new(l, radius).unwrap()).collect();
        let angles = std::array::from_fn(|i| model.joint_limits[i].clamp(q[i]));
        let q = JointConfig { angles };
        let links = forward_kinematics(&model, &q).unwrap();
        let poses = lidar_poses(&model, &q, &rings).unwrap();
        prop_assert_eq!(poses.len(), 48);
        for (k, pose) in poses.iter().enumerate() {
            let link = &links[rings[k / 16].link_index - 1];
            let offset = pose.translation - link.translation;
            prop_assert!((offset.norm() - radius).abs() < 1e-9);
            // Units lie in the plane normal to the link's x axis.
            let axis = link.transform_vector(&Vector3::x());
            prop_assert!(offset.dot(&axis).abs() < 1e-9);
            prop_assert!(pose.is_rigid(1e-9));
        }
    }

    #[test]
    fn normalization_round_trips(
        ranges in proptest::collection::vec(0.0f64..=2.0, LIDAR_COUNT),
        angles in proptest::collection::vec(-PI..=PI, JOINT_COUNT),
    ) {
        let z: [f64; INPUT_DIM] = [ranges, angles].concat().try_into().unwrap();
        let back = denormalize(&normalize(&z));
        for (a, b) in z.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn split_partitions_in_order(n in 2usize..200, fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let ds = Dataset {
            samples: (0..n)
                .map(|i| TrainingSample { z: [2.0; INPUT_DIM], y: [0.0, 0.0], t: i as f64 })
                .collect(),
            meta: DatasetMeta::default(),
        };
        let (train, test) = ds.split(fraction, seed).unwrap();
        prop_assert_eq!(train.len() + test.len(), n);
        prop_assert_eq!(test.len(), (fraction * n as f64).round() as usize);
        prop_assert!(train.is_time_ordered() && test.is_time_ordered());
        let mut all: Vec<f64> = train.samples.iter().chain(&test.samples).map(|s| s.t).collect();
        all.sort_by(f64::total_cmp);
        prop_assert!(all.iter().enumerate().all(|(i, &t)| t == i as f64));
    }

    #[test]
    fn systematic_counts_stay_within_one(
        weights in proptest::collection::vec(0.0f64..1.0, 2..60),
        u in 0.0f64..1.0,
    ) {
        prop_assume!(weights.iter().sum::<f64>() > 1e-3);
        let p = particles(&weights);
        let n = p.len();
        let counts = systematic_counts(&p.weights, u / n as f64);
        prop_assert_eq!(counts.iter().sum::<usize>(), n);
        for (c, w) in counts.iter().zip(&p.weights) {
            prop_assert!((*c as f64 - w * n as f64).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn correct_and_resample_keep_unit_mass(
        weights in proptest::collection::vec(0.01f64..1.0, 2..60),
        m in (-50.0f64..50.0, -50.0f64..50.0),
        sigma in 0.01f64..2.0,
        seed in any::<u64>(),
    ) {
        let mut p = particles(&weights);
        correct(&mut p, [m.0, m.1], sigma).unwrap();
        prop_assert!((p.weight_sum() - 1.0).abs() < 1e-12);
        prop_assert!(p.weights.iter().all(|w| *w >= 0.0));
        let before = p.particles.clone();
        resample(&mut p, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!((p.weight_sum() - 1.0).abs() < 1e-12);
        prop_assert!(p.particles.iter().all(|s| before.contains(s)));
    }
}
