//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero when a criterion outside `KNOWN_UNMET` fails.
//!
//! Run alone with `cargo test -p ringtrack-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ringtrack::config::{RunConfig, TargetMode};
use ringtrack::dataset::{has_human_return, Dataset, SENTINEL_RANGE, INPUT_DIM};
use ringtrack::geometry::{Capsule, VerticalCylinder};
use ringtrack::kinematics::{forward_kinematics, Transform, JOINT_COUNT, MAX_RANGE};
use ringtrack::neuralnet::{Activation, Gradients, MlpModel, Mode};
use ringtrack::simworld::{
    associate, draw_joint_target, sense, HumanState, Label, RobotBody, Scene, WorldState,
};
use ringtrack::tracker::{
    correct, estimate_velocity, initialize, predict, resample, FilterConfig, ParticleFilter, Prior,
};
use ringtrack_cli as pipeline;

/// Criteria that cannot be met with the default configuration. They still
/// run and print their real outcome; the analysis lives in the README.
const KNOWN_UNMET: &[&str] = &["1b"];

struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, pass: bool, detail: String) {
        println!("criterion {id:<3} {} {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id.to_string(), pass, detail));
    }
}

// ---------------------------------------------------------------- 1 -------

struct PipelineRun {
    seed: u64,
    nn: f64,
    pf: f64,
    valid: f64,
    elapsed: Duration,
}

fn run_pipeline(seed: u64) -> PipelineRun {
    let start = Instant::now();
    let mut cfg = RunConfig::default();
    cfg.train.seed = seed;
    cfg.tracker.seed = seed;
    cfg.train.epochs = 100;
    cfg.tracker.n_particles = 500;
    let (ds, _) = pipeline::generate(&cfg, 10, 2000, seed).unwrap();
    let (net, _) = pipeline::train_model(&cfg, &ds, |_| {}).unwrap();
    let test = pipeline::test_partition(&cfg, &ds).unwrap();
    let traj = pipeline::track(&cfg, &net, &test.samples).unwrap();
    let report = pipeline::evaluate(&traj).unwrap();
    PipelineRun {
        seed,
        nn: report.nn_rmse.unwrap_or(f64::NAN),
        pf: report.pf_rmse,
        valid: report.valid_fraction,
        elapsed: start.elapsed(),
    }
}

fn criterion_1(rep: &mut Report) {
    let runs: Vec<PipelineRun> = [11, 12, 13].into_iter().map(run_pipeline).collect();
    for r in &runs {
        println!(
            "    seed {}: nn {:.4} m, pf {:.4} m, valid {:.3}, {:.1} s",
            r.seed,
            r.nn,
            r.pf,
            r.valid,
            r.elapsed.as_secs_f64()
        );
    }
    let a = runs.iter().all(|r| (0.03..=0.30).contains(&r.nn));
    rep.record(
        "1a",
        a,
        format!("nn test rmse in [0.03, 0.30] for all seeds: {:?}", runs.iter().map(|r| round4(r.nn)).collect::<Vec<_>>()),
    );
    let wins = runs.iter().filter(|r| r.pf <= r.nn).count();
    rep.record(
        "1b",
        wins >= 2,
        format!(
            "pf rmse <= nn rmse in {wins}/3 seeds (pf {:?})",
            runs.iter().map(|r| round4(r.pf)).collect::<Vec<_>>()
        ),
    );
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap();
    rep.record(
        "1c",
        slowest < Duration::from_secs(300),
        format!("slowest full pipeline {:.1} s (limit 300 s)", slowest.as_secs_f64()),
    );
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

// ---------------------------------------------------------------- 2 -------

fn finite_difference(m: &MlpModel, zs: &[Vec<f64>], ys: &[Vec<f64>], masks: Option<&[Vec<f64>]>) -> Gradients {
    let h = 1e-5;
    let mut g = Gradients::zeros_like(m);
    let mut probe = m.clone();
    for l in 0..m.layers.len() {
        for (i, slot) in g.weights[l].iter_mut().enumerate() {
            let orig = probe.layers[l].weights[i];
            probe.layers[l].weights[i] = orig + h;
            let up = probe.loss_masked(zs, ys, masks).unwrap();
            probe.layers[l].weights[i] = orig - h;
            let down = probe.loss_masked(zs, ys, masks).unwrap();
            probe.layers[l].weights[i] = orig;
            *slot = (up - down) / (2.0 * h);
        }
        for (i, slot) in g.biases[l].iter_mut().enumerate() {
            let orig = probe.layers[l].biases[i];
            probe.layers[l].biases[i] = orig + h;
            let up = probe.loss_masked(zs, ys, masks).unwrap();
            probe.layers[l].biases[i] = orig - h;
            let down = probe.loss_masked(zs, ys, masks).unwrap();
            probe.layers[l].biases[i] = orig;
            *slot = (up - down) / (2.0 * h);
        }
    }
    g
}

fn criterion_2(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let acts = [Activation::Relu, Activation::Tanh, Activation::Relu, Activation::Identity];
    let mut worst: f64 = 0.0;
    for batch in 0..20 {
        let dropout = if batch % 2 == 0 { 0.0 } else { 0.2 };
        let m = MlpModel::new(&[54, 8, 8, 8, 2], &acts, dropout, &mut rng).unwrap();
        let n = rng.random_range(1..=8);
        let zs: Vec<Vec<f64>> = (0..n).map(|_| (0..54).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let masks: Option<Vec<Vec<f64>>> = zs.iter().map(|_| m.sample_mask(&mut rng)).collect();
        let (_, analytic) = m.gradients_masked(&zs, &ys, masks.as_deref()).unwrap();
        let numeric = finite_difference(&m, &zs, &ys, masks.as_deref());
        let flat = |g: &Gradients| -> Vec<f64> { g.weights.iter().chain(&g.biases).flatten().copied().collect() };
        for (a, b) in flat(&analytic).into_iter().zip(flat(&numeric)) {
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1e-6));
        }
    }
    rep.record("2", worst < 1e-4, format!("max relative gradient error {worst:.2e} over 20 batches (limit 1e-4)"));
}

// ---------------------------------------------------------------- 3 -------

fn segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let s = if len2 == 0.0 { 0.0 } else { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) };
    (p - (a + s * ab)).norm()
}

fn in_capsule(p: &Vector3<f64>, c: &Capsule) -> bool {
    segment_distance(p, &c.a, &c.b) <= c.radius
}

fn in_cylinder(p: &Vector3<f64>, c: &VerticalCylinder) -> bool {
    (p.x - c.cx).hypot(p.y - c.cy) <= c.radius && p.z >= c.z_min && p.z <= c.z_max
}

/// First `t` in `(0, MAX_RANGE]` where membership differs from the start,
/// found by stepping 1e-5 m along the ray.
fn march(origin: &Vector3<f64>, dir: &Vector3<f64>, inside: impl Fn(&Vector3<f64>) -> bool) -> Option<f64> {
    let step = 1e-5;
    let start = inside(origin);
    let n = (MAX_RANGE / step).round() as usize + 1;
    (1..=n).find(|&k| inside(&(origin + (k as f64 * step) * dir)) != start).map(|k| (k as f64 - 0.5) * step)
}

fn far_body(real: Capsule) -> RobotBody {
    let far = Vector3::new(0.0, 0.0, -100.0);
    let mut capsules = [Capsule::new(far, far, 0.01); JOINT_COUNT];
    capsules[0] = real;
    RobotBody {
        capsules,
        links: [Transform::identity(); JOINT_COUNT],
    }
}

fn criterion_3(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut label_mismatch = 0;
    let mut hits = [0usize; 3];
    for case in 0..200 {
        let cyl = VerticalCylinder {
            cx: rng.random_range(-1.0..1.0),
            cy: rng.random_range(-1.0..1.0),
            radius: rng.random_range(0.1..0.4),
            z_min: 0.0,
            z_max: rng.random_range(1.0..1.9),
        };
        let a = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1.5));
        let b = a + Vector3::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
        let cap = Capsule::new(a, b, rng.random_range(0.03..0.15));
        let origin = Vector3::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(0.0..1.8));
        // Half the rays aim near the capsule, half near the cylinder.
        let aim = if case % 2 == 0 {
            a.lerp(&b, rng.random_range(0.0..1.0))
        } else {
            Vector3::new(cyl.cx, cyl.cy, rng.random_range(0.0..2.0))
        } + Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
        let dir = (aim - origin).normalize();

        let scene = Scene {
            human: Some(cyl),
            robot: far_body(cap),
        };
        let got = scene.cast(&origin, &dir);

        let t_robot = march(&origin, &dir, |p| in_capsule(p, &cap)).unwrap_or(f64::INFINITY);
        let t_human = march(&origin, &dir, |p| in_cylinder(p, &cyl))
            .filter(|&t| segment_distance(&(origin + t * dir), &cap.a, &cap.b) >= cap.radius + 1e-4)
            .unwrap_or(f64::INFINITY);
        let expected = if t_human < t_robot {
            Some((t_human, Label::Human))
        } else if t_robot.is_finite() {
            Some((t_robot, Label::Robot))
        } else {
            None
        };
        let expected = expected.filter(|(t, _)| *t <= MAX_RANGE);
        match (got, expected) {
            (None, None) => hits[2] += 1,
            (Some(g), Some((t, label))) => {
                worst = worst.max((g.distance - t).abs());
                if g.label != label {
                    label_mismatch += 1;
                }
                hits[if label == Label::Human { 0 } else { 1 }] += 1;
            }
            _ => {
                label_mismatch += 1;
                worst = f64::INFINITY;
            }
        }
    }
    rep.record(
        "3",
        worst < 1e-4 && label_mismatch == 0,
        format!(
            "200 rays ({} human, {} robot, {} none): max distance error {worst:.1e} m, {label_mismatch} label mismatches",
            hits[0], hits[1], hits[2]
        ),
    );
}

// ---------------------------------------------------------------- 4 -------

fn criterion_4(rep: &mut Report) {
    let cfg = RunConfig::default();
    let model = cfg.robot_model().unwrap();
    let rings = cfg.ring_specs().unwrap();
    let geom = cfg.human_geometry();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut retained, mut violations) = (0usize, 0usize);
    for _ in 0..1000 {
        let q = draw_joint_target(&model, &mut rng);
        // Let the person come right up to the base so embedded hits occur.
        let r = rng.random_range(0.0..2.5);
        let phi: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let w = WorldState {
            time: 0.0,
            q,
            q_target: q,
            human: HumanState {
                x_h: r * phi.cos(),
                y_h: r * phi.sin(),
                heading: 0.0,
                speed: 0.0,
            },
        };
        let obs = sense(&w, &rings, &geom, &model, cfg.sim.rays_per_unit).unwrap();
        let links = forward_kinematics(&model, &q).unwrap();
        let mut prev = model.base_in_world.translation;
        let segments: Vec<(Vector3<f64>, Vector3<f64>, f64)> = links
            .iter()
            .zip(&model.link_radii)
            .map(|(l, &rad)| {
                let s = (prev, l.translation, rad);
                prev = l.translation;
                s
            })
            .collect();
        for o in associate(&obs) {
            retained += 1;
            let p = o.hit_point_world.unwrap();
            if segments.iter().any(|(a, b, rad)| segment_distance(&p, a, b) < rad - 1e-9) {
                violations += 1;
            }
        }
    }
    rep.record(
        "4",
        violations == 0 && retained > 0,
        format!("{retained} retained human returns over 1000 world states, {violations} inside a capsule"),
    );
}

// ---------------------------------------------------------------- 5 -------

fn criterion_5(rep: &mut Report) {
    let cfg = FilterConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut p = initialize(&cfg, Prior::UniformDisc { radius: 2.5 }, &mut rng);
    let mut worst_sum: f64 = 0.0;
    let mut invalid_changed = 0usize;
    let mut invalid_steps = 0usize;
    for k in 0..10_000 {
        let phase = k as f64 * 0.01;
        let truth = [1.5 * phase.cos(), 1.5 * phase.sin()];
        predict(&mut p, cfg.dt, cfg.sigma_process_pos, cfg.sigma_process_vel, &mut rng);
        if k % 10 < 3 {
            invalid_steps += 1;
            continue;
        }
        let m = [truth[0] + rng.random_range(-0.1..0.1), truth[1] + rng.random_range(-0.1..0.1)];
        correct(&mut p, m, cfg.sigma_meas).unwrap();
        worst_sum = worst_sum.max((p.weight_sum() - 1.0).abs());
        if p.ess() < cfg.ess_threshold_fraction * p.len() as f64 {
            resample(&mut p, &mut rng);
            worst_sum = worst_sum.max((p.weight_sum() - 1.0).abs());
        }
    }

    // The gated step: an all-sentinel input must leave the weights alone.
    let net = MlpModel::zeros(&[INPUT_DIM, 2], &[Activation::Identity], 0.0).unwrap();
    let mut pf = ParticleFilter::new(cfg).unwrap();
    pf.initialize(Prior::Gaussian {
        mean: [1.0, 1.0],
        sigma: 0.3,
    });
    let blind = [SENTINEL_RANGE; INPUT_DIM];
    let mut seen = blind;
    seen[0] = 1.0;
    for k in 0..10_000 {
        if k % 4 == 0 {
            pf.step(Some(&seen), &net, cfg.dt).unwrap();
            worst_sum = worst_sum.max((pf.particles().unwrap().weight_sum() - 1.0).abs());
        } else {
            let before = pf.particles().unwrap().weights.clone();
            let input = if k % 4 == 1 { None } else { Some(&blind) };
            let out = pf.step(input, &net, cfg.dt).unwrap();
            invalid_steps += 1;
            if out.measurement.is_some() || pf.particles().unwrap().weights != before {
                invalid_changed += 1;
            }
        }
    }

    // Zero-noise predict against the closed-form constant-velocity map.
    let mut q = initialize(&cfg, Prior::UniformDisc { radius: 2.5 }, &mut rng);
    for s in &mut q.particles {
        s.vx = rng.random_range(-1.0..1.0);
        s.vy = rng.random_range(-1.0..1.0);
    }
    let before = q.clone();
    let dt = 0.037;
    predict(&mut q, dt, 0.0, 0.0, &mut rng);
    let cv_err = before
        .particles
        .iter()
        .zip(&q.particles)
        .map(|(a, b)| {
            (b.x - (a.x + a.vx * dt))
                .abs()
                .max((b.y - (a.y + a.vy * dt)).abs())
                .max((b.vx - a.vx).abs())
                .max((b.vy - a.vy).abs())
        })
        .fold(0.0, f64::max);

    rep.record(
        "5",
        worst_sum < 1e-9 && invalid_changed == 0 && cv_err <= 1e-12,
        format!(
            "max |sum w - 1| {worst_sum:.1e}; {invalid_changed}/{invalid_steps} invalid steps changed weights; \
             zero-noise predict error {cv_err:.1e}"
        ),
    );
}

// ---------------------------------------------------------------- 6 -------

fn criterion_6(rep: &mut Report) {
    let cfg = FilterConfig {
        seed: 6,
        ..FilterConfig::default()
    };
    let mut pf = ParticleFilter::new(cfg).unwrap();
    pf.initialize(Prior::Gaussian {
        mean: [1.0, -1.0],
        sigma: 0.2,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let v = [0.4, 0.3];
    let mut truth = [1.0, -1.0];
    for _ in 0..200 {
        truth = [truth[0] + v[0] * cfg.dt, truth[1] + v[1] * cfg.dt];
        let m = [truth[0] + 0.05 * rng.random_range(-1.0..1.0), truth[1] + 0.05 * rng.random_range(-1.0..1.0)];
        pf.step_measurement(Some(m), cfg.dt).unwrap();
    }
    let v_hat = estimate_velocity(pf.particles().unwrap());
    let mut prev = pf.estimate().unwrap();
    let tol = 3.0 * cfg.sigma_process_pos;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let est = pf.step_measurement(None, cfg.dt).unwrap().estimate;
        let dx = est[0] - prev[0] - v_hat[0] * cfg.dt;
        let dy = est[1] - prev[1] - v_hat[1] * cfg.dt;
        worst = worst.max(dx.hypot(dy));
        prev = est;
    }
    rep.record(
        "6",
        worst <= tol,
        format!(
            "10-tick outage, v_hat ({:.3}, {:.3}) m/s: worst per-tick deviation from v_hat*dt {worst:.2e} m (limit {tol:.2} m)",
            v_hat[0], v_hat[1]
        ),
    );
}

// ---------------------------------------------------------------- 7 -------

fn ringtrack(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_ringtrack"))
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "ringtrack {args:?} failed");
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    std::fs::read(a).unwrap() == std::fs::read(b).unwrap()
}

fn criterion_7(rep: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    for run in ["a", "b"] {
        ringtrack(&["simgen", "--episodes", "3", "--ticks", "400", "--seed", "7", "--out", &p(&format!("data_{run}.csv"))]);
        ringtrack(&["train", "--data", &p("data_a.csv"), "--out", &p(&format!("model_{run}.json")), "--epochs", "3", "--seed", "7"]);
        ringtrack(&[
            "track", "--model", &p("model_a.json"), "--data", &p("data_a.csv"), "--particles", "200", "--seed", "7",
            "--out", &p(&format!("traj_{run}.csv")),
        ]);
    }
    let path = |n: &str| dir.path().join(n);
    let sim = same_bytes(&path("data_a.csv"), &path("data_b.csv"));
    let train = same_bytes(&path("model_a.json"), &path("model_b.json"))
        && same_bytes(&path("model_a.history.csv"), &path("model_b.history.csv"));
    let track = same_bytes(&path("traj_a.csv"), &path("traj_b.csv"));
    rep.record(
        "7",
        sim && train && track,
        format!("byte-identical reruns: simgen {sim}, train {train}, track {track}"),
    );
}

// ---------------------------------------------------------------- 8 -------

/// Mean error of the network against the true centers, expressed in each
/// sample's radial/tangential frame around the robot.
fn mean_radial_error(net: &MlpModel, test: &Dataset) -> [f64; 2] {
    let mut acc = [0.0; 2];
    let mut n = 0.0;
    for s in test.samples.iter().filter(|s| has_human_return(&s.z)) {
        let out = net.forward(&ringtrack::dataset::normalize(&s.z), Mode::Eval).unwrap();
        let e = [out[0] - s.y[0], out[1] - s.y[1]];
        let d = s.y[0].hypot(s.y[1]);
        let (ur, ut) = ([s.y[0] / d, s.y[1] / d], [-s.y[1] / d, s.y[0] / d]);
        acc[0] += e[0] * ur[0] + e[1] * ur[1];
        acc[1] += e[0] * ut[0] + e[1] * ut[1];
        n += 1.0;
    }
    [acc[0] / n, acc[1] / n]
}

fn criterion_8(rep: &mut Report) {
    let mut cfg = RunConfig::default();
    cfg.dataset.augment_copies = 0;
    cfg.dataset.sigma_gt = 0.0;
    cfg.train.seed = 8;
    let (ds, _) = pipeline::generate(&cfg, 10, 2000, 8).unwrap();
    let test = pipeline::test_partition(&cfg, &ds).unwrap();

    let (center_net, _) = pipeline::train_model(&cfg, &ds, |_| {}).unwrap();
    let center = mean_radial_error(&center_net, &test);

    cfg.dataset.target = TargetMode::NearestSurface;
    let (surface_net, _) = pipeline::train_model(&cfg, &ds, |_| {}).unwrap();
    let surface = mean_radial_error(&surface_net, &test);

    let mag = |v: [f64; 2]| v[0].hypot(v[1]);
    let increase = mag(surface) - mag(center);
    let r = cfg.human.body_radius;
    rep.record(
        "8",
        (increase - r).abs() <= 0.5 * r,
        format!(
            "mean error (radial, tangential): center ({:.3}, {:.3}), surface ({:.3}, {:.3}); \
             magnitude increase {increase:.3} m vs body radius {r} +/- {:.3}",
            center[0],
            center[1],
            surface[0],
            surface[1],
            0.5 * r
        ),
    );
}

// ---------------------------------------------------------------- 9 -------

fn criterion_9(rep: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let (ds, _) = pipeline::generate(&cfg, 2, 300, 9).unwrap();
    let data_path = dir.path().join("d.csv");
    ds.save(&data_path).unwrap();
    let ds_ok = Dataset::load(&data_path).unwrap() == ds;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = MlpModel::new(&cfg.network.layer_dims(), &cfg.network.activations, 0.2, &mut rng).unwrap();
    let model_path = dir.path().join("m.json");
    net.save(&model_path).unwrap();
    let loaded = MlpModel::load(&model_path).unwrap();
    let model_ok = loaded == net;
    let forward_ok = (0..100).all(|_| {
        let z: Vec<f64> = (0..INPUT_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
        loaded.forward(&z, Mode::Eval).unwrap() == net.forward(&z, Mode::Eval).unwrap()
    });
    rep.record(
        "9",
        ds_ok && model_ok && forward_ok,
        format!(
            "dataset ({} samples) {ds_ok}, model {model_ok}, eval forward on 100 inputs {forward_ok}",
            ds.len()
        ),
    );
}

fn main() {
    // Criterion ids on the command line restrict the run.
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut rep = Report { lines: Vec::new() };
    let criteria: [(&str, fn(&mut Report)); 9] = [
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("9", criterion_9),
        ("8", criterion_8),
        ("1", criterion_1),
    ];
    for (id, run) in criteria {
        if only.is_empty() || only.iter().any(|o| o == id) {
            run(&mut rep);
        }
    }

    let passed = rep.lines.iter().filter(|l| l.1).count();
    println!("acceptance: {passed}/{} criteria passed", rep.lines.len());
    let unexpected: Vec<&str> = rep
        .lines
        .iter()
        .filter(|(id, pass, _)| !pass && !KNOWN_UNMET.contains(&id.as_str()))
        .map(|l| l.0.as_str())
        .collect();
    for (id, pass, _) in &rep.lines {
        if !pass && KNOWN_UNMET.contains(&id.as_str()) {
            println!("criterion {id} is a known unmet criterion; see README");
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
