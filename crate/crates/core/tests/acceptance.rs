//! Acceptance checks, one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

mod common;

use std::path::Path;
use std::process::Command;

use pneusleeve::fitting::{fit_torque_angle, fit_torque_pressure, Sample2D};
use pneusleeve::models::{ActuatorVariant, TorqueModel};
use pneusleeve::pneumatics::{
    regulator_command, rise_time, simulate_first_order, square_wave, ActuatorDynamics, Direction, RegulatorSpec,
};
use pneusleeve::signals::{emg_report, LowpassSpec, Movement, PipelineConfig};
use pneusleeve::sleeve::{
    allocate_pressures, equilibrium_aoe, gravity_torque, net_torque, support_fraction, workspace_grid, ArmParams,
    AxisTorques, PressureSet, ShoulderPose, SleeveLayout, WorkspaceOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const TORQUE_TOL_NM: f64 = 0.01;
const ANGLE_FIT_MIN_R2: f64 = 0.977;
const PRESSURE_FIT_MIN_R2: f64 = 0.991;
const NOISELESS_MAX_ERR_NM: f64 = 1e-6;
const NOISE_SEEDS: u64 = 200;
const SUPPORT_TOL_PP: f64 = 0.5;
const RISE_REL_TOL: f64 = 0.01;
const ROUND_TRIP_TOL_NM: f64 = 1e-9;
const EQUILIBRIUM_RESIDUAL_NM: f64 = 1e-3;
const ORACLE_SCAN_DEG: f64 = 0.01;
const RANDOM_PAIRS: usize = 1000;
const STOPBAND_MIN_DB: f64 = 80.0;
const PASSBAND_RIPPLE_DB: f64 = 1.0;
const REDUCTION_TOL_PP: f64 = 0.01;
const SCALE_INVARIANCE_TOL: f64 = 1e-10;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pneusleeve")
}

fn run_bin(args: &[&str], out_dir: &Path) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .env_remove("PNEUSLEEVE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn variants() -> [ActuatorVariant; 3] {
    ActuatorVariant::characterized()
}

fn torque_anchors() -> Outcome {
    let expected = [
        ("D1", [10.24, 1.27, 0.84]),
        ("D2", [11.15, 4.44, 1.54]),
        ("D3", [15.54, 4.66, 1.80]),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut worst: f64 = 0.0;
    let mut misses = Vec::new();
    for (name, [peak, ninety, plateau]) in expected {
        let checks = [
            (0.0, peak),
            (90.0, ninety),
            (180.0, plateau),
            (225.0, plateau),
            (270.0, plateau),
        ];
        for (angle, want) in checks {
            let out = run_bin(&["predict", name, &angle.to_string(), "80"], dir.path());
            let got: f64 = match String::from_utf8_lossy(&out.stdout).trim().parse() {
                Ok(v) if out.status.success() => v,
                _ => return (false, format!("predict {name} {angle} failed")),
            };
            let err = (got - want).abs();
            worst = worst.max(err);
            if err > TORQUE_TOL_NM {
                misses.push(format!("{name}@{angle}={got:.3} (want {want})"));
            }
        }
    }
    let detail = if misses.is_empty() {
        format!("max error {worst:.4} N-m")
    } else {
        format!("max error {worst:.4} N-m; off: {}", misses.join(", "))
    };
    (misses.is_empty(), detail)
}

fn angle_samples(model: &TorqueModel, noise: Option<(&Normal<f64>, &mut ChaCha8Rng)>) -> Vec<Sample2D> {
    let angles = (0..=9).map(|k| 30.0 * k as f64);
    match noise {
        None => angles.map(|a| Sample2D::new(a, model.reference_curve(a))).collect(),
        Some((dist, rng)) => angles
            .map(|a| Sample2D::new(a, model.reference_curve(a) * (1.0 + dist.sample(rng))))
            .collect(),
    }
}

fn fit_quality() -> Outcome {
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut min_angle_r2 = f64::INFINITY;
    let mut min_pressure_r2 = f64::INFINITY;
    let mut max_err: f64 = 0.0;
    for v in variants() {
        let model = v.reference_model().unwrap();

        let clean = fit_torque_angle(&angle_samples(&model, None), None).unwrap().parameters;
        for k in 0..=270 {
            let a = k as f64;
            max_err = max_err.max((clean.eval(a) - model.reference_curve(a)).abs());
        }

        for seed in 0..NOISE_SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = angle_samples(&model, Some((&noise, &mut rng)));
            let r2 = fit_torque_angle(&samples, None)
                .map(|r| r.r_squared)
                .unwrap_or(f64::NEG_INFINITY);
            min_angle_r2 = min_angle_r2.min(r2);

            for angle in [0.0, 90.0, 180.0] {
                let pressures = (0..=15).map(|k| 10.0 * k as f64);
                let samples: Vec<Sample2D> = pressures
                    .map(|p| {
                        Sample2D::new(
                            p,
                            model.predict_torque(angle, p).unwrap() * (1.0 + noise.sample(&mut rng)),
                        )
                    })
                    .collect();
                let r2 = fit_torque_pressure(&samples, false)
                    .map(|r| r.r_squared)
                    .unwrap_or(f64::NEG_INFINITY);
                min_pressure_r2 = min_pressure_r2.min(r2);
            }
        }

        let clean_line: Vec<Sample2D> = (0..=15)
            .map(|k| 10.0 * k as f64)
            .map(|p| Sample2D::new(p, model.predict_torque(90.0, p).unwrap()))
            .collect();
        let line = fit_torque_pressure(&clean_line, false).unwrap().parameters;
        for p in 0..=150 {
            let p = p as f64;
            max_err = max_err.max((line.eval(p) - model.predict_torque(90.0, p).unwrap()).abs());
        }
    }
    let pass =
        min_angle_r2 >= ANGLE_FIT_MIN_R2 && min_pressure_r2 >= PRESSURE_FIT_MIN_R2 && max_err < NOISELESS_MAX_ERR_NM;
    (
        pass,
        format!("min R² angle {min_angle_r2:.5}, pressure {min_pressure_r2:.5}; noiseless max error {max_err:.2e} N-m"),
    )
}

fn support_fractions() -> Outcome {
    let arm = ArmParams::default();
    let pose = ShoulderPose::new(90.0, 0.0).unwrap();
    let pressures = PressureSet::new([80.0, 0.0, 0.0, 0.0]).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for (v, want) in variants().iter().zip([7.0, 24.6, 25.8]) {
        let layout = SleeveLayout::uniform(v).unwrap();
        let got = 100.0 * support_fraction(&layout, &pose, &pressures, &arm).unwrap();
        pass &= (got - want).abs() <= SUPPORT_TOL_PP;
        parts.push(format!("{} {got:.2}%", v.name));
    }
    (pass, parts.join(", "))
}

fn monotone_without_overshoot(values: &[f64], target: f64, rising: bool) -> bool {
    values
        .windows(2)
        .all(|w| if rising { w[1] >= w[0] } else { w[1] <= w[0] })
        && values.iter().all(|&y| if rising { y <= target } else { y >= target })
}

fn dynamics() -> Outcome {
    let measured = [("D1", 4.72, 3.40), ("D2", 2.12, 4.42), ("D3", 3.62, 1.82)];
    let mut worst: f64 = 0.0;
    let mut shape_ok = true;
    let dt = 0.01;
    let period = 60.0;
    for (name, rise_in, rise_out) in measured {
        let d = ActuatorDynamics::for_variant(&ActuatorVariant::by_name(name).unwrap()).unwrap();
        let input = square_wave(period, 0.0, 80.0, 2.0 * period, dt).unwrap();
        let trace = simulate_first_order(&d, &input, (d.steady_angle)(0.0)).unwrap();
        let got_in = rise_time(&trace, Direction::Inflate).unwrap();
        let got_out = rise_time(&trace, Direction::Deflate).unwrap();
        worst = worst
            .max((got_in - rise_in).abs() / rise_in)
            .max((got_out - rise_out).abs() / rise_out);

        let half = (period / 2.0 / dt).round() as usize;
        let high = (d.steady_angle)(80.0);
        let low = (d.steady_angle)(0.0);
        let v = &trace.values;
        for (k, chunk) in v.chunks(half).enumerate() {
            let rising = k % 2 == 0;
            shape_ok &= monotone_without_overshoot(chunk, if rising { high } else { low }, rising);
        }
    }
    (
        worst <= RISE_REL_TOL && shape_ok,
        format!(
            "max relative rise-time error {:.3}%, monotone without overshoot: {shape_ok}",
            100.0 * worst
        ),
    )
}

fn regulator() -> Outcome {
    let spec = RegulatorSpec::default();
    let mut mismatches = 0;
    for tenths in 0u32..=2000 {
        let expected = if tenths == 0 {
            0
        } else {
            ((tenths + 5) / 10).clamp(10, 150)
        };
        let got = regulator_command(&spec, tenths as f64 / 10.0).unwrap();
        if got != expected as f64 {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("2001 requests, {mismatches} mismatches"))
}

fn random_layout(rng: &mut ChaCha8Rng) -> SleeveLayout {
    let pool = variants();
    SleeveLayout::new(std::array::from_fn(|_| pool[rng.random_range(0..3)].clone())).unwrap()
}

/// First 0.01° interval, walking in the direction the net torque pushes from
/// the arm-down pose, where actuator torque minus gravity changes sign.
fn scan_equilibrium(layout: &SleeveLayout, p: &PressureSet, arm: &ArmParams, poe: f64) -> (f64, f64) {
    let balance = |aoe: f64| {
        let pose = ShoulderPose {
            aoe_deg: aoe,
            poe_deg: poe,
        };
        net_torque(layout, &pose, p).unwrap().elevation_nm - gravity_torque(arm, &pose)
    };
    if balance(0.0) <= 0.0 {
        return (0.0, 0.0);
    }
    let steps = (180.0 / ORACLE_SCAN_DEG).round() as usize;
    for k in 1..=steps {
        let aoe = k as f64 * ORACLE_SCAN_DEG;
        if balance(aoe) <= 0.0 {
            return ((k - 1) as f64 * ORACLE_SCAN_DEG, aoe);
        }
    }
    (180.0, 180.0)
}

fn allocation_and_equilibrium() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_trip: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let mut bracket_misses = 0;
    let mut failures = 0;
    for _ in 0..RANDOM_PAIRS {
        let layout = random_layout(&mut rng);
        let pose = ShoulderPose::new(rng.random_range(0.0..=180.0), rng.random_range(-90.0..=135.0)).unwrap();
        let floor = if rng.random_bool(0.5) {
            0.0
        } else {
            rng.random_range(0.0..20.0)
        };
        let source = PressureSet::new(std::array::from_fn(|_| rng.random_range(floor..=80.0))).unwrap();
        let desired: AxisTorques = net_torque(&layout, &pose, &source).unwrap();
        match allocate_pressures(&layout, &pose, desired, floor).and_then(|p| net_torque(&layout, &pose, &p)) {
            Ok(got) => {
                worst_trip = worst_trip
                    .max((got.elevation_nm - desired.elevation_nm).abs())
                    .max((got.steering_nm - desired.steering_nm).abs());
            }
            Err(_) => failures += 1,
        }

        let arm = ArmParams::with_mass(rng.random_range(0.2..4.0)).unwrap();
        let pressures =
            PressureSet::new([rng.random_range(0.0..=80.0), rng.random_range(0.0..=20.0), 0.0, 0.0]).unwrap();
        let poe = pose.poe_deg;
        let eq = equilibrium_aoe(&layout, &pressures, &arm, poe).unwrap();
        let (lo, hi) = scan_equilibrium(&layout, &pressures, &arm, poe);
        if !(eq >= lo - 1e-9 && eq <= hi + 1e-9) {
            bracket_misses += 1;
        }
        if eq > 0.0 && eq < 180.0 {
            let at = ShoulderPose {
                aoe_deg: eq,
                poe_deg: poe,
            };
            let residual = net_torque(&layout, &at, &pressures).unwrap().elevation_nm - gravity_torque(&arm, &at);
            worst_residual = worst_residual.max(residual.abs());
        }
    }
    let pass = failures == 0
        && worst_trip < ROUND_TRIP_TOL_NM
        && worst_residual < EQUILIBRIUM_RESIDUAL_NM
        && bracket_misses == 0;
    (
        pass,
        format!(
            "round trip max {worst_trip:.2e} N-m ({failures} failed); equilibrium residual max {worst_residual:.2e} N-m, {bracket_misses} outside scan bracket"
        ),
    )
}

fn workspace() -> Outcome {
    let arm = ArmParams::default();
    let mut slices = 0;
    let mut mismatches = 0;
    let mut free_ok = true;
    for v in variants() {
        let layout = SleeveLayout::uniform(&v).unwrap();
        let free = workspace_grid(
            &layout,
            &arm,
            5.0,
            15.0,
            WorkspaceOptions {
                gravity: false,
                cocontraction_kpa: 0.0,
            },
        )
        .unwrap();
        free_ok &= free.reachable_share() == 1.0 && free.cells.iter().all(|c| c.feasible);

        let map = workspace_grid(&layout, &arm, 5.0, 15.0, WorkspaceOptions::default()).unwrap();
        let model = v.reference_model().unwrap();
        let mut poes: Vec<f64> = map.cells.iter().map(|c| c.pose.poe_deg).collect();
        poes.dedup();
        for poe in poes {
            slices += 1;
            let slice: Vec<_> = map.cells.iter().filter(|c| c.pose.poe_deg == poe).collect();
            for cell in slice {
                let aoe = cell.pose.aoe_deg;
                let elevation = model.predict_torque((180.0 - aoe).clamp(0.0, 270.0), 80.0).unwrap();
                let holds = elevation >= arm.gravity_torque_90_nm * aoe.to_radians().sin();
                if holds != cell.feasible {
                    mismatches += 1;
                }
            }
        }
    }
    (
        free_ok && mismatches == 0,
        format!("gravity-free grid fully reachable: {free_ok}; {slices} slices, {mismatches} cells differ from scan"),
    )
}

fn emg() -> Outcome {
    let filter = LowpassSpec::default().design(2000.0).unwrap();
    let stop = (0..=1920)
        .map(|k| 40.0 + 0.5 * k as f64)
        .map(|f| -filter.magnitude_db(f))
        .fold(f64::INFINITY, f64::min);
    let ripple = (0..=400)
        .map(|k| 0.05 * k as f64)
        .map(|f| filter.magnitude_db(f).abs())
        .fold(0.0, f64::max);

    let constructed = [
        (Movement::Abduction, 40.00),
        (Movement::ForwardFlexion, 53.55),
        (Movement::HorizontalExtension, 39.73),
    ];
    let ratios: Vec<(Movement, f64)> = constructed.iter().map(|&(m, r)| (m, 1.0 - r / 100.0)).collect();
    let dir = tempfile::tempdir().unwrap();
    let manifest = common::write_session(dir.path(), &common::session(&ratios, 1.0), &common::mvc());
    let session = pneusleeve::dataio::load_session(&manifest).unwrap();
    let config = PipelineConfig::default();
    let rows = emg_report(&session.trials, &session.mvc, &config).unwrap();
    let mut worst: f64 = 0.0;
    for (m, want) in constructed {
        let row = rows.iter().find(|r| r.movement == m).unwrap();
        worst = worst.max((row.reduction_pct - want).abs());
    }

    let mut scale_err: f64 = 0.0;
    for scale in [1e-3, 7.25, 1e4] {
        let scaled = emg_report(&common::session(&ratios, scale), &common::mvc(), &config).unwrap();
        let base = emg_report(&common::session(&ratios, 1.0), &common::mvc(), &config).unwrap();
        for (a, b) in scaled.iter().zip(&base) {
            scale_err = scale_err.max((a.reduction_pct - b.reduction_pct).abs());
        }
    }
    let pass = stop >= STOPBAND_MIN_DB
        && ripple <= PASSBAND_RIPPLE_DB
        && worst <= REDUCTION_TOL_PP
        && scale_err <= SCALE_INVARIANCE_TOL;
    (
        pass,
        format!(
            "order {}, min stopband {stop:.2} dB, passband ripple {ripple:.3} dB; reduction error {worst:.2e} pp; scale drift {scale_err:.2e} pp",
            filter.order()
        ),
    )
}

fn determinism() -> Outcome {
    let inputs = tempfile::tempdir().unwrap();
    let sweep = inputs.path().join("sweep.csv");
    common::write_angle_sweep(&sweep, &ActuatorVariant::d2());
    let line = inputs.path().join("line.csv");
    common::write_pressure_sweep(&line, &ActuatorVariant::d2());
    let manifest = common::write_session(
        &inputs.path().join("emg"),
        &common::session(&[(Movement::Abduction, 0.6)], 1.0),
        &common::mvc(),
    );
    let sweep = sweep.to_string_lossy().into_owned();
    let line = line.to_string_lossy().into_owned();
    let manifest = manifest.to_string_lossy().into_owned();
    let commands: Vec<Vec<&str>> = vec![
        vec!["fit", "--input", &sweep, "--model", "eq1"],
        vec!["fit", "--input", &line, "--model", "eq2"],
        vec!["predict", "D3", "135", "60"],
        vec!["step", "D1"],
        vec!["motion", "--target", "30,20", "--mass", "0.5"],
        vec!["workspace"],
        vec!["emg", "--manifest", &manifest],
    ];
    let mut differing = Vec::new();
    for args in &commands {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_bin(args, a.path());
        let rb = run_bin(args, b.path());
        let same_files = dir_bytes(a.path()) == dir_bytes(b.path());
        if !(ra.status.success() && ra.status == rb.status && ra.stdout == rb.stdout && same_files) {
            differing.push(args[0]);
        }
    }
    (
        differing.is_empty(),
        format!("{} runs compared; differing: {:?}", commands.len(), differing),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("torque anchors", torque_anchors),
        ("fit quality", fit_quality),
        ("support fractions", support_fractions),
        ("step dynamics", dynamics),
        ("regulator", regulator),
        ("allocation and equilibrium", allocation_and_equilibrium),
        ("workspace", workspace),
        ("emg pipeline", emg),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = check();
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {detail}",
            if pass { "PASS" } else { "FAIL" },
            k + 1
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
