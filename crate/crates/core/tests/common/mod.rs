#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use pneusleeve::dataio::{self, ManifestTrial, TrialManifest};
use pneusleeve::signals::{Condition, EmgTrace, ImuTrace, Movement, Muscle, MvcTable, Repetition, TrialSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One raise-and-lower repetition. Muscle activity is band-limited noise whose
/// amplitude follows elevation; `scale` multiplies every EMG sample.
pub fn repetition(scale: f64, seed: u64) -> Repetition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rest = 30 + rng.random_range(0..20);
    let ramp = 140 + rng.random_range(0..60);
    let peak = 70.0 + 30.0 * rng.random::<f64>();
    let mut elevation = vec![0.0; rest];
    elevation.extend((1..=ramp).map(|i| peak * i as f64 / ramp as f64));
    elevation.extend((0..ramp).rev().map(|i| peak * i as f64 / ramp as f64));
    elevation.extend(vec![0.0; rest]);

    let n = elevation.len() * 20;
    let mut channels = BTreeMap::new();
    for muscle in Muscle::ALL {
        let tones: Vec<(f64, f64)> = (0..4)
            .map(|_| (40.0 + 200.0 * rng.random::<f64>(), 2.0 * PI * rng.random::<f64>()))
            .collect();
        let gain = 0.1 + 0.2 * rng.random::<f64>();
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / 2000.0;
                let carrier: f64 = tones.iter().map(|(f, ph)| (2.0 * PI * f * t + ph).sin()).sum::<f64>() / 2.0;
                let effort = 0.2 + elevation[i / 20] / 100.0;
                scale * gain * effort * (carrier + 0.3 * (rng.random::<f64>() - 0.5))
            })
            .collect();
        channels.insert(muscle, samples);
    }
    Repetition {
        emg: EmgTrace::new(2000.0, channels).unwrap(),
        imu: ImuTrace::new(100.0, elevation).unwrap(),
    }
}

/// Paired trial sets in which the powered EMG is `ratio` times the unpowered
/// EMG of the same repetition, all scaled by `scale`.
pub fn session(ratios: &[(Movement, f64)], scale: f64) -> Vec<TrialSet> {
    let mut trials = Vec::new();
    for (k, &(movement, ratio)) in ratios.iter().enumerate() {
        for (condition, factor) in [(Condition::Unpowered, 1.0), (Condition::Powered, ratio)] {
            trials.push(TrialSet {
                movement,
                condition,
                repetitions: (0..3).map(|r| repetition(scale * factor, 100 * k as u64 + r)).collect(),
            });
        }
    }
    trials
}

pub fn mvc() -> MvcTable {
    MvcTable::new(
        Muscle::ALL
            .into_iter()
            .enumerate()
            .map(|(k, m)| (m, 0.35 + 0.05 * k as f64))
            .collect(),
    )
    .unwrap()
}

/// Writes a session's files and manifest under `dir`; returns the manifest path.
pub fn write_session(dir: &Path, trials: &[TrialSet], mvc: &MvcTable) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    dataio::write_mvc(mvc, dataio::create(&dir.join("mvc.csv")).unwrap()).unwrap();
    let mut entries = Vec::new();
    for t in trials {
        for (r, rep) in t.repetitions.iter().enumerate() {
            let stem = format!("{}_{}_{}", t.movement.label(), t.condition.label(), r + 1);
            let emg = PathBuf::from(format!("{stem}_emg.csv"));
            let imu = PathBuf::from(format!("{stem}_imu.csv"));
            dataio::write_emg(&rep.emg, dataio::create(&dir.join(&emg)).unwrap()).unwrap();
            dataio::write_imu(&rep.imu, dataio::create(&dir.join(&imu)).unwrap()).unwrap();
            entries.push(ManifestTrial {
                movement: t.movement.label().into(),
                condition: t.condition.label().into(),
                emg,
                imu,
            });
        }
    }
    let manifest = TrialManifest {
        emg_rate_hz: 2000.0,
        imu_rate_hz: 100.0,
        muscles: Muscle::ALL.iter().map(|m| m.label().to_string()).collect(),
        mvc: PathBuf::from("mvc.csv"),
        trials: entries,
    };
    let path = dir.join("session.toml");
    std::fs::write(&path, manifest.to_toml().unwrap()).unwrap();
    path
}

/// Characterization CSV sampled from a variant's reference curve every 30°.
pub fn write_angle_sweep(path: &Path, variant: &pneusleeve::models::ActuatorVariant) {
    let m = variant.reference_model().unwrap();
    let rows: Vec<dataio::CharacterizationRow> = (0..=9)
        .map(|k| {
            let a = 30.0 * k as f64;
            dataio::CharacterizationRow {
                aa_angle_deg: a,
                bb_angle_deg: 0.0,
                pressure_kpa: 80.0,
                torque_nm: m.reference_curve(a),
            }
        })
        .collect();
    dataio::write_characterization(&rows, dataio::create(path).unwrap()).unwrap();
}

/// Characterization CSV at 90° over 0-150 kPa in 10 kPa steps.
pub fn write_pressure_sweep(path: &Path, variant: &pneusleeve::models::ActuatorVariant) {
    let m = variant.reference_model().unwrap();
    let rows: Vec<dataio::CharacterizationRow> = (0..=15)
        .map(|k| {
            let p = 10.0 * k as f64;
            dataio::CharacterizationRow {
                aa_angle_deg: 90.0,
                bb_angle_deg: 0.0,
                pressure_kpa: p,
                torque_nm: m.predict_torque(90.0, p).unwrap(),
            }
        })
        .collect();
    dataio::write_characterization(&rows, dataio::create(path).unwrap()).unwrap();
}
