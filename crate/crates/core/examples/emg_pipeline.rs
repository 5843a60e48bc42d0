//! EMG processing on a synthetic session where the powered condition lowers
//! every muscle's activity to 60%.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use pneusleeve::signals::{
    emg_report, Condition, EmgTrace, ImuTrace, LowpassSpec, Movement, Muscle, MvcTable, PipelineConfig, Repetition,
    TrialSet,
};

fn repetition(scale: f64, seed: usize) -> pneusleeve::Result<Repetition> {
    let ramp = 150 + 10 * seed;
    let mut elevation = vec![0.0; 40];
    elevation.extend((1..=ramp).map(|i| 90.0 * i as f64 / ramp as f64));
    elevation.extend((0..ramp).rev().map(|i| 90.0 * i as f64 / ramp as f64));
    elevation.extend(vec![0.0; 40]);

    let n = elevation.len() * 20;
    let channels: BTreeMap<Muscle, Vec<f64>> = Muscle::ALL
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let samples = (0..n)
                .map(|i| {
                    let t = i as f64 / 2000.0;
                    let effort = 0.05 + 0.25 * elevation[i / 20] / 90.0;
                    scale * effort * (2.0 * PI * (70.0 + 9.0 * k as f64) * t + seed as f64).sin()
                })
                .collect();
            (m, samples)
        })
        .collect();
    Ok(Repetition {
        emg: EmgTrace::new(2000.0, channels)?,
        imu: ImuTrace::new(100.0, elevation)?,
    })
}

pub fn run_example() -> pneusleeve::Result<()> {
    let filter = LowpassSpec::default().design(2000.0)?;
    println!(
        "low-pass: order {}, {:.3} dB at 20 Hz, {:.1} dB at 40 Hz",
        filter.order(),
        filter.magnitude_db(20.0),
        filter.magnitude_db(40.0)
    );

    let mut trials = Vec::new();
    for movement in Movement::ALL {
        for (condition, scale) in [(Condition::Unpowered, 1.0), (Condition::Powered, 0.6)] {
            trials.push(TrialSet {
                movement,
                condition,
                repetitions: (0..3)
                    .map(|r| repetition(scale, r))
                    .collect::<pneusleeve::Result<_>>()?,
            });
        }
    }
    let mvc = MvcTable::new(Muscle::ALL.into_iter().map(|m| (m, 0.4)).collect())?;
    for row in emg_report(&trials, &mvc, &PipelineConfig::default())? {
        println!(
            "{:<22} {:<3} {:>6.2}%",
            row.movement.label(),
            row.target.abbreviation(),
            row.reduction_pct
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pneusleeve::Result<()> {
    run_example()
}
