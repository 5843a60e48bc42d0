//! Fitting the double-exponential angle model and the pressure line to noisy
//! synthetic characterization data.

use pneusleeve::fitting::{fit_torque_angle, fit_torque_pressure, Sample2D};
use pneusleeve::models::ActuatorVariant;

/// Deterministic pseudo-noise in [-1, 1].
fn jitter(i: usize) -> f64 {
    ((i as f64 * 12.9898).sin() * 43758.5453).fract()
}

pub fn run_example() -> pneusleeve::Result<()> {
    let truth = ActuatorVariant::d3().reference_model()?;
    let angle_data: Vec<Sample2D> = (0..=9)
        .map(|k| {
            let a = 30.0 * k as f64;
            Sample2D::new(a, truth.reference_curve(a) * (1.0 + 0.01 * jitter(k)))
        })
        .collect();
    let fit = fit_torque_angle(&angle_data, None)?;
    let p = fit.parameters;
    println!("angle model: a={:.4} b={:.5} c={:.4} d={:.5}", p.a, p.b, p.c, p.d);
    println!("  R^2 = {:.5} after {} iterations", fit.r_squared, fit.iterations);

    let pressure_data: Vec<Sample2D> = (0..=8)
        .map(|k| {
            let pressure = 10.0 * k as f64;
            Sample2D::new(pressure, truth.f * pressure * (1.0 + 0.01 * jitter(100 + k)))
        })
        .collect();
    let line = fit_torque_pressure(&pressure_data, true)?;
    println!(
        "pressure line: f = {:.5} N-m/kPa, R^2 = {:.5}",
        line.parameters.f, line.r_squared
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> pneusleeve::Result<()> {
    run_example()
}
