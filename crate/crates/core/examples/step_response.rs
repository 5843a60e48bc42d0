//! Square-wave pressure steps through the first-order actuator dynamics and
//! the recovered 10-90% rise times.

use pneusleeve::models::ActuatorVariant;
use pneusleeve::pneumatics::{
    regulator_command, rise_time, simulate_first_order, square_wave, ActuatorDynamics, Direction, RegulatorSpec,
};

pub fn run_example() -> pneusleeve::Result<()> {
    let input = square_wave(60.0, 0.0, 80.0, 120.0, 0.01)?;
    for variant in ActuatorVariant::characterized() {
        let dynamics = ActuatorDynamics::for_variant(&variant)?;
        let trace = simulate_first_order(&dynamics, &input, 0.0)?;
        println!(
            "{}: tau_in {:.3} s, tau_out {:.3} s, rise_in {:.2} s, rise_out {:.2} s",
            variant.name,
            dynamics.tau_inflate_s,
            dynamics.tau_deflate_s,
            rise_time(&trace, Direction::Inflate)?,
            rise_time(&trace, Direction::Deflate)?,
        );
    }

    let spec = RegulatorSpec::default();
    for request in [0.0, 4.0, 42.6, 200.0] {
        println!(
            "regulator: {request} kPa requested -> {} kPa",
            regulator_command(&spec, request)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pneusleeve::Result<()> {
    run_example()
}
