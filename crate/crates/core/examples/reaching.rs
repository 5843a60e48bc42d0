//! Closed-loop reaching with a light arm, and a heavy arm that stalls where the
//! elevation actuator can no longer hold it.

use pneusleeve::models::ActuatorVariant;
use pneusleeve::sleeve::{simulate_reach, ArmParams, ControllerConfig, ShoulderPose, SleeveLayout};

pub fn run_example() -> pneusleeve::Result<()> {
    let layout = SleeveLayout::uniform(&ActuatorVariant::d2())?;
    let config = ControllerConfig::default();
    let target = ShoulderPose::new(30.0, 30.0)?;

    for mass in [0.5, 3.5] {
        let arm = ArmParams::with_mass(mass)?;
        let out = simulate_reach(&layout, ShoulderPose::neutral(), target, &arm, &config)?;
        let last = out.trajectory.last().expect("non-empty");
        println!(
            "{mass} kg arm: reached={} after {:.1} s, final pose ({:.2}, {:.2}) deg, pressures {:.1?} kPa",
            out.success, last.time_s, out.final_pose.aoe_deg, out.final_pose.poe_deg, last.pressures.0
        );
    }

    let arm = ArmParams::with_mass(0.5)?;
    let out = simulate_reach(&layout, ShoulderPose::neutral(), target, &arm, &config)?;
    let mut csv = Vec::new();
    out.write_csv(&mut csv)?;
    let text = String::from_utf8(csv).expect("utf-8");
    println!("trajectory CSV, first rows:");
    for line in text.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pneusleeve::Result<()> {
    run_example()
}
