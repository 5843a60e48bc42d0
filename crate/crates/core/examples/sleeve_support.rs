//! Gravity support, antagonistic allocation and resting equilibrium of a sleeve.

use pneusleeve::models::ActuatorVariant;
use pneusleeve::sleeve::{
    allocate_pressures, equilibrium_aoe, net_torque, support_fraction, ArmParams, AxisTorques, PressureSet,
    ShoulderPose, SleeveLayout,
};

pub fn run_example() -> pneusleeve::Result<()> {
    let arm = ArmParams::default();
    let horizontal = ShoulderPose::new(90.0, 0.0)?;
    let full = PressureSet::new([80.0, 0.0, 0.0, 0.0])?;
    for variant in ActuatorVariant::characterized() {
        let layout = SleeveLayout::uniform(&variant)?;
        let fraction = support_fraction(&layout, &horizontal, &full, &arm)?;
        let rest = equilibrium_aoe(&layout, &full, &arm, 0.0)?;
        println!(
            "{}: {:.1}% of the arm's weight held at 90 deg; rests at {:.2} deg with 80 kPa",
            variant.name,
            100.0 * fraction,
            rest
        );
    }

    let layout = SleeveLayout::uniform(&ActuatorVariant::d2())?;
    let pose = ShoulderPose::new(30.0, 20.0)?;
    let wanted = AxisTorques {
        elevation_nm: 1.5,
        steering_nm: -0.8,
    };
    let pressures = allocate_pressures(&layout, &pose, wanted, 5.0)?;
    let got = net_torque(&layout, &pose, &pressures)?;
    println!("allocation for {wanted:?}: {:?} kPa", pressures.0);
    println!("  produces {got:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> pneusleeve::Result<()> {
    run_example()
}
