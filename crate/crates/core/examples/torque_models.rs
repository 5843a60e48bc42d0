//! Reference torque curves of the three characterized actuator variants and
//! the linear pressure scaling.

use pneusleeve::models::ActuatorVariant;

pub fn run_example() -> pneusleeve::Result<()> {
    println!("variant  pattern   a         b          c         d          T(0)    T(90)   T(225)");
    for variant in ActuatorVariant::characterized() {
        let m = variant.reference_model()?;
        println!(
            "{:<8} {:<9} {:<9.4} {:<10.6} {:<9.4} {:<10.6} {:<7.3} {:<7.3} {:.3}",
            variant.name,
            variant.pattern_string(),
            m.a,
            m.b,
            m.c,
            m.d,
            m.torque_at_reference(0.0)?,
            m.torque_at_reference(90.0)?,
            m.torque_at_reference(225.0)?,
        );
    }

    let d2 = ActuatorVariant::d2().reference_model()?;
    println!("\nD2 at 90 deg:");
    for p in [0.0, 20.0, 40.0, 60.0, 80.0, 100.0] {
        println!("  {p:>5.0} kPa -> {:.3} N-m", d2.predict_torque(90.0, p)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pneusleeve::Result<()> {
    run_example()
}
