//! Holding capability over the shoulder's range of motion.

use pneusleeve::models::ActuatorVariant;
use pneusleeve::sleeve::{workspace_grid, ArmParams, SleeveLayout, WorkspaceOptions};

pub fn run_example() -> pneusleeve::Result<()> {
    let arm = ArmParams::default();
    for variant in ActuatorVariant::characterized() {
        let layout = SleeveLayout::uniform(&variant)?;
        let free = workspace_grid(
            &layout,
            &arm,
            5.0,
            15.0,
            WorkspaceOptions {
                gravity: false,
                ..Default::default()
            },
        )?;
        let loaded = workspace_grid(&layout, &arm, 5.0, 15.0, WorkspaceOptions::default())?;
        let limit = loaded
            .cells
            .iter()
            .filter(|c| c.pose.poe_deg == 0.0 && c.pose.aoe_deg < 90.0 && !c.feasible)
            .map(|c| c.pose.aoe_deg)
            .fold(f64::INFINITY, f64::min);
        println!(
            "{}: reachable {:.0}% without gravity, {:.1}% holdable with a 3.5 kg arm, first unholdable elevation {limit} deg",
            variant.name,
            100.0 * free.reachable_share(),
            100.0 * loaded.feasible_share(),
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pneusleeve::Result<()> {
    run_example()
}
