//! Converting raw load-cell logs from the characterization platform into
//! blocked-torque rows.

use pneusleeve::dataio::{parse_lever_geometry, parse_raw_platform, raw_to_characterization, write_characterization};

const GEOMETRY: &str = "\
cell,axis,lever_arm_m,sign
1,AA,0.12,1
2,AA,0.12,1
3,BB,0.08,1
4,BB,0.08,-1
";

const LOG: &str = "\
aa_angle_deg,bb_angle_deg,pressure_kpa,f1_n,f2_n,f3_n,f4_n
0,0,80,46.2,46.7,0.4,0.3
90,0,80,18.4,18.6,0.2,0.2
180,0,80,7.8,7.7,0.1,0.1
";

pub fn run_example() -> pneusleeve::Result<()> {
    let geometry = parse_lever_geometry(GEOMETRY.as_bytes())?;
    let raw = parse_raw_platform(LOG.as_bytes())?;
    let rows = raw_to_characterization(&raw, &geometry)?;
    let mut out = Vec::new();
    write_characterization(&rows, &mut out)?;
    print!("{}", String::from_utf8(out).expect("utf-8"));
    Ok(())
}

#[allow(dead_code)]
fn main() -> pneusleeve::Result<()> {
    run_example()
}
