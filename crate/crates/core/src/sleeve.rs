//! Two-DOF shoulder sleeve: pose mapping, gravity load, antagonistic allocation,
//! quasi-static equilibrium, reaching simulation and workspace maps.
//!
//! Four actuators form two antagonistic pairs. The elevation/depression pair acts
//! on the angle of elevation (AoE) and the anterior/posterior steering pair on the
//! plane of elevation (PoE). Each actuator's A-A' angle is an affine function of
//! its driving anatomical angle, clamped to `[0, 270]`, and its torque always acts
//! to fold it (decrease A-A').

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::models::{ActuatorVariant, AngleConvention, TorqueModel, MAX_AA_ANGLE_DEG, REFERENCE_PRESSURE_KPA};
use crate::pneumatics::{regulator_command, ActuatorDynamics, RegulatorSpec};

/// Continuous-pressure safety cap for actuators worn on the arm.
pub const MAX_CONTINUOUS_KPA: f64 = 80.0;
pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RomLimits {
    pub aoe_min_deg: f64,
    pub aoe_max_deg: f64,
    pub poe_min_deg: f64,
    pub poe_max_deg: f64,
}

impl Default for RomLimits {
    fn default() -> Self {
        Self {
            aoe_min_deg: 0.0,
            aoe_max_deg: 180.0,
            poe_min_deg: -90.0,
            poe_max_deg: 135.0,
        }
    }
}

impl RomLimits {
    pub fn check(&self, pose: &ShoulderPose) -> Result<()> {
        check_range("angle of elevation", pose.aoe_deg, self.aoe_min_deg, self.aoe_max_deg)?;
        check_range("plane of elevation", pose.poe_deg, self.poe_min_deg, self.poe_max_deg)?;
        Ok(())
    }

    fn clamp(&self, pose: ShoulderPose) -> ShoulderPose {
        ShoulderPose {
            aoe_deg: pose.aoe_deg.clamp(self.aoe_min_deg, self.aoe_max_deg),
            poe_deg: pose.poe_deg.clamp(self.poe_min_deg, self.poe_max_deg),
        }
    }
}

/// Humerus orientation: angle of elevation (0 = arm down) and plane of elevation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShoulderPose {
    pub aoe_deg: f64,
    pub poe_deg: f64,
}

impl ShoulderPose {
    /// Pose checked against the default range of motion.
    pub fn new(aoe_deg: f64, poe_deg: f64) -> Result<Self> {
        let pose = Self { aoe_deg, poe_deg };
        RomLimits::default().check(&pose)?;
        Ok(pose)
    }

    pub fn neutral() -> Self {
        Self {
            aoe_deg: 0.0,
            poe_deg: 0.0,
        }
    }

    /// Euclidean distance in (AoE, PoE) degrees.
    pub fn distance(&self, other: &ShoulderPose) -> f64 {
        (self.aoe_deg - other.aoe_deg).hypot(self.poe_deg - other.poe_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Placement {
    Elevation,
    Depression,
    SteerAnterior,
    SteerPosterior,
}

impl Placement {
    pub const ALL: [Placement; 4] = [
        Placement::Elevation,
        Placement::Depression,
        Placement::SteerAnterior,
        Placement::SteerPosterior,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Elevation,
    Steering,
}

impl Axis {
    fn label(self) -> &'static str {
        match self {
            Axis::Elevation => "elevation",
            Axis::Steering => "steering",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DrivingAngle {
    Aoe,
    Poe,
}

/// `A = offset_deg + sign · (driving angle)`, clamped to `[0, 270]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseMap {
    pub driver: DrivingAngle,
    pub offset_deg: f64,
    pub sign: f64,
}

impl PoseMap {
    pub fn aa_angle(&self, pose: &ShoulderPose) -> f64 {
        let driving = match self.driver {
            DrivingAngle::Aoe => pose.aoe_deg,
            DrivingAngle::Poe => pose.poe_deg,
        };
        (self.offset_deg + self.sign * driving).clamp(0.0, MAX_AA_ANGLE_DEG)
    }
}

#[derive(Debug, Clone)]
pub struct ActuatorPlacement {
    pub variant: ActuatorVariant,
    pub model: TorqueModel,
    pub pose_to_aa: PoseMap,
    pub axis: Axis,
    /// Sign of this actuator's torque on its axis' driving angle.
    pub torque_sign: f64,
}

impl ActuatorPlacement {
    /// Default placement: folding torque, i.e. torque sign opposite to the map slope.
    pub fn new(variant: ActuatorVariant, pose_to_aa: PoseMap, axis: Axis) -> Result<Self> {
        let model = variant.reference_model()?;
        Ok(Self {
            variant,
            model,
            pose_to_aa,
            axis,
            torque_sign: -pose_to_aa.sign.signum(),
        })
    }

    /// Torque magnitude at the pose and pressure.
    pub fn torque(&self, pose: &ShoulderPose, pressure_kpa: f64) -> Result<f64> {
        self.model.predict_torque(self.pose_to_aa.aa_angle(pose), pressure_kpa)
    }
}

fn default_map(placement: Placement) -> (PoseMap, Axis) {
    let map = |driver, sign| PoseMap {
        driver,
        offset_deg: 180.0,
        sign,
    };
    match placement {
        Placement::Elevation => (map(DrivingAngle::Aoe, -1.0), Axis::Elevation),
        Placement::Depression => (map(DrivingAngle::Aoe, 1.0), Axis::Elevation),
        Placement::SteerAnterior => (map(DrivingAngle::Poe, 1.0), Axis::Steering),
        Placement::SteerPosterior => (map(DrivingAngle::Poe, -1.0), Axis::Steering),
    }
}

#[derive(Debug, Clone)]
pub struct SleeveLayout {
    placements: [ActuatorPlacement; 4],
    pub rom: RomLimits,
}

impl SleeveLayout {
    /// Default maps with one variant per placement, in [`Placement::ALL`] order.
    pub fn new(variants: [ActuatorVariant; 4]) -> Result<Self> {
        let mut placements = Vec::with_capacity(4);
        for (placement, variant) in Placement::ALL.into_iter().zip(variants) {
            let (map, axis) = default_map(placement);
            placements.push(ActuatorPlacement::new(variant, map, axis)?);
        }
        Self::from_placements(placements.try_into().expect("four placements"))
    }

    /// The same variant in all four positions.
    pub fn uniform(variant: &ActuatorVariant) -> Result<Self> {
        Self::new([variant.clone(), variant.clone(), variant.clone(), variant.clone()])
    }

    pub fn from_placements(placements: [ActuatorPlacement; 4]) -> Result<Self> {
        let layout = Self {
            placements,
            rom: RomLimits::default(),
        };
        for axis in [Axis::Elevation, Axis::Steering] {
            let (pos, neg) = layout.pair(axis)?;
            if pos.torque_sign != 1.0 || neg.torque_sign != -1.0 {
                return Err(Error::Config(format!(
                    "{} pair must have opposite torque signs",
                    axis.label()
                )));
            }
        }
        Ok(layout)
    }

    pub fn with_rom(mut self, rom: RomLimits) -> Self {
        self.rom = rom;
        self
    }

    pub fn placement(&self, p: Placement) -> &ActuatorPlacement {
        &self.placements[p.index()]
    }

    pub fn placement_mut(&mut self, p: Placement) -> &mut ActuatorPlacement {
        &mut self.placements[p.index()]
    }

    /// (positive-torque, negative-torque) actuators on an axis.
    fn pair(&self, axis: Axis) -> Result<(&ActuatorPlacement, &ActuatorPlacement)> {
        let on_axis: Vec<&ActuatorPlacement> = self.placements.iter().filter(|p| p.axis == axis).collect();
        if on_axis.len() != 2 {
            return Err(Error::Config(format!(
                "{} axis needs exactly two actuators, found {}",
                axis.label(),
                on_axis.len()
            )));
        }
        let pos = on_axis.iter().find(|p| p.torque_sign > 0.0);
        let neg = on_axis.iter().find(|p| p.torque_sign < 0.0);
        match (pos, neg) {
            (Some(p), Some(n)) => Ok((p, n)),
            _ => Err(Error::Config(format!("{} pair is not antagonistic", axis.label()))),
        }
    }

    fn pair_indices(&self, axis: Axis) -> (usize, usize) {
        let mut pos = 0;
        let mut neg = 0;
        for (i, p) in self.placements.iter().enumerate() {
            if p.axis == axis {
                if p.torque_sign > 0.0 {
                    pos = i;
                } else {
                    neg = i;
                }
            }
        }
        (pos, neg)
    }
}

/// A-A' angles of the four actuators, indexed by [`Placement`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorAngles(pub [AngleConvention; 4]);

impl ActuatorAngles {
    pub fn get(&self, p: Placement) -> AngleConvention {
        self.0[p.index()]
    }
}

pub fn pose_to_actuator_angles(layout: &SleeveLayout, pose: &ShoulderPose) -> Result<ActuatorAngles> {
    layout.rom.check(pose)?;
    let mut out = [AngleConvention::new(0.0, 0.0)?; 4];
    for p in Placement::ALL {
        out[p.index()] = AngleConvention::new(layout.placement(p).pose_to_aa.aa_angle(pose), 0.0)?;
    }
    Ok(ActuatorAngles(out))
}

/// Point-mass arm whose gravity torque follows `τ90 · sin(AoE)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmParams {
    pub mass_kg: f64,
    pub gravity_torque_90_nm: f64,
}

impl Default for ArmParams {
    fn default() -> Self {
        Self {
            mass_kg: 3.5,
            gravity_torque_90_nm: 18.06,
        }
    }
}

impl ArmParams {
    pub fn new(mass_kg: f64, gravity_torque_90_nm: f64) -> Result<Self> {
        if !(mass_kg.is_finite() && mass_kg > 0.0 && gravity_torque_90_nm.is_finite() && gravity_torque_90_nm > 0.0) {
            return Err(Error::Config(format!(
                "arm mass and gravity torque must be positive, got {mass_kg} kg, {gravity_torque_90_nm} N-m"
            )));
        }
        Ok(Self {
            mass_kg,
            gravity_torque_90_nm,
        })
    }

    /// Arm of the given mass with the default center-of-mass distance.
    pub fn with_mass(mass_kg: f64) -> Result<Self> {
        let com = Self::default().com_length_m();
        Self::new(mass_kg, mass_kg * STANDARD_GRAVITY * com)
    }

    pub fn com_length_m(&self) -> f64 {
        self.gravity_torque_90_nm / (self.mass_kg * STANDARD_GRAVITY)
    }
}

/// Magnitude of the gravity torque opposing elevation.
pub fn gravity_torque(arm: &ArmParams, pose: &ShoulderPose) -> f64 {
    arm.gravity_torque_90_nm * pose.aoe_deg.to_radians().sin()
}

/// Actuator pressures (kPa), indexed by [`Placement`], each within `[0, 80]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PressureSet(pub [f64; 4]);

impl PressureSet {
    pub fn new(pressures: [f64; 4]) -> Result<Self> {
        for p in pressures {
            check_range("actuator pressure", p, 0.0, MAX_CONTINUOUS_KPA)?;
        }
        Ok(Self(pressures))
    }

    pub fn zeros() -> Self {
        Self([0.0; 4])
    }

    pub fn get(&self, p: Placement) -> f64 {
        self.0[p.index()]
    }

    pub fn set(&mut self, p: Placement, kpa: f64) {
        self.0[p.index()] = kpa;
    }
}

/// Net torque per anatomical axis, N-m. Positive raises AoE / increases PoE.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisTorques {
    pub elevation_nm: f64,
    pub steering_nm: f64,
}

impl AxisTorques {
    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Elevation => self.elevation_nm,
            Axis::Steering => self.steering_nm,
        }
    }

    fn set(&mut self, axis: Axis, value: f64) {
        match axis {
            Axis::Elevation => self.elevation_nm = value,
            Axis::Steering => self.steering_nm = value,
        }
    }
}

pub fn net_torque(layout: &SleeveLayout, pose: &ShoulderPose, pressures: &PressureSet) -> Result<AxisTorques> {
    let mut out = AxisTorques::default();
    for (i, placement) in layout.placements.iter().enumerate() {
        let t = placement.torque_sign * placement.torque(pose, pressures.0[i])?;
        match placement.axis {
            Axis::Elevation => out.elevation_nm += t,
            Axis::Steering => out.steering_nm += t,
        }
    }
    Ok(out)
}

/// Elevation torque of the elevation actuator divided by the gravity torque.
pub fn support_fraction(
    layout: &SleeveLayout,
    pose: &ShoulderPose,
    pressures: &PressureSet,
    arm: &ArmParams,
) -> Result<f64> {
    layout.rom.check(pose)?;
    let gravity = gravity_torque(arm, pose);
    if gravity.abs() < 1e-12 {
        return Err(Error::UndefinedFraction);
    }
    let elevation = layout
        .placement(Placement::Elevation)
        .torque(pose, pressures.get(Placement::Elevation))?;
    Ok(elevation / gravity)
}

/// Range of net torque an axis can produce with the antagonist at the floor:
/// `(most negative, most positive)`.
pub fn axis_capability(layout: &SleeveLayout, pose: &ShoulderPose, axis: Axis, floor_kpa: f64) -> Result<(f64, f64)> {
    let (pos, neg) = layout.pair(axis)?;
    let pos_max = pos.torque(pose, MAX_CONTINUOUS_KPA)? - neg.torque(pose, floor_kpa)?;
    let neg_max = neg.torque(pose, MAX_CONTINUOUS_KPA)? - pos.torque(pose, floor_kpa)?;
    Ok((-neg_max, pos_max))
}

/// Pressures producing `desired` net torque on each axis.
///
/// The antagonist of each pair sits at `cocontraction_kpa`; the agonist pressure
/// follows from the linear pressure scaling, `P = 80 · (τ + τ_antagonist) / T_ref(A)`.
/// When that falls below the floor (a small demand against a weaker antagonist),
/// the agonist stays at the floor and the antagonist is raised instead.
pub fn allocate_pressures(
    layout: &SleeveLayout,
    pose: &ShoulderPose,
    desired: AxisTorques,
    cocontraction_kpa: f64,
) -> Result<PressureSet> {
    layout.rom.check(pose)?;
    let floor = check_range("co-contraction floor", cocontraction_kpa, 0.0, MAX_CONTINUOUS_KPA)?;
    let mut out = PressureSet([floor; 4]);
    for axis in [Axis::Elevation, Axis::Steering] {
        let wanted = desired.get(axis);
        if !wanted.is_finite() {
            return Err(Error::Contract(format!("non-finite {} torque demand", axis.label())));
        }
        let (pos, neg) = layout.pair_indices(axis);
        let (agonist, antagonist) = if wanted >= 0.0 { (pos, neg) } else { (neg, pos) };
        let ag = &layout.placements[agonist];
        let ant = &layout.placements[antagonist];
        let ant_torque = ant.torque(pose, floor)?;
        let ag_reference = ag.model.torque_at_reference(ag.pose_to_aa.aa_angle(pose))?;
        let pressure = REFERENCE_PRESSURE_KPA * (wanted.abs() + ant_torque) / ag_reference;
        if pressure > MAX_CONTINUOUS_KPA * (1.0 + 1e-12) {
            let achievable = ag_reference * MAX_CONTINUOUS_KPA / REFERENCE_PRESSURE_KPA - ant_torque;
            return Err(Error::CapabilityExceeded {
                axis: axis.label(),
                desired_nm: wanted,
                achievable_nm: achievable.copysign(wanted),
            });
        }
        if pressure >= floor {
            out.0[agonist] = pressure.min(MAX_CONTINUOUS_KPA);
        } else {
            let ag_floor = ag.torque(pose, floor)?;
            let ant_reference = ant.model.torque_at_reference(ant.pose_to_aa.aa_angle(pose))?;
            let raised = REFERENCE_PRESSURE_KPA * (ag_floor - wanted.abs()) / ant_reference;
            if raised > MAX_CONTINUOUS_KPA * (1.0 + 1e-12) {
                return Err(Error::CapabilityExceeded {
                    axis: axis.label(),
                    desired_nm: wanted,
                    achievable_nm: (ag_floor - ant_reference * MAX_CONTINUOUS_KPA / REFERENCE_PRESSURE_KPA)
                        .copysign(wanted),
                });
            }
            out.0[antagonist] = raised.clamp(floor, MAX_CONTINUOUS_KPA);
        }
    }
    Ok(out)
}

fn elevation_balance(
    layout: &SleeveLayout,
    pressures: &PressureSet,
    arm: &ArmParams,
    aoe: f64,
    poe: f64,
) -> Result<f64> {
    let pose = ShoulderPose {
        aoe_deg: aoe,
        poe_deg: poe,
    };
    Ok(net_torque(layout, &pose, pressures)?.elevation_nm - gravity_torque(arm, &pose))
}

/// Resting AoE reached from the arm-down pose under constant pressures.
///
/// Follows the net torque upward from 0° to the first stable root of
/// `actuator torque − gravity`, refined by bisection. With no root, returns the
/// range boundary the torque pushes toward.
pub fn equilibrium_aoe(layout: &SleeveLayout, pressures: &PressureSet, arm: &ArmParams, poe_deg: f64) -> Result<f64> {
    equilibrium_aoe_from(layout, pressures, arm, poe_deg, layout.rom.aoe_min_deg)
}

/// Like [`equilibrium_aoe`] but starting the search from `start_aoe_deg`.
pub fn equilibrium_aoe_from(
    layout: &SleeveLayout,
    pressures: &PressureSet,
    arm: &ArmParams,
    poe_deg: f64,
    start_aoe_deg: f64,
) -> Result<f64> {
    let rom = layout.rom;
    check_range("plane of elevation", poe_deg, rom.poe_min_deg, rom.poe_max_deg)?;
    check_range("angle of elevation", start_aoe_deg, rom.aoe_min_deg, rom.aoe_max_deg)?;
    let balance = |aoe: f64| elevation_balance(layout, pressures, arm, aoe, poe_deg);
    follow_torque(balance, start_aoe_deg, rom.aoe_min_deg, rom.aoe_max_deg)
}

/// Resting PoE reached from `start_poe_deg` at a fixed AoE.
pub fn equilibrium_poe_from(
    layout: &SleeveLayout,
    pressures: &PressureSet,
    aoe_deg: f64,
    start_poe_deg: f64,
) -> Result<f64> {
    let rom = layout.rom;
    check_range("angle of elevation", aoe_deg, rom.aoe_min_deg, rom.aoe_max_deg)?;
    check_range("plane of elevation", start_poe_deg, rom.poe_min_deg, rom.poe_max_deg)?;
    let balance = |poe: f64| {
        let pose = ShoulderPose { aoe_deg, poe_deg: poe };
        Ok(net_torque(layout, &pose, pressures)?.steering_nm)
    };
    follow_torque(balance, start_poe_deg, rom.poe_min_deg, rom.poe_max_deg)
}

const SCAN_STEP_DEG: f64 = 0.25;

/// Walks from `start` in the direction of `torque` until it changes sign, then
/// bisects the bracketing interval.
fn follow_torque<F>(torque: F, start: f64, min: f64, max: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let t0 = torque(start)?;
    if t0 == 0.0 {
        return Ok(start);
    }
    let dir = t0.signum();
    let limit = if dir > 0.0 { max } else { min };
    let mut a = start;
    loop {
        if a == limit {
            return Ok(limit);
        }
        let b = if dir > 0.0 {
            (a + SCAN_STEP_DEG).min(max)
        } else {
            (a - SCAN_STEP_DEG).max(min)
        };
        if torque(b)? * dir <= 0.0 {
            return bisect(&torque, a, b, dir);
        }
        a = b;
    }
}

/// Root of `torque` between `inside` (sign `dir`) and `outside` (sign `-dir` or zero).
fn bisect<F>(torque: &F, mut inside: f64, mut outside: f64, dir: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    for _ in 0..200 {
        if (outside - inside).abs() <= 1e-10 {
            break;
        }
        let mid = 0.5 * (inside + outside);
        if torque(mid)? * dir > 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(0.5 * (inside + outside))
}

/// Closed-loop reaching controller and arm response parameters.
///
/// The controller is proportional on pose error with gravity feed-forward. The
/// arm is modeled without inertia: it moves at `net torque / damping`, so it comes
/// to rest exactly at a torque-balance equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub dt_s: f64,
    pub max_time_s: f64,
    pub kp_nm_per_deg: f64,
    /// Viscous resistance of the arm, N-m per (deg/s).
    pub damping_nm_s_per_deg: f64,
    pub cocontraction_kpa: f64,
    pub pose_tolerance_deg: f64,
    pub gravity_feedforward: bool,
    pub regulator: RegulatorSpec,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            dt_s: 0.01,
            max_time_s: 120.0,
            kp_nm_per_deg: 0.4,
            damping_nm_s_per_deg: 5.0,
            cocontraction_kpa: 0.0,
            pose_tolerance_deg: 1.0,
            gravity_feedforward: true,
            regulator: RegulatorSpec::default(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_s", self.dt_s),
            ("max_time_s", self.max_time_s),
            ("kp_nm_per_deg", self.kp_nm_per_deg),
            ("damping_nm_s_per_deg", self.damping_nm_s_per_deg),
            ("pose_tolerance_deg", self.pose_tolerance_deg),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("controller {name} must be positive, got {v}")));
            }
        }
        check_range("co-contraction floor", self.cocontraction_kpa, 0.0, MAX_CONTINUOUS_KPA)?;
        self.regulator.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time_s: f64,
    pub pose: ShoulderPose,
    /// Pressures inside the actuators.
    pub pressures: PressureSet,
    /// Regulator outputs commanded during the step that ended here.
    pub commanded: PressureSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachOutcome {
    pub trajectory: Vec<TrajectoryPoint>,
    pub success: bool,
    pub final_pose: ShoulderPose,
}

impl ReachOutcome {
    /// Writes `time_s,aoe_deg,poe_deg,p1_kpa,p2_kpa,p3_kpa,p4_kpa`, pressures in
    /// [`Placement::ALL`] order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time_s", "aoe_deg", "poe_deg", "p1_kpa", "p2_kpa", "p3_kpa", "p4_kpa"])?;
        for pt in &self.trajectory {
            let mut row = vec![
                pt.time_s.to_string(),
                pt.pose.aoe_deg.to_string(),
                pt.pose.poe_deg.to_string(),
            ];
            row.extend(pt.pressures.0.iter().map(|p| p.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Simulates a single reaching motion from `start` to `target`.
///
/// Each step: demand = gravity feed-forward + `kp · error` per axis, saturated to
/// what the pair can deliver; pressures are allocated, passed through the
/// regulator and the 80 kPa cap, and reached through each actuator's first-order
/// pressure dynamics; the pose then moves by `net torque / damping`. Ends when the
/// pose error drops below tolerance or time runs out (reported, not an error).
pub fn simulate_reach(
    layout: &SleeveLayout,
    start: ShoulderPose,
    target: ShoulderPose,
    arm: &ArmParams,
    config: &ControllerConfig,
) -> Result<ReachOutcome> {
    config.validate()?;
    layout.rom.check(&start)?;
    layout.rom.check(&target)?;
    let dynamics: Vec<ActuatorDynamics> = layout
        .placements
        .iter()
        .map(|p| ActuatorDynamics::for_variant(&p.variant))
        .collect::<Result<_>>()?;

    let mut pose = start;
    let mut pressures = PressureSet::zeros();
    let mut trajectory = vec![TrajectoryPoint {
        time_s: 0.0,
        pose,
        pressures,
        commanded: pressures,
    }];
    let steps = (config.max_time_s / config.dt_s).ceil() as usize;
    let mut success = pose.distance(&target) < config.pose_tolerance_deg;

    let mut step = 0;
    while !success && step < steps {
        step += 1;
        let mut demand = AxisTorques {
            elevation_nm: config.kp_nm_per_deg * (target.aoe_deg - pose.aoe_deg),
            steering_nm: config.kp_nm_per_deg * (target.poe_deg - pose.poe_deg),
        };
        if config.gravity_feedforward {
            demand.elevation_nm += gravity_torque(arm, &pose);
        }
        for axis in [Axis::Elevation, Axis::Steering] {
            let (lo, hi) = axis_capability(layout, &pose, axis, config.cocontraction_kpa)?;
            let shrink = 1.0 - 1e-12;
            demand.set(axis, demand.get(axis).clamp(lo * shrink, hi * shrink));
        }
        let requested = allocate_pressures(layout, &pose, demand, config.cocontraction_kpa)?;

        let mut commanded = PressureSet::zeros();
        for (i, dynamics) in dynamics.iter().enumerate() {
            let delivered = regulator_command(&config.regulator, requested.0[i])?.min(MAX_CONTINUOUS_KPA);
            commanded.0[i] = delivered;
            pressures.0[i] = dynamics.step(pressures.0[i], delivered, config.dt_s);
        }

        let torque = net_torque(layout, &pose, &pressures)?;
        let elevation = torque.elevation_nm - gravity_torque(arm, &pose);
        pose = layout.rom.clamp(ShoulderPose {
            aoe_deg: pose.aoe_deg + config.dt_s * elevation / config.damping_nm_s_per_deg,
            poe_deg: pose.poe_deg + config.dt_s * torque.steering_nm / config.damping_nm_s_per_deg,
        });
        trajectory.push(TrajectoryPoint {
            time_s: step as f64 * config.dt_s,
            pose,
            pressures,
            commanded,
        });
        success = pose.distance(&target) < config.pose_tolerance_deg;
    }

    Ok(ReachOutcome {
        trajectory,
        success,
        final_pose: pose,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceCell {
    pub pose: ShoulderPose,
    /// Reachable ignoring gravity; true everywhere inside the range of motion.
    pub reachable: bool,
    /// The pose can be held against gravity.
    pub feasible: bool,
    /// Share of the holding torque the actuators can sustain, in `[0, 1]`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceMap {
    pub cells: Vec<WorkspaceCell>,
}

impl WorkspaceMap {
    pub fn reachable_share(&self) -> f64 {
        self.cells.iter().filter(|c| c.reachable).count() as f64 / self.cells.len() as f64
    }

    pub fn feasible_share(&self) -> f64 {
        self.cells.iter().filter(|c| c.feasible).count() as f64 / self.cells.len() as f64
    }

    /// Writes `aoe_deg,poe_deg,feasible,fraction` with `feasible` as 1/0.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["aoe_deg", "poe_deg", "feasible", "fraction"])?;
        for c in &self.cells {
            w.write_record([
                c.pose.aoe_deg.to_string(),
                c.pose.poe_deg.to_string(),
                u8::from(c.feasible).to_string(),
                c.fraction.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceOptions {
    pub gravity: bool,
    pub cocontraction_kpa: f64,
}

impl Default for WorkspaceOptions {
    fn default() -> Self {
        Self {
            gravity: true,
            cocontraction_kpa: 0.0,
        }
    }
}

/// Grid values from `min` to `max` (inclusive) in `step` increments.
pub fn grid_axis(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::domain("grid step", step, 0.0, f64::INFINITY));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    let mut values: Vec<f64> = (0..=n).map(|i| min + i as f64 * step).collect();
    if max - values[values.len() - 1] > 1e-9 {
        values.push(max);
    }
    Ok(values)
}

/// Holding capability over the range-of-motion grid.
pub fn workspace_grid(
    layout: &SleeveLayout,
    arm: &ArmParams,
    aoe_step_deg: f64,
    poe_step_deg: f64,
    options: WorkspaceOptions,
) -> Result<WorkspaceMap> {
    let rom = layout.rom;
    let aoes = grid_axis(rom.aoe_min_deg, rom.aoe_max_deg, aoe_step_deg)?;
    let poes = grid_axis(rom.poe_min_deg, rom.poe_max_deg, poe_step_deg)?;
    let mut cells = Vec::with_capacity(aoes.len() * poes.len());
    for &poe in &poes {
        for &aoe in &aoes {
            let pose = ShoulderPose {
                aoe_deg: aoe,
                poe_deg: poe,
            };
            let load = if options.gravity {
                gravity_torque(arm, &pose)
            } else {
                0.0
            };
            let (_, capability) = axis_capability(layout, &pose, Axis::Elevation, options.cocontraction_kpa)?;
            let (feasible, fraction) = if load <= 0.0 {
                (true, 1.0)
            } else {
                (capability >= load, (capability / load).clamp(0.0, 1.0))
            };
            cells.push(WorkspaceCell {
                pose,
                reachable: true,
                feasible,
                fraction,
            });
        }
    }
    Ok(WorkspaceMap { cells })
}
