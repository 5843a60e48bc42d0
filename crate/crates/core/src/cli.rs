//! Command-line front end: `fit`, `predict`, `step`, `motion`, `workspace`, `emg`.
//!
//! Exit codes: 0 success, 1 bad input (flags, files, config), 2 model or
//! computation failure, 3 a simulated motion that did not reach its target.
//! Output files go to `--out-dir`, else `$PNEUSLEEVE_OUT_DIR`, else the config's
//! `[output] dir`, else `./output`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::dataio;
use crate::error::{Error, Result};
use crate::fitting::{fit_torque_angle, fit_torque_pressure, Sample2D};
use crate::models::ActuatorVariant;
use crate::pneumatics::{rise_time, simulate_first_order, square_wave, ActuatorDynamics, Direction};
use crate::signals::{emg_report, PipelineConfig};
use crate::sleeve::{
    simulate_reach, workspace_grid, ArmParams, ControllerConfig, ShoulderPose, SleeveLayout, WorkspaceOptions,
};

pub const OUT_DIR_ENV: &str = "PNEUSLEEVE_OUT_DIR";
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pneusleeve",
    version,
    about = "Soft pneumatic shoulder sleeve models and analysis"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the torque-angle (eq1) or torque-pressure (eq2) model to a characterization CSV.
    Fit(FitArgs),
    /// Print the predicted torque (N-m) of a variant at an angle and pressure.
    Predict(PredictArgs),
    /// Simulate the bend-angle response to a square pressure wave.
    Step(StepArgs),
    /// Simulate a reaching motion of the sleeve.
    Motion(MotionArgs),
    /// Map the holding capability over the range of motion.
    Workspace(WorkspaceArgs),
    /// Compute EMG relative reductions for a session manifest.
    Emg(EmgArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Double exponential in A-A' angle.
    Eq1,
    /// Line in pressure.
    Eq2,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Characterization CSV (aa_angle_deg,bb_angle_deg,pressure_kpa,torque_nm).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Force the pressure-line intercept to zero (eq2).
    #[arg(long)]
    pub fix_g: bool,
    /// Single starting point `a,b,c,d` for eq1 instead of the multi-start grid.
    #[arg(long, value_parser = parse_four, allow_hyphen_values = true)]
    pub init: Option<[f64; 4]>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub variant: String,
    #[arg(allow_negative_numbers = true)]
    pub angle_deg: f64,
    #[arg(allow_negative_numbers = true)]
    pub pressure_kpa: f64,
}

#[derive(Debug, Args)]
pub struct StepArgs {
    pub variant: String,
    /// Square wave `PERIOD LOW HIGH` (s, kPa, kPa).
    #[arg(long, num_args = 3, value_names = ["PERIOD", "LOW", "HIGH"], default_values_t = [60.0, 0.0, 80.0], allow_negative_numbers = true)]
    pub square: Vec<f64>,
    #[arg(long, default_value_t = 120.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct MotionArgs {
    /// Starting pose `AOE,POE` in degrees.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true, default_value = "0,0")]
    pub start: (f64, f64),
    /// Target pose `AOE,POE` in degrees.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    pub target: (f64, f64),
    /// Actuator variant in all four positions (overrides the config).
    #[arg(long)]
    pub variant: Option<String>,
    /// Arm mass in kg (overrides the config).
    #[arg(long)]
    pub mass: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WorkspaceArgs {
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub aoe_step: Option<f64>,
    #[arg(long)]
    pub poe_step: Option<f64>,
    /// Ignore the arm's weight.
    #[arg(long)]
    pub no_gravity: bool,
}

#[derive(Debug, Args)]
pub struct EmgArgs {
    /// Session manifest (TOML).
    #[arg(long)]
    pub manifest: PathBuf,
}

fn parse_numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect()
}

fn parse_pose(s: &str) -> std::result::Result<(f64, f64), String> {
    match parse_numbers(s)?.as_slice() {
        [a, p] => Ok((*a, *p)),
        _ => Err("expected AOE,POE".into()),
    }
}

fn parse_four(s: &str) -> std::result::Result<[f64; 4], String> {
    parse_numbers(s)?.try_into().map_err(|_| "expected a,b,c,d".to_string())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorSection {
    pub variant: String,
}

impl Default for ActuatorSection {
    fn default() -> Self {
        Self { variant: "D2".into() }
    }
}

/// Per-position variant overrides.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub elevation: Option<String>,
    pub depression: Option<String>,
    pub steer_anterior: Option<String>,
    pub steer_posterior: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmSection {
    pub mass_kg: f64,
    /// Defaults to the nominal arm's torque scaled by mass.
    pub gravity_torque_90_nm: Option<f64>,
}

impl Default for ArmSection {
    fn default() -> Self {
        Self {
            mass_kg: ArmParams::default().mass_kg,
            gravity_torque_90_nm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub dt_s: f64,
    pub max_time_s: f64,
    pub kp_nm_per_deg: f64,
    pub damping_nm_s_per_deg: f64,
    pub cocontraction_kpa: f64,
    pub pose_tolerance_deg: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            dt_s: c.dt_s,
            max_time_s: c.max_time_s,
            kp_nm_per_deg: c.kp_nm_per_deg,
            damping_nm_s_per_deg: c.damping_nm_s_per_deg,
            cocontraction_kpa: c.cocontraction_kpa,
            pose_tolerance_deg: c.pose_tolerance_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceSection {
    pub aoe_step_deg: f64,
    pub poe_step_deg: f64,
}

impl Default for WorkspaceSection {
    fn default() -> Self {
        Self {
            aoe_step_deg: 5.0,
            poe_step_deg: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmgSection {
    /// Repetitions required per trial set; 0 accepts any count.
    pub repetitions: usize,
    pub envelope_window: usize,
    pub resample_points: usize,
}

impl Default for EmgSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            repetitions: p.repetitions.unwrap_or(0),
            envelope_window: p.envelope_window,
            resample_points: p.resample_points,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Settings shared by all subcommands, read from a sectioned TOML file.
///
/// ```toml
/// [actuator]
/// variant = "D3"
///
/// [arm]
/// mass_kg = 2.0
///
/// [simulation]
/// dt_s = 0.01
/// max_time_s = 60
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub actuator: ActuatorSection,
    pub layout: LayoutSection,
    pub arm: ArmSection,
    pub simulation: SimulationSection,
    pub workspace: WorkspaceSection,
    pub emg: EmgSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks every section against the preconditions of the code that uses it.
    pub fn validate(&self) -> Result<()> {
        self.layout(None)?;
        self.arm(None)?;
        self.controller().validate()?;
        for (name, step) in [
            ("aoe_step_deg", self.workspace.aoe_step_deg),
            ("poe_step_deg", self.workspace.poe_step_deg),
        ] {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::Config(format!("workspace {name} must be positive")));
            }
        }
        if self.emg.envelope_window == 0 || self.emg.resample_points < 2 {
            return Err(Error::Config(
                "emg envelope_window must be ≥ 1 and resample_points ≥ 2".into(),
            ));
        }
        Ok(())
    }

    pub fn layout(&self, variant_override: Option<&str>) -> Result<SleeveLayout> {
        let base = variant_override.unwrap_or(&self.actuator.variant);
        let pick = |o: &Option<String>| -> Result<ActuatorVariant> {
            match (variant_override, o) {
                (None, Some(name)) => ActuatorVariant::by_name(name),
                _ => ActuatorVariant::by_name(base),
            }
        };
        SleeveLayout::new([
            pick(&self.layout.elevation)?,
            pick(&self.layout.depression)?,
            pick(&self.layout.steer_anterior)?,
            pick(&self.layout.steer_posterior)?,
        ])
    }

    pub fn arm(&self, mass_override: Option<f64>) -> Result<ArmParams> {
        let mass = mass_override.unwrap_or(self.arm.mass_kg);
        match (mass_override, self.arm.gravity_torque_90_nm) {
            (None, Some(torque)) => ArmParams::new(mass, torque),
            _ if mass == ArmParams::default().mass_kg => Ok(ArmParams::default()),
            _ => ArmParams::with_mass(mass),
        }
    }

    pub fn controller(&self) -> ControllerConfig {
        let s = &self.simulation;
        ControllerConfig {
            dt_s: s.dt_s,
            max_time_s: s.max_time_s,
            kp_nm_per_deg: s.kp_nm_per_deg,
            damping_nm_s_per_deg: s.damping_nm_s_per_deg,
            cocontraction_kpa: s.cocontraction_kpa,
            pose_tolerance_deg: s.pose_tolerance_deg,
            ..ControllerConfig::default()
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            repetitions: (self.emg.repetitions > 0).then_some(self.emg.repetitions),
            envelope_window: self.emg.envelope_window,
            resample_points: self.emg.resample_points,
            ..PipelineConfig::default()
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the
/// process exit code. Messages go to standard output and standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let env_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let stdout = io::stdout();
    match execute(&cli, env_dir, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn execute(cli: &Cli, env_out_dir: Option<PathBuf>, out: &mut dyn Write) -> Result<i32> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or(env_out_dir)
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("output"));
    let ctx = Context { config, out_dir };
    match &cli.command {
        Command::Fit(a) => ctx.fit(a, out),
        Command::Predict(a) => ctx.predict(a, out),
        Command::Step(a) => ctx.step(a, out),
        Command::Motion(a) => ctx.motion(a, out),
        Command::Workspace(a) => ctx.workspace(a, out),
        Command::Emg(a) => ctx.emg(a, out),
    }
}

struct Context {
    config: RunConfig,
    out_dir: PathBuf,
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

impl Context {
    fn file(&self, name: &str) -> Result<(PathBuf, fs::File)> {
        fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        let path = self.out_dir.join(name);
        let file = dataio::create(&path)?;
        Ok((path, file))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let (path, mut f) = self.file(name)?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }

    fn fit(&self, args: &FitArgs, out: &mut dyn Write) -> Result<i32> {
        let rows = dataio::parse_characterization(dataio::open(&args.input)?)?;
        let (name, params, report) = match args.model {
            ModelKind::Eq1 => {
                let samples: Vec<Sample2D> = rows
                    .iter()
                    .map(|r| Sample2D::new(r.aa_angle_deg, r.torque_nm))
                    .collect();
                let r = fit_torque_angle(&samples, args.init)?;
                let p = r.parameters;
                let params = vec![("a", p.a), ("b", p.b), ("c", p.c), ("d", p.d)];
                ("eq1", params, (r.r_squared, r.residual_norm, r.iterations))
            }
            ModelKind::Eq2 => {
                let samples: Vec<Sample2D> = rows
                    .iter()
                    .map(|r| Sample2D::new(r.pressure_kpa, r.torque_nm))
                    .collect();
                let r = fit_torque_pressure(&samples, args.fix_g)?;
                let p = r.parameters;
                let mut params = vec![("f", p.f)];
                if !args.fix_g {
                    params.push(("g", p.g));
                }
                ("eq2", params, (r.r_squared, r.residual_norm, r.iterations))
            }
        };
        let (r_squared, residual_norm, iterations) = report;

        let (_, f) = self.file(&format!("fit_{name}.csv"))?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["parameter", "value"])?;
        for (k, v) in &params {
            w.write_record([k.to_string(), v.to_string()])?;
        }
        w.write_record(["r_squared".to_string(), r_squared.to_string()])?;
        w.write_record(["residual_norm".to_string(), residual_norm.to_string()])?;
        w.write_record(["iterations".to_string(), iterations.to_string()])?;
        w.flush().map_err(|e| Error::io(&self.out_dir, e))?;

        let mut summary = format!("model {name}\nsamples {}\n", rows.len());
        for (k, v) in &params {
            summary += &format!("{k} = {v:.6e}\n");
        }
        summary += &format!("R² = {r_squared:.3}\nresidual norm = {residual_norm:.3e}\n");
        self.write_text(&format!("fit_{name}.txt"), &summary)?;
        emit(out, &summary)?;
        Ok(0)
    }

    fn predict(&self, args: &PredictArgs, out: &mut dyn Write) -> Result<i32> {
        let model = ActuatorVariant::by_name(&args.variant)?.reference_model()?;
        let torque = model.predict_torque(args.angle_deg, args.pressure_kpa)?;
        emit(out, &format!("{torque:.3}\n"))?;
        Ok(0)
    }

    fn step(&self, args: &StepArgs, out: &mut dyn Write) -> Result<i32> {
        let variant = ActuatorVariant::by_name(&args.variant)?;
        let dynamics = ActuatorDynamics::for_variant(&variant)?;
        let [period, low, high] = [args.square[0], args.square[1], args.square[2]];
        let input = square_wave(period, low, high, args.duration, args.dt)?;
        let trace = simulate_first_order(&dynamics, &input, (dynamics.steady_angle)(low))?;

        let (_, f) = self.file(&format!("step_{}.csv", variant.name))?;
        trace.write_csv(f, "angle_deg")?;

        let describe = |d: Direction| match rise_time(&trace, d) {
            Ok(t) => Ok(format!("{t:.3}")),
            Err(Error::TransitionNotFound(_)) => Ok("not found".to_string()),
            Err(e) => Err(e),
        };
        let summary = format!(
            "variant {}\ntau_inflate_s = {:.4}\ntau_deflate_s = {:.4}\nrise_inflate_s = {}\nrise_deflate_s = {}\n",
            variant.name,
            dynamics.tau_inflate_s,
            dynamics.tau_deflate_s,
            describe(Direction::Inflate)?,
            describe(Direction::Deflate)?,
        );
        self.write_text(&format!("step_{}.txt", variant.name), &summary)?;
        emit(out, &summary)?;
        Ok(0)
    }

    fn motion(&self, args: &MotionArgs, out: &mut dyn Write) -> Result<i32> {
        let layout = self.config.layout(args.variant.as_deref())?;
        let arm = self.config.arm(args.mass)?;
        let start = ShoulderPose::new(args.start.0, args.start.1)?;
        let target = ShoulderPose::new(args.target.0, args.target.1)?;
        let outcome = simulate_reach(&layout, start, target, &arm, &self.config.controller())?;

        let (_, f) = self.file("motion.csv")?;
        outcome.write_csv(f)?;
        let last = outcome.trajectory.last().expect("trajectory has the start point");
        let summary = format!(
            "reached {}\nduration_s = {:.2}\nfinal_aoe_deg = {:.3}\nfinal_poe_deg = {:.3}\nerror_deg = {:.3}\n",
            outcome.success,
            last.time_s,
            outcome.final_pose.aoe_deg,
            outcome.final_pose.poe_deg,
            outcome.final_pose.distance(&target),
        );
        self.write_text("motion.txt", &summary)?;
        emit(out, &summary)?;
        Ok(if outcome.success { 0 } else { EXIT_NOT_CONVERGED })
    }

    fn workspace(&self, args: &WorkspaceArgs, out: &mut dyn Write) -> Result<i32> {
        let layout = self.config.layout(args.variant.as_deref())?;
        let arm = self.config.arm(None)?;
        let options = WorkspaceOptions {
            gravity: !args.no_gravity,
            cocontraction_kpa: self.config.simulation.cocontraction_kpa,
        };
        let map = workspace_grid(
            &layout,
            &arm,
            args.aoe_step.unwrap_or(self.config.workspace.aoe_step_deg),
            args.poe_step.unwrap_or(self.config.workspace.poe_step_deg),
            options,
        )?;
        let (_, f) = self.file("workspace.csv")?;
        map.write_csv(f)?;
        let summary = format!(
            "cells {}\ngravity {}\nreachable_pct = {:.2}\nfeasible_pct = {:.2}\n",
            map.cells.len(),
            options.gravity,
            100.0 * map.reachable_share(),
            100.0 * map.feasible_share(),
        );
        self.write_text("workspace.txt", &summary)?;
        emit(out, &summary)?;
        Ok(0)
    }

    fn emg(&self, args: &EmgArgs, out: &mut dyn Write) -> Result<i32> {
        let session = dataio::load_session(&args.manifest)?;
        let rows = emg_report(&session.trials, &session.mvc, &self.config.pipeline())?;
        let (_, f) = self.file("emg_report.csv")?;
        dataio::write_report(&rows, f)?;
        let mut buf = Vec::new();
        dataio::write_report(&rows, &mut buf)?;
        out.write_all(&buf).map_err(|e| Error::io("<stdout>", e))?;
        Ok(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("pneusleeve").chain(args.iter().copied())).unwrap()
    }

    fn run_in(dir: &Path, args: &[&str]) -> (Result<i32>, String) {
        let mut out = Vec::new();
        let code = execute(&parse(args), Some(dir.to_path_buf()), &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn predict_examples() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_in(dir.path(), &["predict", "D2", "90", "80"]).1, "4.440\n");
        assert_eq!(run_in(dir.path(), &["predict", "D2", "90", "0"]).1, "0.000\n");
        assert_eq!(run_in(dir.path(), &["predict", "d3", "0", "80"]).1, "15.540\n");
        let (code, _) = run_in(dir.path(), &["predict", "D9", "0", "80"]);
        assert_eq!(code.unwrap_err().exit_code(), 1);
        let (code, _) = run_in(dir.path(), &["predict", "D2", "-5", "80"]);
        assert_eq!(code.unwrap_err().exit_code(), 1);
    }

    #[test]
    fn step_rise_times() {
        let dir = tempfile::tempdir().unwrap();
        let (code, text) = run_in(
            dir.path(),
            &["step", "D2", "--square", "60", "0", "80", "--duration", "120"],
        );
        assert_eq!(code.unwrap(), 0);
        assert!(text.contains("rise_inflate_s = 2.120"), "{text}");
        assert!(text.contains("rise_deflate_s = 4.420"), "{text}");
        let flat = run_in(dir.path(), &["step", "D2", "--square", "60", "50", "50"]).1;
        assert!(flat.contains("rise_inflate_s = not found"), "{flat}");
        assert!(dir.path().join("step_D2.csv").exists());
    }

    #[test]
    fn null_motion() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _) = run_in(dir.path(), &["motion", "--start", "0,0", "--target", "0,0"]);
        assert_eq!(code.unwrap(), 0);
        let csv = fs::read_to_string(dir.path().join("motion.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn workspace_no_gravity() {
        let dir = tempfile::tempdir().unwrap();
        let (code, text) = run_in(dir.path(), &["workspace", "--no-gravity"]);
        assert_eq!(code.unwrap(), 0);
        assert!(text.contains("reachable_pct = 100.00"));
        assert!(text.contains("feasible_pct = 100.00"));
    }

    #[test]
    fn config_sections() {
        let c =
            RunConfig::from_toml("[actuator]\nvariant = \"D3\"\n[arm]\nmass_kg = 2.0\n[output]\ndir = \"results\"\n")
                .unwrap();
        assert_eq!(c.actuator.variant, "D3");
        assert_eq!(c.output.dir, Some(PathBuf::from("results")));
        assert!((c.arm(None).unwrap().com_length_m() - ArmParams::default().com_length_m()).abs() < 1e-12);
        assert!(RunConfig::from_toml("[arm]\nmass = 2\n").is_err());
        assert!(RunConfig::from_toml("[actuator]\nvariant = \"Q\"\n").is_err());
        assert!(RunConfig::from_toml("[simulation]\ndt_s = 0\n").is_err());
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn layout_overrides() {
        let c = RunConfig::from_toml("[layout]\nelevation = \"D3\"\n").unwrap();
        let layout = c.layout(None).unwrap();
        assert_eq!(layout.placement(crate::sleeve::Placement::Elevation).variant.name, "D3");
        assert_eq!(
            layout.placement(crate::sleeve::Placement::Depression).variant.name,
            "D2"
        );
        let forced = c.layout(Some("D1")).unwrap();
        assert_eq!(forced.placement(crate::sleeve::Placement::Elevation).variant.name, "D1");
    }

    #[test]
    fn out_dir_precedence() {
        let flag = tempfile::tempdir().unwrap();
        let env = tempfile::tempdir().unwrap();
        let cli = parse(&[
            "--out-dir",
            flag.path().to_str().unwrap(),
            "workspace",
            "--aoe-step",
            "90",
            "--poe-step",
            "90",
        ]);
        execute(&cli, Some(env.path().to_path_buf()), &mut Vec::new()).unwrap();
        assert!(flag.path().join("workspace.csv").exists());
        assert!(!env.path().join("workspace.csv").exists());
    }
}
