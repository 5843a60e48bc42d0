//! CSV schemas for characterization, platform, EMG, IMU and MVC data, the trial
//! manifest, and load-cell force to torque conversion.
//!
//! Every file is UTF-8, comma separated, with exactly one header line whose
//! column names carry the units. Numbers are written with Rust's shortest
//! round-trip formatting, so parse → write reproduces values bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{MAX_AA_ANGLE_DEG, MAX_BB_ANGLE_DEG, MAX_PRESSURE_KPA};
use crate::signals::{Condition, EmgTrace, ImuTrace, Movement, Muscle, MvcTable, ReductionRow, Repetition, TrialSet};

pub const CHARACTERIZATION_HEADER: [&str; 4] = ["aa_angle_deg", "bb_angle_deg", "pressure_kpa", "torque_nm"];
pub const RAW_PLATFORM_HEADER: [&str; 7] = [
    "aa_angle_deg",
    "bb_angle_deg",
    "pressure_kpa",
    "f1_n",
    "f2_n",
    "f3_n",
    "f4_n",
];
pub const LEVER_HEADER: [&str; 4] = ["cell", "axis", "lever_arm_m", "sign"];
pub const IMU_HEADER: [&str; 2] = ["time_s", "elevation_deg"];
pub const MVC_HEADER: [&str; 2] = ["muscle", "mvc_v"];
pub const REPORT_HEADER: [&str; 3] = ["movement", "target_muscle", "relative_reduction_pct"];

/// Tolerated relative deviation of a file's sample rate from the expected one.
pub const RATE_TOLERANCE: f64 = 0.01;

/// Opens a file, attaching the path to any I/O error.
pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

struct Table {
    header: Vec<String>,
    /// (1-based file line, fields)
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec?.iter().map(str::to_owned).collect(),
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(Table { header, rows })
}

fn expect_header(table: &Table, expected: &[&str]) -> Result<()> {
    if table.header.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "header `{}` does not match `{}`",
                table.header.join(","),
                expected.join(",")
            ),
        });
    }
    Ok(())
}

fn number(field: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{column}: `{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Validation {
            line,
            message: format!("{column} is not finite"),
        });
    }
    Ok(v)
}

fn in_range(v: f64, min: f64, max: f64, line: usize, column: &str) -> Result<f64> {
    if v < min || v > max {
        return Err(Error::Validation {
            line,
            message: format!("{column} = {v} is outside [{min}, {max}]"),
        });
    }
    Ok(v)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<output>", e))
}

/// One blocked-torque measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationRow {
    pub aa_angle_deg: f64,
    pub bb_angle_deg: f64,
    pub pressure_kpa: f64,
    pub torque_nm: f64,
}

fn platform_prefix(fields: &[String], line: usize) -> Result<(f64, f64, f64)> {
    let aa = in_range(
        number(&fields[0], line, "aa_angle_deg")?,
        0.0,
        MAX_AA_ANGLE_DEG,
        line,
        "aa_angle_deg",
    )?;
    let bb = in_range(
        number(&fields[1], line, "bb_angle_deg")?,
        0.0,
        MAX_BB_ANGLE_DEG,
        line,
        "bb_angle_deg",
    )?;
    let p = in_range(
        number(&fields[2], line, "pressure_kpa")?,
        0.0,
        MAX_PRESSURE_KPA,
        line,
        "pressure_kpa",
    )?;
    Ok((aa, bb, p))
}

pub fn parse_characterization<R: Read>(reader: R) -> Result<Vec<CharacterizationRow>> {
    let table = read_table(reader)?;
    expect_header(&table, &CHARACTERIZATION_HEADER)?;
    table
        .rows
        .iter()
        .map(|(line, f)| {
            let (aa, bb, p) = platform_prefix(f, *line)?;
            Ok(CharacterizationRow {
                aa_angle_deg: aa,
                bb_angle_deg: bb,
                pressure_kpa: p,
                torque_nm: number(&f[3], *line, "torque_nm")?,
            })
        })
        .collect()
}

pub fn write_characterization<W: Write>(rows: &[CharacterizationRow], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CHARACTERIZATION_HEADER)?;
    for r in rows {
        w.write_record([r.aa_angle_deg, r.bb_angle_deg, r.pressure_kpa, r.torque_nm].map(|v| v.to_string()))?;
    }
    finish(w)
}

/// Platform log with the four raw load-cell forces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPlatformRow {
    pub aa_angle_deg: f64,
    pub bb_angle_deg: f64,
    pub pressure_kpa: f64,
    pub forces_n: [f64; 4],
}

pub fn parse_raw_platform<R: Read>(reader: R) -> Result<Vec<RawPlatformRow>> {
    let table = read_table(reader)?;
    expect_header(&table, &RAW_PLATFORM_HEADER)?;
    table
        .rows
        .iter()
        .map(|(line, f)| {
            let (aa, bb, p) = platform_prefix(f, *line)?;
            let mut forces = [0.0; 4];
            for (i, force) in forces.iter_mut().enumerate() {
                *force = number(&f[3 + i], *line, RAW_PLATFORM_HEADER[3 + i])?;
            }
            Ok(RawPlatformRow {
                aa_angle_deg: aa,
                bb_angle_deg: bb,
                pressure_kpa: p,
                forces_n: forces,
            })
        })
        .collect()
}

pub fn write_raw_platform<W: Write>(rows: &[RawPlatformRow], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(RAW_PLATFORM_HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.aa_angle_deg.to_string(),
            r.bb_angle_deg.to_string(),
            r.pressure_kpa.to_string(),
        ];
        rec.extend(r.forces_n.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TorqueAxis {
    AA,
    BB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverCell {
    pub axis: TorqueAxis,
    pub lever_arm_m: f64,
    pub sign: f64,
}

/// Mounting of the four load cells, indexed by cell number minus one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverGeometry {
    pub cells: [LeverCell; 4],
}

impl LeverGeometry {
    pub fn new(cells: [LeverCell; 4]) -> Result<Self> {
        for (i, c) in cells.iter().enumerate() {
            if !(c.lever_arm_m.is_finite() && c.lever_arm_m > 0.0) {
                return Err(Error::Config(format!("cell {}: lever arm must be positive", i + 1)));
            }
            if c.sign != 1.0 && c.sign != -1.0 {
                return Err(Error::Config(format!("cell {}: sign must be +1 or -1", i + 1)));
            }
        }
        let aa = cells.iter().filter(|c| c.axis == TorqueAxis::AA).count();
        if aa != 2 {
            return Err(Error::Config(format!(
                "expected two cells per axis, found {aa} on AA and {} on BB",
                4 - aa
            )));
        }
        Ok(Self { cells })
    }
}

pub fn parse_lever_geometry<R: Read>(reader: R) -> Result<LeverGeometry> {
    let table = read_table(reader)?;
    expect_header(&table, &LEVER_HEADER)?;
    let mut cells: [Option<LeverCell>; 4] = [None; 4];
    for (line, f) in &table.rows {
        let line = *line;
        let index: usize = f[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("cell `{}` is not an integer", f[0]),
        })?;
        if !(1..=4).contains(&index) {
            return Err(Error::Validation {
                line,
                message: format!("cell {index} is not in 1..=4"),
            });
        }
        let axis = match f[1].to_ascii_uppercase().as_str() {
            "AA" => TorqueAxis::AA,
            "BB" => TorqueAxis::BB,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("axis `{other}` must be AA or BB"),
                })
            }
        };
        if cells[index - 1].is_some() {
            return Err(Error::Validation {
                line,
                message: format!("cell {index} listed twice"),
            });
        }
        cells[index - 1] = Some(LeverCell {
            axis,
            lever_arm_m: number(&f[2], line, "lever_arm_m")?,
            sign: number(&f[3], line, "sign")?,
        });
    }
    let cells = cells
        .iter()
        .enumerate()
        .map(|(i, c)| c.ok_or_else(|| Error::Config(format!("lever geometry has no cell {}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    LeverGeometry::new(cells.try_into().expect("four cells"))
}

/// `(A-A' torque, B-B' torque)` as the signed sum of force × lever arm per axis.
pub fn loadcell_to_torque(forces_n: [f64; 4], geometry: &LeverGeometry) -> Result<(f64, f64)> {
    if forces_n.iter().any(|f| !f.is_finite()) {
        return Err(Error::Contract(format!("non-finite load-cell force in {forces_n:?}")));
    }
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (f, c) in forces_n.iter().zip(&geometry.cells) {
        let t = c.sign * f * c.lever_arm_m;
        match c.axis {
            TorqueAxis::AA => aa += t,
            TorqueAxis::BB => bb += t,
        }
    }
    Ok((aa, bb))
}

/// Converts a raw platform log to A-A' torque rows.
pub fn raw_to_characterization(rows: &[RawPlatformRow], geometry: &LeverGeometry) -> Result<Vec<CharacterizationRow>> {
    rows.iter()
        .map(|r| {
            let (aa, _) = loadcell_to_torque(r.forces_n, geometry)?;
            Ok(CharacterizationRow {
                aa_angle_deg: r.aa_angle_deg,
                bb_angle_deg: r.bb_angle_deg,
                pressure_kpa: r.pressure_kpa,
                torque_nm: aa,
            })
        })
        .collect()
}

/// Checks a time column is uniformly spaced at `expected_hz` (within 1%).
fn check_time_column(times: &[(usize, f64)], expected_hz: f64) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            got: times.len(),
        });
    }
    let (_, first) = times[0];
    let (_, last) = times[times.len() - 1];
    let found_hz = (times.len() - 1) as f64 / (last - first);
    if !(found_hz.is_finite() && (found_hz - expected_hz).abs() <= RATE_TOLERANCE * expected_hz) {
        return Err(Error::RateMismatch { expected_hz, found_hz });
    }
    let period = 1.0 / expected_hz;
    for w in times.windows(2) {
        let dt = w[1].1 - w[0].1;
        if (dt - period).abs() > RATE_TOLERANCE * period {
            return Err(Error::Validation {
                line: w[1].0,
                message: format!("time step {dt} s breaks uniform sampling at {expected_hz} Hz"),
            });
        }
    }
    Ok(())
}

/// EMG file `time_s,<muscle>...`; every muscle in `required` must be present.
pub fn parse_emg<R: Read>(reader: R, expected_hz: f64, required: &[Muscle]) -> Result<EmgTrace> {
    let table = read_table(reader)?;
    if table.header.first().map(String::as_str) != Some("time_s") {
        return Err(Error::Parse {
            line: 1,
            message: "first column must be time_s".into(),
        });
    }
    let mut columns = Vec::new();
    for name in &table.header[1..] {
        let muscle: Muscle = name.parse().map_err(|_| Error::Parse {
            line: 1,
            message: format!("unknown muscle column `{name}`"),
        })?;
        if columns.contains(&muscle) {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate column `{name}`"),
            });
        }
        columns.push(muscle);
    }
    if let Some(m) = required.iter().find(|m| !columns.contains(m)) {
        return Err(Error::MissingChannel(m.label().into()));
    }
    let mut times = Vec::with_capacity(table.rows.len());
    let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(table.rows.len()); columns.len()];
    for (line, f) in &table.rows {
        times.push((*line, number(&f[0], *line, "time_s")?));
        for (k, col) in data.iter_mut().enumerate() {
            col.push(number(&f[k + 1], *line, columns[k].label())?);
        }
    }
    check_time_column(&times, expected_hz)?;
    EmgTrace::new(expected_hz, columns.into_iter().zip(data).collect())
}

pub fn write_emg<W: Write>(trace: &EmgTrace, out: W) -> Result<()> {
    let mut w = writer(out);
    let mut header = vec!["time_s".to_string()];
    header.extend(trace.muscles().map(|m| m.label().to_string()));
    w.write_record(&header)?;
    for i in 0..trace.len() {
        let mut rec = vec![(i as f64 / trace.sample_rate_hz).to_string()];
        rec.extend(trace.channels().values().map(|c| c[i].to_string()));
        w.write_record(&rec)?;
    }
    finish(w)
}

pub fn parse_imu<R: Read>(reader: R, expected_hz: f64) -> Result<ImuTrace> {
    let table = read_table(reader)?;
    expect_header(&table, &IMU_HEADER)?;
    let mut times = Vec::with_capacity(table.rows.len());
    let mut elevation = Vec::with_capacity(table.rows.len());
    for (line, f) in &table.rows {
        times.push((*line, number(&f[0], *line, "time_s")?));
        elevation.push(number(&f[1], *line, "elevation_deg")?);
    }
    check_time_column(&times, expected_hz)?;
    ImuTrace::new(expected_hz, elevation)
}

pub fn write_imu<W: Write>(trace: &ImuTrace, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(IMU_HEADER)?;
    for (i, v) in trace.elevation_deg.iter().enumerate() {
        w.write_record([(i as f64 / trace.sample_rate_hz).to_string(), v.to_string()])?;
    }
    finish(w)
}

pub fn parse_mvc<R: Read>(reader: R) -> Result<MvcTable> {
    let table = read_table(reader)?;
    expect_header(&table, &MVC_HEADER)?;
    let mut entries = BTreeMap::new();
    for (line, f) in &table.rows {
        let muscle: Muscle = f[0].parse().map_err(|_| Error::Parse {
            line: *line,
            message: format!("unknown muscle `{}`", f[0]),
        })?;
        let v = number(&f[1], *line, "mvc_v")?;
        if v <= 0.0 {
            return Err(Error::Validation {
                line: *line,
                message: format!("MVC for {muscle} must be positive"),
            });
        }
        if entries.insert(muscle, v).is_some() {
            return Err(Error::Validation {
                line: *line,
                message: format!("{muscle} listed twice"),
            });
        }
    }
    MvcTable::new(entries)
}

pub fn write_mvc<W: Write>(mvc: &MvcTable, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(MVC_HEADER)?;
    for (m, v) in mvc.entries() {
        w.write_record([m.label().to_string(), v.to_string()])?;
    }
    finish(w)
}

/// `movement,target_muscle,relative_reduction_pct`, reductions to 0.01 %.
pub fn write_report<W: Write>(rows: &[ReductionRow], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.movement.label().to_string(),
            r.target.abbreviation().to_string(),
            format!("{:.2}", r.reduction_pct),
        ])?;
    }
    finish(w)
}

/// One repetition listed in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestTrial {
    pub movement: String,
    pub condition: String,
    pub emg: PathBuf,
    pub imu: PathBuf,
}

fn default_emg_rate() -> f64 {
    crate::signals::EMG_SAMPLE_RATE_HZ
}

fn default_imu_rate() -> f64 {
    crate::signals::IMU_SAMPLE_RATE_HZ
}

/// TOML description of an EMG session. Relative paths are resolved against the
/// manifest's directory.
///
/// ```toml
/// muscles = ["lateral_deltoid", "posterior_deltoid"]
/// mvc = "mvc.csv"
///
/// [[trial]]
/// movement = "abduction"
/// condition = "unpowered"
/// emg = "abduction_unpowered_1_emg.csv"
/// imu = "abduction_unpowered_1_imu.csv"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialManifest {
    #[serde(default = "default_emg_rate")]
    pub emg_rate_hz: f64,
    #[serde(default = "default_imu_rate")]
    pub imu_rate_hz: f64,
    pub muscles: Vec<String>,
    pub mvc: PathBuf,
    #[serde(rename = "trial", default)]
    pub trials: Vec<ManifestTrial>,
}

impl TrialManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("manifest: {}", e.message())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("manifest: {e}")))
    }
}

/// Trial sets (grouped by movement and condition, in manifest order) and the
/// MVC table of an EMG session.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub trials: Vec<TrialSet>,
    pub mvc: MvcTable,
}

pub fn load_session(manifest_path: &Path) -> Result<Session> {
    let mut text = String::new();
    open(manifest_path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(manifest_path, e))?;
    let manifest = TrialManifest::from_toml(&text)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    parse_trials(&manifest, base)
}

/// Loads every file named by `manifest`, resolving relative paths against `base`.
pub fn parse_trials(manifest: &TrialManifest, base: &Path) -> Result<Session> {
    let muscles = manifest
        .muscles
        .iter()
        .map(|m| m.parse())
        .collect::<Result<Vec<Muscle>>>()?;
    if muscles.is_empty() {
        return Err(Error::Config("manifest lists no muscles".into()));
    }
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let with_path = |path: PathBuf, e: Error| match e {
        Error::Parse { line, message } | Error::Validation { line, message } => {
            Error::Config(format!("{}: line {line}: {message}", path.display()))
        }
        other => other,
    };

    let mvc_path = resolve(&manifest.mvc);
    let mvc = parse_mvc(open(&mvc_path)?).map_err(|e| with_path(mvc_path.clone(), e))?;
    for m in &muscles {
        mvc.get(*m)?;
    }

    let mut trials: Vec<TrialSet> = Vec::new();
    for entry in &manifest.trials {
        let movement: Movement = entry.movement.parse()?;
        let condition: Condition = entry.condition.parse()?;
        let emg_path = resolve(&entry.emg);
        let imu_path = resolve(&entry.imu);
        let emg =
            parse_emg(open(&emg_path)?, manifest.emg_rate_hz, &muscles).map_err(|e| with_path(emg_path.clone(), e))?;
        let imu = parse_imu(open(&imu_path)?, manifest.imu_rate_hz).map_err(|e| with_path(imu_path.clone(), e))?;
        let repetition = Repetition { emg, imu };
        match trials
            .iter_mut()
            .find(|t| t.movement == movement && t.condition == condition)
        {
            Some(set) => set.repetitions.push(repetition),
            None => trials.push(TrialSet {
                movement,
                condition,
                repetitions: vec![repetition],
            }),
        }
    }
    Ok(Session { trials, mvc })
}
