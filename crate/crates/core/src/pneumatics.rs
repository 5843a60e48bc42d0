//! Pressure regulation and first-order actuator dynamics.
//!
//! The regulator is modeled only by its contract (range, resolution, vent). Flow
//! limiting and bandwidth are folded into the actuator time constants, which are
//! identified from measured 10-90% rise times via `tau = t_r / ln 9`.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{free_bend_angle, ActuatorVariant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegulatorSpec {
    pub min_kpa: f64,
    pub max_kpa: f64,
    pub resolution_kpa: f64,
    pub bandwidth_hz: f64,
    pub supply_kpa: f64,
    pub flow_limit_slpm: f64,
    pub vent_supported: bool,
}

impl Default for RegulatorSpec {
    fn default() -> Self {
        Self {
            min_kpa: 10.0,
            max_kpa: 150.0,
            resolution_kpa: 1.0,
            bandwidth_hz: 10.0,
            supply_kpa: 250.0,
            flow_limit_slpm: 60.0,
            vent_supported: true,
        }
    }
}

impl RegulatorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_kpa < self.max_kpa && self.resolution_kpa > 0.0 && self.bandwidth_hz > 0.0) {
            return Err(Error::Config(format!("invalid regulator spec {self:?}")));
        }
        Ok(())
    }
}

/// Pressure the regulator actually delivers for a request.
///
/// Zero vents to atmosphere. Any other request is rounded to the resolution
/// step and clamped into `[min_kpa, max_kpa]`, so small nonzero requests come out
/// at the minimum.
pub fn regulator_command(spec: &RegulatorSpec, requested_kpa: f64) -> Result<f64> {
    if !(requested_kpa.is_finite() && requested_kpa >= 0.0) {
        return Err(Error::domain("requested pressure", requested_kpa, 0.0, f64::INFINITY));
    }
    if requested_kpa == 0.0 && spec.vent_supported {
        return Ok(0.0);
    }
    let stepped = (requested_kpa / spec.resolution_kpa).round() * spec.resolution_kpa;
    Ok(stepped.clamp(spec.min_kpa, spec.max_kpa))
}

/// Measured 10-90% rise times (inflate, deflate) in seconds.
pub fn measured_rise_times(variant_name: &str) -> Option<(f64, f64)> {
    match variant_name.to_ascii_uppercase().as_str() {
        "D1" => Some((4.72, 3.40)),
        "D2" => Some((2.12, 4.42)),
        "D3" => Some((3.62, 1.82)),
        _ => None,
    }
}

/// First-order time constant with the given 10-90% rise time.
pub fn tau_from_rise_time(rise_s: f64) -> Result<f64> {
    if !(rise_s.is_finite() && rise_s > 0.0) {
        return Err(Error::domain("rise time", rise_s, 0.0, f64::INFINITY));
    }
    Ok(rise_s / 9f64.ln())
}

pub type SteadyAngleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// First-order bend-angle dynamics with separate inflate and deflate constants.
#[derive(Clone)]
pub struct ActuatorDynamics {
    pub tau_inflate_s: f64,
    pub tau_deflate_s: f64,
    /// Steady-state bend angle (deg) reached at a held pressure (kPa).
    pub steady_angle: SteadyAngleFn,
}

impl fmt::Debug for ActuatorDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActuatorDynamics")
            .field("tau_inflate_s", &self.tau_inflate_s)
            .field("tau_deflate_s", &self.tau_deflate_s)
            .finish_non_exhaustive()
    }
}

impl ActuatorDynamics {
    /// Unloaded dynamics: the steady angle is the free-bend response.
    pub fn new(tau_inflate_s: f64, tau_deflate_s: f64) -> Result<Self> {
        for (name, tau) in [
            ("inflate time constant", tau_inflate_s),
            ("deflate time constant", tau_deflate_s),
        ] {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::domain(name, tau, 0.0, f64::INFINITY));
            }
        }
        Ok(Self {
            tau_inflate_s,
            tau_deflate_s,
            steady_angle: Arc::new(free_bend_angle),
        })
    }

    pub fn from_rise_times(rise_inflate_s: f64, rise_deflate_s: f64) -> Result<Self> {
        Self::new(tau_from_rise_time(rise_inflate_s)?, tau_from_rise_time(rise_deflate_s)?)
    }

    /// Dynamics identified from a characterized variant's rise times.
    pub fn for_variant(variant: &ActuatorVariant) -> Result<Self> {
        let (rise_in, rise_out) = measured_rise_times(&variant.name)
            .ok_or_else(|| Error::Config(format!("no measured rise times for variant `{}`", variant.name)))?;
        Self::from_rise_times(rise_in, rise_out)
    }

    /// Replaces the steady-state map, e.g. with a load-dependent one.
    pub fn with_steady_angle<F>(mut self, steady_angle: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.steady_angle = Arc::new(steady_angle);
        self
    }

    /// Time constant used when moving from `current` toward `target`.
    pub fn tau_toward(&self, current: f64, target: f64) -> f64 {
        if target > current {
            self.tau_inflate_s
        } else {
            self.tau_deflate_s
        }
    }

    /// Exact first-order update over `dt` with the target held constant.
    pub fn step(&self, current: f64, target: f64, dt_s: f64) -> f64 {
        let decay = (-dt_s / self.tau_toward(current, target)).exp();
        target + (current - target) * decay
    }
}

/// Uniformly sampled signal starting at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub dt_s: f64,
    pub values: Vec<f64>,
}

impl Waveform {
    pub fn new(dt_s: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt_s.is_finite() && dt_s > 0.0) {
            return Err(Error::domain("time step", dt_s, 0.0, f64::INFINITY));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite waveform value {bad}")));
        }
        Ok(Self { dt_s, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt_s
    }

    pub fn duration(&self) -> f64 {
        self.time(self.values.len().saturating_sub(1))
    }

    /// Sample-and-hold value at time `t`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t < 0.0 || self.values.is_empty() {
            return None;
        }
        let i = ((t / self.dt_s) + 1e-9).floor() as usize;
        self.values.get(i.min(self.values.len() - 1)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.time(i), v))
    }

    /// Writes `time_s,<value_column>` rows with a single header line.
    pub fn write_csv<W: Write>(&self, writer: W, value_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time_s", value_column])?;
        for (t, v) in self.iter() {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads a two-column waveform; the time step is taken from the first two rows.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "time_s" {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "expected `time_s,<value>` header, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 2,
                    message: format!("`{s}`: {e}"),
                })
            };
            times.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        let dt = if times.len() >= 2 { times[1] - times[0] } else { 1.0 };
        Self::new(dt, values)
    }
}

/// Square wave that starts on its high half: `high` while `t mod period < period/2`.
pub fn square_wave(period_s: f64, low_kpa: f64, high_kpa: f64, duration_s: f64, dt_s: f64) -> Result<Waveform> {
    if !(period_s.is_finite() && period_s > 0.0) {
        return Err(Error::domain("period", period_s, 0.0, f64::INFINITY));
    }
    if !(dt_s.is_finite() && dt_s > 0.0) {
        return Err(Error::domain("time step", dt_s, 0.0, f64::INFINITY));
    }
    if !(duration_s.is_finite() && duration_s >= 0.0) {
        return Err(Error::domain("duration", duration_s, 0.0, f64::INFINITY));
    }
    crate::error::check_range("low pressure", low_kpa, 0.0, crate::models::MAX_PRESSURE_KPA)?;
    crate::error::check_range("high pressure", high_kpa, low_kpa, crate::models::MAX_PRESSURE_KPA)?;
    let n = (duration_s / dt_s + 1e-9).floor() as usize + 1;
    let half = period_s / 2.0;
    let values = (0..n)
        .map(|i| {
            let t = i as f64 * dt_s;
            let phase = t - (t / period_s + 1e-12).floor() * period_s;
            if phase < half - 1e-9 {
                high_kpa
            } else {
                low_kpa
            }
        })
        .collect();
    Waveform::new(dt_s, values)
}

/// Bend-angle response to a pressure waveform.
///
/// The input is held over each step and the first-order system is advanced with
/// its exact exponential solution, so the output never overshoots its target.
pub fn simulate_first_order(dynamics: &ActuatorDynamics, input: &Waveform, y0_deg: f64) -> Result<Waveform> {
    if !(input.dt_s.is_finite() && input.dt_s > 0.0) {
        return Err(Error::domain("time step", input.dt_s, 0.0, f64::INFINITY));
    }
    let mut out = Vec::with_capacity(input.len());
    let mut y = y0_deg;
    for (i, &p) in input.values.iter().enumerate() {
        out.push(y);
        if i + 1 < input.len() {
            y = dynamics.step(y, (dynamics.steady_angle)(p), input.dt_s);
        }
    }
    Waveform::new(input.dt_s, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Inflate,
    Deflate,
}

impl Direction {
    fn label(self) -> &'static str {
        match self {
            Direction::Inflate => "inflate",
            Direction::Deflate => "deflate",
        }
    }
}

/// 10-90% rise time of the first transition in `direction`.
///
/// A transition is a maximal monotone run; its amplitude is the change from the
/// run's first to last sample. Crossing times are linearly interpolated. A
/// transition completed within a single sample interval is an instant step and
/// reports zero.
pub fn rise_time(trace: &Waveform, direction: Direction) -> Result<f64> {
    let sign = match direction {
        Direction::Inflate => 1.0,
        Direction::Deflate => -1.0,
    };
    let v: Vec<f64> = trace.values.iter().map(|x| sign * x).collect();
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let threshold = 1e-9 * scale;

    let mut i = 0;
    while i + 1 < v.len() {
        if v[i + 1] <= v[i] {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i + 1;
        while end + 1 < v.len() && v[end + 1] >= v[end] {
            end += 1;
        }
        let amplitude = v[end] - v[start];
        if amplitude > threshold {
            let lo = v[start] + 0.1 * amplitude;
            let hi = v[start] + 0.9 * amplitude;
            let (k_lo, t_lo) = crossing(&v[start..=end], lo);
            let (k_hi, t_hi) = crossing(&v[start..=end], hi);
            if k_lo == k_hi {
                return Ok(0.0);
            }
            return Ok((t_hi - t_lo) * trace.dt_s);
        }
        i = end;
    }
    Err(Error::TransitionNotFound(direction.label()))
}

/// First interval `k` with `run[k] < level <= run[k+1]` and the fractional index of the crossing.
fn crossing(run: &[f64], level: f64) -> (usize, f64) {
    for k in 0..run.len() - 1 {
        if run[k] < level && run[k + 1] >= level {
            let frac = (level - run[k]) / (run[k + 1] - run[k]);
            return (k, k as f64 + frac);
        }
    }
    let last = run.len() - 1;
    (last, last as f64)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn regulator_examples() {
        let spec = RegulatorSpec::default();
        assert_eq!(regulator_command(&spec, 85.4).unwrap(), 85.0);
        assert_eq!(regulator_command(&spec, 0.0).unwrap(), 0.0);
        assert_eq!(regulator_command(&spec, 200.0).unwrap(), 150.0);
        assert_eq!(regulator_command(&spec, 4.0).unwrap(), 10.0);
        assert!(regulator_command(&spec, -1.0).is_err());
        assert!(regulator_command(&spec, f64::NAN).is_err());
    }

    #[test]
    fn tau_examples() {
        assert_abs_diff_eq!(tau_from_rise_time(2.12).unwrap(), 0.965, epsilon = 5e-4);
        assert_abs_diff_eq!(tau_from_rise_time(9f64.ln()).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tau_from_rise_time(1.82).unwrap(), 0.828, epsilon = 5e-4);
        assert!(tau_from_rise_time(0.0).is_err());
        assert!(tau_from_rise_time(-2.0).is_err());
    }

    #[test]
    fn square_wave_examples() {
        let w = square_wave(60.0, 0.0, 80.0, 120.0, 0.01).unwrap();
        assert_eq!(w.len(), 12001);
        assert_eq!(w.value_at(10.0), Some(80.0));
        assert_eq!(w.value_at(40.0), Some(0.0));
        assert_eq!(w.value_at(70.0), Some(80.0));
        assert_eq!(w.value_at(0.0), Some(80.0));
        let flat = square_wave(60.0, 50.0, 50.0, 60.0, 0.01).unwrap();
        assert!(flat.values.iter().all(|&v| v == 50.0));
        assert!(square_wave(0.0, 0.0, 80.0, 10.0, 0.01).is_err());
        assert!(square_wave(60.0, 0.0, 80.0, 10.0, 0.0).is_err());
        assert!(square_wave(60.0, 80.0, 0.0, 10.0, 0.01).is_err());
    }

    #[test]
    fn first_order_step_matches_analytic() {
        let tau = 0.965;
        let dyn_ = ActuatorDynamics::new(tau, tau)
            .unwrap()
            .with_steady_angle(|p| if p > 0.0 { 90.0 } else { 0.0 });
        let dt = tau / 1000.0;
        let input = Waveform::new(dt, vec![80.0; 2001]).unwrap();
        let out = simulate_first_order(&dyn_, &input, 0.0).unwrap();
        assert_abs_diff_eq!(out.values[1000], 90.0 * (1.0 - (-1.0f64).exp()), epsilon = 1e-9);
        assert_abs_diff_eq!(out.values[1000], 56.9, epsilon = 0.05);
    }

    #[test]
    fn equilibrium_input_holds() {
        let dyn_ = ActuatorDynamics::new(1.3, 0.7).unwrap();
        let input = Waveform::new(0.01, vec![80.0; 500]).unwrap();
        let out = simulate_first_order(&dyn_, &input, 360.0).unwrap();
        assert!(out.values.iter().all(|&v| v == 360.0));
    }

    #[test]
    fn rise_time_of_ideal_first_order() {
        let tau = 1.0;
        let dt = 0.001;
        let values = (0..20_000).map(|i| 1.0 - (-(i as f64) * dt / tau).exp()).collect();
        let w = Waveform::new(dt, values).unwrap();
        assert_abs_diff_eq!(rise_time(&w, Direction::Inflate).unwrap(), 9f64.ln(), epsilon = 1e-5);
    }

    #[test]
    fn instant_step_has_zero_rise() {
        let w = Waveform::new(0.1, vec![0.0, 0.0, 0.0, 5.0, 5.0, 5.0]).unwrap();
        assert_eq!(rise_time(&w, Direction::Inflate).unwrap(), 0.0);
        let down = Waveform::new(0.1, vec![5.0, 5.0, 0.0, 0.0]).unwrap();
        assert_eq!(rise_time(&down, Direction::Deflate).unwrap(), 0.0);
    }

    #[test]
    fn flat_trace_has_no_transition() {
        let w = Waveform::new(0.1, vec![3.0; 50]).unwrap();
        assert!(matches!(
            rise_time(&w, Direction::Inflate),
            Err(Error::TransitionNotFound("inflate"))
        ));
        assert!(matches!(
            rise_time(&w, Direction::Deflate),
            Err(Error::TransitionNotFound("deflate"))
        ));
    }

    #[test]
    fn d1_inflation_rise_time() {
        let dyn_ = ActuatorDynamics::for_variant(&ActuatorVariant::d1()).unwrap();
        let input = square_wave(60.0, 0.0, 80.0, 120.0, 0.01).unwrap();
        let out = simulate_first_order(&dyn_, &input, 0.0).unwrap();
        let r = rise_time(&out, Direction::Inflate).unwrap();
        assert!((r - 4.72).abs() <= 0.01 * 4.72, "{r}");
        let r = rise_time(&out, Direction::Deflate).unwrap();
        assert!((r - 3.40).abs() <= 0.01 * 3.40, "{r}");
    }

    #[test]
    fn dt_must_be_positive() {
        assert!(Waveform::new(0.0, vec![1.0]).is_err());
        assert!(ActuatorDynamics::new(0.0, 1.0).is_err());
    }

    #[test]
    fn waveform_csv_round_trip() {
        let w = square_wave(1.0, 0.0, 80.0, 2.0, 0.25).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf, "pressure_kpa").unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_s,pressure_kpa\n0,80\n"));
        let back = Waveform::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, w);
    }

    mod properties {
        use proptest::prelude::*;

        use super::super::*;

        proptest! {
            #[test]
            fn regulator_idempotent(p in 0.0f64..300.0) {
                let spec = RegulatorSpec::default();
                let once = regulator_command(&spec, p).unwrap();
                prop_assert_eq!(regulator_command(&spec, once).unwrap(), once);
            }

            #[test]
            fn step_response_monotone_without_overshoot(
                tau_in in 0.2f64..5.0, tau_out in 0.2f64..5.0, y0 in 0.0f64..360.0, target in 0.0f64..360.0
            ) {
                let dyn_ = ActuatorDynamics::new(tau_in, tau_out).unwrap().with_steady_angle(move |_| target);
                let input = Waveform::new(0.01, vec![80.0; 2000]).unwrap();
                let out = simulate_first_order(&dyn_, &input, y0).unwrap();
                for w in out.values.windows(2) {
                    if target >= y0 {
                        prop_assert!(w[1] >= w[0] && w[1] <= target);
                    } else {
                        prop_assert!(w[1] <= w[0] && w[1] >= target);
                    }
                }
            }

            #[test]
            fn rise_time_round_trip(tau in 0.3f64..5.0) {
                let dyn_ = ActuatorDynamics::new(tau, tau).unwrap();
                let dt = tau / 100.0;
                let n = (12.0 * tau / dt) as usize;
                let input = Waveform::new(dt, vec![80.0; n]).unwrap();
                let out = simulate_first_order(&dyn_, &input, 0.0).unwrap();
                let back = tau_from_rise_time(rise_time(&out, Direction::Inflate).unwrap()).unwrap();
                prop_assert!((back - tau).abs() <= 0.01 * tau);
            }

            #[test]
            fn refinement_invariant(tau in 0.3f64..5.0, k in 1usize..8) {
                let dyn_ = ActuatorDynamics::new(tau, tau).unwrap();
                let coarse_dt = 0.05;
                let fine_dt = coarse_dt / k as f64;
                let coarse = simulate_first_order(&dyn_, &Waveform::new(coarse_dt, vec![80.0; 101]).unwrap(), 0.0).unwrap();
                let fine = simulate_first_order(&dyn_, &Waveform::new(fine_dt, vec![80.0; 100 * k + 1]).unwrap(), 0.0).unwrap();
                for i in 1..=100 {
                    let a = coarse.values[i];
                    let b = fine.values[i * k];
                    prop_assert!((a - b).abs() <= 1e-3 * a.abs().max(1e-9));
                }
            }
        }
    }
}
