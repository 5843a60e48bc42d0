//! Surface EMG and IMU processing: rectification, low-pass filtering, MVC
//! normalization, motion segmentation, repetition averaging, RMS envelopes and
//! the powered-versus-unpowered relative reduction.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EMG_SAMPLE_RATE_HZ: f64 = 2000.0;
pub const IMU_SAMPLE_RATE_HZ: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Muscle {
    AnteriorDeltoid,
    LateralDeltoid,
    PosteriorDeltoid,
    PectoralisMajor,
    Infraspinatus,
}

impl Muscle {
    pub const ALL: [Muscle; 5] = [
        Muscle::AnteriorDeltoid,
        Muscle::LateralDeltoid,
        Muscle::PosteriorDeltoid,
        Muscle::PectoralisMajor,
        Muscle::Infraspinatus,
    ];

    /// Column label used in data files.
    pub fn label(self) -> &'static str {
        match self {
            Muscle::AnteriorDeltoid => "anterior_deltoid",
            Muscle::LateralDeltoid => "lateral_deltoid",
            Muscle::PosteriorDeltoid => "posterior_deltoid",
            Muscle::PectoralisMajor => "pectoralis_major",
            Muscle::Infraspinatus => "infraspinatus",
        }
    }

    /// Short code used in reduction reports.
    pub fn abbreviation(self) -> &'static str {
        match self {
            Muscle::AnteriorDeltoid => "A",
            Muscle::LateralDeltoid => "L",
            Muscle::PosteriorDeltoid => "P",
            Muscle::PectoralisMajor => "PM",
            Muscle::Infraspinatus => "I",
        }
    }
}

impl fmt::Display for Muscle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Muscle {
    type Err = Error;

    /// Accepts the file label, spaced words, or the report abbreviation.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Muscle::ALL
            .into_iter()
            .find(|m| m.label() == key || m.abbreviation().eq_ignore_ascii_case(&key))
            .ok_or_else(|| Error::Config(format!("unknown muscle `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Loading,
    Unloading,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Movement {
    Abduction,
    Adduction,
    HorizontalFlexion,
    HorizontalExtension,
    ForwardFlexion,
    ForwardExtension,
}

impl Movement {
    pub const ALL: [Movement; 6] = [
        Movement::Abduction,
        Movement::Adduction,
        Movement::HorizontalFlexion,
        Movement::HorizontalExtension,
        Movement::ForwardFlexion,
        Movement::ForwardExtension,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Movement::Abduction => "abduction",
            Movement::Adduction => "adduction",
            Movement::HorizontalFlexion => "horizontal_flexion",
            Movement::HorizontalExtension => "horizontal_extension",
            Movement::ForwardFlexion => "forward_flexion",
            Movement::ForwardExtension => "forward_extension",
        }
    }

    /// Muscle whose activation is compared for this movement.
    pub fn target(self) -> Muscle {
        match self {
            Movement::Abduction | Movement::Adduction => Muscle::LateralDeltoid,
            Movement::HorizontalFlexion => Muscle::PectoralisMajor,
            Movement::HorizontalExtension | Movement::ForwardExtension => Muscle::PosteriorDeltoid,
            Movement::ForwardFlexion => Muscle::AnteriorDeltoid,
        }
    }

    /// Part of the raise-and-lower cycle that makes up this movement: raising
    /// movements use the rising segment, their reverses the falling one.
    pub fn phase(self) -> Phase {
        match self {
            Movement::Abduction | Movement::HorizontalFlexion | Movement::ForwardFlexion => Phase::Loading,
            Movement::Adduction | Movement::HorizontalExtension | Movement::ForwardExtension => Phase::Unloading,
        }
    }
}

impl fmt::Display for Movement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Movement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Movement::ALL
            .into_iter()
            .find(|m| m.label() == key)
            .ok_or_else(|| Error::Config(format!("unknown movement `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    Unpowered,
    Powered,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::Unpowered => "unpowered",
            Condition::Powered => "powered",
        }
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unpowered" => Ok(Condition::Unpowered),
            "powered" => Ok(Condition::Powered),
            _ => Err(Error::Config(format!("unknown condition `{s}`"))),
        }
    }
}

fn check_rate(rate_hz: f64) -> Result<()> {
    if rate_hz.is_finite() && rate_hz > 0.0 {
        Ok(())
    } else {
        Err(Error::domain("sample rate", rate_hz, 0.0, f64::INFINITY))
    }
}

/// Multi-channel EMG in volts (or any consistent unit), uniformly sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmgTrace {
    pub sample_rate_hz: f64,
    channels: BTreeMap<Muscle, Vec<f64>>,
}

impl EmgTrace {
    pub fn new(sample_rate_hz: f64, channels: BTreeMap<Muscle, Vec<f64>>) -> Result<Self> {
        check_rate(sample_rate_hz)?;
        let mut lengths = channels.values().map(Vec::len);
        if let Some(n) = lengths.next() {
            if lengths.any(|m| m != n) {
                return Err(Error::Contract("EMG channels differ in length".into()));
            }
        }
        for (muscle, samples) in &channels {
            if samples.iter().any(|v| !v.is_finite()) {
                return Err(Error::Contract(format!("non-finite sample in channel {muscle}")));
            }
        }
        Ok(Self {
            sample_rate_hz,
            channels,
        })
    }

    pub fn single(sample_rate_hz: f64, muscle: Muscle, samples: Vec<f64>) -> Result<Self> {
        Self::new(sample_rate_hz, BTreeMap::from([(muscle, samples)]))
    }

    pub fn len(&self) -> usize {
        self.channels.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn muscles(&self) -> impl Iterator<Item = Muscle> + '_ {
        self.channels.keys().copied()
    }

    pub fn channels(&self) -> &BTreeMap<Muscle, Vec<f64>> {
        &self.channels
    }

    pub fn channel(&self, muscle: Muscle) -> Result<&[f64]> {
        self.channels
            .get(&muscle)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingChannel(muscle.label().into()))
    }

    /// Trace restricted to one channel.
    pub fn select(&self, muscle: Muscle) -> Result<Self> {
        Ok(Self {
            sample_rate_hz: self.sample_rate_hz,
            channels: BTreeMap::from([(muscle, self.channel(muscle)?.to_vec())]),
        })
    }

    fn map_channels<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(Muscle, &[f64]) -> Result<Vec<f64>>,
    {
        let channels = self
            .channels
            .iter()
            .map(|(&m, x)| Ok((m, f(m, x)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            sample_rate_hz: self.sample_rate_hz,
            channels,
        })
    }
}

/// Upper-arm elevation relative to the chest, degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuTrace {
    pub sample_rate_hz: f64,
    pub elevation_deg: Vec<f64>,
}

impl ImuTrace {
    pub fn new(sample_rate_hz: f64, elevation_deg: Vec<f64>) -> Result<Self> {
        check_rate(sample_rate_hz)?;
        if elevation_deg.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("non-finite IMU sample".into()));
        }
        Ok(Self {
            sample_rate_hz,
            elevation_deg,
        })
    }
}

/// Per-muscle maximum voluntary contraction amplitudes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MvcTable(BTreeMap<Muscle, f64>);

impl MvcTable {
    pub fn new(entries: BTreeMap<Muscle, f64>) -> Result<Self> {
        for (muscle, &v) in &entries {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("MVC for {muscle} must be positive, got {v}")));
            }
        }
        Ok(Self(entries))
    }

    pub fn get(&self, muscle: Muscle) -> Result<f64> {
        self.0
            .get(&muscle)
            .copied()
            .ok_or_else(|| Error::Config(format!("no MVC entry for {muscle}")))
    }

    pub fn entries(&self) -> &BTreeMap<Muscle, f64> {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub emg: EmgTrace,
    pub imu: ImuTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSet {
    pub movement: Movement,
    pub condition: Condition,
    pub repetitions: Vec<Repetition>,
}

/// Elementwise absolute value.
pub fn rectify(trace: &EmgTrace) -> EmgTrace {
    trace
        .map_channels(|_, x| Ok(x.iter().map(|v| v.abs()).collect()))
        .expect("infallible")
}

/// Division of each channel by its MVC amplitude.
pub fn normalize_mvc(trace: &EmgTrace, mvc: &MvcTable) -> Result<EmgTrace> {
    trace.map_channels(|m, x| {
        let scale = mvc.get(m)?;
        Ok(x.iter().map(|v| v / scale).collect())
    })
}

/// One biquad, `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (self.a[0] + self.a[1] * z_inv + self.a[2] * z2)
    }
}

/// Cascade of second-order sections, run in transposed direct form II.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosFilter {
    pub sample_rate_hz: f64,
    pub sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn order(&self) -> usize {
        self.sections
            .iter()
            .map(|s| if s.a[2] == 0.0 && s.b[2] == 0.0 { 1 } else { 2 })
            .sum()
    }

    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / self.sample_rate_hz);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    pub fn magnitude_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.response(freq_hz).norm().log10()
    }

    /// Causal filtering from a zero initial state.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = input.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in out.iter_mut() {
                let x = *v;
                let y = s.b[0] * x + z1;
                z1 = s.b[1] * x - s.a[1] * y + z2;
                z2 = s.b[2] * x - s.a[2] * y;
                *v = y;
            }
        }
        out
    }
}

/// Chebyshev type II low-pass requirements.
///
/// With `order: None` the smallest order meeting both the passband ripple at
/// `passband_edge_hz` and the attenuation beyond `stopband_edge_hz` is used. The
/// stopband is designed `design_margin_db` deeper than required so that the
/// equiripple peaks clear the requirement under rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowpassSpec {
    pub passband_edge_hz: f64,
    pub passband_ripple_db: f64,
    pub stopband_edge_hz: f64,
    pub stopband_attenuation_db: f64,
    pub design_margin_db: f64,
    pub order: Option<usize>,
}

impl Default for LowpassSpec {
    fn default() -> Self {
        Self {
            passband_edge_hz: 20.0,
            passband_ripple_db: 1.0,
            stopband_edge_hz: 40.0,
            stopband_attenuation_db: 80.0,
            design_margin_db: 0.5,
            order: None,
        }
    }
}

impl LowpassSpec {
    fn check(&self, sample_rate_hz: f64) -> Result<()> {
        check_rate(sample_rate_hz)?;
        let nyquist = sample_rate_hz / 2.0;
        if self.stopband_edge_hz > nyquist {
            return Err(Error::FilterDesign(format!(
                "stopband edge {} Hz is above Nyquist ({nyquist} Hz)",
                self.stopband_edge_hz
            )));
        }
        if !(self.passband_edge_hz > 0.0 && self.passband_edge_hz < self.stopband_edge_hz) {
            return Err(Error::FilterDesign(
                "passband edge must lie in (0, stopband edge)".into(),
            ));
        }
        if !(self.passband_ripple_db > 0.0 && self.stopband_attenuation_db > 0.0 && self.design_margin_db >= 0.0) {
            return Err(Error::FilterDesign(
                "ripple, attenuation and margin must be positive".into(),
            ));
        }
        if self.order == Some(0) {
            return Err(Error::FilterDesign("order must be at least 1".into()));
        }
        Ok(())
    }

    fn design_attenuation_db(&self) -> f64 {
        self.stopband_attenuation_db + self.design_margin_db
    }

    /// Smallest order meeting the passband and stopband requirements.
    pub fn minimum_order(&self, sample_rate_hz: f64) -> Result<usize> {
        self.check(sample_rate_hz)?;
        let warp = |f: f64| (PI * f / sample_rate_hz).tan();
        let ratio = warp(self.stopband_edge_hz) / warp(self.passband_edge_hz);
        let discrimination = ((10f64.powf(self.design_attenuation_db() / 10.0) - 1.0)
            / (10f64.powf(self.passband_ripple_db / 10.0) - 1.0))
            .sqrt();
        Ok((discrimination.acosh() / ratio.acosh()).ceil() as usize)
    }

    /// Bilinear-transformed design with unity DC gain in every section.
    pub fn design(&self, sample_rate_hz: f64) -> Result<SosFilter> {
        let n = match self.order {
            Some(n) => {
                self.check(sample_rate_hz)?;
                n
            }
            None => self.minimum_order(sample_rate_hz)?,
        };
        let fs2 = 2.0 * sample_rate_hz;
        let edge = fs2 * (PI * self.stopband_edge_hz / sample_rate_hz).tan();
        let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);

        let eps = 1.0 / (10f64.powf(self.design_attenuation_db() / 10.0) - 1.0).sqrt();
        let mu = (1.0 / eps).asinh() / n as f64;
        // Upper-half-plane poles and zeros; the conjugates are implied.
        let mut poles = Vec::new();
        let mut zeros = Vec::new();
        let mut real_pole = None;
        for k in 0..n {
            let theta = PI * (2 * k + 1) as f64 / (2 * n) as f64;
            let proto = Complex64::new(-mu.sinh() * theta.sin(), mu.cosh() * theta.cos());
            let p = bilinear(edge / proto);
            if 2 * k + 1 == n {
                real_pole = Some(p.re);
            } else if p.im > 0.0 {
                poles.push(p);
            }
            let c = theta.cos();
            if c > 1e-12 {
                zeros.push(bilinear(Complex64::new(0.0, edge / c)));
            }
        }

        // Poles nearest the unit circle take the nearest zero first; sections are
        // ordered from the least to the most resonant.
        poles.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        let mut sections = Vec::with_capacity(n.div_ceil(2));
        for p in &poles {
            let (idx, _) = zeros
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (*a - p).norm().total_cmp(&(*b - p).norm()))
                .ok_or_else(|| Error::FilterDesign("zero/pole count mismatch".into()))?;
            let z = zeros.swap_remove(idx);
            sections.push(unity_dc(Biquad {
                b: [1.0, -2.0 * z.re, z.norm_sqr()],
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            }));
        }
        if let Some(p) = real_pole {
            sections.push(unity_dc(Biquad {
                b: [1.0, 1.0, 0.0],
                a: [1.0, -p, 0.0],
            }));
        }
        sections.reverse();
        Ok(SosFilter {
            sample_rate_hz,
            sections,
        })
    }
}

fn unity_dc(mut s: Biquad) -> Biquad {
    let gain = s.a.iter().sum::<f64>() / s.b.iter().sum::<f64>();
    for b in &mut s.b {
        *b *= gain;
    }
    s
}

/// Low-pass filters every channel with the design for the trace's sample rate.
pub fn lowpass(trace: &EmgTrace, spec: &LowpassSpec) -> Result<EmgTrace> {
    let filter = spec.design(trace.sample_rate_hz)?;
    trace.map_channels(|_, x| Ok(filter.apply(x)))
}

/// Trailing-window RMS; early samples use the shorter available window.
pub fn rms_envelope(samples: &[f64], window: usize) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { required: 1, got: 0 });
    }
    if window == 0 {
        return Err(Error::domain("RMS window", 0.0, 1.0, f64::INFINITY));
    }
    Ok((0..samples.len())
        .map(|i| {
            let w = &samples[(i + 1).saturating_sub(window)..=i];
            (w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64).sqrt()
        })
        .collect())
}

/// Root mean square of a whole series.
pub fn rms(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { required: 1, got: 0 });
    }
    Ok((samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64).sqrt())
}

/// Linear-interpolation resampling onto `points` evenly spaced positions.
pub fn resample(samples: &[f64], points: usize) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { required: 1, got: 0 });
    }
    if points < 2 {
        return Err(Error::domain("resample points", points as f64, 2.0, f64::INFINITY));
    }
    if samples.len() == 1 {
        return Ok(vec![samples[0]; points]);
    }
    let span = (samples.len() - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = i as f64 * span / (points - 1) as f64;
            let j = (x.floor() as usize).min(samples.len() - 2);
            let t = x - j as f64;
            samples[j] + t * (samples[j + 1] - samples[j])
        })
        .collect())
}

/// `100 · (unpowered − powered) / unpowered`; negative when activation rose.
pub fn relative_reduction(unpowered_rms: f64, powered_rms: f64) -> Result<f64> {
    if !(unpowered_rms.is_finite() && unpowered_rms > 0.0) {
        return Err(Error::UndefinedReduction(unpowered_rms));
    }
    if !powered_rms.is_finite() {
        return Err(Error::Contract(format!("non-finite powered RMS {powered_rms}")));
    }
    Ok(100.0 * (unpowered_rms - powered_rms) / unpowered_rms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentOptions {
    /// Elevation speed separating motion from rest, deg/s.
    pub threshold_deg_s: f64,
    /// Centered moving-average width applied before differentiating.
    pub smoothing_samples: usize,
    /// Shorter runs above threshold are treated as noise.
    pub min_run_samples: usize,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            threshold_deg_s: 5.0,
            smoothing_samples: 5,
            min_run_samples: 3,
        }
    }
}

/// One raise-and-lower cycle as EMG sample ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionCycle {
    pub loading: Range<usize>,
    pub unloading: Range<usize>,
}

impl MotionCycle {
    pub fn segment(&self, phase: Phase) -> Range<usize> {
        match phase {
            Phase::Loading => self.loading.clone(),
            Phase::Unloading => self.unloading.clone(),
        }
    }
}

fn smoothed(x: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..x.len())
        .map(|i| {
            let w = &x[i.saturating_sub(half)..(i + half + 1).min(x.len())];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

fn derivative(x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (x[hi] - x[lo]) / ((hi - lo) as f64 * dt)
        })
        .collect()
}

/// IMU sample ranges where elevation rises (`+1`) or falls (`-1`) faster than
/// the threshold, with same-direction runs merged across pauses.
fn motion_runs(imu: &ImuTrace, options: &SegmentOptions) -> Vec<(i8, Range<usize>)> {
    let x = &imu.elevation_deg;
    if x.len() < 2 {
        return Vec::new();
    }
    let speed = derivative(&smoothed(x, options.smoothing_samples.max(1)), 1.0 / imu.sample_rate_hz);
    let mut runs: Vec<(i8, Range<usize>)> = Vec::new();
    let mut i = 0;
    while i < speed.len() {
        let sign = if speed[i] > options.threshold_deg_s {
            1
        } else if speed[i] < -options.threshold_deg_s {
            -1
        } else {
            0
        };
        let start = i;
        while i < speed.len() && {
            let v = speed[i];
            match sign {
                1 => v > options.threshold_deg_s,
                -1 => v < -options.threshold_deg_s,
                _ => v.abs() <= options.threshold_deg_s,
            }
        } {
            i += 1;
        }
        if sign != 0 && i - start >= options.min_run_samples {
            match runs.last_mut() {
                Some((s, r)) if *s == sign => r.end = i,
                _ => runs.push((sign, start..i)),
            }
        }
    }
    runs
}

/// Splits a repetition into raise/lower cycles and maps them onto EMG samples.
///
/// A cycle is a rising run followed by the next falling run. EMG indices are the
/// IMU indices scaled by the sample-rate ratio.
pub fn segment_motion(
    imu: &ImuTrace,
    emg_len: usize,
    emg_rate_hz: f64,
    options: &SegmentOptions,
) -> Result<Vec<MotionCycle>> {
    check_rate(emg_rate_hz)?;
    let ratio = emg_rate_hz / imu.sample_rate_hz;
    let to_emg = |r: &Range<usize>| {
        let start = ((r.start as f64 * ratio).round() as usize).min(emg_len);
        let end = ((r.end as f64 * ratio).round() as usize).min(emg_len);
        start..end
    };
    let runs = motion_runs(imu, options);
    let mut cycles = Vec::new();
    let mut pending: Option<&Range<usize>> = None;
    for (sign, range) in &runs {
        match (sign, pending) {
            (1, _) => pending = Some(range),
            (-1, Some(up)) => {
                let cycle = MotionCycle {
                    loading: to_emg(up),
                    unloading: to_emg(range),
                };
                if !cycle.loading.is_empty() && !cycle.unloading.is_empty() {
                    cycles.push(cycle);
                }
                pending = None;
            }
            _ => {}
        }
    }
    if cycles.is_empty() {
        return Err(Error::Segmentation(format!(
            "no rise-and-fall cycle above {} deg/s",
            options.threshold_deg_s
        )));
    }
    Ok(cycles)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lowpass: LowpassSpec,
    pub segmentation: SegmentOptions,
    /// Length every segment is resampled to before averaging.
    pub resample_points: usize,
    pub envelope_window: usize,
    /// Required repetitions per trial set; `None` accepts any positive count.
    pub repetitions: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lowpass: LowpassSpec::default(),
            segmentation: SegmentOptions::default(),
            resample_points: 1000,
            envelope_window: 500,
            repetitions: Some(3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Rectified,
    Filtered,
    Normalized,
    Segmented,
    Averaged,
    Enveloped,
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub movement: Movement,
    pub target: Muscle,
    pub unpowered_rms: f64,
    pub powered_rms: f64,
    pub reduction_pct: f64,
}

/// Scalar activation of one trial set's target muscle in its movement phase.
pub fn trial_activation<O>(trial: &TrialSet, mvc: &MvcTable, config: &PipelineConfig, observer: &mut O) -> Result<f64>
where
    O: FnMut(Stage, Movement, Condition),
{
    let (movement, condition) = (trial.movement, trial.condition);
    if trial.repetitions.is_empty() || config.repetitions.is_some_and(|n| n != trial.repetitions.len()) {
        return Err(Error::IncompleteData(format!(
            "{} {}: expected {} repetitions, found {}",
            condition.label(),
            movement,
            config.repetitions.map_or("at least one".to_string(), |n| n.to_string()),
            trial.repetitions.len()
        )));
    }
    let target = movement.target();
    let mut segments = Vec::new();
    for rep in &trial.repetitions {
        let raw = rep.emg.select(target)?;
        let rectified = rectify(&raw);
        observer(Stage::Rectified, movement, condition);
        let filtered = lowpass(&rectified, &config.lowpass)?;
        observer(Stage::Filtered, movement, condition);
        let normalized = normalize_mvc(&filtered, mvc)?;
        observer(Stage::Normalized, movement, condition);
        let channel = normalized.channel(target)?;
        let cycles = segment_motion(&rep.imu, channel.len(), normalized.sample_rate_hz, &config.segmentation)?;
        observer(Stage::Segmented, movement, condition);
        for cycle in cycles {
            segments.push(resample(
                &channel[cycle.segment(movement.phase())],
                config.resample_points,
            )?);
        }
    }
    let count = segments.len() as f64;
    let averaged: Vec<f64> = (0..config.resample_points)
        .map(|i| segments.iter().map(|s| s[i]).sum::<f64>() / count)
        .collect();
    observer(Stage::Averaged, movement, condition);
    let envelope = rms_envelope(&averaged, config.envelope_window)?;
    observer(Stage::Enveloped, movement, condition);
    rms(&envelope)
}

/// Relative reduction per movement, in canonical movement order.
pub fn emg_report(trials: &[TrialSet], mvc: &MvcTable, config: &PipelineConfig) -> Result<Vec<ReductionRow>> {
    emg_report_observed(trials, mvc, config, |_, _, _| {})
}

/// [`emg_report`] reporting each completed processing stage to `observer`.
pub fn emg_report_observed<O>(
    trials: &[TrialSet],
    mvc: &MvcTable,
    config: &PipelineConfig,
    mut observer: O,
) -> Result<Vec<ReductionRow>>
where
    O: FnMut(Stage, Movement, Condition),
{
    let find = |movement: Movement, condition: Condition| -> Result<Option<&TrialSet>> {
        let mut hits = trials
            .iter()
            .filter(|t| t.movement == movement && t.condition == condition);
        let first = hits.next();
        if hits.next().is_some() {
            return Err(Error::Config(format!(
                "duplicate {} trial set for {movement}",
                condition.label()
            )));
        }
        Ok(first)
    };
    let mut rows = Vec::new();
    for movement in Movement::ALL {
        let (unpowered, powered) = match (
            find(movement, Condition::Unpowered)?,
            find(movement, Condition::Powered)?,
        ) {
            (None, None) => continue,
            (Some(u), Some(p)) => (u, p),
            (u, _) => {
                let missing = if u.is_none() {
                    Condition::Unpowered
                } else {
                    Condition::Powered
                };
                return Err(Error::IncompleteData(format!(
                    "{movement} has no {} trial set",
                    missing.label()
                )));
            }
        };
        let u = trial_activation(unpowered, mvc, config, &mut observer)?;
        let p = trial_activation(powered, mvc, config, &mut observer)?;
        let reduction_pct = relative_reduction(u, p)?;
        observer(Stage::Reduced, movement, Condition::Powered);
        rows.push(ReductionRow {
            movement,
            target: movement.target(),
            unpowered_rms: u,
            powered_rms: p,
            reduction_pct,
        });
    }
    if rows.is_empty() {
        return Err(Error::IncompleteData("no trial sets".into()));
    }
    Ok(rows)
}
