//! Least-squares fits of the torque-angle and torque-pressure models.
//!
//! The double exponential is fitted by Levenberg-Marquardt from a fixed grid of
//! decay-rate starts; the amplitudes for each start come from the linear
//! sub-problem, so only the rates need a guess. The pressure line is closed form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{self, LmOptions};
use crate::models::{canonical_order, ActuatorVariant, TorqueModel, MAX_AA_ANGLE_DEG, MAX_PRESSURE_KPA};

/// One observation: angle (deg) or pressure (kPa) against torque (N-m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample2D {
    pub x: f64,
    pub y: f64,
}

impl Sample2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl From<(f64, f64)> for Sample2D {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Parameters of `a·exp(b·x) + c·exp(d·x)` with `b <= d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpPairParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl ExpPairParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        let (a, b, c, d) = canonical_order(a, b, c, d);
        Self { a, b, c, d }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.a * (self.b * x).exp() + self.c * (self.d * x).exp()
    }

    pub fn to_model(&self) -> TorqueModel {
        TorqueModel::new(self.a, self.b, self.c, self.d)
    }
}

/// Parameters of `a·exp(b·x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleExpParams {
    pub a: f64,
    pub b: f64,
}

impl SingleExpParams {
    pub fn eval(&self, x: f64) -> f64 {
        self.a * (self.b * x).exp()
    }
}

/// Parameters of `f·x + g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub f: f64,
    pub g: f64,
}

impl LinearParams {
    pub fn eval(&self, x: f64) -> f64 {
        self.f * x + self.g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<P> {
    pub parameters: P,
    /// Coefficient of determination on the fitted samples. For constant
    /// observations it is 1 when the residual vanishes and NaN otherwise.
    pub r_squared: f64,
    /// Euclidean norm of the residual vector, N-m.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Decay-rate grid (per degree) for the multi-start.
pub const DEFAULT_RATE_GRID: [f64; 5] = [-0.05, -0.02, -0.005, 0.0, 0.01];

/// Coefficient of determination `1 - SS_res / SS_tot`. Not clamped: a predictor
/// worse than the mean gives a negative value.
pub fn r_squared<F>(samples: &[Sample2D], predictor: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            got: samples.len(),
        });
    }
    let mean = samples.iter().map(|s| s.y).sum::<f64>() / samples.len() as f64;
    let ss_tot: f64 = samples.iter().map(|s| (s.y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedRSquared);
    }
    let ss_res: f64 = samples.iter().map(|s| (s.y - predictor(s.x)).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn report_r_squared<F: Fn(f64) -> f64>(samples: &[Sample2D], predictor: F, residual_norm: f64) -> f64 {
    match r_squared(samples, predictor) {
        Ok(r2) => r2,
        Err(_) if residual_norm <= 1e-12 => 1.0,
        Err(_) => f64::NAN,
    }
}

fn validate(samples: &[Sample2D], required: usize, x_name: &'static str, x_max: f64) -> Result<()> {
    if samples.len() < required {
        return Err(Error::InsufficientData {
            required,
            got: samples.len(),
        });
    }
    for s in samples {
        if !s.y.is_finite() {
            return Err(Error::Contract(format!("non-finite torque sample {}", s.y)));
        }
        crate::error::check_range(x_name, s.x, 0.0, x_max)?;
    }
    Ok(())
}

/// Least-squares amplitudes of `a·exp(b·x) + c·exp(d·x)` for fixed rates.
fn linear_amplitudes(samples: &[Sample2D], b: f64, d: f64) -> Option<(f64, f64)> {
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let e1 = (b * s.x).exp();
        let e2 = (d * s.x).exp();
        s11 += e1 * e1;
        s12 += e1 * e2;
        s22 += e2 * e2;
        t1 += e1 * s.y;
        t2 += e2 * s.y;
    }
    let det = s11 * s22 - s12 * s12;
    if !det.is_finite() || det.abs() <= 1e-12 * (s11 * s22).abs() {
        return None;
    }
    Some(((t1 * s22 - t2 * s12) / det, (s11 * t2 - s12 * t1) / det))
}

fn exp_pair_residuals(samples: &[Sample2D], p: &DVector<f64>) -> Option<DVector<f64>> {
    let r = DVector::from_iterator(
        samples.len(),
        samples
            .iter()
            .map(|s| p[0] * (p[1] * s.x).exp() + p[2] * (p[3] * s.x).exp() - s.y),
    );
    r.iter().all(|v| v.is_finite()).then_some(r)
}

fn exp_pair_jacobian(samples: &[Sample2D], p: &DVector<f64>) -> Option<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(samples.len(), 4);
    for (i, s) in samples.iter().enumerate() {
        let e1 = (p[1] * s.x).exp();
        let e2 = (p[3] * s.x).exp();
        jac[(i, 0)] = e1;
        jac[(i, 1)] = p[0] * s.x * e1;
        jac[(i, 2)] = e2;
        jac[(i, 3)] = p[2] * s.x * e2;
    }
    jac.iter().all(|v| v.is_finite()).then_some(jac)
}

fn run_exp_pair(samples: &[Sample2D], start: DVector<f64>) -> Option<lm::LmOutcome> {
    lm::minimize(
        start,
        |p| exp_pair_residuals(samples, p),
        |p| exp_pair_jacobian(samples, p),
        LmOptions::default(),
    )
}

/// Fits `T(A) = a·exp(b·A) + c·exp(d·A)` to torque-angle samples.
///
/// With `init = None` every pair `b < d` from [`DEFAULT_RATE_GRID`] is tried,
/// followed by one start seeded from the best single-exponential fit. The
/// lowest-residual start wins, ties going to the earlier start; if it did not
/// converge the result is [`Error::FitFailure`] carrying that attempt.
pub fn fit_torque_angle(samples: &[Sample2D], init: Option<[f64; 4]>) -> Result<FitReport<ExpPairParams>> {
    validate(samples, 4, "A-A' angle", MAX_AA_ANGLE_DEG)?;

    let starts: Vec<DVector<f64>> = match init {
        Some(p) => vec![DVector::from_column_slice(&p)],
        None => {
            let mut starts = Vec::new();
            for (i, &b) in DEFAULT_RATE_GRID.iter().enumerate() {
                for &d in &DEFAULT_RATE_GRID[i + 1..] {
                    if let Some((a, c)) = linear_amplitudes(samples, b, d) {
                        starts.push(DVector::from_vec(vec![a, b, c, d]));
                    }
                }
            }
            if let Ok(single) = fit_single_exponential(samples) {
                let SingleExpParams { a, b } = single.parameters;
                starts.push(DVector::from_vec(vec![a, b, 0.0, b + 0.01]));
            }
            starts
        }
    };

    let mut best: Option<lm::LmOutcome> = None;
    let mut best_converged: Option<lm::LmOutcome> = None;
    for start in starts {
        let Some(outcome) = run_exp_pair(samples, start) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| outcome.cost < b.cost) {
            best = Some(outcome.clone());
        }
        if outcome.converged && best_converged.as_ref().is_none_or(|b| outcome.cost < b.cost) {
            best_converged = Some(outcome);
        }
    }

    let to_report = |o: &lm::LmOutcome| {
        let p = &o.params;
        let parameters = ExpPairParams::new(p[0], p[1], p[2], p[3]);
        let residual_norm = (2.0 * o.cost).sqrt();
        FitReport {
            parameters,
            r_squared: report_r_squared(samples, |x| parameters.eval(x), residual_norm),
            residual_norm,
            iterations: o.iterations,
            converged: o.converged,
        }
    };

    // A converged start only wins if no diverging start found a clearly lower cost;
    // otherwise the least-squares infimum is not attained.
    match (best_converged, best) {
        (Some(c), Some(b)) if c.cost <= b.cost * (1.0 + 1e-6) + 1e-30 => Ok(to_report(&c)),
        (_, Some(b)) => Err(Error::FitFailure {
            best: Box::new(to_report(&b)),
        }),
        (_, None) => Err(Error::FitFailure {
            best: Box::new(FitReport {
                parameters: ExpPairParams::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN),
                r_squared: f64::NAN,
                residual_norm: f64::INFINITY,
                iterations: 0,
                converged: false,
            }),
        }),
    }
}

/// Fits `T(A) = a·exp(b·A)`; used as a comparison baseline and to seed the pair fit.
pub fn fit_single_exponential(samples: &[Sample2D]) -> Result<FitReport<SingleExpParams>> {
    validate(samples, 2, "A-A' angle", MAX_AA_ANGLE_DEG)?;
    let residuals = |p: &DVector<f64>| {
        let r = DVector::from_iterator(samples.len(), samples.iter().map(|s| p[0] * (p[1] * s.x).exp() - s.y));
        r.iter().all(|v| v.is_finite()).then_some(r)
    };
    let jacobian = |p: &DVector<f64>| {
        let mut jac = DMatrix::zeros(samples.len(), 2);
        for (i, s) in samples.iter().enumerate() {
            let e = (p[1] * s.x).exp();
            jac[(i, 0)] = e;
            jac[(i, 1)] = p[0] * s.x * e;
        }
        jac.iter().all(|v| v.is_finite()).then_some(jac)
    };

    let mut best: Option<lm::LmOutcome> = None;
    for b in [-0.05, -0.02, -0.005, 0.0, 0.005] {
        let (num, den) = samples.iter().fold((0.0, 0.0), |(n, d), s| {
            let e = (b * s.x).exp();
            (n + e * s.y, d + e * e)
        });
        let Some(out) = lm::minimize(
            DVector::from_vec(vec![num / den, b]),
            residuals,
            jacobian,
            LmOptions::default(),
        ) else {
            continue;
        };
        if best.as_ref().is_none_or(|o| out.cost < o.cost) {
            best = Some(out);
        }
    }
    let o = best.ok_or_else(|| Error::DegenerateDesign("single exponential not evaluable".into()))?;
    let parameters = SingleExpParams {
        a: o.params[0],
        b: o.params[1],
    };
    let residual_norm = (2.0 * o.cost).sqrt();
    Ok(FitReport {
        parameters,
        r_squared: report_r_squared(samples, |x| parameters.eval(x), residual_norm),
        residual_norm,
        iterations: o.iterations,
        converged: o.converged,
    })
}

/// Fits the torque-pressure line `T(P) = f·P + g`; with `fix_g_to_zero` the line
/// passes through the origin.
pub fn fit_torque_pressure(samples: &[Sample2D], fix_g_to_zero: bool) -> Result<FitReport<LinearParams>> {
    validate(samples, 2, "pressure", MAX_PRESSURE_KPA)?;
    let n = samples.len() as f64;
    let parameters = if fix_g_to_zero {
        let sxx: f64 = samples.iter().map(|s| s.x * s.x).sum();
        if sxx == 0.0 {
            return Err(Error::DegenerateDesign("all pressures are zero".into()));
        }
        let sxy: f64 = samples.iter().map(|s| s.x * s.y).sum();
        LinearParams { f: sxy / sxx, g: 0.0 }
    } else {
        let mx = samples.iter().map(|s| s.x).sum::<f64>() / n;
        let my = samples.iter().map(|s| s.y).sum::<f64>() / n;
        let sxx: f64 = samples.iter().map(|s| (s.x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::DegenerateDesign("all pressures are identical".into()));
        }
        let sxy: f64 = samples.iter().map(|s| (s.x - mx) * (s.y - my)).sum();
        let f = sxy / sxx;
        LinearParams { f, g: my - f * mx }
    };
    let residual_norm = samples
        .iter()
        .map(|s| (s.y - parameters.eval(s.x)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(FitReport {
        parameters,
        r_squared: report_r_squared(samples, |x| parameters.eval(x), residual_norm),
        residual_norm,
        iterations: 0,
        converged: true,
    })
}

/// The four torque anchors of a variant as samples at 0°, 90°, 180° and 270°.
pub fn anchor_samples(variant: &ActuatorVariant) -> [Sample2D; 4] {
    [
        Sample2D::new(0.0, variant.peak_torque_nm),
        Sample2D::new(90.0, variant.torque_90_nm),
        Sample2D::new(180.0, variant.plateau_torque_nm),
        Sample2D::new(270.0, variant.plateau_torque_nm),
    ]
}

/// Angles at which the plateau torque is matched in least squares.
pub const PLATEAU_ANGLES_DEG: [f64; 7] = [180.0, 195.0, 210.0, 225.0, 240.0, 255.0, 270.0];

const DERIVE_SLOW_RATES: [f64; 5] = [-0.05, -0.03, -0.02, -0.01, -0.005];
const DERIVE_FAST_RATES: [f64; 6] = [-0.005, 0.0, 0.005, 0.01, 0.02, 0.03];

/// Amplitudes that make the curve pass exactly through the 0° and 90° anchors.
fn pinned_amplitudes(peak: f64, torque_90: f64, b: f64, d: f64) -> Option<(f64, f64)> {
    let eb = (90.0 * b).exp();
    let ed = (90.0 * d).exp();
    let det = ed - eb;
    if !det.is_finite() || det.abs() < 1e-12 {
        return None;
    }
    Some(((peak * ed - torque_90) / det, (torque_90 - peak * eb) / det))
}

/// Reference torque model for a variant's anchors.
///
/// The peak (0°) and 90° torques are interpolated exactly; the decay rates are then
/// chosen to match the plateau torque in least squares over [`PLATEAU_ANGLES_DEG`].
/// A double exponential cannot in general hold a flat plateau after a steep
/// decline, so the plateau is matched only approximately (D2 and D3 deviate by up
/// to a few tenths of a N-m). Equal anchors give the constant model.
pub fn derive_reference_model(variant: &ActuatorVariant) -> Result<TorqueModel> {
    let peak = variant.peak_torque_nm;
    let torque_90 = variant.torque_90_nm;
    let plateau = variant.plateau_torque_nm;
    if peak == torque_90 && torque_90 == plateau {
        return Ok(TorqueModel::new(peak, 0.0, 0.0, 0.0).with_pressure_line(peak / 80.0, 0.0));
    }

    let residuals = |p: &DVector<f64>| {
        let (a, c) = pinned_amplitudes(peak, torque_90, p[0], p[1])?;
        let r = DVector::from_iterator(
            PLATEAU_ANGLES_DEG.len(),
            PLATEAU_ANGLES_DEG
                .iter()
                .map(|&x| a * (p[0] * x).exp() + c * (p[1] * x).exp() - plateau),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    };
    let jacobian = |p: &DVector<f64>| lm::numeric_jacobian(p, &residuals);

    let mut best: Option<lm::LmOutcome> = None;
    for &b in &DERIVE_SLOW_RATES {
        for &d in &DERIVE_FAST_RATES {
            if b >= d {
                continue;
            }
            let Some(out) = lm::minimize(DVector::from_vec(vec![b, d]), residuals, jacobian, LmOptions::default())
            else {
                continue;
            };
            let Some((a, c)) = pinned_amplitudes(peak, torque_90, out.params[0], out.params[1]) else {
                continue;
            };
            let candidate = TorqueModel::new(a, out.params[0], c, out.params[1]);
            let positive = (0..=270).all(|deg| candidate.reference_curve(deg as f64) > 0.0);
            if positive && best.as_ref().is_none_or(|o| out.cost < o.cost) {
                best = Some(out);
            }
        }
    }

    let out = best.ok_or_else(|| {
        let parameters = ExpPairParams::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN);
        Error::FitFailure {
            best: Box::new(FitReport {
                parameters,
                r_squared: f64::NAN,
                residual_norm: f64::INFINITY,
                iterations: 0,
                converged: false,
            }),
        }
    })?;
    let (b, d) = (out.params[0], out.params[1]);
    let (a, c) = pinned_amplitudes(peak, torque_90, b, d).expect("checked above");
    Ok(TorqueModel::new(a, b, c, d).with_pressure_line(torque_90 / 80.0, 0.0))
}
