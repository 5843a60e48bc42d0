//! Actuator geometry and static torque models.
//!
//! The bending actuator is characterized at a reference pressure of 80 kPa by a
//! double exponential in the A-A' bend angle,
//!
//! ```text
//! T_ref(A) = a·exp(b·A) + c·exp(d·A)
//! ```
//!
//! and, at a fixed angle, by a line in pressure `T(P) = f·P + g`. Because torque is
//! linear in pressure, the combined predictor scales the reference curve:
//!
//! ```text
//! T(A, P) = (P / 80) · T_ref(A)
//! ```
//!
//! The combined formula is sometimes printed as `T = 80P / (a·e^{bA} + c·e^{dA})`,
//! which is not dimensionally consistent with the reference curve and does not
//! reduce to it at 80 kPa. The ratio form above is what this crate implements.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Pressure at which the torque-angle curve is characterized.
pub const REFERENCE_PRESSURE_KPA: f64 = 80.0;
/// Upper end of the A-A' angle range (hyper-extended).
pub const MAX_AA_ANGLE_DEG: f64 = 270.0;
/// Upper end of the B-B' twist range exercised on the platform.
pub const MAX_BB_ANGLE_DEG: f64 = 45.0;
/// Highest pressure the regulator can deliver.
pub const MAX_PRESSURE_KPA: f64 = 150.0;
/// Module spacing used by every characterized variant.
pub const MODULE_SPACING_MM: f64 = 25.0;
/// Pressure above which the free actuator is fully curled.
pub const FULL_BEND_PRESSURE_KPA: f64 = 10.0;
/// Representable free-bend angle once fully curled.
pub const FULL_BEND_ANGLE_DEG: f64 = 360.0;

/// One inflation module: a sealed pouch of given length and width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub label: String,
    pub length_mm: f64,
    pub width_mm: f64,
}

impl ModuleSpec {
    pub fn new(label: impl Into<String>, length_mm: f64, width_mm: f64) -> Result<Self> {
        let label = label.into();
        if !(length_mm.is_finite() && length_mm > 0.0 && width_mm.is_finite() && width_mm > 0.0) {
            return Err(Error::Config(format!(
                "module {label}: dimensions must be positive, got {length_mm} x {width_mm} mm"
            )));
        }
        Ok(Self {
            label,
            length_mm,
            width_mm,
        })
    }

    /// Bridging module, 65 x 55 mm.
    pub fn a() -> Self {
        Self::new("A", 65.0, 55.0).unwrap()
    }

    /// Long narrow module, 90 x 55 mm.
    pub fn b() -> Self {
        Self::new("B", 90.0, 55.0).unwrap()
    }

    /// Long wide module, 90 x 65 mm.
    pub fn c() -> Self {
        Self::new("C", 90.0, 65.0).unwrap()
    }
}

/// Actuator built from eight modules on a spine, with its measured torque anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorVariant {
    pub name: String,
    pub pattern: Vec<ModuleSpec>,
    pub spacing_mm: f64,
    /// Torque at A = 0°, 80 kPa.
    pub peak_torque_nm: f64,
    /// Torque at A = 90°, 80 kPa.
    pub torque_90_nm: f64,
    /// Roughly constant torque over 180°..270°, 80 kPa.
    pub plateau_torque_nm: f64,
}

impl ActuatorVariant {
    pub fn custom(
        name: impl Into<String>,
        pattern: Vec<ModuleSpec>,
        spacing_mm: f64,
        peak_torque_nm: f64,
        torque_90_nm: f64,
        plateau_torque_nm: f64,
    ) -> Result<Self> {
        let name = name.into();
        if pattern.is_empty() {
            return Err(Error::Config(format!("variant {name}: empty module pattern")));
        }
        if !(spacing_mm.is_finite() && spacing_mm > 0.0) {
            return Err(Error::Config(format!(
                "variant {name}: spacing must be positive, got {spacing_mm}"
            )));
        }
        for (label, v) in [
            ("peak", peak_torque_nm),
            ("90°", torque_90_nm),
            ("plateau", plateau_torque_nm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "variant {name}: {label} torque must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            name,
            pattern,
            spacing_mm,
            peak_torque_nm,
            torque_90_nm,
            plateau_torque_nm,
        })
    }

    fn alternating(name: &str, first: ModuleSpec, second: ModuleSpec, anchors: [f64; 3]) -> Self {
        let pattern = (0..8)
            .map(|i| if i % 2 == 0 { first.clone() } else { second.clone() })
            .collect();
        Self::custom(name, pattern, MODULE_SPACING_MM, anchors[0], anchors[1], anchors[2]).unwrap()
    }

    /// Eight bridging modules.
    pub fn d1() -> Self {
        Self::alternating("D1", ModuleSpec::a(), ModuleSpec::a(), [10.24, 1.27, 0.84])
    }

    /// Alternating A/B modules.
    pub fn d2() -> Self {
        Self::alternating("D2", ModuleSpec::a(), ModuleSpec::b(), [11.15, 4.44, 1.54])
    }

    /// Alternating A/C modules.
    pub fn d3() -> Self {
        Self::alternating("D3", ModuleSpec::a(), ModuleSpec::c(), [15.54, 4.66, 1.80])
    }

    /// Looks up one of the characterized variants by name (case-insensitive).
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "D1" => Ok(Self::d1()),
            "D2" => Ok(Self::d2()),
            "D3" => Ok(Self::d3()),
            _ => Err(Error::Config(format!("unknown actuator variant `{name}`"))),
        }
    }

    pub fn characterized() -> [Self; 3] {
        [Self::d1(), Self::d2(), Self::d3()]
    }

    /// Pattern as a label string, e.g. `ABABABAB`.
    pub fn pattern_string(&self) -> String {
        self.pattern.iter().map(|m| m.label.as_str()).collect()
    }

    /// Reference torque model derived from the anchors. Derivations are memoized
    /// per distinct anchor triple for the life of the process.
    pub fn reference_model(&self) -> Result<TorqueModel> {
        static CACHE: OnceLock<Mutex<HashMap<[u64; 3], TorqueModel>>> = OnceLock::new();
        let key = [self.peak_torque_nm, self.torque_90_nm, self.plateau_torque_nm].map(f64::to_bits);
        let cache = CACHE.get_or_init(Default::default);
        if let Some(model) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(*model);
        }
        let model = crate::fitting::derive_reference_model(self)?;
        cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, model);
        Ok(model)
    }
}

/// Parameters of the torque-angle and torque-pressure models.
///
/// `b` and `d` are per degree. Construct through [`TorqueModel::new`] to get the
/// canonical ordering `b <= d`; the double exponential is symmetric under swapping
/// `(a, b)` with `(c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorqueModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Torque-pressure slope, N-m/kPa.
    pub f: f64,
    /// Torque-pressure intercept, N-m.
    pub g: f64,
    pub reference_pressure_kpa: f64,
}

impl TorqueModel {
    /// Double-exponential model; the pressure line defaults to the one through the
    /// origin and the model's own 90° reference torque.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        let (a, b, c, d) = canonical_order(a, b, c, d);
        let mut model = Self {
            a,
            b,
            c,
            d,
            f: 0.0,
            g: 0.0,
            reference_pressure_kpa: REFERENCE_PRESSURE_KPA,
        };
        model.f = model.reference_curve(90.0) / REFERENCE_PRESSURE_KPA;
        model
    }

    pub fn with_pressure_line(mut self, f: f64, g: f64) -> Self {
        self.f = f;
        self.g = g;
        self
    }

    /// Unchecked evaluation of `a·exp(b·A) + c·exp(d·A)`.
    pub fn reference_curve(&self, aa_angle_deg: f64) -> f64 {
        self.a * (self.b * aa_angle_deg).exp() + self.c * (self.d * aa_angle_deg).exp()
    }

    fn check_finite(&self) -> Result<()> {
        let p = [
            self.a,
            self.b,
            self.c,
            self.d,
            self.f,
            self.g,
            self.reference_pressure_kpa,
        ];
        if p.iter().all(|v| v.is_finite()) && self.reference_pressure_kpa > 0.0 {
            Ok(())
        } else {
            Err(Error::Contract(format!("non-finite torque model parameters {self:?}")))
        }
    }

    /// Blocked torque at the reference pressure.
    pub fn torque_at_reference(&self, aa_angle_deg: f64) -> Result<f64> {
        check_range("A-A' angle", aa_angle_deg, 0.0, MAX_AA_ANGLE_DEG)?;
        self.check_finite()?;
        Ok(self.reference_curve(aa_angle_deg))
    }

    /// Torque from the pressure line `f·P + g` at the angle the line was fitted.
    pub fn torque_at_pressure(&self, pressure_kpa: f64) -> Result<f64> {
        check_range("pressure", pressure_kpa, 0.0, MAX_PRESSURE_KPA)?;
        self.check_finite()?;
        Ok(self.f * pressure_kpa + self.g)
    }

    /// Torque at any angle and pressure: `(P / P_ref) · T_ref(A)`.
    pub fn predict_torque(&self, aa_angle_deg: f64, pressure_kpa: f64) -> Result<f64> {
        check_range("pressure", pressure_kpa, 0.0, MAX_PRESSURE_KPA)?;
        let reference = self.torque_at_reference(aa_angle_deg)?;
        if pressure_kpa == self.reference_pressure_kpa {
            return Ok(reference);
        }
        Ok(pressure_kpa / self.reference_pressure_kpa * reference)
    }

    /// Straightening torque about the B-B' axis. The platform never resolved more
    /// than 0.5 N-m here, so it is modeled as zero.
    pub fn off_axis_torque(&self, aa_angle_deg: f64, bb_angle_deg: f64, pressure_kpa: f64) -> Result<f64> {
        check_range("B-B' angle", bb_angle_deg, 0.0, MAX_BB_ANGLE_DEG)?;
        check_range("A-A' angle", aa_angle_deg, 0.0, MAX_AA_ANGLE_DEG)?;
        check_range("pressure", pressure_kpa, 0.0, MAX_PRESSURE_KPA)?;
        Ok(0.0)
    }

    /// A-A' torque with a B-B' twist, scaled by `attenuation(bb)`.
    ///
    /// `attenuation` must map into `[0, 1]` and equal 1 at zero twist; pass
    /// [`no_attenuation`] when no twist data is available.
    pub fn aa_torque_with_bb<F>(
        &self,
        aa_angle_deg: f64,
        bb_angle_deg: f64,
        pressure_kpa: f64,
        attenuation: F,
    ) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        check_range("B-B' angle", bb_angle_deg, 0.0, MAX_BB_ANGLE_DEG)?;
        let at_zero = attenuation(0.0);
        if at_zero != 1.0 {
            return Err(Error::Contract(format!("attenuation(0) must be 1, got {at_zero}")));
        }
        let factor = attenuation(bb_angle_deg);
        if !(0.0..=1.0).contains(&factor) {
            return Err(Error::Contract(format!(
                "attenuation({bb_angle_deg}) = {factor} is outside [0, 1]"
            )));
        }
        Ok(self.predict_torque(aa_angle_deg, pressure_kpa)? * factor)
    }
}

impl fmt::Display for TorqueModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "T_ref(A) = {:.6}·exp({:.6e}·A) + {:.6}·exp({:.6e}·A); T(P) = {:.6}·P + {:.6}",
            self.a, self.b, self.c, self.d, self.f, self.g
        )
    }
}

/// Orders the two exponential terms so that `b <= d`.
pub(crate) fn canonical_order(a: f64, b: f64, c: f64, d: f64) -> (f64, f64, f64, f64) {
    if b <= d {
        (a, b, c, d)
    } else {
        (c, d, a, b)
    }
}

/// Identity attenuation: twist does not reduce A-A' torque.
pub fn no_attenuation(_bb_angle_deg: f64) -> f64 {
    1.0
}

/// Bend angle of the unloaded actuator.
///
/// Fully curled at 10 kPa and above. Below that the response is unmeasured; it is
/// interpolated linearly from the flat actuator at 0 kPa. Negative pressures are
/// treated as vented.
pub fn free_bend_angle(pressure_kpa: f64) -> f64 {
    if pressure_kpa.is_nan() || pressure_kpa <= 0.0 {
        0.0
    } else if pressure_kpa >= FULL_BEND_PRESSURE_KPA {
        FULL_BEND_ANGLE_DEG
    } else {
        FULL_BEND_ANGLE_DEG * pressure_kpa / FULL_BEND_PRESSURE_KPA
    }
}

/// A validated platform pose: A-A' in `[0, 270]`, B-B' in `[0, 45]` degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleConvention {
    aa_angle_deg: f64,
    bb_angle_deg: f64,
}

impl AngleConvention {
    pub fn new(aa_angle_deg: f64, bb_angle_deg: f64) -> Result<Self> {
        Ok(Self {
            aa_angle_deg: check_range("A-A' angle", aa_angle_deg, 0.0, MAX_AA_ANGLE_DEG)?,
            bb_angle_deg: check_range("B-B' angle", bb_angle_deg, 0.0, MAX_BB_ANGLE_DEG)?,
        })
    }

    pub fn aa(&self) -> f64 {
        self.aa_angle_deg
    }

    pub fn bb(&self) -> f64 {
        self.bb_angle_deg
    }
}
