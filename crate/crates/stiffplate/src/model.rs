//! Domain records, validation and configuration ingestion.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard ceiling on either harmonic cutoff.
pub const TRUNCATION_CEILING: usize = 2048;

/// Default harmonic cutoff in both directions.
pub const DEFAULT_HARMONICS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("config field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("point ({xi}, {eta}) lies outside the plate")]
    OutOfDomain { xi: f64, eta: f64 },
    #[error("truncation mismatch: field is {field:?}, expected {expected:?}")]
    TruncationMismatch {
        field: (usize, usize),
        expected: (usize, usize),
    },
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::Validation(msg.into())
}

/// Plate geometry and flexural rigidity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateSpec {
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub d: f64,
    pub nu: f64,
}

impl PlateSpec {
    pub fn new(a: f64, b: f64, t: f64, d: f64, nu: f64) -> Result<Self, ModelError> {
        let plate = PlateSpec { a, b, t, d, nu };
        plate.validate()?;
        Ok(plate)
    }

    /// Builds the plate from Young's modulus, `D = E t^3 / (12 (1 - nu^2))`.
    pub fn from_modulus(a: f64, b: f64, t: f64, e: f64, nu: f64) -> Result<Self, ModelError> {
        if !(e > 0.0) || !e.is_finite() {
            return Err(invalid("E must be positive"));
        }
        Self::new(a, b, t, flexural_rigidity(e, t, nu), nu)
    }

    /// Square plate with unit edges, thickness and rigidity.
    pub fn unit_square() -> Self {
        PlateSpec { a: 1.0, b: 1.0, t: 1.0, d: 1.0, nu: 0.3 }
    }

    /// Aspect ratio `b / a`.
    pub fn beta(&self) -> f64 {
        self.b / self.a
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.a) {
            return Err(invalid("a must be positive"));
        }
        if !positive(self.b) {
            return Err(invalid("b must be positive"));
        }
        if !positive(self.t) {
            return Err(invalid("t must be positive"));
        }
        if !positive(self.d) {
            return Err(invalid("D must be positive"));
        }
        if !(self.nu >= 0.0 && self.nu < 0.5) {
            return Err(invalid("nu must lie in [0, 0.5)"));
        }
        Ok(())
    }

    /// Edge length perpendicular to stiffeners of the given axis.
    pub fn span_across(&self, axis: Axis) -> f64 {
        match axis {
            Axis::EtaAligned => self.b,
            Axis::XiAligned => self.a,
        }
    }

    pub fn contains(&self, xi: f64, eta: f64) -> bool {
        (0.0..=self.b).contains(&xi) && (0.0..=self.a).contains(&eta)
    }
}

pub fn flexural_rigidity(e: f64, t: f64, nu: f64) -> f64 {
    e * t.powi(3) / (12.0 * (1.0 - nu * nu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    /// Runs parallel to `eta`, located at `xi = position`.
    #[serde(rename = "eta")]
    EtaAligned,
    /// Runs parallel to `xi`, located at `eta = position`.
    #[serde(rename = "xi")]
    XiAligned,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stiffener {
    pub axis: Axis,
    pub position: f64,
    pub ei: f64,
    pub gc: f64,
}

impl Stiffener {
    pub fn eta(position: f64, ei: f64) -> Self {
        Stiffener { axis: Axis::EtaAligned, position, ei, gc: 0.0 }
    }

    pub fn xi(position: f64, ei: f64) -> Self {
        Stiffener { axis: Axis::XiAligned, position, ei, gc: 0.0 }
    }

    pub fn with_gc(mut self, gc: f64) -> Self {
        self.gc = gc;
        self
    }

    pub fn validate(&self, plate: &PlateSpec) -> Result<(), ModelError> {
        let span = plate.span_across(self.axis);
        if !(self.position > 0.0 && self.position < span) {
            return Err(invalid("position must be interior"));
        }
        if !(self.ei >= 0.0 && self.ei.is_finite()) {
            return Err(invalid("EI must be non-negative"));
        }
        if !(self.gc >= 0.0 && self.gc.is_finite()) {
            return Err(invalid("GC must be non-negative"));
        }
        Ok(())
    }
}

/// Bending rigidity relative to the plate, `EI / (a D)`.
pub fn relative_rigidity(stiffener: &Stiffener, plate: &PlateSpec) -> f64 {
    stiffener.ei / (plate.a * plate.d)
}

/// Torsional rigidity relative to the plate, `GC / (b D)`.
pub fn relative_torsional_rigidity(stiffener: &Stiffener, plate: &PlateSpec) -> f64 {
    stiffener.gc / (plate.b * plate.d)
}

/// How Poisson's ratio enters the relative rigidity of a blade stiffener.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BladeConvention {
    /// `(d/a) (h/t)^3 (1 - nu^2)`: stiffener modulus `E`, plate rigidity `E t^3 / 12(1 - nu^2)`.
    #[default]
    MultiplyPoisson,
    /// `(d/a) (h/t)^3 / (1 - nu^2)`.
    DividePoisson,
}

/// Relative rigidity of a rectangular blade of width `d` and height `h`.
pub fn blade_relative_rigidity(
    d_over_a: f64,
    h_over_t: f64,
    nu: f64,
    convention: BladeConvention,
) -> f64 {
    let base = d_over_a * h_over_t.powi(3);
    match convention {
        BladeConvention::MultiplyPoisson => base * (1.0 - nu * nu),
        BladeConvention::DividePoisson => base / (1.0 - nu * nu),
    }
}

/// Harmonic cutoffs: `m_f` for the xi direction, `s_f` for eta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub m_f: usize,
    pub s_f: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { m_f: DEFAULT_HARMONICS, s_f: DEFAULT_HARMONICS }
    }
}

impl Truncation {
    pub fn new(m_f: usize, s_f: usize) -> Result<Self, ModelError> {
        Self::with_ceiling(m_f, s_f, TRUNCATION_CEILING)
    }

    pub fn with_ceiling(m_f: usize, s_f: usize, ceiling: usize) -> Result<Self, ModelError> {
        if m_f < 1 || s_f < 1 {
            return Err(invalid("truncation must keep at least one harmonic"));
        }
        if m_f > ceiling || s_f > ceiling {
            return Err(invalid(format!("truncation exceeds the ceiling of {ceiling}")));
        }
        Ok(Truncation { m_f, s_f })
    }

    pub fn square(n: usize) -> Self {
        Truncation { m_f: n, s_f: n }
    }
}

/// Double sine coefficients `P_mr` of the lateral load, keyed by `(m, r)`:
/// `m` is the xi harmonic and `r` the eta harmonic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadSpectrum {
    coefficients: BTreeMap<(usize, usize), f64>,
}

impl LoadSpectrum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn bisinusoidal(g: usize, h: usize, amplitude: f64) -> Self {
        let mut coefficients = BTreeMap::new();
        coefficients.insert((g, h), amplitude);
        LoadSpectrum { coefficients }
    }

    /// Uniform pressure: `P_mr = 16 p0 / (pi^2 m r)` for odd `m`, `r` within the cutoffs.
    pub fn uniform(p0: f64, trunc: Truncation) -> Self {
        let mut coefficients = BTreeMap::new();
        for m in (1..=trunc.m_f).step_by(2) {
            for r in (1..=trunc.s_f).step_by(2) {
                coefficients.insert((m, r), 16.0 * p0 / (PI * PI * (m * r) as f64));
            }
        }
        LoadSpectrum { coefficients }
    }

    /// Repeated `(m, r)` entries are summed.
    pub fn explicit(entries: &[(usize, usize, f64)]) -> Result<Self, ModelError> {
        let mut coefficients = BTreeMap::new();
        for &(m, r, p) in entries {
            if m < 1 || r < 1 {
                return Err(invalid("load harmonic indices start at 1"));
            }
            if !p.is_finite() {
                return Err(invalid("load coefficients must be finite"));
            }
            *coefficients.entry((m, r)).or_insert(0.0) += p;
        }
        Ok(LoadSpectrum { coefficients })
    }

    pub fn get(&self, m: usize, r: usize) -> f64 {
        self.coefficients.get(&(m, r)).copied().unwrap_or(0.0)
    }

    /// Nonzero entries in ascending `(m, r)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.coefficients
            .iter()
            .filter(|(_, p)| **p != 0.0)
            .map(|(&(m, r), &p)| (m, r, p))
    }

    pub fn scaled(&self, c: f64) -> Self {
        LoadSpectrum {
            coefficients: self.coefficients.iter().map(|(k, p)| (*k, c * p)).collect(),
        }
    }

    pub fn add(&self, other: &LoadSpectrum) -> Self {
        let mut coefficients = self.coefficients.clone();
        for (k, p) in &other.coefficients {
            *coefficients.entry(*k).or_insert(0.0) += p;
        }
        LoadSpectrum { coefficients }
    }

    pub fn is_zero(&self) -> bool {
        self.iter().next().is_none()
    }

    pub fn fits(&self, trunc: Truncation) -> bool {
        self.iter().all(|(m, r, _)| m <= trunc.m_f && r <= trunc.s_f)
    }

    /// Dense `m_f x s_f` copy, row-major in `m`.
    pub fn dense(&self, trunc: Truncation) -> Vec<f64> {
        let mut grid = vec![0.0; trunc.m_f * trunc.s_f];
        for (m, r, p) in self.iter() {
            if m <= trunc.m_f && r <= trunc.s_f {
                grid[(m - 1) * trunc.s_f + (r - 1)] = p;
            }
        }
        grid
    }

    /// Amplitude of the (1,1) term if it is the only nonzero entry.
    pub fn single_fundamental(&self) -> Option<f64> {
        let mut it = self.iter();
        match (it.next(), it.next()) {
            (Some((1, 1, p)), None) => Some(p),
            _ => None,
        }
    }
}

/// Truncated coefficient grid `W_ns`, row-major in `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflectionField {
    pub plate: PlateSpec,
    pub trunc: Truncation,
    pub coeffs: Vec<f64>,
}

impl DeflectionField {
    pub fn zeros(plate: PlateSpec, trunc: Truncation) -> Self {
        DeflectionField { plate, trunc, coeffs: vec![0.0; trunc.m_f * trunc.s_f] }
    }

    /// Coefficient for 1-based harmonics `(n, s)`.
    pub fn get(&self, n: usize, s: usize) -> f64 {
        self.coeffs[(n - 1) * self.trunc.s_f + (s - 1)]
    }

    pub fn set(&mut self, n: usize, s: usize, value: f64) {
        self.coeffs[(n - 1) * self.trunc.s_f + (s - 1)] = value;
    }

    pub fn add_to(&mut self, n: usize, s: usize, value: f64) {
        self.coeffs[(n - 1) * self.trunc.s_f + (s - 1)] += value;
    }

    pub fn scaled(&self, c: f64) -> Self {
        DeflectionField {
            plate: self.plate,
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|w| c * w).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|w| w.is_finite())
    }

    /// Synthesises `w(xi, eta)` from the truncated series.
    pub fn evaluate(&self, xi: f64, eta: f64) -> Result<f64, ModelError> {
        if !self.plate.contains(xi, eta) {
            return Err(ModelError::OutOfDomain { xi, eta });
        }
        let sx = sine_table(xi / self.plate.b, self.trunc.m_f);
        let sy = sine_table(eta / self.plate.a, self.trunc.s_f);
        let mut w = 0.0;
        for (n, row) in self.coeffs.chunks(self.trunc.s_f).enumerate() {
            let inner: f64 = row.iter().zip(&sy).map(|(c, s)| c * s).sum();
            w += sx[n] * inner;
        }
        Ok(w)
    }
}

/// `sin(k pi u)` for `k = 1..=count`.
pub fn sine_table(u: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| (k as f64 * PI * u).sin()).collect()
}

/// `cos(k pi u)` for `k = 1..=count`.
pub fn cosine_table(u: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| (k as f64 * PI * u).cos()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub label: String,
    pub value: f64,
}

/// Compliance with its decomposition into unstiffened and per-stiffener parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub u_total: f64,
    pub u_hat: Option<f64>,
    pub contributions: Vec<Contribution>,
}

impl EnergyReport {
    pub fn contribution_sum(&self) -> f64 {
        self.contributions.iter().map(|c| c.value).sum()
    }

    pub fn contribution(&self, label: &str) -> Option<f64> {
        self.contributions.iter().find(|c| c.label == label).map(|c| c.value)
    }
}

/// Non-dimensional energy `8 pi^4 D U / (a^6 P^2)` for a pure (1,1) load.
pub fn nondimensional_energy(u: f64, plate: &PlateSpec, load: &LoadSpectrum) -> Option<f64> {
    load.single_fundamental()
        .map(|p| 8.0 * PI.powi(4) * plate.d * u / (plate.a.powi(6) * p * p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum LoadConfig {
    Bisinusoidal { g: usize, h: usize, amplitude: f64 },
    Uniform { p0: f64 },
    Spectrum { coefficients: Vec<(usize, usize, f64)> },
}

impl LoadConfig {
    pub fn spectrum(&self, trunc: Truncation) -> Result<LoadSpectrum, ModelError> {
        match *self {
            LoadConfig::Bisinusoidal { g, h, amplitude } => {
                if g < 1 || h < 1 {
                    return Err(invalid("load harmonic indices start at 1"));
                }
                if !amplitude.is_finite() {
                    return Err(invalid("load amplitude must be finite"));
                }
                Ok(LoadSpectrum::bisinusoidal(g, h, amplitude))
            }
            LoadConfig::Uniform { p0 } => {
                if !p0.is_finite() {
                    return Err(invalid("p0 must be finite"));
                }
                Ok(LoadSpectrum::uniform(p0, trunc))
            }
            LoadConfig::Spectrum { ref coefficients } => LoadSpectrum::explicit(coefficients),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlate {
    a: f64,
    b: f64,
    t: f64,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    d: Option<f64>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    e: Option<f64>,
    nu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStiffener {
    axis: Axis,
    position: f64,
    #[serde(rename = "EI")]
    ei: f64,
    #[serde(rename = "GC", default)]
    gc: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    plate: RawPlate,
    #[serde(default)]
    stiffeners: Vec<RawStiffener>,
    load: LoadConfig,
    #[serde(default)]
    truncation: Option<Truncation>,
}

/// A validated analysis configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub plate: PlateSpec,
    pub stiffeners: Vec<Stiffener>,
    pub load_config: LoadConfig,
    pub load: LoadSpectrum,
    pub trunc: Truncation,
}

impl Config {
    pub fn new(
        plate: PlateSpec,
        stiffeners: Vec<Stiffener>,
        load_config: LoadConfig,
        trunc: Truncation,
    ) -> Result<Self, ModelError> {
        plate.validate()?;
        for s in &stiffeners {
            s.validate(&plate)?;
        }
        Truncation::new(trunc.m_f, trunc.s_f)?;
        let load = load_config.spectrum(trunc)?;
        if !load.fits(trunc) {
            return Err(invalid("load harmonics exceed the truncation"));
        }
        Ok(Config { plate, stiffeners, load_config, load, trunc })
    }

    /// Normalised JSON: defaults filled in, `D` always present.
    pub fn to_json(&self) -> String {
        let raw = RawConfig {
            plate: RawPlate {
                a: self.plate.a,
                b: self.plate.b,
                t: self.plate.t,
                d: Some(self.plate.d),
                e: None,
                nu: self.plate.nu,
            },
            stiffeners: self
                .stiffeners
                .iter()
                .map(|s| RawStiffener { axis: s.axis, position: s.position, ei: s.ei, gc: s.gc })
                .collect(),
            load: self.load_config.clone(),
            truncation: Some(self.trunc),
        };
        serde_json::to_string_pretty(&raw).expect("config serialises")
    }
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str) -> Result<Config, ModelError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(schema_error)?;
    let p = &raw.plate;
    let d = match (p.d, p.e) {
        (Some(d), None) => d,
        (None, Some(e)) => flexural_rigidity(e, p.t, p.nu),
        (Some(d), Some(e)) => {
            let from_e = flexural_rigidity(e, p.t, p.nu);
            if (d - from_e).abs() > 1e-9 * d.abs().max(from_e.abs()) {
                return Err(invalid("D disagrees with E t^3 / (12 (1 - nu^2))"));
            }
            d
        }
        (None, None) => {
            return Err(ModelError::Schema {
                field: "plate.D".into(),
                message: "either D or E is required".into(),
            })
        }
    };
    let plate = PlateSpec::new(p.a, p.b, p.t, d, p.nu)?;
    let stiffeners = raw
        .stiffeners
        .iter()
        .map(|s| Stiffener { axis: s.axis, position: s.position, ei: s.ei, gc: s.gc })
        .collect();
    let trunc = raw.truncation.unwrap_or_default();
    Config::new(plate, stiffeners, raw.load, trunc)
}

fn schema_error(err: serde_json::Error) -> ModelError {
    let message = err.to_string();
    let field = message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| format!("line {} column {}", err.line(), err.column()));
    ModelError::Schema { field, message }
}
