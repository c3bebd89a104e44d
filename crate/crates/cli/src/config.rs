//! Experiment documents: parsing, sweep substitution and typed sections.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use fluxcouple::cooling::CouplingKind;
use fluxcouple::device::PhaseCoeffs;
use fluxcouple::drive::UniversalDriveParams;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Extract,
    Evolve,
    Calibrate,
    Cool,
    Readout,
    Multilevel,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Extract,
        Kind::Evolve,
        Kind::Calibrate,
        Kind::Cool,
        Kind::Readout,
        Kind::Multilevel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Extract => "extract",
            Kind::Evolve => "evolve",
            Kind::Calibrate => "calibrate",
            Kind::Cool => "cool",
            Kind::Readout => "readout",
            Kind::Multilevel => "multilevel",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Dotted path into the document, e.g. `drive.f_zz` or `drive.k.1`.
    pub path: String,
    pub values: Vec<f64>,
}

/// A parsed experiment document before per-kind typing.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub sweep: Option<Sweep>,
    pub output: Option<String>,
    raw: Value,
}

/// Sections every kind shares; `D`, `R` and `O` are the kind-specific
/// device, drive and options records.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document<D, R, O: Default> {
    #[allow(dead_code)]
    kind: String,
    pub device: D,
    pub drive: R,
    #[serde(default)]
    pub options: O,
    #[allow(dead_code)]
    sweep: Option<Sweep>,
    #[allow(dead_code)]
    output: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Empty {}

fn one() -> f64 {
    1.0
}

/// Junction phase coefficients; higher elements default to the harmonic values.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    #[serde(default = "one")]
    pub s: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(default = "one")]
    pub c: f64,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub c2: Option<f64>,
    pub q2: Option<f64>,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            c0: 0.0,
            c: 1.0,
            s1: None,
            s2: None,
            c2: None,
            q2: None,
        }
    }
}

impl PhaseConfig {
    pub fn coeffs(&self) -> PhaseCoeffs {
        let h = PhaseCoeffs::two_level(self.s, self.c0, self.c);
        PhaseCoeffs {
            s1: self.s1.unwrap_or(h.s1),
            s2: self.s2.unwrap_or(h.s2),
            c2: self.c2.unwrap_or(h.c2),
            q2: self.q2.unwrap_or(h.q2),
            ..h
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplerDevice {
    pub omega1: f64,
    pub omega2: f64,
    pub alpha_ej: f64,
    #[serde(default)]
    pub q1: PhaseConfig,
    #[serde(default)]
    pub q2: PhaseConfig,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractOptions {
    /// Also extract from the one-period Floquet Hamiltonian.
    pub floquet: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { floquet: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectiveModel {
    #[default]
    Expansion,
    Average,
    Floquet,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveOptions {
    /// Two-body label such as `zz`; defaults to the largest analytic entry.
    pub target: Option<String>,
    pub effective: EffectiveModel,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateDrive {
    /// Requested two-body coefficients keyed by label (`xx`, `zy`, ...).
    pub target: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolDevice {
    pub omega: f64,
    pub omega_s: f64,
    pub gamma_s: f64,
    pub kappa: f64,
    /// Exactly one of `temperature` and `n_th` must be given.
    pub temperature: Option<f64>,
    pub n_th: Option<f64>,
    #[serde(default = "yes")]
    pub shadow_thermal: bool,
}

fn exchange() -> CouplingKind {
    CouplingKind::Exchange
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolDrive {
    pub g: f64,
    #[serde(default = "exchange")]
    pub coupling_kind: CouplingKind,
}

fn resonator_dim() -> usize {
    8
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutDevice {
    pub ej_over_ec: f64,
    pub omega_t: f64,
    pub omega_r: f64,
    pub g: f64,
    #[serde(default = "resonator_dim")]
    pub resonator_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutDrive {
    pub f1: f64,
    #[serde(default)]
    pub f2: f64,
    pub f3: f64,
    #[serde(default)]
    pub chi: f64,
    /// Replace `f2` by the value that removes the conjugate-quadrature term.
    #[serde(default)]
    pub balanced: bool,
}

fn samples() -> usize {
    41
}

fn steps() -> usize {
    40
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutOptions {
    /// Defaults to `1/(4Λ)`.
    pub duration: Option<f64>,
    pub samples: usize,
    pub cancel_spin_independent: bool,
    pub steps_per_period: usize,
}

impl Default for ReadoutOptions {
    fn default() -> Self {
        Self {
            duration: None,
            samples: samples(),
            cancel_spin_independent: true,
            steps_per_period: steps(),
        }
    }
}

fn levels() -> usize {
    4
}

fn ladder_s() -> f64 {
    0.3
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultilevelDevice {
    pub omega1: f64,
    pub omega2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// `αE_J s²`.
    pub coupling: f64,
    #[serde(default = "levels")]
    pub levels: usize,
    #[serde(default = "ladder_s")]
    pub s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultilevelDrive {
    pub k: [f64; 4],
    #[serde(default)]
    pub detune: [f64; 2],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultilevelMethod {
    #[default]
    Floquet,
    Average,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultilevelOptions {
    pub method: MultilevelMethod,
    /// Elements at or below this magnitude are left out of the export.
    pub threshold: f64,
    /// Also compare lab-frame dynamics against the effective model.
    pub dynamics: bool,
}

impl Default for MultilevelOptions {
    fn default() -> Self {
        Self {
            method: MultilevelMethod::Floquet,
            threshold: 1e-12,
            dynamics: false,
        }
    }
}

pub type ExtractDoc = Document<CouplerDevice, UniversalDriveParams, ExtractOptions>;
pub type EvolveDoc = Document<CouplerDevice, UniversalDriveParams, EvolveOptions>;
pub type CalibrateDoc = Document<CouplerDevice, CalibrateDrive, Empty>;
pub type CoolDoc = Document<CoolDevice, CoolDrive, Empty>;
pub type ReadoutDoc = Document<ReadoutDevice, ReadoutDrive, ReadoutOptions>;
pub type MultilevelDoc = Document<MultilevelDevice, MultilevelDrive, MultilevelOptions>;

/// Deserializes `v`, reporting failures with the dotted path of the field.
pub fn typed<T: DeserializeOwned>(v: &Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let mut path = e.path().to_string();
        if path == "." {
            path.clear();
        }
        let message = e.inner().to_string();
        if let Some(field) = message.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
            path = if path.is_empty() { field.to_string() } else { format!("{path}.{field}") };
        }
        CliError::schema(path, message)
    })
}

fn segments(path: &str) -> Vec<&str> {
    path.split('.').collect()
}

/// Writes `value` at the dotted `path`, which must land on a number or on an
/// absent key of an existing object.
fn substitute(doc: &mut Value, path: &str, value: f64) -> Result<(), CliError> {
    let err = |m: &str| CliError::schema("sweep.path", format!("`{path}` {m}"));
    let segs = segments(path);
    if !matches!(segs[0], "device" | "drive" | "options") {
        return Err(err("must start with device, drive or options"));
    }
    let (last, parents) = segs.split_last().expect("split always yields one segment");
    let mut node = &mut *doc;
    for seg in parents {
        node = match node {
            Value::Object(m) => m.get_mut(*seg),
            Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| err("does not resolve"))?;
    }
    let number = Value::from(value);
    match node {
        Value::Object(m) => match m.get(*last) {
            None | Some(Value::Number(_)) | Some(Value::Null) => {
                m.insert(last.to_string(), number);
            }
            Some(_) => return Err(err("does not resolve to a numeric field")),
        },
        Value::Array(a) => match last.parse::<usize>().ok().and_then(|i| a.get_mut(i)) {
            Some(slot @ Value::Number(_)) => *slot = number,
            _ => return Err(err("does not resolve to a numeric field")),
        },
        _ => return Err(err("does not resolve")),
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: Value = serde_json::from_str(text).map_err(|e| CliError::schema("", e.to_string()))?;
        Self::from_value(raw)
    }

    pub fn from_value(raw: Value) -> Result<Self, CliError> {
        let Value::Object(map) = &raw else {
            return Err(CliError::schema("", "config must be a JSON object"));
        };
        let kind = match map.get("kind") {
            None => return Err(CliError::schema("kind", "missing field `kind`")),
            Some(k) => typed::<Kind>(k).map_err(|_| {
                let names: Vec<_> = Kind::ALL.iter().map(|k| k.name()).collect();
                CliError::schema("kind", format!("expected one of {}", names.join(", ")))
            })?,
        };
        let sweep: Option<Sweep> = match map.get("sweep") {
            None | Some(Value::Null) => None,
            Some(s) => Some(typed(s).map_err(|e| e.prefixed("sweep"))?),
        };
        let output = match map.get("output") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
            Some(_) => return Err(CliError::schema("output", "expected a non-empty path prefix")),
        };
        if let Some(s) = &sweep {
            if s.values.is_empty() {
                return Err(CliError::schema("sweep.values", "sweep needs at least one value"));
            }
            if let Some(i) = s.values.iter().position(|v| !v.is_finite()) {
                return Err(CliError::schema(format!("sweep.values.{i}"), "sweep values must be finite"));
            }
        }
        let cfg = Self {
            kind,
            sweep,
            output,
            raw,
        };
        // Type every point up front so schema errors surface before any work.
        for i in 0..cfg.point_count() {
            cfg.check_point(&cfg.point(i)?)?;
        }
        Ok(cfg)
    }

    fn check_point(&self, v: &Value) -> Result<(), CliError> {
        match self.kind {
            Kind::Extract => typed::<ExtractDoc>(v).map(drop),
            Kind::Evolve => typed::<EvolveDoc>(v).map(drop),
            Kind::Calibrate => typed::<CalibrateDoc>(v).map(drop),
            Kind::Cool => typed::<CoolDoc>(v).map(drop),
            Kind::Readout => typed::<ReadoutDoc>(v).map(drop),
            Kind::Multilevel => typed::<MultilevelDoc>(v).map(drop),
        }
    }

    pub fn raw(&self) -> &Value {
        &self.raw
    }

    pub fn point_count(&self) -> usize {
        self.sweep.as_ref().map_or(1, |s| s.values.len())
    }

    pub fn sweep_value(&self, index: usize) -> Option<f64> {
        self.sweep.as_ref().map(|s| s.values[index])
    }

    /// The document with sweep point `index` substituted in.
    pub fn point(&self, index: usize) -> Result<Value, CliError> {
        let mut v = self.raw.clone();
        if let Some(s) = &self.sweep {
            substitute(&mut v, &s.path, s.values[index])?;
        }
        Ok(v)
    }

    /// SHA-256 of the compact, key-sorted document.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.raw).expect("values always serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
