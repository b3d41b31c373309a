//! Run configuration for the command-line front end: one JSON document,
//! optionally patched by `key.path=value` overrides.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::modal::Discretization;
use crate::oracle::BvpConfig;
use crate::perturbation::PerturbationProfile;
use crate::scattering::RESONANCE_GUARD;
use crate::spectral::EPS_MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Rectangular { a: f64 },
    Parabolic { a: f64 },
    /// CSV with columns `x,y,f` on a tensor lattice.
    Sampled { path: PathBuf },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<PerturbationProfile> {
        match self {
            ProfileSpec::Rectangular { a } => PerturbationProfile::rectangular(*a),
            ProfileSpec::Parabolic { a } => PerturbationProfile::parabolic(*a),
            ProfileSpec::Sampled { path } => PerturbationProfile::from_csv(path),
        }
    }
}

/// Either `values` or `start`, `stop`, `count` (inclusive, uniform).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Axis {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn values(values: Vec<f64>) -> Self {
        Self { values: Some(values), ..Default::default() }
    }

    pub fn range(start: f64, stop: f64, count: usize) -> Self {
        Self { start: Some(start), stop: Some(stop), count: Some(count), values: None }
    }

    pub fn points(&self, path: &str) -> Result<Vec<f64>> {
        let pts = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            },
            _ => {
                return Err(Error::Config(format!(
                    "{path}: give either `values` or all of `start`, `stop`, `count`"
                )))
            }
        };
        if pts.is_empty() {
            return Err(Error::Config(format!("{path}: range is empty")));
        }
        if let Some(bad) = pts.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{path}: non-finite value {bad}")));
        }
        Ok(pts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub beta: Axis,
    pub nu: Axis,
    /// Read `nu` as offsets `δ` from `Re ν_0(ε, β)`.
    pub relative_to_resonance: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { beta: Axis::values(vec![0.25]), nu: Axis::range(-0.01, 0.01, 41), relative_to_resonance: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrappedConfig {
    /// Index into the candidate list; all candidates when absent.
    pub branch: Option<usize>,
    /// Sample count per mode for the exported profile.
    pub mode_samples: usize,
    /// Export abscissae cover `[-R - margin, R + margin]`.
    pub mode_margin: f64,
    pub mode_csv: Option<PathBuf>,
}

impl Default for TrappedConfig {
    fn default() -> Self {
        Self { branch: None, mode_samples: 201, mode_margin: 5.0, mode_csv: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    /// Frequencies to compare; a window-spanning grid when absent.
    pub nu: Option<Axis>,
    pub points: usize,
    /// Bound on `|ΔR|`, `|ΔT|` against the extrapolated oracle.
    pub tolerance: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self { nu: None, points: 20, tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub unitarity: f64,
    /// Relative size of `μ - εγF` below which scattering is refused.
    pub resonance_guard: f64,
    /// Allowed `|Q - R^+|`, `|R^+ - R^-|` for symmetric profiles.
    pub symmetry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { unitarity: 1e-8, resonance_guard: RESONANCE_GUARD, symmetry: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: ProfileSpec,
    pub discretization: Discretization,
    pub epsilon: f64,
    pub beta: f64,
    pub nu: f64,
    pub sweep: SweepConfig,
    pub trapped: TrappedConfig,
    pub validate: ValidateConfig,
    pub oracle: BvpConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: ProfileSpec::Parabolic { a: 2.0 },
            discretization: Discretization::default(),
            epsilon: 0.01,
            beta: 0.25,
            nu: 3.0,
            sweep: SweepConfig::default(),
            trapped: TrappedConfig::default(),
            validate: ValidateConfig::default(),
            oracle: BvpConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    /// Reads the file (if any) and applies `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(Self::default()).expect("config serializes");
        if let Some(p) = path {
            let text =
                std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            let file: Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            merge(&mut value, file);
        }
        for o in overrides {
            let mut patch = Value::Object(Map::new());
            apply_override(&mut patch, o)?;
            merge(&mut value, patch);
        }
        Self::from_value(value)
    }

    /// The configuration with every default filled in.
    pub fn effective(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Checks shared by all commands; `allow_zero_eps` admits the
    /// unperturbed problem.
    pub fn validate_common(&self, allow_zero_eps: bool) -> Result<()> {
        let e = self.epsilon;
        let ok = if allow_zero_eps { (0.0..=EPS_MAX).contains(&e) } else { e > 0.0 && e <= EPS_MAX };
        if !ok {
            let lo = if allow_zero_eps { "[0" } else { "(0" };
            return Err(Error::Config(format!("epsilon: {e} must lie in {lo}, {EPS_MAX}]")));
        }
        check_beta("beta", self.beta)?;
        match &self.profile {
            ProfileSpec::Rectangular { a } | ProfileSpec::Parabolic { a } if !(*a > 0.0 && a.is_finite()) => {
                return Err(Error::Config(format!("profile.a: {a} must be positive")));
            }
            _ => {}
        }
        if self.discretization.n_modes < 1 {
            return Err(Error::Config("discretization.n_modes: must be at least 1".into()));
        }
        if self.discretization.order < 2 {
            return Err(Error::Config("discretization.order: must be at least 2".into()));
        }
        if !(self.tolerances.resonance_guard >= 0.0) {
            return Err(Error::Config("tolerances.resonance_guard: must be non-negative".into()));
        }
        Ok(())
    }
}

pub fn check_beta(path: &str, beta: f64) -> Result<()> {
    if !(beta.abs() > 0.0 && beta.abs() < 0.5) {
        return Err(Error::Config(format!("{path}: {beta} must satisfy 0 < |beta| < 1/2")));
    }
    Ok(())
}

/// Recursive object merge. An object carrying a `kind` tag replaces the
/// base wholesale, so switching variants drops the old variant's fields.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) if !p.contains_key("kind") => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

/// `a.b.c=value`; the value is parsed as JSON, falling back to a string.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    if key.is_empty() {
        return Err(Error::Config(format!("override `{spec}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Map::new());
            } else {
                return Err(Error::Config(format!("override `{key}`: `{}` is not an object", parts[..i].join("."))));
            }
        }
        let map = node.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Object(Map::new()));
    }
    Ok(())
}

/// Pretty JSON with every float written to 17 significant digits.
struct Digits17(serde_json::ser::PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for Digits17 {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
}

/// Serializes with 17 significant digits; non-finite floats become `null`.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(Default::default()));
    value.serialize(&mut ser).expect("value serializes");
    buf.push(b'\n');
    String::from_utf8(buf).expect("json is utf-8")
}

/// A JSON number, `null` when not finite.
pub fn num(x: f64) -> Value {
    Value::from(x)
}
