//! Platform configuration: a `package NAME;` header followed by a JSON body
//! that defines the target and its opaque operations.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMatrix, C64};
use crate::time::{parse_time_text, TimeUnit, TimeValue};
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("error[C0001]: config syntax: {0}")]
    Syntax(String),
    #[error("error[C0002]: config semantics: {0}")]
    Semantic(String),
    #[error("operation `{0}` has no unitary semantics")]
    NoUnitary(String),
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Syntax(_) => "C0001",
            ConfigError::Semantic(_) => "C0002",
            ConfigError::NoUnitary(_) => "C0003",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Angle {
    Param(String),
    Const(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Semantics {
    Rotation {
        axis: [f64; 3],
        angle: Angle,
    },
    Matrix(CMatrix),
    Measure,
    /// Projects the target onto |0⟩.
    Reset,
    Pulse(String),
}

impl Semantics {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Semantics::Rotation { .. } => "rotation",
            Semantics::Matrix(_) => "matrix",
            Semantics::Measure => "measure",
            Semantics::Reset => "reset",
            Semantics::Pulse(_) => "pulse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpDef {
    pub name: String,
    pub duration: TimeValue,
    pub num_qubits: u32,
    pub params: Vec<(String, Type)>,
    pub semantics: Semantics,
}

impl OpDef {
    /// Whole nanoseconds; parse guarantees the value is integral.
    pub fn duration_ns(&self) -> i64 {
        self.duration.to_ns_rounded().unwrap_or(0)
    }

    /// The operation signature seen by Quingo code: the target qubits
    /// followed by the classical parameters.
    pub fn signature(&self) -> (Vec<Type>, Type) {
        let mut params = vec![Type::Qubit; self.num_qubits as usize];
        params.extend(self.params.iter().map(|(_, t)| t.clone()));
        let ret = if self.semantics == Semantics::Measure { Type::Bool } else { Type::Unit };
        (params, ret)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformConfig {
    pub package: String,
    pub qubit_count: u32,
    pub cycle_time: TimeValue,
    /// Platform keys this toolchain does not interpret, kept verbatim.
    pub extensions: Option<serde_json::Value>,
    pub operations: BTreeMap<String, OpDef>,
}

impl PlatformConfig {
    pub fn op(&self, name: &str) -> Option<&OpDef> {
        self.operations.get(name)
    }

    pub fn measure_op(&self) -> Option<&OpDef> {
        self.operations.values().find(|o| o.semantics == Semantics::Measure)
    }

    pub fn reset_op(&self) -> Option<&OpDef> {
        self.operations.values().find(|o| o.semantics == Semantics::Reset)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    platform: RawPlatform,
    operations: RawOps,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlatform {
    qubit_count: i64,
    cycle_time_ns: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extensions: Option<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawDuration {
    Ns(f64),
    Text(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    name: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawAngle {
    Const(f64),
    Param(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum RawSemantics {
    Measure,
    Reset,
    Rotation { axis: [f64; 3], angle: RawAngle },
    Matrix(Vec<Vec<[f64; 2]>>),
    Pulse(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOp {
    duration_ns: RawDuration,
    num_qubits: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<RawParam>,
    semantics: RawSemantics,
}

/// Operation table that keeps duplicate keys so they can be reported.
#[derive(Debug)]
struct RawOps(Vec<(String, RawOp)>);

impl<'de> Deserialize<'de> for RawOps {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = RawOps;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object of operation definitions")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawOps, A::Error> {
                let mut ops = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, RawOp>()? {
                    ops.push((k, v));
                }
                Ok(RawOps(ops))
            }
        }
        d.deserialize_map(V)
    }
}

impl Serialize for RawOps {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

const UNITARY_TOL: f64 = 1e-9;

fn semantic(msg: impl Into<String>) -> ConfigError {
    ConfigError::Semantic(msg.into())
}

fn split_header(text: &str) -> Result<(String, &str), ConfigError> {
    let rest = text.trim_start();
    let rest = rest
        .strip_prefix("package")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| ConfigError::Syntax("expected `package NAME;` header".into()))?;
    let (name, body) =
        rest.split_once(';').ok_or_else(|| ConfigError::Syntax("missing `;` after package name".into()))?;
    let name = name.trim();
    let valid = !name.is_empty()
        && name.split('.').all(|seg| {
            let mut cs = seg.chars();
            cs.next().is_some_and(|c| c.is_alphabetic() || c == '_') && cs.all(|c| c.is_alphanumeric() || c == '_')
        });
    if !valid {
        return Err(ConfigError::Syntax(format!("invalid package name `{name}`")));
    }
    Ok((name.to_string(), body))
}

fn parse_param_type(text: &str) -> Option<Type> {
    match text.trim() {
        "bool" => Some(Type::Bool),
        "int" => Some(Type::Int),
        "double" => Some(Type::Double),
        _ => None,
    }
}

fn convert_duration(name: &str, raw: &RawDuration) -> Result<TimeValue, ConfigError> {
    let tv = match raw {
        RawDuration::Ns(v) => TimeValue::ns(*v),
        RawDuration::Text(t) => {
            parse_time_text(t).ok_or_else(|| semantic(format!("operation `{name}`: bad duration `{t}`")))?
        }
    };
    if !tv.magnitude.is_finite() || tv.as_ns_f64() <= 0.0 {
        return Err(semantic(format!("operation `{name}`: duration must be positive")));
    }
    if tv.to_ns_exact().is_none() {
        return Err(semantic(format!("operation `{name}`: duration {tv} is not a whole number of nanoseconds")));
    }
    Ok(tv)
}

fn convert_op(name: &str, raw: &RawOp) -> Result<OpDef, ConfigError> {
    let duration = convert_duration(name, &raw.duration_ns)?;
    if raw.num_qubits < 1 || raw.num_qubits > 8 {
        return Err(semantic(format!("operation `{name}`: num_qubits must be between 1 and 8")));
    }
    let num_qubits = raw.num_qubits as u32;
    let mut params = Vec::new();
    for p in &raw.params {
        let ty = parse_param_type(&p.ty)
            .ok_or_else(|| semantic(format!("operation `{name}`: parameter `{}` has non-classical type", p.name)))?;
        if params.iter().any(|(n, _)| n == &p.name) {
            return Err(semantic(format!("operation `{name}`: duplicate parameter `{}`", p.name)));
        }
        params.push((p.name.clone(), ty));
    }
    let semantics = match &raw.semantics {
        RawSemantics::Measure | RawSemantics::Reset => {
            if num_qubits != 1 {
                return Err(semantic(format!("operation `{name}`: measure/reset act on exactly one qubit")));
            }
            if matches!(raw.semantics, RawSemantics::Measure) {
                Semantics::Measure
            } else {
                Semantics::Reset
            }
        }
        RawSemantics::Rotation { axis, angle } => {
            if num_qubits != 1 {
                return Err(semantic(format!("operation `{name}`: rotations act on one qubit")));
            }
            let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNITARY_TOL {
                return Err(semantic(format!("operation `{name}`: rotation axis has norm {norm}, expected 1")));
            }
            let angle = match angle {
                RawAngle::Const(v) if v.is_finite() => Angle::Const(*v),
                RawAngle::Const(_) => return Err(semantic(format!("operation `{name}`: angle is not finite"))),
                RawAngle::Param(p) => match params.iter().find(|(n, _)| n == p) {
                    Some((_, Type::Int | Type::Double)) => Angle::Param(p.clone()),
                    _ => {
                        return Err(semantic(format!(
                            "operation `{name}`: angle refers to unknown numeric parameter `{p}`"
                        )))
                    }
                },
            };
            Semantics::Rotation { axis: *axis, angle }
        }
        RawSemantics::Matrix(rows) => {
            let dim = 1usize << num_qubits;
            let rows: Vec<Vec<C64>> =
                rows.iter().map(|r| r.iter().map(|[re, im]| C64::new(*re, *im)).collect()).collect();
            let m = CMatrix::from_rows(&rows)
                .filter(|m| m.dim() == dim)
                .ok_or_else(|| semantic(format!("operation `{name}`: matrix must be {dim}x{dim}")))?;
            let err = m.unitarity_error();
            if err.is_nan() || err > UNITARY_TOL {
                return Err(semantic(format!("operation `{name}`: matrix is not unitary (error {err:e})")));
            }
            Semantics::Matrix(m)
        }
        RawSemantics::Pulse(text) => Semantics::Pulse(text.clone()),
    };
    Ok(OpDef { name: name.to_string(), duration, num_qubits, params, semantics })
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_alphabetic() || c == '_') && cs.all(|c| c.is_alphanumeric() || c == '_')
}

pub fn parse_config(text: &str) -> Result<PlatformConfig, ConfigError> {
    let (package, body) = split_header(text)?;
    let raw: RawConfig = serde_json::from_str(body).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    if raw.platform.qubit_count < 1 || raw.platform.qubit_count > u32::MAX as i64 {
        return Err(semantic("platform.qubit_count must be a positive integer"));
    }
    if !(raw.platform.cycle_time_ns.is_finite() && raw.platform.cycle_time_ns > 0.0) {
        return Err(semantic("platform.cycle_time_ns must be positive"));
    }
    let mut operations = BTreeMap::new();
    for (name, op) in &raw.operations.0 {
        if !is_identifier(name) {
            return Err(semantic(format!("`{name}` is not a valid operation name")));
        }
        let def = convert_op(name, op)?;
        if operations.insert(name.clone(), def).is_some() {
            return Err(semantic(format!("duplicate operation `{name}`")));
        }
    }
    let config = PlatformConfig {
        package,
        qubit_count: raw.platform.qubit_count as u32,
        cycle_time: TimeValue::ns(raw.platform.cycle_time_ns),
        extensions: raw.platform.extensions,
        operations,
    };
    for sem in [Semantics::Measure, Semantics::Reset] {
        let n = config.operations.values().filter(|o| o.semantics == sem).count();
        if n > 1 {
            return Err(semantic(format!("at most one operation may have `{}` semantics", sem.kind_name())));
        }
    }
    Ok(config)
}

/// Prints a config in the form accepted by [`parse_config`].
pub fn print_config(c: &PlatformConfig) -> String {
    let ops = c
        .operations
        .values()
        .map(|o| {
            let duration_ns = match o.duration.unit {
                TimeUnit::Ns => RawDuration::Ns(o.duration.magnitude),
                _ => RawDuration::Text(o.duration.to_string()),
            };
            let params = o.params.iter().map(|(n, t)| RawParam { name: n.clone(), ty: t.to_string() }).collect();
            let semantics = match &o.semantics {
                Semantics::Measure => RawSemantics::Measure,
                Semantics::Reset => RawSemantics::Reset,
                Semantics::Pulse(t) => RawSemantics::Pulse(t.clone()),
                Semantics::Rotation { axis, angle } => RawSemantics::Rotation {
                    axis: *axis,
                    angle: match angle {
                        Angle::Const(v) => RawAngle::Const(*v),
                        Angle::Param(p) => RawAngle::Param(p.clone()),
                    },
                },
                Semantics::Matrix(m) => {
                    RawSemantics::Matrix(m.rows().iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect())
                }
            };
            (o.name.clone(), RawOp { duration_ns, num_qubits: o.num_qubits as i64, params, semantics })
        })
        .collect();
    let raw = RawConfig {
        platform: RawPlatform {
            qubit_count: c.qubit_count as i64,
            cycle_time_ns: c.cycle_time.as_ns_f64(),
            extensions: c.extensions.clone(),
        },
        operations: RawOps(ops),
    };
    format!("package {};\n{}\n", c.package, serde_json::to_string_pretty(&raw).expect("config serializes"))
}

/// Unitary of a gate for concrete parameter values (ints and bools are
/// passed as their numeric value).
pub fn semantics_unitary(op: &OpDef, params: &[f64]) -> Result<CMatrix, ConfigError> {
    match &op.semantics {
        Semantics::Rotation { axis, angle } => {
            let theta = match angle {
                Angle::Const(v) => *v,
                Angle::Param(p) => {
                    let idx = op.params.iter().position(|(n, _)| n == p).expect("validated parameter reference");
                    *params
                        .get(idx)
                        .ok_or_else(|| semantic(format!("operation `{}`: missing parameter `{p}`", op.name)))?
                }
            };
            Ok(linalg::rotation(*axis, theta))
        }
        Semantics::Matrix(m) => Ok(m.clone()),
        Semantics::Measure | Semantics::Reset | Semantics::Pulse(_) => Err(ConfigError::NoUnitary(op.name.clone())),
    }
}

pub fn duration_ns(op: &OpDef) -> i64 {
    op.duration_ns()
}
