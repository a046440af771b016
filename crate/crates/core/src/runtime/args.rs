//! The args-json manifest: a JSON array with one element per parameter,
//! converted by the parameter's declared type. Tuples are JSON arrays.

use serde_json::Value as Json;
use thiserror::Error;

use crate::ir::Value;
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArgsError {
    #[error("args-json is not valid JSON: {0}")]
    Syntax(String),
    #[error("args-json must be an array of {0} argument(s)")]
    Shape(usize),
    #[error("argument {index}: expected `{want}`, got {got}")]
    Mismatch { index: usize, want: Type, got: String },
}

pub fn args_from_json(text: &str, params: &[Type]) -> Result<Vec<Value>, ArgsError> {
    let json: Json = serde_json::from_str(text).map_err(|e| ArgsError::Syntax(e.to_string()))?;
    let Json::Array(items) = json else {
        return Err(ArgsError::Shape(params.len()));
    };
    if items.len() != params.len() {
        return Err(ArgsError::Shape(params.len()));
    }
    items
        .iter()
        .zip(params)
        .enumerate()
        .map(|(index, (j, t))| {
            convert(j, t).ok_or_else(|| ArgsError::Mismatch { index, want: t.clone(), got: j.to_string() })
        })
        .collect()
}

fn convert(j: &Json, t: &Type) -> Option<Value> {
    Some(match (t, j) {
        (Type::Bool, Json::Bool(b)) => Value::Bool(*b),
        (Type::Int, Json::Number(n)) => Value::Int(i32::try_from(n.as_i64()?).ok()?),
        (Type::Double, Json::Number(n)) => Value::Double(n.as_f64()?),
        (Type::Array(e), Json::Array(xs)) => Value::Array(xs.iter().map(|x| convert(x, e)).collect::<Option<_>>()?),
        (Type::Tuple(ts), Json::Array(xs)) if ts.len() == xs.len() => {
            Value::Tuple(xs.iter().zip(ts).map(|(x, t)| convert(x, t)).collect::<Option<_>>()?)
        }
        _ => return None,
    })
}
