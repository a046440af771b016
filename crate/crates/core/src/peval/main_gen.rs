//! Generation of the `main` operation that binds host arguments as
//! literals and calls the kernel.

use std::fmt::Write;

use thiserror::Error;

use crate::frontend::pretty::fmt_double;
use crate::ir::Value;
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArgTypeError {
    #[error("`{op}` takes {want} argument(s), {got} given")]
    Count { op: String, want: usize, got: usize },
    #[error("argument {index} of `{op}`: expected `{want}`, got {got}")]
    Mismatch { op: String, index: usize, want: Type, got: String },
    #[error("argument {index} of `{op}`: {what}")]
    Unrepresentable { op: String, index: usize, what: String },
    #[error("`{op}` has a parameter of type `{ty}`, which the host cannot supply")]
    NotClassical { op: String, ty: Type },
}

/// True when `v` is a well-formed value of type `t`.
pub fn value_has_type(v: &Value, t: &Type) -> bool {
    match (v, t) {
        (Value::Unit, Type::Unit) | (Value::Bool(_), Type::Bool) | (Value::Int(_), Type::Int) => true,
        (Value::Double(_), Type::Double) => true,
        (Value::Array(vs), Type::Array(e)) => vs.iter().all(|x| value_has_type(x, e)),
        (Value::Tuple(vs), Type::Tuple(ts)) => {
            vs.len() == ts.len() && vs.iter().zip(ts).all(|(x, t)| value_has_type(x, t))
        }
        _ => false,
    }
}

fn kind_suffix(t: &Type) -> &'static str {
    match t {
        Type::Array(_) => "arr",
        Type::Bool => "bool",
        Type::Int => "int",
        Type::Double => "double",
        Type::Tuple(_) => "tuple",
        _ => "unit",
    }
}

fn literal(v: &Value, out: &mut String) -> Result<(), String> {
    match v {
        Value::Bool(b) => write!(out, "{b}").unwrap(),
        Value::Int(i32::MIN) => out.push_str("(-2147483647 - 1)"),
        Value::Int(i) => write!(out, "{i}").unwrap(),
        Value::Double(d) if !d.is_finite() => return Err(format!("{d} has no literal form")),
        Value::Double(d) => out.push_str(&fmt_double(*d)),
        Value::Array(vs) => {
            out.push('{');
            for (i, x) in vs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                literal(x, out)?;
            }
            out.push('}');
        }
        Value::Tuple(vs) => {
            out.push('(');
            for (i, x) in vs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                literal(x, out)?;
            }
            out.push(')');
        }
        other => return Err(format!("{other} cannot be written as a literal")),
    }
    Ok(())
}

/// Source of a `main` operation in package `package` that calls `op`
/// with `args` bound to local variables.
pub fn generate_main(
    package: &str,
    op: &str,
    params: &[Type],
    ret: &Type,
    args: &[Value],
) -> Result<String, ArgTypeError> {
    if params.len() != args.len() {
        return Err(ArgTypeError::Count { op: op.into(), want: params.len(), got: args.len() });
    }
    let mut body = String::new();
    let mut names = Vec::new();
    for (i, (t, v)) in params.iter().zip(args).enumerate() {
        if !t.is_classical() || *t == Type::Unit {
            return Err(ArgTypeError::NotClassical { op: op.into(), ty: t.clone() });
        }
        if !value_has_type(v, t) {
            return Err(ArgTypeError::Mismatch { op: op.into(), index: i, want: t.clone(), got: v.to_string() });
        }
        let name = format!("var{i}_{}", kind_suffix(t));
        let mut lit = String::new();
        literal(v, &mut lit).map_err(|what| ArgTypeError::Unrepresentable { op: op.into(), index: i, what })?;
        writeln!(body, "    {t} {name} = {lit};").unwrap();
        names.push(name);
    }
    let call = format!("{op}({})", names.join(","));
    if *ret == Type::Unit {
        writeln!(body, "    {call};").unwrap();
    } else {
        writeln!(body, "    return {call};").unwrap();
    }
    Ok(format!("package {package};\n\noperation main(): {ret} {{\n{body}}}\n"))
}
