//! Host/kernel data exchange: type descriptors and the little-endian,
//! offset-based byte image of classical values.
//!
//! Layout: `bool` is one byte, `int` four bytes two's complement, `double`
//! eight bytes binary64 (four bytes binary32 in f32 mode), `unit` nothing.
//! A tuple is its fields back to back. An array field is a four-byte
//! offset, relative to the field's own address, to a region holding the
//! element count followed by the elements. Regions are appended depth-first
//! after the enclosing fixed part.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ir::Value;
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Descriptor {
    Unit,
    Bool,
    Int,
    Double,
    Tuple(Vec<Descriptor>),
    Array(Box<Descriptor>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CodecOptions {
    /// Store doubles as IEEE-754 binary32.
    pub f32_doubles: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("value {value} does not match descriptor `{desc}`")]
    EncodeTypeMismatch { value: String, desc: String },
    #[error("result block truncated: need {need} bytes at offset {at}, have {len}")]
    DecodeTruncated { at: usize, need: usize, len: usize },
    #[error("array offset {offset} at address {at} escapes the {len}-byte block")]
    DecodeBadOffset { at: usize, offset: u32, len: usize },
    #[error("byte {byte:#04x} at offset {at} is not a bool")]
    DecodeBadBool { at: usize, byte: u8 },
    #[error("type `{0}` cannot be exchanged with the host")]
    UnsupportedType(String),
    #[error("bad type descriptor `{0}`")]
    DescriptorSyntax(String),
}

impl Descriptor {
    pub fn from_type(t: &Type) -> Result<Descriptor, CodecError> {
        Ok(match t {
            Type::Unit => Descriptor::Unit,
            Type::Bool => Descriptor::Bool,
            Type::Int => Descriptor::Int,
            Type::Double => Descriptor::Double,
            Type::Array(e) => Descriptor::Array(Box::new(Descriptor::from_type(e)?)),
            Type::Tuple(es) => Descriptor::Tuple(es.iter().map(Descriptor::from_type).collect::<Result<_, _>>()?),
            other => return Err(CodecError::UnsupportedType(other.to_string())),
        })
    }

    pub fn to_type(&self) -> Type {
        match self {
            Descriptor::Unit => Type::Unit,
            Descriptor::Bool => Type::Bool,
            Descriptor::Int => Type::Int,
            Descriptor::Double => Type::Double,
            Descriptor::Array(e) => Type::array(e.to_type()),
            Descriptor::Tuple(es) => Type::Tuple(es.iter().map(Descriptor::to_type).collect()),
        }
    }

    /// Bytes occupied in the enclosing fixed part.
    pub fn fixed_size(&self, opts: CodecOptions) -> usize {
        match self {
            Descriptor::Unit => 0,
            Descriptor::Bool => 1,
            Descriptor::Int | Descriptor::Array(_) => 4,
            Descriptor::Double if opts.f32_doubles => 4,
            Descriptor::Double => 8,
            Descriptor::Tuple(es) => es.iter().map(|e| e.fixed_size(opts)).sum(),
        }
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Descriptor::Unit => f.write_str("unit"),
            Descriptor::Bool => f.write_str("bool"),
            Descriptor::Int => f.write_str("int"),
            Descriptor::Double => f.write_str("double"),
            Descriptor::Array(e) => write!(f, "{e}[]"),
            Descriptor::Tuple(es) => {
                f.write_str("(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for Descriptor {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || CodecError::DescriptorSyntax(s.to_string());
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = DescParser { s: text.as_bytes(), pos: 0 };
        let d = p.desc().ok_or_else(err)?;
        if p.pos != p.s.len() {
            return Err(err());
        }
        Ok(d)
    }
}

struct DescParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl DescParser<'_> {
    fn eat(&mut self, lit: &str) -> bool {
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn desc(&mut self) -> Option<Descriptor> {
        let mut d = if self.eat("(") {
            let mut es = vec![self.desc()?];
            while self.eat(",") {
                es.push(self.desc()?);
            }
            if !self.eat(")") || es.len() < 2 {
                return None;
            }
            Descriptor::Tuple(es)
        } else if self.eat("unit") {
            Descriptor::Unit
        } else if self.eat("bool") {
            Descriptor::Bool
        } else if self.eat("int") {
            Descriptor::Int
        } else if self.eat("double") {
            Descriptor::Double
        } else {
            return None;
        };
        while self.eat("[]") {
            d = Descriptor::Array(Box::new(d));
        }
        Some(d)
    }
}

fn mismatch(v: &Value, d: &Descriptor) -> CodecError {
    CodecError::EncodeTypeMismatch { value: v.to_string(), desc: d.to_string() }
}

pub fn encode_value(v: &Value, d: &Descriptor, opts: CodecOptions) -> Result<Vec<u8>, CodecError> {
    let mut buf = vec![0u8; d.fixed_size(opts)];
    write(v, d, 0, &mut buf, opts)?;
    Ok(buf)
}

fn write(v: &Value, d: &Descriptor, at: usize, buf: &mut Vec<u8>, opts: CodecOptions) -> Result<(), CodecError> {
    match (v, d) {
        (Value::Unit, Descriptor::Unit) => {}
        (Value::Bool(b), Descriptor::Bool) => buf[at] = *b as u8,
        (Value::Int(i), Descriptor::Int) => buf[at..at + 4].copy_from_slice(&i.to_le_bytes()),
        (Value::Double(x), Descriptor::Double) if opts.f32_doubles => {
            buf[at..at + 4].copy_from_slice(&(*x as f32).to_le_bytes())
        }
        (Value::Double(x), Descriptor::Double) => buf[at..at + 8].copy_from_slice(&x.to_le_bytes()),
        (Value::Tuple(vs), Descriptor::Tuple(ds)) if vs.len() == ds.len() => {
            let mut off = at;
            for (x, e) in vs.iter().zip(ds) {
                write(x, e, off, buf, opts)?;
                off += e.fixed_size(opts);
            }
        }
        (Value::Array(vs), Descriptor::Array(e)) => {
            let region = buf.len();
            buf[at..at + 4].copy_from_slice(&((region - at) as u32).to_le_bytes());
            let es = e.fixed_size(opts);
            buf.resize(region + 4 + es * vs.len(), 0);
            buf[region..region + 4].copy_from_slice(&(vs.len() as u32).to_le_bytes());
            for (i, x) in vs.iter().enumerate() {
                write(x, e, region + 4 + i * es, buf, opts)?;
            }
        }
        _ => return Err(mismatch(v, d)),
    }
    Ok(())
}

/// Decodes a block that starts at offset 0 of `bytes`.
pub fn decode_value(bytes: &[u8], d: &Descriptor, opts: CodecOptions) -> Result<Value, CodecError> {
    decode_value_at(bytes, 0, d, opts)
}

/// Decodes a block that starts at `start`; offsets are position independent.
pub fn decode_value_at(bytes: &[u8], start: usize, d: &Descriptor, opts: CodecOptions) -> Result<Value, CodecError> {
    read(bytes, start, d, opts)
}

fn take(bytes: &[u8], at: usize, n: usize) -> Result<&[u8], CodecError> {
    bytes.get(at..at.saturating_add(n)).ok_or(CodecError::DecodeTruncated { at, need: n, len: bytes.len() })
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, CodecError> {
    Ok(u32::from_le_bytes(take(bytes, at, 4)?.try_into().unwrap()))
}

fn read(bytes: &[u8], at: usize, d: &Descriptor, opts: CodecOptions) -> Result<Value, CodecError> {
    Ok(match d {
        Descriptor::Unit => Value::Unit,
        Descriptor::Bool => match take(bytes, at, 1)?[0] {
            0 => Value::Bool(false),
            1 => Value::Bool(true),
            byte => return Err(CodecError::DecodeBadBool { at, byte }),
        },
        Descriptor::Int => Value::Int(read_u32(bytes, at)? as i32),
        Descriptor::Double if opts.f32_doubles => Value::Double(f32::from_bits(read_u32(bytes, at)?) as f64),
        Descriptor::Double => Value::Double(f64::from_le_bytes(take(bytes, at, 8)?.try_into().unwrap())),
        Descriptor::Tuple(ds) => {
            let mut off = at;
            let mut vs = Vec::with_capacity(ds.len());
            for e in ds {
                vs.push(read(bytes, off, e, opts)?);
                off += e.fixed_size(opts);
            }
            Value::Tuple(vs)
        }
        Descriptor::Array(e) => {
            let offset = read_u32(bytes, at)?;
            let bad = CodecError::DecodeBadOffset { at, offset, len: bytes.len() };
            let region = at.checked_add(offset as usize).filter(|r| r + 4 <= bytes.len()).ok_or(bad.clone())?;
            let n = read_u32(bytes, region)? as usize;
            let es = e.fixed_size(opts);
            let need = n.checked_mul(es).ok_or(bad)?;
            take(bytes, region + 4, need)?;
            let mut vs = Vec::with_capacity(n);
            for i in 0..n {
                vs.push(read(bytes, region + 4 + i * es, e, opts)?);
            }
            Value::Array(vs)
        }
    })
}

/// Host-facing text form: `(16, 0)`, `[2, 6, 8]`, `true`, `0.625`, `()`.
pub fn format_value(v: &Value) -> String {
    match v {
        Value::Unit => "()".into(),
        Value::Double(x) => crate::frontend::pretty::fmt_double(*x),
        Value::Tuple(vs) => format!("({})", vs.iter().map(format_value).collect::<Vec<_>>().join(", ")),
        Value::Array(vs) => format!("[{}]", vs.iter().map(format_value).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

/// JSON form; tuples become arrays.
pub fn value_to_json(v: &Value) -> serde_json::Value {
    use serde_json::Value as J;
    match v {
        Value::Unit => J::Null,
        Value::Bool(b) => J::Bool(*b),
        Value::Int(i) => J::from(*i),
        Value::Double(x) => serde_json::Number::from_f64(*x).map(J::Number).unwrap_or(J::Null),
        Value::Tuple(vs) | Value::Array(vs) => J::Array(vs.iter().map(value_to_json).collect()),
        other => J::String(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(xs: &[i32]) -> Value {
        Value::Array(xs.iter().map(|x| Value::Int(*x)).collect())
    }

    #[test]
    fn descriptor_text() {
        for s in ["unit", "bool", "int", "double", "int[]", "(int,int)", "(bool,double[])[][]", "int[][]"] {
            assert_eq!(s.parse::<Descriptor>().unwrap().to_string(), s);
        }
        assert_eq!("( int , int )".parse::<Descriptor>().unwrap().to_string(), "(int,int)");
        for bad in ["", "(int)", "int[", "float", "(int,int"] {
            assert!(bad.parse::<Descriptor>().is_err(), "{bad}");
        }
    }

    #[test]
    fn pair() {
        let d: Descriptor = "(int,int)".parse().unwrap();
        let b = encode_value(&Value::Tuple(vec![Value::Int(16), Value::Int(0)]), &d, CodecOptions::default()).unwrap();
        assert_eq!(b, [0x10, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn bool_byte() {
        assert_eq!(encode_value(&Value::Bool(true), &Descriptor::Bool, CodecOptions::default()).unwrap(), [1]);
    }

    #[test]
    fn int_array() {
        let d: Descriptor = "int[]".parse().unwrap();
        let b = encode_value(&ints(&[2, 6, 8]), &d, CodecOptions::default()).unwrap();
        assert_eq!(b, [4, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 6, 0, 0, 0, 8, 0, 0, 0]);
    }

    #[test]
    fn jagged() {
        let d: Descriptor = "int[][]".parse().unwrap();
        let v = Value::Array(vec![ints(&[1]), ints(&[2, 3])]);
        let b = encode_value(&v, &d, CodecOptions::default()).unwrap();
        #[rustfmt::skip]
        assert_eq!(b, [4,0,0,0, 2,0,0,0, 8,0,0,0, 12,0,0,0, 1,0,0,0, 1,0,0,0, 2,0,0,0, 2,0,0,0, 3,0,0,0]);
        assert!(decode_value(&b, &d, CodecOptions::default()).unwrap().same(&v));
    }

    #[test]
    fn errors() {
        let o = CodecOptions::default();
        assert!(matches!(decode_value(&[1], &Descriptor::Int, o), Err(CodecError::DecodeTruncated { .. })));
        let d: Descriptor = "int[]".parse().unwrap();
        assert!(matches!(decode_value(&[200, 0, 0, 0], &d, o), Err(CodecError::DecodeBadOffset { .. })));
        assert!(matches!(decode_value(&[2], &Descriptor::Bool, o), Err(CodecError::DecodeBadBool { .. })));
        assert!(matches!(
            encode_value(&Value::Int(1), &Descriptor::Bool, o),
            Err(CodecError::EncodeTypeMismatch { .. })
        ));
    }

    #[test]
    fn position_independent() {
        let d: Descriptor = "(bool,int[])".parse().unwrap();
        let v = Value::Tuple(vec![Value::Bool(true), ints(&[7, -1])]);
        let b = encode_value(&v, &d, CodecOptions::default()).unwrap();
        let mut shifted = vec![0xAA; 13];
        shifted.extend(&b);
        assert!(decode_value_at(&shifted, 13, &d, CodecOptions::default()).unwrap().same(&v));
    }

    #[test]
    fn text_forms() {
        assert_eq!(format_value(&Value::Tuple(vec![Value::Int(16), Value::Int(0)])), "(16, 0)");
        assert_eq!(format_value(&ints(&[2, 6])), "[2, 6]");
        assert_eq!(format_value(&Value::Double(0.625)), "0.625");
    }
}
