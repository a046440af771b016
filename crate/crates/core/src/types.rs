//! The Quingo type language shared by the frontend, the middle-end and the
//! data-exchange codec.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Bool,
    Int,
    Double,
    Unit,
    Qubit,
    Time,
    Timer,
    Array(Box<Type>),
    /// Arity is always at least two; single-element parentheses are grouping.
    Tuple(Vec<Type>),
    /// Operation type `param -> ret`. Multi-parameter operations take a tuple.
    Op(Box<Type>, Box<Type>),
}

impl Type {
    pub fn array(elem: Type) -> Type {
        Type::Array(Box::new(elem))
    }

    pub fn op(param: Type, ret: Type) -> Type {
        Type::Op(Box::new(param), Box::new(ret))
    }

    /// Builds the parameter type of an operation from its parameter list.
    pub fn params_type(params: &[Type]) -> Type {
        match params.len() {
            0 => Type::Unit,
            1 => params[0].clone(),
            _ => Type::Tuple(params.to_vec()),
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int | Type::Double)
    }

    /// True for values that may cross the host boundary and be serialized.
    pub fn is_classical(&self) -> bool {
        match self {
            Type::Bool | Type::Int | Type::Double | Type::Unit => true,
            Type::Array(e) => e.is_classical(),
            Type::Tuple(es) => es.iter().all(Type::is_classical),
            Type::Qubit | Type::Time | Type::Timer | Type::Op(..) => false,
        }
    }

    pub fn contains(&self, pred: &dyn Fn(&Type) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Type::Array(e) => e.contains(pred),
            Type::Tuple(es) => es.iter().any(|e| e.contains(pred)),
            Type::Op(p, r) => p.contains(pred) || r.contains(pred),
            _ => false,
        }
    }

    pub fn contains_qubit(&self) -> bool {
        self.contains(&|t| matches!(t, Type::Qubit))
    }

    /// `int` widens to `double`; arrays and tuples widen element-wise.
    pub fn assignable_from(&self, from: &Type) -> bool {
        match (self, from) {
            (a, b) if a == b => true,
            (Type::Double, Type::Int) => true,
            (Type::Array(a), Type::Array(b)) => a.assignable_from(b),
            (Type::Tuple(a), Type::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.assignable_from(y))
            }
            _ => false,
        }
    }

    /// Writes the type using `sep` between tuple elements.
    fn write_with(&self, f: &mut fmt::Formatter<'_>, sep: &str) -> fmt::Result {
        match self {
            Type::Bool => f.write_str("bool"),
            Type::Int => f.write_str("int"),
            Type::Double => f.write_str("double"),
            Type::Unit => f.write_str("unit"),
            Type::Qubit => f.write_str("qubit"),
            Type::Time => f.write_str("time"),
            Type::Timer => f.write_str("timer"),
            Type::Array(e) => {
                let needs_parens = matches!(**e, Type::Op(..));
                if needs_parens {
                    f.write_str("(")?;
                }
                e.write_with(f, sep)?;
                if needs_parens {
                    f.write_str(")")?;
                }
                f.write_str("[]")
            }
            Type::Tuple(es) => {
                f.write_str("(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    e.write_with(f, sep)?;
                }
                f.write_str(")")
            }
            Type::Op(p, r) => {
                if matches!(**p, Type::Op(..)) {
                    f.write_str("(")?;
                    p.write_with(f, sep)?;
                    f.write_str(")")?;
                } else {
                    p.write_with(f, sep)?;
                }
                f.write_str("->")?;
                r.write_with(f, sep)
            }
        }
    }

    /// Compact form without spaces, used by result descriptors.
    pub fn compact(&self) -> String {
        struct Compact<'a>(&'a Type);
        impl fmt::Display for Compact<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.write_with(f, ",")
            }
        }
        Compact(self).to_string()
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_with(f, ", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_forms() {
        let t = Type::Tuple(vec![Type::Int, Type::Int]);
        assert_eq!(t.to_string(), "(int, int)");
        assert_eq!(t.compact(), "(int,int)");
        assert_eq!(Type::array(Type::array(Type::Int)).to_string(), "int[][]");
        let op = Type::op(Type::Tuple(vec![Type::Qubit, Type::Int]), Type::Unit);
        assert_eq!(op.to_string(), "(qubit, int)->unit");
    }

    #[test]
    fn widening() {
        assert!(Type::Double.assignable_from(&Type::Int));
        assert!(!Type::Int.assignable_from(&Type::Double));
        assert!(!Type::Int.assignable_from(&Type::Bool));
        assert!(Type::array(Type::Double).assignable_from(&Type::array(Type::Int)));
    }
}
