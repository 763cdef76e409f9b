//! Runtime values: arbitrary-precision integers, booleans, sequences and
//! the two infinities used as identities of `min` and `max`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::Value as Json;
use thiserror::Error;

/// Arbitrary precision integer with a fast path for values fitting in `i64`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Int {
    Small(i64),
    Big(BigInt),
}

impl Int {
    pub fn zero() -> Int {
        Int::Small(0)
    }

    fn norm(b: BigInt) -> Int {
        match b.to_i64() {
            Some(v) => Int::Small(v),
            None => Int::Big(b),
        }
    }

    pub fn to_big(&self) -> BigInt {
        match self {
            Int::Small(v) => BigInt::from(*v),
            Int::Big(b) => b.clone(),
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        match self {
            Int::Small(v) => Some(*v),
            Int::Big(b) => b.to_i64(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Int::Small(v) => *v == 0,
            Int::Big(b) => b.is_zero(),
        }
    }

    pub fn add(&self, o: &Int) -> Int {
        if let (Int::Small(a), Int::Small(b)) = (self, o) {
            if let Some(r) = a.checked_add(*b) {
                return Int::Small(r);
            }
        }
        Int::norm(self.to_big() + o.to_big())
    }

    pub fn sub(&self, o: &Int) -> Int {
        if let (Int::Small(a), Int::Small(b)) = (self, o) {
            if let Some(r) = a.checked_sub(*b) {
                return Int::Small(r);
            }
        }
        Int::norm(self.to_big() - o.to_big())
    }

    pub fn mul(&self, o: &Int) -> Int {
        if let (Int::Small(a), Int::Small(b)) = (self, o) {
            if let Some(r) = a.checked_mul(*b) {
                return Int::Small(r);
            }
        }
        Int::norm(self.to_big() * o.to_big())
    }

    /// Division truncating toward zero. `None` on a zero divisor.
    pub fn div(&self, o: &Int) -> Option<Int> {
        if o.is_zero() {
            return None;
        }
        if let (Int::Small(a), Int::Small(b)) = (self, o) {
            if let Some(r) = a.checked_div(*b) {
                return Some(Int::Small(r));
            }
        }
        let (q, _) = self.to_big().div_rem(&o.to_big());
        Some(Int::norm(q))
    }

    pub fn neg(&self) -> Int {
        if let Int::Small(a) = self {
            if let Some(r) = a.checked_neg() {
                return Int::Small(r);
            }
        }
        Int::norm(-self.to_big())
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Int::Small(v) => *v < 0,
            Int::Big(b) => b.is_negative(),
        }
    }
}

impl From<i64> for Int {
    fn from(v: i64) -> Int {
        Int::Small(v)
    }
}

impl Ord for Int {
    fn cmp(&self, o: &Int) -> Ordering {
        match (self, o) {
            (Int::Small(a), Int::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&o.to_big()),
        }
    }
}

impl PartialOrd for Int {
    fn partial_cmp(&self, o: &Int) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Int::Small(v) => write!(f, "{v}"),
            Int::Big(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Int(Int),
    Bool(bool),
    Seq(Arc<Vec<Value>>),
    PlusInf,
    MinusInf,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("type mismatch: expected {expected}, found {found}")]
    Type { expected: &'static str, found: String },
    #[error("undefined arithmetic on infinities: {0}")]
    Infinity(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("subscript {index} out of bounds for length {len}")]
    OutOfBounds { index: String, len: usize },
}

impl Value {
    pub fn int(v: i64) -> Value {
        Value::Int(Int::Small(v))
    }

    pub fn seq(items: Vec<Value>) -> Value {
        Value::Seq(Arc::new(items))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Seq(_) => "seq",
            Value::PlusInf => "+inf",
            Value::MinusInf => "-inf",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Value::Int(_) | Value::PlusInf | Value::MinusInf)
    }

    pub fn as_bool(&self) -> Result<bool, ValueError> {
        match self {
            Value::Bool(b) => Ok(*b),
            v => Err(type_err("bool", v)),
        }
    }

    pub fn as_int(&self) -> Result<&Int, ValueError> {
        match self {
            Value::Int(i) => Ok(i),
            v => Err(type_err("int", v)),
        }
    }

    pub fn as_seq(&self) -> Result<&Arc<Vec<Value>>, ValueError> {
        match self {
            Value::Seq(s) => Ok(s),
            v => Err(type_err("seq", v)),
        }
    }

    /// Index a sequence with an integer subscript.
    pub fn index(&self, idx: &Value) -> Result<&Value, ValueError> {
        let s = self.as_seq()?;
        let i = idx.as_int()?;
        match i.to_i64() {
            Some(k) if k >= 0 && (k as usize) < s.len() => Ok(&s[k as usize]),
            _ => Err(ValueError::OutOfBounds { index: i.to_string(), len: s.len() }),
        }
    }

    pub fn numeric_cmp(&self, o: &Value) -> Result<Ordering, ValueError> {
        use Value::*;
        Ok(match (self, o) {
            (Int(a), Int(b)) => a.cmp(b),
            (MinusInf, MinusInf) | (PlusInf, PlusInf) => Ordering::Equal,
            (MinusInf, _) | (_, PlusInf) if self.is_numeric() && o.is_numeric() => Ordering::Less,
            (PlusInf, _) | (_, MinusInf) if self.is_numeric() && o.is_numeric() => Ordering::Greater,
            (a, b) => {
                let bad = if a.is_numeric() { b } else { a };
                return Err(type_err("int", bad));
            }
        })
    }

    /// Addition; an infinity absorbs a finite operand, opposite infinities are an error.
    pub fn add(&self, o: &Value) -> Result<Value, ValueError> {
        use Value::*;
        match (self, o) {
            (Int(a), Int(b)) => Ok(Int(a.add(b))),
            (PlusInf, MinusInf) | (MinusInf, PlusInf) => Err(ValueError::Infinity(format!("{self} + {o}"))),
            (PlusInf, x) | (x, PlusInf) if x.is_numeric() => Ok(PlusInf),
            (MinusInf, x) | (x, MinusInf) if x.is_numeric() => Ok(MinusInf),
            (a, b) => Err(type_err("int", if a.is_numeric() { b } else { a })),
        }
    }

    pub fn neg(&self) -> Result<Value, ValueError> {
        match self {
            Value::Int(a) => Ok(Value::Int(a.neg())),
            Value::PlusInf => Ok(Value::MinusInf),
            Value::MinusInf => Ok(Value::PlusInf),
            v => Err(type_err("int", v)),
        }
    }

    pub fn sub(&self, o: &Value) -> Result<Value, ValueError> {
        self.add(&o.neg()?)
    }

    pub fn mul(&self, o: &Value) -> Result<Value, ValueError> {
        match (self, o) {
            (Value::Int(a), Value::Int(b)) => Ok(Value::Int(a.mul(b))),
            (a, b) if a.is_numeric() && b.is_numeric() => Err(ValueError::Infinity(format!("{a} * {b}"))),
            (a, b) => Err(type_err("int", if a.is_numeric() { b } else { a })),
        }
    }

    pub fn div(&self, o: &Value) -> Result<Value, ValueError> {
        match (self, o) {
            (Value::Int(a), Value::Int(b)) => a.div(b).map(Value::Int).ok_or(ValueError::DivisionByZero),
            (a, b) if a.is_numeric() && b.is_numeric() => Err(ValueError::Infinity(format!("{a} / {b}"))),
            (a, b) => Err(type_err("int", if a.is_numeric() { b } else { a })),
        }
    }

    pub fn min(&self, o: &Value) -> Result<Value, ValueError> {
        Ok(if self.numeric_cmp(o)? == Ordering::Greater { o.clone() } else { self.clone() })
    }

    pub fn max(&self, o: &Value) -> Result<Value, ValueError> {
        Ok(if self.numeric_cmp(o)? == Ordering::Less { o.clone() } else { self.clone() })
    }

    /// Structural equality usable on any pair of same-shaped values.
    pub fn equals(&self, o: &Value) -> Result<bool, ValueError> {
        match (self, o) {
            (Value::Bool(a), Value::Bool(b)) => Ok(a == b),
            (Value::Seq(a), Value::Seq(b)) => Ok(a == b),
            (a, b) => Ok(a.numeric_cmp(b)? == Ordering::Equal),
        }
    }

    /// A sequence of `len` copies of `v`.
    pub fn fill(v: Value, len: usize) -> Value {
        Value::seq(vec![v; len])
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Int(Int::Small(v)) => Json::from(*v),
            Value::Int(Int::Big(b)) => Json::String(b.to_string()),
            Value::Bool(b) => Json::Bool(*b),
            Value::Seq(s) => Json::Array(s.iter().map(Value::to_json).collect()),
            Value::PlusInf => Json::String("inf".into()),
            Value::MinusInf => Json::String("-inf".into()),
        }
    }

    pub fn from_json(j: &Json) -> Result<Value, ValueError> {
        match j {
            Json::Bool(b) => Ok(Value::Bool(*b)),
            Json::Number(n) => match n.as_i64() {
                Some(v) => Ok(Value::int(v)),
                None => Err(ValueError::Type { expected: "integer", found: n.to_string() }),
            },
            Json::String(s) if s == "inf" || s == "+inf" => Ok(Value::PlusInf),
            Json::String(s) if s == "-inf" => Ok(Value::MinusInf),
            Json::String(s) => s
                .parse::<BigInt>()
                .map(|b| Value::Int(Int::norm(b)))
                .map_err(|_| ValueError::Type { expected: "integer", found: s.clone() }),
            Json::Array(items) => Ok(Value::seq(items.iter().map(Value::from_json).collect::<Result<_, _>>()?)),
            other => Err(ValueError::Type { expected: "value", found: other.to_string() }),
        }
    }
}

fn type_err(expected: &'static str, found: &Value) -> ValueError {
    ValueError::Type { expected, found: found.kind_name().to_string() }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::PlusInf => write!(f, "inf"),
            Value::MinusInf => write!(f, "-inf"),
            Value::Seq(s) => {
                write!(f, "[")?;
                for (k, v) in s.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_overflow_promotes() {
        let a = Int::Small(i64::MAX);
        let b = a.add(&Int::Small(1));
        assert!(matches!(b, Int::Big(_)));
        assert_eq!(b.sub(&Int::Small(1)), Int::Small(i64::MAX));
    }

    #[test]
    fn division_truncates_toward_zero() {
        assert_eq!(Int::Small(-7).div(&Int::Small(2)), Some(Int::Small(-3)));
        assert_eq!(Int::Small(7).div(&Int::Small(-2)), Some(Int::Small(-3)));
        assert_eq!(Int::Small(1).div(&Int::Small(0)), None);
    }

    #[test]
    fn infinities_order_and_absorb() {
        let five = Value::int(5);
        assert_eq!(Value::MinusInf.max(&five).unwrap(), five);
        assert_eq!(Value::PlusInf.min(&five).unwrap(), five);
        assert_eq!(Value::MinusInf.add(&five).unwrap(), Value::MinusInf);
        assert!(Value::MinusInf.add(&Value::PlusInf).is_err());
        assert!(Value::PlusInf.mul(&five).is_err());
    }
}
