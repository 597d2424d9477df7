//! Ground values, function keys and assignments.
//!
//! Every function term is evaluated, so the values a function can take are
//! always constants: integers, symbols or strings. Boolean functions map to
//! the symbols `true` and `false`.

use std::fmt;

use serde::{Serialize, Serializer};

pub const TRUE: &str = "true";
pub const FALSE: &str = "false";

/// A ground constant. The derived order (integers, then symbols, then
/// strings) is the canonical order used everywhere output is sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Sym(String),
    Str(String),
}

impl Value {
    pub fn sym(name: impl Into<String>) -> Self {
        Value::Sym(name.into())
    }

    pub fn truth(b: bool) -> Self {
        Value::Sym(if b { TRUE } else { FALSE }.to_string())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Sym(s) if s == TRUE => Some(true),
            Value::Sym(s) if s == FALSE => Some(false),
            _ => None,
        }
    }

    /// Text used when the value is spliced into a label: strings lose their
    /// quotes, everything else prints as usual.
    pub fn raw_text(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Sym(s) => f.write_str(s),
            Value::Str(s) => write!(f, "\"{}\"", escape_string(s)),
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

pub fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// A function applied to constant arguments, e.g. `alcohol(gabriel)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key {
    pub functor: String,
    pub args: Vec<Value>,
}

impl Key {
    pub fn new(functor: impl Into<String>, args: Vec<Value>) -> Self {
        Key {
            functor: functor.into(),
            args,
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.functor)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// One established value: `key = value`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub key: Key,
    pub value: Value,
}

impl Assignment {
    pub fn new(key: Key, value: Value) -> Self {
        Assignment { key, value }
    }

    /// Answer-set listing form: `p(a).`, `~p(a).` or `f(a)=v.`
    pub fn listing(&self) -> String {
        match self.value.as_bool() {
            Some(true) => format!("{}.", self.key),
            Some(false) => format!("~{}.", self.key),
            None => format!("{}={}.", self.key, self.value),
        }
    }
}

/// Explanation form: `p(a)`, `~p(a)` or `f(a) = v`.
impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value.as_bool() {
            Some(true) => write!(f, "{}", self.key),
            Some(false) => write!(f, "~{}", self.key),
            None => write!(f, "{} = {}", self.key, self.value),
        }
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_puts_integers_first() {
        let mut vs = vec![
            Value::Str("a".into()),
            Value::sym("b"),
            Value::Int(10),
            Value::Int(-3),
        ];
        vs.sort();
        assert_eq!(
            vs,
            vec![
                Value::Int(-3),
                Value::Int(10),
                Value::sym("b"),
                Value::Str("a".into())
            ]
        );
    }

    #[test]
    fn assignment_forms() {
        let k = Key::new("sentence", vec![Value::sym("gabriel")]);
        let a = Assignment::new(k.clone(), Value::sym("prison"));
        assert_eq!(a.to_string(), "sentence(gabriel) = prison");
        assert_eq!(a.listing(), "sentence(gabriel)=prison.");
        let b = Assignment::new(k, Value::truth(false));
        assert_eq!(b.to_string(), "~sentence(gabriel)");
        assert_eq!(b.listing(), "~sentence(gabriel).");
        let z = Assignment::new(Key::new("a", vec![]), Value::truth(true));
        assert_eq!(z.listing(), "a.");
    }
}
