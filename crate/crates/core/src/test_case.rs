//! Test cases: the unit of selection and execution.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

/// An argument value passed to a method invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Truthiness used by guards that test a bare value.
    pub fn truthy(&self) -> bool {
        match self {
            Value::Bool(b) => *b,
            Value::Int(v) => *v != 0,
            Value::Real(v) => *v != 0.0,
            Value::Str(s) => !s.is_empty(),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.into())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

/// Canonical rendering: integers in decimal, strings verbatim, reals with
/// six significant digits.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => f.write_str(s),
            Value::Real(v) => write_real(f, *v),
        }
    }
}

fn write_real(f: &mut impl fmt::Write, v: f64) -> fmt::Result {
    const DIGITS: i32 = 6;
    if v.is_nan() {
        return f.write_str("nan");
    }
    if v.is_infinite() {
        return f.write_str(if v > 0.0 { "inf" } else { "-inf" });
    }
    if v == 0.0 {
        return f.write_str("0");
    }
    // Round to six significant digits first so the exponent reflects carries
    // such as 999999.5 -> 1e6.
    let mut sci = String::new();
    write!(sci, "{:.*e}", (DIGITS - 1) as usize, v)?;
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        let mut fixed = String::new();
        write!(fixed, "{:.*}", decimals, v)?;
        f.write_str(trim_fraction(&fixed))
    } else {
        write!(f, "{}e{}", trim_fraction(mantissa), exp)
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One step of a test: a method name and its arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub method: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<Value>,
}

impl Action {
    pub fn new(method: impl Into<String>) -> Self {
        Action {
            method: method.into(),
            args: Vec::new(),
        }
    }

    pub fn with_args(method: impl Into<String>, args: Vec<Value>) -> Self {
        Action {
            method: method.into(),
            args,
        }
    }

    /// `name(v1,v2,...)`, or the bare name when there are no arguments.
    pub fn render(&self) -> String {
        let mut out = self.method.clone();
        if !self.args.is_empty() {
            out.push('(');
            for (i, arg) in self.args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{arg}");
            }
            out.push(')');
        }
        out
    }
}

/// A test case is either a sequence of actions or a raw string input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestCase {
    Actions(Vec<Action>),
    Raw(String),
}

impl TestCase {
    pub fn raw(s: impl Into<String>) -> Self {
        TestCase::Raw(s.into())
    }

    /// Builds an action sequence from method names without arguments.
    pub fn methods<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TestCase::Actions(names.into_iter().map(Action::new).collect())
    }

    /// Number of statements (actions) or characters.
    pub fn len(&self) -> usize {
        match self {
            TestCase::Actions(a) => a.len(),
            TestCase::Raw(s) => s.chars().count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn actions(&self) -> &[Action] {
        match self {
            TestCase::Actions(a) => a,
            TestCase::Raw(_) => &[],
        }
    }

    pub fn as_raw(&self) -> Option<&str> {
        match self {
            TestCase::Raw(s) => Some(s),
            TestCase::Actions(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn renders_arguments() {
        let a = Action::with_args("add", vec!["John".into(), "My street".into()]);
        assert_eq!(a.render(), "add(John,My street)");
        assert_eq!(Action::with_args("find", vec![1.into()]).render(), "find(1)");
        assert_eq!(Action::new("goToFind").render(), "goToFind");
    }

    #[test]
    fn reals_use_six_significant_digits() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (4.56789123, "4.56789"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e6"),
            (0.000012345678, "1.23457e-5"),
            (0.0001, "0.0001"),
            (-2.5, "-2.5"),
            (999999.5, "1e6"),
        ];
        for (v, want) in cases {
            assert_eq!(Value::Real(v).to_string(), want, "{v}");
        }
    }

    #[test]
    fn length_counts_chars_or_actions() {
        assert_eq!(TestCase::raw("héllo").len(), 5);
        assert_eq!(TestCase::methods(["a", "b"]).len(), 2);
        assert!(TestCase::raw("").is_empty());
    }
}
