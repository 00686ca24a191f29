//! Guard and effect language.
//!
//! Documents write expressions in prefix notation as nested arrays, for
//! example `["and", ["nonempty", "owners"], ["in", ["arg", "id"], "owners"]]`.
//! [`SExpr`] is that raw tree; [`Guard`], [`Expr`] and [`Effect`] are the
//! compiled forms with argument names resolved to positions.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::state::AppState;
use crate::test_case::Value;

/// Raw prefix-notation tree as it appears in a model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SExpr {
    Atom(Value),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn list(items: impl IntoIterator<Item = SExpr>) -> Self {
        SExpr::List(items.into_iter().collect())
    }

    pub fn sym(s: &str) -> Self {
        SExpr::Atom(Value::Str(s.into()))
    }

    fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Atom(Value::Str(s)) => Some(s),
            _ => None,
        }
    }
}

/// Names a compiled expression may refer to.
pub trait Scope {
    fn has_variable(&self, name: &str) -> bool;
    fn has_collection(&self, name: &str) -> bool;
    fn arg_index(&self, name: &str) -> Option<usize>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("malformed expression: {0}")]
    Malformed(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("undeclared variable `{0}`")]
    UnknownVariable(String),
    #[error("undeclared collection `{0}`")]
    UnknownCollection(String),
    #[error("undeclared argument `{0}`")]
    UnknownArgument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(Value),
    Var(String),
    Arg(usize),
    Len(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Guard {
    Const(bool),
    And(Vec<Guard>),
    Or(Vec<Guard>),
    Not(Box<Guard>),
    Cmp(CmpOp, Expr, Expr),
    /// Value is a member of the named collection.
    In(Expr, String),
    NonEmpty(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Effect {
    Set(String, Expr),
    /// Inserts the collection's next auto-increment id.
    Insert(String),
    InsertValue(String, Expr),
    Remove(String, Expr),
    Clear(String),
}

fn malformed(what: &str, e: &SExpr) -> ExprError {
    ExprError::Malformed(format!("{what}: {e:?}"))
}

fn split_op(e: &SExpr) -> Result<(&str, &[SExpr]), ExprError> {
    match e {
        SExpr::List(items) if !items.is_empty() => {
            let op = items[0]
                .as_symbol()
                .ok_or_else(|| malformed("operator must be a string", e))?;
            Ok((op, &items[1..]))
        }
        _ => Err(malformed("expected a non-empty array", e)),
    }
}

fn arity(op: &str, args: &[SExpr], n: usize) -> Result<(), ExprError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(ExprError::Malformed(format!(
            "`{op}` takes {n} operand(s), got {}",
            args.len()
        )))
    }
}

fn symbol<'a>(op: &str, e: &'a SExpr) -> Result<&'a str, ExprError> {
    e.as_symbol()
        .ok_or_else(|| ExprError::Malformed(format!("`{op}` expects a name, got {e:?}")))
}

fn collection(op: &str, e: &SExpr, scope: &dyn Scope) -> Result<String, ExprError> {
    let name = symbol(op, e)?;
    if scope.has_collection(name) {
        Ok(name.to_string())
    } else {
        Err(ExprError::UnknownCollection(name.to_string()))
    }
}

fn variable(op: &str, e: &SExpr, scope: &dyn Scope) -> Result<String, ExprError> {
    let name = symbol(op, e)?;
    if scope.has_variable(name) {
        Ok(name.to_string())
    } else {
        Err(ExprError::UnknownVariable(name.to_string()))
    }
}

impl Expr {
    pub fn compile(e: &SExpr, scope: &dyn Scope) -> Result<Expr, ExprError> {
        let (op, args) = match e {
            SExpr::Atom(v) => return Ok(Expr::Const(v.clone())),
            _ => split_op(e)?,
        };
        match op {
            "var" => {
                arity(op, args, 1)?;
                Ok(Expr::Var(variable(op, &args[0], scope)?))
            }
            "arg" => {
                arity(op, args, 1)?;
                let name = symbol(op, &args[0])?;
                scope
                    .arg_index(name)
                    .map(Expr::Arg)
                    .ok_or_else(|| ExprError::UnknownArgument(name.to_string()))
            }
            "len" => {
                arity(op, args, 1)?;
                Ok(Expr::Len(collection(op, &args[0], scope)?))
            }
            "+" | "-" => {
                arity(op, args, 2)?;
                let a = Box::new(Expr::compile(&args[0], scope)?);
                let b = Box::new(Expr::compile(&args[1], scope)?);
                Ok(if op == "+" { Expr::Add(a, b) } else { Expr::Sub(a, b) })
            }
            other => Err(ExprError::UnknownOperator(other.to_string())),
        }
    }

    /// `None` when the expression is ill-typed in this state.
    pub fn eval(&self, state: &AppState, args: &[Value]) -> Option<Value> {
        match self {
            Expr::Const(v) => Some(v.clone()),
            Expr::Var(n) => state.variable(n).cloned(),
            Expr::Arg(i) => args.get(*i).cloned(),
            Expr::Len(c) => state.collection(c).map(|c| Value::Int(c.len() as i64)),
            Expr::Add(a, b) => arith(a.eval(state, args)?, b.eval(state, args)?, true),
            Expr::Sub(a, b) => arith(a.eval(state, args)?, b.eval(state, args)?, false),
        }
    }
}

fn arith(a: Value, b: Value, add: bool) -> Option<Value> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            if add {
                x.checked_add(y)
            } else {
                x.checked_sub(y)
            }
            .map(Value::Int)
        }
        (Value::Real(x), Value::Real(y)) => Some(Value::Real(if add { x + y } else { x - y })),
        _ => None,
    }
}

fn compare(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Real(x), Value::Real(y)) => x.partial_cmp(y),
        (Value::Int(x), Value::Real(y)) => (*x as f64).partial_cmp(y),
        (Value::Real(x), Value::Int(y)) => x.partial_cmp(&(*y as f64)),
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        (Value::Bool(x), Value::Bool(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

impl Guard {
    pub fn compile(e: &SExpr, scope: &dyn Scope) -> Result<Guard, ExprError> {
        if let SExpr::Atom(Value::Bool(b)) = e {
            return Ok(Guard::Const(*b));
        }
        let (op, args) = split_op(e)?;
        let cmp = |c: CmpOp| -> Result<Guard, ExprError> {
            arity(op, args, 2)?;
            Ok(Guard::Cmp(
                c,
                Expr::compile(&args[0], scope)?,
                Expr::compile(&args[1], scope)?,
            ))
        };
        match op {
            "true" | "false" => {
                arity(op, args, 0)?;
                Ok(Guard::Const(op == "true"))
            }
            "and" | "or" => {
                let parts = args
                    .iter()
                    .map(|a| Guard::compile(a, scope))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(if op == "and" { Guard::And(parts) } else { Guard::Or(parts) })
            }
            "not" => {
                arity(op, args, 1)?;
                Ok(Guard::Not(Box::new(Guard::compile(&args[0], scope)?)))
            }
            "==" => cmp(CmpOp::Eq),
            "!=" => cmp(CmpOp::Ne),
            "<" => cmp(CmpOp::Lt),
            "<=" => cmp(CmpOp::Le),
            ">" => cmp(CmpOp::Gt),
            ">=" => cmp(CmpOp::Ge),
            "in" => {
                arity(op, args, 2)?;
                Ok(Guard::In(
                    Expr::compile(&args[0], scope)?,
                    collection(op, &args[1], scope)?,
                ))
            }
            "nonempty" => {
                arity(op, args, 1)?;
                Ok(Guard::NonEmpty(collection(op, &args[0], scope)?))
            }
            other => Err(ExprError::UnknownOperator(other.to_string())),
        }
    }

    /// Total and side-effect free: ill-typed comparisons are false.
    pub fn eval(&self, state: &AppState, args: &[Value]) -> bool {
        match self {
            Guard::Const(b) => *b,
            Guard::And(gs) => gs.iter().all(|g| g.eval(state, args)),
            Guard::Or(gs) => gs.iter().any(|g| g.eval(state, args)),
            Guard::Not(g) => !g.eval(state, args),
            Guard::Cmp(op, a, b) => {
                let (Some(a), Some(b)) = (a.eval(state, args), b.eval(state, args)) else {
                    return false;
                };
                match (op, compare(&a, &b)) {
                    (CmpOp::Ne, None) => true,
                    (_, None) => false,
                    (CmpOp::Eq, Some(o)) => o == Ordering::Equal,
                    (CmpOp::Ne, Some(o)) => o != Ordering::Equal,
                    (CmpOp::Lt, Some(o)) => o == Ordering::Less,
                    (CmpOp::Le, Some(o)) => o != Ordering::Greater,
                    (CmpOp::Gt, Some(o)) => o == Ordering::Greater,
                    (CmpOp::Ge, Some(o)) => o != Ordering::Less,
                }
            }
            Guard::In(e, c) => match (e.eval(state, args), state.collection(c)) {
                (Some(v), Some(items)) => items.contains(&v),
                _ => false,
            },
            Guard::NonEmpty(c) => state.collection(c).is_some_and(|c| !c.is_empty()),
        }
    }
}

impl Effect {
    pub fn compile(e: &SExpr, scope: &dyn Scope) -> Result<Effect, ExprError> {
        let (op, args) = split_op(e)?;
        match op {
            "set" => {
                arity(op, args, 2)?;
                Ok(Effect::Set(
                    variable(op, &args[0], scope)?,
                    Expr::compile(&args[1], scope)?,
                ))
            }
            "insert" => {
                arity(op, args, 1)?;
                Ok(Effect::Insert(collection(op, &args[0], scope)?))
            }
            "insert_value" | "remove" => {
                arity(op, args, 2)?;
                let c = collection(op, &args[0], scope)?;
                let v = Expr::compile(&args[1], scope)?;
                Ok(if op == "remove" {
                    Effect::Remove(c, v)
                } else {
                    Effect::InsertValue(c, v)
                })
            }
            "clear" => {
                arity(op, args, 1)?;
                Ok(Effect::Clear(collection(op, &args[0], scope)?))
            }
            other => Err(ExprError::UnknownOperator(other.to_string())),
        }
    }

    pub fn apply(&self, state: &mut AppState, args: &[Value]) {
        match self {
            Effect::Set(var, e) => {
                if let Some(v) = e.eval(state, args) {
                    state.set_variable(var, v);
                }
            }
            Effect::Insert(c) => state.insert_next_id(c),
            Effect::InsertValue(c, e) => {
                if let Some(v) = e.eval(state, args) {
                    state.insert(c, v);
                }
            }
            Effect::Remove(c, e) => {
                if let Some(v) = e.eval(state, args) {
                    state.remove(c, &v);
                }
            }
            Effect::Clear(c) => state.clear(c),
        }
    }
}
