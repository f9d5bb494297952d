use super::rel::{stronglift, weaklift, EventSet, Rel};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Expression over named relations and event sets.
///
/// A single expression language covers both relation- and set-valued
/// terms; evaluation is dynamically kinded (see [`Value`]). Set lifting
/// `[S]`, cartesian product `S*T` and `dom`/`ran` move between the two
/// kinds.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Expr {
    Name(String),
    Union(Arc<Expr>, Arc<Expr>),
    Inter(Arc<Expr>, Arc<Expr>),
    Diff(Arc<Expr>, Arc<Expr>),
    /// Relational composition `a ; b`.
    Seq(Arc<Expr>, Arc<Expr>),
    /// Cartesian product of two event sets.
    Cross(Arc<Expr>, Arc<Expr>),
    Inverse(Arc<Expr>),
    /// Complement relative to `E` or `E x E`.
    Complement(Arc<Expr>),
    /// `r?`
    RClos(Arc<Expr>),
    /// `r+`
    TClos(Arc<Expr>),
    /// `r*`
    RTClos(Arc<Expr>),
    /// `[S]`
    Lift(Arc<Expr>),
    Domain(Arc<Expr>),
    Range(Arc<Expr>),
    WeakLift(Arc<Expr>, Arc<Expr>),
    StrongLift(Arc<Expr>, Arc<Expr>),
}

/// Result of evaluating an [`Expr`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Value {
    Rel(Rel),
    Set(EventSet),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Rel(_) => "relation",
            Value::Set(_) => "set",
        }
    }

    pub fn as_rel(&self) -> Option<Rel> {
        match self {
            Value::Rel(r) => Some(*r),
            Value::Set(_) => None,
        }
    }

    pub fn as_set(&self) -> Option<EventSet> {
        match self {
            Value::Set(s) => Some(*s),
            Value::Rel(_) => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum EvalError {
    #[error("unresolved name `{0}`")]
    Name(String),
    #[error("operator `{op}` expects a {expected}, got a {got}")]
    Kind {
        op: &'static str,
        expected: &'static str,
        got: &'static str,
    },
}

impl Expr {
    pub fn name(s: &str) -> Expr {
        Expr::Name(s.to_string())
    }

    /// Denotational evaluation against a name environment.
    ///
    /// Total on closed expressions: every named reference must resolve in
    /// `env`. Closures are computed to fixpoint; complement is relative to
    /// the universe of the owning execution.
    pub fn eval(&self, env: &HashMap<String, Value>) -> Result<Value, EvalError> {
        use Expr::*;
        Ok(match self {
            Name(n) => *env.get(n).ok_or_else(|| EvalError::Name(n.clone()))?,
            Union(a, b) => binop("|", a.eval(env)?, b.eval(env)?, |x, y| x.union(&y), |x, y| {
                x.union(&y)
            })?,
            Inter(a, b) => binop("&", a.eval(env)?, b.eval(env)?, |x, y| x.inter(&y), |x, y| {
                x.inter(&y)
            })?,
            Diff(a, b) => binop("\\", a.eval(env)?, b.eval(env)?, |x, y| x.diff(&y), |x, y| {
                x.diff(&y)
            })?,
            Seq(a, b) => Value::Rel(rel("; (left)", a.eval(env)?)?.seq(&rel("; (right)", b.eval(env)?)?)),
            Cross(a, b) => Value::Rel(Rel::cross(
                &set("* (left)", a.eval(env)?)?,
                &set("* (right)", b.eval(env)?)?,
            )),
            Inverse(a) => Value::Rel(rel("^-1", a.eval(env)?)?.inverse()),
            Complement(a) => match a.eval(env)? {
                Value::Rel(r) => Value::Rel(r.complement()),
                Value::Set(s) => Value::Set(s.complement()),
            },
            RClos(a) => Value::Rel(rel("?", a.eval(env)?)?.rclos()),
            TClos(a) => Value::Rel(rel("+", a.eval(env)?)?.tclos()),
            RTClos(a) => Value::Rel(rel("*", a.eval(env)?)?.rtclos()),
            Lift(a) => Value::Rel(Rel::lift_set(&set("[_]", a.eval(env)?)?)),
            Domain(a) => Value::Set(rel("dom", a.eval(env)?)?.domain()),
            Range(a) => Value::Set(rel("ran", a.eval(env)?)?.range()),
            WeakLift(a, b) => Value::Rel(weaklift(
                &rel("weaklift", a.eval(env)?)?,
                &rel("weaklift", b.eval(env)?)?,
            )),
            StrongLift(a, b) => Value::Rel(stronglift(
                &rel("stronglift", a.eval(env)?)?,
                &rel("stronglift", b.eval(env)?)?,
            )),
        })
    }

    /// The set of names the expression refers to.
    pub fn names(&self, out: &mut Vec<String>) {
        use Expr::*;
        match self {
            Name(n) => {
                if !out.iter().any(|x| x == n) {
                    out.push(n.clone());
                }
            }
            Union(a, b) | Inter(a, b) | Diff(a, b) | Seq(a, b) | Cross(a, b) | WeakLift(a, b)
            | StrongLift(a, b) => {
                a.names(out);
                b.names(out);
            }
            Inverse(a) | Complement(a) | RClos(a) | TClos(a) | RTClos(a) | Lift(a) | Domain(a)
            | Range(a) => a.names(out),
        }
    }
}

fn rel(op: &'static str, v: Value) -> Result<Rel, EvalError> {
    v.as_rel().ok_or(EvalError::Kind {
        op,
        expected: "relation",
        got: "set",
    })
}

fn set(op: &'static str, v: Value) -> Result<EventSet, EvalError> {
    v.as_set().ok_or(EvalError::Kind {
        op,
        expected: "set",
        got: "relation",
    })
}

fn binop(
    op: &'static str,
    a: Value,
    b: Value,
    fr: impl Fn(Rel, Rel) -> Rel,
    fs: impl Fn(EventSet, EventSet) -> EventSet,
) -> Result<Value, EvalError> {
    match (a, b) {
        (Value::Rel(x), Value::Rel(y)) => Ok(Value::Rel(fr(x, y))),
        (Value::Set(x), Value::Set(y)) => Ok(Value::Set(fs(x, y))),
        (x, y) => Err(EvalError::Kind {
            op,
            expected: x.kind(),
            got: y.kind(),
        }),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Name(n) => write!(f, "{n}"),
            Union(a, b) => write!(f, "({a} | {b})"),
            Inter(a, b) => write!(f, "({a} & {b})"),
            Diff(a, b) => write!(f, "({a} \\ {b})"),
            Seq(a, b) => write!(f, "({a};{b})"),
            Cross(a, b) => write!(f, "({a} * {b})"),
            Inverse(a) => write!(f, "{a}^-1"),
            Complement(a) => write!(f, "~{a}"),
            RClos(a) => write!(f, "{a}?"),
            TClos(a) => write!(f, "{a}+"),
            RTClos(a) => write!(f, "{a}*"),
            Lift(a) => write!(f, "[{a}]"),
            Domain(a) => write!(f, "dom({a})"),
            Range(a) => write!(f, "ran({a})"),
            WeakLift(a, b) => write!(f, "weaklift({a},{b})"),
            StrongLift(a, b) => write!(f, "stronglift({a},{b})"),
        }
    }
}
