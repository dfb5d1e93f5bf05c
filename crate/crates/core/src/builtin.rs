//! Integer arithmetic and comparison tests evaluated by the data oracle.

use std::fmt;

use crate::term::Term;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum CmpOp {
    Ge,
    Gt,
    Le,
    Lt,
    Eq,
    Ne,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Ge, CmpOp::Gt, CmpOp::Le, CmpOp::Lt, CmpOp::Eq, CmpOp::Ne];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Le => "=<",
            CmpOp::Lt => "<",
            CmpOp::Eq => "=:=",
            CmpOp::Ne => "=\\=",
        }
    }

    fn test(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
            CmpOp::Le => a <= b,
            CmpOp::Lt => a < b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Comparison {
    pub op: CmpOp,
    pub lhs: Term,
    pub rhs: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("instantiation error: `{0}` is not ground")]
    Instantiation(Term),
    #[error("type error: `{0}` is not an integer expression")]
    Type(Term),
    #[error("integer overflow evaluating `{0}`")]
    Overflow(Term),
}

impl Comparison {
    pub fn holds(&self) -> Result<bool, EvalError> {
        Ok(self.op.test(eval(&self.lhs)?, eval(&self.rhs)?))
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Comparison {
        Comparison { op: self.op, lhs: f(&self.lhs), rhs: f(&self.rhs) }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

pub fn eval(t: &Term) -> Result<i64, EvalError> {
    match t {
        Term::Int(i) => Ok(*i),
        Term::Var(_) => Err(EvalError::Instantiation(t.clone())),
        Term::Compound(op, args) if t.is_arith() => {
            let a = eval(&args[0])?;
            let b = eval(&args[1])?;
            let r = match &**op {
                "+" => a.checked_add(b),
                "-" => a.checked_sub(b),
                _ => a.checked_mul(b),
            };
            r.ok_or_else(|| EvalError::Overflow(t.clone()))
        }
        _ => Err(EvalError::Type(t.clone())),
    }
}

/// Replaces every ground arithmetic subterm by its value. Subterms that are
/// not ground, or that overflow, are left symbolic.
pub fn normalize_arith(t: &Term) -> Term {
    match t {
        Term::Compound(name, args) => {
            if t.is_arith() && t.is_ground() {
                if let Ok(v) = eval(t) {
                    return Term::Int(v);
                }
            }
            if args.iter().all(|a| !contains_arith(a)) {
                return t.clone();
            }
            Term::Compound(name.clone(), args.iter().map(normalize_arith).collect::<Vec<_>>().into())
        }
        _ => t.clone(),
    }
}

fn contains_arith(t: &Term) -> bool {
    t.is_arith() || t.args().iter().any(contains_arith)
}
