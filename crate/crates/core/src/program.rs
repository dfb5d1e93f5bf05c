//! Program representation, predicate roles and static validation.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;

use crate::builtin::Comparison;
use crate::term::{Pred, Term};

/// Name of the built-in emptiness test `empty(p)`: true iff the current state
/// holds no fact whose predicate is named `p`.
pub const EMPTY_TEST: &str = "empty";

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Step {
    Call(Term),
    Ins(Term),
    Del(Term),
    Test(Comparison),
}

impl Step {
    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Step {
        match self {
            Step::Call(a) => Step::Call(f(a)),
            Step::Ins(a) => Step::Ins(f(a)),
            Step::Del(a) => Step::Del(f(a)),
            Step::Test(c) => Step::Test(c.map_terms(f)),
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Step::Call(a) | Step::Ins(a) | Step::Del(a) => vec![a],
            Step::Test(c) => vec![&c.lhs, &c.rhs],
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Call(a) => write!(f, "{a}"),
            Step::Ins(a) => write!(f, "ins({a})"),
            Step::Del(a) => write!(f, "del({a})"),
            Step::Test(c) => write!(f, "{c}"),
        }
    }
}

/// `φ1 * φ2 * … * φk`; the empty goal is the trivially true goal.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct SerialGoal {
    pub steps: Vec<Step>,
}

impl SerialGoal {
    pub fn new(steps: Vec<Step>) -> Self {
        SerialGoal { steps }
    }

    pub fn is_true(&self) -> bool {
        self.steps.is_empty()
    }

    /// Variables in first-occurrence order.
    pub fn vars(&self) -> Vec<crate::term::Var> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for step in &self.steps {
            for t in step.terms() {
                t.collect_vars(&mut out, &mut seen);
            }
        }
        out
    }
}

impl fmt::Display for SerialGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("true");
        }
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Classical Horn rule of the data oracle.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DataRule {
    pub head: Term,
    pub body: Vec<Term>,
    pub span: Span,
}

impl fmt::Display for DataRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, b) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str(".")
    }
}

/// Transaction rule `head <- body`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TrRule {
    pub head: Term,
    pub body: SerialGoal,
    pub span: Span,
}

impl fmt::Display for TrRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <- {}.", self.head, self.body)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Program {
    /// Base facts in first-appearance order, with their source position.
    pub base_facts: IndexMap<Term, Span>,
    pub data_rules: Vec<DataRule>,
    pub tr_rules: Vec<TrRule>,
    pub queries: Vec<(SerialGoal, Span)>,
}

impl PartialEq for Program {
    /// Structural equality, ignoring source positions.
    fn eq(&self, other: &Self) -> bool {
        let strip_d = |r: &DataRule| (r.head.clone(), r.body.clone());
        let strip_t = |r: &TrRule| (r.head.clone(), r.body.clone());
        self.base_facts.keys().eq(other.base_facts.keys())
            && self.data_rules.iter().map(strip_d).eq(other.data_rules.iter().map(strip_d))
            && self.tr_rules.iter().map(strip_t).eq(other.tr_rules.iter().map(strip_t))
            && self.queries.iter().map(|q| &q.0).eq(other.queries.iter().map(|q| &q.0))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in self.base_facts.keys() {
            writeln!(f, "{fact}.")?;
        }
        for r in &self.data_rules {
            writeln!(f, "{r}")?;
        }
        for r in &self.tr_rules {
            writeln!(f, "{r}")?;
        }
        for (q, _) in &self.queries {
            writeln!(f, "?- {q}.")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Role {
    Base,
    Derived,
    Transactional,
    Builtin,
}

/// Predicate roles of a program. A predicate is transactional if it heads a
/// transaction rule, derived if it heads a data rule, and base if it occurs
/// as a fact, as an update target, or in a data rule body.
#[derive(Clone, Debug, Default)]
pub struct Roles {
    roles: HashMap<Pred, Role>,
}

impl Roles {
    pub fn of(p: &Program) -> Roles {
        let mut roles = HashMap::new();
        let base = |pred: Option<Pred>, roles: &mut HashMap<Pred, Role>| {
            if let Some(pred) = pred {
                roles.entry(pred).or_insert(Role::Base);
            }
        };
        for r in &p.tr_rules {
            if let Some(pred) = r.head.pred() {
                roles.insert(pred, Role::Transactional);
            }
        }
        for r in &p.data_rules {
            if let Some(pred) = r.head.pred() {
                roles.entry(pred).or_insert(Role::Derived);
            }
        }
        for fact in p.base_facts.keys() {
            base(fact.pred(), &mut roles);
        }
        for r in &p.data_rules {
            for b in &r.body {
                if !is_builtin_atom(b) {
                    base(b.pred(), &mut roles);
                }
            }
        }
        let goals = p.tr_rules.iter().map(|r| &r.body).chain(p.queries.iter().map(|q| &q.0));
        for g in goals {
            for s in &g.steps {
                if let Step::Ins(a) | Step::Del(a) = s {
                    base(a.pred(), &mut roles);
                }
            }
        }
        Roles { roles }
    }

    pub fn get(&self, pred: &Pred) -> Option<Role> {
        if pred.name.as_ref() == EMPTY_TEST && pred.arity == 1 {
            return Some(Role::Builtin);
        }
        self.roles.get(pred).copied()
    }

    /// Role of the predicate of `atom`.
    pub fn of_atom(&self, atom: &Term) -> Option<Role> {
        atom.pred().and_then(|p| self.get(&p))
    }

    pub fn insert(&mut self, pred: Pred, role: Role) {
        self.roles.insert(pred, role);
    }
}

pub fn is_builtin_atom(a: &Term) -> bool {
    matches!(a.pred(), Some(p) if p.name.as_ref() == EMPTY_TEST && p.arity == 1)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum DiagCode {
    NonGroundFact,
    RoleConflict,
    UpdateOnDerived,
    UpdateOnTransactional,
    NotRangeRestricted,
    DataRuleCallsTransaction,
    ReservedPredicate,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::NonGroundFact => "NON_GROUND_FACT",
            DiagCode::RoleConflict => "ROLE_CONFLICT",
            DiagCode::UpdateOnDerived => "UPDATE_ON_DERIVED",
            DiagCode::UpdateOnTransactional => "UPDATE_ON_TRANSACTIONAL",
            DiagCode::NotRangeRestricted => "NOT_RANGE_RESTRICTED",
            DiagCode::DataRuleCallsTransaction => "DATA_RULE_CALLS_TRANSACTION",
            DiagCode::ReservedPredicate => "RESERVED_PREDICATE",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub message: String,
    pub span: Span,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} at {}", self.code, self.message, self.span)
    }
}

/// Static checks. Returns an empty list iff the program is well formed.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |code, message: String, span| out.push(Diagnostic { code, message, span });

    let tr_heads: HashSet<Pred> = p.tr_rules.iter().filter_map(|r| r.head.pred()).collect();
    let data_heads: HashSet<Pred> = p.data_rules.iter().filter_map(|r| r.head.pred()).collect();

    let reserved = |pred: &Pred| {
        (pred.name.as_ref() == EMPTY_TEST && pred.arity == 1)
            || (matches!(pred.name.as_ref(), "ins" | "del") && pred.arity == 1)
            || (pred.name.as_ref() == "true" && pred.arity == 0)
    };

    for (fact, span) in &p.base_facts {
        if !fact.is_ground() {
            diag(DiagCode::NonGroundFact, format!("fact `{fact}` is not ground"), *span);
        }
        if let Some(pred) = fact.pred() {
            if tr_heads.contains(&pred) || data_heads.contains(&pred) {
                diag(DiagCode::RoleConflict, format!("`{pred}` has both facts and rules"), *span);
            }
            if reserved(&pred) {
                diag(DiagCode::ReservedPredicate, format!("`{pred}` is reserved"), *span);
            }
        }
    }

    for pred in tr_heads.intersection(&data_heads) {
        let span = p.tr_rules.iter().find(|r| r.head.pred().as_ref() == Some(pred)).map(|r| r.span).unwrap_or_default();
        diag(DiagCode::RoleConflict, format!("`{pred}` is both derived and transactional"), span);
    }

    for r in &p.data_rules {
        if let Some(pred) = r.head.pred() {
            if reserved(&pred) {
                diag(DiagCode::ReservedPredicate, format!("`{pred}` is reserved"), r.span);
            }
        }
        let mut body_vars = HashSet::new();
        for b in &r.body {
            body_vars.extend(b.vars());
            if is_builtin_atom(b) {
                diag(DiagCode::ReservedPredicate, format!("`{b}` cannot be used in a data rule"), r.span);
            }
            if let Some(pred) = b.pred() {
                if tr_heads.contains(&pred) {
                    diag(
                        DiagCode::DataRuleCallsTransaction,
                        format!("data rule for `{}` calls transactional `{pred}`", r.head),
                        r.span,
                    );
                }
            }
        }
        for v in r.head.vars() {
            if !body_vars.contains(&v) {
                diag(
                    DiagCode::NotRangeRestricted,
                    format!("head variable `{v}` of `{}` does not occur in the body", r.head),
                    r.span,
                );
            }
        }
    }

    for r in &p.tr_rules {
        if let Some(pred) = r.head.pred() {
            if reserved(&pred) {
                diag(DiagCode::ReservedPredicate, format!("`{pred}` is reserved"), r.span);
            }
        }
    }

    let goals = p.tr_rules.iter().map(|r| (&r.body, r.span)).chain(p.queries.iter().map(|(q, s)| (q, *s)));
    for (g, span) in goals {
        for s in &g.steps {
            if let Step::Ins(a) | Step::Del(a) = s {
                let Some(pred) = a.pred() else { continue };
                if data_heads.contains(&pred) {
                    diag(DiagCode::UpdateOnDerived, format!("update `{s}` targets derived `{pred}`"), span);
                } else if tr_heads.contains(&pred) {
                    diag(
                        DiagCode::UpdateOnTransactional,
                        format!("update `{s}` targets transactional `{pred}`"),
                        span,
                    );
                }
            }
        }
    }
    out
}
