//! First-order terms, substitutions and unification.
//!
//! Atoms are represented as terms: a zero-arity atom is a [`Term::Const`], any
//! other atom is a [`Term::Compound`]. Variables carry a generation index so
//! that clause renaming can mint fresh variables without allocating names;
//! variables written in source text always have index 0.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

pub type Sym = Arc<str>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var {
    name: Sym,
    index: u32,
}

impl Var {
    pub fn new(name: impl Into<Sym>) -> Self {
        Var { name: name.into(), index: 0 }
    }

    pub fn fresh(name: Sym, index: u32) -> Self {
        Var { name, index }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn index(&self) -> u32 {
        self.index
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index == 0 {
            f.write_str(&self.name)
        } else {
            write!(f, "_G{}", self.index)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    Var(Var),
    Int(i64),
    Const(Sym),
    /// Functor applied to at least one argument.
    Compound(Sym, Arc<[Term]>),
}

/// Predicate identity: name and arity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Pred {
    pub name: Sym,
    pub arity: usize,
}

impl Pred {
    pub fn new(name: impl Into<Sym>, arity: usize) -> Self {
        Pred { name: name.into(), arity }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::new(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.into())
    }

    pub fn int(value: i64) -> Term {
        Term::Int(value)
    }

    /// Builds `name(args...)`, collapsing to a constant when `args` is empty.
    pub fn compound(name: impl Into<Sym>, args: Vec<Term>) -> Term {
        let name = name.into();
        if args.is_empty() {
            Term::Const(name)
        } else {
            Term::Compound(name, args.into())
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    /// Predicate of this term when read as an atom.
    pub fn pred(&self) -> Option<Pred> {
        match self {
            Term::Const(name) => Some(Pred { name: name.clone(), arity: 0 }),
            Term::Compound(name, args) => Some(Pred { name: name.clone(), arity: args.len() }),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    pub fn is_arith(&self) -> bool {
        matches!(self, Term::Compound(op, args) if args.len() == 2 && arith_precedence(op).is_some())
    }

    /// Variables in first-occurrence (preorder) order, without duplicates.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        self.collect_vars(&mut out, &mut seen);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<Var>, seen: &mut HashSet<Var>) {
        match self {
            Term::Var(v) => {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out, seen)),
            _ => {}
        }
    }

    pub fn occurs(&self, var: &Var) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::Compound(_, args) => args.iter().any(|a| a.occurs(var)),
            _ => false,
        }
    }

    /// Rebuilds the term bottom-up through `f`, sharing unchanged subterms.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Term::Compound(name, args) => {
                let mut changed = false;
                let mapped: Vec<Term> = args
                    .iter()
                    .map(|a| {
                        let m = a.map_vars(f);
                        changed |= !ptr_eq_or_equal(a, &m);
                        m
                    })
                    .collect();
                if changed {
                    Term::Compound(name.clone(), mapped.into())
                } else {
                    self.clone()
                }
            }
            _ => self.clone(),
        }
    }
}

fn ptr_eq_or_equal(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Compound(_, x), Term::Compound(_, y)) => Arc::ptr_eq(x, y),
        (Term::Var(x), Term::Var(y)) => x == y,
        (Term::Int(x), Term::Int(y)) => x == y,
        (Term::Const(x), Term::Const(y)) => Arc::ptr_eq(x, y) || x == y,
        _ => false,
    }
}

pub(crate) fn arith_precedence(op: &str) -> Option<u8> {
    match op {
        "+" | "-" => Some(1),
        "*" => Some(2),
        _ => None,
    }
}

fn is_plain_ident(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Term {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8, right: bool) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Const(c) => f.write_str(c),
            Term::Compound(op, args) if self.is_arith() => {
                let prec = arith_precedence(op).unwrap();
                let paren = prec < parent || (right && prec == parent);
                if paren {
                    f.write_str("(")?;
                }
                args[0].fmt_prec(f, prec, false)?;
                if matches!(args[1], Term::Int(i) if i < 0) {
                    write!(f, "{op} ")?;
                } else {
                    f.write_str(op)?;
                }
                args[1].fmt_prec(f, prec, true)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Term::Compound(name, args) => {
                debug_assert!(is_plain_ident(name) || arith_precedence(name).is_some());
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    a.fmt_prec(f, 0, false)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0, false)
    }
}

/// A finite map from variables to terms. Values produced by [`unify`] and
/// [`Substitution::from_bindings`] are idempotent.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Substitution {
    bindings: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Normalizes arbitrary bindings to an idempotent substitution by
    /// resolving them to a fixpoint. Returns `None` if the bindings are cyclic.
    pub fn from_bindings(pairs: impl IntoIterator<Item = (Var, Term)>) -> Option<Self> {
        let raw: HashMap<Var, Term> = pairs.into_iter().filter(|(v, t)| !matches!(t, Term::Var(w) if w == v)).collect();
        let mut resolver = Resolver { raw: &raw, done: HashMap::new(), active: HashSet::new() };
        let mut bindings = BTreeMap::new();
        for v in raw.keys() {
            let t = resolver.resolve_var(v)?;
            if !matches!(&t, Term::Var(w) if w == v) {
                bindings.insert(v.clone(), t);
            }
        }
        Some(Substitution { bindings })
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.bindings.get(v)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.iter()
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.bindings.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| self.bindings.get(v).cloned())
    }

    /// `compose(s1, s2)` applies `s1` first, then `s2`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut bindings = BTreeMap::new();
        for (v, t) in &self.bindings {
            let t = other.apply(t);
            if !matches!(&t, Term::Var(w) if w == v) {
                bindings.insert(v.clone(), t);
            }
        }
        for (v, t) in &other.bindings {
            if !self.bindings.contains_key(v) {
                bindings.insert(v.clone(), t.clone());
            }
        }
        Substitution { bindings }
    }

    pub fn is_idempotent(&self) -> bool {
        self.bindings.values().all(|t| self.bindings.keys().all(|v| !t.occurs(v)))
    }

    /// Keeps only bindings for `vars`.
    pub fn restrict(&self, vars: &[Var]) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(v, _)| vars.contains(v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}↦{t}")?;
        }
        f.write_str("}")
    }
}

struct Resolver<'a> {
    raw: &'a HashMap<Var, Term>,
    done: HashMap<Var, Term>,
    active: HashSet<Var>,
}

impl Resolver<'_> {
    fn resolve_var(&mut self, v: &Var) -> Option<Term> {
        if let Some(t) = self.done.get(v) {
            return Some(t.clone());
        }
        let Some(bound) = self.raw.get(v) else {
            return Some(Term::Var(v.clone()));
        };
        if !self.active.insert(v.clone()) {
            return None;
        }
        let t = self.resolve(bound)?;
        self.active.remove(v);
        self.done.insert(v.clone(), t.clone());
        Some(t)
    }

    fn resolve(&mut self, t: &Term) -> Option<Term> {
        match t {
            Term::Var(v) => self.resolve_var(v),
            Term::Compound(name, args) => {
                let args = args.iter().map(|a| self.resolve(a)).collect::<Option<Vec<_>>>()?;
                Some(Term::Compound(name.clone(), args.into()))
            }
            _ => Some(t.clone()),
        }
    }
}

/// Most general unifier with the occurs check enabled.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    unify_with(a, b, true)
}

pub fn unify_with(a: &Term, b: &Term, occurs_check: bool) -> Option<Substitution> {
    let mut bindings: HashMap<Var, Term> = HashMap::new();
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let x = walk(&bindings, x);
        let y = walk(&bindings, y);
        match (x, y) {
            (Term::Var(v), Term::Var(w)) if v == w => {}
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                if occurs_check && occurs_deep(&bindings, &v, &t) {
                    return None;
                }
                bindings.insert(v, t);
            }
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            (x, y) => {
                if x != y {
                    return None;
                }
            }
        }
    }
    Substitution::from_bindings(bindings)
}

fn walk(bindings: &HashMap<Var, Term>, mut t: Term) -> Term {
    while let Term::Var(v) = &t {
        match bindings.get(v) {
            Some(next) => t = next.clone(),
            None => break,
        }
    }
    t
}

fn occurs_deep(bindings: &HashMap<Var, Term>, var: &Var, t: &Term) -> bool {
    match walk(bindings, t.clone()) {
        Term::Var(v) => &v == var,
        Term::Compound(_, args) => args.iter().any(|a| occurs_deep(bindings, var, a)),
        _ => false,
    }
}

/// One-way matching: finds `s` with `s(pattern) == target`, binding only
/// variables of `pattern`. `target` is treated as rigid.
pub fn match_term(pattern: &Term, target: &Term) -> Option<Substitution> {
    let mut bindings: BTreeMap<Var, Term> = BTreeMap::new();
    let mut stack = vec![(pattern, target)];
    while let Some((p, t)) = stack.pop() {
        match p {
            Term::Var(v) => match bindings.get(v) {
                Some(bound) if bound != t => return None,
                Some(_) => {}
                None => {
                    bindings.insert(v.clone(), t.clone());
                }
            },
            Term::Compound(f, ps) => match t {
                Term::Compound(g, ts) if f == g && ps.len() == ts.len() => stack.extend(ps.iter().zip(ts.iter())),
                _ => return None,
            },
            _ => {
                if p != t {
                    return None;
                }
            }
        }
    }
    bindings.retain(|v, t| !matches!(t, Term::Var(w) if w == v));
    Some(Substitution { bindings })
}

/// Renames variables to `V0, V1, …` in first-occurrence order. Returns the
/// canonical term and the original variables, indexed by their new number.
pub fn canonical_variant(a: &Term) -> (Term, Vec<Var>) {
    let vars = a.vars();
    let map: HashMap<&Var, Term> =
        vars.iter().enumerate().map(|(i, v)| (v, Term::Var(canonical_var(i)))).collect();
    (a.map_vars(&mut |v| map.get(v).cloned()), vars)
}

pub fn canonical_var(i: usize) -> Var {
    thread_local! {
        static NAMES: std::cell::RefCell<Vec<Sym>> = const { std::cell::RefCell::new(Vec::new()) };
    }
    NAMES.with(|names| {
        let mut names = names.borrow_mut();
        while names.len() <= i {
            let n = names.len();
            names.push(format!("V{n}").into());
        }
        Var::new(names[i].clone())
    })
}

/// Two terms are variants iff they are equal up to a consistent renaming.
pub fn is_variant(a: &Term, b: &Term) -> bool {
    canonical_variant(a).0 == canonical_variant(b).0
}

/// Mints variables that cannot collide with source variables.
#[derive(Debug, Default)]
pub struct Renamer {
    next: u32,
}

impl Renamer {
    pub fn new() -> Self {
        Renamer { next: 0 }
    }

    pub fn next_index(&mut self) -> u32 {
        self.next += 1;
        self.next
    }

    /// Renames every variable of the given terms apart, consistently.
    pub fn rename_all<'t>(&mut self, terms: impl IntoIterator<Item = &'t Term>) -> Vec<Term> {
        let mut map: HashMap<Var, Term> = HashMap::new();
        terms
            .into_iter()
            .map(|t| {
                t.map_vars(&mut |v| {
                    Some(
                        map.entry(v.clone())
                            .or_insert_with(|| {
                                self.next += 1;
                                Term::Var(Var::fresh(v.name.clone(), self.next))
                            })
                            .clone(),
                    )
                })
            })
            .collect()
    }

    pub fn rename(&mut self, t: &Term) -> Term {
        self.rename_all([t]).pop().unwrap()
    }
}
