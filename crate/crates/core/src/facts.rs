//! Indexed sets of ground facts and the conjunctive join used by rule
//! evaluation.

use std::collections::HashMap;

use indexmap::{IndexMap, IndexSet};

use crate::program::{DataRule, EMPTY_TEST};
use crate::term::{Pred, Term, Var};

#[derive(Clone, Debug, Default)]
struct PredFacts {
    facts: IndexSet<Term>,
    by_arg: Vec<HashMap<Term, IndexSet<Term>>>,
}

/// Ground facts grouped by predicate, with a hash index on every argument
/// position. Iteration order is deterministic.
#[derive(Clone, Debug, Default)]
pub struct FactIndex {
    preds: IndexMap<Pred, PredFacts>,
    len: usize,
}

impl FactIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, fact: Term) -> bool {
        debug_assert!(fact.is_ground());
        let Some(pred) = fact.pred() else { return false };
        let arity = pred.arity;
        let entry = self.preds.entry(pred).or_insert_with(|| PredFacts {
            facts: IndexSet::new(),
            by_arg: vec![HashMap::new(); arity],
        });
        if entry.facts.contains(&fact) {
            return false;
        }
        for (i, a) in fact.args().iter().enumerate() {
            entry.by_arg[i].entry(a.clone()).or_default().insert(fact.clone());
        }
        entry.facts.insert(fact);
        self.len += 1;
        true
    }

    pub fn remove(&mut self, fact: &Term) -> bool {
        let Some(pred) = fact.pred() else { return false };
        let Some(entry) = self.preds.get_mut(&pred) else { return false };
        if !entry.facts.swap_remove(fact) {
            return false;
        }
        for (i, a) in fact.args().iter().enumerate() {
            if let Some(bucket) = entry.by_arg[i].get_mut(a) {
                bucket.swap_remove(fact);
                if bucket.is_empty() {
                    entry.by_arg[i].remove(a);
                }
            }
        }
        self.len -= 1;
        true
    }

    pub fn contains(&self, fact: &Term) -> bool {
        fact.pred().and_then(|p| self.preds.get(&p)).is_some_and(|e| e.facts.contains(fact))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.preds.values().flat_map(|e| e.facts.iter())
    }

    pub fn of_pred(&self, pred: &Pred) -> impl Iterator<Item = &Term> {
        self.preds.get(pred).into_iter().flat_map(|e| e.facts.iter())
    }

    /// True iff some fact has a predicate named `name`, of any arity.
    pub fn has_pred_named(&self, name: &str) -> bool {
        self.preds.iter().any(|(p, e)| p.name.as_ref() == name && !e.facts.is_empty())
    }

    /// Facts that may match `pattern`: the smallest argument bucket among the
    /// pattern's ground arguments, or every fact of the predicate.
    pub fn candidates<'a>(&'a self, pattern: &Term) -> Box<dyn Iterator<Item = &'a Term> + 'a> {
        let Some(pred) = pattern.pred() else { return Box::new(std::iter::empty()) };
        let Some(entry) = self.preds.get(&pred) else { return Box::new(std::iter::empty()) };
        if pattern.is_ground() {
            return Box::new(entry.facts.get(pattern).into_iter());
        }
        let mut best: Option<&IndexSet<Term>> = None;
        for (i, a) in pattern.args().iter().enumerate() {
            if a.is_ground() {
                match entry.by_arg[i].get(a) {
                    None => return Box::new(std::iter::empty()),
                    Some(bucket) if best.is_none_or(|b| bucket.len() < b.len()) => best = Some(bucket),
                    Some(_) => {}
                }
            }
        }
        Box::new(best.unwrap_or(&entry.facts).iter())
    }

    /// Facts that are instances of `pattern`.
    pub fn matching(&self, pattern: &Term) -> Vec<Term> {
        let mut b = Bindings::default();
        self.candidates(pattern)
            .filter(|f| {
                let mark = b.mark();
                let ok = b.match_fact(pattern, f);
                b.undo(mark);
                ok
            })
            .cloned()
            .collect()
    }

    pub fn sorted(&self) -> Vec<Term> {
        let mut v: Vec<Term> = self.iter().cloned().collect();
        v.sort();
        v
    }
}

impl FromIterator<Term> for FactIndex {
    fn from_iter<I: IntoIterator<Item = Term>>(iter: I) -> Self {
        let mut idx = FactIndex::new();
        for f in iter {
            idx.insert(f);
        }
        idx
    }
}

/// Trail-style variable bindings for matching patterns against ground facts.
#[derive(Default, Debug)]
pub(crate) struct Bindings {
    vals: Vec<(Var, Term)>,
}

impl Bindings {
    pub fn mark(&self) -> usize {
        self.vals.len()
    }

    pub fn undo(&mut self, mark: usize) {
        self.vals.truncate(mark);
    }

    fn lookup(&self, v: &Var) -> Option<&Term> {
        self.vals.iter().rev().find(|(w, _)| w == v).map(|(_, t)| t)
    }

    /// Extends the bindings so that `pattern` instantiates to `fact`.
    pub fn match_fact(&mut self, pattern: &Term, fact: &Term) -> bool {
        match pattern {
            Term::Var(v) => match self.lookup(v) {
                Some(t) => t == fact,
                None => {
                    self.vals.push((v.clone(), fact.clone()));
                    true
                }
            },
            Term::Compound(f, ps) => match fact {
                Term::Compound(g, fs) if f == g && ps.len() == fs.len() => {
                    ps.iter().zip(fs.iter()).all(|(p, x)| self.match_fact(p, x))
                }
                _ => false,
            },
            _ => pattern == fact,
        }
    }

    pub fn instantiate(&self, t: &Term) -> Term {
        t.map_vars(&mut |v| self.lookup(v).cloned())
    }
}

/// Enumerates every instance of `rule` whose body atom at `pinned` is the
/// fact `seed` (or every instance when `pinned` is `None`) and whose other body
/// atoms are facts of `index`. Calls `emit(head, body_facts)` per instance.
pub fn rule_instances(
    rule: &DataRule,
    index: &FactIndex,
    pinned: Option<(usize, &Term)>,
    emit: &mut dyn FnMut(Term, &[Term]),
) {
    let mut b = Bindings::default();
    let mut body = vec![None; rule.body.len()];
    if let Some((pos, seed)) = pinned {
        if !b.match_fact(&rule.body[pos], seed) {
            return;
        }
        body[pos] = Some(seed.clone());
    }
    join_rec(rule, index, &mut b, &mut body, 0, emit);
}

/// Enumerates instances of `rule` whose head is `head` (ground).
pub fn instances_for_head(rule: &DataRule, index: &FactIndex, head: &Term, emit: &mut dyn FnMut(Term, &[Term])) {
    let mut b = Bindings::default();
    if !b.match_fact(&rule.head, head) {
        return;
    }
    let mut body = vec![None; rule.body.len()];
    join_rec(rule, index, &mut b, &mut body, 0, emit);
}

fn join_rec(
    rule: &DataRule,
    index: &FactIndex,
    b: &mut Bindings,
    body: &mut Vec<Option<Term>>,
    pos: usize,
    emit: &mut dyn FnMut(Term, &[Term]),
) {
    if pos == rule.body.len() {
        let facts: Vec<Term> = body.iter().map(|f| f.clone().expect("bound body fact")).collect();
        emit(b.instantiate(&rule.head), &facts);
        return;
    }
    if body[pos].is_some() {
        return join_rec(rule, index, b, body, pos + 1, emit);
    }
    let pattern = b.instantiate(&rule.body[pos]);
    if matches!(pattern.pred(), Some(p) if p.name.as_ref() == EMPTY_TEST && p.arity == 1) {
        // non-monotonic tests are rejected by validation for data rules
        return;
    }
    let candidates: Vec<Term> = index.candidates(&pattern).cloned().collect();
    for fact in candidates {
        let mark = b.mark();
        if b.match_fact(&pattern, &fact) {
            body[pos] = Some(fact);
            join_rec(rule, index, b, body, pos + 1, emit);
            body[pos] = None;
        }
        b.undo(mark);
    }
}
