//! Bottom-up semi-naive evaluation of data rules from scratch.

use std::collections::HashMap;

use crate::facts::{rule_instances, FactIndex};
use crate::program::DataRule;
use crate::term::{Pred, Term};

/// Body positions of each predicate: `pred -> [(rule, position)]`.
pub(crate) fn body_positions(rules: &[DataRule]) -> HashMap<Pred, Vec<(usize, usize)>> {
    let mut out: HashMap<Pred, Vec<(usize, usize)>> = HashMap::new();
    for (r, rule) in rules.iter().enumerate() {
        for (i, atom) in rule.body.iter().enumerate() {
            if let Some(p) = atom.pred() {
                out.entry(p).or_default().push((r, i));
            }
        }
    }
    out
}

/// Result of a from-scratch evaluation.
#[derive(Debug, Clone)]
pub struct Closure {
    /// Base facts together with every derived fact.
    pub facts: FactIndex,
    /// Rule instances enumerated, counting duplicates.
    pub derivations: usize,
}

/// Least fixpoint of `rules` over `base`.
pub fn least_fixpoint(rules: &[DataRule], base: impl IntoIterator<Item = Term>) -> Closure {
    let positions = body_positions(rules);
    let mut facts = FactIndex::new();
    let mut delta: Vec<Term> = Vec::new();
    for f in base {
        if facts.insert(f.clone()) {
            delta.push(f);
        }
    }
    let mut derivations = 0;
    while !delta.is_empty() {
        let mut next = Vec::new();
        for fact in &delta {
            let Some(sites) = fact.pred().and_then(|p| positions.get(&p)) else { continue };
            for &(r, pos) in sites {
                let mut found = Vec::new();
                rule_instances(&rules[r], &facts, Some((pos, fact)), &mut |head, _| found.push(head));
                derivations += found.len();
                next.extend(found);
            }
        }
        delta.clear();
        for f in next {
            if facts.insert(f.clone()) {
                delta.push(f);
            }
        }
    }
    Closure { facts, derivations }
}
