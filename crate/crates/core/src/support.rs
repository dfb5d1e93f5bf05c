//! Incremental maintenance of derived relations.
//!
//! The support graph records every rule instance whose body facts are all
//! present as a hyperedge `body -> head`, and for each fact the number of
//! such hyperedges deriving it. Insertions propagate forward semi-naively.
//! Deletions use Delete-Rederive: everything transitively supported by the
//! deleted fact is removed, then over-deleted facts that still have a
//! hyperedge from surviving facts are restored and propagated forward again.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use smallvec::SmallVec;

use crate::facts::{rule_instances, FactIndex};
use crate::fixpoint::body_positions;
use crate::program::DataRule;
use crate::signing::{diff_logs, Clause, ClauseId, LogDelta, StateSignature, StateSigner};
use crate::term::{Pred, Term};

pub type FactId = u32;
type EdgeId = u32;
type Body = SmallVec<[FactId; 4]>;

#[derive(Clone, Debug)]
struct Edge {
    rule: u32,
    body: Body,
    head: FactId,
}

/// One hyperedge, resolved to facts, for display and testing.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Hyperedge {
    pub head: Term,
    pub rule: usize,
    pub body: Vec<Term>,
}

#[derive(Clone, Debug)]
pub struct SupportGraph {
    rules: Arc<[DataRule]>,
    positions: HashMap<Pred, Vec<(usize, usize)>>,
    ids: HashMap<Term, FactId>,
    facts: Vec<Term>,
    count: Vec<u32>,
    is_base: Vec<bool>,
    uses: Vec<Vec<EdgeId>>,
    edges: Vec<Option<Edge>>,
    edge_ids: HashMap<(u32, Body), EdgeId>,
    dead_edges: usize,
    present: FactIndex,
    base_len: usize,
    touched: u64,
    current: StateSignature,
    /// Rebuild from scratch when a state switch changes more than this
    /// fraction of the target's base facts.
    pub rebuild_fraction: f64,
}

impl SupportGraph {
    pub fn new(rules: Arc<[DataRule]>) -> Self {
        let positions = body_positions(&rules);
        SupportGraph {
            rules,
            positions,
            ids: HashMap::new(),
            facts: Vec::new(),
            count: Vec::new(),
            is_base: Vec::new(),
            uses: Vec::new(),
            edges: Vec::new(),
            edge_ids: HashMap::new(),
            dead_edges: 0,
            present: FactIndex::new(),
            base_len: 0,
            touched: 0,
            current: StateSignature::INITIAL,
            rebuild_fraction: 0.5,
        }
    }

    /// Graph materialized over `base`, positioned at `sig`.
    pub fn build(rules: Arc<[DataRule]>, base: impl IntoIterator<Item = Term>, sig: StateSignature) -> Self {
        let mut g = SupportGraph::new(rules);
        g.insert_all(base);
        g.current = sig;
        g
    }

    fn insert_all(&mut self, base: impl IntoIterator<Item = Term>) {
        let mut queue = Vec::new();
        for f in base {
            let id = self.intern(&f);
            if !self.is_base[id as usize] {
                self.is_base[id as usize] = true;
                self.base_len += 1;
                if self.present.insert(f) {
                    self.touched += 1;
                    queue.push(id);
                }
            }
        }
        let mut added = Vec::new();
        self.propagate(queue, &mut added);
    }

    fn intern(&mut self, f: &Term) -> FactId {
        if let Some(&id) = self.ids.get(f) {
            return id;
        }
        let id = self.facts.len() as FactId;
        self.ids.insert(f.clone(), id);
        self.facts.push(f.clone());
        self.count.push(0);
        self.is_base.push(false);
        self.uses.push(Vec::new());
        id
    }

    pub fn current(&self) -> StateSignature {
        self.current
    }

    /// All present facts, base and derived.
    pub fn present(&self) -> &FactIndex {
        &self.present
    }

    pub fn base_len(&self) -> usize {
        self.base_len
    }

    pub fn is_base(&self, f: &Term) -> bool {
        self.ids.get(f).is_some_and(|&id| self.is_base[id as usize])
    }

    /// Present facts that are not base facts.
    pub fn derived(&self) -> impl Iterator<Item = &Term> {
        self.present.iter().filter(|f| !self.is_base(f))
    }

    pub fn derivation_count(&self, f: &Term) -> u32 {
        self.ids.get(f).map_or(0, |&id| self.count[id as usize])
    }

    /// Fact-level work done so far: facts added, over-deleted, or checked for
    /// rederivation.
    pub fn touched(&self) -> u64 {
        self.touched
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len() - self.dead_edges
    }

    pub fn hyperedges(&self) -> Vec<Hyperedge> {
        let mut out: Vec<Hyperedge> = self
            .edges
            .iter()
            .flatten()
            .map(|e| Hyperedge {
                head: self.facts[e.head as usize].clone(),
                rule: e.rule as usize,
                body: e.body.iter().map(|&b| self.facts[b as usize].clone()).collect(),
            })
            .collect();
        out.sort();
        out
    }

    /// Inserts a base fact. Returns every fact that became present, the
    /// inserted one first; empty if it was already a base fact.
    pub fn inc_insert(&mut self, f: &Term) -> Vec<Term> {
        let id = self.intern(f);
        if self.is_base[id as usize] {
            return Vec::new();
        }
        self.is_base[id as usize] = true;
        self.base_len += 1;
        let mut added = Vec::new();
        if self.present.insert(f.clone()) {
            self.touched += 1;
            added.push(f.clone());
            self.propagate(vec![id], &mut added);
        }
        added
    }

    /// Deletes a base fact. Returns every fact that stopped being present,
    /// the deleted one first; empty if it was not a base fact.
    pub fn inc_delete(&mut self, f: &Term) -> Vec<Term> {
        let Some(&id) = self.ids.get(f) else { return Vec::new() };
        if !self.is_base[id as usize] {
            return Vec::new();
        }
        self.is_base[id as usize] = false;
        self.base_len -= 1;
        if self.count[id as usize] > 0 {
            // still derivable; roles keep this from happening in validated programs
            return Vec::new();
        }

        // over-delete
        let mut over = vec![id];
        let mut over_set: HashSet<FactId> = HashSet::from([id]);
        self.present.remove(f);
        self.touched += 1;
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            for e in std::mem::take(&mut self.uses[x as usize]) {
                let Some(head) = self.remove_edge(e) else { continue };
                if !self.is_base[head as usize] && over_set.insert(head) {
                    let fact = self.facts[head as usize].clone();
                    self.present.remove(&fact);
                    self.touched += 1;
                    over.push(head);
                    stack.push(head);
                }
            }
        }

        // rederive: an over-deleted fact that kept a hyperedge is supported
        // entirely by surviving facts
        let mut seeds = Vec::new();
        for &h in &over[1..] {
            self.touched += 1;
            if self.count[h as usize] > 0 {
                self.present.insert(self.facts[h as usize].clone());
                seeds.push(h);
            }
        }
        let mut restored: Vec<Term> = seeds.iter().map(|&h| self.facts[h as usize].clone()).collect();
        self.propagate(seeds, &mut restored);
        self.maybe_compact();

        let restored: HashSet<&Term> = restored.iter().collect();
        over.iter().map(|&h| &self.facts[h as usize]).filter(|t| !restored.contains(t)).cloned().collect()
    }

    fn remove_edge(&mut self, e: EdgeId) -> Option<FactId> {
        let edge = self.edges[e as usize].take()?;
        self.dead_edges += 1;
        self.count[edge.head as usize] -= 1;
        self.edge_ids.remove(&(edge.rule, edge.body));
        Some(edge.head)
    }

    /// Semi-naive forward propagation from newly present facts.
    fn propagate(&mut self, mut queue: Vec<FactId>, added: &mut Vec<Term>) {
        let rules = self.rules.clone();
        while let Some(a) = queue.pop() {
            let fact = self.facts[a as usize].clone();
            let Some(sites) = fact.pred().and_then(|p| self.positions.get(&p)).cloned() else { continue };
            for (r, pos) in sites {
                let mut found: Vec<(Term, Vec<Term>)> = Vec::new();
                rule_instances(&rules[r], &self.present, Some((pos, &fact)), &mut |head, body| {
                    found.push((head, body.to_vec()))
                });
                for (head, body) in found {
                    let body: Body = body.iter().map(|b| self.intern(b)).collect();
                    if self.edge_ids.contains_key(&(r as u32, body.clone())) {
                        continue;
                    }
                    let h = self.intern(&head);
                    let e = self.edges.len() as EdgeId;
                    let mut distinct = body.clone();
                    distinct.sort_unstable();
                    distinct.dedup();
                    for &b in &distinct {
                        self.uses[b as usize].push(e);
                    }
                    self.edge_ids.insert((r as u32, body.clone()), e);
                    self.edges.push(Some(Edge { rule: r as u32, body, head: h }));
                    self.count[h as usize] += 1;
                    if self.present.insert(head.clone()) {
                        self.touched += 1;
                        added.push(head);
                        queue.push(h);
                    }
                }
            }
        }
    }

    fn maybe_compact(&mut self) {
        if self.dead_edges < 1024 || self.dead_edges < self.edge_count() {
            return;
        }
        self.compact();
    }

    fn compact(&mut self) {
        let mut remap = vec![EdgeId::MAX; self.edges.len()];
        let mut live = Vec::with_capacity(self.edge_count());
        for (old, e) in std::mem::take(&mut self.edges).into_iter().enumerate() {
            if let Some(e) = e {
                remap[old] = live.len() as EdgeId;
                live.push(Some(e));
            }
        }
        for uses in &mut self.uses {
            uses.retain_mut(|e| {
                let new = remap[*e as usize];
                *e = new;
                new != EdgeId::MAX
            });
        }
        for e in self.edge_ids.values_mut() {
            *e = remap[*e as usize];
        }
        self.edges = live;
        self.dead_edges = 0;
    }

    /// Moves the graph from its current state to `to`, applying the log
    /// difference: deletions first, then insertions. Falls back to a full
    /// rebuild when the difference is large relative to the target base.
    pub fn switch_state(&mut self, signer: &StateSigner, d0: &[Term], to: StateSignature) -> Result<LogDelta, UnknownState> {
        let from_log = signer.log(self.current).ok_or(UnknownState(self.current))?;
        let to_log = signer.log(to).ok_or(UnknownState(to))?;
        if self.current == to {
            return Ok(LogDelta::default());
        }
        let delta = diff_logs(from_log, to_log);
        let target_base = (self.base_len + delta.ins.len()).saturating_sub(delta.del.len());
        if delta.len() as f64 > self.rebuild_fraction * target_base.max(1) as f64 {
            let d0_set: HashSet<&Term> = d0.iter().collect();
            let deleted: HashSet<&Term> = to_log.del.iter().filter_map(|c| fact_of(signer, *c)).collect();
            let base: Vec<Term> = d0
                .iter()
                .filter(|f| !deleted.contains(f))
                .chain(to_log.ins.iter().filter_map(|c| fact_of(signer, *c)).filter(|f| !d0_set.contains(f)))
                .cloned()
                .collect();
            let touched = self.touched;
            *self = SupportGraph { rebuild_fraction: self.rebuild_fraction, ..SupportGraph::new(self.rules.clone()) };
            self.touched = touched;
            self.insert_all(base);
        } else {
            for c in &delta.del {
                if let Some(f) = fact_of(signer, *c) {
                    self.inc_delete(f);
                }
            }
            for c in &delta.ins {
                if let Some(f) = fact_of(signer, *c) {
                    self.inc_insert(f);
                }
            }
        }
        self.current = to;
        Ok(delta)
    }

    /// Derived extension at `sig`, switching there first.
    pub fn materialize(&mut self, signer: &StateSigner, d0: &[Term], sig: StateSignature) -> Result<BTreeSet<Term>, UnknownState> {
        self.switch_state(signer, d0, sig)?;
        Ok(self.derived().cloned().collect())
    }

    /// `:support` rendering: nodes with counts, then hyperedges, sorted.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut nodes: Vec<&Term> = self.present.iter().collect();
        nodes.sort();
        for n in nodes {
            let kind = if self.is_base(n) { "base" } else { "derived" };
            out.push_str(&format!("{n} [{kind}, count={}]\n", self.derivation_count(n)));
        }
        for e in self.hyperedges() {
            let body: Vec<String> = e.body.iter().map(|b| b.to_string()).collect();
            out.push_str(&format!("{} <= {} (rule {})\n", e.head, body.join(", "), e.rule));
        }
        out
    }
}

fn fact_of(signer: &StateSigner, c: ClauseId) -> Option<&Term> {
    match signer.clause(c) {
        Clause::Fact(f) => Some(f),
        Clause::Rule { .. } => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown state signature {0}")]
pub struct UnknownState(pub StateSignature);
