//! The call-answer table: one entry per (variant call, state signature),
//! holding answer instances of the call paired with final state signatures.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::signing::StateSignature;
use crate::term::{canonical_variant, match_term, Substitution, Term};

pub type EntryId = usize;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    InProgress,
    Complete,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EntryKind {
    /// Call to a transactional predicate.
    Transaction,
    /// Data-oracle query against one state.
    Data,
    /// Elementary update `ins(a)` / `del(a)`.
    Update,
    /// Top-level goal; kept out of the index.
    Query,
}

/// An answer: the call instantiated by the answer unification (in canonical
/// variable form) and the signature of the state the call ended in.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TableAnswer {
    pub instance: Term,
    pub final_state: StateSignature,
}

/// A suspended continuation waiting on answers of an entry.
#[derive(Clone, Debug)]
pub(crate) struct Consumer<C> {
    pub cont: C,
}

#[derive(Clone, Debug)]
pub struct TableEntry<C> {
    pub call: Term,
    pub state: StateSignature,
    pub kind: EntryKind,
    pub status: Status,
    answers: Vec<TableAnswer>,
    answer_set: HashSet<TableAnswer>,
    pub(crate) consumers: Vec<Consumer<C>>,
}

impl<C> TableEntry<C> {
    pub fn answers(&self) -> &[TableAnswer] {
        &self.answers
    }

    pub fn consumer_count(&self) -> usize {
        self.consumers.len()
    }

    /// Answer unification of `answer` over the call's canonical variables.
    pub fn bindings(&self, answer: &TableAnswer) -> Substitution {
        match_term(&self.call, &answer.instance).unwrap_or_default()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Lookup {
    Miss(EntryId),
    InProgress(EntryId),
    Complete(EntryId),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("internal error: answer inserted into completed entry {0}")]
pub struct CompletedEntry(pub EntryId);

#[derive(Clone, Debug)]
pub struct CallTable<C> {
    entries: Vec<TableEntry<C>>,
    index: HashMap<(Term, StateSignature), EntryId>,
}

impl<C> Default for CallTable<C> {
    fn default() -> Self {
        CallTable { entries: Vec::new(), index: HashMap::new() }
    }
}

impl<C> CallTable<C> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Variant lookup of `call` at `state`. A miss reserves a fresh
    /// in-progress entry for the pair.
    pub fn lookup(&mut self, call: &Term, state: StateSignature, kind: EntryKind) -> Lookup {
        let key = (canonical_variant(call).0, state);
        if let Some(&id) = self.index.get(&key) {
            return match self.entries[id].status {
                Status::InProgress => Lookup::InProgress(id),
                Status::Complete => Lookup::Complete(id),
            };
        }
        let id = self.push(key.0.clone(), state, kind);
        self.index.insert(key, id);
        Lookup::Miss(id)
    }

    /// Lookup without reserving.
    pub fn peek(&self, call: &Term, state: StateSignature) -> Option<EntryId> {
        self.index.get(&(canonical_variant(call).0, state)).copied()
    }

    /// An unindexed entry for a top-level goal.
    pub(crate) fn push_query(&mut self, template: Term, state: StateSignature) -> EntryId {
        self.push(template, state, EntryKind::Query)
    }

    fn push(&mut self, call: Term, state: StateSignature, kind: EntryKind) -> EntryId {
        self.entries.push(TableEntry {
            call,
            state,
            kind,
            status: Status::InProgress,
            answers: Vec::new(),
            answer_set: HashSet::new(),
            consumers: Vec::new(),
        });
        self.entries.len() - 1
    }

    pub fn entry(&self, id: EntryId) -> &TableEntry<C> {
        &self.entries[id]
    }

    pub(crate) fn entry_mut(&mut self, id: EntryId) -> &mut TableEntry<C> {
        &mut self.entries[id]
    }

    /// Adds an answer; `instance` is canonicalized first. Returns true iff
    /// the answer is new.
    pub fn insert_answer(&mut self, id: EntryId, instance: &Term, final_state: StateSignature) -> Result<bool, CompletedEntry> {
        let entry = &mut self.entries[id];
        if entry.status == Status::Complete {
            return Err(CompletedEntry(id));
        }
        let answer = TableAnswer { instance: canonical_variant(instance).0, final_state };
        if !entry.answer_set.insert(answer.clone()) {
            return Ok(false);
        }
        entry.answers.push(answer);
        Ok(true)
    }

    pub(crate) fn next_id(&self) -> EntryId {
        self.entries.len()
    }

    /// Completes every entry created at or after `start`.
    pub(crate) fn complete_from(&mut self, start: EntryId) {
        for id in start..self.entries.len() {
            if self.entries[id].status == Status::InProgress {
                self.complete(id);
            }
        }
    }

    pub fn complete(&mut self, id: EntryId) {
        let e = &mut self.entries[id];
        e.status = Status::Complete;
        e.consumers = Vec::new();
    }

    /// Removes every in-progress entry from the index so that a later call
    /// recomputes it.
    pub(crate) fn abolish_incomplete(&mut self) {
        let entries = &mut self.entries;
        self.index.retain(|_, id| entries[*id].status == Status::Complete);
        for e in entries.iter_mut().filter(|e| e.status == Status::InProgress) {
            e.consumers = Vec::new();
        }
    }

    pub fn incomplete(&self) -> impl Iterator<Item = EntryId> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.status == Status::InProgress && e.kind != EntryKind::Query)
            .map(|(i, _)| i)
    }

    /// Indexed entries in creation order.
    pub fn entries(&self) -> impl Iterator<Item = (EntryId, &TableEntry<C>)> {
        let mut ids: Vec<EntryId> = self.index.values().copied().collect();
        ids.sort_unstable();
        ids.into_iter().map(move |id| (id, &self.entries[id]))
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.index.clear();
    }
}

/// One rendered row per answer, `fail` for entries without answers:
/// `call | initial state | answer unification | final state`.
pub struct TableRows<'a, C>(pub &'a CallTable<C>);

impl<C> fmt::Display for TableRows<'_, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "call | state | answer | final")?;
        for (_, e) in self.0.entries() {
            let status = if e.status == Status::InProgress { " (incomplete)" } else { "" };
            if e.answers.is_empty() {
                writeln!(f, "{} | {} | fail | -{status}", e.call, e.state)?;
            }
            for a in &e.answers {
                let b = e.bindings(a);
                let pairs: Vec<String> = b.iter().map(|(v, t)| format!("{v}/{t}")).collect();
                writeln!(f, "{} | {} | [{}] | {}{status}", e.call, e.state, pairs.join(", "), a.final_state)?;
            }
        }
        Ok(())
    }
}
