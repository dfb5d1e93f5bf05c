//! Update-log representation of states and their signatures.
//!
//! A reachable state is described by its update log relative to the initial
//! database D0: the set of clauses inserted and the set deleted. Clauses are
//! interned in a byte trie with a counter (ids start at 1); normalized logs
//! are interned in a second trie keyed on their sorted `(op, clause id)`
//! sequence (ids start at 0, which is the empty log). Two states are equal iff
//! their signatures are equal.
//!
//! Clause serialization, one field per token, each token followed by 0x1F:
//!
//! ```text
//! clause := "F" term | "R" <body length> term term*
//! term   := "?" <var number> | "#" <integer> | <name> "/" <arity> term*
//! ```
//!
//! Variables are numbered in first-occurrence order over the whole clause.

pub mod godel;
mod trie;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

pub use trie::Trie;

use crate::term::{Term, Var};

const SEP: u8 = 0x1F;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ClauseId(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct StateSignature(pub u32);

impl StateSignature {
    pub const INITIAL: StateSignature = StateSignature(0);
}

impl fmt::Display for StateSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A fact or a data rule, as it may appear in a log.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Clause {
    Fact(Term),
    Rule { head: Term, body: Vec<Term> },
}

impl Clause {
    /// Renames variables to `V0, V1, …` in first-occurrence order across the
    /// head and body.
    pub fn canonical(&self) -> Clause {
        match self {
            Clause::Fact(t) => Clause::Fact(crate::term::canonical_variant(t).0),
            Clause::Rule { head, body } => {
                let mut order = Vec::new();
                let mut seen = HashSet::new();
                head.collect_vars(&mut order, &mut seen);
                for b in body {
                    b.collect_vars(&mut order, &mut seen);
                }
                let map: HashMap<Var, Term> = order
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| (v, Term::Var(crate::term::canonical_var(i))))
                    .collect();
                let mut ren = |t: &Term| t.map_vars(&mut |v| map.get(v).cloned());
                Clause::Rule { head: ren(head), body: body.iter().map(&mut ren).collect() }
            }
        }
    }

    /// Serialized trie key of the canonical clause.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut vars: HashMap<Var, usize> = HashMap::new();
        let mut field = |out: &mut Vec<u8>, s: &str| {
            out.extend_from_slice(s.as_bytes());
            out.push(SEP);
        };
        fn term(t: &Term, out: &mut Vec<u8>, vars: &mut HashMap<Var, usize>, field: &mut impl FnMut(&mut Vec<u8>, &str)) {
            match t {
                Term::Var(v) => {
                    let n = vars.len();
                    let k = *vars.entry(v.clone()).or_insert(n);
                    field(out, &format!("?{k}"));
                }
                Term::Int(i) => field(out, &format!("#{i}")),
                Term::Const(c) => field(out, &format!("{c}/0")),
                Term::Compound(f, args) => {
                    field(out, &format!("{f}/{}", args.len()));
                    for a in args.iter() {
                        term(a, out, vars, field);
                    }
                }
            }
        }
        match self {
            Clause::Fact(t) => {
                field(&mut out, "F");
                term(t, &mut out, &mut vars, &mut field);
            }
            Clause::Rule { head, body } => {
                field(&mut out, "R");
                field(&mut out, &body.len().to_string());
                term(head, &mut out, &mut vars, &mut field);
                for b in body {
                    term(b, &mut out, &mut vars, &mut field);
                }
            }
        }
        out
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::Fact(t) => write!(f, "{t}"),
            Clause::Rule { head, body } => {
                write!(f, "{head} <- ")?;
                for (i, b) in body.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" * ")?;
                    }
                    write!(f, "{b}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum UpdateOp {
    Ins,
    Del,
}

/// Normalized update log: sorted insert and delete sets of clause ids.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct UpdateLog {
    pub ins: BTreeSet<ClauseId>,
    pub del: BTreeSet<ClauseId>,
}

impl UpdateLog {
    pub fn is_empty(&self) -> bool {
        self.ins.is_empty() && self.del.is_empty()
    }

    /// Trie key: inserts then deletes, each ascending.
    pub fn key(&self) -> impl Iterator<Item = u64> + '_ {
        self.ins
            .iter()
            .map(|c| c.0 as u64)
            .chain(self.del.iter().map(|c| (1u64 << 32) | c.0 as u64))
    }

    /// The state this log denotes over `d0`.
    pub fn apply_to(&self, d0: &BTreeSet<ClauseId>) -> BTreeSet<ClauseId> {
        d0.difference(&self.del).chain(self.ins.iter()).copied().collect()
    }
}

/// Adds one elementary update to a normalized log, cancelling the reverse
/// operation. A log stays in normal form relative to D0: inserts never name a
/// D0 clause and deletes only name D0 clauses, so the result denotes exactly
/// the state reached by the update.
pub fn normalize(log: &UpdateLog, op: UpdateOp, clause: ClauseId, in_d0: bool) -> UpdateLog {
    let mut out = log.clone();
    match op {
        UpdateOp::Ins => {
            out.del.remove(&clause);
            if !in_d0 {
                out.ins.insert(clause);
            }
        }
        UpdateOp::Del => {
            out.ins.remove(&clause);
            if in_d0 {
                out.del.insert(clause);
            }
        }
    }
    out
}

/// Clauses to insert into and delete from one state to reach another.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LogDelta {
    pub ins: BTreeSet<ClauseId>,
    pub del: BTreeSet<ClauseId>,
}

impl LogDelta {
    pub fn is_empty(&self) -> bool {
        self.ins.is_empty() && self.del.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ins.len() + self.del.len()
    }

    pub fn apply_to(&self, state: &BTreeSet<ClauseId>) -> BTreeSet<ClauseId> {
        state.difference(&self.del).chain(self.ins.iter()).copied().collect()
    }
}

/// Difference between two logs over the same D0.
pub fn diff_logs(from: &UpdateLog, to: &UpdateLog) -> LogDelta {
    LogDelta {
        ins: to.ins.difference(&from.ins).chain(from.del.difference(&to.del)).copied().collect(),
        del: from.ins.difference(&to.ins).chain(to.del.difference(&from.del)).copied().collect(),
    }
}

/// Both interning tries plus the log of every signed state.
#[derive(Clone, Debug)]
pub struct StateSigner {
    clause_trie: Trie<u8>,
    clauses: Vec<Clause>,
    state_trie: Trie<u64>,
    logs: Vec<UpdateLog>,
    transitions: HashMap<(StateSignature, UpdateOp, ClauseId, bool), StateSignature>,
}

impl Default for StateSigner {
    fn default() -> Self {
        Self::new()
    }
}

impl StateSigner {
    pub fn new() -> Self {
        let mut state_trie = Trie::new(0);
        let (zero, _) = state_trie.intern(std::iter::empty());
        debug_assert_eq!(zero, 0);
        StateSigner {
            clause_trie: Trie::new(1),
            clauses: Vec::new(),
            state_trie,
            logs: vec![UpdateLog::default()],
            transitions: HashMap::new(),
        }
    }

    pub fn intern_clause(&mut self, clause: &Clause) -> ClauseId {
        let canonical = clause.canonical();
        let (id, new) = self.clause_trie.intern(canonical.serialize());
        if new {
            self.clauses.push(canonical);
        }
        ClauseId(id)
    }

    pub fn lookup_clause(&self, clause: &Clause) -> Option<ClauseId> {
        self.clause_trie.get(clause.canonical().serialize()).map(ClauseId)
    }

    pub fn clause(&self, id: ClauseId) -> &Clause {
        &self.clauses[id.0 as usize - 1]
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    pub fn sign_state(&mut self, log: &UpdateLog) -> StateSignature {
        let (id, new) = self.state_trie.intern(log.key());
        if new {
            self.logs.push(log.clone());
        }
        StateSignature(id)
    }

    pub fn state_count(&self) -> usize {
        self.logs.len()
    }

    pub fn log(&self, sig: StateSignature) -> Option<&UpdateLog> {
        self.logs.get(sig.0 as usize)
    }

    pub fn contains(&self, sig: StateSignature) -> bool {
        (sig.0 as usize) < self.logs.len()
    }

    /// Signature of the state reached from `sig` by one update. Memoized, so
    /// repeated transitions cost one hash lookup.
    pub fn transition(&mut self, sig: StateSignature, op: UpdateOp, clause: ClauseId, in_d0: bool) -> StateSignature {
        if let Some(&next) = self.transitions.get(&(sig, op, clause, in_d0)) {
            return next;
        }
        let log = normalize(&self.logs[sig.0 as usize], op, clause, in_d0);
        let next = self.sign_state(&log);
        self.transitions.insert((sig, op, clause, in_d0), next);
        next
    }

    /// `ins[...]/del[...] @ sig`.
    pub fn render(&self, sig: StateSignature) -> String {
        let log = &self.logs[sig.0 as usize];
        let list = |ids: &BTreeSet<ClauseId>| {
            ids.iter().map(|c| self.clause(*c).to_string()).collect::<Vec<_>>().join(", ")
        };
        format!("ins[{}]/del[{}] @ {}", list(&log.ins), list(&log.del), sig)
    }
}
