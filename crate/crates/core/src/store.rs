//! Data oracle and transition oracle over relational database states.
//!
//! States are identified by [`StateSignature`]s. A state's base facts are D0
//! with its normalized update log applied; its derived facts are the least
//! fixpoint of the data rules over that base. With incremental maintenance
//! on, one support graph is kept and moved between states by log difference;
//! with it off, each state's extension is computed from scratch and cached.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::facts::FactIndex;
use crate::fixpoint::least_fixpoint;
use crate::program::{validate, DataRule, Diagnostic, Program, Role, Roles};
use crate::signing::{Clause, StateSignature, StateSigner, UpdateLog, UpdateOp};
use crate::support::{SupportGraph, UnknownState};
use crate::term::{match_term, Substitution, Term};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ElementaryUpdate {
    pub op: UpdateOp,
    pub atom: Term,
}

impl ElementaryUpdate {
    pub fn ins(atom: Term) -> Self {
        ElementaryUpdate { op: UpdateOp::Ins, atom }
    }

    pub fn del(atom: Term) -> Self {
        ElementaryUpdate { op: UpdateOp::Del, atom }
    }
}

impl fmt::Display for ElementaryUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            UpdateOp::Ins => write!(f, "ins({})", self.atom),
            UpdateOp::Del => write!(f, "del({})", self.atom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("program is invalid:\n{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("cannot update `{atom}`: its predicate is {role}")]
    Role { atom: Term, role: &'static str },
    #[error("instantiation error: `{0}` is not ground")]
    NotGround(Term),
    #[error(transparent)]
    UnknownState(#[from] UnknownState),
}

#[derive(Clone, Copy, Debug)]
pub struct StoreOptions {
    pub incremental: bool,
    pub rebuild_fraction: f64,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions { incremental: true, rebuild_fraction: 0.5 }
    }
}

#[derive(Clone, Debug)]
enum Oracle {
    Incremental(Box<SupportGraph>),
    Scratch(HashMap<StateSignature, Arc<FactIndex>>),
}

#[derive(Clone, Debug)]
pub struct Store {
    rules: Arc<[DataRule]>,
    roles: Roles,
    d0: Vec<Term>,
    d0_set: HashSet<Term>,
    signer: StateSigner,
    oracle: Oracle,
    warnings: Vec<String>,
    options: StoreOptions,
}

impl Store {
    /// Store positioned at state 0 (the empty log over D0).
    pub fn new(p: &Program, options: StoreOptions) -> Result<Store, StoreError> {
        let diags = validate(p);
        if !diags.is_empty() {
            return Err(StoreError::Invalid(diags));
        }
        let rules: Arc<[DataRule]> = p.data_rules.clone().into();
        let d0: Vec<Term> = p.base_facts.keys().cloned().collect();
        let oracle = if options.incremental {
            let mut g = SupportGraph::build(rules.clone(), d0.iter().cloned(), StateSignature::INITIAL);
            g.rebuild_fraction = options.rebuild_fraction;
            Oracle::Incremental(Box::new(g))
        } else {
            Oracle::Scratch(HashMap::new())
        };
        Ok(Store {
            rules,
            roles: Roles::of(p),
            d0_set: d0.iter().cloned().collect(),
            d0,
            signer: StateSigner::new(),
            oracle,
            warnings: Vec::new(),
            options,
        })
    }

    pub fn options(&self) -> StoreOptions {
        self.options
    }

    pub fn roles(&self) -> &Roles {
        &self.roles
    }

    pub fn signer(&self) -> &StateSigner {
        &self.signer
    }

    pub fn d0(&self) -> &[Term] {
        &self.d0
    }

    /// Warnings raised by queries, such as calls to unknown predicates.
    pub fn take_warnings(&mut self) -> Vec<String> {
        std::mem::take(&mut self.warnings)
    }

    pub fn support_graph(&self) -> Option<&SupportGraph> {
        match &self.oracle {
            Oracle::Incremental(g) => Some(g),
            Oracle::Scratch(_) => None,
        }
    }

    pub fn log(&self, sig: StateSignature) -> Result<&UpdateLog, UnknownState> {
        self.signer.log(sig).ok_or(UnknownState(sig))
    }

    /// `ins[...]/del[...] @ sig`.
    pub fn render_state(&self, sig: StateSignature) -> Result<String, UnknownState> {
        self.log(sig)?;
        Ok(self.signer.render(sig))
    }

    /// Facts of `atom`'s predicate at `sig` that are instances of `atom`.
    pub fn query_facts(&mut self, atom: &Term, sig: StateSignature) -> Result<Vec<Term>, StoreError> {
        self.log(sig)?;
        match self.roles.of_atom(atom) {
            Some(Role::Builtin) => {
                let Some(Term::Const(name)) = atom.args().first() else {
                    return Err(StoreError::NotGround(atom.clone()));
                };
                let empty = !self.extension(sig)?.has_pred_named(name);
                Ok(if empty { vec![atom.clone()] } else { Vec::new() })
            }
            Some(Role::Base | Role::Derived) => Ok(self.extension(sig)?.matching(atom)),
            Some(Role::Transactional) | None => {
                self.warnings.push(format!("warning: unknown data predicate in `{atom}`"));
                Ok(Vec::new())
            }
        }
    }

    /// Answer substitutions for `atom` at `sig`, duplicate-free.
    pub fn query_data(&mut self, atom: &Term, sig: StateSignature) -> Result<Vec<Substitution>, StoreError> {
        let facts = self.query_facts(atom, sig)?;
        let mut seen = HashSet::new();
        Ok(facts
            .iter()
            .filter_map(|f| match_term(atom, f))
            .filter(|s| seen.insert(s.to_string()))
            .collect())
    }

    fn extension(&mut self, sig: StateSignature) -> Result<&FactIndex, StoreError> {
        match &mut self.oracle {
            Oracle::Incremental(g) => {
                g.switch_state(&self.signer, &self.d0, sig)?;
                Ok(g.present())
            }
            Oracle::Scratch(cache) => {
                if !cache.contains_key(&sig) {
                    let base = base_facts(&self.signer, &self.d0, &self.d0_set, sig)?;
                    cache.insert(sig, Arc::new(least_fixpoint(&self.rules, base).facts));
                }
                Ok(&cache[&sig])
            }
        }
    }

    /// Successor state of `sig` under `u`. Inserting a present fact or
    /// deleting an absent one yields `sig` itself.
    pub fn apply_elementary(&mut self, u: &ElementaryUpdate, sig: StateSignature) -> Result<StateSignature, StoreError> {
        self.log(sig)?;
        if !u.atom.is_ground() {
            return Err(StoreError::NotGround(u.atom.clone()));
        }
        match self.roles.of_atom(&u.atom) {
            Some(Role::Base) => {}
            None => {
                if let Some(pred) = u.atom.pred() {
                    self.roles.insert(pred, Role::Base);
                }
            }
            Some(Role::Derived) => return Err(StoreError::Role { atom: u.atom.clone(), role: "derived" }),
            Some(Role::Transactional) => {
                return Err(StoreError::Role { atom: u.atom.clone(), role: "transactional" })
            }
            Some(Role::Builtin) => return Err(StoreError::Role { atom: u.atom.clone(), role: "built-in" }),
        }
        let clause = Clause::Fact(u.atom.clone());
        let in_d0 = self.d0_set.contains(&u.atom);
        let id = self.signer.intern_clause(&clause);
        Ok(self.signer.transition(sig, u.op, id, in_d0))
    }

    /// Full extension of `sig`, recomputed from D0 and the log without using
    /// any incremental state.
    pub fn facts_of(&self, sig: StateSignature) -> Result<BTreeSet<Term>, UnknownState> {
        let base = base_facts(&self.signer, &self.d0, &self.d0_set, sig)?;
        Ok(least_fixpoint(&self.rules, base).facts.iter().cloned().collect())
    }

    /// Base facts of `sig`.
    pub fn base_of(&self, sig: StateSignature) -> Result<BTreeSet<Term>, UnknownState> {
        Ok(base_facts(&self.signer, &self.d0, &self.d0_set, sig)?.into_iter().collect())
    }

    /// Derived extension at `sig`.
    pub fn materialize(&mut self, sig: StateSignature) -> Result<BTreeSet<Term>, StoreError> {
        let derived_roles = self.roles.clone();
        let ext = self.extension(sig)?;
        Ok(ext.iter().filter(|f| derived_roles.of_atom(f) == Some(Role::Derived)).cloned().collect())
    }

    pub fn state_count(&self) -> usize {
        self.signer.state_count()
    }
}

fn base_facts(
    signer: &StateSigner,
    d0: &[Term],
    d0_set: &HashSet<Term>,
    sig: StateSignature,
) -> Result<Vec<Term>, UnknownState> {
    let log = signer.log(sig).ok_or(UnknownState(sig))?;
    let fact = |c| match signer.clause(c) {
        Clause::Fact(f) => Some(f),
        Clause::Rule { .. } => None,
    };
    let deleted: HashSet<&Term> = log.del.iter().filter_map(|&c| fact(c)).collect();
    Ok(d0
        .iter()
        .filter(|f| !deleted.contains(f))
        .chain(log.ins.iter().filter_map(|&c| fact(c)).filter(|f| !d0_set.contains(*f)))
        .cloned()
        .collect())
}
