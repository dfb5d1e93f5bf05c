//! Provers for serial goals: a tabled prover whose call-answer table is keyed
//! on (variant call, state signature), and a depth-first reference prover.

mod table;
mod tabled;
mod untabled;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub use table::{CallTable, CompletedEntry, EntryId, EntryKind, Lookup, Status, TableAnswer, TableEntry, TableRows};
pub use tabled::{Continuation, Solutions};

use crate::builtin::EvalError;
use crate::program::{Program, SerialGoal, Step, TrRule};
use crate::signing::StateSignature;
use crate::store::{Store, StoreError, StoreOptions};
use crate::term::{canonical_variant, Pred, Renamer, Substitution, Term, Var};

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    /// Use the tabled prover in [`Engine::run`].
    pub tabling: bool,
    /// Inference step budget per query.
    pub max_steps: u64,
    pub occurs_check: bool,
    /// Table elementary updates as `ins(a)` / `del(a)` calls.
    pub table_updates: bool,
    pub trace: bool,
    pub store: StoreOptions,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            tabling: true,
            max_steps: 10_000_000,
            occurs_check: true,
            table_updates: true,
            trace: false,
            store: StoreOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Default, PartialEq, Eq, Debug)]
pub struct EngineStats {
    pub table_hits: u64,
    pub table_misses: u64,
    pub answers_produced: u64,
    pub clause_resolutions: u64,
    pub oracle_queries: u64,
    pub updates_applied: u64,
    pub states_interned: u64,
}

impl fmt::Display for EngineStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "table_hits: {}", self.table_hits)?;
        writeln!(f, "table_misses: {}", self.table_misses)?;
        writeln!(f, "answers_produced: {}", self.answers_produced)?;
        writeln!(f, "clause_resolutions: {}", self.clause_resolutions)?;
        writeln!(f, "oracle_queries: {}", self.oracle_queries)?;
        writeln!(f, "updates_applied: {}", self.updates_applied)?;
        write!(f, "states_interned: {}", self.states_interned)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("step budget of {limit} exhausted after {answers_found} answer(s){}", .oldest.as_ref().map(|o| format!("; oldest incomplete call: {o}")).unwrap_or_default())]
    StepBudget { limit: u64, answers_found: usize, oldest: Option<String> },
    #[error("unknown predicate `{0}` in call position")]
    UnknownPredicate(Pred),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Table(#[from] CompletedEntry),
}

impl EngineError {
    pub fn is_resource(&self) -> bool {
        matches!(self, EngineError::StepBudget { .. })
    }
}

/// Bindings of the goal's variables and the state the execution ended in.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Answer {
    pub bindings: Substitution,
    pub final_state: StateSignature,
}

impl Answer {
    /// Builds an answer from the values of `vars`. Variables left in the
    /// values are renamed `_0, _1, …` so that answers compare as sets.
    pub(crate) fn from_values(vars: &[Var], values: &[Term], final_state: StateSignature) -> Answer {
        let (canon, _) = canonical_variant(&Term::compound("$", values.to_vec()));
        let mut names = HashMap::new();
        let renamed = canon.map_vars(&mut |v| {
            let n = names.len();
            Some(names.entry(v.clone()).or_insert_with(|| Term::Var(Var::new(format!("_{n}")))).clone())
        });
        let pairs = vars.iter().cloned().zip(renamed.args().iter().cloned());
        let bindings = Substitution::from_bindings(pairs).unwrap_or_default();
        Answer { bindings, final_state }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bindings.is_empty() {
            f.write_str("true")?;
        }
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}={t}")?;
        }
        write!(f, " @ state={}", self.final_state)
    }
}

pub struct Engine {
    program: Program,
    rules_by_pred: HashMap<Pred, Arc<[usize]>>,
    store: Store,
    table: CallTable<Continuation>,
    stats: EngineStats,
    options: EngineOptions,
    renamer: Renamer,
    trace: Vec<String>,
    trace_step: u64,
    work: Vec<tabled::Work>,
    steps: u64,
}

impl Engine {
    pub fn new(program: Program, options: EngineOptions) -> Result<Engine, EngineError> {
        let store = Store::new(&program, options.store)?;
        let mut by_pred: HashMap<Pred, Vec<usize>> = HashMap::new();
        for (i, r) in program.tr_rules.iter().enumerate() {
            if let Some(p) = r.head.pred() {
                by_pred.entry(p).or_default().push(i);
            }
        }
        Ok(Engine {
            program,
            rules_by_pred: by_pred.into_iter().map(|(p, v)| (p, v.into())).collect(),
            store,
            table: CallTable::new(),
            stats: EngineStats::default(),
            options,
            renamer: Renamer::new(),
            trace: Vec::new(),
            trace_step: 0,
            work: Vec::new(),
            steps: 0,
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn options_mut(&mut self) -> &mut EngineOptions {
        &mut self.options
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }

    pub fn table(&self) -> &CallTable<Continuation> {
        &self.table
    }

    /// Variant lookup; reserves an entry on a miss.
    pub fn table_lookup(&mut self, call: &Term, state: StateSignature) -> Lookup {
        self.table.lookup(call, state, EntryKind::Transaction)
    }

    pub fn table_dump(&self) -> String {
        TableRows(&self.table).to_string()
    }

    pub fn clear_table(&mut self) {
        self.table.clear();
    }

    pub fn stats(&self) -> EngineStats {
        EngineStats { states_interned: self.store.state_count() as u64, ..self.stats }
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        std::mem::take(&mut self.trace)
    }

    /// All answers, using the prover selected by the options.
    pub fn run(&mut self, goal: &SerialGoal, state: StateSignature) -> Result<Vec<Answer>, EngineError> {
        if self.options.tabling {
            self.solve_all(goal, state)
        } else {
            self.solve_untabled(goal, state, self.options.max_steps)
        }
    }

    pub fn solve_all(&mut self, goal: &SerialGoal, state: StateSignature) -> Result<Vec<Answer>, EngineError> {
        self.solve(goal, state).collect()
    }

    fn rules_for(&self, pred: &Pred) -> Arc<[usize]> {
        self.rules_by_pred.get(pred).cloned().unwrap_or_else(|| Arc::from(Vec::new()))
    }

    /// Renames a rule apart: head and body steps.
    fn rename_rule(&mut self, rule: usize) -> (Term, Vec<Step>) {
        let TrRule { head, body, .. } = &self.program.tr_rules[rule];
        let mut terms = vec![head];
        for s in &body.steps {
            terms.extend(s.terms());
        }
        let mut renamed = self.renamer.rename_all(terms).into_iter();
        let head = renamed.next().unwrap();
        let steps = body.steps.iter().map(|s| s.map_terms(|_| renamed.next().unwrap())).collect();
        (head, steps)
    }

    fn tick(&mut self) -> bool {
        self.steps += 1;
        self.steps <= self.options.max_steps
    }

    fn emit_trace(&mut self, goals: impl fmt::Display, state: StateSignature, rule: &str) {
        if self.options.trace {
            self.trace_step += 1;
            self.trace.push(format!("STEP {} | {goals} | state={state} | rule={rule}", self.trace_step));
        }
    }
}
