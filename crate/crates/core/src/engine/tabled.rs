//! Tabled proof search. Work items are proof-tree nodes carrying their own
//! state signature; a call to a tabled predicate either starts a producer
//! (table miss) or suspends the caller as a consumer of the entry's answers.

use std::fmt;

use super::table::{EntryId, EntryKind, Lookup};
use super::{Answer, Engine, EngineError};
use crate::builtin::normalize_arith;
use crate::program::{Role, SerialGoal, Step};
use crate::signing::{StateSignature, UpdateOp};
use crate::store::{ElementaryUpdate, StoreError};
use crate::term::{unify_with, Substitution, Term, Var};

/// A caller suspended on a table entry: resumes `rest` once `atom` is
/// unified with an answer.
#[derive(Clone, Debug)]
pub struct Continuation {
    owner: EntryId,
    template: Term,
    atom: Term,
    rest: Vec<Step>,
}

/// A proof-tree node: the instantiated call template of its owning entry,
/// the remaining goals (next step last), and the current state.
pub(crate) struct Node {
    owner: EntryId,
    template: Term,
    goals: Vec<Step>,
    state: StateSignature,
}

pub(crate) enum Work {
    Expand(Node),
    Feed { entry: EntryId, consumer: usize, answer: usize },
}

struct Goals<'a>(&'a [Step]);

impl fmt::Display for Goals<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("true");
        }
        for (i, s) in self.0.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

fn apply_all(sub: &Substitution, goals: &[Step]) -> Vec<Step> {
    goals.iter().map(|s| s.map_terms(|t| sub.apply(t))).collect()
}

/// Lazy answers of a tabled query. Dropping it early abandons the
/// computation and discards the tables it left incomplete.
pub struct Solutions<'e> {
    engine: &'e mut Engine,
    top: EntryId,
    start: EntryId,
    vars: Vec<Var>,
    next: usize,
    finished: bool,
    error: Option<EngineError>,
}

impl Engine {
    /// Answers of `goal` started at `state`, produced lazily.
    pub fn solve(&mut self, goal: &SerialGoal, state: StateSignature) -> Solutions<'_> {
        let vars = goal.vars();
        let template = Term::compound("$answer", vars.iter().cloned().map(Term::Var).collect());
        let start = self.table.next_id();
        let top = self.table.push_query(template.clone(), state);
        self.steps = 0;
        self.work.clear();
        let error = self.store.log(state).err().map(|e| EngineError::Store(e.into()));
        if error.is_none() {
            let goals = goal.steps.iter().rev().cloned().collect();
            self.work.push(Work::Expand(Node { owner: top, template, goals, state }));
        }
        Solutions { engine: self, top, start, vars, next: 0, finished: false, error }
    }

    fn process(&mut self, work: Work) -> Result<(), EngineError> {
        if !self.tick() {
            return Err(self.budget_error());
        }
        match work {
            Work::Expand(node) => self.expand(node),
            Work::Feed { entry, consumer, answer } => {
                let e = self.table.entry(entry);
                let cont = e.consumers[consumer].cont.clone();
                let ans = e.answers()[answer].clone();
                self.emit_trace(format_args!("{} * {}", cont.atom, Goals(&cont.rest)), ans.final_state, "tabling");
                if let Some(node) = self.resume(&cont, &ans.instance, ans.final_state) {
                    self.work.push(Work::Expand(node));
                }
                Ok(())
            }
        }
    }

    fn budget_error(&self) -> EngineError {
        let oldest = self.table.incomplete().next().map(|id| {
            let e = self.table.entry(id);
            format!("{} @ state={}", e.call, e.state)
        });
        EngineError::StepBudget { limit: self.options.max_steps, answers_found: 0, oldest }
    }

    fn expand(&mut self, mut node: Node) -> Result<(), EngineError> {
        let Some(step) = node.goals.pop() else {
            return self.add_answer(node.owner, &node.template, node.state);
        };
        let step = step.map_terms(normalize_arith);
        match step {
            Step::Test(c) => {
                self.emit_trace(format_args!("{c} * {}", Goals(&node.goals)), node.state, "query");
                if c.holds()? {
                    self.work.push(Work::Expand(node));
                }
                Ok(())
            }
            Step::Ins(ref a) | Step::Del(ref a) => {
                let op = if matches!(step, Step::Ins(_)) { UpdateOp::Ins } else { UpdateOp::Del };
                self.emit_trace(format_args!("{step} * {}", Goals(&node.goals)), node.state, "update");
                let a = a.clone();
                node.state = self.tabled_update(op, a, node.state)?;
                self.work.push(Work::Expand(node));
                Ok(())
            }
            Step::Call(a) => match self.store.roles().of_atom(&a) {
                None => Err(EngineError::UnknownPredicate(a.pred().expect("atoms have predicates"))),
                Some(Role::Transactional) => self.call_tabled(node, a),
                Some(_) => self.call_data(node, a),
            },
        }
    }

    fn tabled_update(&mut self, op: UpdateOp, atom: Term, state: StateSignature) -> Result<StateSignature, EngineError> {
        if !atom.is_ground() {
            return Err(StoreError::NotGround(atom).into());
        }
        let update = ElementaryUpdate { op, atom };
        if !self.options.table_updates {
            self.stats.updates_applied += 1;
            return Ok(self.store.apply_elementary(&update, state)?);
        }
        let key = Term::compound(if op == UpdateOp::Ins { "ins" } else { "del" }, vec![update.atom.clone()]);
        match self.table.lookup(&key, state, EntryKind::Update) {
            Lookup::Miss(id) => {
                self.stats.table_misses += 1;
                self.stats.updates_applied += 1;
                let next = self.store.apply_elementary(&update, state)?;
                self.table.insert_answer(id, &key, next)?;
                self.table.complete(id);
                Ok(next)
            }
            Lookup::Complete(id) | Lookup::InProgress(id) => {
                self.stats.table_hits += 1;
                Ok(self.table.entry(id).answers()[0].final_state)
            }
        }
    }

    fn call_data(&mut self, node: Node, atom: Term) -> Result<(), EngineError> {
        let id = match self.table.lookup(&atom, node.state, EntryKind::Data) {
            Lookup::Miss(id) => {
                self.stats.table_misses += 1;
                self.stats.oracle_queries += 1;
                for fact in self.store.query_facts(&atom, node.state)? {
                    self.table.insert_answer(id, &fact, node.state)?;
                }
                self.table.complete(id);
                id
            }
            Lookup::Complete(id) | Lookup::InProgress(id) => {
                self.stats.table_hits += 1;
                id
            }
        };
        self.emit_trace(format_args!("{atom} * {}", Goals(&node.goals)), node.state, "query");
        self.consume_complete(id, node, atom);
        Ok(())
    }

    fn call_tabled(&mut self, node: Node, atom: Term) -> Result<(), EngineError> {
        match self.table.lookup(&atom, node.state, EntryKind::Transaction) {
            Lookup::Miss(id) => {
                self.stats.table_misses += 1;
                self.emit_trace(format_args!("{atom} * {}", Goals(&node.goals)), node.state, "clause");
                let state = node.state;
                self.suspend(id, node, atom);
                let call = self.table.entry(id).call.clone();
                let pred = call.pred().expect("atoms have predicates");
                let rules = self.rules_for(&pred);
                let mut children = Vec::new();
                for &r in rules.iter() {
                    let (head, body) = self.rename_rule(r);
                    let Some(sub) = unify_with(&call, &head, self.options.occurs_check) else { continue };
                    self.stats.clause_resolutions += 1;
                    let goals: Vec<Step> = body.iter().rev().map(|s| s.map_terms(|t| sub.apply(t))).collect();
                    children.push(Node { owner: id, template: sub.apply(&call), goals, state });
                }
                self.work.extend(children.into_iter().rev().map(Work::Expand));
            }
            Lookup::InProgress(id) => {
                self.stats.table_hits += 1;
                self.emit_trace(format_args!("{atom} * {}", Goals(&node.goals)), node.state, "tabling");
                let consumer = self.suspend(id, node, atom);
                let n = self.table.entry(id).answers().len();
                self.work.extend((0..n).rev().map(|answer| Work::Feed { entry: id, consumer, answer }));
            }
            Lookup::Complete(id) => {
                self.stats.table_hits += 1;
                self.emit_trace(format_args!("{atom} * {}", Goals(&node.goals)), node.state, "tabling");
                self.consume_complete(id, node, atom);
            }
        }
        Ok(())
    }

    fn suspend(&mut self, id: EntryId, node: Node, atom: Term) -> usize {
        let cont = Continuation { owner: node.owner, template: node.template, atom, rest: node.goals };
        let consumers = &mut self.table.entry_mut(id).consumers;
        consumers.push(super::table::Consumer { cont });
        consumers.len() - 1
    }

    fn consume_complete(&mut self, id: EntryId, node: Node, atom: Term) {
        let cont = Continuation { owner: node.owner, template: node.template, atom, rest: node.goals };
        let answers = self.table.entry(id).answers().to_vec();
        let mut children = Vec::with_capacity(answers.len());
        for a in &answers {
            if let Some(n) = self.resume(&cont, &a.instance, a.final_state) {
                children.push(n);
            }
        }
        self.work.extend(children.into_iter().rev().map(Work::Expand));
    }

    fn resume(&mut self, cont: &Continuation, instance: &Term, state: StateSignature) -> Option<Node> {
        let instance = if instance.is_ground() { instance.clone() } else { self.renamer.rename(instance) };
        let sub = unify_with(&cont.atom, &instance, self.options.occurs_check)?;
        Some(Node { owner: cont.owner, template: sub.apply(&cont.template), goals: apply_all(&sub, &cont.rest), state })
    }

    fn add_answer(&mut self, owner: EntryId, template: &Term, state: StateSignature) -> Result<(), EngineError> {
        let template = normalize_arith(template);
        if !self.table.insert_answer(owner, &template, state)? {
            return Ok(());
        }
        self.stats.answers_produced += 1;
        let entry = self.table.entry(owner);
        let answer = entry.answers().len() - 1;
        let n = entry.consumer_count();
        self.work.extend((0..n).rev().map(|consumer| Work::Feed { entry: owner, consumer, answer }));
        Ok(())
    }

    fn abandon(&mut self) {
        self.work.clear();
        self.table.abolish_incomplete();
    }
}

impl Solutions<'_> {
    fn answer(&self, index: usize) -> Answer {
        let a = &self.engine.table.entry(self.top).answers()[index];
        Answer::from_values(&self.vars, a.instance.args(), a.final_state)
    }
}

impl Iterator for Solutions<'_> {
    type Item = Result<Answer, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(e) = self.error.take() {
            self.finished = true;
            return Some(Err(e));
        }
        loop {
            if self.finished {
                return None;
            }
            if self.next < self.engine.table.entry(self.top).answers().len() {
                self.next += 1;
                return Some(Ok(self.answer(self.next - 1)));
            }
            let Some(work) = self.engine.work.pop() else {
                self.engine.table.complete_from(self.start);
                self.finished = true;
                return None;
            };
            if let Err(mut e) = self.engine.process(work) {
                if let EngineError::StepBudget { answers_found, .. } = &mut e {
                    *answers_found = self.engine.table.entry(self.top).answers().len();
                }
                self.engine.abandon();
                self.finished = true;
                return Some(Err(e));
            }
        }
    }
}

impl Drop for Solutions<'_> {
    fn drop(&mut self) {
        if !self.finished {
            self.engine.abandon();
        }
    }
}
