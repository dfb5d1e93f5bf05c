//! Depth-first reference prover: clauses in program order, serial goals left
//! to right, chronological backtracking over a binding trail.

use std::collections::HashMap;
use std::rc::Rc;

use indexmap::IndexSet;

use super::{Answer, Engine, EngineError};
use crate::builtin::normalize_arith;
use crate::program::{Role, SerialGoal, Step};
use crate::signing::{StateSignature, UpdateOp};
use crate::store::{ElementaryUpdate, StoreError};
use crate::term::{Term, Var};

type Goals = Option<Rc<Cell>>;

struct Cell {
    step: Step,
    next: Goals,
}

impl Drop for Cell {
    // unlinks long goal lists iteratively
    fn drop(&mut self) {
        let mut next = self.next.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut cell) => next = cell.next.take(),
                Err(_) => break,
            }
        }
    }
}

fn push_front(steps: Vec<Step>, tail: Goals) -> Goals {
    steps.into_iter().rev().fold(tail, |next, step| Some(Rc::new(Cell { step, next })))
}

enum Alternatives {
    Rules { atom: Term, rules: std::sync::Arc<[usize]>, next: usize },
    Facts { atom: Term, facts: Vec<Term>, next: usize },
}

struct Choice {
    alts: Alternatives,
    cont: Goals,
    state: StateSignature,
    mark: usize,
}

#[derive(Default)]
struct Bindings {
    map: HashMap<Var, Term>,
    trail: Vec<Var>,
}

impl Bindings {
    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.map.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| self.resolve(a)).collect()),
            other => other.clone(),
        }
    }

    fn occurs(&self, v: &Var, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => w == v,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }

    fn bind(&mut self, v: Var, t: Term) {
        self.trail.push(v.clone());
        self.map.insert(v, t);
    }

    fn unify(&mut self, a: &Term, b: &Term, occurs_check: bool) -> bool {
        let mut stack = vec![(a.clone(), b.clone())];
        while let Some((x, y)) = stack.pop() {
            let x = self.walk(&x).clone();
            let y = self.walk(&y).clone();
            match (x, y) {
                (Term::Var(v), Term::Var(w)) if v == w => {}
                (Term::Var(v), t) | (t, Term::Var(v)) => {
                    if occurs_check && self.occurs(&v, &t) {
                        return false;
                    }
                    self.bind(v, t);
                }
                (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return false;
                    }
                    stack.extend(xs.iter().cloned().zip(ys.iter().cloned()));
                }
                (x, y) => {
                    if x != y {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        for v in self.trail.drain(mark..) {
            self.map.remove(&v);
        }
    }
}

impl Engine {
    /// Every answer found by depth-first search within `budget` steps.
    pub fn solve_untabled(
        &mut self,
        goal: &SerialGoal,
        state: StateSignature,
        budget: u64,
    ) -> Result<Vec<Answer>, EngineError> {
        self.store.log(state).map_err(|e| EngineError::Store(e.into()))?;
        let vars = goal.vars();
        let mut answers: IndexSet<Answer> = IndexSet::new();
        let mut b = Bindings::default();
        let mut choices: Vec<Choice> = Vec::new();
        let mut goals = push_front(goal.steps.clone(), None);
        let mut state = state;
        let mut steps = 0u64;
        loop {
            steps += 1;
            if steps > budget {
                return Err(EngineError::StepBudget { limit: budget, answers_found: answers.len(), oldest: None });
            }
            let mut proceed = true;
            match goals.take() {
                None => {
                    let values: Vec<Term> = vars.iter().map(|v| normalize_arith(&b.resolve(&Term::Var(v.clone())))).collect();
                    answers.insert(Answer::from_values(&vars, &values, state));
                    proceed = false;
                }
                Some(cell) => {
                    let step = cell.step.map_terms(|t| normalize_arith(&b.resolve(t)));
                    goals = cell.next.clone();
                    match step {
                        Step::Test(c) => {
                            self.emit_trace(&c, state, "query");
                            proceed = c.holds()?;
                        }
                        Step::Ins(ref a) | Step::Del(ref a) => {
                            self.emit_trace(&step, state, "update");
                            let op = if matches!(step, Step::Ins(_)) { UpdateOp::Ins } else { UpdateOp::Del };
                            let a = a.clone();
                            if !a.is_ground() {
                                return Err(StoreError::NotGround(a).into());
                            }
                            self.stats.updates_applied += 1;
                            state = self.store.apply_elementary(&ElementaryUpdate { op, atom: a }, state)?;
                        }
                        Step::Call(a) => {
                            let alts = match self.store.roles().of_atom(&a) {
                                None => return Err(EngineError::UnknownPredicate(a.pred().expect("atoms have predicates"))),
                                Some(Role::Transactional) => {
                                    self.emit_trace(&a, state, "clause");
                                    let rules = self.rules_for(&a.pred().unwrap());
                                    Alternatives::Rules { atom: a, rules, next: 0 }
                                }
                                Some(_) => {
                                    self.emit_trace(&a, state, "query");
                                    self.stats.oracle_queries += 1;
                                    let facts = self.store.query_facts(&a, state)?;
                                    Alternatives::Facts { atom: a, facts, next: 0 }
                                }
                            };
                            choices.push(Choice { alts, cont: goals.take(), state, mark: b.trail.len() });
                            proceed = false;
                        }
                    }
                }
            }
            if !proceed {
                match self.retry(&mut choices, &mut b) {
                    Some((g, s)) => {
                        goals = g;
                        state = s;
                    }
                    None => break,
                }
            }
        }
        Ok(answers.into_iter().collect())
    }

    /// Resumes the most recent choice point with an untried alternative.
    fn retry(&mut self, choices: &mut Vec<Choice>, b: &mut Bindings) -> Option<(Goals, StateSignature)> {
        let occurs_check = self.options.occurs_check;
        while let Some(choice) = choices.last_mut() {
            b.undo(choice.mark);
            let found = match &mut choice.alts {
                Alternatives::Rules { atom, rules, next } => {
                    let mut found = None;
                    while *next < rules.len() {
                        let r = rules[*next];
                        *next += 1;
                        let (head, body) = self.rename_rule(r);
                        if b.unify(atom, &head, occurs_check) {
                            self.stats.clause_resolutions += 1;
                            found = Some(push_front(body, choice.cont.clone()));
                            break;
                        }
                        b.undo(choice.mark);
                    }
                    found.map(|g| (g, *next >= rules.len()))
                }
                Alternatives::Facts { atom, facts, next } => {
                    let mut found = None;
                    while *next < facts.len() {
                        let f = &facts[*next];
                        *next += 1;
                        if b.unify(atom, f, occurs_check) {
                            found = Some(choice.cont.clone());
                            break;
                        }
                        b.undo(choice.mark);
                    }
                    found.map(|g| (g, *next >= facts.len()))
                }
            };
            match found {
                Some((goals, last)) => {
                    let state = choice.state;
                    if last {
                        // keep the bindings; drop the exhausted choice point
                        choices.pop();
                    }
                    return Some((goals, state));
                }
                None => {
                    choices.pop();
                }
            }
        }
        None
    }
}
