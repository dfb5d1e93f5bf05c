//! Generators and independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use txlog::term::Term;

pub const TC_RULES: &str = "r(X,Y) :- e(X,Y).\nr(X,Y) :- e(X,Z), r(Z,Y).\n";
pub const CHOOSE_RULES: &str = "choose(X,Y) :- e(X,Y), n(Y).\n";

pub fn t(s: &str) -> Term {
    txlog::parse_term(s).unwrap()
}

/// A data rule in oracle form: head and body atoms.
pub type Rule = (Term, Vec<Term>);

pub fn rules_of(src: &str) -> Vec<Rule> {
    let p = txlog::parse_program(src).unwrap();
    p.data_rules.iter().map(|r| (r.head.clone(), r.body.clone())).collect()
}

fn match_into(pattern: &Term, fact: &Term, env: &mut HashMap<String, Term>) -> bool {
    match (pattern, fact) {
        (Term::Var(v), _) => {
            let key = v.to_string();
            match env.get(&key) {
                Some(bound) => bound == fact,
                None => {
                    env.insert(key, fact.clone());
                    true
                }
            }
        }
        (Term::Compound(f, ps), Term::Compound(g, fs)) => {
            f == g && ps.len() == fs.len() && ps.iter().zip(fs.iter()).all(|(p, x)| match_into(p, x, env))
        }
        _ => pattern == fact,
    }
}

fn substitute(t: &Term, env: &HashMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => env.get(&v.to_string()).cloned().unwrap_or_else(|| t.clone()),
        Term::Compound(f, args) => Term::compound(f.clone(), args.iter().map(|a| substitute(a, env)).collect()),
        _ => t.clone(),
    }
}

/// Every environment under which all of `body` matches facts in `facts`.
fn body_matches(body: &[Term], facts: &BTreeSet<Term>, env: HashMap<String, Term>, out: &mut Vec<HashMap<String, Term>>) {
    let Some((first, rest)) = body.split_first() else {
        out.push(env);
        return;
    };
    for f in facts {
        let mut e = env.clone();
        if match_into(first, f, &mut e) {
            body_matches(rest, facts, e, out);
        }
    }
}

/// Naive bottom-up least fixpoint: apply every rule to everything until
/// nothing changes.
pub fn naive_fixpoint(rules: &[Rule], base: &BTreeSet<Term>) -> BTreeSet<Term> {
    let mut facts = base.clone();
    loop {
        let mut new = Vec::new();
        for (head, body) in rules {
            let mut envs = Vec::new();
            body_matches(body, &facts, HashMap::new(), &mut envs);
            for env in envs {
                let h = substitute(head, &env);
                if !facts.contains(&h) {
                    new.push(h);
                }
            }
        }
        if new.is_empty() {
            return facts;
        }
        facts.extend(new);
    }
}

/// Number of distinct rule instances (rule, body facts) deriving `fact`
/// whose bodies are all in `facts`.
pub fn brute_force_count(rules: &[Rule], facts: &BTreeSet<Term>, fact: &Term) -> usize {
    let mut instances = BTreeSet::new();
    for (i, (head, body)) in rules.iter().enumerate() {
        let mut envs = Vec::new();
        body_matches(body, facts, HashMap::new(), &mut envs);
        for env in envs {
            if &substitute(head, &env) == fact {
                let b: Vec<Term> = body.iter().map(|a| substitute(a, &env)).collect();
                instances.insert((i, b));
            }
        }
    }
    instances.len()
}

/// Random ground facts over `e/2` and `n/1` with nodes `1..=nodes`.
pub fn random_graph_fact(rng: &mut impl Rng, nodes: i64) -> Term {
    if rng.gen_bool(0.75) {
        t(&format!("e({},{})", rng.gen_range(1..=nodes), rng.gen_range(1..=nodes)))
    } else {
        t(&format!("n({})", rng.gen_range(1..=nodes)))
    }
}

/// A random terminating transaction program and goals to run on it.
///
/// Transactional predicates are stratified (rule bodies only call lower
/// ones), so depth-first search terminates. Updates and comparisons only use
/// variables already bound by an earlier step, and every head variable is
/// bound by its body, so every call leaves its arguments ground.
pub struct RandomProgram {
    pub source: String,
    pub goals: Vec<String>,
}

struct Scope {
    bound: Vec<String>,
    next_var: usize,
}

impl Scope {
    fn fresh(&mut self) -> String {
        self.next_var += 1;
        format!("V{}", self.next_var)
    }

    fn arg(&mut self, rng: &mut impl Rng, allow_fresh: bool) -> String {
        let r = rng.gen_range(0..10);
        if r < 4 && !self.bound.is_empty() {
            self.bound.choose(rng).unwrap().clone()
        } else if r < 7 && allow_fresh {
            self.fresh()
        } else {
            rng.gen_range(1..=3).to_string()
        }
    }

    fn bind_all(&mut self, args: &[String]) {
        for a in args {
            if a.starts_with('V') && !self.bound.contains(a) {
                self.bound.push(a.clone());
            }
        }
    }
}

const BASE: [(&str, usize); 3] = [("p", 1), ("q", 2), ("s", 1)];
const OPS: [&str; 5] = ["<", ">", "=<", ">=", "=\\="];

fn call(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", args.join(","))
    }
}

pub fn random_program(rng: &mut impl Rng) -> RandomProgram {
    let mut src = String::new();
    // at least one fact per base predicate, at most 10 in total
    let mut facts = BTreeSet::new();
    for (name, arity) in BASE {
        let args: Vec<String> = (0..arity).map(|_| rng.gen_range(1..=3).to_string()).collect();
        facts.insert(call(name, &args));
    }
    let extra = rng.gen_range(0..=7);
    for _ in 0..extra {
        let (name, arity) = *BASE.choose(rng).unwrap();
        let args: Vec<String> = (0..arity).map(|_| rng.gen_range(1..=3).to_string()).collect();
        facts.insert(call(name, &args));
    }
    for f in &facts {
        src.push_str(&format!("{f}.\n"));
    }
    let derived = rng.gen_bool(0.5);
    if derived {
        src.push_str("d(X,Y) :- q(X,Y), p(Y).\n");
    }
    let mut data: Vec<(&str, usize)> = BASE.to_vec();
    if derived {
        data.push(("d", 2));
    }
    // at most 6 predicates overall; 1..=4 transaction rules in total
    let n_preds = rng.gen_range(1..=(6 - data.len()).min(3));
    let arities: Vec<usize> = (0..n_preds).map(|_| rng.gen_range(0..=2)).collect();
    let mut owners: Vec<usize> = (0..n_preds).collect();
    let extra_rules = rng.gen_range(0..=(4 - n_preds));
    for _ in 0..extra_rules {
        owners.push(rng.gen_range(0..n_preds));
    }
    owners.sort_unstable();
    for &i in &owners {
        let mut scope = Scope { bound: Vec::new(), next_var: 0 };
        let mut steps = Vec::new();
        for _ in 0..rng.gen_range(1..=4) {
            match rng.gen_range(0..10) {
                0..=3 => {
                    let (name, arity) = *data.choose(rng).unwrap();
                    let args: Vec<String> = (0..arity).map(|_| scope.arg(rng, true)).collect();
                    scope.bind_all(&args);
                    steps.push(call(name, &args));
                }
                4..=6 => {
                    let (name, arity) = *BASE.choose(rng).unwrap();
                    let args: Vec<String> = (0..arity).map(|_| scope.arg(rng, false)).collect();
                    let op = if rng.gen_bool(0.5) { "ins" } else { "del" };
                    steps.push(format!("{op}({})", call(name, &args)));
                }
                7..=8 if i > 0 => {
                    let j = rng.gen_range(0..i);
                    let args: Vec<String> = (0..arities[j]).map(|_| scope.arg(rng, true)).collect();
                    scope.bind_all(&args);
                    steps.push(call(&format!("t{j}"), &args));
                }
                _ if !scope.bound.is_empty() => {
                    let lhs = scope.arg(rng, false);
                    let rhs = scope.arg(rng, false);
                    steps.push(format!("{lhs} {} {rhs}", OPS.choose(rng).unwrap()));
                }
                _ => {
                    let (name, arity) = *data.choose(rng).unwrap();
                    let args: Vec<String> = (0..arity).map(|_| scope.arg(rng, true)).collect();
                    scope.bind_all(&args);
                    steps.push(call(name, &args));
                }
            }
        }
        let head_args: Vec<String> = (0..arities[i])
            .map(|_| match scope.bound.choose(rng) {
                Some(v) if rng.gen_bool(0.8) => v.clone(),
                _ => rng.gen_range(1..=3).to_string(),
            })
            .collect();
        src.push_str(&format!("{} <- {}.\n", call(&format!("t{i}"), &head_args), steps.join(" * ")));
    }
    let mut goals = Vec::new();
    for _ in 0..2 {
        let mut scope = Scope { bound: Vec::new(), next_var: 10 };
        let top = rng.gen_range(0..n_preds);
        let args: Vec<String> = (0..arities[top]).map(|_| scope.arg(rng, true)).collect();
        scope.bind_all(&args);
        let mut goal = call(&format!("t{top}"), &args);
        if rng.gen_bool(0.3) {
            let other = rng.gen_range(0..n_preds);
            let args: Vec<String> = (0..arities[other]).map(|_| scope.arg(rng, true)).collect();
            goal = format!("{goal} * {}", call(&format!("t{other}"), &args));
        }
        goals.push(goal);
    }
    RandomProgram { source: src, goals }
}
