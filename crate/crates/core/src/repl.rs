//! Interactive session: loads programs, runs queries and renders engine state.

use std::fmt::Write as _;
use std::path::Path;

use crate::bench::{run_bench, to_csv, Mode};
use crate::engine::{Engine, EngineError, EngineOptions};
use crate::parse::{parse_goal, parse_program};
use crate::program::Program;
use crate::signing::StateSignature;
use crate::store::StoreOptions;

pub const USAGE: &str = "commands:
  :load FILE                  load a program
  ?- GOAL.                    run a query at state 0
  :mode tabling on|off        switch between the tabled and depth-first provers
  :mode incremental on|off    switch incremental maintenance (resets the session)
  :table                      dump the call-answer table
  :state [SIG]                list states, or show one state's log and facts
  :support                    dump the support graph
  :stats                      engine counters
  :reset                      drop tables, states and counters
  :bench NAME N               run a benchmark in all modes
  :trace on|off               print inference steps
  :quit                       leave";

#[derive(Clone, Copy, Debug)]
pub struct SessionConfig {
    pub tabling: bool,
    pub incremental: bool,
    pub max_steps: u64,
    pub trace: bool,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { tabling: true, incremental: true, max_steps: 1_000_000, trace: false, seed: 0 }
    }
}

impl SessionConfig {
    fn engine_options(&self) -> EngineOptions {
        EngineOptions {
            tabling: self.tabling,
            max_steps: self.max_steps.max(1),
            trace: self.trace,
            store: StoreOptions { incremental: self.incremental, ..StoreOptions::default() },
            ..EngineOptions::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    Ok,
    UserError,
    ResourceError,
    Quit,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok | Status::Quit => 0,
            Status::UserError => 1,
            Status::ResourceError => 2,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Reply {
    pub text: String,
    pub status: Status,
}

impl Reply {
    fn ok(text: impl Into<String>) -> Reply {
        Reply { text: text.into(), status: Status::Ok }
    }

    fn user(text: impl Into<String>) -> Reply {
        Reply { text: text.into(), status: Status::UserError }
    }
}

pub struct Session {
    pub config: SessionConfig,
    engine: Option<Engine>,
}

impl Default for Session {
    fn default() -> Self {
        Session::new(SessionConfig::default())
    }
}

impl Session {
    pub fn new(config: SessionConfig) -> Session {
        Session { config, engine: None }
    }

    pub fn engine(&self) -> Option<&Engine> {
        self.engine.as_ref()
    }

    pub fn load_file(&mut self, path: &Path) -> Reply {
        match std::fs::read_to_string(path) {
            Ok(src) => self.load_source(&src, &path.display().to_string()),
            Err(e) => Reply::user(format!("cannot read {}: {e}", path.display())),
        }
    }

    pub fn load_source(&mut self, src: &str, name: &str) -> Reply {
        let program = match parse_program(src) {
            Ok(p) => p,
            Err(e) => return Reply::user(format!("{name}: {e}")),
        };
        let summary = format!(
            "loaded {name}: {} fact(s), {} data rule(s), {} transaction rule(s), {} query(ies)",
            program.base_facts.len(),
            program.data_rules.len(),
            program.tr_rules.len(),
            program.queries.len()
        );
        match self.install(program) {
            Ok(()) => Reply::ok(summary),
            Err(e) => Reply::user(format!("{name}: {e}")),
        }
    }

    fn install(&mut self, program: Program) -> Result<(), EngineError> {
        self.engine = Some(Engine::new(program, self.config.engine_options())?);
        Ok(())
    }

    fn rebuild(&mut self) -> Result<(), EngineError> {
        if let Some(e) = self.engine.take() {
            self.install(e.program().clone())?;
        }
        Ok(())
    }

    /// Runs the `?-` queries embedded in the loaded program.
    pub fn run_program_queries(&mut self) -> Reply {
        let Some(engine) = &self.engine else { return Reply::user("no program loaded") };
        let queries: Vec<String> = engine.program().queries.iter().map(|(g, _)| g.to_string()).collect();
        let mut text = String::new();
        let mut status = Status::Ok;
        for q in queries {
            let r = self.query(&q);
            writeln!(text, "?- {q}.\n{}", r.text).unwrap();
            if r.status != Status::Ok {
                status = r.status;
                break;
            }
        }
        Reply { text: text.trim_end().to_string(), status }
    }

    /// Executes one REPL line.
    pub fn eval(&mut self, line: &str) -> Reply {
        let line = line.trim();
        if line.is_empty() {
            return Reply::ok("");
        }
        if !line.starts_with(':') {
            return self.query(line);
        }
        let mut words = line.split_whitespace();
        let cmd = words.next().unwrap_or_default();
        let args: Vec<&str> = words.collect();
        match (cmd, args.as_slice()) {
            (":load", [path]) => self.load_file(Path::new(path)),
            (":mode", [which, setting]) => {
                let Some(on) = on_off(setting) else { return Reply::user(USAGE) };
                match *which {
                    "tabling" => {
                        self.config.tabling = on;
                        if let Some(e) = &mut self.engine {
                            e.options_mut().tabling = on;
                        }
                        Reply::ok(format!("tabling {setting}"))
                    }
                    "incremental" => {
                        self.config.incremental = on;
                        match self.rebuild() {
                            Ok(()) => Reply::ok(format!("incremental maintenance {setting}")),
                            Err(e) => Reply::user(e.to_string()),
                        }
                    }
                    _ => Reply::user(USAGE),
                }
            }
            (":trace", [setting]) => {
                let Some(on) = on_off(setting) else { return Reply::user(USAGE) };
                self.config.trace = on;
                if let Some(e) = &mut self.engine {
                    e.options_mut().trace = on;
                }
                Reply::ok(format!("trace {setting}"))
            }
            (":table", []) => self.with_engine(|e| Reply::ok(e.table_dump().trim_end())),
            (":stats", []) => self.with_engine(|e| Reply::ok(e.stats().to_string())),
            (":support", []) => self.with_engine(|e| match e.store().support_graph() {
                Some(g) if g.present().is_empty() => Reply::ok("(no facts in the current state)"),
                Some(g) => Reply::ok(g.render().trim_end()),
                None => Reply::ok("incremental maintenance is off"),
            }),
            (":state", []) => self.with_engine(|e| {
                let store = e.store();
                let lines: Vec<String> = (0..store.state_count() as u32)
                    .filter_map(|s| store.render_state(StateSignature(s)).ok())
                    .collect();
                Reply::ok(lines.join("\n"))
            }),
            (":state", [sig]) => {
                let Ok(sig) = sig.parse::<u32>() else { return Reply::user(USAGE) };
                self.with_engine(|e| {
                    let store = e.store();
                    let sig = StateSignature(sig);
                    match (store.render_state(sig), store.facts_of(sig)) {
                        (Ok(log), Ok(facts)) => {
                            let facts: Vec<String> = facts.iter().map(|f| f.to_string()).collect();
                            Reply::ok(format!("{log}\nfacts: {{{}}}", facts.join(", ")))
                        }
                        (Err(err), _) | (_, Err(err)) => Reply::user(err.to_string()),
                    }
                })
            }
            (":reset", []) => match self.rebuild() {
                Ok(()) => Reply::ok("reset"),
                Err(e) => Reply::user(e.to_string()),
            },
            (":bench", [name, n]) => {
                let Ok(n) = n.parse::<usize>() else { return Reply::user(USAGE) };
                let modes = [Mode { tabling: true, incremental: true }, Mode { tabling: false, incremental: true }];
                match run_bench(name, n, &modes, self.config.seed, self.config.max_steps) {
                    Ok(rows) => Reply::ok(to_csv(&rows).trim_end()),
                    Err(e) => Reply::user(e.to_string()),
                }
            }
            (":quit", []) => Reply { text: String::new(), status: Status::Quit },
            _ => Reply::user(USAGE),
        }
    }

    fn with_engine(&mut self, f: impl FnOnce(&mut Engine) -> Reply) -> Reply {
        match &mut self.engine {
            Some(e) => f(e),
            None => Reply::user("no program loaded (use :load FILE)"),
        }
    }

    /// Runs a goal at state 0 and renders its answers.
    pub fn query(&mut self, text: &str) -> Reply {
        let goal = match parse_goal(text) {
            Ok(g) => g,
            Err(e) => return Reply::user(e.to_string()),
        };
        self.with_engine(|engine| {
            let result = engine.run(&goal, StateSignature::INITIAL);
            let mut out = String::new();
            for line in engine.take_trace() {
                writeln!(out, "{line}").unwrap();
            }
            for w in engine.store_mut().take_warnings() {
                writeln!(out, "{w}").unwrap();
            }
            match result {
                Ok(answers) => {
                    for a in &answers {
                        writeln!(out, "{a}").unwrap();
                    }
                    write!(out, "{} answer(s)", answers.len()).unwrap();
                    Reply::ok(out)
                }
                Err(e) => {
                    write!(out, "error: {e}").unwrap();
                    let status = if e.is_resource() { Status::ResourceError } else { Status::UserError };
                    Reply { text: out, status }
                }
            }
        })
    }
}

fn on_off(s: &str) -> Option<bool> {
    match s {
        "on" => Some(true),
        "off" => Some(false),
        _ => None,
    }
}
