//! Benchmark instances and the harness that runs them in several modes.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{Engine, EngineError, EngineOptions};
use crate::parse::{parse_goal, parse_program};
use crate::program::{Program, SerialGoal};
use crate::signing::StateSignature;
use crate::store::StoreOptions;

pub const BENCHMARKS: [&str; 5] = ["tc-chain", "tc-cycle", "consume-reach", "hamiltonian", "bank"];
pub const CSV_HEADER: &str = "benchmark,mode,n,time_ms,table_hits,table_misses,states,answers";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("unknown benchmark `{0}` (expected one of: {names})", names = BENCHMARKS.join(", "))]
    UnknownBenchmark(String),
    #[error("unknown mode `{0}` (expected tabled, untabled, tabled-scratch or untabled-scratch)")]
    UnknownMode(String),
    #[error("instance size must be at least 1")]
    EmptyInstance,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Prover and data-oracle configuration of one benchmark run.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Mode {
    pub tabling: bool,
    pub incremental: bool,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode, BenchError> {
        let (prover, incremental) = match s.strip_suffix("-scratch") {
            Some(p) => (p, false),
            None => (s, true),
        };
        let tabling = match prover {
            "tabled" => true,
            "untabled" => false,
            _ => return Err(BenchError::UnknownMode(s.to_string())),
        };
        Ok(Mode { tabling, incremental })
    }

    pub fn label(self) -> String {
        let prover = if self.tabling { "tabled" } else { "untabled" };
        if self.incremental { prover.to_string() } else { format!("{prover}-scratch") }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct BenchRow {
    pub benchmark: String,
    /// Mode label, with `-DNF` appended when the step budget ran out.
    pub mode: String,
    pub n: usize,
    pub time_ms: f64,
    pub table_hits: u64,
    pub table_misses: u64,
    pub states: u64,
    pub answers: usize,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.3},{},{},{},{}",
            self.benchmark, self.mode, self.n, self.time_ms, self.table_hits, self.table_misses, self.states, self.answers
        )
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

/// Program source and goal of a benchmark instance.
pub fn instance_source(name: &str, n: usize, seed: u64) -> Result<(String, String), BenchError> {
    if n == 0 {
        return Err(BenchError::EmptyInstance);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut src = String::new();
    let goal = match name {
        "tc-chain" => {
            for i in 0..n {
                writeln!(src, "edge({i},{}).", i + 1).unwrap();
            }
            src.push_str("reach(X,Y) <- edge(X,Y).\nreach(X,Y) <- edge(X,Z) * reach(Z,Y).\n");
            "reach(0,Y)".to_string()
        }
        "tc-cycle" => {
            for i in 0..n {
                writeln!(src, "edge({i},{}).", (i + 1) % n).unwrap();
            }
            src.push_str("reach(X,Y) <- edge(X,Y).\nreach(X,Y) <- reach(X,Z) * edge(Z,Y).\n");
            "reach(X,Y)".to_string()
        }
        "consume-reach" => {
            for i in 0..n {
                writeln!(src, "edge({i},{}).", i + 1).unwrap();
            }
            src.push_str(
                "reach(X,Y) <- edge(X,Y) * del(edge(X,Y)).\n\
                 reach(X,Y) <- edge(X,Z) * del(edge(X,Z)) * reach(Z,Y).\n",
            );
            "reach(0,Y)".to_string()
        }
        "hamiltonian" => {
            let mut order: Vec<usize> = (1..=n).collect();
            order.shuffle(&mut rng);
            let mut edges: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
            for _ in 0..n {
                let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
                if a != b && !edges.contains(&(a, b)) {
                    edges.push((a, b));
                }
            }
            edges.sort_unstable();
            for i in 1..=n {
                writeln!(src, "n({i}).").unwrap();
            }
            for (a, b) in edges {
                writeln!(src, "e({a},{b}).").unwrap();
            }
            src.push_str(HAMILTONIAN_RULES);
            "path".to_string()
        }
        "bank" => {
            for i in 0..n.max(2) {
                writeln!(src, "balance(a{i},{}).", rng.gen_range(50..150)).unwrap();
            }
            src.push_str(BANK_RULES);
            let steps: Vec<String> = (0..n).map(|i| format!("transfer(10,a{},a{})", i % n.max(2), (i + 1) % n.max(2))).collect();
            steps.join(" * ")
        }
        _ => return Err(BenchError::UnknownBenchmark(name.to_string())),
    };
    Ok((src, goal))
}

/// Node-consuming search for Hamiltonian paths.
pub const HAMILTONIAN_RULES: &str = "path <- n(N) * del(n(N)) * extend(N) * ins(n(N)).
extend(N1) <- choose(N1,N2) * del(n(N2)) * extend(N2) * ins(n(N2)).
extend(N) <- empty(n).
choose(N1,N2) :- e(N1,N2), n(N2).
";

/// Funds transfer with the withdraw and deposit steps run in sequence.
pub const BANK_RULES: &str = "transfer(Amt,From,To) <- withdraw(Amt,From) * deposit(Amt,To).
withdraw(Amt,Acct) <- balance(Acct,Bal) * Bal >= Amt * changeBallance(Acct,Bal,Bal-Amt).
deposit(Amt,Acct) <- balance(Acct,Bal) * changeBallance(Acct,Bal,Bal+Amt).
changeBallance(Acct,B1,B2) <- del(balance(Acct,B1)) * ins(balance(Acct,B2)).
";

pub fn instance(name: &str, n: usize, seed: u64) -> Result<(Program, SerialGoal), BenchError> {
    let (src, goal) = instance_source(name, n, seed)?;
    let program = parse_program(&src).expect("generated programs parse");
    let goal = parse_goal(&goal).expect("generated goals parse");
    Ok((program, goal))
}

fn run_mode(name: &str, n: usize, program: Program, goal: &SerialGoal, mode: Mode, max_steps: u64) -> Result<BenchRow, BenchError> {
    let options = EngineOptions {
        tabling: mode.tabling,
        max_steps,
        store: StoreOptions { incremental: mode.incremental, ..StoreOptions::default() },
        ..EngineOptions::default()
    };
    let mut engine = Engine::new(program, options)?;
    let start = Instant::now();
    let result = engine.run(goal, StateSignature::INITIAL);
    let time_ms = start.elapsed().as_secs_f64() * 1000.0;
    let (label, answers) = match result {
        Ok(a) => (mode.label(), a.len()),
        Err(EngineError::StepBudget { answers_found, .. }) => (format!("{}-DNF", mode.label()), answers_found),
        Err(e) => return Err(e.into()),
    };
    let stats = engine.stats();
    Ok(BenchRow {
        benchmark: name.to_string(),
        mode: label,
        n,
        time_ms,
        table_hits: stats.table_hits,
        table_misses: stats.table_misses,
        states: stats.states_interned,
        answers,
    })
}

/// Runs every mode on the same generated instance, each in its own engine
/// and thread. Rows come back in the order of `modes`.
pub fn run_bench(name: &str, n: usize, modes: &[Mode], seed: u64, max_steps: u64) -> Result<Vec<BenchRow>, BenchError> {
    let (program, goal) = instance(name, n, seed)?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = modes
            .iter()
            .map(|&mode| {
                let program = program.clone();
                let goal = &goal;
                scope.spawn(move || run_mode(name, n, program, goal, mode, max_steps))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("benchmark thread panicked")).collect()
    })
}
