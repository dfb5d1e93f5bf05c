//! Sequential Horn Transaction Logic: a reference depth-first prover, a
//! tabled prover whose call-answer table is keyed on interned state
//! signatures, and incremental maintenance of derived relations.

pub mod bench;
pub mod builtin;
pub mod engine;
pub mod facts;
pub mod fixpoint;
pub mod parse;
pub mod program;
pub mod repl;
pub mod signing;
pub mod store;
pub mod support;
pub mod term;

pub use engine::{Answer, Engine, EngineError, EngineOptions, EngineStats};
pub use parse::{parse_goal, parse_program, parse_term, ParseError};
pub use program::{validate, Diagnostic, Program, SerialGoal, Step};
pub use signing::StateSignature;
pub use store::{Store, StoreOptions};
pub use term::{canonical_variant, unify, Substitution, Term, Var};
