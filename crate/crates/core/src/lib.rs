//! A sandboxed interpreter for logic programs embedded in web pages.
//!
//! Pages become programs ([`translate`]), programs are combined with
//! composition operators ([`expr`]) and queried through context switches by
//! the [`engine`]. Every downloaded program is governed by a policy program
//! chosen by the [`security`] registry, optionally from a page signature
//! ([`signature`]), and evaluation is bounded by [`guard`]s.

pub mod audit;
pub mod builtins;
pub mod cache;
pub mod cli;
pub mod engine;
pub mod expr;
pub mod fetch;
pub mod guard;
pub mod ops;
pub mod print;
pub mod program;
pub mod reader;
pub mod security;
pub mod signature;
pub mod store;
pub mod subst;
pub mod term;
pub mod translate;

pub use engine::{Answer, EngineConfig, PolicySet, QueryError, QueryOutcome, Session, SessionBuilder, Solutions};
pub use expr::ProgramExpression;
pub use fetch::{FetchOutcome, Fetcher, FixtureFetcher, MemoryFetcher, StandardFetcher};
pub use guard::{GuardConfig, TerminationReason};
pub use program::{Clause, Goal, LWProgram, Method, ProgramId};
pub use security::PolicyRegistry;
pub use signature::{KeyStore, SignerId};
pub use term::Term;
