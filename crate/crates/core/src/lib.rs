//! Certifying model checker for the modal μ-calculus.
//!
//! Alongside the set of states satisfying a formula, the checker produces a
//! winning strategy for the associated parity game, which an independent
//! checker can validate without trusting the fixpoint computation.

pub mod checker;
pub mod cli;
pub mod error;
pub mod exec;
pub mod formula;
pub mod game;
pub mod gen;
pub mod lts;
pub mod oracle;
pub mod semantics;
pub mod states;
pub mod strategy;

pub use error::Error;
pub use exec::Exec;
pub use formula::{closure, parse_formula, parse_formula_with_vars, Closure, Fix, Formula, Kind};
pub use game::{build_game, export_pgsolver, parse_pgsolver, GamePosition, ParityGame, Player};
pub use lts::{parse_lts, Lts, LtsBuilder};
pub use semantics::{negation, sem, Env};
pub use states::StateSet;
pub use strategy::{certify, parse_certificate, serialize_certificate, Advice, PartialStrategy};
pub use checker::{verify_certificate, verify_partition, Rejection, Verdict};
