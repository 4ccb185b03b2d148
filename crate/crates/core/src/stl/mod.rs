//! Bounded STL/LTL fragment with linear predicates: syntax tree, parser,
//! quantitative (robustness) and boolean semantics over discrete-time traces.

mod formula;
mod ltl;
mod parse;
mod trace;

pub use formula::{Formula, Predicate};
pub use ltl::{eval_ltl, PropositionEncoding};
pub use parse::parse;
pub use trace::Trace;
