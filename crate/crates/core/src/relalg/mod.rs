//! Finite relational algebra over an execution's event set.
//!
//! Relations are dense bitset adjacency matrices over at most
//! [`MAX_EVENTS`] events. Executions are tiny (a dozen events at the very
//! most), so everything here is `Copy` and allocation-free.

mod expr;
mod parse;
mod rel;

pub use expr::{EvalError, Expr, Value};
pub use parse::{parse_expr, ExprParseError};
pub use rel::{acyclic, irreflexive, is_empty, stronglift, weaklift, EventId, EventSet, Rel};

/// Hard upper bound on events in one execution.
pub const MAX_EVENTS: usize = 16;
