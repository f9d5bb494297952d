//! Axiomatic semantics for weak memory with transactions.
//!
//! The crate is organised around finite execution graphs and relational
//! algebra over their event sets:
//!
//! - [`relalg`]: dense bitset relations, the expression language used to
//!   write consistency axioms, and its evaluator.
//! - [`execution`]: the execution-graph data model, well-formedness
//!   validation, derived relations (`fr`, `com`, fence relations, ...) and
//!   the interchange text format.
//! - [`models`]: consistency predicates for SC/TSC, x86, Power, ARMv8 and
//!   C++, each with and without transactional extensions.
//! - [`litmus`]: a litmus-test DSL, candidate-execution enumeration and
//!   test evaluation, plus execution-to-test conversion.
//! - [`synth`]: bounded exhaustive enumeration of executions and synthesis
//!   of minimally-forbidden / maximally-allowed conformance suites.
//! - [`meta`]: counterexample searches for monotonicity of transaction
//!   introduction, compilation of C++ transactions to hardware, and lock
//!   elision.
//! - [`dot`]: Graphviz rendering of executions and witness pairs.

pub mod dot;
pub mod execution;
pub mod litmus;
pub mod meta;
pub mod models;
pub mod relalg;
pub mod synth;

pub use execution::{Arch, Event, EventKind, Execution, FenceFlavor, LockKind, Tags};
pub use models::{Model, Verdict};
pub use relalg::{EventId, EventSet, Rel};
