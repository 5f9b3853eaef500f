//! Compositional string-to-grid tasks and the tooling to score rule programs
//! written for them: task generation, a restricted program language with a
//! sandboxed interpreter, a static mapping-table analyser and the metrics
//! built on top.

pub mod analyzer;
pub mod fuzz;
pub mod interp;
pub mod lang;
pub mod metrics;
pub mod model;
pub mod par;
pub mod reference;
pub mod score;
pub mod taskgen;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
