//! Generic behavior-tree core: node lifecycle, control-flow semantics,
//! data-graph propagation, and the scalar cost model.

pub mod cost;
pub mod env;
pub mod node;
pub mod state;
pub mod tick;
