//! Capability nodes: dynamic binding, IO bridges, precondition validation,
//! and the remote capability slot.

pub mod binding;
pub mod bridge;
pub mod implementation;
pub mod interface;
pub mod slot;
