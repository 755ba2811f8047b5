//! Behavior-tree mission execution for heterogeneous robot teams.
//!
//! Missions are specified as behavior trees whose action nodes are
//! *capabilities*: abstract skills with typed inputs and outputs that are
//! bound at runtime to robot-specific implementations through a
//! decentralized single-item auction. The crate also bundles a
//! deterministic multi-robot simulator (simulated bus, 2D world, scenario
//! runner) that exercises the whole stack in a find-and-decontaminate
//! mission.
//!
//! Start with the runnable examples (`cargo run --example tick_basics`) or
//! the `capbt` binary (`capbt run <scenario.json> <mission.json> --out out/`).

pub mod auction;
pub mod bt;
pub mod bus;
pub mod capability;
pub mod error;
pub mod ids;
pub mod repository;
pub mod value;
pub mod world;

pub use bt::env::TreeEnvironment;
pub use bt::node::{NodeKind, NodeSpec, ParamDecl, ParamKind, TreeSpec};
pub use bt::state::{NodeAction, NodeState};
pub use bt::tick::TickPolicy;
pub use error::{Error, Result};
pub use ids::{AuctionId, ExecId, TaskId, WorldId};
pub use value::{Pose, Value, ValueType};
