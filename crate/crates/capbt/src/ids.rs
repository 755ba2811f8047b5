//! Newtype identifiers shared across the crate.

use serde::{Deserialize, Serialize};
use std::fmt;

macro_rules! string_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                $name(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

string_id!(
    /// Identifies one robot agent's world state. Each robot owns exactly one.
    WorldId
);
string_id!(
    /// A task on the world map (exploration goal or object).
    TaskId
);
string_id!(
    /// One auction round. Unique per auctioneer via an origin-scoped counter.
    AuctionId
);
string_id!(
    /// One capability execution, local or remote.
    ExecId
);

impl AuctionId {
    pub fn scoped(origin: &WorldId, seq: u64) -> Self {
        AuctionId(format!("{}#a{}", origin.0, seq))
    }
}

impl ExecId {
    pub fn scoped(origin: &WorldId, seq: u64) -> Self {
        ExecId(format!("{}#e{}", origin.0, seq))
    }
}

/// Bus endpoint of the simulation manager (world services). Not a robot and
/// never part of team membership.
pub const WORLD_ENDPOINT: &str = "@world";

/// Bus endpoint used for membership change notifications.
pub const BUS_ENDPOINT: &str = "@bus";

impl WorldId {
    pub fn world_endpoint() -> Self {
        WorldId(WORLD_ENDPOINT.to_string())
    }

    pub fn bus_endpoint() -> Self {
        WorldId(BUS_ENDPOINT.to_string())
    }

    pub fn is_robot(&self) -> bool {
        !self.0.starts_with('@')
    }
}

/// Which top-level environment of an agent a node lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvSlot {
    /// The mission tree (hosts only).
    Mission,
    /// The robot's own base tree (remote capability slot).
    Base,
}

/// Address of a node within an agent: top-level environment, the chain of
/// capability/slot nodes whose nested environments contain it, then the
/// node id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeAddr {
    pub env: EnvSlot,
    pub hops: Vec<String>,
    pub node: String,
}

impl NodeAddr {
    pub fn mission(node: &str) -> Self {
        NodeAddr { env: EnvSlot::Mission, hops: Vec::new(), node: node.to_string() }
    }

    pub fn base(node: &str) -> Self {
        NodeAddr { env: EnvSlot::Base, hops: Vec::new(), node: node.to_string() }
    }

    pub fn nested(&self, node: &str) -> Self {
        let mut hops = self.hops.clone();
        hops.push(self.node.clone());
        NodeAddr { env: self.env, hops, node: node.to_string() }
    }
}

impl fmt::Display for NodeAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let env = match self.env {
            EnvSlot::Mission => "mission",
            EnvSlot::Base => "base",
        };
        write!(f, "{env}")?;
        for hop in &self.hops {
            write!(f, "/{hop}")?;
        }
        write!(f, "/{}", self.node)
    }
}
