//! Node states, lifecycle actions, and the pinned transition tables.
//!
//! Every `(state, action)` pair has a defined successor set for each node
//! family, so the lifecycle is a total function. Illegal combinations do not
//! panic; the node moves to [`NodeState::Error`] instead. The tables ship as
//! data so tests can pin them entry by entry.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Execution state of a tree node.
///
/// `Unassigned`, `Assigned`, and `Paused` exist for capability and remote
/// slot nodes; plain leaf nodes never reach them, and control-flow nodes
/// treat them exactly like `Running` when reported by a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeState {
    Uninitialized,
    Idle,
    Running,
    Succeeded,
    Failed,
    Shutdown,
    Error,
    Unassigned,
    Assigned,
    Paused,
}

impl NodeState {
    pub const ALL: [NodeState; 10] = [
        NodeState::Uninitialized,
        NodeState::Idle,
        NodeState::Running,
        NodeState::Succeeded,
        NodeState::Failed,
        NodeState::Shutdown,
        NodeState::Error,
        NodeState::Unassigned,
        NodeState::Assigned,
        NodeState::Paused,
    ];

    /// Terminal outcome of one tick, from a parent's point of view.
    pub fn is_terminal(&self) -> bool {
        matches!(self, NodeState::Succeeded | NodeState::Failed)
    }

    /// How a control-flow parent reads this child state: the binding states
    /// and paused count as running.
    pub fn as_flow_result(&self) -> NodeState {
        match self {
            NodeState::Unassigned | NodeState::Assigned | NodeState::Paused => NodeState::Running,
            s => *s,
        }
    }
}

impl fmt::Display for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeState::Uninitialized => "uninitialized",
            NodeState::Idle => "idle",
            NodeState::Running => "running",
            NodeState::Succeeded => "succeeded",
            NodeState::Failed => "failed",
            NodeState::Shutdown => "shutdown",
            NodeState::Error => "error",
            NodeState::Unassigned => "unassigned",
            NodeState::Assigned => "assigned",
            NodeState::Paused => "paused",
        };
        f.write_str(s)
    }
}

/// Lifecycle action applied to a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeAction {
    Setup,
    Tick,
    Untick,
    Reset,
    Shutdown,
}

impl NodeAction {
    pub const ALL: [NodeAction; 5] = [
        NodeAction::Setup,
        NodeAction::Tick,
        NodeAction::Untick,
        NodeAction::Reset,
        NodeAction::Shutdown,
    ];
}

impl fmt::Display for NodeAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeAction::Setup => "setup",
            NodeAction::Tick => "tick",
            NodeAction::Untick => "untick",
            NodeAction::Reset => "reset",
            NodeAction::Shutdown => "shutdown",
        };
        f.write_str(s)
    }
}

/// Node family a transition table applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeFamily {
    /// Control-flow nodes, decorators, action leaves, and IO bridges.
    Plain,
    /// Capability nodes with dynamic binding.
    Capability,
    /// Remote capability slots.
    RemoteSlot,
}

use NodeAction as A;
use NodeState as S;

/// Successor states permitted for `(family, state, action)`.
///
/// Deterministic cells hold exactly one state. Tick cells that depend on
/// leaf logic, child aggregation, auction outcomes, or a hosted
/// implementation hold the full set of states those mechanisms may produce.
pub fn allowed_transitions(family: NodeFamily, state: S, action: A) -> &'static [S] {
    match family {
        NodeFamily::Plain => plain_transition(state, action),
        NodeFamily::Capability => capability_transition(state, action),
        NodeFamily::RemoteSlot => slot_transition(state, action),
    }
}

fn plain_transition(state: S, action: A) -> &'static [S] {
    match action {
        A::Setup => match state {
            S::Uninitialized | S::Idle | S::Shutdown => &[S::Idle],
            _ => &[S::Error],
        },
        A::Tick => match state {
            S::Idle | S::Running | S::Succeeded | S::Failed => {
                &[S::Running, S::Succeeded, S::Failed]
            }
            _ => &[S::Error],
        },
        A::Untick => match state {
            S::Idle => &[S::Idle],
            S::Running => &[S::Idle],
            S::Succeeded => &[S::Succeeded],
            S::Failed => &[S::Failed],
            _ => &[S::Error],
        },
        A::Reset => match state {
            S::Uninitialized | S::Shutdown => &[S::Error],
            _ => &[S::Idle],
        },
        A::Shutdown => &[S::Shutdown],
    }
}

fn capability_transition(state: S, action: A) -> &'static [S] {
    match action {
        A::Setup => match state {
            S::Uninitialized | S::Idle | S::Shutdown => &[S::Idle],
            _ => &[S::Error],
        },
        A::Tick => match state {
            S::Idle => &[S::Unassigned],
            S::Unassigned => &[S::Unassigned, S::Assigned, S::Failed],
            S::Assigned => &[S::Assigned, S::Running, S::Unassigned, S::Failed],
            S::Running => &[S::Running, S::Succeeded, S::Failed],
            S::Succeeded => &[S::Succeeded],
            S::Failed => &[S::Failed],
            // Resume re-enters the state held when the capability was
            // unticked; unassigned never pauses, so it is not a resume target.
            S::Paused => &[S::Assigned, S::Running, S::Succeeded, S::Failed],
            _ => &[S::Error],
        },
        A::Untick => match state {
            S::Idle => &[S::Idle],
            S::Unassigned => &[S::Unassigned],
            S::Assigned | S::Running | S::Succeeded | S::Failed => &[S::Paused],
            S::Paused => &[S::Paused],
            _ => &[S::Error],
        },
        A::Reset => match state {
            S::Uninitialized | S::Shutdown => &[S::Error],
            _ => &[S::Idle],
        },
        A::Shutdown => &[S::Shutdown],
    }
}

fn slot_transition(state: S, action: A) -> &'static [S] {
    match action {
        A::Setup => match state {
            S::Uninitialized | S::Idle | S::Shutdown => &[S::Idle],
            _ => &[S::Error],
        },
        A::Tick => match state {
            S::Idle => &[S::Unassigned],
            // A plain tick never assigns a slot; that needs the external
            // execution request from the remote capability.
            S::Unassigned => &[S::Unassigned],
            S::Assigned => &[S::Running, S::Unassigned],
            S::Running => &[S::Running, S::Unassigned],
            // Slots revert to ready instead of holding terminal states.
            S::Succeeded | S::Failed | S::Paused => &[S::Unassigned],
            _ => &[S::Error],
        },
        A::Untick => match state {
            S::Idle => &[S::Idle],
            S::Unassigned | S::Assigned | S::Running | S::Succeeded | S::Failed | S::Paused => {
                &[S::Unassigned]
            }
            _ => &[S::Error],
        },
        A::Reset => match state {
            S::Uninitialized | S::Shutdown => &[S::Error],
            _ => &[S::Idle],
        },
        A::Shutdown => &[S::Shutdown],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_pair_is_defined() {
        for family in [NodeFamily::Plain, NodeFamily::Capability, NodeFamily::RemoteSlot] {
            for state in NodeState::ALL {
                for action in NodeAction::ALL {
                    let allowed = allowed_transitions(family, state, action);
                    assert!(
                        !allowed.is_empty(),
                        "{family:?} {state} {action} has no successor"
                    );
                }
            }
        }
    }

    #[test]
    fn shutdown_reaches_shutdown_from_anywhere() {
        for family in [NodeFamily::Plain, NodeFamily::Capability, NodeFamily::RemoteSlot] {
            for state in NodeState::ALL {
                assert_eq!(
                    allowed_transitions(family, state, NodeAction::Shutdown),
                    &[NodeState::Shutdown]
                );
            }
        }
    }

    #[test]
    fn slot_untick_reverts_active_states_to_unassigned() {
        for state in [NodeState::Unassigned, NodeState::Assigned, NodeState::Running] {
            assert_eq!(
                allowed_transitions(NodeFamily::RemoteSlot, state, NodeAction::Untick),
                &[NodeState::Unassigned]
            );
        }
    }

    #[test]
    fn capability_untick_pauses_active_states() {
        for state in [NodeState::Assigned, NodeState::Running] {
            assert_eq!(
                allowed_transitions(NodeFamily::Capability, state, NodeAction::Untick),
                &[NodeState::Paused]
            );
        }
        // An unassigned capability has nothing in flight to pause.
        assert_eq!(
            allowed_transitions(NodeFamily::Capability, NodeState::Unassigned, NodeAction::Untick),
            &[NodeState::Unassigned]
        );
    }

    #[test]
    fn binding_states_read_as_running_by_parents() {
        assert_eq!(NodeState::Unassigned.as_flow_result(), NodeState::Running);
        assert_eq!(NodeState::Assigned.as_flow_result(), NodeState::Running);
        assert_eq!(NodeState::Paused.as_flow_result(), NodeState::Running);
        assert_eq!(NodeState::Failed.as_flow_result(), NodeState::Failed);
    }
}
