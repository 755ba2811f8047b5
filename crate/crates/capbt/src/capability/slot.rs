//! The remote capability slot: a node that hosts one remotely requested
//! implementation at a time, ticking it at the host tree's rate.
//!
//! Assignment requires an external execution request routed through mission
//! control — a plain tick never assigns a slot. When a hosted
//! implementation finishes, every trace of it is removed and the slot
//! reverts to unassigned, restoring the environment to its pre-request
//! state.

use crate::bt::env::{SlotExec, SlotOutgoing, TreeEnvironment};
use crate::bt::state::NodeState;
use crate::bt::tick::TickPolicy;
use crate::capability::bridge;
use crate::error::{Error, Result};
use crate::value::Value;

pub(crate) fn tick_slot(
    env: &mut TreeEnvironment,
    id: &str,
    policy: &TickPolicy,
) -> Result<NodeState> {
    let state = env.state(id)?;
    match state {
        NodeState::Idle => Ok(NodeState::Unassigned),
        NodeState::Unassigned => Ok(NodeState::Unassigned),
        NodeState::Assigned => {
            let has_child = env.node(id)?.slot.as_ref().expect("slot runtime").child_env.is_some();
            if !has_child {
                return Ok(NodeState::Unassigned);
            }
            let mut child = take_child(env, id)?;
            child.setup_root(policy)?;
            env.node_mut(id)?.slot.as_mut().expect("slot runtime").child_env = Some(Box::new(child));
            Ok(NodeState::Running)
        }
        NodeState::Running => {
            let has_child = env.node(id)?.slot.as_ref().expect("slot runtime").child_env.is_some();
            if !has_child {
                return Ok(NodeState::Unassigned);
            }
            let staged_inputs = env
                .node_mut(id)?
                .slot
                .as_mut()
                .expect("slot runtime")
                .staged_inputs
                .take();
            let mut child = take_child(env, id)?;
            if let Some(inputs) = staged_inputs {
                bridge::sync_in(&mut child, &inputs)?;
            }
            child.tick_root(policy)?;
            let outputs = bridge::sync_out(&child)?;
            let root_state = child.root_state().as_flow_result();
            let done = root_state.is_terminal();
            let exec = env
                .node(id)?
                .slot
                .as_ref()
                .expect("slot runtime")
                .exec
                .clone()
                .ok_or_else(|| Error::Structure(format!("slot `{id}` running without exec")))?;
            let slot = env.node_mut(id)?.slot.as_mut().expect("slot runtime");
            slot.outgoing = Some(SlotOutgoing {
                exec_id: exec.exec_id.clone(),
                requester: exec.requester.clone(),
                root_state,
                outputs,
                done,
            });
            if done {
                // Remove all traces, restoring the pre-request state.
                slot.exec = None;
                slot.staged_inputs = None;
                Ok(NodeState::Unassigned)
            } else {
                slot.child_env = Some(Box::new(child));
                Ok(NodeState::Running)
            }
        }
        // Unreachable holds self-heal back to ready.
        NodeState::Succeeded | NodeState::Failed | NodeState::Paused => Ok(NodeState::Unassigned),
        other => Ok(other),
    }
}

fn take_child(env: &mut TreeEnvironment, id: &str) -> Result<TreeEnvironment> {
    env.node_mut(id)?
        .slot
        .as_mut()
        .expect("slot runtime")
        .child_env
        .take()
        .map(|b| *b)
        .ok_or_else(|| Error::Structure(format!("slot `{id}` has no child environment")))
}

/// External signal from mission control: installs an accepted execution
/// request. Only legal while the slot is unassigned; a busy slot rejects.
pub fn adopt_request(
    env: &mut TreeEnvironment,
    id: &str,
    exec: SlotExec,
    child_env: TreeEnvironment,
    initial_inputs: Vec<(String, Value)>,
) -> Result<()> {
    let state = env.state(id)?;
    if state != NodeState::Unassigned {
        return Err(Error::Capability(
            id.to_string(),
            format!("slot is {state}, not unassigned"),
        ));
    }
    let mut child_env = child_env;
    bridge::sync_in(&mut child_env, &initial_inputs)?;
    let slot = env.node_mut(id)?.slot.as_mut().expect("slot runtime");
    slot.exec = Some(exec);
    slot.child_env = Some(Box::new(child_env));
    slot.staged_inputs = None;
    env.node_mut(id)?.state = NodeState::Assigned;
    Ok(())
}

/// Unticking a slot reverts it to unassigned and discards its hosted
/// environment; the requester learns through the staged outgoing report.
pub(crate) fn untick_slot(env: &mut TreeEnvironment, id: &str) -> Result<NodeState> {
    let state = env.state(id)?;
    if state == NodeState::Idle {
        return Ok(NodeState::Idle);
    }
    discard_child(env, id, true)?;
    env.node_mut(id)?.state = NodeState::Unassigned;
    Ok(NodeState::Unassigned)
}

pub(crate) fn reset_slot(env: &mut TreeEnvironment, id: &str) -> Result<NodeState> {
    discard_child(env, id, true)?;
    env.node_mut(id)?.state = NodeState::Idle;
    Ok(NodeState::Idle)
}

pub(crate) fn shutdown_slot(env: &mut TreeEnvironment, id: &str) -> Result<NodeState> {
    discard_child(env, id, true)?;
    env.node_mut(id)?.state = NodeState::Shutdown;
    Ok(NodeState::Shutdown)
}

fn discard_child(env: &mut TreeEnvironment, id: &str, report: bool) -> Result<()> {
    let node = env.node_mut(id)?;
    let mut orphans = Vec::new();
    {
        let slot = node.slot.as_mut().expect("slot runtime");
        if let Some(child) = slot.child_env.take() {
            orphans = child.pending_requests();
        }
        let exec = slot.exec.take();
        if report {
            if let Some(exec) = exec {
                slot.outgoing = Some(SlotOutgoing {
                    exec_id: exec.exec_id.clone(),
                    requester: exec.requester.clone(),
                    root_state: NodeState::Failed,
                    outputs: Vec::new(),
                    done: true,
                });
            }
        }
        slot.staged_inputs = None;
    }
    node.orphaned_requests.extend(orphans);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::env::ImplMeta;
    use crate::bt::node::{NodeKind, NodeSpec, TreeSpec};
    use crate::bt::state::NodeAction;
    use crate::capability::interface::{catalog_from_list, CapabilityInterface, InterfaceCatalog};
    use crate::ids::{ExecId, WorldId};
    use std::collections::BTreeMap;

    fn catalog() -> InterfaceCatalog {
        catalog_from_list(vec![CapabilityInterface::new("nop")]).unwrap()
    }

    fn slot_env() -> TreeEnvironment {
        let spec = TreeSpec::new(
            "slot",
            vec![NodeSpec::new("slot", NodeKind::RemoteCapabilitySlot)],
        );
        let mut env = TreeEnvironment::build(&spec, WorldId::new("r2"), &catalog(), None).unwrap();
        env.setup_root(&TickPolicy::default()).unwrap();
        env.tick_root(&TickPolicy::default()).unwrap();
        env
    }

    fn impl_env(ticks: i64) -> TreeEnvironment {
        let spec = TreeSpec::new(
            "root",
            vec![
                NodeSpec::new("root", NodeKind::Sequence).with_children(&["in", "work", "out"]),
                NodeSpec::new("in", NodeKind::IoInputBridge),
                NodeSpec::new("work", NodeKind::ActionLeaf)
                    .with_option("behavior", "run_for")
                    .with_param(
                        crate::bt::node::ParamDecl::new(
                            "ticks",
                            crate::bt::node::ParamKind::Option,
                            crate::value::ValueType::Int,
                        )
                        .with_value(crate::value::Value::Int(ticks)),
                    ),
                NodeSpec::new("out", NodeKind::IoOutputBridge),
            ],
        );
        TreeEnvironment::build(
            &spec,
            WorldId::new("r2"),
            &catalog(),
            Some(ImplMeta {
                interface: "nop".into(),
                implementation: "i1".into(),
                expected_duration: 1.0,
                extra_params: BTreeMap::new(),
            }),
        )
        .unwrap()
    }

    fn exec() -> SlotExec {
        SlotExec {
            exec_id: ExecId::new("r1#e1"),
            requester: WorldId::new("r1"),
            interface: "nop".into(),
        }
    }

    #[test]
    fn plain_tick_never_assigns() {
        let mut env = slot_env();
        for _ in 0..5 {
            assert_eq!(env.tick_root(&TickPolicy::default()).unwrap(), NodeState::Unassigned);
        }
    }

    #[test]
    fn request_assigns_then_runs_then_restores() {
        let mut env = slot_env();
        let before = env.structural_snapshot();
        adopt_request(&mut env, "slot", exec(), impl_env(1), vec![]).unwrap();
        assert_eq!(env.state("slot").unwrap(), NodeState::Assigned);
        // Setup tick.
        assert_eq!(env.tick_root(&TickPolicy::default()).unwrap(), NodeState::Running);
        // One running tick, then completion.
        assert_eq!(env.tick_root(&TickPolicy::default()).unwrap(), NodeState::Running);
        let state = env.tick_root(&TickPolicy::default()).unwrap();
        assert_eq!(state, NodeState::Unassigned);
        let slot = env.node("slot").unwrap().slot.as_ref().unwrap();
        assert!(slot.child_env.is_none());
        assert!(slot.exec.is_none());
        let outgoing = slot.outgoing.as_ref().unwrap();
        assert!(outgoing.done);
        assert_eq!(outgoing.root_state, NodeState::Succeeded);
        let mut after = env.structural_snapshot();
        // The outgoing report is transient agent mail, not tree state.
        after.0 = before.0.clone();
        assert_eq!(before.1, after.1);
    }

    #[test]
    fn second_request_rejected_while_occupied() {
        let mut env = slot_env();
        adopt_request(&mut env, "slot", exec(), impl_env(10), vec![]).unwrap();
        let err = adopt_request(&mut env, "slot", exec(), impl_env(10), vec![]);
        assert!(err.is_err());
    }

    #[test]
    fn untick_discards_child_and_reverts_to_unassigned() {
        let mut env = slot_env();
        adopt_request(&mut env, "slot", exec(), impl_env(10), vec![]).unwrap();
        env.tick_root(&TickPolicy::default()).unwrap();
        assert_eq!(env.state("slot").unwrap(), NodeState::Running);
        env.apply_action("slot", NodeAction::Untick, &TickPolicy::default()).unwrap();
        assert_eq!(env.state("slot").unwrap(), NodeState::Unassigned);
        assert!(env.node("slot").unwrap().slot.as_ref().unwrap().child_env.is_none());
    }
}
