//! Dynamic binding: the capability node state machine.
//!
//! A capability node abstracts a skill with no bound behavior until runtime.
//! On its first tick it becomes unassigned and asks the owning agent to run
//! an auction; an award freezes an assignment and the node moves through
//! assigned into running, forwarding ticks to the implementation
//! environment (local) or mirroring the synced root state (remote).
//!
//! The node communicates with its agent through staged fields on
//! [`CapRuntime`]: the agent stages awards, execution updates, and built
//! implementation environments before the tree tick, and collects outgoing
//! input pushes, aborts, and orphaned world requests afterwards.

use crate::bt::env::{ExecUpdate, TreeEnvironment};
use crate::bt::node::ParamKind;
use crate::bt::state::{NodeAction, NodeState};
use crate::bt::tick::TickPolicy;
use crate::capability::bridge;
use crate::error::Result;

pub(crate) fn tick_capability(
    env: &mut TreeEnvironment,
    id: &str,
    policy: &TickPolicy,
) -> Result<NodeState> {
    let state = env.state(id)?;
    {
        let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
        cap.wants_auction = false;
        cap.wants_dispatch = false;
    }
    match state {
        NodeState::Idle => {
            let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
            cap.wants_auction = true;
            Ok(NodeState::Unassigned)
        }
        NodeState::Unassigned => tick_unassigned(env, id, policy),
        NodeState::Assigned => tick_assigned(env, id, policy),
        NodeState::Running => tick_running(env, id, policy),
        NodeState::Succeeded | NodeState::Failed => Ok(state),
        NodeState::Paused => {
            let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
            Ok(cap.resume.take().unwrap_or(NodeState::Running))
        }
        // Uninitialized / shutdown / error are filtered by the legality gate.
        other => Ok(other),
    }
}

/// Unassigned: consume an award or a void round, otherwise keep asking for
/// an auction.
fn tick_unassigned(env: &mut TreeEnvironment, id: &str, policy: &TickPolicy) -> Result<NodeState> {
    let staged = {
        let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
        if cap.staged_fail {
            cap.staged_fail = false;
            cap.staged_void = false;
            cap.staged_award = None;
            // Exhaustion and external refusals fail the capability without
            // an assignment ever existing.
            return Ok(NodeState::Failed);
        }
        cap.staged_award.take()
    };
    if let Some(award) = staged {
        let inputs = award.inputs.clone();
        {
            let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
            cap.assignment = Some(award.assignment);
            cap.void_rounds = 0;
            cap.staged_void = false;
            cap.wants_dispatch = true;
        }
        for (name, value) in inputs {
            env.set_param(id, ParamKind::Input, &name, value)?;
        }
        return Ok(NodeState::Assigned);
    }
    let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
    if cap.staged_void {
        cap.staged_void = false;
        cap.void_rounds += 1;
        if cap.void_rounds >= policy.retry_limit {
            cap.void_rounds = 0;
            return Ok(NodeState::Failed);
        }
    }
    cap.wants_auction = true;
    Ok(NodeState::Unassigned)
}

/// Assigned: adopt a locally built implementation environment, or react to
/// the executor's accept/reject, staying assigned while the request is in
/// flight.
fn tick_assigned(env: &mut TreeEnvironment, id: &str, policy: &TickPolicy) -> Result<NodeState> {
    let (staged_fail, staged_exec, local_env) = {
        let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
        (cap.staged_fail, cap.staged_exec.take(), cap.staged_local_env.take())
    };
    if staged_fail {
        let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
        cap.staged_fail = false;
        return Ok(NodeState::Failed);
    }
    if let Some(mut impl_env) = local_env {
        impl_env.setup_root(policy)?;
        let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
        cap.impl_env = Some(impl_env);
        return Ok(NodeState::Running);
    }
    match staged_exec {
        Some(ExecUpdate::Accepted) => Ok(NodeState::Running),
        Some(ExecUpdate::Rejected) => {
            revert_to_unassigned(env, id)?;
            Ok(NodeState::Unassigned)
        }
        Some(other) => {
            // Out-of-order sync; treat as accepted and re-stage the update.
            let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
            cap.staged_exec = Some(other);
            Ok(NodeState::Running)
        }
        None => {
            let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
            cap.wants_dispatch = true;
            Ok(NodeState::Assigned)
        }
    }
}

/// Running: forward the tick into the local implementation environment, or
/// sync with the remote one; the capability state follows the
/// implementation root.
fn tick_running(env: &mut TreeEnvironment, id: &str, policy: &TickPolicy) -> Result<NodeState> {
    let has_local = env.node(id)?.cap.as_ref().expect("cap runtime").impl_env.is_some();
    if has_local {
        let inputs = env.params_of(id, ParamKind::Input);
        let mut impl_env = env
            .node_mut(id)?
            .cap
            .as_mut()
            .expect("cap runtime")
            .impl_env
            .take()
            .expect("local impl env");
        bridge::sync_in(&mut impl_env, &inputs)?;
        impl_env.tick_root(policy)?;
        let outputs = bridge::sync_out(&impl_env)?;
        let root_state = impl_env.root_state();
        env.node_mut(id)?.cap.as_mut().expect("cap runtime").impl_env = Some(impl_env);
        for (name, value) in outputs {
            env.set_param(id, ParamKind::Output, &name, value)?;
        }
        return Ok(root_state.as_flow_result());
    }

    let is_remote = env.node(id)?.cap.as_ref().expect("cap runtime").exec_id.is_some();
    if !is_remote {
        // Running with neither a local environment nor a remote execution
        // is an inconsistent forced state; fail it.
        return Ok(NodeState::Failed);
    }
    // Push current inputs; the agent ships them as one sync message.
    let inputs = env.params_of(id, ParamKind::Input);
    {
        let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
        cap.outgoing_inputs = Some(inputs);
    }
    let staged = env.node_mut(id)?.cap.as_mut().expect("cap runtime").staged_exec.take();
    match staged {
        Some(ExecUpdate::Sync { root_state, outputs }) => {
            for (name, value) in outputs {
                env.set_param(id, ParamKind::Output, &name, value)?;
            }
            Ok(root_state.as_flow_result())
        }
        Some(ExecUpdate::Done { root_state, outputs }) => {
            for (name, value) in outputs {
                env.set_param(id, ParamKind::Output, &name, value)?;
            }
            let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
            cap.exec_id = None;
            cap.outgoing_inputs = None;
            Ok(root_state.as_flow_result())
        }
        Some(ExecUpdate::Rejected) | Some(ExecUpdate::Lost) => {
            revert_to_unassigned(env, id)?;
            Ok(NodeState::Unassigned)
        }
        Some(ExecUpdate::Accepted) | None => Ok(NodeState::Running),
    }
}

/// Clears the assignment and any execution so the node can re-auction.
pub(crate) fn revert_to_unassigned(env: &mut TreeEnvironment, id: &str) -> Result<()> {
    let node = env.node_mut(id)?;
    let mut orphans = Vec::new();
    {
        let cap = node.cap.as_mut().expect("cap runtime");
        cap.assignment = None;
        cap.resume = None;
        if let Some(exec) = cap.exec_id.take() {
            cap.abort_exec = Some(exec);
        }
        if let Some(impl_env) = cap.impl_env.take() {
            orphans = impl_env.pending_requests();
        }
    }
    node.orphaned_requests.extend(orphans);
    node.state = NodeState::Unassigned;
    Ok(())
}

/// Untick pauses an active capability; the prior state is re-entered on the
/// next tick. Unassigned capabilities have nothing in flight and simply
/// hold.
pub(crate) fn untick_capability(env: &mut TreeEnvironment, id: &str) -> Result<NodeState> {
    let state = env.state(id)?;
    let new_state = match state {
        NodeState::Idle | NodeState::Unassigned | NodeState::Paused => state,
        NodeState::Assigned
        | NodeState::Running
        | NodeState::Succeeded
        | NodeState::Failed => {
            let cap = env.node_mut(id)?.cap.as_mut().expect("cap runtime");
            if cap.resume.is_none() {
                cap.resume = Some(state);
            }
            NodeState::Paused
        }
        other => other,
    };
    env.node_mut(id)?.state = new_state;
    Ok(new_state)
}

/// Reset returns the node to idle and reverts the assignment to none. A
/// remote execution is aborted; a local implementation environment is shut
/// down and dropped.
pub(crate) fn reset_capability(
    env: &mut TreeEnvironment,
    id: &str,
    policy: &TickPolicy,
) -> Result<NodeState> {
    clear_binding(env, id, policy, NodeState::Idle)
}

pub(crate) fn shutdown_capability(
    env: &mut TreeEnvironment,
    id: &str,
    policy: &TickPolicy,
) -> Result<NodeState> {
    clear_binding(env, id, policy, NodeState::Shutdown)
}

fn clear_binding(
    env: &mut TreeEnvironment,
    id: &str,
    policy: &TickPolicy,
    target: NodeState,
) -> Result<NodeState> {
    let impl_env = env.node_mut(id)?.cap.as_mut().expect("cap runtime").impl_env.take();
    if let Some(mut impl_env) = impl_env {
        if let Some(root) = impl_env.root().map(str::to_string) {
            impl_env.apply_action(&root, NodeAction::Shutdown, policy)?;
        }
        let orphans = impl_env.pending_requests();
        env.node_mut(id)?.orphaned_requests.extend(orphans);
    }
    let node = env.node_mut(id)?;
    let cap = node.cap.as_mut().expect("cap runtime");
    cap.assignment = None;
    cap.resume = None;
    cap.void_rounds = 0;
    if let Some(exec) = cap.exec_id.take() {
        cap.abort_exec = Some(exec);
    }
    cap.staged_award = None;
    cap.staged_void = false;
    cap.staged_exec = None;
    cap.staged_local_env = None;
    cap.staged_fail = false;
    cap.outgoing_inputs = None;
    node.state = target;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::env::{Assignment, StagedAward};
    use crate::bt::node::{NodeKind, NodeSpec, TreeSpec};
    use crate::capability::interface::{catalog_from_list, CapabilityInterface};
    use crate::ids::WorldId;
    use crate::value::{Value, ValueType};

    fn cap_env() -> TreeEnvironment {
        let catalog = catalog_from_list(vec![CapabilityInterface::new("explore")
            .with_input("target", ValueType::Pose)
            .with_output("revealed", ValueType::Int)])
        .unwrap();
        let spec = TreeSpec::new(
            "c",
            vec![NodeSpec::new("c", NodeKind::Capability).with_interface("explore")],
        );
        let mut env = TreeEnvironment::build(&spec, WorldId::new("w"), &catalog, None).unwrap();
        env.setup_root(&TickPolicy::default()).unwrap();
        env
    }

    fn award() -> StagedAward {
        StagedAward {
            assignment: Assignment {
                implementation: "impl1".into(),
                executor: WorldId::new("w"),
                task: None,
                cost: 10.0,
            },
            inputs: vec![(
                "target".to_string(),
                Value::Pose(crate::value::Pose::new(1.0, 2.0)),
            )],
        }
    }

    #[test]
    fn first_tick_moves_idle_to_unassigned() {
        let mut env = cap_env();
        let state = env.tick_root(&TickPolicy::default()).unwrap();
        assert_eq!(state, NodeState::Unassigned);
        assert!(env.node("c").unwrap().cap.as_ref().unwrap().wants_auction);
    }

    #[test]
    fn award_adoption_freezes_assignment_and_writes_inputs() {
        let mut env = cap_env();
        env.tick_root(&TickPolicy::default()).unwrap();
        env.node_mut("c").unwrap().cap.as_mut().unwrap().staged_award = Some(award());
        let state = env.tick_root(&TickPolicy::default()).unwrap();
        assert_eq!(state, NodeState::Assigned);
        let cap = env.node("c").unwrap().cap.as_ref().unwrap();
        assert_eq!(cap.assignment.as_ref().unwrap().implementation, "impl1");
        assert_eq!(
            env.get_param("c", ParamKind::Input, "target"),
            Some(&Value::Pose(crate::value::Pose::new(1.0, 2.0)))
        );
    }

    #[test]
    fn void_rounds_exhaust_into_failed() {
        let mut env = cap_env();
        let policy = TickPolicy { retry_limit: 3 };
        env.tick_root(&policy).unwrap();
        for _ in 0..2 {
            env.node_mut("c").unwrap().cap.as_mut().unwrap().staged_void = true;
            assert_eq!(env.tick_root(&policy).unwrap(), NodeState::Unassigned);
        }
        env.node_mut("c").unwrap().cap.as_mut().unwrap().staged_void = true;
        assert_eq!(env.tick_root(&policy).unwrap(), NodeState::Failed);
    }

    #[test]
    fn rejected_execution_reverts_to_unassigned() {
        let mut env = cap_env();
        env.tick_root(&TickPolicy::default()).unwrap();
        env.node_mut("c").unwrap().cap.as_mut().unwrap().staged_award = Some(award());
        env.tick_root(&TickPolicy::default()).unwrap();
        env.node_mut("c").unwrap().cap.as_mut().unwrap().staged_exec = Some(ExecUpdate::Rejected);
        let state = env.tick_root(&TickPolicy::default()).unwrap();
        assert_eq!(state, NodeState::Unassigned);
        assert!(env.node("c").unwrap().cap.as_ref().unwrap().assignment.is_none());
    }

    #[test]
    fn untick_pauses_and_resume_reenters_prior_state() {
        let mut env = cap_env();
        env.tick_root(&TickPolicy::default()).unwrap();
        env.node_mut("c").unwrap().cap.as_mut().unwrap().staged_award = Some(award());
        env.tick_root(&TickPolicy::default()).unwrap();
        assert_eq!(env.state("c").unwrap(), NodeState::Assigned);
        env.apply_action("c", NodeAction::Untick, &TickPolicy::default()).unwrap();
        assert_eq!(env.state("c").unwrap(), NodeState::Paused);
        // Assignment is frozen through the pause.
        assert!(env.node("c").unwrap().cap.as_ref().unwrap().assignment.is_some());
        let state = env.tick_root(&TickPolicy::default()).unwrap();
        assert_eq!(state, NodeState::Assigned);
    }

    #[test]
    fn reset_clears_assignment_to_none() {
        let mut env = cap_env();
        env.tick_root(&TickPolicy::default()).unwrap();
        env.node_mut("c").unwrap().cap.as_mut().unwrap().staged_award = Some(award());
        env.tick_root(&TickPolicy::default()).unwrap();
        env.apply_action("c", NodeAction::Reset, &TickPolicy::default()).unwrap();
        assert_eq!(env.state("c").unwrap(), NodeState::Idle);
        assert!(env.node("c").unwrap().cap.as_ref().unwrap().assignment.is_none());
    }

    #[test]
    fn unassigned_untick_holds_without_pausing() {
        let mut env = cap_env();
        env.tick_root(&TickPolicy::default()).unwrap();
        env.apply_action("c", NodeAction::Untick, &TickPolicy::default()).unwrap();
        assert_eq!(env.state("c").unwrap(), NodeState::Unassigned);
    }
}
