//! Action dispatch and control-flow tick semantics.
//!
//! `apply_action` is the single update entry point: it consults the pinned
//! transition table, absorbs illegal actions into the error state, and runs
//! the node logic for legal ones. Ticking is synchronous and depth-first;
//! data propagation runs before each ticked node evaluates.

use crate::bt::env::{action_is_legal, LeafBehavior, TreeEnvironment, WorldRequest};
use crate::bt::node::{NodeKind, ParamKind};
use crate::bt::state::{allowed_transitions, NodeAction, NodeState};
use crate::capability;
use crate::error::Result;

/// Knobs the tick path needs from the runtime configuration.
#[derive(Debug, Clone, Copy)]
pub struct TickPolicy {
    /// Auction rounds that may close void before an unassigned capability
    /// gives up and fails.
    pub retry_limit: u32,
}

impl Default for TickPolicy {
    fn default() -> Self {
        TickPolicy { retry_limit: 3 }
    }
}

impl TreeEnvironment {
    /// Applies one lifecycle action to one node and returns its new state.
    ///
    /// Unknown node ids are structural errors; an action that is illegal in
    /// the node's current state moves the node to the error state instead of
    /// failing the call.
    pub fn apply_action(
        &mut self,
        id: &str,
        action: NodeAction,
        policy: &TickPolicy,
    ) -> Result<NodeState> {
        let node = self.node(id)?;
        let family = node.family();
        let state = node.state;
        let allowed = allowed_transitions(family, state, action);
        if allowed == [NodeState::Error] {
            if state != NodeState::Error {
                self.enter_error(id)?;
            }
            return Ok(NodeState::Error);
        }
        match action {
            NodeAction::Setup => self.do_setup(id, policy),
            NodeAction::Tick => self.do_tick(id, policy),
            NodeAction::Untick => self.do_untick(id, policy),
            NodeAction::Reset => self.do_reset(id, policy),
            NodeAction::Shutdown => self.do_shutdown(id, policy),
        }
    }

    /// Propagates one tick from the root. An empty environment is a no-op;
    /// a root already in the error state flags the environment instead of
    /// ticking.
    pub fn tick_root(&mut self, policy: &TickPolicy) -> Result<NodeState> {
        let Some(root) = self.root().map(str::to_string) else {
            return Ok(NodeState::Idle);
        };
        if self.state(&root)? == NodeState::Error {
            self.errored = true;
            return Ok(NodeState::Error);
        }
        self.apply_action(&root, NodeAction::Tick, policy)
    }

    /// Sets up the whole tree (root plus descendants).
    pub fn setup_root(&mut self, policy: &TickPolicy) -> Result<()> {
        if let Some(root) = self.root().map(str::to_string) {
            self.apply_action(&root, NodeAction::Setup, policy)?;
        }
        Ok(())
    }

    /// Copies every data edge source slot into its destination slot, in
    /// topological order. Idempotent within a tick.
    pub fn propagate_data(&mut self) -> Result<()> {
        for i in 0..self.edges().len() {
            let e = self.edges()[i].clone();
            let from_key = self.edge_slot(&e.from.node, &e.from.param);
            let Some(value) = from_key.and_then(|k| self.blackboard().get(&k).cloned()) else {
                continue;
            };
            if value.value_type() != e.ty {
                // Copy-time type mismatch lands on the destination node.
                let dest = e.to.node.clone();
                self.enter_error(&dest)?;
                continue;
            }
            if let Some((node, name, kind)) = self.edge_slot(&e.to.node, &e.to.param) {
                self.set_param(&node, kind, &name, value)?;
            }
        }
        Ok(())
    }

    /// Resolves an edge endpoint to a concrete blackboard key, preferring
    /// output slots for sources and input slots for destinations when a name
    /// exists as both.
    fn edge_slot(&self, node: &str, param: &str) -> Option<(String, String, ParamKind)> {
        let n = self.node(node).ok()?;
        let mut found: Option<ParamKind> = None;
        for p in &n.spec.parameters {
            if p.name == param {
                found = Some(match (found, p.kind) {
                    (Some(k), _) => k,
                    (None, k) => k,
                });
            }
        }
        found.map(|k| (node.to_string(), param.to_string(), k))
    }

    /// Moves a node into the error state, clearing anything the binding
    /// invariants forbid an errored node to hold.
    pub(crate) fn enter_error(&mut self, id: &str) -> Result<()> {
        let node = self.node_mut(id)?;
        node.state = NodeState::Error;
        let mut orphans = Vec::new();
        if let Some(cap) = node.cap.as_mut() {
            cap.assignment = None;
            cap.resume = None;
            if let Some(exec) = cap.exec_id.take() {
                cap.abort_exec = Some(exec);
            }
            if let Some(env) = cap.impl_env.take() {
                orphans.extend(env.pending_requests());
            }
            cap.staged_award = None;
            cap.staged_void = false;
            cap.staged_exec = None;
            cap.staged_local_env = None;
            cap.staged_fail = false;
        }
        if let Some(slot) = node.slot.as_mut() {
            slot.exec = None;
            if let Some(env) = slot.child_env.take() {
                orphans.extend(env.pending_requests());
            }
            slot.staged_inputs = None;
        }
        if let Some(leaf) = node.leaf.as_mut() {
            if let Some(r) = leaf.pending_request.take() {
                orphans.push(r);
            }
            leaf.outgoing_request = None;
        }
        node.orphaned_requests.extend(orphans);
        Ok(())
    }

    fn do_setup(&mut self, id: &str, policy: &TickPolicy) -> Result<NodeState> {
        self.node_mut(id)?.state = NodeState::Idle;
        let children = self.node(id)?.spec.children.clone();
        for child in children {
            let c = self.node(&child)?;
            if action_is_legal(c.family(), c.state, NodeAction::Setup) {
                self.apply_action(&child, NodeAction::Setup, policy)?;
            }
        }
        Ok(NodeState::Idle)
    }

    fn do_tick(&mut self, id: &str, policy: &TickPolicy) -> Result<NodeState> {
        self.node_mut(id)?.ticks_received += 1;
        self.propagate_data()?;
        let kind = self.node(id)?.spec.kind;
        let new_state = match kind {
            NodeKind::Sequence => self.tick_sequence(id, policy)?,
            NodeKind::Selector => self.tick_selector(id, policy)?,
            NodeKind::Parallel => self.tick_parallel(id, policy)?,
            NodeKind::Decorator => self.tick_decorator(id, policy)?,
            NodeKind::ActionLeaf => self.tick_leaf(id)?,
            NodeKind::IoInputBridge | NodeKind::IoOutputBridge => NodeState::Succeeded,
            NodeKind::Capability => capability::binding::tick_capability(self, id, policy)?,
            NodeKind::RemoteCapabilitySlot => capability::slot::tick_slot(self, id, policy)?,
        };
        if self.node(id)?.state != NodeState::Error {
            self.node_mut(id)?.state = new_state;
        }
        Ok(self.node(id)?.state)
    }

    fn tick_sequence(&mut self, id: &str, policy: &TickPolicy) -> Result<NodeState> {
        let children = self.node(id)?.spec.children.clone();
        for (i, child) in children.iter().enumerate() {
            let result = self.apply_action(child, NodeAction::Tick, policy)?.as_flow_result();
            match result {
                NodeState::Succeeded => continue,
                other => {
                    self.untick_rest(&children[i + 1..], policy)?;
                    return Ok(if other == NodeState::Failed {
                        NodeState::Failed
                    } else {
                        NodeState::Running
                    });
                }
            }
        }
        Ok(NodeState::Succeeded)
    }

    fn tick_selector(&mut self, id: &str, policy: &TickPolicy) -> Result<NodeState> {
        let children = self.node(id)?.spec.children.clone();
        if children.is_empty() {
            return Ok(NodeState::Succeeded);
        }
        for (i, child) in children.iter().enumerate() {
            let result = self.apply_action(child, NodeAction::Tick, policy)?.as_flow_result();
            match result {
                NodeState::Failed => continue,
                other => {
                    self.untick_rest(&children[i + 1..], policy)?;
                    return Ok(if other == NodeState::Succeeded {
                        NodeState::Succeeded
                    } else {
                        NodeState::Running
                    });
                }
            }
        }
        Ok(NodeState::Failed)
    }

    /// Parallel ticks every child each cycle, remembering terminal children
    /// for the rest of the episode. Succeeds when all children have
    /// succeeded, fails as soon as any child fails.
    fn tick_parallel(&mut self, id: &str, policy: &TickPolicy) -> Result<NodeState> {
        let children = self.node(id)?.spec.children.clone();
        let mut results = Vec::with_capacity(children.len());
        for child in &children {
            if let Some(done) = self.node(id)?.parallel_done.get(child).copied() {
                results.push(done);
                continue;
            }
            let result = self.apply_action(child, NodeAction::Tick, policy)?.as_flow_result();
            if result.is_terminal() {
                self.node_mut(id)?.parallel_done.insert(child.clone(), result);
            }
            results.push(result);
        }
        if results.iter().any(|s| *s == NodeState::Failed) {
            for child in &children {
                let c = self.node(child)?;
                if !c.state.is_terminal() && action_is_legal(c.family(), c.state, NodeAction::Untick)
                {
                    self.apply_action(child, NodeAction::Untick, policy)?;
                }
            }
            return Ok(NodeState::Failed);
        }
        if results.iter().all(|s| *s == NodeState::Succeeded) {
            return Ok(NodeState::Succeeded);
        }
        Ok(NodeState::Running)
    }

    /// Plain decorators mirror their child. A decorator with a `task_kind`
    /// option is a task loop: it re-runs its child once per provided task
    /// and succeeds when its task source is exhausted.
    fn tick_decorator(&mut self, id: &str, policy: &TickPolicy) -> Result<NodeState> {
        let child = self.node(id)?.spec.children[0].clone();
        let is_loop = self
            .node(id)?
            .decorator
            .as_ref()
            .map(|d| d.task_kind.is_some())
            .unwrap_or(false);
        if !is_loop {
            return Ok(self.apply_action(&child, NodeAction::Tick, policy)?.as_flow_result());
        }

        let mut child_state = self.state(&child)?;
        if child_state.is_terminal() {
            let success = child_state == NodeState::Succeeded;
            let deco = self.node_mut(id)?.decorator.as_mut().expect("decorator runtime");
            if let Some(task) = deco.active_task.take() {
                deco.completed.push((task, success));
            }
            self.apply_action(&child, NodeAction::Reset, policy)?;
            child_state = self.state(&child)?;
        }

        let feed = self.node(id)?.decorator.as_ref().expect("decorator runtime").feed;
        if child_state == NodeState::Idle && !feed.has_candidates {
            if feed.maybe_more {
                return Ok(NodeState::Running);
            }
            return Ok(NodeState::Succeeded);
        }
        let result = self.apply_action(&child, NodeAction::Tick, policy)?.as_flow_result();
        Ok(match result {
            // A terminal child is handled on the next tick; the loop itself
            // keeps running until exhaustion.
            NodeState::Failed | NodeState::Succeeded | NodeState::Running => NodeState::Running,
            other => other,
        })
    }

    fn tick_leaf(&mut self, id: &str) -> Result<NodeState> {
        let state = self.state(id)?;
        if state.is_terminal() {
            return Ok(state);
        }
        let behavior = self
            .node(id)?
            .leaf
            .as_ref()
            .and_then(|l| l.behavior.clone())
            .unwrap_or(LeafBehavior::Succeed);
        match behavior {
            LeafBehavior::Succeed => Ok(NodeState::Succeeded),
            LeafBehavior::Fail => Ok(NodeState::Failed),
            LeafBehavior::RunFor(ticks) => {
                let leaf = self.node_mut(id)?.leaf.as_mut().expect("leaf runtime");
                if leaf.ticks_in_run < ticks {
                    leaf.ticks_in_run += 1;
                    Ok(NodeState::Running)
                } else {
                    leaf.ticks_in_run = 0;
                    Ok(NodeState::Succeeded)
                }
            }
            LeafBehavior::CheckEq { param, expect } => {
                let value = self
                    .get_param(id, ParamKind::Input, &param)
                    .and_then(|v| v.as_str().map(str::to_string));
                Ok(if value.as_deref() == Some(expect.as_str()) {
                    NodeState::Succeeded
                } else {
                    NodeState::Failed
                })
            }
            LeafBehavior::MoveTo => self.tick_world_leaf(id, "move"),
            LeafBehavior::WorldTask(op) => self.tick_world_leaf(id, &op),
        }
    }

    /// Shared logic for leaves that wait on a world service request.
    fn tick_world_leaf(&mut self, id: &str, op: &str) -> Result<NodeState> {
        // A staged result finishes the request.
        let staged = self.node_mut(id)?.leaf.as_mut().expect("leaf runtime").staged_result.take();
        if let Some(result) = staged {
            let leaf = self.node_mut(id)?.leaf.as_mut().expect("leaf runtime");
            if leaf.pending_request == Some(result.request) {
                leaf.pending_request = None;
                for (name, value) in result.outputs {
                    let declared = self
                        .node(id)?
                        .spec
                        .parameters
                        .iter()
                        .any(|p| p.kind == ParamKind::Output && p.name == name);
                    if declared {
                        self.set_param(id, ParamKind::Output, &name, value)?;
                    }
                }
                return Ok(if result.success { NodeState::Succeeded } else { NodeState::Failed });
            }
        }
        if self.node(id)?.leaf.as_ref().expect("leaf runtime").pending_request.is_some() {
            return Ok(NodeState::Running);
        }

        // Issue a new request from current inputs and options.
        let target = self
            .get_param(id, ParamKind::Input, "target")
            .and_then(|v| v.as_pose());
        if op != "move" && target.is_none() && self.get_param(id, ParamKind::Input, "target").is_some()
        {
            self.enter_error(id)?;
            return Ok(NodeState::Error);
        }
        if op == "move" && target.is_none() {
            self.enter_error(id)?;
            return Ok(NodeState::Error);
        }
        let task = self
            .get_param(id, ParamKind::Input, "task_id")
            .and_then(|v| v.as_str().map(crate::ids::TaskId::new));
        let meta = self.impl_meta.clone();
        let duration = self
            .node(id)?
            .spec
            .option_value("duration")
            .and_then(|v| v.as_real())
            .or(meta.as_ref().map(|m| m.expected_duration));
        let radius = self
            .node(id)?
            .spec
            .option_value("radius")
            .and_then(|v| v.as_real())
            .or_else(|| {
                meta.as_ref()
                    .and_then(|m| m.extra_params.get("radius"))
                    .and_then(|v| v.as_real())
            });
        let request_id = self.alloc_request_id();
        let leaf = self.node_mut(id)?.leaf.as_mut().expect("leaf runtime");
        leaf.pending_request = Some(request_id);
        leaf.outgoing_request = Some(WorldRequest {
            op: op.to_string(),
            task,
            target,
            duration,
            radius,
        });
        Ok(NodeState::Running)
    }

    fn untick_rest(&mut self, rest: &[String], policy: &TickPolicy) -> Result<()> {
        for child in rest {
            let c = self.node(child)?;
            if action_is_legal(c.family(), c.state, NodeAction::Untick) {
                self.apply_action(child, NodeAction::Untick, policy)?;
            }
        }
        Ok(())
    }

    fn do_untick(&mut self, id: &str, policy: &TickPolicy) -> Result<NodeState> {
        let kind = self.node(id)?.spec.kind;
        match kind {
            NodeKind::Capability => return capability::binding::untick_capability(self, id),
            NodeKind::RemoteCapabilitySlot => return capability::slot::untick_slot(self, id),
            _ => {}
        }
        // Children first, then self.
        let children = self.node(id)?.spec.children.clone();
        for child in children {
            let c = self.node(&child)?;
            if action_is_legal(c.family(), c.state, NodeAction::Untick) {
                self.apply_action(&child, NodeAction::Untick, policy)?;
            }
        }
        let state = self.state(id)?;
        let new_state = match state {
            NodeState::Running => NodeState::Idle,
            other => other,
        };
        if new_state == NodeState::Idle {
            self.clear_leaf_transients(id)?;
        }
        self.node_mut(id)?.state = new_state;
        Ok(new_state)
    }

    fn clear_leaf_transients(&mut self, id: &str) -> Result<()> {
        let node = self.node_mut(id)?;
        if let Some(leaf) = node.leaf.as_mut() {
            leaf.ticks_in_run = 0;
            leaf.outgoing_request = None;
            leaf.staged_result = None;
            if let Some(r) = leaf.pending_request.take() {
                // Cancel the in-flight world request; the agent picks the id
                // up from the capability or environment drain.
                node.orphan_request(r);
            }
        }
        Ok(())
    }

    fn do_reset(&mut self, id: &str, policy: &TickPolicy) -> Result<NodeState> {
        let kind = self.node(id)?.spec.kind;
        match kind {
            NodeKind::Capability => return capability::binding::reset_capability(self, id, policy),
            NodeKind::RemoteCapabilitySlot => return capability::slot::reset_slot(self, id),
            _ => {}
        }
        let children = self.node(id)?.spec.children.clone();
        for child in children {
            let c = self.node(&child)?;
            if action_is_legal(c.family(), c.state, NodeAction::Reset) {
                self.apply_action(&child, NodeAction::Reset, policy)?;
            }
        }
        self.clear_leaf_transients(id)?;
        let node = self.node_mut(id)?;
        node.parallel_done.clear();
        if let Some(deco) = node.decorator.as_mut() {
            deco.active_task = None;
        }
        node.state = NodeState::Idle;
        Ok(NodeState::Idle)
    }

    fn do_shutdown(&mut self, id: &str, policy: &TickPolicy) -> Result<NodeState> {
        let kind = self.node(id)?.spec.kind;
        match kind {
            NodeKind::Capability => {
                return capability::binding::shutdown_capability(self, id, policy)
            }
            NodeKind::RemoteCapabilitySlot => return capability::slot::shutdown_slot(self, id),
            _ => {}
        }
        let children = self.node(id)?.spec.children.clone();
        for child in children {
            self.apply_action(&child, NodeAction::Shutdown, policy)?;
        }
        self.clear_leaf_transients(id)?;
        self.node_mut(id)?.parallel_done.clear();
        self.node_mut(id)?.state = NodeState::Shutdown;
        Ok(NodeState::Shutdown)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::node::{NodeSpec, TreeSpec};
    use crate::capability::interface::InterfaceCatalog;
    use crate::ids::WorldId;

    fn leaf(id: &str, behavior: &str) -> NodeSpec {
        NodeSpec::new(id, NodeKind::ActionLeaf).with_option("behavior", behavior)
    }

    fn build(spec: &TreeSpec) -> TreeEnvironment {
        let catalog = InterfaceCatalog::new();
        let mut env = TreeEnvironment::build(spec, WorldId::new("w"), &catalog, None).unwrap();
        env.setup_root(&TickPolicy::default()).unwrap();
        env
    }

    /// Independent truth table for sequence aggregation over child results.
    fn sequence_oracle(children: &[NodeState]) -> NodeState {
        for s in children {
            match s.as_flow_result() {
                NodeState::Succeeded => continue,
                NodeState::Failed => return NodeState::Failed,
                _ => return NodeState::Running,
            }
        }
        NodeState::Succeeded
    }

    /// Independent truth table for selector aggregation over child results.
    fn selector_oracle(children: &[NodeState]) -> NodeState {
        if children.is_empty() {
            return NodeState::Succeeded;
        }
        for s in children {
            match s.as_flow_result() {
                NodeState::Failed => continue,
                NodeState::Succeeded => return NodeState::Succeeded,
                _ => return NodeState::Running,
            }
        }
        NodeState::Failed
    }

    /// Independent truth table for parallel aggregation over child results.
    fn parallel_oracle(children: &[NodeState]) -> NodeState {
        if children.iter().any(|s| s.as_flow_result() == NodeState::Failed) {
            return NodeState::Failed;
        }
        if children.iter().all(|s| s.as_flow_result() == NodeState::Succeeded) {
            return NodeState::Succeeded;
        }
        NodeState::Running
    }

    fn behavior_for(state: NodeState) -> &'static str {
        match state {
            NodeState::Succeeded => "succeed",
            NodeState::Failed => "fail",
            NodeState::Running => "run_for",
            _ => unreachable!(),
        }
    }

    fn flow_case(kind: NodeKind, states: &[NodeState]) -> NodeState {
        let mut nodes = vec![NodeSpec::new("root", kind).with_children(
            &states.iter().enumerate().map(|(i, _)| format!("c{i}")).collect::<Vec<_>>()
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>(),
        )];
        for (i, s) in states.iter().enumerate() {
            let mut n = leaf(&format!("c{i}"), behavior_for(*s));
            if *s == NodeState::Running {
                n = n.with_param(
                    crate::bt::node::ParamDecl::new(
                        "ticks",
                        crate::bt::node::ParamKind::Option,
                        crate::value::ValueType::Int,
                    )
                    .with_value(crate::value::Value::Int(1000)),
                );
            }
            nodes.push(n);
        }
        let mut env = build(&TreeSpec::new("root", nodes));
        env.tick_root(&TickPolicy::default()).unwrap()
    }

    #[test]
    fn flow_nodes_match_truth_table_oracles_up_to_three_children() {
        let states = [NodeState::Succeeded, NodeState::Failed, NodeState::Running];
        let mut cases: Vec<Vec<NodeState>> = vec![];
        for &a in &states {
            cases.push(vec![a]);
            for &b in &states {
                cases.push(vec![a, b]);
                for &c in &states {
                    cases.push(vec![a, b, c]);
                }
            }
        }
        for case in cases {
            assert_eq!(
                flow_case(NodeKind::Sequence, &case),
                sequence_oracle(&case),
                "sequence {case:?}"
            );
            assert_eq!(
                flow_case(NodeKind::Selector, &case),
                selector_oracle(&case),
                "selector {case:?}"
            );
            assert_eq!(
                flow_case(NodeKind::Parallel, &case),
                parallel_oracle(&case),
                "parallel {case:?}"
            );
        }
    }

    #[test]
    fn empty_composites_succeed_immediately() {
        for kind in [NodeKind::Sequence, NodeKind::Selector, NodeKind::Parallel] {
            let mut env = build(&TreeSpec::new("root", vec![NodeSpec::new("root", kind)]));
            assert_eq!(env.tick_root(&TickPolicy::default()).unwrap(), NodeState::Succeeded);
        }
    }

    #[test]
    fn sequence_unticks_children_after_failure() {
        let spec = TreeSpec::new(
            "root",
            vec![
                NodeSpec::new("root", NodeKind::Sequence).with_children(&["a", "b", "c"]),
                leaf("a", "succeed"),
                leaf("b", "fail"),
                leaf("c", "succeed"),
            ],
        );
        let mut env = build(&spec);
        assert_eq!(env.tick_root(&TickPolicy::default()).unwrap(), NodeState::Failed);
        // c never ticked, stays idle
        assert_eq!(env.state("c").unwrap(), NodeState::Idle);
        assert_eq!(env.node("c").unwrap().ticks_received, 0);
    }

    #[test]
    fn selector_succeeds_past_failed_child() {
        let spec = TreeSpec::new(
            "root",
            vec![
                NodeSpec::new("root", NodeKind::Selector).with_children(&["a", "b"]),
                leaf("a", "fail"),
                leaf("b", "succeed"),
            ],
        );
        let mut env = build(&spec);
        assert_eq!(env.tick_root(&TickPolicy::default()).unwrap(), NodeState::Succeeded);
    }

    #[test]
    fn parallel_ticks_all_children_each_cycle() {
        let spec = TreeSpec::new(
            "root",
            vec![
                NodeSpec::new("root", NodeKind::Parallel).with_children(&["a", "b"]),
                leaf("a", "run_for").with_param(
                    crate::bt::node::ParamDecl::new(
                        "ticks",
                        crate::bt::node::ParamKind::Option,
                        crate::value::ValueType::Int,
                    )
                    .with_value(crate::value::Value::Int(3)),
                ),
                leaf("b", "run_for").with_param(
                    crate::bt::node::ParamDecl::new(
                        "ticks",
                        crate::bt::node::ParamKind::Option,
                        crate::value::ValueType::Int,
                    )
                    .with_value(crate::value::Value::Int(3)),
                ),
            ],
        );
        let mut env = build(&spec);
        env.tick_root(&TickPolicy::default()).unwrap();
        assert_eq!(env.node("a").unwrap().ticks_received, 1);
        assert_eq!(env.node("b").unwrap().ticks_received, 1);
        env.tick_root(&TickPolicy::default()).unwrap();
        assert_eq!(env.node("a").unwrap().ticks_received, 2);
        assert_eq!(env.node("b").unwrap().ticks_received, 2);
    }

    #[test]
    fn shutdown_reaches_every_state() {
        let spec = TreeSpec::new(
            "root",
            vec![
                NodeSpec::new("root", NodeKind::Sequence).with_children(&["a"]),
                leaf("a", "succeed"),
            ],
        );
        let mut env = build(&spec);
        env.tick_root(&TickPolicy::default()).unwrap();
        env.apply_action("root", NodeAction::Shutdown, &TickPolicy::default()).unwrap();
        assert_eq!(env.state("root").unwrap(), NodeState::Shutdown);
        assert_eq!(env.state("a").unwrap(), NodeState::Shutdown);
    }

    #[test]
    fn illegal_action_enters_error_state_not_panic() {
        let spec = TreeSpec::new("a", vec![leaf("a", "succeed")]);
        let catalog = InterfaceCatalog::new();
        let mut env =
            TreeEnvironment::build(&spec, WorldId::new("w"), &catalog, None).unwrap();
        // Tick before setup is illegal for every family.
        let state = env.apply_action("a", NodeAction::Tick, &TickPolicy::default()).unwrap();
        assert_eq!(state, NodeState::Error);
    }

    #[test]
    fn unknown_node_is_a_structural_error() {
        let spec = TreeSpec::new("a", vec![leaf("a", "succeed")]);
        let catalog = InterfaceCatalog::new();
        let mut env = TreeEnvironment::build(&spec, WorldId::new("w"), &catalog, None).unwrap();
        assert!(env
            .apply_action("missing", NodeAction::Tick, &TickPolicy::default())
            .is_err());
    }

    #[test]
    fn empty_tree_tick_is_a_noop() {
        let mut env = TreeEnvironment::empty(WorldId::new("w"));
        assert_eq!(env.tick_root(&TickPolicy::default()).unwrap(), NodeState::Idle);
        assert!(!env.errored);
    }

    #[test]
    fn errored_root_flags_environment() {
        let spec = TreeSpec::new("a", vec![leaf("a", "succeed")]);
        let catalog = InterfaceCatalog::new();
        let mut env = TreeEnvironment::build(&spec, WorldId::new("w"), &catalog, None).unwrap();
        env.force_state("a", NodeState::Error).unwrap();
        assert_eq!(env.tick_root(&TickPolicy::default()).unwrap(), NodeState::Error);
        assert!(env.errored);
    }
}
