//! The tree environment: one behavior-tree graph, its data graph, a
//! blackboard, and the world it belongs to. This is the unit of execution;
//! implementation subtrees run in nested environments owned by the
//! capability or slot node hosting them.

use crate::bt::node::{DataEdgeSpec, NodeKind, NodeSpec, ParamDecl, ParamKind, TreeSpec};
use crate::bt::state::{allowed_transitions, NodeAction, NodeFamily, NodeState};
use crate::capability::interface::InterfaceCatalog;
use crate::error::{Error, Result};
use crate::ids::{ExecId, TaskId, WorldId};
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Blackboard key: which slot of which node.
pub type SlotKey = (String, String, ParamKind);

/// The parsed behavior of an action leaf, fixed at build time from its
/// option parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LeafBehavior {
    /// Succeeds on the first tick.
    Succeed,
    /// Fails on the first tick.
    Fail,
    /// Runs for the given number of ticks, then succeeds.
    RunFor(u32),
    /// Requests robot motion to the `target` input, running until the world
    /// reports arrival.
    MoveTo,
    /// Requests a simulated world operation (explore, identify, pickup,
    /// decontaminate) and copies the reported outputs when it completes.
    WorldTask(String),
    /// Succeeds when the named input equals the `expect` option.
    CheckEq { param: String, expect: String },
}

/// A world service request produced by a leaf and shipped by the owning
/// agent as a TASK_START message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldRequest {
    pub op: String,
    pub task: Option<TaskId>,
    pub target: Option<crate::value::Pose>,
    pub duration: Option<f64>,
    pub radius: Option<f64>,
}

/// Result of a world service request, staged into the requesting leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldResult {
    pub request: u64,
    pub success: bool,
    pub outputs: Vec<(String, Value)>,
}

/// Per-leaf runtime state.
#[derive(Debug, Clone, Default)]
pub struct LeafRuntime {
    pub behavior: Option<LeafBehavior>,
    pub ticks_in_run: u32,
    /// Outstanding world request id, if any.
    pub pending_request: Option<u64>,
    /// Request the agent should send, set during a tick.
    pub outgoing_request: Option<WorldRequest>,
    /// Result delivered by the agent before a tick.
    pub staged_result: Option<WorldResult>,
}

/// Assignment of a capability node to an implementation, frozen while the
/// node is in assigned, running, paused, or a terminal state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub implementation: String,
    pub executor: WorldId,
    pub task: Option<TaskId>,
    /// Cost the award was won at.
    pub cost: f64,
}

/// An auction award staged into a capability node.
#[derive(Debug, Clone, PartialEq)]
pub struct StagedAward {
    pub assignment: Assignment,
    /// Input values of the awarded task candidate, written to the node's
    /// input slots when the award is adopted.
    pub inputs: Vec<(String, Value)>,
}

/// Remote execution updates staged into a capability node by mission
/// control.
#[derive(Debug, Clone, PartialEq)]
pub enum ExecUpdate {
    Accepted,
    Rejected,
    Sync { root_state: NodeState, outputs: Vec<(String, Value)> },
    Done { root_state: NodeState, outputs: Vec<(String, Value)> },
    Lost,
}

/// Runtime state of a capability node.
#[derive(Debug, Clone, Default)]
pub struct CapRuntime {
    pub interface: String,
    pub assignment: Option<Assignment>,
    /// State to re-enter when a paused capability is ticked again.
    pub resume: Option<NodeState>,
    /// Consecutive auction rounds that closed void.
    pub void_rounds: u32,
    /// Nested environment for local execution.
    pub impl_env: Option<Box<TreeEnvironment>>,
    /// Remote execution record id.
    pub exec_id: Option<ExecId>,
    /// Set while the node waits for an auction to resolve.
    pub wants_auction: bool,
    /// Set when assigned and execution has not started yet.
    pub wants_dispatch: bool,
    /// Inputs to push to a remote execution, collected after the tick.
    pub outgoing_inputs: Option<Vec<(String, Value)>>,
    /// Remote execution to abort, collected after the tick.
    pub abort_exec: Option<ExecId>,
    // --- staged by the agent before the tick ---
    pub staged_award: Option<StagedAward>,
    pub staged_void: bool,
    pub staged_exec: Option<ExecUpdate>,
    pub staged_local_env: Option<Box<TreeEnvironment>>,
    /// External failure signal (precondition refused at dispatch, executor
    /// lost, retry budget exhausted by the agent).
    pub staged_fail: bool,
}

/// An accepted remote execution staged into a slot node.
#[derive(Debug, Clone)]
pub struct SlotExec {
    pub exec_id: ExecId,
    pub requester: WorldId,
    pub interface: String,
}

/// Outgoing state of a hosted execution, collected by the agent each tick.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutgoing {
    pub exec_id: ExecId,
    pub requester: WorldId,
    pub root_state: NodeState,
    pub outputs: Vec<(String, Value)>,
    pub done: bool,
}

/// Runtime state of a remote capability slot.
#[derive(Debug, Clone, Default)]
pub struct SlotRuntime {
    pub exec: Option<SlotExec>,
    pub child_env: Option<Box<TreeEnvironment>>,
    /// Input values received from the requesting robot.
    pub staged_inputs: Option<Vec<(String, Value)>>,
    /// Sync or completion to report back, collected after the tick.
    pub outgoing: Option<SlotOutgoing>,
}

/// Task-loop feed staged into a decorator by the agent.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoopFeed {
    /// The provider has a task the child could take next.
    pub has_candidates: bool,
    /// More tasks may still appear (e.g. exploration is not finished).
    pub maybe_more: bool,
}

/// Runtime state of a decorator node.
#[derive(Debug, Clone, Default)]
pub struct DecoratorRuntime {
    /// `task_kind` option makes the decorator a task loop; without it the
    /// decorator is a transparent pass-through.
    pub task_kind: Option<String>,
    pub feed: LoopFeed,
    /// Task the current loop iteration works on, staged by the agent when
    /// an award fixes it.
    pub active_task: Option<TaskId>,
    /// `(task, success)` pairs for the provider, collected after the tick.
    pub completed: Vec<(TaskId, bool)>,
}

/// One node with its static description and runtime state.
#[derive(Debug, Clone)]
pub struct NodeRuntime {
    pub spec: NodeSpec,
    pub state: NodeState,
    pub ticks_received: u64,
    /// Children that finished during the current parallel episode.
    pub parallel_done: BTreeMap<String, NodeState>,
    /// World requests cancelled by unticks, resets, or dropped nested
    /// environments; the agent drains these into TASK_CANCEL messages.
    pub orphaned_requests: Vec<u64>,
    pub leaf: Option<LeafRuntime>,
    pub cap: Option<CapRuntime>,
    pub slot: Option<SlotRuntime>,
    pub decorator: Option<DecoratorRuntime>,
}

impl NodeRuntime {
    pub fn family(&self) -> NodeFamily {
        match self.spec.kind {
            NodeKind::Capability => NodeFamily::Capability,
            NodeKind::RemoteCapabilitySlot => NodeFamily::RemoteSlot,
            _ => NodeFamily::Plain,
        }
    }

    pub fn orphan_request(&mut self, request: u64) {
        self.orphaned_requests.push(request);
    }
}

/// Extra context when the environment hosts a capability implementation.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplMeta {
    pub interface: String,
    pub implementation: String,
    pub expected_duration: f64,
    pub extra_params: BTreeMap<String, Value>,
}

/// A behavior-tree execution environment.
#[derive(Debug, Clone)]
pub struct TreeEnvironment {
    pub world: WorldId,
    root: Option<String>,
    nodes: BTreeMap<String, NodeRuntime>,
    /// Data edges in propagation order.
    edges: Vec<DataEdgeSpec>,
    blackboard: BTreeMap<SlotKey, Value>,
    /// Set when tick_root was refused because the root is in error state.
    pub errored: bool,
    pub impl_meta: Option<ImplMeta>,
    /// Monotonic counter for world request ids local to this environment
    /// tree; the agent rewrites them into globally unique ids.
    next_request: u64,
}

impl TreeEnvironment {
    /// Builds an empty environment (no nodes). Ticking it is a no-op.
    pub fn empty(world: WorldId) -> Self {
        TreeEnvironment {
            world,
            root: None,
            nodes: BTreeMap::new(),
            edges: Vec::new(),
            blackboard: BTreeMap::new(),
            errored: false,
            impl_meta: None,
            next_request: 1,
        }
    }

    /// Builds and validates an environment from a tree description.
    ///
    /// Capability, slot, and bridge nodes resolve their parameter sets from
    /// the interface catalog. `impl_meta` is set when the tree is a
    /// capability implementation; its bridges then mirror that interface.
    pub fn build(
        spec: &TreeSpec,
        world: WorldId,
        catalog: &InterfaceCatalog,
        impl_meta: Option<ImplMeta>,
    ) -> Result<Self> {
        let mut env = TreeEnvironment::empty(world);
        env.impl_meta = impl_meta;

        // Node table and structural checks.
        let mut parents: BTreeMap<&str, &str> = BTreeMap::new();
        for node in &spec.nodes {
            if env.nodes.contains_key(&node.id) {
                return Err(Error::Structure(format!("duplicate node id `{}`", node.id)));
            }
            if node.spec_is_leaf_with_children() {
                return Err(Error::Structure(format!(
                    "leaf node `{}` declares children",
                    node.id
                )));
            }
            if node.kind == NodeKind::Decorator && node.children.len() != 1 {
                return Err(Error::Structure(format!(
                    "decorator `{}` must have exactly one child",
                    node.id
                )));
            }
            env.nodes.insert(node.id.clone(), new_runtime(node.clone()));
        }
        for node in &spec.nodes {
            for child in &node.children {
                if !env.nodes.contains_key(child) {
                    return Err(Error::Structure(format!(
                        "node `{}` references unknown child `{}`",
                        node.id, child
                    )));
                }
                if parents.insert(child, &node.id).is_some() {
                    return Err(Error::Structure(format!(
                        "node `{child}` has more than one parent"
                    )));
                }
            }
        }
        if !env.nodes.contains_key(&spec.root) {
            return Err(Error::Structure(format!("root `{}` not among nodes", spec.root)));
        }
        if parents.contains_key(spec.root.as_str()) {
            return Err(Error::Structure(format!("root `{}` has a parent", spec.root)));
        }
        // Every non-root node must be reachable from the root.
        let mut reachable = BTreeSet::new();
        let mut stack = vec![spec.root.clone()];
        while let Some(id) = stack.pop() {
            if reachable.insert(id.clone()) {
                stack.extend(env.nodes[&id].spec.children.iter().cloned());
            }
        }
        for id in env.nodes.keys() {
            if !reachable.contains(id) {
                return Err(Error::Structure(format!("node `{id}` unreachable from root")));
            }
        }
        env.root = Some(spec.root.clone());

        env.resolve_interfaces(catalog)?;
        env.seed_blackboard()?;
        env.adopt_edges(spec.data_edges.clone())?;
        Ok(env)
    }

    /// Injects derived parameters for capability, slot, and bridge nodes and
    /// parses leaf behaviors.
    fn resolve_interfaces(&mut self, catalog: &InterfaceCatalog) -> Result<()> {
        let impl_iface = self.impl_meta.as_ref().map(|m| m.interface.clone());
        for node in self.nodes.values_mut() {
            match node.spec.kind {
                NodeKind::Capability => {
                    let iface_name = node.spec.interface.clone().ok_or_else(|| {
                        Error::Capability(node.spec.id.clone(), "missing interface".into())
                    })?;
                    let iface = catalog.get(&iface_name).ok_or_else(|| {
                        Error::Capability(
                            node.spec.id.clone(),
                            format!("unknown interface `{iface_name}`"),
                        )
                    })?;
                    if node.spec.parameters.iter().any(|p| p.kind == ParamKind::Option) {
                        return Err(Error::Capability(
                            node.spec.id.clone(),
                            "capabilities cannot have option values".into(),
                        ));
                    }
                    node.spec.parameters = iface
                        .inputs
                        .iter()
                        .map(|p| ParamDecl::new(&p.name, ParamKind::Input, p.ty))
                        .chain(
                            iface
                                .outputs
                                .iter()
                                .map(|p| ParamDecl::new(&p.name, ParamKind::Output, p.ty)),
                        )
                        .collect();
                    node.cap.as_mut().expect("cap runtime").interface = iface_name;
                }
                NodeKind::IoInputBridge | NodeKind::IoOutputBridge => {
                    let iface_name = node
                        .spec
                        .interface
                        .clone()
                        .or_else(|| impl_iface.clone())
                        .ok_or_else(|| {
                            Error::Capability(
                                node.spec.id.clone(),
                                "bridge outside an implementation needs an interface".into(),
                            )
                        })?;
                    let iface = catalog.get(&iface_name).ok_or_else(|| {
                        Error::Capability(
                            node.spec.id.clone(),
                            format!("unknown interface `{iface_name}`"),
                        )
                    })?;
                    let forbidden = if node.spec.kind == NodeKind::IoInputBridge {
                        ParamKind::Input
                    } else {
                        ParamKind::Output
                    };
                    if node.spec.parameters.iter().any(|p| p.kind == forbidden) {
                        return Err(Error::Capability(
                            node.spec.id.clone(),
                            format!("{} bridges do not declare {forbidden}s", node.spec.kind),
                        ));
                    }
                    // Input bridges publish the capability inputs as outputs;
                    // output bridges take the capability outputs as inputs.
                    node.spec.parameters = if node.spec.kind == NodeKind::IoInputBridge {
                        iface
                            .inputs
                            .iter()
                            .map(|p| ParamDecl::new(&p.name, ParamKind::Output, p.ty))
                            .collect()
                    } else {
                        iface
                            .outputs
                            .iter()
                            .map(|p| ParamDecl::new(&p.name, ParamKind::Input, p.ty))
                            .collect()
                    };
                    node.spec.interface = Some(iface_name);
                }
                NodeKind::ActionLeaf => {
                    let leaf = node.leaf.as_mut().expect("leaf runtime");
                    leaf.behavior = Some(parse_behavior(&node.spec)?);
                }
                NodeKind::Decorator => {
                    let deco = node.decorator.as_mut().expect("decorator runtime");
                    deco.task_kind = node.spec.option_str("task_kind").map(str::to_string);
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn seed_blackboard(&mut self) -> Result<()> {
        let mut seeds = Vec::new();
        for node in self.nodes.values() {
            for p in &node.spec.parameters {
                if let Some(v) = &p.value {
                    if v.value_type() != p.ty {
                        return Err(Error::Structure(format!(
                            "node `{}` parameter `{}`: initial value type {} does not match {}",
                            node.spec.id,
                            p.name,
                            v.value_type(),
                            p.ty
                        )));
                    }
                    seeds.push(((node.spec.id.clone(), p.name.clone(), p.kind), v.clone()));
                }
            }
        }
        self.blackboard.extend(seeds);
        Ok(())
    }

    /// Validates edge endpoints and stores the edges in propagation order.
    fn adopt_edges(&mut self, edges: Vec<DataEdgeSpec>) -> Result<()> {
        let mut dests = BTreeSet::new();
        for e in &edges {
            let from_decl = self.find_decl(&e.from.node, &e.from.param)?;
            let to_decl = self.find_decl(&e.to.node, &e.to.param)?;
            if from_decl.ty != e.ty || to_decl.ty != e.ty {
                return Err(Error::DataGraph(format!(
                    "edge {}..{} -> {}..{}: endpoint types {} / {} do not match edge type {}",
                    e.from.node, e.from.param, e.to.node, e.to.param, from_decl.ty, to_decl.ty, e.ty
                )));
            }
            if to_decl.kind == ParamKind::Option {
                return Err(Error::DataGraph(format!(
                    "edge destination {}..{} is an option slot",
                    e.to.node, e.to.param
                )));
            }
            if !dests.insert((e.to.node.clone(), e.to.param.clone())) {
                return Err(Error::DataGraph(format!(
                    "slot {}..{} is written by more than one edge",
                    e.to.node, e.to.param
                )));
            }
        }
        self.edges = toposort_edges(edges)?;
        Ok(())
    }

    fn find_decl(&self, node: &str, param: &str) -> Result<&ParamDecl> {
        let n = self
            .nodes
            .get(node)
            .ok_or_else(|| Error::DataGraph(format!("edge references unknown node `{node}`")))?;
        // Prefer output slots as edge sources, inputs as destinations; a
        // name is unique within one kind.
        n.spec
            .parameters
            .iter()
            .find(|p| p.name == param)
            .ok_or_else(|| {
                Error::DataGraph(format!("node `{node}` has no parameter `{param}`"))
            })
    }

    // ------------------------------------------------------------------
    // Accessors
    // ------------------------------------------------------------------

    pub fn root(&self) -> Option<&str> {
        self.root.as_deref()
    }

    pub fn node(&self, id: &str) -> Result<&NodeRuntime> {
        self.nodes.get(id).ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn node_mut(&mut self, id: &str) -> Result<&mut NodeRuntime> {
        self.nodes.get_mut(id).ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &String> {
        self.nodes.keys()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeRuntime> {
        self.nodes.values()
    }

    pub fn nodes_mut(&mut self) -> impl Iterator<Item = &mut NodeRuntime> {
        self.nodes.values_mut()
    }

    pub fn state(&self, id: &str) -> Result<NodeState> {
        Ok(self.node(id)?.state)
    }

    pub fn root_state(&self) -> NodeState {
        match &self.root {
            Some(r) => self.nodes[r].state,
            None => NodeState::Idle,
        }
    }

    /// Whether this tree contains a remote capability slot, which makes the
    /// robot a valid remote execution location.
    pub fn has_slot(&self) -> bool {
        self.nodes.values().any(|n| n.spec.kind == NodeKind::RemoteCapabilitySlot)
    }

    pub fn edges(&self) -> &[DataEdgeSpec] {
        &self.edges
    }

    pub fn blackboard(&self) -> &BTreeMap<SlotKey, Value> {
        &self.blackboard
    }

    pub fn get_param(&self, node: &str, kind: ParamKind, name: &str) -> Option<&Value> {
        self.blackboard.get(&(node.to_string(), name.to_string(), kind))
    }

    /// Writes a parameter slot; the declaration must exist and the type must
    /// match.
    pub fn set_param(
        &mut self,
        node: &str,
        kind: ParamKind,
        name: &str,
        value: Value,
    ) -> Result<()> {
        let decl = self
            .node(node)?
            .spec
            .parameters
            .iter()
            .find(|p| p.kind == kind && p.name == name)
            .cloned()
            .ok_or_else(|| {
                Error::Structure(format!("node `{node}` declares no {kind} `{name}`"))
            })?;
        if decl.ty != value.value_type() {
            return Err(Error::Structure(format!(
                "node `{node}` {kind} `{name}`: value type {} does not match {}",
                value.value_type(),
                decl.ty
            )));
        }
        self.blackboard.insert((node.to_string(), name.to_string(), kind), value);
        Ok(())
    }

    /// All current values of a node's slots of one kind, in declaration
    /// order.
    pub fn params_of(&self, node: &str, kind: ParamKind) -> Vec<(String, Value)> {
        let Ok(n) = self.node(node) else { return Vec::new() };
        n.spec
            .parameters
            .iter()
            .filter(|p| p.kind == kind)
            .filter_map(|p| {
                self.get_param(node, kind, &p.name).map(|v| (p.name.clone(), v.clone()))
            })
            .collect()
    }

    /// Allocates a fresh environment-local world request id.
    pub fn alloc_request_id(&mut self) -> u64 {
        let id = self.next_request;
        self.next_request += 1;
        id
    }

    /// Forces a node into a state, fixing dependent runtime fields so the
    /// result is internally consistent. Meant for tests and tooling that
    /// exercise the transition tables directly.
    pub fn force_state(&mut self, id: &str, state: NodeState) -> Result<()> {
        let node = self.node_mut(id)?;
        node.state = state;
        if let Some(cap) = node.cap.as_mut() {
            match state {
                NodeState::Idle | NodeState::Shutdown | NodeState::Error | NodeState::Unassigned => {
                    cap.assignment = None;
                }
                NodeState::Paused => {
                    if cap.resume.is_none() {
                        cap.resume = Some(NodeState::Running);
                    }
                    if cap.assignment.is_none() {
                        cap.assignment = Some(placeholder_assignment());
                    }
                }
                NodeState::Assigned
                | NodeState::Running
                | NodeState::Succeeded
                | NodeState::Failed => {
                    if cap.assignment.is_none() {
                        cap.assignment = Some(placeholder_assignment());
                    }
                }
                NodeState::Uninitialized => {
                    cap.assignment = None;
                }
            }
        }
        Ok(())
    }

    /// Collects world request ids still pending anywhere in this environment
    /// tree, including nested execution environments.
    pub fn pending_requests(&self) -> Vec<u64> {
        let mut out = Vec::new();
        for node in self.nodes.values() {
            if let Some(leaf) = &node.leaf {
                if let Some(r) = leaf.pending_request {
                    out.push(r);
                }
            }
            if let Some(cap) = &node.cap {
                if let Some(env) = &cap.impl_env {
                    out.extend(env.pending_requests());
                }
            }
            if let Some(slot) = &node.slot {
                if let Some(env) = &slot.child_env {
                    out.extend(env.pending_requests());
                }
            }
        }
        out
    }

    /// Takes every orphaned world request id from this environment tree,
    /// including nested execution environments.
    pub fn drain_orphans(&mut self) -> Vec<u64> {
        let mut out = Vec::new();
        for node in self.nodes.values_mut() {
            out.append(&mut node.orphaned_requests);
            if let Some(cap) = node.cap.as_mut() {
                if let Some(env) = cap.impl_env.as_mut() {
                    out.extend(env.drain_orphans());
                }
            }
            if let Some(slot) = node.slot.as_mut() {
                if let Some(env) = slot.child_env.as_mut() {
                    out.extend(env.drain_orphans());
                }
            }
        }
        out
    }

    /// Snapshot of node set plus blackboard, used to check that hosting a
    /// remote execution leaves no traces.
    pub fn structural_snapshot(&self) -> (Vec<(String, NodeState)>, BTreeMap<SlotKey, Value>) {
        let nodes = self.nodes.iter().map(|(id, n)| (id.clone(), n.state)).collect();
        (nodes, self.blackboard.clone())
    }
}

fn placeholder_assignment() -> Assignment {
    Assignment {
        implementation: "forced".into(),
        executor: WorldId::new("forced"),
        task: None,
        cost: 0.0,
    }
}

fn new_runtime(spec: NodeSpec) -> NodeRuntime {
    let kind = spec.kind;
    NodeRuntime {
        spec,
        state: NodeState::Uninitialized,
        ticks_received: 0,
        parallel_done: BTreeMap::new(),
        orphaned_requests: Vec::new(),
        leaf: (kind == NodeKind::ActionLeaf).then(LeafRuntime::default),
        cap: (kind == NodeKind::Capability).then(CapRuntime::default),
        slot: (kind == NodeKind::RemoteCapabilitySlot).then(SlotRuntime::default),
        decorator: (kind == NodeKind::Decorator).then(DecoratorRuntime::default),
    }
}

impl NodeSpec {
    fn spec_is_leaf_with_children(&self) -> bool {
        self.kind.is_leaf() && !self.children.is_empty()
    }
}

fn parse_behavior(spec: &NodeSpec) -> Result<LeafBehavior> {
    let name = spec.option_str("behavior").unwrap_or("succeed");
    let behavior = match name {
        "succeed" => LeafBehavior::Succeed,
        "fail" => LeafBehavior::Fail,
        "run_for" => {
            let ticks = spec
                .option_value("ticks")
                .and_then(|v| v.as_int())
                .unwrap_or(1);
            LeafBehavior::RunFor(ticks.max(0) as u32)
        }
        "move_to" => LeafBehavior::MoveTo,
        "world_task" => {
            let op = spec.option_str("op").ok_or_else(|| {
                Error::Structure(format!("leaf `{}`: world_task needs an `op` option", spec.id))
            })?;
            LeafBehavior::WorldTask(op.to_string())
        }
        "check_eq" => {
            let param = spec.option_str("param").unwrap_or("value").to_string();
            let expect = spec
                .option_str("expect")
                .ok_or_else(|| {
                    Error::Structure(format!(
                        "leaf `{}`: check_eq needs an `expect` option",
                        spec.id
                    ))
                })?
                .to_string();
            LeafBehavior::CheckEq { param, expect }
        }
        other => {
            return Err(Error::Structure(format!(
                "leaf `{}`: unknown behavior `{other}`",
                spec.id
            )))
        }
    };
    Ok(behavior)
}

/// Orders edges so that a pass in order settles chains; rejects cycles.
fn toposort_edges(edges: Vec<DataEdgeSpec>) -> Result<Vec<DataEdgeSpec>> {
    // Edge b depends on edge a when a writes the slot b reads.
    let n = edges.len();
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for (i, a) in edges.iter().enumerate() {
        for (j, b) in edges.iter().enumerate() {
            if i != j && a.to == b.from {
                dependents[i].push(j);
                indegree[j] += 1;
            }
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    ready.sort();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &j in &dependents[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(j);
            }
        }
        ready.sort();
    }
    if order.len() != n {
        return Err(Error::DataGraph("data graph contains a cycle".into()));
    }
    Ok(order.into_iter().map(|i| edges[i].clone()).collect())
}

/// Legality helper: an action is legal when the table maps it to something
/// other than the error state.
pub fn action_is_legal(family: NodeFamily, state: NodeState, action: NodeAction) -> bool {
    allowed_transitions(family, state, action) != [NodeState::Error]
}
