//! Capability implementations: robot-specific subtrees realizing an
//! interface, with preconditions and an owning world state.

use crate::bt::env::{ImplMeta, TreeEnvironment};
use crate::bt::node::{NodeKind, TreeSpec};
use crate::capability::interface::InterfaceCatalog;
use crate::error::{Error, Result};
use crate::ids::WorldId;
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Where a precondition's interface must have completed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionScope {
    /// Completed successfully on the robot that owns the implementation.
    Local,
    /// Completed successfully on some other live team member.
    Remote,
}

/// A requirement that a named interface ran successfully before the
/// implementation may start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precondition {
    pub interface: String,
    pub scope: PreconditionScope,
}

/// A robot-specific implementation of a capability interface.
#[derive(Debug, Clone, PartialEq)]
pub struct CapabilityImplementation {
    pub id: String,
    pub interface: String,
    pub owner: WorldId,
    pub tree: TreeSpec,
    pub preconditions: Vec<Precondition>,
    pub expected_duration: f64,
    pub extra_params: BTreeMap<String, Value>,
}

impl CapabilityImplementation {
    /// Validates the implementation against the catalog: the interface must
    /// exist and the subtree must carry exactly one input and one output
    /// bridge.
    pub fn validate(&self, catalog: &InterfaceCatalog) -> Result<()> {
        if !catalog.contains_key(&self.interface) {
            return Err(Error::Capability(
                self.id.clone(),
                format!("unknown interface `{}`", self.interface),
            ));
        }
        for kind in [NodeKind::IoInputBridge, NodeKind::IoOutputBridge] {
            let count = self.tree.nodes.iter().filter(|n| n.kind == kind).count();
            if count != 1 {
                return Err(Error::Capability(
                    self.id.clone(),
                    format!("implementation needs exactly one {kind}, found {count}"),
                ));
            }
        }
        // A full build catches everything else (types, edges, bridges).
        self.build_env(self.owner.clone(), catalog)?;
        Ok(())
    }

    /// Builds a fresh execution environment for this implementation in the
    /// given world.
    pub fn build_env(&self, world: WorldId, catalog: &InterfaceCatalog) -> Result<TreeEnvironment> {
        TreeEnvironment::build(
            &self.tree,
            world,
            catalog,
            Some(ImplMeta {
                interface: self.interface.clone(),
                implementation: self.id.clone(),
                expected_duration: self.expected_duration,
                extra_params: self.extra_params.clone(),
            }),
        )
    }
}

/// What the precondition check can see: which interfaces completed
/// successfully on this robot, and which completed on each nearby robot.
#[derive(Debug, Clone, Default)]
pub struct PreconditionContext {
    pub local_completed: BTreeSet<String>,
    pub nearby_completed: BTreeMap<WorldId, BTreeSet<String>>,
}

/// Every local-scope precondition must name an interface completed on this
/// robot; every remote-scope one must name an interface completed on some
/// nearby robot. An implementation failing this check must not tick any of
/// its nodes.
pub fn validate_preconditions(
    implementation: &CapabilityImplementation,
    ctx: &PreconditionContext,
) -> bool {
    implementation.preconditions.iter().all(|pre| match pre.scope {
        PreconditionScope::Local => ctx.local_completed.contains(&pre.interface),
        PreconditionScope::Remote => ctx
            .nearby_completed
            .values()
            .any(|set| set.contains(&pre.interface)),
    })
}

/// What executability needs to know about the team.
#[derive(Debug, Clone, Default)]
pub struct TeamView {
    /// Live robots and whether each one's tree contains a remote capability
    /// slot.
    pub slots: BTreeMap<WorldId, bool>,
}

/// An implementation is executable for a capability when it lives on the
/// capability's own robot, or when remote binding is allowed and the owner
/// robot offers a remote capability slot.
pub fn executable(
    capability_world: &WorldId,
    required_local: bool,
    implementation: &CapabilityImplementation,
    team: &TeamView,
) -> bool {
    if implementation.owner == *capability_world {
        return true;
    }
    if required_local {
        return false;
    }
    team.slots.get(&implementation.owner).copied().unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::node::NodeSpec;
    use crate::capability::interface::{catalog_from_list, CapabilityInterface};

    fn simple_impl(owner: &str) -> CapabilityImplementation {
        CapabilityImplementation {
            id: format!("{owner}_nop"),
            interface: "nop".into(),
            owner: WorldId::new(owner),
            tree: TreeSpec::new(
                "root",
                vec![
                    NodeSpec::new("root", NodeKind::Sequence).with_children(&["in", "out"]),
                    NodeSpec::new("in", NodeKind::IoInputBridge),
                    NodeSpec::new("out", NodeKind::IoOutputBridge),
                ],
            ),
            preconditions: Vec::new(),
            expected_duration: 1.0,
            extra_params: BTreeMap::new(),
        }
    }

    fn catalog() -> InterfaceCatalog {
        catalog_from_list(vec![CapabilityInterface::new("nop")]).unwrap()
    }

    #[test]
    fn implementation_without_bridges_rejected() {
        let mut implementation = simple_impl("r1");
        implementation.tree = TreeSpec::new(
            "root",
            vec![NodeSpec::new("root", NodeKind::Sequence).with_children(&["in"]),
                 NodeSpec::new("in", NodeKind::IoInputBridge)],
        );
        assert!(implementation.validate(&catalog()).is_err());
    }

    #[test]
    fn valid_implementation_passes() {
        assert!(simple_impl("r1").validate(&catalog()).is_ok());
    }

    #[test]
    fn same_robot_implementation_is_executable() {
        let team = TeamView::default();
        assert!(executable(&WorldId::new("r1"), false, &simple_impl("r1"), &team));
    }

    #[test]
    fn remote_needs_a_slot_on_the_owner() {
        let mut team = TeamView::default();
        team.slots.insert(WorldId::new("r2"), false);
        assert!(!executable(&WorldId::new("r1"), false, &simple_impl("r2"), &team));
        team.slots.insert(WorldId::new("r2"), true);
        assert!(executable(&WorldId::new("r1"), false, &simple_impl("r2"), &team));
    }

    #[test]
    fn required_local_excludes_remote_owners() {
        let mut team = TeamView::default();
        team.slots.insert(WorldId::new("r2"), true);
        assert!(!executable(&WorldId::new("r1"), true, &simple_impl("r2"), &team));
    }

    #[test]
    fn empty_precondition_set_is_true() {
        let ctx = PreconditionContext::default();
        assert!(validate_preconditions(&simple_impl("r1"), &ctx));
    }

    #[test]
    fn precondition_scope_enumeration() {
        // All six (scope, where-completed) combinations against the oracle:
        // local passes only when completed here, remote only when completed
        // on a nearby robot.
        let completions = [
            ("here", true, false),
            ("there", false, true),
            ("nowhere", false, false),
        ];
        for scope in [PreconditionScope::Local, PreconditionScope::Remote] {
            for (label, here, there) in completions {
                let mut implementation = simple_impl("r1");
                implementation.preconditions =
                    vec![Precondition { interface: "explore".into(), scope }];
                let mut ctx = PreconditionContext::default();
                if here {
                    ctx.local_completed.insert("explore".into());
                }
                if there {
                    ctx.nearby_completed
                        .entry(WorldId::new("r2"))
                        .or_default()
                        .insert("explore".into());
                }
                let expect = match scope {
                    PreconditionScope::Local => here,
                    PreconditionScope::Remote => there,
                };
                assert_eq!(
                    validate_preconditions(&implementation, &ctx),
                    expect,
                    "{scope:?} completed {label}"
                );
            }
        }
    }
}
