//! IO bridge synchronization between a capability node and the environment
//! of its implementation.
//!
//! The input bridge publishes the values passed to the capability as
//! outputs inside the implementation environment; the output bridge takes
//! inputs inside the implementation environment and surfaces them as the
//! capability's outputs. After every tick of a running capability the
//! bridged slots hold equal values on both sides.

use crate::bt::env::TreeEnvironment;
use crate::bt::node::{NodeKind, ParamKind};
use crate::error::{Error, Result};
use crate::value::Value;

/// Finds the unique bridge node of the given kind in an implementation
/// environment.
pub fn find_bridge(env: &TreeEnvironment, kind: NodeKind) -> Result<String> {
    let mut found = None;
    for node in env.nodes() {
        if node.spec.kind == kind {
            if found.is_some() {
                return Err(Error::Structure(format!("more than one {kind} in implementation")));
            }
            found = Some(node.spec.id.clone());
        }
    }
    found.ok_or_else(|| Error::Structure(format!("implementation is missing its {kind}")))
}

/// Pushes capability input values onto the input bridge's output slots.
pub fn sync_in(impl_env: &mut TreeEnvironment, inputs: &[(String, Value)]) -> Result<()> {
    let bridge = find_bridge(impl_env, NodeKind::IoInputBridge)?;
    for (name, value) in inputs {
        impl_env.set_param(&bridge, ParamKind::Output, name, value.clone())?;
    }
    Ok(())
}

/// Pulls the output bridge's input slots, to surface as capability outputs.
pub fn sync_out(impl_env: &TreeEnvironment) -> Result<Vec<(String, Value)>> {
    let bridge = find_bridge(impl_env, NodeKind::IoOutputBridge)?;
    Ok(impl_env.params_of(&bridge, ParamKind::Input))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::env::ImplMeta;
    use crate::bt::node::{DataEdgeSpec, NodeSpec, PortRef, TreeSpec};
    use crate::capability::interface::{catalog_from_list, CapabilityInterface};
    use crate::ids::WorldId;
    use crate::value::ValueType;
    use std::collections::BTreeMap;

    fn impl_env() -> TreeEnvironment {
        let catalog = catalog_from_list(vec![CapabilityInterface::new("echo")
            .with_input("x", ValueType::Int)
            .with_output("y", ValueType::Int)])
        .unwrap();
        let spec = TreeSpec::new(
            "root",
            vec![
                NodeSpec::new("root", NodeKind::Sequence).with_children(&["in", "work", "out"]),
                NodeSpec::new("in", NodeKind::IoInputBridge),
                NodeSpec::new("work", NodeKind::ActionLeaf)
                    .with_option("behavior", "succeed")
                    .with_param(crate::bt::node::ParamDecl::new(
                        "x",
                        crate::bt::node::ParamKind::Input,
                        ValueType::Int,
                    )),
                NodeSpec::new("out", NodeKind::IoOutputBridge),
            ],
        )
        .with_edges(vec![
            DataEdgeSpec::new(PortRef::new("in", "x"), PortRef::new("work", "x"), ValueType::Int),
            DataEdgeSpec::new(PortRef::new("work", "x"), PortRef::new("out", "y"), ValueType::Int),
        ]);
        TreeEnvironment::build(
            &spec,
            WorldId::new("w"),
            &catalog,
            Some(ImplMeta {
                interface: "echo".into(),
                implementation: "echo_impl".into(),
                expected_duration: 1.0,
                extra_params: BTreeMap::new(),
            }),
        )
        .unwrap()
    }

    #[test]
    fn input_bridge_republishes_capability_inputs() {
        let mut env = impl_env();
        sync_in(&mut env, &[("x".into(), Value::Int(3))]).unwrap();
        assert_eq!(
            env.get_param("in", ParamKind::Output, "x"),
            Some(&Value::Int(3))
        );
    }

    #[test]
    fn output_bridge_surfaces_implementation_outputs() {
        let mut env = impl_env();
        env.set_param("out", ParamKind::Input, "y", Value::Int(9)).unwrap();
        let outs = sync_out(&env).unwrap();
        assert_eq!(outs, vec![("y".to_string(), Value::Int(9))]);
    }

    #[test]
    fn no_parameters_means_noop_sync() {
        let catalog = catalog_from_list(vec![CapabilityInterface::new("nop")]).unwrap();
        let spec = TreeSpec::new(
            "root",
            vec![
                NodeSpec::new("root", NodeKind::Sequence).with_children(&["in", "out"]),
                NodeSpec::new("in", NodeKind::IoInputBridge),
                NodeSpec::new("out", NodeKind::IoOutputBridge),
            ],
        );
        let mut env = TreeEnvironment::build(
            &spec,
            WorldId::new("w"),
            &catalog,
            Some(ImplMeta {
                interface: "nop".into(),
                implementation: "nop_impl".into(),
                expected_duration: 0.0,
                extra_params: BTreeMap::new(),
            }),
        )
        .unwrap();
        sync_in(&mut env, &[]).unwrap();
        assert!(sync_out(&env).unwrap().is_empty());
    }

    #[test]
    fn missing_bridge_is_reported() {
        let catalog = catalog_from_list(vec![CapabilityInterface::new("nop")]).unwrap();
        let spec = TreeSpec::new(
            "root",
            vec![
                NodeSpec::new("root", NodeKind::Sequence).with_children(&["in"]),
                NodeSpec::new("in", NodeKind::IoInputBridge),
            ],
        );
        let env = TreeEnvironment::build(
            &spec,
            WorldId::new("w"),
            &catalog,
            Some(ImplMeta {
                interface: "nop".into(),
                implementation: "nop_impl".into(),
                expected_duration: 0.0,
                extra_params: BTreeMap::new(),
            }),
        )
        .unwrap();
        assert!(sync_out(&env).is_err());
    }
}
