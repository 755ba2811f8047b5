//! Static tree description: node kinds, parameter declarations, and the
//! JSON-loadable tree file format.

use crate::value::{Value, ValueType};
use serde::{Deserialize, Serialize};
use std::fmt;

/// What a node is, which fixes its tick semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Sequence,
    Parallel,
    Selector,
    Decorator,
    ActionLeaf,
    Capability,
    IoInputBridge,
    IoOutputBridge,
    RemoteCapabilitySlot,
}

impl NodeKind {
    /// Leaf kinds carry zero children.
    pub fn is_leaf(&self) -> bool {
        matches!(
            self,
            NodeKind::ActionLeaf
                | NodeKind::Capability
                | NodeKind::IoInputBridge
                | NodeKind::IoOutputBridge
                | NodeKind::RemoteCapabilitySlot
        )
    }

    pub fn is_control_flow(&self) -> bool {
        matches!(
            self,
            NodeKind::Sequence | NodeKind::Parallel | NodeKind::Selector | NodeKind::Decorator
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeKind::Sequence => "sequence",
            NodeKind::Parallel => "parallel",
            NodeKind::Selector => "selector",
            NodeKind::Decorator => "decorator",
            NodeKind::ActionLeaf => "action-leaf",
            NodeKind::Capability => "capability",
            NodeKind::IoInputBridge => "io-input-bridge",
            NodeKind::IoOutputBridge => "io-output-bridge",
            NodeKind::RemoteCapabilitySlot => "remote-capability-slot",
        };
        f.write_str(s)
    }
}

/// Whether a parameter slot is an input, an output, or a static option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Input,
    Output,
    Option,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamKind::Input => "input",
            ParamKind::Output => "output",
            ParamKind::Option => "option",
        };
        f.write_str(s)
    }
}

/// Parameter declaration on a node, optionally with an initial value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub name: String,
    pub kind: ParamKind,
    #[serde(rename = "type")]
    pub ty: ValueType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
}

impl ParamDecl {
    pub fn new(name: &str, kind: ParamKind, ty: ValueType) -> Self {
        ParamDecl { name: name.into(), kind, ty, value: None }
    }

    pub fn with_value(mut self, value: Value) -> Self {
        self.value = Some(value);
        self
    }
}

/// One node of a tree description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub kind: NodeKind,
    /// Capability and slot nodes: the interface they bind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interface: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<ParamDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<String>,
}

impl NodeSpec {
    pub fn new(id: &str, kind: NodeKind) -> Self {
        NodeSpec {
            id: id.into(),
            kind,
            interface: None,
            parameters: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: &[&str]) -> Self {
        self.children = children.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn with_param(mut self, param: ParamDecl) -> Self {
        self.parameters.push(param);
        self
    }

    /// Convenience for string-typed option parameters, the most common leaf
    /// configuration knob.
    pub fn with_option(self, name: &str, value: &str) -> Self {
        self.with_param(
            ParamDecl::new(name, ParamKind::Option, ValueType::Str)
                .with_value(Value::Str(value.into())),
        )
    }

    pub fn with_interface(mut self, interface: &str) -> Self {
        self.interface = Some(interface.into());
        self
    }

    pub fn option_str(&self, name: &str) -> Option<&str> {
        self.parameters
            .iter()
            .find(|p| p.kind == ParamKind::Option && p.name == name)
            .and_then(|p| p.value.as_ref())
            .and_then(|v| v.as_str())
    }

    pub fn option_value(&self, name: &str) -> Option<&Value> {
        self.parameters
            .iter()
            .find(|p| p.kind == ParamKind::Option && p.name == name)
            .and_then(|p| p.value.as_ref())
    }
}

/// One endpoint of a data edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub node: String,
    pub param: String,
}

impl PortRef {
    pub fn new(node: &str, param: &str) -> Self {
        PortRef { node: node.into(), param: param.into() }
    }
}

/// Directed data-graph edge between two parameter slots of identical type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataEdgeSpec {
    pub from: PortRef,
    pub to: PortRef,
    #[serde(rename = "type")]
    pub ty: ValueType,
}

impl DataEdgeSpec {
    pub fn new(from: PortRef, to: PortRef, ty: ValueType) -> Self {
        DataEdgeSpec { from, to, ty }
    }
}

/// A loadable tree description: nodes, tick order via child lists, and the
/// data graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub root: String,
    pub nodes: Vec<NodeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub data_edges: Vec<DataEdgeSpec>,
}

impl TreeSpec {
    pub fn new(root: &str, nodes: Vec<NodeSpec>) -> Self {
        TreeSpec { root: root.into(), nodes, data_edges: Vec::new() }
    }

    pub fn with_edges(mut self, edges: Vec<DataEdgeSpec>) -> Self {
        self.data_edges = edges;
        self
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree spec serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_spec_round_trips_through_json() {
        let spec = TreeSpec::new(
            "root",
            vec![
                NodeSpec::new("root", NodeKind::Sequence).with_children(&["a", "b"]),
                NodeSpec::new("a", NodeKind::ActionLeaf).with_option("behavior", "succeed"),
                NodeSpec::new("b", NodeKind::Capability).with_interface("explore"),
            ],
        )
        .with_edges(vec![DataEdgeSpec::new(
            PortRef::new("a", "out"),
            PortRef::new("b", "target"),
            ValueType::Pose,
        )]);
        let json = spec.to_json();
        let back = TreeSpec::from_json(&json).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn kind_names_use_kebab_case() {
        let json = serde_json::to_string(&NodeKind::RemoteCapabilitySlot).unwrap();
        assert_eq!(json, "\"remote-capability-slot\"");
        let json = serde_json::to_string(&NodeKind::ActionLeaf).unwrap();
        assert_eq!(json, "\"action-leaf\"");
    }
}
