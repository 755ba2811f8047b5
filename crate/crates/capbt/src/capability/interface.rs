//! Capability interfaces: the named, typed abstractions that auctions bind
//! to robot-specific implementations at runtime.

use crate::error::{Error, Result};
use crate::value::ValueType;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One typed parameter of a capability interface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceParam {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ValueType,
    /// Optional in catalog files; when present it must match the list the
    /// parameter sits in and can never be `option`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

impl InterfaceParam {
    pub fn new(name: &str, ty: ValueType) -> Self {
        InterfaceParam { name: name.into(), ty, kind: None }
    }
}

/// A capability interface: the auctionable unit.
///
/// Interfaces are replicated team-wide; implementations stay on their owner
/// robot. Marking an interface `required_local` forbids remote binding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityInterface {
    pub name: String,
    #[serde(default)]
    pub inputs: Vec<InterfaceParam>,
    #[serde(default)]
    pub outputs: Vec<InterfaceParam>,
    #[serde(default)]
    pub required_local: bool,
}

impl CapabilityInterface {
    pub fn new(name: &str) -> Self {
        CapabilityInterface {
            name: name.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            required_local: false,
        }
    }

    pub fn with_input(mut self, name: &str, ty: ValueType) -> Self {
        self.inputs.push(InterfaceParam::new(name, ty));
        self
    }

    pub fn with_output(mut self, name: &str, ty: ValueType) -> Self {
        self.outputs.push(InterfaceParam::new(name, ty));
        self
    }

    pub fn required_local(mut self) -> Self {
        self.required_local = true;
        self
    }

    /// Checks the declared parameter kinds. Capabilities cannot carry option
    /// parameters, so `kind: "option"` anywhere is rejected.
    pub fn validate(&self) -> Result<()> {
        for (list, expect) in [(&self.inputs, "input"), (&self.outputs, "output")] {
            for p in list {
                match p.kind.as_deref() {
                    None => {}
                    Some(k) if k == expect => {}
                    Some("option") => {
                        return Err(Error::Capability(
                            self.name.clone(),
                            format!("parameter `{}` declared as option", p.name),
                        ))
                    }
                    Some(other) => {
                        return Err(Error::Capability(
                            self.name.clone(),
                            format!(
                                "parameter `{}` declared as `{other}` inside the {expect} list",
                                p.name
                            ),
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    /// Signature equality used to detect conflicting registrations.
    pub fn same_signature(&self, other: &CapabilityInterface) -> bool {
        let strip = |ps: &[InterfaceParam]| -> Vec<(String, ValueType)> {
            let mut v: Vec<_> = ps.iter().map(|p| (p.name.clone(), p.ty)).collect();
            v.sort();
            v
        };
        self.name == other.name
            && strip(&self.inputs) == strip(&other.inputs)
            && strip(&self.outputs) == strip(&other.outputs)
            && self.required_local == other.required_local
    }
}

/// The team-wide interface catalog keyed by name.
pub type InterfaceCatalog = BTreeMap<String, CapabilityInterface>;

/// Loads a catalog from its JSON file representation (a list of interfaces).
pub fn catalog_from_list(list: Vec<CapabilityInterface>) -> Result<InterfaceCatalog> {
    let mut catalog = InterfaceCatalog::new();
    for ci in list {
        ci.validate()?;
        if let Some(prev) = catalog.get(&ci.name) {
            if !prev.same_signature(&ci) {
                return Err(Error::Capability(
                    ci.name.clone(),
                    "duplicate interface name with a different signature".into(),
                ));
            }
        }
        catalog.insert(ci.name.clone(), ci);
    }
    Ok(catalog)
}
