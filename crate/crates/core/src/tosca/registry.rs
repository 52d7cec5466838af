use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ToscaPropertyDef, ToscaRequirementDef, ToscaTypeDef, TypeClass};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("type {0:?} is defined more than once")]
    DuplicateType(String),
    #[error("type {ty:?} derives from unknown type {parent:?}")]
    UnresolvedParent { ty: String, parent: String },
    #[error("type {ty:?} derives from {parent:?}, which is a {parent_class:?} type")]
    ClassMismatch { ty: String, parent: String, parent_class: TypeClass },
    #[error("inheritance cycle: {}", .0.join(" -> "))]
    InheritanceCycle(Vec<String>),
}

/// Operations of one interface of a node or relationship type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceOps {
    pub type_name: String,
    pub operations: Vec<String>,
}

#[derive(Clone, Debug, Default)]
struct Effective {
    properties: Vec<ToscaPropertyDef>,
    attributes: Vec<ToscaPropertyDef>,
    requirements: Vec<ToscaRequirementDef>,
    capabilities: BTreeMap<String, String>,
    interfaces: BTreeMap<String, InterfaceOps>,
}

/// Type definitions closed under `derived_from`, with inherited members
/// precomputed.
#[derive(Clone, Debug, Default)]
pub struct ToscaTypeRegistry {
    types: BTreeMap<String, ToscaTypeDef>,
    effective: BTreeMap<String, Effective>,
}

/// Merges `defs` into `builtins` and resolves the result.
pub fn resolve_registry(
    defs: impl IntoIterator<Item = ToscaTypeDef>,
    builtins: &ToscaTypeRegistry,
) -> Result<ToscaTypeRegistry, RegistryError> {
    let mut all: Vec<ToscaTypeDef> = builtins.types.values().cloned().collect();
    all.extend(defs);
    ToscaTypeRegistry::resolve(all)
}

fn merge_named<T: Clone>(into: &mut Vec<T>, items: &[T], name: impl Fn(&T) -> &str) {
    for item in items {
        match into.iter_mut().find(|e| name(e) == name(item)) {
            Some(slot) => *slot = item.clone(),
            None => into.push(item.clone()),
        }
    }
}

impl ToscaTypeRegistry {
    pub fn resolve(defs: impl IntoIterator<Item = ToscaTypeDef>) -> Result<Self, RegistryError> {
        let mut types = BTreeMap::new();
        for def in defs {
            if types.contains_key(&def.name) {
                return Err(RegistryError::DuplicateType(def.name));
            }
            types.insert(def.name.clone(), def);
        }

        for def in types.values() {
            let mut seen = BTreeSet::new();
            let mut chain = Vec::new();
            let mut current = def;
            loop {
                if !seen.insert(current.name.as_str()) {
                    chain.push(current.name.clone());
                    let start = chain.iter().position(|n| *n == current.name).unwrap_or(0);
                    return Err(RegistryError::InheritanceCycle(chain.split_off(start)));
                }
                chain.push(current.name.clone());
                let Some(parent) = &current.derived_from else { break };
                let next = types.get(parent).ok_or_else(|| RegistryError::UnresolvedParent {
                    ty: current.name.clone(),
                    parent: parent.clone(),
                })?;
                if next.type_class != current.type_class {
                    return Err(RegistryError::ClassMismatch {
                        ty: current.name.clone(),
                        parent: parent.clone(),
                        parent_class: next.type_class,
                    });
                }
                current = next;
            }
        }

        let mut registry = ToscaTypeRegistry { types, effective: BTreeMap::new() };
        let names: Vec<String> = registry.types.keys().cloned().collect();
        for name in &names {
            let eff = registry.compute_effective(name);
            registry.effective.insert(name.clone(), eff);
        }
        Ok(registry)
    }

    fn compute_effective(&self, name: &str) -> Effective {
        let mut eff = Effective::default();
        for def in self.ancestry(name).into_iter().rev() {
            merge_named(&mut eff.properties, &def.properties, |p| &p.name);
            merge_named(&mut eff.attributes, &def.attributes, |p| &p.name);
            merge_named(&mut eff.requirements, &def.requirements, |r| &r.name);
            for (cap, ty) in &def.capabilities {
                eff.capabilities.insert(cap.clone(), ty.clone());
            }
            for (iface, decl) in &def.interfaces {
                let entry = eff
                    .interfaces
                    .entry(iface.clone())
                    .or_insert_with(|| InterfaceOps { type_name: decl.type_name.clone(), operations: Vec::new() });
                entry.type_name = decl.type_name.clone();
                let mut ops = self.interface_type_operations(&decl.type_name);
                ops.extend(decl.operations.iter().cloned());
                for op in ops {
                    if !entry.operations.contains(&op) {
                        entry.operations.push(op);
                    }
                }
            }
        }
        eff
    }

    /// Operations of an interface type including inherited ones.
    pub fn interface_type_operations(&self, name: &str) -> Vec<String> {
        let mut ops: Vec<String> = Vec::new();
        for def in self.ancestry(name).into_iter().rev() {
            for op in &def.operations {
                if !ops.contains(op) {
                    ops.push(op.clone());
                }
            }
        }
        ops
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn get(&self, name: &str) -> Option<&ToscaTypeDef> {
        self.types.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.types.contains_key(name)
    }

    /// All types, sorted by name.
    pub fn types(&self) -> impl Iterator<Item = &ToscaTypeDef> {
        self.types.values()
    }

    pub fn types_of(&self, class: TypeClass) -> impl Iterator<Item = &ToscaTypeDef> {
        self.types.values().filter(move |t| t.type_class == class)
    }

    /// The type followed by its ancestors, nearest first.
    pub fn ancestry(&self, name: &str) -> Vec<&ToscaTypeDef> {
        let mut out: Vec<&ToscaTypeDef> = Vec::new();
        let mut next = self.types.get(name);
        while let Some(def) = next {
            if out.iter().any(|d| d.name == def.name) {
                break;
            }
            out.push(def);
            next = def.derived_from.as_deref().and_then(|p| self.types.get(p));
        }
        out
    }

    pub fn is_a(&self, name: &str, ancestor: &str) -> bool {
        self.ancestry(name).iter().any(|d| d.name == ancestor)
    }

    pub fn effective_properties(&self, name: &str) -> &[ToscaPropertyDef] {
        self.effective.get(name).map(|e| e.properties.as_slice()).unwrap_or(&[])
    }

    pub fn effective_attributes(&self, name: &str) -> &[ToscaPropertyDef] {
        self.effective.get(name).map(|e| e.attributes.as_slice()).unwrap_or(&[])
    }

    pub fn effective_requirements(&self, name: &str) -> &[ToscaRequirementDef] {
        self.effective.get(name).map(|e| e.requirements.as_slice()).unwrap_or(&[])
    }

    pub fn effective_requirement(&self, name: &str, requirement: &str) -> Option<&ToscaRequirementDef> {
        self.effective_requirements(name).iter().find(|r| r.name == requirement)
    }

    pub fn effective_capabilities(&self, name: &str) -> Option<&BTreeMap<String, String>> {
        self.effective.get(name).map(|e| &e.capabilities)
    }

    pub fn effective_interfaces(&self, name: &str) -> Option<&BTreeMap<String, InterfaceOps>> {
        self.effective.get(name).map(|e| &e.interfaces)
    }

    /// Finds the effective property `prop` of `name`.
    pub fn property(&self, name: &str, prop: &str) -> Option<&ToscaPropertyDef> {
        self.effective_properties(name).iter().find(|p| p.name == prop)
    }

    pub fn root_of(&self, name: &str) -> Option<String> {
        self.ancestry(name).last().map(|d| d.name.to_string())
    }
}
