//! TOSCA Simple Profile data model: entity types and topology templates.

mod registry;
pub mod scalar;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use registry::{resolve_registry, InterfaceOps, RegistryError, ToscaTypeRegistry};

pub const NODE_ROOT: &str = "tosca.nodes.Root";
pub const RELATIONSHIP_ROOT: &str = "tosca.relationships.Root";
pub const CAPABILITY_ROOT: &str = "tosca.capabilities.Root";
pub const INTERFACE_ROOT: &str = "tosca.interfaces.Root";
pub const DATATYPE_ROOT: &str = "tosca.datatypes.Root";

pub const HOSTED_ON: &str = "tosca.relationships.HostedOn";
pub const CONNECTS_TO: &str = "tosca.relationships.ConnectsTo";
pub const DEPENDS_ON: &str = "tosca.relationships.DependsOn";
pub const ATTACHES_TO: &str = "tosca.relationships.AttachesTo";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeClass {
    Node,
    Relationship,
    Capability,
    Interface,
    Datatype,
}

impl TypeClass {
    pub const ALL: [TypeClass; 5] =
        [TypeClass::Node, TypeClass::Relationship, TypeClass::Capability, TypeClass::Interface, TypeClass::Datatype];

    /// Section of a type definition document holding this class.
    pub fn section(self) -> &'static str {
        match self {
            TypeClass::Node => "node_types",
            TypeClass::Relationship => "relationship_types",
            TypeClass::Capability => "capability_types",
            TypeClass::Interface => "interface_types",
            TypeClass::Datatype => "data_types",
        }
    }

    pub fn from_section(section: &str) -> Option<Self> {
        TypeClass::ALL.into_iter().find(|c| c.section() == section)
    }

    pub fn root(self) -> &'static str {
        match self {
            TypeClass::Node => NODE_ROOT,
            TypeClass::Relationship => RELATIONSHIP_ROOT,
            TypeClass::Capability => CAPABILITY_ROOT,
            TypeClass::Interface => INTERFACE_ROOT,
            TypeClass::Datatype => DATATYPE_ROOT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToscaConstraint {
    ValidValues(Vec<Value>),
    GreaterOrEqual(Value),
    LessOrEqual(Value),
    InRange(Value, Value),
    MinLength(u64),
    MaxLength(u64),
    Pattern(String),
}

impl ToscaConstraint {
    pub fn operator(&self) -> &'static str {
        match self {
            ToscaConstraint::ValidValues(_) => "valid_values",
            ToscaConstraint::GreaterOrEqual(_) => "greater_or_equal",
            ToscaConstraint::LessOrEqual(_) => "less_or_equal",
            ToscaConstraint::InRange(..) => "in_range",
            ToscaConstraint::MinLength(_) => "min_length",
            ToscaConstraint::MaxLength(_) => "max_length",
            ToscaConstraint::Pattern(_) => "pattern",
        }
    }
}

/// A property or attribute definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToscaPropertyDef {
    pub name: String,
    pub tosca_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_schema: Option<String>,
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ToscaConstraint>,
}

impl ToscaPropertyDef {
    pub fn new(name: impl Into<String>, tosca_type: impl Into<String>) -> Self {
        ToscaPropertyDef {
            name: name.into(),
            tosca_type: tosca_type.into(),
            entry_schema: None,
            required: true,
            default: None,
            description: None,
            constraints: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrences {
    pub min: u64,
    /// `None` stands for `UNBOUNDED`.
    pub max: Option<u64>,
}

impl Default for Occurrences {
    fn default() -> Self {
        Occurrences { min: 1, max: Some(1) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToscaRequirementDef {
    pub name: String,
    pub capability: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relationship: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occurrences: Option<Occurrences>,
}

impl ToscaRequirementDef {
    pub fn occurrences(&self) -> Occurrences {
        self.occurrences.unwrap_or_default()
    }
}

/// An interface declared on a node or relationship type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InterfaceDecl {
    pub type_name: String,
    /// Operations declared inline, in addition to those of the interface type.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToscaTypeDef {
    pub name: String,
    pub type_class: TypeClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub properties: Vec<ToscaPropertyDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<ToscaPropertyDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requirements: Vec<ToscaRequirementDef>,
    /// Capability name to capability type.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub capabilities: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub interfaces: BTreeMap<String, InterfaceDecl>,
    /// Operation names of an interface type.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operations: Vec<String>,
}

impl ToscaTypeDef {
    pub fn new(name: impl Into<String>, type_class: TypeClass) -> Self {
        ToscaTypeDef {
            name: name.into(),
            type_class,
            derived_from: None,
            description: None,
            properties: Vec::new(),
            attributes: Vec::new(),
            requirements: Vec::new(),
            capabilities: BTreeMap::new(),
            interfaces: BTreeMap::new(),
            operations: Vec::new(),
        }
    }

    pub fn derived_from(mut self, parent: impl Into<String>) -> Self {
        self.derived_from = Some(parent.into());
        self
    }
}

/// A requirement of a node template bound to a target template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RequirementBinding {
    pub requirement: String,
    pub target: String,
    /// Relationship type, when given directly or through a relationship
    /// template.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relationship: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relationship_template: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToscaNodeTemplate {
    pub name: String,
    pub type_name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub property_values: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requirement_bindings: Vec<RequirementBinding>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub capability_property_values: BTreeMap<String, BTreeMap<String, Value>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToscaRelationshipTemplate {
    pub name: String,
    pub type_name: String,
    /// Filled in from the first requirement binding using this template.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_template: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub property_values: BTreeMap<String, Value>,
}

/// A group template, kept as parsed. Groups are not mapped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawGroup {
    pub name: String,
    pub body: Value,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToscaTopology {
    /// `metadata.template_name`, when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, ToscaPropertyDef>,
    #[serde(default)]
    pub node_templates: Vec<ToscaNodeTemplate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relationship_templates: Vec<ToscaRelationshipTemplate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<RawGroup>,
}

impl ToscaTopology {
    pub fn node_template(&self, name: &str) -> Option<&ToscaNodeTemplate> {
        self.node_templates.iter().find(|t| t.name == name)
    }

    pub fn relationship_template(&self, name: &str) -> Option<&ToscaRelationshipTemplate> {
        self.relationship_templates.iter().find(|t| t.name == name)
    }
}
