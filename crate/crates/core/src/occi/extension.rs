use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::constraint::ConstraintDef;
use super::datatype::NamedDataType;
use super::ids;

/// Base of kinds, mixins and actions: identification plus attribute
/// declarations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub term: String,
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<AttributeDef>,
}

impl Category {
    pub fn new(scheme: impl Into<String>, term: impl Into<String>) -> Self {
        Category { term: term.into(), scheme: scheme.into(), title: None, attributes: Vec::new() }
    }

    /// `scheme` followed by `term`, e.g. `http://schemas.ogf.org/occi/infrastructure#compute`.
    pub fn id(&self) -> String {
        ids::category_id(&self.scheme, &self.term)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

/// Returns true if `term` is a valid category term.
pub fn is_valid_term(term: &str) -> bool {
    let mut chars = term.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub datatype: String,
    #[serde(default)]
    pub required: bool,
    #[serde(default)]
    pub mutable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl AttributeDef {
    pub fn new(name: impl Into<String>, datatype: impl Into<String>) -> Self {
        AttributeDef {
            name: name.into(),
            datatype: datatype.into(),
            required: false,
            mutable: true,
            default: None,
            description: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionDef {
    #[serde(flatten)]
    pub category: Category,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<AttributeDef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityRole {
    Resource,
    Link,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Kind {
    #[serde(flatten)]
    pub category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<ActionDef>,
    pub entity_role: EntityRole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixin {
    #[serde(flatten)]
    pub category: Category,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depends: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub applies: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<ActionDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintDef>,
}

impl Mixin {
    pub fn new(category: Category) -> Self {
        Mixin { category, depends: Vec::new(), applies: Vec::new(), actions: Vec::new(), constraints: Vec::new() }
    }

    pub fn id(&self) -> String {
        self.category.id()
    }
}

/// A named set of kinds, mixins and datatypes for one domain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OcciExtension {
    pub name: String,
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub imports: Vec<String>,
    #[serde(default)]
    pub kinds: Vec<Kind>,
    #[serde(default)]
    pub mixins: Vec<Mixin>,
    #[serde(default)]
    pub datatypes: Vec<NamedDataType>,
}

impl OcciExtension {
    pub fn kind(&self, id: &str) -> Option<&Kind> {
        self.kinds.iter().find(|k| k.category.id() == id)
    }

    pub fn mixin(&self, id: &str) -> Option<&Mixin> {
        self.mixins.iter().find(|m| m.id() == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_syntax() {
        assert!(is_valid_term("tosca_nodes_Compute"));
        assert!(is_valid_term("_x1"));
        assert!(!is_valid_term("tosca.nodes.Compute"));
        assert!(!is_valid_term("1abc"));
        assert!(!is_valid_term(""));
    }

    #[test]
    fn kind_json_shape() {
        let json = r#"{"term":"compute","scheme":"http://schemas.ogf.org/occi/infrastructure#",
            "parent":"http://schemas.ogf.org/occi/core#resource","entityRole":"resource"}"#;
        let kind: Kind = serde_json::from_str(json).unwrap();
        assert_eq!(kind.category.id(), ids::COMPUTE);
        assert_eq!(kind.entity_role, EntityRole::Resource);
    }
}
