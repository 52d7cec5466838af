//! OCCIware metamodel and instance model.

mod config;
mod constraint;
mod datatype;
mod extension;
mod set;
mod validate;

pub use config::{Entity, EntityRef, Link, MixinBase, OcciConfiguration, Resource};
pub use constraint::{ConstraintDef, ConstraintExpr, Direction};
pub use datatype::{check_datatype, DataType, DataTypeLookup, NamedDataType, NumericKind, RecordField};
pub use extension::{is_valid_term, ActionDef, AttributeDef, Category, EntityRole, Kind, Mixin, OcciExtension};
pub use set::{ExtensionSet, LinkError};
pub use validate::{validate_configuration, ValidationReport, Violation};

/// Well-known schemes and category identifiers of the shipped extensions.
pub mod ids {
    pub const CORE_SCHEME: &str = "http://schemas.ogf.org/occi/core#";
    pub const INFRASTRUCTURE_SCHEME: &str = "http://schemas.ogf.org/occi/infrastructure#";
    pub const MODMACAO_SCHEME: &str = "http://schemas.modmacao.org/occi/platform#";
    pub const SLA_SCHEME: &str = "http://schemas.ogf.org/occi/sla#";
    pub const TOSCA_SCHEME: &str = "http://occiware.org/tosca#";
    pub const PSM_SCHEME: &str = "http://occiware.org/psm#";

    pub const RESOURCE: &str = "http://schemas.ogf.org/occi/core#resource";
    pub const LINK: &str = "http://schemas.ogf.org/occi/core#link";

    pub const COMPUTE: &str = "http://schemas.ogf.org/occi/infrastructure#compute";
    pub const NETWORK: &str = "http://schemas.ogf.org/occi/infrastructure#network";
    pub const STORAGE: &str = "http://schemas.ogf.org/occi/infrastructure#storage";
    pub const STORAGELINK: &str = "http://schemas.ogf.org/occi/infrastructure#storagelink";
    pub const NETWORKINTERFACE: &str = "http://schemas.ogf.org/occi/infrastructure#networkinterface";

    pub const APPLICATION: &str = "http://schemas.modmacao.org/occi/platform#application";
    pub const COMPONENT: &str = "http://schemas.modmacao.org/occi/platform#component";
    pub const COMPONENTLINK: &str = "http://schemas.modmacao.org/occi/platform#componentlink";
    pub const PLACEMENTLINK: &str = "http://schemas.modmacao.org/occi/platform#placementlink";

    pub const MANAGEMENT_NETWORK: &str = "http://occiware.org/psm#management_network";
    pub const RUNTIME_ID: &str = "http://occiware.org/psm#runtime_id";
    pub const COMPUTE_DEFAULTS: &str = "http://occiware.org/psm#compute_defaults";

    /// Attribute holding the identifier assigned by the cloud provider.
    pub const PROVIDER_ID_ATTRIBUTE: &str = "providerId";

    /// Attributes maintained by the runtime rather than the designer. They are
    /// ignored when desired and current state are compared.
    pub fn is_runtime_attribute(name: &str) -> bool {
        name == PROVIDER_ID_ATTRIBUTE || name.ends_with(".state")
    }

    /// Joins a scheme (ending in `#`) and a term into a category identifier.
    pub fn category_id(scheme: &str, term: &str) -> alloc::string::String {
        let mut id = alloc::string::String::with_capacity(scheme.len() + term.len());
        id.push_str(scheme);
        id.push_str(term);
        id
    }

    /// Splits a category identifier into `(scheme, term)`.
    pub fn split_category_id(id: &str) -> Option<(&str, &str)> {
        let hash = id.rfind('#')?;
        Some((&id[..=hash], &id[hash + 1..]))
    }
}
