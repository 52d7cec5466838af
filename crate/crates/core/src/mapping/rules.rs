use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::occi::{ids, ConstraintDef, ConstraintExpr, Direction};

/// Where a TOSCA concept lands in the OCCI extension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum RuleTarget {
    /// The mixin applies to `kind`.
    MixinAppliedToKind { kind: String },
    /// The mixin depends on the mixins of these TOSCA types, on top of its
    /// `derived_from` parent. An empty list marks an abstract root.
    MixinDependsOn { types: Vec<String> },
    /// The datatype maps onto the named OCCI datatype, or is dropped.
    DataTypeTarget { datatype: Option<String> },
    /// The mixin carries this constraint.
    ConstraintTarget { constraint: ConstraintDef },
    /// Interface operations become differently named actions depending on
    /// the kind the owning mixin applies to.
    ActionTarget { renames: Vec<ActionRename> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRename {
    pub operation: String,
    pub kind: String,
    pub action: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MappingRule {
    pub tosca_concept: String,
    pub target: RuleTarget,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
}

/// Ordered rule list. Lookups only consider exact names; inheritance is
/// handled by the mapper walking `derived_from`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub rules: Vec<MappingRule>,
}

fn rule(concept: &str, target: RuleTarget, notes: &str) -> MappingRule {
    MappingRule { tosca_concept: concept.to_string(), target, notes: notes.to_string() }
}

fn applied(concept: &str, kind: &str, notes: &str) -> MappingRule {
    rule(concept, RuleTarget::MixinAppliedToKind { kind: kind.to_string() }, notes)
}

fn depends(concept: &str, types: &[&str], notes: &str) -> MappingRule {
    rule(concept, RuleTarget::MixinDependsOn { types: types.iter().map(|t| t.to_string()).collect() }, notes)
}

fn datatype(concept: &str, target: Option<&str>, notes: &str) -> MappingRule {
    rule(concept, RuleTarget::DataTypeTarget { datatype: target.map(Into::into) }, notes)
}

fn renames(concept: &str, operation: &str, per_kind: &[(&str, &str)], notes: &str) -> MappingRule {
    let renames = per_kind
        .iter()
        .map(|(kind, action)| ActionRename {
            operation: operation.to_string(),
            kind: kind.to_string(),
            action: action.to_string(),
        })
        .collect();
    rule(concept, RuleTarget::ActionTarget { renames }, notes)
}

pub const STANDARD_INTERFACE: &str = "tosca.interfaces.node.lifecycle.Standard";
pub const CONFIGURE_INTERFACE: &str = "tosca.interfaces.relationship.Configure";

/// Name of the constraint requiring computes to host a component.
pub const SOURCE_MUST_BE_SOFTWARE_COMPONENT: &str = "SourceMustBeSoftwareComponent";

impl RuleTable {
    /// The builtin rules for the normative types and the well-known custom
    /// types.
    pub fn builtin() -> Self {
        let s = "tosca.nodes.SoftwareComponent";
        let rules = vec![
            depends("tosca.nodes.Root", &[], "abstract root"),
            depends("tosca.relationships.Root", &[], "abstract root"),
            depends("tosca.capabilities.Root", &[], "abstract root"),
            depends("tosca.interfaces.Root", &[], "abstract root"),
            datatype("tosca.datatypes.Root", None, "abstract root"),
            // normative node types
            applied("tosca.nodes.BlockStorage", ids::STORAGE, ""),
            applied("tosca.nodes.ObjectStorage", ids::STORAGE, ""),
            applied("tosca.nodes.Compute", ids::COMPUTE, ""),
            rule(
                "tosca.nodes.Compute",
                RuleTarget::ConstraintTarget {
                    constraint: ConstraintDef {
                        name: SOURCE_MUST_BE_SOFTWARE_COMPONENT.into(),
                        // Not derivable from any requirement. The peer is the
                        // component kind so that Database-derived components,
                        // which are not SoftwareComponents, qualify.
                        body: ConstraintExpr::exists_link(Direction::In, ids::PLACEMENTLINK, ids::COMPONENT),
                    },
                },
                "a compute must have a component placed on it",
            ),
            applied(s, ids::COMPONENT, ""),
            depends("tosca.nodes.WebServer", &[s], ""),
            applied("tosca.nodes.WebApplication", ids::COMPONENT, ""),
            depends("tosca.nodes.DBMS", &[s, "tosca.nodes.Database"], "dual dependency"),
            applied("tosca.nodes.Database", ids::COMPONENT, ""),
            applied("tosca.nodes.LoadBalancer", ids::RESOURCE, "generic resource"),
            depends("tosca.nodes.Container.Runtime", &[s], ""),
            applied("tosca.nodes.Container.Application", ids::COMPONENT, ""),
            applied("tosca.nodes.network.Network", ids::NETWORK, ""),
            applied("tosca.nodes.network.Port", ids::NETWORK, ""),
            // normative relationship types
            applied("tosca.relationships.AttachesTo", ids::STORAGELINK, ""),
            applied("tosca.relationships.ConnectsTo", ids::COMPONENTLINK, ""),
            applied("tosca.relationships.DependsOn", ids::COMPONENTLINK, ""),
            applied("tosca.relationships.HostedOn", ids::COMPONENTLINK, ""),
            depends("tosca.relationships.RoutesTo", &["tosca.relationships.ConnectsTo"], ""),
            // datatypes
            datatype("tosca.datatypes.Credential", Some("CredentialRecordType"), ""),
            datatype("tosca.datatypes.network.NetworkInfo", Some("NetworkInfoRecordType"), ""),
            datatype("tosca.datatypes.network.PortDef", Some("PortDefRecordType"), ""),
            datatype("tosca.datatypes.network.PortInfo", Some("PortInfoRecordType"), ""),
            datatype("tosca.datatypes.network.PortSpec", Some("short"), "port numbers"),
            // interface types
            applied(STANDARD_INTERFACE, ids::RESOURCE, "only actions"),
            renames(
                STANDARD_INTERFACE,
                "start",
                &[(ids::COMPONENT, "start"), (ids::STORAGE, "online"), (ids::COMPUTE, "start")],
                "",
            ),
            renames(
                STANDARD_INTERFACE,
                "stop",
                &[(ids::COMPONENT, "stop"), (ids::STORAGE, "offline"), (ids::COMPUTE, "stop")],
                "",
            ),
            applied(CONFIGURE_INTERFACE, ids::COMPONENTLINK, "only actions"),
            // custom types
            depends("tosca.nodes.Apache", &["tosca.nodes.WebServer"], ""),
            depends("tosca.nodes.SoftwareComponent.Collectd", &[s], ""),
            depends("tosca.nodes.HACompute", &["tosca.nodes.Compute"], ""),
            depends("tosca.nodes.Database.Mysql", &["tosca.nodes.Database"], ""),
            depends("tosca.nodes.DBMS.MySQL", &["tosca.nodes.DBMS"], ""),
            depends("tosca.nodes.Container.Application.Docker", &["tosca.nodes.Container.Application"], ""),
            depends("tosca.nodes.SoftwareComponent.Elasticsearch", &[s], ""),
            depends("tosca.nodes.SoftwareComponent.Logstash", &[s], ""),
            depends("tosca.nodes.SoftwareComponent.Kibana", &[s], ""),
            depends("tosca.nodes.AbstractMysql", &["tosca.nodes.Database"], ""),
            depends("tosca.nodes.Nodejs", &["tosca.nodes.WebServer"], ""),
            depends("tosca.nodes.WebApplication.PayPalPizzaStore", &["tosca.nodes.WebApplication"], ""),
            depends("tosca.nodes.PHP", &[s], ""),
            depends("tosca.nodes.SoftwareComponent.Rsyslog", &[s], ""),
            depends("tosca.nodes.Wordpress", &["tosca.nodes.WebApplication"], ""),
            depends("tosca.nodes.Nodecellar", &["tosca.nodes.WebApplication"], ""),
            depends("tosca.nodes.MongoD", &["tosca.nodes.DBMS"], ""),
        ];
        RuleTable { rules }
    }

    pub fn rules_for<'a, 'c>(&'a self, concept: &'c str) -> impl Iterator<Item = &'a MappingRule> + 'c
    where
        'a: 'c,
    {
        self.rules.iter().filter(move |r| r.tosca_concept == concept)
    }

    pub fn has_rule(&self, concept: &str) -> bool {
        self.rules_for(concept).next().is_some()
    }

    pub fn applies(&self, concept: &str) -> Option<&str> {
        self.rules_for(concept).find_map(|r| match &r.target {
            RuleTarget::MixinAppliedToKind { kind } => Some(kind.as_str()),
            _ => None,
        })
    }

    pub fn extra_depends(&self, concept: &str) -> Vec<&str> {
        self.rules_for(concept)
            .filter_map(|r| match &r.target {
                RuleTarget::MixinDependsOn { types } => Some(types.iter().map(String::as_str)),
                _ => None,
            })
            .flatten()
            .collect()
    }

    pub fn constraints(&self, concept: &str) -> Vec<&ConstraintDef> {
        self.rules_for(concept)
            .filter_map(|r| match &r.target {
                RuleTarget::ConstraintTarget { constraint } => Some(constraint),
                _ => None,
            })
            .collect()
    }

    /// `Some(target)` when a datatype rule exists for `concept`.
    pub fn datatype_target(&self, concept: &str) -> Option<Option<&str>> {
        self.rules_for(concept).find_map(|r| match &r.target {
            RuleTarget::DataTypeTarget { datatype } => Some(datatype.as_deref()),
            _ => None,
        })
    }

    /// Action name for `operation` of interface type `interface` on a mixin
    /// applying to `kind`.
    pub fn rename(&self, interface: &str, operation: &str, kind: &str) -> Option<&str> {
        self.rules_for(interface).find_map(|r| match &r.target {
            RuleTarget::ActionTarget { renames } => {
                renames.iter().find(|x| x.operation == operation && x.kind == kind).map(|x| x.action.as_str())
            }
            _ => None,
        })
    }
}
