//! Instantiation of a TOSCA topology as an OCCI configuration of the TOSCA
//! extension.
//!
//! Every node template becomes a resource of its mixin's anchor kind with one
//! mixin base carrying the template's property values (capability property
//! values are flattened into the same base). An application resource is
//! synthesized and linked to every component (`c1..cN`), requirement bindings
//! become links of their relationship's anchor kind (numbering continues),
//! and hosting chains that end on a compute become placement links
//! (`p1..pM`).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::mapping::{mixin_id, normalize_value};
use crate::occi::{check_datatype, ids, DataTypeLookup, ExtensionSet, Link, MixinBase, OcciConfiguration, Resource};
use crate::tosca::{ToscaNodeTemplate, ToscaPropertyDef, ToscaTopology, ToscaTypeRegistry, DEPENDS_ON, HOSTED_ON};
use crate::AttributeMap;

/// Topology name used when the template has no `metadata.template_name`.
pub const DEFAULT_TOPOLOGY_NAME: &str = "topology";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigGenError {
    #[error("template name {0:?} is used more than once")]
    DuplicateTemplate(String),
    #[error("template {template:?} of type {type_name:?} cannot be mapped: {reason}")]
    UnmappedTemplate { template: String, type_name: String, reason: String },
    #[error("template {template:?}: attribute {attribute:?}: {reason}")]
    AttributeValidation { template: String, attribute: String, reason: String },
    #[error("template {template:?}: requirement {requirement:?} targets unknown template {target:?}")]
    DanglingBinding { template: String, requirement: String, target: String },
}

/// Correspondence between a template and the entity generated for it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TemplateBinding {
    pub template_name: String,
    pub entity_id: String,
    pub mixin_term: String,
    pub kind: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedConfiguration {
    pub configuration: OcciConfiguration,
    pub bindings: Vec<TemplateBinding>,
    /// Names of group templates, which are parsed but not instantiated.
    pub unmapped_groups: Vec<String>,
}

pub fn topology_name(topo: &ToscaTopology) -> &str {
    topo.name.as_deref().unwrap_or(DEFAULT_TOPOLOGY_NAME)
}

pub fn template_id(topology: &str, template: &str) -> String {
    format!("urn:tosca:{topology}:{template}")
}

pub fn application_id(topology: &str) -> String {
    format!("urn:tosca:{topology}:app")
}

pub fn link_id(topology: &str, title: &str) -> String {
    format!("urn:tosca:{topology}:link:{title}")
}

/// Entity ids of the node templates.
pub fn assign_ids(topo: &ToscaTopology) -> Result<BTreeMap<String, String>, ConfigGenError> {
    let name = topology_name(topo);
    let mut ids = BTreeMap::new();
    for t in &topo.node_templates {
        if ids.insert(t.name.clone(), template_id(name, &t.name)).is_some() {
            return Err(ConfigGenError::DuplicateTemplate(t.name.clone()));
        }
    }
    Ok(ids)
}

struct Gen<'a> {
    topo: &'a ToscaTopology,
    registry: &'a ToscaTypeRegistry,
    exts: &'a ExtensionSet,
    name: &'a str,
    ids: BTreeMap<String, String>,
    kinds: BTreeMap<String, String>,
}

pub fn generate_configuration(
    topo: &ToscaTopology,
    registry: &ToscaTypeRegistry,
    exts: &ExtensionSet,
) -> Result<GeneratedConfiguration, ConfigGenError> {
    let ids = assign_ids(topo)?;
    let mut g = Gen { topo, registry, exts, name: topology_name(topo), ids, kinds: BTreeMap::new() };
    let mut cfg = OcciConfiguration::default();
    let mut bindings = Vec::new();

    for t in &topo.node_templates {
        let resource = g.resource(t)?;
        g.kinds.insert(t.name.clone(), resource.kind.clone());
        bindings.push(TemplateBinding {
            template_name: t.name.clone(),
            entity_id: resource.id.clone(),
            mixin_term: crate::mapping::mangle_name(&t.type_name),
            kind: resource.kind.clone(),
        });
        cfg.resources.push(resource);
    }

    let app = application_id(g.name);
    let components: Vec<&ToscaNodeTemplate> =
        topo.node_templates.iter().filter(|t| g.is(&t.name, ids::COMPONENT)).collect();
    cfg.resources.insert(
        0,
        Resource {
            id: app.clone(),
            kind: ids::APPLICATION.into(),
            title: Some(g.name.to_string()),
            mixin_bases: Vec::new(),
            attribute_values: AttributeMap::new(),
        },
    );

    let mut c = 0;
    let mut next_c = || {
        c += 1;
        format!("c{c}")
    };
    for t in &components {
        let title = next_c();
        cfg.links.push(plain_link(g.name, &title, ids::COMPONENTLINK, &app, &g.ids[&t.name]));
    }

    for t in &topo.node_templates {
        for b in &t.requirement_bindings {
            let dangling = || ConfigGenError::DanglingBinding {
                template: t.name.clone(),
                requirement: b.requirement.clone(),
                target: b.target.clone(),
            };
            let target_id = g.ids.get(&b.target).ok_or_else(dangling)?.clone();
            let relationship = g.relationship_of(t, b);
            if g.is_placement(t, &b.target, &relationship) {
                continue;
            }
            let mixin = mixin_id(&relationship);
            let kind = g.anchor(&mixin).map_err(|reason| ConfigGenError::UnmappedTemplate {
                template: t.name.clone(),
                type_name: relationship.clone(),
                reason,
            })?;
            let rel_template = b.relationship_template.as_deref().and_then(|n| topo.relationship_template(n));
            let owner = rel_template.map(|r| r.name.as_str()).unwrap_or(&t.name);
            let values = rel_template.map(|r| &r.property_values);
            let attrs = g.values(owner, &relationship, &mixin, values.into_iter().flatten(), &BTreeMap::new())?;
            let title = next_c();
            let mut link = plain_link(g.name, &title, &kind, &g.ids[&t.name], &target_id);
            link.mixin_bases.push(MixinBase { mixin, attribute_values: attrs });
            if let Some(r) = rel_template {
                bindings.push(TemplateBinding {
                    template_name: r.name.clone(),
                    entity_id: link.id.clone(),
                    mixin_term: crate::mapping::mangle_name(&relationship),
                    kind: kind.clone(),
                });
            }
            cfg.links.push(link);
        }
    }

    let mut p = 0;
    for t in &components {
        if let Some(host) = g.host_compute(t) {
            p += 1;
            let title = format!("p{p}");
            cfg.links.push(plain_link(g.name, &title, ids::PLACEMENTLINK, &g.ids[&t.name], &g.ids[&host]));
        }
    }

    let mut uses = BTreeSet::new();
    for e in cfg.entities() {
        uses.extend(exts.extension_of(e.kind()));
        uses.extend(e.mixin_bases().iter().filter_map(|m| exts.extension_of(&m.mixin)));
    }
    cfg.uses = uses.into_iter().map(String::from).collect();

    Ok(GeneratedConfiguration {
        configuration: cfg,
        bindings,
        unmapped_groups: topo.groups.iter().map(|g| g.name.clone()).collect(),
    })
}

fn plain_link(topology: &str, title: &str, kind: &str, source: &str, target: &str) -> Link {
    Link {
        id: link_id(topology, title),
        kind: kind.into(),
        title: Some(title.into()),
        source: source.into(),
        target: target.into(),
        mixin_bases: Vec::new(),
        attribute_values: AttributeMap::new(),
    }
}

impl Gen<'_> {
    fn is(&self, template: &str, kind: &str) -> bool {
        self.kinds.get(template).is_some_and(|k| self.exts.kind_is_a(k, kind))
    }

    fn anchor(&self, mixin: &str) -> Result<String, String> {
        if self.exts.mixin(mixin).is_none() {
            return Err(format!("no mixin {mixin}"));
        }
        let anchors = self.exts.anchor_kinds(mixin);
        match anchors.len() {
            1 => Ok(anchors.into_iter().next().unwrap_or_default()),
            0 => Err(format!("mixin {mixin} is not anchored to a kind")),
            _ => Err(format!("mixin {mixin} is anchored to several kinds")),
        }
    }

    fn resource(&self, t: &ToscaNodeTemplate) -> Result<Resource, ConfigGenError> {
        let mixin = mixin_id(&t.type_name);
        let unmapped = |reason: String| ConfigGenError::UnmappedTemplate {
            template: t.name.clone(),
            type_name: t.type_name.clone(),
            reason,
        };
        if !self.registry.contains(&t.type_name) {
            return Err(unmapped("unknown node type".into()));
        }
        let kind = self.anchor(&mixin).map_err(unmapped)?;

        let mut capability_values = BTreeMap::new();
        for (cap, values) in &t.capability_property_values {
            let cap_type =
                self.registry.effective_capabilities(&t.type_name).and_then(|caps| caps.get(cap)).ok_or_else(|| {
                    ConfigGenError::AttributeValidation {
                        template: t.name.clone(),
                        attribute: cap.clone(),
                        reason: "type declares no such capability".into(),
                    }
                })?;
            for (name, value) in values {
                let prop = self.registry.property(cap_type, name);
                if capability_values.insert(name.clone(), (prop, value)).is_some() {
                    return Err(ConfigGenError::AttributeValidation {
                        template: t.name.clone(),
                        attribute: name.clone(),
                        reason: "set by more than one capability".into(),
                    });
                }
            }
        }
        let attrs = self.values(&t.name, &t.type_name, &mixin, &t.property_values, &capability_values)?;
        Ok(Resource {
            id: self.ids[&t.name].clone(),
            kind,
            title: Some(t.name.clone()),
            mixin_bases: alloc::vec![MixinBase { mixin, attribute_values: attrs }],
            attribute_values: AttributeMap::new(),
        })
    }

    /// Normalizes and checks property values against the mixin closure.
    fn values<'v>(
        &self,
        owner: &str,
        tosca_type: &str,
        mixin: &str,
        values: impl IntoIterator<Item = (&'v String, &'v Value)>,
        capability_values: &BTreeMap<String, (Option<&ToscaPropertyDef>, &Value)>,
    ) -> Result<AttributeMap, ConfigGenError> {
        let own = values.into_iter().map(|(k, v)| (k, self.registry.property(tosca_type, k), v));
        let caps = capability_values.iter().map(|(k, (p, v))| (k, *p, *v));
        let mut out = AttributeMap::new();
        for (name, prop, value) in own.chain(caps) {
            let fail = |reason: String| ConfigGenError::AttributeValidation {
                template: owner.to_string(),
                attribute: name.clone(),
                reason,
            };
            let value = match prop {
                Some(p) => normalize_value(&p.tosca_type, p.entry_schema.as_deref(), value),
                None => value.clone(),
            };
            let def = self.exts.mixin_attribute(mixin, name).ok_or_else(|| fail(format!("not declared by {mixin}")))?;
            let dt =
                self.exts.datatype(&def.datatype).ok_or_else(|| fail(format!("unknown datatype {}", def.datatype)))?;
            if !check_datatype(&value, dt, self.exts) {
                return Err(fail(format!("value {value} does not conform to {}", def.datatype)));
            }
            if out.insert(name.clone(), value).is_some() {
                return Err(fail("set twice".into()));
            }
        }
        Ok(out)
    }

    /// Relationship type of a binding: explicit, else from the requirement
    /// definition, else DependsOn.
    fn relationship_of(&self, t: &ToscaNodeTemplate, b: &crate::tosca::RequirementBinding) -> String {
        b.relationship
            .clone()
            .or_else(|| {
                self.registry.effective_requirement(&t.type_name, &b.requirement).and_then(|r| r.relationship.clone())
            })
            .unwrap_or_else(|| DEPENDS_ON.to_string())
    }

    fn is_placement(&self, t: &ToscaNodeTemplate, target: &str, relationship: &str) -> bool {
        self.registry.is_a(relationship, HOSTED_ON) && self.is(target, ids::COMPUTE) && self.is(&t.name, ids::COMPONENT)
    }

    /// Follows hosting bindings from `t` until a compute is reached.
    fn host_compute(&self, t: &ToscaNodeTemplate) -> Option<String> {
        let mut current = t;
        let mut seen = BTreeSet::new();
        loop {
            if !seen.insert(current.name.as_str()) {
                return None;
            }
            let host = current
                .requirement_bindings
                .iter()
                .find(|b| self.registry.is_a(&self.relationship_of(current, b), HOSTED_ON))?;
            if self.is(&host.target, ids::COMPUTE) {
                return Some(host.target.clone());
            }
            current = self.topo.node_template(&host.target)?;
        }
    }
}
