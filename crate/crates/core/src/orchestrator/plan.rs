use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::diff::{SOURCE, TARGET, TITLE};
use super::{DiffResult, EntityUpdate, ProvisioningOrderGraph};
use crate::lifecycle;
use crate::occi::{ids, Entity, MixinBase};
use crate::AttributeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verb {
    Create,
    Update,
    Delete,
    Action,
}

/// The request may only be sent once `entity_id` is in `required_state`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateGate {
    pub entity_id: String,
    pub required_state: String,
}

/// Body of a CREATE: the full entity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityBody {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub mixins: Vec<MixinBase>,
    #[serde(default)]
    pub attributes: AttributeMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl EntityBody {
    pub fn of(entity: &Entity) -> Self {
        let (source, target, title) = match entity {
            Entity::Link(l) => (Some(l.source.clone()), Some(l.target.clone()), l.title.clone()),
            Entity::Resource(r) => (None, None, r.title.clone()),
        };
        EntityBody {
            kind: entity.kind().into(),
            title,
            mixins: entity.mixin_bases().to_vec(),
            attributes: entity.attribute_values().clone(),
            source,
            target,
        }
    }

    pub fn into_entity(self, id: String) -> Entity {
        match (self.source, self.target) {
            (Some(source), Some(target)) => Entity::Link(crate::occi::Link {
                id,
                kind: self.kind,
                title: self.title,
                source,
                target,
                mixin_bases: self.mixins,
                attribute_values: self.attributes,
            }),
            _ => Entity::Resource(crate::occi::Resource {
                id,
                kind: self.kind,
                title: self.title,
                mixin_bases: self.mixins,
                attribute_values: self.attributes,
            }),
        }
    }
}

/// Body of an UPDATE. `attributes` holds changed entity-level values, with
/// `null` for removals; `mixins`, when present, replaces all mixin bases.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PatchBody {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default)]
    pub attributes: AttributeMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixins: Option<Vec<MixinBase>>,
}

impl PatchBody {
    pub fn of(update: &EntityUpdate) -> Self {
        let e = update.entity.as_ref();
        let mut patch = PatchBody::default();
        let mut mixins_changed = false;
        for (name, value) in &update.changed {
            match name.as_str() {
                TITLE => patch.title = e.title().map(String::from),
                SOURCE | TARGET => {
                    if let Entity::Link(l) = &update.entity {
                        patch.source = Some(l.source.clone());
                        patch.target = Some(l.target.clone());
                    }
                }
                _ if e.attribute_values().contains_key(name) => {
                    patch.attributes.insert(name.clone(), value.clone());
                }
                _ => mixins_changed = true,
            }
        }
        if mixins_changed {
            patch.mixins = Some(e.mixin_bases().to_vec());
        }
        patch
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Create(EntityBody),
    Patch(PatchBody),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Request {
    pub verb: Verb,
    pub entity_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gates: Vec<StateGate>,
}

impl Request {
    fn bare(verb: Verb, entity_id: &str) -> Self {
        Request { verb, entity_id: entity_id.into(), payload: None, action: None, gates: Vec::new() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProvisioningPlan {
    pub steps: Vec<Request>,
}

impl ProvisioningPlan {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// Index of the first step touching `id` with `verb`.
    pub fn position(&self, verb: Verb, id: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.verb == verb && s.entity_id == id)
    }
}

fn active(id: &str) -> StateGate {
    StateGate { entity_id: id.into(), required_state: lifecycle::ACTIVE.into() }
}

/// Sequences the provisioning requests:
/// deletions (links first), updates, resource creations in graph order, link
/// creations gated on their computes being active, and finally a start
/// action on every application that has something new, gated on all
/// computes being active.
pub fn plan(diff: &DiffResult, graph: &ProvisioningOrderGraph) -> ProvisioningPlan {
    let mut steps = Vec::new();

    let mut deletes: Vec<&Entity> = diff.to_delete.iter().collect();
    deletes.sort_by(|a, b| (!a.is_link(), a.id()).cmp(&(!b.is_link(), b.id())));
    steps.extend(deletes.into_iter().map(|e| Request::bare(Verb::Delete, e.id())));

    let mut updates: Vec<&EntityUpdate> = diff.to_update.iter().collect();
    updates.sort_by(|a, b| a.id.cmp(&b.id));
    for u in updates {
        let mut r = Request::bare(Verb::Update, &u.id);
        r.payload = Some(Payload::Patch(PatchBody::of(u)));
        steps.push(r);
    }

    let desired: BTreeMap<&str, &Entity> = diff.desired().map(|e| (e.id(), e)).collect();
    let created: BTreeMap<&str, &Entity> = diff.to_create.iter().map(|e| (e.id(), e)).collect();
    let create = |e: &Entity| {
        let mut r = Request::bare(Verb::Create, e.id());
        r.payload = Some(Payload::Create(EntityBody::of(e)));
        r
    };

    let mut ordered: Vec<&Entity> = graph.order.iter().filter_map(|id| created.get(id.as_str()).copied()).collect();
    // entities the graph does not know about still get created
    let mut rest: Vec<&Entity> = diff.to_create.iter().filter(|e| !graph.order.iter().any(|id| id == e.id())).collect();
    rest.sort_by(|a, b| a.id().cmp(b.id()));
    ordered.extend(rest);

    steps.extend(ordered.iter().filter(|e| !e.is_link()).map(|e| create(e)));

    let is_compute = |id: &str| desired.get(id).is_some_and(|e| !e.is_link() && e.kind() == ids::COMPUTE);
    let mut links: Vec<&Entity> = ordered.iter().filter(|e| e.is_link()).copied().collect();
    links.sort_by(|a, b| a.id().cmp(b.id()));
    for e in links {
        let mut r = create(e);
        if let Entity::Link(l) = e {
            let ends: BTreeSet<&str> = [l.source.as_str(), l.target.as_str()].into_iter().collect();
            r.gates = ends.into_iter().filter(|id| is_compute(id)).map(active).collect();
        }
        steps.push(r);
    }

    let computes: Vec<StateGate> = desired.keys().filter(|id| is_compute(id)).map(|id| active(id)).collect();
    for (id, e) in &desired {
        if e.is_link() || e.kind() != ids::APPLICATION {
            continue;
        }
        let new_component = diff.desired().any(|l| match l {
            Entity::Link(l) => {
                l.source == *id
                    && l.kind == ids::COMPONENTLINK
                    && created.get(l.target.as_str()).is_some_and(|t| t.kind() == ids::COMPONENT)
            }
            Entity::Resource(_) => false,
        });
        if created.contains_key(id) || new_component {
            let mut r = Request::bare(Verb::Action, id);
            r.action = Some("start".into());
            r.gates = computes.clone();
            steps.push(r);
        }
    }
    ProvisioningPlan { steps }
}
