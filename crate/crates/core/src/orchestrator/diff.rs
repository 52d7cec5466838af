use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::occi::{ids, Entity, EntityRef, OcciConfiguration};
use crate::AttributeMap;

pub const TITLE: &str = "occi.core.title";
pub const SOURCE: &str = "occi.core.source";
pub const TARGET: &str = "occi.core.target";
pub const MIXINS: &str = "occi.core.mixins";

/// An entity present on both sides whose attributes differ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityUpdate {
    pub id: String,
    pub kind: String,
    /// Desired value of every differing attribute; `null` when the desired
    /// side no longer has it.
    pub changed: AttributeMap,
    /// The desired entity.
    pub entity: Entity,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiffResult {
    pub to_create: Vec<Entity>,
    pub to_update: Vec<EntityUpdate>,
    pub to_delete: Vec<Entity>,
    pub unchanged: Vec<Entity>,
}

impl DiffResult {
    pub fn is_empty(&self) -> bool {
        self.to_create.is_empty() && self.to_update.is_empty() && self.to_delete.is_empty()
    }

    /// Every entity of the desired side.
    pub fn desired(&self) -> impl Iterator<Item = &Entity> {
        self.to_create.iter().chain(self.to_update.iter().map(|u| &u.entity)).chain(self.unchanged.iter())
    }
}

/// Flat view of everything that counts for equality: title, link endpoints,
/// the sorted mixin list and all attribute values, minus runtime-maintained
/// attributes. Entity-level values shadow mixin-base values of the same name.
pub fn comparable_attributes(e: EntityRef<'_>) -> AttributeMap {
    let mut out = AttributeMap::new();
    for mb in e.mixin_bases().iter().rev() {
        for (k, v) in &mb.attribute_values {
            out.insert(k.clone(), v.clone());
        }
    }
    for (k, v) in e.attribute_values() {
        out.insert(k.clone(), v.clone());
    }
    out.retain(|k, _| !ids::is_runtime_attribute(k));
    if let Some(t) = e.title() {
        out.insert(TITLE.into(), Value::from(t));
    }
    if let EntityRef::Link(l) = e {
        out.insert(SOURCE.into(), Value::from(l.source.as_str()));
        out.insert(TARGET.into(), Value::from(l.target.as_str()));
    }
    let mixins: BTreeSet<&str> = e.mixin_bases().iter().map(|mb| mb.mixin.as_str()).collect();
    if !mixins.is_empty() {
        out.insert(MIXINS.into(), Value::from(mixins.into_iter().collect::<Vec<_>>()));
    }
    out
}

fn key(e: EntityRef<'_>) -> (String, String) {
    (e.id().into(), e.kind().into())
}

/// Classifies entities matched by id and kind. Output lists follow the
/// order of the desired configuration (the current one for deletions).
pub fn compare(desired: &OcciConfiguration, current: &OcciConfiguration) -> DiffResult {
    let mut current_by_key: BTreeMap<(String, String), EntityRef<'_>> = BTreeMap::new();
    for e in current.entities() {
        current_by_key.entry(key(e)).or_insert(e);
    }
    let desired_keys: BTreeSet<(String, String)> = desired.entities().map(key).collect();

    let mut diff = DiffResult::default();
    let mut seen = BTreeSet::new();
    for d in desired.entities() {
        let k = key(d);
        if !seen.insert(k.clone()) {
            continue;
        }
        let Some(c) = current_by_key.get(&k) else {
            diff.to_create.push(d.to_owned());
            continue;
        };
        let want = comparable_attributes(d);
        let have = comparable_attributes(*c);
        let mut changed = AttributeMap::new();
        for (name, value) in &want {
            if have.get(name) != Some(value) {
                changed.insert(name.clone(), value.clone());
            }
        }
        for name in have.keys() {
            if !want.contains_key(name) {
                changed.insert(name.clone(), Value::Null);
            }
        }
        if changed.is_empty() {
            diff.unchanged.push(d.to_owned());
        } else {
            diff.to_update.push(EntityUpdate { id: k.0, kind: k.1, changed, entity: d.to_owned() });
        }
    }
    let mut gone = BTreeSet::new();
    for c in current.entities() {
        let k = key(c);
        if !desired_keys.contains(&k) && gone.insert(k) {
            diff.to_delete.push(c.to_owned());
        }
    }
    diff
}
