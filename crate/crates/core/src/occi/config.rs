use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::AttributeMap;

/// Instance-level carrier of a mixin's attribute values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MixinBase {
    pub mixin: String,
    #[serde(default)]
    pub attribute_values: AttributeMap,
}

impl MixinBase {
    pub fn new(mixin: impl Into<String>) -> Self {
        MixinBase { mixin: mixin.into(), attribute_values: AttributeMap::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Resource {
    pub id: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub mixin_bases: Vec<MixinBase>,
    #[serde(default)]
    pub attribute_values: AttributeMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Link {
    pub id: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub mixin_bases: Vec<MixinBase>,
    #[serde(default)]
    pub attribute_values: AttributeMap,
}

/// An OCCI instance model: the desired or actual set of resources and links.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OcciConfiguration {
    #[serde(rename = "use", default)]
    pub uses: Vec<String>,
    #[serde(default)]
    pub resources: Vec<Resource>,
    #[serde(default)]
    pub links: Vec<Link>,
}

impl OcciConfiguration {
    pub fn is_empty(&self) -> bool {
        self.resources.is_empty() && self.links.is_empty()
    }

    pub fn resource(&self, id: &str) -> Option<&Resource> {
        self.resources.iter().find(|r| r.id == id)
    }

    pub fn link(&self, id: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.id == id)
    }

    pub fn entity(&self, id: &str) -> Option<EntityRef<'_>> {
        self.resource(id).map(EntityRef::Resource).or_else(|| self.link(id).map(EntityRef::Link))
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityRef<'_>> {
        self.resources.iter().map(EntityRef::Resource).chain(self.links.iter().map(EntityRef::Link))
    }

    /// Removes the entity with `id`. Links touching a removed resource are
    /// left in place.
    pub fn remove(&mut self, id: &str) -> Option<Entity> {
        if let Some(i) = self.resources.iter().position(|r| r.id == id) {
            return Some(Entity::Resource(self.resources.remove(i)));
        }
        let i = self.links.iter().position(|l| l.id == id)?;
        Some(Entity::Link(self.links.remove(i)))
    }

    pub fn push(&mut self, entity: Entity) {
        match entity {
            Entity::Resource(r) => self.resources.push(r),
            Entity::Link(l) => self.links.push(l),
        }
    }
}

/// Borrowed view over either entity flavour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EntityRef<'a> {
    Resource(&'a Resource),
    Link(&'a Link),
}

/// Owned entity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entity {
    Link(Link),
    Resource(Resource),
}

macro_rules! entity_accessors {
    ($($name:ident: $ty:ty),*) => {
        $(pub fn $name(&self) -> $ty {
            match self {
                Self::Resource(r) => &r.$name,
                Self::Link(l) => &l.$name,
            }
        })*
    };
}

impl<'a> EntityRef<'a> {
    pub fn id(&self) -> &'a str {
        match self {
            EntityRef::Resource(r) => &r.id,
            EntityRef::Link(l) => &l.id,
        }
    }

    pub fn kind(&self) -> &'a str {
        match self {
            EntityRef::Resource(r) => &r.kind,
            EntityRef::Link(l) => &l.kind,
        }
    }

    pub fn title(&self) -> Option<&'a str> {
        match self {
            EntityRef::Resource(r) => r.title.as_deref(),
            EntityRef::Link(l) => l.title.as_deref(),
        }
    }

    pub fn mixin_bases(&self) -> &'a [MixinBase] {
        match self {
            EntityRef::Resource(r) => &r.mixin_bases,
            EntityRef::Link(l) => &l.mixin_bases,
        }
    }

    pub fn attribute_values(&self) -> &'a AttributeMap {
        match self {
            EntityRef::Resource(r) => &r.attribute_values,
            EntityRef::Link(l) => &l.attribute_values,
        }
    }

    pub fn is_link(&self) -> bool {
        matches!(self, EntityRef::Link(_))
    }

    pub fn to_owned(&self) -> Entity {
        match self {
            EntityRef::Resource(r) => Entity::Resource((*r).clone()),
            EntityRef::Link(l) => Entity::Link((*l).clone()),
        }
    }

    /// Looks an attribute up on the entity first, then on its mixin bases.
    pub fn attribute(&self, name: &str) -> Option<&'a serde_json::Value> {
        self.attribute_values()
            .get(name)
            .or_else(|| self.mixin_bases().iter().find_map(|mb| mb.attribute_values.get(name)))
    }
}

impl Entity {
    entity_accessors!(id: &str, kind: &str, mixin_bases: &[MixinBase], attribute_values: &AttributeMap);

    pub fn as_ref(&self) -> EntityRef<'_> {
        match self {
            Entity::Resource(r) => EntityRef::Resource(r),
            Entity::Link(l) => EntityRef::Link(l),
        }
    }

    pub fn is_link(&self) -> bool {
        matches!(self, Entity::Link(_))
    }
}
