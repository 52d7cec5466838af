use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::config::EntityRef;
use super::datatype::{check_datatype, DataType, DataTypeLookup};
use super::extension::{is_valid_term, AttributeDef, Category, EntityRole, Kind, Mixin, OcciExtension};
use super::ids;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinkError {
    #[error("extension {0:?} is already loaded")]
    DuplicateExtension(String),
    #[error("extension {extension:?} imports {import:?}, which is not loaded")]
    MissingImport { extension: String, import: String },
    #[error("category {0} is declared more than once")]
    DuplicateCategory(String),
    #[error("datatype {0:?} is declared more than once")]
    DuplicateDataType(String),
    #[error("invalid category term {0:?}")]
    InvalidTerm(String),
    #[error("scheme {0:?} does not end with '#'")]
    InvalidScheme(String),
    #[error("{owner}: unresolved {what} reference {reference:?}")]
    Unresolved { owner: String, what: &'static str, reference: String },
    #[error("mixin depends cycle: {}", .0.join(" -> "))]
    MixinCycle(Vec<String>),
    #[error("kind {0}: parent chain is cyclic or does not end at a root kind")]
    KindHierarchy(String),
    #[error("kind {0}: entity role disagrees with its root kind")]
    KindRole(String),
    #[error("datatype {name:?}: {reason}")]
    InvalidDataType { name: String, reason: String },
    #[error("{owner}: default of attribute {attribute:?} does not conform to datatype {datatype:?}")]
    InvalidDefault { owner: String, attribute: String, datatype: String },
}

impl LinkError {
    pub fn is_cycle(&self) -> bool {
        matches!(self, LinkError::MixinCycle(_) | LinkError::KindHierarchy(_))
    }
}

type Slot = (usize, usize);

/// A set of linked extensions. Extensions are added one at a time, after
/// their imports; every reference is checked on insertion so lookups on a
/// set never dangle.
#[derive(Clone, Debug, Default)]
pub struct ExtensionSet {
    extensions: Vec<OcciExtension>,
    kinds: BTreeMap<String, Slot>,
    mixins: BTreeMap<String, Slot>,
    datatypes: BTreeMap<String, Slot>,
}

impl DataTypeLookup for ExtensionSet {
    fn datatype(&self, name: &str) -> Option<&DataType> {
        let (e, d) = *self.datatypes.get(name)?;
        Some(&self.extensions[e].datatypes[d].datatype)
    }
}

/// Lookup over an extension that is being linked plus the visible part of the
/// set.
struct Scope<'a> {
    set: &'a ExtensionSet,
    ext: &'a OcciExtension,
    visible: BTreeSet<&'a str>,
}

impl Scope<'_> {
    fn sees(&self, slot: Option<&Slot>) -> bool {
        slot.is_some_and(|(e, _)| self.visible.contains(self.set.extensions[*e].name.as_str()))
    }

    fn has_kind(&self, id: &str) -> bool {
        self.ext.kinds.iter().any(|k| k.category.id() == id) || self.sees(self.set.kinds.get(id))
    }

    fn kind(&self, id: &str) -> Option<&Kind> {
        self.ext.kinds.iter().find(|k| k.category.id() == id).or_else(|| {
            if self.sees(self.set.kinds.get(id)) {
                self.set.kind(id)
            } else {
                None
            }
        })
    }

    fn has_mixin(&self, id: &str) -> bool {
        self.ext.mixins.iter().any(|m| m.id() == id) || self.sees(self.set.mixins.get(id))
    }
}

impl DataTypeLookup for Scope<'_> {
    fn datatype(&self, name: &str) -> Option<&DataType> {
        if let Some(d) = self.ext.datatypes.iter().find(|d| d.name == name) {
            return Some(&d.datatype);
        }
        if self.sees(self.set.datatypes.get(name)) {
            self.set.datatype(name)
        } else {
            None
        }
    }
}

impl ExtensionSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from extensions given in dependency order.
    pub fn from_extensions(exts: impl IntoIterator<Item = OcciExtension>) -> Result<Self, LinkError> {
        let mut set = ExtensionSet::new();
        for ext in exts {
            set.add(ext)?;
        }
        Ok(set)
    }

    pub fn extensions(&self) -> &[OcciExtension] {
        &self.extensions
    }

    pub fn extension(&self, name: &str) -> Option<&OcciExtension> {
        self.extensions.iter().find(|e| e.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.extension(name).is_some()
    }

    /// Links `ext` against its (already loaded) imports and adds it.
    pub fn add(&mut self, ext: OcciExtension) -> Result<(), LinkError> {
        if self.contains(&ext.name) {
            return Err(LinkError::DuplicateExtension(ext.name));
        }
        for import in &ext.imports {
            if !self.contains(import) {
                return Err(LinkError::MissingImport { extension: ext.name.clone(), import: import.clone() });
            }
        }
        self.check(&ext)?;

        let e = self.extensions.len();
        for (i, k) in ext.kinds.iter().enumerate() {
            self.kinds.insert(k.category.id(), (e, i));
        }
        for (i, m) in ext.mixins.iter().enumerate() {
            self.mixins.insert(m.id(), (e, i));
        }
        for (i, d) in ext.datatypes.iter().enumerate() {
            self.datatypes.insert(d.name.clone(), (e, i));
        }
        self.extensions.push(ext);
        Ok(())
    }

    fn import_closure<'a>(&'a self, ext: &'a OcciExtension) -> BTreeSet<&'a str> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&str> = ext.imports.iter().map(String::as_str).collect();
        while let Some(name) = queue.pop_front() {
            if seen.insert(name) {
                if let Some(dep) = self.extension(name) {
                    queue.extend(dep.imports.iter().map(String::as_str));
                }
            }
        }
        seen
    }

    fn check(&self, ext: &OcciExtension) -> Result<(), LinkError> {
        let scope = Scope { set: self, ext, visible: self.import_closure(ext) };

        // identities
        let mut local = BTreeSet::new();
        let categories = ext.kinds.iter().map(|k| &k.category).chain(ext.mixins.iter().map(|m| &m.category));
        for cat in categories {
            check_category_syntax(cat)?;
            let id = cat.id();
            if self.kinds.contains_key(&id) || self.mixins.contains_key(&id) || !local.insert(id.clone()) {
                return Err(LinkError::DuplicateCategory(id));
            }
        }
        let mut names = BTreeSet::new();
        for d in &ext.datatypes {
            if self.datatypes.contains_key(&d.name) || !names.insert(d.name.as_str()) {
                return Err(LinkError::DuplicateDataType(d.name.clone()));
            }
        }

        // datatypes
        for d in &ext.datatypes {
            d.datatype
                .check_definition()
                .map_err(|reason| LinkError::InvalidDataType { name: d.name.clone(), reason })?;
            for r in d.datatype.references() {
                if scope.datatype(r).is_none() {
                    return Err(unresolved(&d.name, "datatype", r));
                }
            }
        }

        // kinds
        for kind in &ext.kinds {
            let owner = kind.category.id();
            check_attributes(&scope, &owner, &kind.category.attributes)?;
            for action in &kind.actions {
                check_attributes(&scope, &owner, &action.parameters)?;
            }
            if let Some(parent) = &kind.parent {
                if !scope.has_kind(parent) {
                    return Err(unresolved(&owner, "parent kind", parent));
                }
            }
            let root = kind_root(&scope, kind).ok_or_else(|| LinkError::KindHierarchy(owner.clone()))?;
            let expected = if root == ids::LINK { EntityRole::Link } else { EntityRole::Resource };
            if kind.entity_role != expected {
                return Err(LinkError::KindRole(owner));
            }
        }

        // mixins
        for mixin in &ext.mixins {
            let owner = mixin.id();
            check_attributes(&scope, &owner, &mixin.category.attributes)?;
            for action in &mixin.actions {
                check_attributes(&scope, &owner, &action.parameters)?;
            }
            for dep in &mixin.depends {
                if !scope.has_mixin(dep) {
                    return Err(unresolved(&owner, "depends", dep));
                }
            }
            for target in &mixin.applies {
                if !scope.has_kind(target) {
                    return Err(unresolved(&owner, "applies", target));
                }
            }
            for constraint in &mixin.constraints {
                for r in constraint.body.category_refs() {
                    if !scope.has_kind(r) && !scope.has_mixin(r) {
                        return Err(unresolved(&owner, "constraint category", r));
                    }
                }
            }
        }
        self.check_mixin_cycles(ext)
    }

    /// Depth-first search over the depends graph of `ext` (earlier extensions
    /// cannot depend on it, so a cycle must pass through `ext`).
    fn check_mixin_cycles(&self, ext: &OcciExtension) -> Result<(), LinkError> {
        let local: BTreeMap<String, &Mixin> = ext.mixins.iter().map(|m| (m.id(), m)).collect();
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        let mut marks: BTreeMap<&str, Mark> = BTreeMap::new();
        fn visit<'a>(
            id: &'a str,
            local: &'a BTreeMap<String, &Mixin>,
            marks: &mut BTreeMap<&'a str, Mark>,
            path: &mut Vec<&'a str>,
        ) -> Result<(), LinkError> {
            match marks.get(id) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Active) => {
                    let start = path.iter().position(|p| *p == id).unwrap_or(0);
                    let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(id.to_string());
                    return Err(LinkError::MixinCycle(cycle));
                }
                None => {}
            }
            let Some(mixin) = local.get(id) else { return Ok(()) };
            marks.insert(id, Mark::Active);
            path.push(id);
            for dep in &mixin.depends {
                let dep_key = local.get_key_value(dep.as_str()).map(|(k, _)| k.as_str());
                if let Some(dep_id) = dep_key {
                    visit(dep_id, local, marks, path)?;
                }
            }
            path.pop();
            marks.insert(id, Mark::Done);
            Ok(())
        }
        for id in local.keys() {
            visit(id, &local, &mut marks, &mut Vec::new())?;
        }
        Ok(())
    }

    pub fn kind(&self, id: &str) -> Option<&Kind> {
        let (e, k) = *self.kinds.get(id)?;
        Some(&self.extensions[e].kinds[k])
    }

    pub fn mixin(&self, id: &str) -> Option<&Mixin> {
        let (e, m) = *self.mixins.get(id)?;
        Some(&self.extensions[e].mixins[m])
    }

    pub fn kinds(&self) -> impl Iterator<Item = &Kind> {
        self.extensions.iter().flat_map(|e| e.kinds.iter())
    }

    pub fn mixins(&self) -> impl Iterator<Item = &Mixin> {
        self.extensions.iter().flat_map(|e| e.mixins.iter())
    }

    /// Name of the extension declaring the kind or mixin `id`.
    pub fn extension_of(&self, id: &str) -> Option<&str> {
        let (e, _) = self.kinds.get(id).or_else(|| self.mixins.get(id))?;
        Some(&self.extensions[*e].name)
    }

    /// The kind followed by its ancestors, nearest first.
    pub fn kind_ancestry(&self, id: &str) -> Vec<&Kind> {
        let mut chain = Vec::new();
        let mut next = self.kind(id);
        while let Some(kind) = next {
            chain.push(kind);
            next = kind.parent.as_deref().and_then(|p| self.kind(p));
        }
        chain
    }

    pub fn kind_is_a(&self, kind: &str, ancestor: &str) -> bool {
        self.kind_ancestry(kind).iter().any(|k| k.category.id() == ancestor)
    }

    /// The mixin followed by everything it transitively depends on, in
    /// breadth-first order without repetition.
    pub fn mixin_closure(&self, id: &str) -> Vec<&Mixin> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        queue.push_back(id.to_string());
        while let Some(next) = queue.pop_front() {
            if !seen.insert(next.clone()) {
                continue;
            }
            if let Some(m) = self.mixin(&next) {
                queue.extend(m.depends.iter().cloned());
                out.push(m);
            }
        }
        out
    }

    /// Kinds the mixin may decorate: the union of `applies` over its depends
    /// closure. Empty means unrestricted.
    pub fn anchor_kinds(&self, mixin: &str) -> BTreeSet<String> {
        self.mixin_closure(mixin).iter().flat_map(|m| m.applies.iter().cloned()).collect()
    }

    /// The single kind a mixin is anchored to, if exactly one.
    pub fn anchor_kind(&self, mixin: &str) -> Option<String> {
        let anchors = self.anchor_kinds(mixin);
        if anchors.len() == 1 {
            anchors.into_iter().next()
        } else {
            None
        }
    }

    /// Finds the definition of attribute `name` reachable from `mixin`.
    pub fn mixin_attribute(&self, mixin: &str, name: &str) -> Option<&AttributeDef> {
        self.mixin_closure(mixin).into_iter().find_map(|m| m.category.attribute(name))
    }

    /// All attributes reachable from `mixin`, nearest declaration first.
    pub fn mixin_attributes(&self, mixin: &str) -> Vec<&AttributeDef> {
        let mut names = BTreeSet::new();
        let mut out = Vec::new();
        for m in self.mixin_closure(mixin) {
            for a in &m.category.attributes {
                if names.insert(a.name.as_str()) {
                    out.push(a);
                }
            }
        }
        out
    }

    pub fn kind_attribute(&self, kind: &str, name: &str) -> Option<&AttributeDef> {
        self.kind_ancestry(kind).into_iter().find_map(|k| k.category.attribute(name))
    }

    pub fn kind_attributes(&self, kind: &str) -> Vec<&AttributeDef> {
        self.kind_ancestry(kind).into_iter().flat_map(|k| k.category.attributes.iter()).collect()
    }

    /// True when the category `reference` names the entity's kind (or a parent
    /// kind) or a mixin in the closure of one of its mixin bases.
    pub fn entity_matches(&self, entity: EntityRef<'_>, reference: &str) -> bool {
        self.kind_is_a(entity.kind(), reference)
            || entity.mixin_bases().iter().any(|mb| self.mixin_closure(&mb.mixin).iter().any(|m| m.id() == reference))
    }
}

fn unresolved(owner: &str, what: &'static str, reference: &str) -> LinkError {
    LinkError::Unresolved { owner: owner.to_string(), what, reference: reference.to_string() }
}

fn check_category_syntax(cat: &Category) -> Result<(), LinkError> {
    if !cat.scheme.ends_with('#') {
        return Err(LinkError::InvalidScheme(cat.scheme.clone()));
    }
    if !is_valid_term(&cat.term) {
        return Err(LinkError::InvalidTerm(cat.term.clone()));
    }
    Ok(())
}

fn check_attributes(scope: &Scope<'_>, owner: &str, attributes: &[AttributeDef]) -> Result<(), LinkError> {
    for attr in attributes {
        let Some(dt) = scope.datatype(&attr.datatype) else {
            return Err(unresolved(owner, "datatype", &attr.datatype));
        };
        if let Some(default) = &attr.default {
            if !check_datatype(default, dt, scope) {
                return Err(LinkError::InvalidDefault {
                    owner: owner.to_string(),
                    attribute: attr.name.clone(),
                    datatype: attr.datatype.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Follows parents up to a root kind, returning the root id. `None` if the
/// chain is cyclic, dangles, or ends at a non-root kind.
fn kind_root(scope: &Scope<'_>, kind: &Kind) -> Option<String> {
    let mut seen = BTreeSet::new();
    let mut current = kind;
    loop {
        let id = current.category.id();
        if !seen.insert(id.clone()) {
            return None;
        }
        match &current.parent {
            None => return (id == ids::RESOURCE || id == ids::LINK).then_some(id),
            Some(parent) => current = scope.kind(parent)?,
        }
    }
}
