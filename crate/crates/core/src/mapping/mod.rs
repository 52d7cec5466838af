//! Compilation of a resolved TOSCA type registry into the OCCI "TOSCA
//! extension": one mixin per node, relationship, capability and interface
//! type, plus the datatypes their attributes need.

mod datatypes;
mod rules;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use datatypes::{map_property, map_property_type, normalize_value, DataTypePool, Deferred, TypeRef};
pub use rules::{
    ActionRename, MappingRule, RuleTable, RuleTarget, CONFIGURE_INTERFACE, SOURCE_MUST_BE_SOFTWARE_COMPONENT,
    STANDARD_INTERFACE,
};

use crate::occi::{
    ids, is_valid_term, ActionDef, AttributeDef, Category, ConstraintDef, ConstraintExpr, DataType, Direction,
    ExtensionSet, LinkError, Mixin, OcciExtension, RecordField,
};
use crate::tosca::{ToscaTypeDef, ToscaTypeRegistry, TypeClass, DEPENDS_ON, HOSTED_ON};

/// Name of the generated extension.
pub const TOSCA_EXTENSION: &str = "tosca";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MappingError {
    #[error("{ty}: {reason}")]
    TypeMapping { ty: String, reason: String },
    #[error("type {0:?} matches no rule and has no mapped parent")]
    UnmappedType(String),
    #[error("{ty}: requirement {requirement:?}: {reason}")]
    ConstraintCompile { ty: String, requirement: String, reason: String },
    #[error("types {0:?} and {1:?} mangle to the same term")]
    TermClash(String, String),
    #[error("generated extension does not link: {0}")]
    Link(#[from] LinkError),
    #[error("{} node or relationship types could not be mapped; first: {}", .0.len(), .0[0])]
    Aggregate(Vec<MappingError>),
}

/// Turns a dotted TOSCA name into a category term: every character that is
/// not allowed in a term becomes `_`.
pub fn mangle_name(name: &str) -> String {
    let mut out: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if out.chars().next().is_none_or(|c| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

/// Identifier of the mixin generated for a TOSCA type.
pub fn mixin_id(tosca_name: &str) -> String {
    ids::category_id(ids::TOSCA_SCHEME, &mangle_name(tosca_name))
}

fn action_scheme(term: &str) -> String {
    format!("http://occiware.org/tosca/{term}/action#")
}

/// Mixin counts of a generated extension, grouped by the extension of the
/// kind each mixin is anchored to (`none` for unanchored mixins).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MappingReport {
    pub mixins: usize,
    pub by_extension: BTreeMap<String, usize>,
    pub datatypes: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl MappingReport {
    /// The census part only, without errors.
    pub fn census(&self) -> MappingReport {
        MappingReport { errors: Vec::new(), ..self.clone() }
    }
}

/// A mapped mixin with attributes still waiting for named datatypes.
#[derive(Clone, Debug)]
pub struct MappedMixin {
    pub mixin: Mixin,
    pub deferred: Vec<(usize, Deferred)>,
}

struct Anchors<'a> {
    registry: &'a ToscaTypeRegistry,
    rules: &'a RuleTable,
}

impl Anchors<'_> {
    /// Kind the type's own mixin applies to. Exact rules win; otherwise a
    /// type inherits its anchor, and only unanchored hierarchies fall back to
    /// the class default.
    fn own_applies(&self, name: &str) -> Option<String> {
        if let Some(kind) = self.rules.applies(name) {
            return Some(kind.to_string());
        }
        if self.rules.has_rule(name) {
            return None;
        }
        let def = self.registry.get(name)?;
        let parent_anchored = def.derived_from.as_deref().is_some_and(|p| self.anchored(p, 0));
        if parent_anchored {
            return None;
        }
        match def.type_class {
            TypeClass::Node => Some(ids::RESOURCE.to_string()),
            TypeClass::Relationship => Some(ids::LINK.to_string()),
            _ => None,
        }
    }

    fn anchored(&self, name: &str, depth: usize) -> bool {
        if depth > 64 {
            return false;
        }
        if self.own_applies(name).is_some() {
            return true;
        }
        let parent = self.registry.get(name).and_then(|d| d.derived_from.as_deref());
        parent.into_iter().chain(self.rules.extra_depends(name)).any(|t| self.anchored(t, depth + 1))
    }

    /// Kind the mixin of `name` ends up decorating, following depends.
    fn anchor_kind(&self, name: &str) -> Option<String> {
        let mut queue = alloc::collections::VecDeque::from([name.to_string()]);
        let mut seen = BTreeSet::new();
        while let Some(next) = queue.pop_front() {
            if !seen.insert(next.clone()) {
                continue;
            }
            if let Some(kind) = self.own_applies(&next) {
                return Some(kind);
            }
            if let Some(p) = self.registry.get(&next).and_then(|d| d.derived_from.clone()) {
                queue.push_back(p);
            }
            queue.extend(self.rules.extra_depends(&next).into_iter().map(String::from));
        }
        None
    }
}

fn is_named_datatype(registry: &ToscaTypeRegistry) -> impl Fn(&str) -> bool + '_ {
    move |n: &str| registry.get(n).is_some_and(|t| t.type_class == TypeClass::Datatype)
}

fn push_unique(list: &mut Vec<String>, item: String) {
    if !list.contains(&item) {
        list.push(item);
    }
}

/// Maps one node, relationship, capability or interface type to a mixin.
pub fn map_type(
    def: &ToscaTypeDef,
    registry: &ToscaTypeRegistry,
    rules: &RuleTable,
    pool: &mut DataTypePool<'_>,
) -> Result<MappedMixin, MappingError> {
    if def.type_class == TypeClass::Datatype {
        return Err(MappingError::TypeMapping {
            ty: def.name.clone(),
            reason: "datatypes do not map to mixins".into(),
        });
    }
    let root = def.type_class.root();
    if def.derived_from.is_none() && def.name != root && !rules.has_rule(&def.name) {
        return Err(MappingError::UnmappedType(def.name.clone()));
    }
    let anchors = Anchors { registry, rules };

    let mut mixin = Mixin::new(Category {
        term: mangle_name(&def.name),
        scheme: ids::TOSCA_SCHEME.into(),
        title: def.description.clone(),
        attributes: Vec::new(),
    });

    // depends: parent, rule extras, declared capabilities
    let mut depends = Vec::new();
    let mut targets: Vec<&str> = def.derived_from.iter().map(String::as_str).collect();
    targets.extend(rules.extra_depends(&def.name));
    targets.extend(def.capabilities.values().map(String::as_str));
    for t in targets {
        if !registry.contains(t) {
            return Err(MappingError::TypeMapping {
                ty: def.name.clone(),
                reason: format!("depends on unknown type {t:?}"),
            });
        }
        push_unique(&mut depends, mixin_id(t));
    }
    mixin.depends = depends;

    let own_applies = anchors.own_applies(&def.name);
    mixin.applies = own_applies.iter().cloned().collect();

    // attributes
    let is_named = is_named_datatype(registry);
    let mut deferred = Vec::new();
    for (prop, is_attribute) in
        def.properties.iter().map(|p| (p, false)).chain(def.attributes.iter().map(|p| (p, true)))
    {
        if mixin.category.attributes.iter().any(|a| a.name == prop.name) {
            continue;
        }
        let (mut attr, pending) = map_property(prop, pool, &is_named)
            .map_err(|e| MappingError::TypeMapping { ty: def.name.clone(), reason: e.to_string() })?;
        if is_attribute {
            attr.required = false;
            attr.mutable = false;
        }
        if let Some(d) = pending {
            deferred.push((mixin.category.attributes.len(), d));
        }
        mixin.category.attributes.push(attr);
    }

    // actions
    let mut operations: Vec<(String, String)> = Vec::new();
    if def.type_class == TypeClass::Interface {
        for op in registry.interface_type_operations(&def.name) {
            operations.push((def.name.clone(), op));
        }
    } else if own_applies.is_some() {
        for iface in registry.effective_interfaces(&def.name).into_iter().flat_map(|m| m.values()) {
            operations.extend(iface.operations.iter().map(|op| (iface.type_name.clone(), op.clone())));
        }
    } else {
        for decl in def.interfaces.values() {
            let mut ops = registry.interface_type_operations(&decl.type_name);
            ops.extend(decl.operations.iter().cloned());
            operations.extend(ops.into_iter().map(|op| (decl.type_name.clone(), op)));
        }
    }
    let kind = anchors.anchor_kind(&def.name);
    for (iface, op) in operations {
        let renamed =
            kind.as_deref().and_then(|k| registry.ancestry(&iface).iter().find_map(|i| rules.rename(&i.name, &op, k)));
        let term = renamed.map(str::to_string).unwrap_or(op);
        if mixin.actions.iter().any(|a| a.category.term == term) {
            continue;
        }
        if !is_valid_term(&term) {
            return Err(MappingError::TypeMapping {
                ty: def.name.clone(),
                reason: format!("invalid operation name {term:?}"),
            });
        }
        mixin.actions.push(ActionDef {
            category: Category::new(action_scheme(&mixin.category.term), term),
            parameters: Vec::new(),
        });
    }

    // constraints
    for c in rules.constraints(&def.name) {
        mixin.constraints.push(c.clone());
    }
    if def.type_class == TypeClass::Node {
        for req in &def.requirements {
            if req.occurrences().min == 0 {
                continue;
            }
            mixin.constraints.push(compile_requirement(def, req, registry)?);
        }
    }

    Ok(MappedMixin { mixin, deferred })
}

/// `Requires_<name>`: an outgoing link of the requirement's relationship to
/// a node offering the required capability. Hosting may also be expressed
/// by a placement link.
fn compile_requirement(
    def: &ToscaTypeDef,
    req: &crate::tosca::ToscaRequirementDef,
    registry: &ToscaTypeRegistry,
) -> Result<ConstraintDef, MappingError> {
    let fail = |reason: String| MappingError::ConstraintCompile {
        ty: def.name.clone(),
        requirement: req.name.clone(),
        reason,
    };
    let capability = registry
        .get(&req.capability)
        .filter(|c| c.type_class == TypeClass::Capability)
        .ok_or_else(|| fail(format!("unknown capability type {:?}", req.capability)))?;
    let relationship = req.relationship.as_deref().unwrap_or(DEPENDS_ON);
    if registry.get(relationship).is_none_or(|r| r.type_class != TypeClass::Relationship) {
        return Err(fail(format!("unknown relationship type {relationship:?}")));
    }
    let peer = mixin_id(&capability.name);
    let mut body = ConstraintExpr::exists_link(Direction::Out, mixin_id(relationship), peer.clone());
    if registry.is_a(relationship, HOSTED_ON) {
        body = ConstraintExpr::Or(alloc::vec![
            body,
            ConstraintExpr::exists_link(Direction::Out, ids::PLACEMENTLINK, peer)
        ]);
    }
    Ok(ConstraintDef { name: format!("Requires_{}", mangle_name(&req.name)), body })
}

fn last_segment(name: &str) -> &str {
    name.rsplit('.').next().unwrap_or(name)
}

/// Maps a TOSCA datatype to a record type (or the datatype named by a rule).
/// Field types that are themselves named datatypes must already be bound in
/// `pool`. Returns `None` for datatypes that are dropped.
pub fn map_datatype(
    def: &ToscaTypeDef,
    registry: &ToscaTypeRegistry,
    rules: &RuleTable,
    pool: &mut DataTypePool<'_>,
) -> Result<Option<String>, MappingError> {
    let fail = |reason: String| MappingError::TypeMapping { ty: def.name.clone(), reason };
    let target = rules.datatype_target(&def.name);
    if let Some(None) = target {
        return Ok(None);
    }
    if let Some(Some(name)) = target {
        if pool.datatype_exists(name) && !matches!(pool.lookup(name), Some(DataType::RecordType { .. })) {
            pool.bind_named(&def.name, name);
            return Ok(Some(name.to_string()));
        }
    }
    let is_named = is_named_datatype(registry);
    let mut fields = Vec::new();
    for prop in registry.effective_properties(&def.name) {
        let datatype = match map_property_type(prop, pool, &is_named)? {
            TypeRef::Ready(n) => n,
            TypeRef::Deferred(d) => d
                .resolve(pool)
                .ok_or_else(|| fail(format!("field {:?} refers to unmapped {:?}", prop.name, d.tosca_name())))?,
        };
        fields.push(RecordField { name: prop.name.clone(), datatype });
    }
    if fields.is_empty() {
        return Err(fail("a record type needs at least one field".into()));
    }
    let dt = DataType::RecordType { record_fields: fields };
    let name = match target {
        Some(Some(name)) => {
            pool.insert_exact(name, dt)?;
            name.to_string()
        }
        _ => pool.intern(&format!("{}RecordType", mangle_name(last_segment(&def.name))), dt),
    };
    pool.bind_named(&def.name, &name);
    Ok(Some(name))
}

impl DataTypePool<'_> {
    fn datatype_exists(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    fn lookup(&self, name: &str) -> Option<&DataType> {
        crate::occi::DataTypeLookup::datatype(self, name)
    }
}

/// Maps every datatype of the registry, dependencies first.
fn map_all_datatypes(
    registry: &ToscaTypeRegistry,
    rules: &RuleTable,
    pool: &mut DataTypePool<'_>,
    errors: &mut Vec<MappingError>,
) {
    fn visit(
        name: &str,
        registry: &ToscaTypeRegistry,
        rules: &RuleTable,
        pool: &mut DataTypePool<'_>,
        errors: &mut Vec<MappingError>,
        active: &mut BTreeSet<String>,
        done: &mut BTreeSet<String>,
    ) {
        if done.contains(name) {
            return;
        }
        let Some(def) = registry.get(name) else { return };
        if !active.insert(name.to_string()) {
            errors.push(MappingError::TypeMapping { ty: name.to_string(), reason: "datatype refers to itself".into() });
            return;
        }
        for prop in registry.effective_properties(name) {
            for dep in [Some(prop.tosca_type.as_str()), prop.entry_schema.as_deref()].into_iter().flatten() {
                if registry.get(dep).is_some_and(|t| t.type_class == TypeClass::Datatype) {
                    visit(dep, registry, rules, pool, errors, active, done);
                }
            }
        }
        if let Err(e) = map_datatype(def, registry, rules, pool) {
            errors.push(e);
        }
        active.remove(name);
        done.insert(name.to_string());
    }
    let mut active = BTreeSet::new();
    let mut done = BTreeSet::new();
    let names: Vec<String> = registry.types_of(TypeClass::Datatype).map(|d| d.name.clone()).collect();
    for name in names {
        visit(&name, registry, rules, pool, errors, &mut active, &mut done);
    }
}

/// The generated extension together with its census.
#[derive(Clone, Debug)]
pub struct GeneratedExtension {
    pub extension: OcciExtension,
    pub report: MappingReport,
}

/// Builds the TOSCA extension. Types are visited group by group (nodes,
/// relationships, capabilities, interfaces, then datatypes), by name within
/// a group. Attributes typed by a named datatype are completed in a second
/// pass once datatypes are mapped. Capability and interface types that fail
/// are reported and left out; a failing node or relationship type fails the
/// whole mapping.
pub fn generate_extension(
    registry: &ToscaTypeRegistry,
    rules: &RuleTable,
    base: &ExtensionSet,
) -> Result<GeneratedExtension, MappingError> {
    let mut pool = DataTypePool::new(base);
    let mut fatal = Vec::new();
    let mut soft = Vec::new();
    let mut mapped: Vec<(TypeClass, MappedMixin)> = Vec::new();
    let mut terms: BTreeMap<String, String> = BTreeMap::new();

    for class in [TypeClass::Node, TypeClass::Relationship, TypeClass::Capability, TypeClass::Interface] {
        for def in registry.types_of(class) {
            let term = mangle_name(&def.name);
            if let Some(other) = terms.insert(term, def.name.clone()) {
                fatal.push(MappingError::TermClash(other, def.name.clone()));
                continue;
            }
            match map_type(def, registry, rules, &mut pool) {
                Ok(m) => mapped.push((class, m)),
                Err(e) if matches!(class, TypeClass::Node | TypeClass::Relationship) => fatal.push(e),
                Err(e) => soft.push(e),
            }
        }
    }

    map_all_datatypes(registry, rules, &mut pool, &mut soft);

    for (class, m) in &mut mapped {
        for (index, d) in core::mem::take(&mut m.deferred) {
            match d.resolve(&mut pool) {
                Some(name) => m.mixin.category.attributes[index].datatype = name,
                None => {
                    let e = MappingError::TypeMapping {
                        ty: m.mixin.category.term.clone(),
                        reason: format!(
                            "attribute {:?} refers to unmapped datatype {:?}",
                            m.mixin.category.attributes[index].name,
                            d.tosca_name()
                        ),
                    };
                    if matches!(class, TypeClass::Node | TypeClass::Relationship) {
                        fatal.push(e);
                    } else {
                        soft.push(e);
                    }
                }
            }
        }
    }
    if !fatal.is_empty() {
        return Err(MappingError::Aggregate(fatal));
    }

    let present: BTreeSet<String> = mapped.iter().map(|(_, m)| m.mixin.id()).collect();
    let mut mixins: Vec<Mixin> = mapped.into_iter().map(|(_, m)| m.mixin).collect();
    for m in &mut mixins {
        m.depends.retain(|d| present.contains(d));
    }

    let extension = OcciExtension {
        name: TOSCA_EXTENSION.into(),
        scheme: ids::TOSCA_SCHEME.into(),
        imports: base.extensions().iter().map(|e| e.name.clone()).collect(),
        kinds: Vec::new(),
        mixins,
        datatypes: pool.into_entries(),
    };

    let mut linked = base.clone();
    linked.add(extension.clone())?;
    let mut report = census(&linked, &extension);
    report.errors = soft.iter().map(|e| e.to_string()).collect();
    Ok(GeneratedExtension { extension, report })
}

/// Counts the mixins of `ext` by the extension of their anchor kind.
pub fn census(set: &ExtensionSet, ext: &OcciExtension) -> MappingReport {
    let mut by_extension = BTreeMap::new();
    for m in &ext.mixins {
        let owners: BTreeSet<&str> =
            set.anchor_kinds(&m.id()).iter().filter_map(|k| set.extension_of(k)).collect::<BTreeSet<_>>();
        let key = match owners.len() {
            0 => "none".to_string(),
            1 => owners.iter().next().map(|s| s.to_string()).unwrap_or_default(),
            _ => "mixed".to_string(),
        };
        *by_extension.entry(key).or_insert(0) += 1;
    }
    MappingReport { mixins: ext.mixins.len(), by_extension, datatypes: ext.datatypes.len(), errors: Vec::new() }
}

/// Attribute definition of a TOSCA property as it appears on the mixin.
pub fn attribute_of<'a>(ext: &'a OcciExtension, tosca_type: &str, name: &str) -> Option<&'a AttributeDef> {
    ext.mixin(&mixin_id(tosca_type)).and_then(|m| m.category.attribute(name))
}
