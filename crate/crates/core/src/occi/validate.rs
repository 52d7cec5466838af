use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{EntityRef, Link, OcciConfiguration};
use super::constraint::{ConstraintExpr, Direction};
use super::datatype::{check_datatype, compile_anchored, DataTypeLookup};
use super::extension::{AttributeDef, EntityRole};
use super::set::ExtensionSet;

/// One problem found in a configuration.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    pub entity_id: String,
    /// Constraint name, attribute name, or one of the structural rules
    /// (`use`, `duplicate-id`, `kind`, `mixin`, `applies`, `source`, `target`).
    pub rule: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.entity_id, self.rule, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// Violations whose rule is `rule`.
    pub fn named<'a>(&'a self, rule: &'a str) -> impl Iterator<Item = &'a Violation> + 'a {
        self.violations.iter().filter(move |v| v.rule == rule)
    }
}

struct Checker<'a> {
    cfg: &'a OcciConfiguration,
    exts: &'a ExtensionSet,
    outgoing: BTreeMap<&'a str, Vec<&'a Link>>,
    incoming: BTreeMap<&'a str, Vec<&'a Link>>,
    violations: Vec<Violation>,
}

/// Checks a configuration against a linked extension set: referential
/// integrity, kind/mixin resolution and applicability, attribute datatypes,
/// required attributes and every constraint carried by the entities' mixins.
pub fn validate_configuration(cfg: &OcciConfiguration, exts: &ExtensionSet) -> ValidationReport {
    let mut outgoing: BTreeMap<&str, Vec<&Link>> = BTreeMap::new();
    let mut incoming: BTreeMap<&str, Vec<&Link>> = BTreeMap::new();
    for link in &cfg.links {
        outgoing.entry(link.source.as_str()).or_default().push(link);
        incoming.entry(link.target.as_str()).or_default().push(link);
    }
    let mut checker = Checker { cfg, exts, outgoing, incoming, violations: Vec::new() };

    for name in &cfg.uses {
        if !exts.contains(name) {
            checker.report("", "use", format!("extension {name:?} is not loaded"));
        }
    }
    let mut seen = BTreeSet::new();
    for entity in cfg.entities() {
        if !seen.insert(entity.id()) {
            checker.report(entity.id(), "duplicate-id", "id is used by more than one entity".into());
        }
    }
    for entity in cfg.entities() {
        checker.entity(entity);
    }

    let mut violations = checker.violations;
    violations.sort();
    violations.dedup();
    ValidationReport { violations }
}

impl<'a> Checker<'a> {
    fn report(&mut self, entity: &str, rule: &str, message: String) {
        self.violations.push(Violation { entity_id: entity.to_string(), rule: rule.to_string(), message });
    }

    fn entity(&mut self, entity: EntityRef<'a>) {
        let id = entity.id();
        match self.exts.kind(entity.kind()) {
            None => self.report(id, "kind", format!("unknown kind {}", entity.kind())),
            Some(kind) => {
                let expected = if entity.is_link() { EntityRole::Link } else { EntityRole::Resource };
                if kind.entity_role != expected {
                    self.report(id, "kind", format!("kind {} cannot be used for this entity", entity.kind()));
                }
            }
        }
        if let EntityRef::Link(link) = entity {
            if self.cfg.resource(&link.source).is_none() {
                self.report(id, "source", format!("source {:?} is not a resource of the configuration", link.source));
            }
            if self.cfg.resource(&link.target).is_none() {
                self.report(id, "target", format!("target {:?} is not a resource of the configuration", link.target));
            }
        }

        for (name, value) in entity.attribute_values() {
            match self.exts.kind_attribute(entity.kind(), name).or_else(|| self.any_mixin_attribute(entity, name)) {
                None => self.report(id, name, "attribute is not declared by the kind or its mixins".into()),
                Some(def) => self.value(id, def, value),
            }
        }

        for base in entity.mixin_bases() {
            if self.exts.mixin(&base.mixin).is_none() {
                self.report(id, "mixin", format!("unknown mixin {}", base.mixin));
                continue;
            }
            let anchors = self.exts.anchor_kinds(&base.mixin);
            if !anchors.is_empty() && !anchors.iter().any(|a| self.exts.kind_is_a(entity.kind(), a)) {
                self.report(id, "applies", format!("mixin {} does not apply to kind {}", base.mixin, entity.kind()));
            }
            for (name, value) in &base.attribute_values {
                match self.exts.mixin_attribute(&base.mixin, name) {
                    None => self.report(id, name, format!("attribute is not declared by mixin {}", base.mixin)),
                    Some(def) => self.value(id, def, value),
                }
            }
            for def in self.exts.mixin_attributes(&base.mixin) {
                if def.required && def.default.is_none() && entity.attribute(&def.name).is_none() {
                    self.report(id, &def.name, format!("required attribute of mixin {} is missing", base.mixin));
                }
            }
            for mixin in self.exts.mixin_closure(&base.mixin) {
                for constraint in &mixin.constraints {
                    if !self.holds(entity, &constraint.body) {
                        self.report(
                            id,
                            &constraint.name,
                            format!("constraint of mixin {} does not hold: {}", mixin.id(), constraint.body),
                        );
                    }
                }
            }
        }
    }

    fn any_mixin_attribute(&self, entity: EntityRef<'a>, name: &str) -> Option<&'a AttributeDef> {
        entity.mixin_bases().iter().find_map(|b| self.exts.mixin_attribute(&b.mixin, name))
    }

    fn value(&mut self, id: &str, def: &AttributeDef, value: &Value) {
        let ok = self.exts.datatype(&def.datatype).is_some_and(|dt| check_datatype(value, dt, self.exts));
        if !ok {
            self.report(id, &def.name, format!("value {value} does not conform to datatype {}", def.datatype));
        }
    }

    fn holds(&self, entity: EntityRef<'a>, expr: &ConstraintExpr) -> bool {
        match expr {
            ConstraintExpr::ExistsLink { direction, link, peer } => {
                let (links, peer_of): (_, fn(&Link) -> &str) = match direction {
                    Direction::Out => (self.outgoing.get(entity.id()), |l| &l.target),
                    Direction::In => (self.incoming.get(entity.id()), |l| &l.source),
                };
                links.into_iter().flatten().any(|l| {
                    self.exts.entity_matches(EntityRef::Link(l), link)
                        && self.cfg.entity(peer_of(l)).is_some_and(|p| self.exts.entity_matches(p, peer))
                })
            }
            ConstraintExpr::AttrMatches { attribute, pattern } => match entity.attribute(attribute) {
                Some(Value::String(s)) => compile_anchored(pattern).is_some_and(|re| re.is_match(s.as_str())),
                _ => false,
            },
            ConstraintExpr::And(items) => items.iter().all(|e| self.holds(entity, e)),
            ConstraintExpr::Or(items) => items.iter().any(|e| self.holds(entity, e)),
            ConstraintExpr::Not(inner) => !self.holds(entity, inner),
        }
    }
}
