//! TOSCA Simple Profile YAML: type definition documents and topology
//! templates, plus a canonical emitter used for round trips.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::marker::PhantomData;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::Value;
use serde_yaml::{Mapping, Value as Yaml};

use tosca2occi_core::tosca::{
    InterfaceDecl, Occurrences, RawGroup, RequirementBinding, ToscaConstraint, ToscaNodeTemplate, ToscaPropertyDef,
    ToscaRelationshipTemplate, ToscaRequirementDef, ToscaTopology, ToscaTypeDef, TypeClass,
};

pub const DEFINITIONS_VERSION: &str = "tosca_simple_yaml_1_0";

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("invalid YAML: {0}")]
    Yaml(#[from] serde_yaml::Error),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("type {0:?} is defined more than once")]
    DuplicateType(String),
    #[error("node template {template:?}: requirement {requirement:?} targets unknown template {target:?}")]
    DanglingReference { template: String, requirement: String, target: String },
    #[error("input {0:?} has no value and no default")]
    MissingInput(String),
    #[error("document has no topology_template section")]
    MissingTopology,
}

fn schema(path: impl fmt::Display, message: impl fmt::Display) -> ParseError {
    ParseError::Schema { path: path.to_string(), message: message.to_string() }
}

/// Map entries in document order, duplicates included.
struct Entries<V>(Vec<(String, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for Entries<V> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V2<V>(PhantomData<V>);
        impl<'de, V: Deserialize<'de>> Visitor<'de> for V2<V> {
            type Value = Entries<V>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a mapping with string keys")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = map.next_entry()? {
                    out.push(entry);
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V2(PhantomData))
    }
}

/// A top-level section: either a mapping whose entries are kept as written,
/// or any other value.
#[derive(Deserialize)]
#[serde(untagged)]
enum Section {
    Map(Entries<Section2>),
    Other(Yaml),
}

/// Second level of a section, kept as written too so that templates and
/// types with clashing names surface as errors of their own.
#[derive(Deserialize)]
#[serde(untagged)]
enum Section2 {
    Map(Entries<Yaml>),
    Other(Yaml),
}

impl Section {
    fn entries(self, path: &str) -> Result<Vec<(String, Section2)>, ParseError> {
        match self {
            Section::Map(e) => Ok(e.0),
            Section::Other(Yaml::Null) => Ok(Vec::new()),
            Section::Other(_) => Err(schema(path, "expected a mapping")),
        }
    }

    fn into_yaml(self) -> Yaml {
        match self {
            Section::Other(y) => y,
            Section::Map(e) => Yaml::Mapping(e.0.into_iter().map(|(k, v)| (Yaml::String(k), v.into_yaml())).collect()),
        }
    }
}

impl Section2 {
    fn into_yaml(self) -> Yaml {
        match self {
            Section2::Other(y) => y,
            Section2::Map(e) => Yaml::Mapping(e.0.into_iter().map(|(k, v)| (Yaml::String(k), v)).collect()),
        }
    }

    fn entries(self, path: &str) -> Result<Vec<(String, Yaml)>, ParseError> {
        match self {
            Section2::Map(e) => Ok(e.0),
            Section2::Other(Yaml::Null) => Ok(Vec::new()),
            Section2::Other(_) => Err(schema(path, "expected a mapping")),
        }
    }
}

fn parse_document(doc: &str) -> Result<Vec<(String, Section)>, ParseError> {
    let top: Option<Entries<Section>> = serde_yaml::from_str(doc)?;
    Ok(top.map(|e| e.0).unwrap_or_default())
}

pub fn yaml_to_json(v: &Yaml, path: &str) -> Result<Value, ParseError> {
    serde_json::to_value(v).map_err(|e| schema(path, e))
}

fn json_to_yaml(v: &Value) -> Yaml {
    serde_yaml::to_value(v).unwrap_or(Yaml::Null)
}

fn mapping<'a>(v: &'a Yaml, path: &str) -> Result<Vec<(&'a str, &'a Yaml)>, ParseError> {
    match v {
        Yaml::Null => Ok(Vec::new()),
        Yaml::Mapping(m) => m
            .iter()
            .map(|(k, v)| k.as_str().map(|k| (k, v)).ok_or_else(|| schema(path, "mapping keys must be strings")))
            .collect(),
        _ => Err(schema(path, "expected a mapping")),
    }
}

fn string(v: &Yaml, path: &str) -> Result<String, ParseError> {
    match v {
        Yaml::String(s) => Ok(s.clone()),
        Yaml::Number(n) => Ok(n.to_string()),
        Yaml::Bool(b) => Ok(b.to_string()),
        _ => Err(schema(path, "expected a string")),
    }
}

/// A one-entry mapping, as used for requirement and constraint lists.
fn single_entry<'a>(v: &'a Yaml, path: &str) -> Result<(&'a str, &'a Yaml), ParseError> {
    let entries = mapping(v, path)?;
    match entries.as_slice() {
        [one] => Ok(*one),
        _ => Err(schema(path, "expected a mapping with exactly one key")),
    }
}

fn list<'a>(v: &'a Yaml, path: &str) -> Result<&'a [Yaml], ParseError> {
    match v {
        Yaml::Null => Ok(&[]),
        Yaml::Sequence(s) => Ok(s),
        _ => Err(schema(path, "expected a list")),
    }
}

fn ignored(path: &str) {
    log::warn!("{path}: not supported, ignored");
}

// ----- type documents -------------------------------------------------------

/// Parses a type definition document. Types come out grouped by class
/// (nodes, relationships, capabilities, interfaces, datatypes), each group
/// in declaration order.
pub fn parse_types(doc: &str) -> Result<Vec<ToscaTypeDef>, ParseError> {
    let mut defs = Vec::new();
    let mut seen = BTreeSet::new();
    for (key, section) in parse_document(doc)? {
        match TypeClass::from_section(&key) {
            Some(class) => {
                for (name, body) in section.entries(&key)? {
                    if !seen.insert(name.clone()) {
                        return Err(ParseError::DuplicateType(name));
                    }
                    let body = body.into_yaml();
                    defs.push(parse_type(&name, class, &body)?);
                }
            }
            None => top_level_key(&key, "topology_template")?,
        }
    }
    defs.sort_by_key(|d| d.type_class);
    Ok(defs)
}

fn top_level_key(key: &str, also_ignored: &str) -> Result<(), ParseError> {
    match key {
        "tosca_definitions_version" | "description" | "metadata" | "dsl_definitions" => Ok(()),
        "imports" | "repositories" | "artifact_types" | "policy_types" | "group_types" => {
            ignored(key);
            Ok(())
        }
        k if k == also_ignored || TypeClass::from_section(k).is_some() => {
            ignored(key);
            Ok(())
        }
        _ => Err(schema(key, "unknown top-level section")),
    }
}

fn parse_type(name: &str, class: TypeClass, body: &Yaml) -> Result<ToscaTypeDef, ParseError> {
    if name.is_empty() {
        return Err(schema(class.section(), "empty type name"));
    }
    let mut def = ToscaTypeDef::new(name, class);
    for (key, value) in mapping(body, name)? {
        let path = format!("{name}.{key}");
        match (key, class) {
            ("derived_from", _) => def.derived_from = Some(string(value, &path)?),
            ("description", _) => def.description = Some(string(value, &path)?),
            ("version" | "metadata", _) => {}
            ("properties", c) if c != TypeClass::Interface => def.properties = property_defs(value, &path, true)?,
            ("attributes", TypeClass::Node | TypeClass::Relationship | TypeClass::Capability) => {
                def.attributes = property_defs(value, &path, false)?
            }
            ("requirements", TypeClass::Node) => {
                for (i, item) in list(value, &path)?.iter().enumerate() {
                    def.requirements.push(requirement_def(item, &format!("{path}[{i}]"))?);
                }
            }
            ("capabilities", TypeClass::Node) => {
                for (cap, decl) in mapping(value, &path)? {
                    let ty = match decl {
                        Yaml::Mapping(_) => {
                            let m = mapping(decl, &path)?;
                            let ty = m
                                .iter()
                                .find(|(k, _)| *k == "type")
                                .ok_or_else(|| schema(&path, "capability without type"))?;
                            string(ty.1, &path)?
                        }
                        other => string(other, &path)?,
                    };
                    def.capabilities.insert(cap.to_string(), ty);
                }
            }
            ("interfaces", TypeClass::Node | TypeClass::Relationship) => {
                for (iface, decl) in mapping(value, &path)? {
                    def.interfaces.insert(iface.to_string(), interface_decl(decl, &format!("{path}.{iface}"))?);
                }
            }
            ("artifacts", TypeClass::Node)
            | ("valid_target_types", TypeClass::Relationship)
            | ("valid_source_types", TypeClass::Capability)
            | ("constraints", TypeClass::Datatype)
            | ("inputs", TypeClass::Interface) => ignored(&path),
            (op, TypeClass::Interface) => def.operations.push(op.to_string()),
            _ => return Err(schema(path, "unknown field")),
        }
    }
    Ok(def)
}

fn interface_decl(v: &Yaml, path: &str) -> Result<InterfaceDecl, ParseError> {
    let mut type_name = None;
    let mut operations = Vec::new();
    for (key, value) in mapping(v, path)? {
        match key {
            "type" => type_name = Some(string(value, path)?),
            "inputs" | "description" => {}
            op => operations.push(op.to_string()),
        }
    }
    let type_name = type_name.ok_or_else(|| schema(path, "interface without type"))?;
    Ok(InterfaceDecl { type_name, operations })
}

fn property_defs(v: &Yaml, path: &str, default_required: bool) -> Result<Vec<ToscaPropertyDef>, ParseError> {
    mapping(v, path)?
        .into_iter()
        .map(|(name, body)| property_def(name, body, &format!("{path}.{name}"), default_required))
        .collect()
}

fn property_def(name: &str, v: &Yaml, path: &str, default_required: bool) -> Result<ToscaPropertyDef, ParseError> {
    let mut prop = ToscaPropertyDef::new(name, "");
    prop.required = default_required;
    let mut has_type = false;
    for (key, value) in mapping(v, path)? {
        let p = format!("{path}.{key}");
        match key {
            "type" => {
                prop.tosca_type = string(value, &p)?;
                has_type = true;
            }
            "description" => prop.description = Some(string(value, &p)?),
            "required" => prop.required = value.as_bool().ok_or_else(|| schema(&p, "expected a boolean"))?,
            "default" => prop.default = Some(yaml_to_json(value, &p)?),
            "status" => {}
            "entry_schema" => {
                prop.entry_schema = Some(match value {
                    Yaml::Mapping(_) => {
                        let m = mapping(value, &p)?;
                        let ty = m
                            .iter()
                            .find(|(k, _)| *k == "type")
                            .ok_or_else(|| schema(&p, "entry_schema without type"))?;
                        string(ty.1, &p)?
                    }
                    other => string(other, &p)?,
                })
            }
            "constraints" => {
                for (i, c) in list(value, &p)?.iter().enumerate() {
                    prop.constraints.push(constraint(c, &format!("{p}[{i}]"))?);
                }
            }
            _ => return Err(schema(p, "unknown field")),
        }
    }
    if !has_type {
        return Err(schema(path, "property without type"));
    }
    Ok(prop)
}

fn constraint(v: &Yaml, path: &str) -> Result<ToscaConstraint, ParseError> {
    let (op, arg) = single_entry(v, path)?;
    let json = yaml_to_json(arg, path)?;
    let length = |j: &Value| j.as_u64().ok_or_else(|| schema(path, "expected a non-negative integer"));
    Ok(match op {
        "valid_values" => match json {
            Value::Array(items) => ToscaConstraint::ValidValues(items),
            _ => return Err(schema(path, "valid_values expects a list")),
        },
        "greater_or_equal" => ToscaConstraint::GreaterOrEqual(json),
        "less_or_equal" => ToscaConstraint::LessOrEqual(json),
        "in_range" => match json {
            Value::Array(mut items) if items.len() == 2 => {
                let hi = items.pop().unwrap_or(Value::Null);
                let lo = items.pop().unwrap_or(Value::Null);
                ToscaConstraint::InRange(lo, hi)
            }
            _ => return Err(schema(path, "in_range expects two bounds")),
        },
        "min_length" => ToscaConstraint::MinLength(length(&json)?),
        "max_length" => ToscaConstraint::MaxLength(length(&json)?),
        "pattern" => ToscaConstraint::Pattern(string(arg, path)?),
        other => return Err(schema(path, format_args!("unsupported constraint {other:?}"))),
    })
}

fn requirement_def(v: &Yaml, path: &str) -> Result<ToscaRequirementDef, ParseError> {
    let (name, body) = single_entry(v, path)?;
    let mut req = ToscaRequirementDef {
        name: name.to_string(),
        capability: String::new(),
        node: None,
        relationship: None,
        occurrences: None,
    };
    if let Yaml::String(cap) = body {
        req.capability = cap.clone();
        return Ok(req);
    }
    for (key, value) in mapping(body, path)? {
        let p = format!("{path}.{key}");
        match key {
            "capability" => req.capability = string(value, &p)?,
            "node" => req.node = Some(string(value, &p)?),
            "relationship" => req.relationship = Some(type_ref(value, &p)?),
            "occurrences" => req.occurrences = Some(occurrences(value, &p)?),
            "description" | "node_filter" => {}
            _ => return Err(schema(p, "unknown field")),
        }
    }
    if req.capability.is_empty() {
        return Err(schema(path, "requirement without capability"));
    }
    Ok(req)
}

/// `Name` or `{type: Name, ...}`.
fn type_ref(v: &Yaml, path: &str) -> Result<String, ParseError> {
    match v {
        Yaml::Mapping(_) => {
            let m = mapping(v, path)?;
            let ty = m.iter().find(|(k, _)| *k == "type").ok_or_else(|| schema(path, "missing type"))?;
            string(ty.1, path)
        }
        other => string(other, path),
    }
}

fn occurrences(v: &Yaml, path: &str) -> Result<Occurrences, ParseError> {
    let items = list(v, path)?;
    let [min, max] = items else { return Err(schema(path, "expected [min, max]")) };
    let min = min.as_u64().ok_or_else(|| schema(path, "min must be a non-negative integer"))?;
    let max = match max {
        Yaml::String(s) if s == "UNBOUNDED" => None,
        other => Some(other.as_u64().ok_or_else(|| schema(path, "max must be an integer or UNBOUNDED"))?),
    };
    Ok(Occurrences { min, max })
}

// ----- topology templates ---------------------------------------------------

/// Parses `key=value` input overrides; values are read as YAML scalars so
/// `port=8080` gives a number.
pub fn parse_input_override(arg: &str) -> Option<(String, Value)> {
    let (k, v) = arg.split_once('=')?;
    let value = serde_yaml::from_str::<Yaml>(v)
        .ok()
        .and_then(|y| serde_json::to_value(y).ok())
        .filter(|j| !j.is_object() && !j.is_array() && !j.is_null())
        .unwrap_or_else(|| Value::String(v.to_string()));
    Some((k.to_string(), value))
}

/// Parses a topology template. `get_input` references are replaced by the
/// provided input value or the input's default; every declared input must
/// end up with a value, which is recorded as its default.
pub fn parse_topology(doc: &str, provided: &BTreeMap<String, Value>) -> Result<ToscaTopology, ParseError> {
    let mut topo = ToscaTopology::default();
    let mut body = None;
    for (key, section) in parse_document(doc)? {
        match key.as_str() {
            "topology_template" => body = Some(section),
            "metadata" => {
                let meta = section.into_yaml();
                for (k, v) in mapping(&meta, "metadata")? {
                    if k == "template_name" {
                        topo.name = Some(string(v, "metadata.template_name")?);
                    }
                }
            }
            "description" => topo.description = Some(string(&section.into_yaml(), "description")?),
            other => top_level_key(other, "")?,
        }
    }
    let body = body.ok_or(ParseError::MissingTopology)?;

    let mut node_section = Vec::new();
    let mut rel_section = Vec::new();
    for (key, section) in body.entries("topology_template")? {
        let path = format!("topology_template.{key}");
        match key.as_str() {
            "description" => {
                if topo.description.is_none() {
                    topo.description = Some(string(&section.into_yaml(), &path)?);
                }
            }
            "inputs" => {
                for (name, def) in section.entries(&path)? {
                    let p = format!("{path}.{name}");
                    let mut prop = property_def(&name, &def, &p, true)?;
                    if let Some(v) = provided.get(&name) {
                        prop.default = Some(v.clone());
                    }
                    if prop.default.is_none() {
                        return Err(ParseError::MissingInput(name));
                    }
                    topo.inputs.insert(name, prop);
                }
            }
            "node_templates" => node_section = section.entries(&path)?,
            "relationship_templates" => rel_section = section.entries(&path)?,
            "groups" => {
                for (name, group) in section.entries(&path)? {
                    log::warn!("group {name:?} is parsed but not instantiated");
                    topo.groups.push(RawGroup { body: yaml_to_json(&group, &format!("{path}.{name}"))?, name });
                }
            }
            "outputs" | "policies" | "substitution_mappings" | "workflows" => ignored(&path),
            _ => return Err(schema(path, "unknown field")),
        }
    }
    for name in provided.keys() {
        if !topo.inputs.contains_key(name) {
            log::warn!("input {name:?} is not declared by the topology");
        }
    }
    let inputs: BTreeMap<String, Value> =
        topo.inputs.iter().filter_map(|(k, p)| Some((k.clone(), p.default.clone()?))).collect();

    for (name, body) in rel_section {
        let path = format!("relationship_templates.{name}");
        topo.relationship_templates.push(relationship_template(&name, &body, &path, &inputs)?);
    }
    let declared: BTreeSet<String> = topo.relationship_templates.iter().map(|r| r.name.clone()).collect();
    for (name, body) in node_section {
        let path = format!("node_templates.{name}");
        let (template, synthesized) = node_template(&name, &body, &path, &inputs, &topo, &declared)?;
        topo.node_templates.push(template);
        topo.relationship_templates.extend(synthesized);
    }

    let names: BTreeSet<&str> = topo.node_templates.iter().map(|t| t.name.as_str()).collect();
    let mut ends: BTreeMap<String, (String, String)> = BTreeMap::new();
    for t in &topo.node_templates {
        for b in &t.requirement_bindings {
            if !names.contains(b.target.as_str()) {
                return Err(ParseError::DanglingReference {
                    template: t.name.clone(),
                    requirement: b.requirement.clone(),
                    target: b.target.clone(),
                });
            }
            if let Some(r) = &b.relationship_template {
                ends.entry(r.clone()).or_insert_with(|| (t.name.clone(), b.target.clone()));
            }
        }
    }
    for r in &mut topo.relationship_templates {
        if let Some((s, t)) = ends.remove(&r.name) {
            r.source_template = Some(s);
            r.target_template = Some(t);
        }
    }
    Ok(topo)
}

/// Replaces `{get_input: name}` with the input's value, recursively.
fn substitute(v: Value, inputs: &BTreeMap<String, Value>, path: &str) -> Result<Value, ParseError> {
    match v {
        Value::Object(map) if map.len() == 1 && map.contains_key("get_input") => {
            let name = match &map["get_input"] {
                Value::String(s) => s.clone(),
                Value::Array(a) if a.len() == 1 => a[0].as_str().unwrap_or_default().to_string(),
                _ => return Err(schema(path, "get_input expects an input name")),
            };
            inputs.get(&name).cloned().ok_or(ParseError::MissingInput(name))
        }
        Value::Object(map) => {
            if let Some(f) = map.keys().find(|k| k.starts_with("get_") || *k == "concat" || *k == "token") {
                if map.len() == 1 {
                    log::warn!("{path}: intrinsic function {f} is kept unevaluated");
                }
            }
            map.into_iter()
                .map(|(k, v)| Ok((k, substitute(v, inputs, path)?)))
                .collect::<Result<_, _>>()
                .map(Value::Object)
        }
        Value::Array(items) => {
            items.into_iter().map(|i| substitute(i, inputs, path)).collect::<Result<_, _>>().map(Value::Array)
        }
        other => Ok(other),
    }
}

fn values(v: &Yaml, path: &str, inputs: &BTreeMap<String, Value>) -> Result<BTreeMap<String, Value>, ParseError> {
    mapping(v, path)?
        .into_iter()
        .map(|(k, v)| {
            let p = format!("{path}.{k}");
            Ok((k.to_string(), substitute(yaml_to_json(v, &p)?, inputs, &p)?))
        })
        .collect()
}

fn relationship_template(
    name: &str,
    body: &Yaml,
    path: &str,
    inputs: &BTreeMap<String, Value>,
) -> Result<ToscaRelationshipTemplate, ParseError> {
    let mut type_name = None;
    let mut property_values = BTreeMap::new();
    for (key, value) in mapping(body, path)? {
        let p = format!("{path}.{key}");
        match key {
            "type" => type_name = Some(string(value, &p)?),
            "properties" => property_values = values(value, &p, inputs)?,
            "description" | "metadata" => {}
            "attributes" | "interfaces" => ignored(&p),
            _ => return Err(schema(p, "unknown field")),
        }
    }
    Ok(ToscaRelationshipTemplate {
        name: name.to_string(),
        type_name: type_name.ok_or_else(|| schema(path, "relationship template without type"))?,
        source_template: None,
        target_template: None,
        property_values,
    })
}

fn node_template(
    name: &str,
    body: &Yaml,
    path: &str,
    inputs: &BTreeMap<String, Value>,
    topo: &ToscaTopology,
    declared: &BTreeSet<String>,
) -> Result<(ToscaNodeTemplate, Vec<ToscaRelationshipTemplate>), ParseError> {
    let mut t = ToscaNodeTemplate {
        name: name.to_string(),
        type_name: String::new(),
        property_values: BTreeMap::new(),
        requirement_bindings: Vec::new(),
        capability_property_values: BTreeMap::new(),
    };
    let mut synthesized = Vec::new();
    for (key, value) in mapping(body, path)? {
        let p = format!("{path}.{key}");
        match key {
            "type" => t.type_name = string(value, &p)?,
            "properties" => t.property_values = values(value, &p, inputs)?,
            "description" | "metadata" => {}
            "requirements" => {
                for (i, item) in list(value, &p)?.iter().enumerate() {
                    let ip = format!("{p}[{i}]");
                    let (binding, rel) = requirement_binding(name, item, &ip, inputs, topo, declared, &synthesized)?;
                    t.requirement_bindings.push(binding);
                    synthesized.extend(rel);
                }
            }
            "capabilities" => {
                for (cap, decl) in mapping(value, &p)? {
                    let cp = format!("{p}.{cap}");
                    for (k, v) in mapping(decl, &cp)? {
                        match k {
                            "properties" => {
                                t.capability_property_values.insert(cap.to_string(), values(v, &cp, inputs)?);
                            }
                            "attributes" => ignored(&cp),
                            _ => return Err(schema(format!("{cp}.{k}"), "unknown field")),
                        }
                    }
                }
            }
            "attributes" | "interfaces" | "artifacts" | "directives" | "node_filter" => ignored(&p),
            _ => return Err(schema(p, "unknown field")),
        }
    }
    if t.type_name.is_empty() {
        return Err(schema(path, "node template without type"));
    }
    Ok((t, synthesized))
}

fn requirement_binding(
    template: &str,
    item: &Yaml,
    path: &str,
    inputs: &BTreeMap<String, Value>,
    topo: &ToscaTopology,
    declared: &BTreeSet<String>,
    pending: &[ToscaRelationshipTemplate],
) -> Result<(RequirementBinding, Option<ToscaRelationshipTemplate>), ParseError> {
    let (requirement, body) = single_entry(item, path)?;
    let mut binding = RequirementBinding {
        requirement: requirement.to_string(),
        target: String::new(),
        relationship: None,
        relationship_template: None,
    };
    if let Yaml::String(target) = body {
        binding.target = target.clone();
        return Ok((binding, None));
    }
    let mut synthesized = None;
    for (key, value) in mapping(body, path)? {
        let p = format!("{path}.{key}");
        match key {
            "node" => binding.target = string(value, &p)?,
            "capability" | "occurrences" => {}
            "relationship" => match value {
                Yaml::Mapping(_) => {
                    let name = format!("{template}_{requirement}");
                    if declared.contains(&name) || pending.iter().any(|r| r.name == name) {
                        return Err(schema(&p, format_args!("relationship template name {name:?} is taken")));
                    }
                    let rel = relationship_template(&name, value, &p, inputs)?;
                    binding.relationship = Some(rel.type_name.clone());
                    binding.relationship_template = Some(name);
                    synthesized = Some(rel);
                }
                other => {
                    let r = string(other, &p)?;
                    match topo.relationship_template(&r) {
                        Some(rt) => {
                            binding.relationship = Some(rt.type_name.clone());
                            binding.relationship_template = Some(r);
                        }
                        None => binding.relationship = Some(r),
                    }
                }
            },
            "node_filter" => ignored(&p),
            _ => return Err(schema(p, "unknown field")),
        }
    }
    if binding.target.is_empty() {
        return Err(schema(path, "requirement without target node"));
    }
    Ok((binding, synthesized))
}

// ----- emitter --------------------------------------------------------------

fn y(s: &str) -> Yaml {
    Yaml::String(s.to_string())
}

fn emit_property(p: &ToscaPropertyDef) -> Yaml {
    let mut m = Mapping::new();
    m.insert(y("type"), y(&p.tosca_type));
    if let Some(e) = &p.entry_schema {
        m.insert(y("entry_schema"), y(e));
    }
    m.insert(y("required"), Yaml::Bool(p.required));
    if let Some(d) = &p.default {
        m.insert(y("default"), json_to_yaml(d));
    }
    if let Some(d) = &p.description {
        m.insert(y("description"), y(d));
    }
    if !p.constraints.is_empty() {
        let cs = p
            .constraints
            .iter()
            .map(|c| {
                let arg = match c {
                    ToscaConstraint::ValidValues(v) => json_to_yaml(&Value::Array(v.clone())),
                    ToscaConstraint::GreaterOrEqual(v) | ToscaConstraint::LessOrEqual(v) => json_to_yaml(v),
                    ToscaConstraint::InRange(a, b) => json_to_yaml(&Value::Array(vec![a.clone(), b.clone()])),
                    ToscaConstraint::MinLength(n) | ToscaConstraint::MaxLength(n) => Yaml::Number((*n).into()),
                    ToscaConstraint::Pattern(s) => y(s),
                };
                let mut one = Mapping::new();
                one.insert(y(c.operator()), arg);
                Yaml::Mapping(one)
            })
            .collect();
        m.insert(y("constraints"), Yaml::Sequence(cs));
    }
    Yaml::Mapping(m)
}

fn emit_properties(props: &[ToscaPropertyDef]) -> Yaml {
    Yaml::Mapping(props.iter().map(|p| (y(&p.name), emit_property(p))).collect())
}

fn emit_ops(m: &mut Mapping, ops: &[String]) {
    for op in ops {
        m.insert(y(op), Yaml::Null);
    }
}

fn emit_type(def: &ToscaTypeDef) -> Yaml {
    let mut m = Mapping::new();
    if let Some(p) = &def.derived_from {
        m.insert(y("derived_from"), y(p));
    }
    if let Some(d) = &def.description {
        m.insert(y("description"), y(d));
    }
    if !def.properties.is_empty() {
        m.insert(y("properties"), emit_properties(&def.properties));
    }
    if !def.attributes.is_empty() {
        m.insert(y("attributes"), emit_properties(&def.attributes));
    }
    if !def.requirements.is_empty() {
        let reqs = def
            .requirements
            .iter()
            .map(|r| {
                let mut body = Mapping::new();
                body.insert(y("capability"), y(&r.capability));
                if let Some(n) = &r.node {
                    body.insert(y("node"), y(n));
                }
                if let Some(rel) = &r.relationship {
                    body.insert(y("relationship"), y(rel));
                }
                if let Some(o) = r.occurrences {
                    let max = o.max.map(|n| Yaml::Number(n.into())).unwrap_or_else(|| y("UNBOUNDED"));
                    body.insert(y("occurrences"), Yaml::Sequence(vec![Yaml::Number(o.min.into()), max]));
                }
                let mut one = Mapping::new();
                one.insert(y(&r.name), Yaml::Mapping(body));
                Yaml::Mapping(one)
            })
            .collect();
        m.insert(y("requirements"), Yaml::Sequence(reqs));
    }
    if !def.capabilities.is_empty() {
        m.insert(y("capabilities"), Yaml::Mapping(def.capabilities.iter().map(|(k, v)| (y(k), y(v))).collect()));
    }
    if !def.interfaces.is_empty() {
        let ifaces = def
            .interfaces
            .iter()
            .map(|(name, decl)| {
                let mut body = Mapping::new();
                body.insert(y("type"), y(&decl.type_name));
                emit_ops(&mut body, &decl.operations);
                (y(name), Yaml::Mapping(body))
            })
            .collect();
        m.insert(y("interfaces"), Yaml::Mapping(ifaces));
    }
    emit_ops(&mut m, &def.operations);
    Yaml::Mapping(m)
}

/// Canonical YAML for a list of type definitions.
pub fn emit_types(defs: &[ToscaTypeDef]) -> String {
    let mut doc = Mapping::new();
    doc.insert(y("tosca_definitions_version"), y(DEFINITIONS_VERSION));
    for class in TypeClass::ALL {
        let section: Mapping =
            defs.iter().filter(|d| d.type_class == class).map(|d| (y(&d.name), emit_type(d))).collect();
        if !section.is_empty() {
            doc.insert(y(class.section()), Yaml::Mapping(section));
        }
    }
    serde_yaml::to_string(&Yaml::Mapping(doc)).unwrap_or_default()
}

fn emit_values(values: &BTreeMap<String, Value>) -> Yaml {
    Yaml::Mapping(values.iter().map(|(k, v)| (y(k), json_to_yaml(v))).collect())
}

/// Canonical YAML for a topology. Input values are emitted as defaults.
pub fn emit_topology(topo: &ToscaTopology) -> String {
    let mut doc = Mapping::new();
    doc.insert(y("tosca_definitions_version"), y(DEFINITIONS_VERSION));
    if let Some(n) = &topo.name {
        let mut meta = Mapping::new();
        meta.insert(y("template_name"), y(n));
        doc.insert(y("metadata"), Yaml::Mapping(meta));
    }
    let mut body = Mapping::new();
    if let Some(d) = &topo.description {
        body.insert(y("description"), y(d));
    }
    if !topo.inputs.is_empty() {
        body.insert(y("inputs"), Yaml::Mapping(topo.inputs.iter().map(|(k, p)| (y(k), emit_property(p))).collect()));
    }
    let nodes = topo
        .node_templates
        .iter()
        .map(|t| {
            let mut m = Mapping::new();
            m.insert(y("type"), y(&t.type_name));
            if !t.property_values.is_empty() {
                m.insert(y("properties"), emit_values(&t.property_values));
            }
            if !t.requirement_bindings.is_empty() {
                let reqs = t
                    .requirement_bindings
                    .iter()
                    .map(|b| {
                        let mut body = Mapping::new();
                        body.insert(y("node"), y(&b.target));
                        if let Some(r) = b.relationship_template.as_ref().or(b.relationship.as_ref()) {
                            body.insert(y("relationship"), y(r));
                        }
                        let mut one = Mapping::new();
                        one.insert(y(&b.requirement), Yaml::Mapping(body));
                        Yaml::Mapping(one)
                    })
                    .collect();
                m.insert(y("requirements"), Yaml::Sequence(reqs));
            }
            if !t.capability_property_values.is_empty() {
                let caps = t
                    .capability_property_values
                    .iter()
                    .map(|(cap, values)| {
                        let mut c = Mapping::new();
                        c.insert(y("properties"), emit_values(values));
                        (y(cap), Yaml::Mapping(c))
                    })
                    .collect();
                m.insert(y("capabilities"), Yaml::Mapping(caps));
            }
            (y(&t.name), Yaml::Mapping(m))
        })
        .collect();
    body.insert(y("node_templates"), Yaml::Mapping(nodes));
    if !topo.relationship_templates.is_empty() {
        let rels = topo
            .relationship_templates
            .iter()
            .map(|r| {
                let mut m = Mapping::new();
                m.insert(y("type"), y(&r.type_name));
                if !r.property_values.is_empty() {
                    m.insert(y("properties"), emit_values(&r.property_values));
                }
                (y(&r.name), Yaml::Mapping(m))
            })
            .collect();
        body.insert(y("relationship_templates"), Yaml::Mapping(rels));
    }
    if !topo.groups.is_empty() {
        body.insert(
            y("groups"),
            Yaml::Mapping(topo.groups.iter().map(|g| (y(&g.name), json_to_yaml(&g.body))).collect()),
        );
    }
    doc.insert(y("topology_template"), Yaml::Mapping(body));
    serde_yaml::to_string(&Yaml::Mapping(doc)).unwrap_or_default()
}
