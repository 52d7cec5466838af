//! Checks shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use tosca2occi::core::mapping::{mixin_id, normalize_value};
use tosca2occi::core::occi::{ids, DataType, DataTypeLookup, EntityRef, EntityRole, NumericKind, ExtensionSet, Mixin, OcciConfiguration};
use tosca2occi::core::tosca::{ToscaTypeRegistry, TypeClass};
use tosca2occi::executor::{reconcile, ExecutorOptions, ReconcileReport};
use tosca2occi::fixtures::{self, Corpus};
use tosca2occi::io::to_json_string;
use tosca2occi::runtime::{MockConfig, MockRuntime};

pub const TOPOLOGIES: [&str; 3] = ["wordpress", "nodecellar", "multitier"];

/// Compares `actual` with the golden file, or rewrites it when
/// `UPDATE_GOLDEN` is set.
pub fn golden(name: &str, actual: &str) -> Result<(), String> {
    let path = fixtures::golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).map_err(|e| e.to_string())?;
        std::fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected != actual {
        return Err(format!("{} differs from the generated output", path.display()));
    }
    Ok(())
}

pub fn golden_json<T: serde::Serialize + ?Sized>(name: &str, value: &T) -> Result<(), String> {
    golden(name, &to_json_string(value))
}

/// Golden artifacts, by file name.
pub fn golden_artifacts(corpus: &Corpus) -> Vec<(String, String)> {
    let mut out = vec![
        ("tosca-extension.json".to_string(), to_json_string(&corpus.generated.extension)),
        ("census.json".to_string(), to_json_string(&corpus.generated.report.census())),
    ];
    for t in TOPOLOGIES {
        let pim = corpus.configuration(t).unwrap().configuration;
        out.push((format!("config/{t}.json"), to_json_string(&pim)));
        out.push((format!("psm/{t}.json"), to_json_string(&corpus.psm(t).unwrap())));
    }
    out
}

// ---------------------------------------------------------------------------
// mapping tables

#[derive(Clone, Debug)]
pub enum Expect {
    /// Every type of the class has a mixin.
    AllMapped(TypeClass),
    /// Every type of the class except its root anchors on kinds of this role.
    AnchoredOn(TypeClass, EntityRole),
    Title(&'static str),
    Applies(&'static str),
    DependsOn(&'static [&'static str]),
    Default(&'static str, Value),
    Required(&'static str, bool),
    Datatype(&'static str, &'static str),
    Pattern(&'static str),
    Enumeration(&'static str, &'static [&'static str]),
    MinInclusive(&'static str, i64),
    MinLength(&'static str, u64),
    Constraint(&'static str),
    Record(&'static str, &'static [&'static str]),
    /// A map attribute whose values are `short`.
    ShortMap(&'static str),
    /// Only actions, no attributes.
    ActionsOnly(&'static [&'static str]),
    Action(&'static str),
}

pub struct Row {
    pub table: u8,
    pub tosca: &'static str,
    pub target: &'static str,
    pub checks: Vec<(&'static str, Expect)>,
}

fn row(table: u8, tosca: &'static str, target: &'static str, checks: Vec<(&'static str, Expect)>) -> Row {
    Row { table, tosca, target, checks }
}

const ROOT_NODE: &str = "tosca.nodes.Root";

pub fn mapping_rows() -> Vec<Row> {
    use Expect::*;
    vec![
        row(1, "Entity_type", "Mixin", vec![
            ("", AllMapped(TypeClass::Node)),
            ("", AllMapped(TypeClass::Relationship)),
        ]),
        row(1, "description", "description", vec![
            ("tosca.capabilities.Root", Title("The root of all capability types.")),
        ]),
        row(1, "derived_from", "parent", vec![
            ("tosca.nodes.WebServer", DependsOn(&["tosca.nodes.SoftwareComponent"])),
            ("tosca.nodes.Compute", DependsOn(&[ROOT_NODE])),
        ]),
        row(1, "default", "default", vec![
            ("tosca.nodes.Apache", Default("port", json!(80))),
            ("tosca.capabilities.Endpoint", Default("protocol", json!("tcp"))),
        ]),
        row(1, "required", "required", vec![
            ("tosca.nodes.Apache", Required("port", true)),
            ("tosca.nodes.Nodejs", Required("github_url", false)),
        ]),
        row(1, "type", "DataType", vec![
            ("tosca.capabilities.Scalable", Datatype("min_instances", "integer")),
            ("tosca.nodes.Mysql", Datatype("bind_address", "boolean")),
            ("tosca.nodes.Wordpress", Datatype("zip_url", "string")),
        ]),
        row(1, "constraints", "regular expressions", vec![("tosca.nodes.Java", Pattern("java_version"))]),
        row(1, "valid_values", "EnumerationType", vec![
            ("tosca.nodes.LoadBalancer.Haproxy", Enumeration("algorithm", &["roundrobin", "leastconn", "source"])),
        ]),
        row(1, "greater_or_equal", "minInclusive", vec![("tosca.capabilities.Container", MinInclusive("num_cpus", 1))]),
        row(1, "min_length", "minLength", vec![("tosca.relationships.AttachesTo", MinLength("location", 1))]),
        row(1, "Node_type", "Mixin applied to Resource", vec![("", AnchoredOn(TypeClass::Node, EntityRole::Resource))]),
        row(1, "nodes.BlockStorage", "Mixin applied to Storage Resource", vec![
            ("tosca.nodes.BlockStorage", Applies(ids::STORAGE)),
        ]),
        row(1, "nodes.ObjectStorage", "Mixin applied to Storage Resource", vec![
            ("tosca.nodes.ObjectStorage", Applies(ids::STORAGE)),
        ]),
        row(1, "nodes.Compute", "Mixin applied to Compute Resource", vec![("tosca.nodes.Compute", Applies(ids::COMPUTE))]),
        row(1, "nodes.SoftwareComponent", "Mixin applied to Component Resource", vec![
            ("tosca.nodes.SoftwareComponent", Applies(ids::COMPONENT)),
        ]),
        row(1, "nodes.WebServer", "Mixin that depends on nodes.SoftwareComponent Mixin", vec![
            ("tosca.nodes.WebServer", DependsOn(&["tosca.nodes.SoftwareComponent"])),
        ]),
        row(1, "nodes.WebApplication", "Mixin applied to Component Resource", vec![
            ("tosca.nodes.WebApplication", Applies(ids::COMPONENT)),
        ]),
        row(1, "nodes.DBMS", "Mixin that depends on nodes.SoftwareComponent Mixin and on Database Mixin", vec![
            ("tosca.nodes.DBMS", DependsOn(&["tosca.nodes.SoftwareComponent", "tosca.nodes.Database"])),
        ]),
        row(1, "nodes.Database", "Mixin applied to Component Resource", vec![("tosca.nodes.Database", Applies(ids::COMPONENT))]),
        row(1, "nodes.LoadBalancer", "Mixin applied to Resource", vec![("tosca.nodes.LoadBalancer", Applies(ids::RESOURCE))]),
        row(1, "nodes.container.Runtime", "Mixin that depends on nodes.SoftwareComponent Mixin", vec![
            ("tosca.nodes.Container.Runtime", DependsOn(&["tosca.nodes.SoftwareComponent"])),
        ]),
        row(1, "nodes.container.Application", "Mixin applied to Component Resource", vec![
            ("tosca.nodes.Container.Application", Applies(ids::COMPONENT)),
        ]),
        row(1, "Requirement_type", "OCL Constraint", vec![
            ("tosca.nodes.Wordpress", Constraint("Requires_database_endpoint")),
            ("tosca.nodes.Compute", Constraint("SourceMustBeSoftwareComponent")),
        ]),
        row(1, "Relationship_type", "Mixin applied to Link", vec![("", AnchoredOn(TypeClass::Relationship, EntityRole::Link))]),
        row(1, "relationships.AttachesTo", "Mixin applied to StorageLink Link", vec![
            ("tosca.relationships.AttachesTo", Applies(ids::STORAGELINK)),
        ]),
        row(1, "relationships.ConnectsTo", "Mixin applied to ComponentLink Link", vec![
            ("tosca.relationships.ConnectsTo", Applies(ids::COMPONENTLINK)),
        ]),
        row(1, "relationships.DependsOn", "Mixin applied to ComponentLink Link", vec![
            ("tosca.relationships.DependsOn", Applies(ids::COMPONENTLINK)),
        ]),
        row(1, "relationships.HostedOn", "Mixin applied to ComponentLink Link", vec![
            ("tosca.relationships.HostedOn", Applies(ids::COMPONENTLINK)),
        ]),
        row(1, "relationships.RoutesTo", "Mixin that depends on relationships.ConnectsTo Mixin", vec![
            ("tosca.relationships.RoutesTo", DependsOn(&["tosca.relationships.ConnectsTo"])),
        ]),
        row(1, "datatypes.Credential", "CredentialRecordType", vec![
            ("", Record("CredentialRecordType", &["protocol", "token_type", "token", "keys", "user"])),
        ]),
        row(1, "datatypes.network.NetworkInfo", "NetworkInfoRecordType", vec![
            ("", Record("NetworkInfoRecordType", &["networkid", "networkname"])),
        ]),
        row(1, "datatypes.network.PortDef", "PortDefRecordType", vec![("", Record("PortDefRecordType", &["port"]))]),
        row(1, "datatypes.network.PortInfo", "PortInfoRecordType", vec![
            ("", Record("PortInfoRecordType", &["port_name", "port_id", "network_id", "mac_address", "addresses"])),
        ]),
        row(1, "datatypes.network.PortSpec", "SHORT", vec![("tosca.capabilities.Endpoint", ShortMap("ports"))]),
        row(1, "interfaces.node.lifecycle.Standard", "Mixin applied to Resource", vec![
            ("tosca.interfaces.node.lifecycle.Standard", Applies(ids::RESOURCE)),
            (
                "tosca.interfaces.node.lifecycle.Standard",
                ActionsOnly(&["create", "configure", "start", "stop", "delete"]),
            ),
        ]),
        row(1, "interfaces.node.lifecycle.Standard/start()", "Component/start() or Storage/online() or Compute/start()", vec![
            ("tosca.nodes.SoftwareComponent", Action("start")),
            ("tosca.nodes.BlockStorage", Action("online")),
            ("tosca.nodes.Compute", Action("start")),
        ]),
        row(1, "interfaces.node.lifecycle.Standard/stop()", "Component/stop() or Storage/offline() or Compute/stop()", vec![
            ("tosca.nodes.SoftwareComponent", Action("stop")),
            ("tosca.nodes.BlockStorage", Action("offline")),
            ("tosca.nodes.Compute", Action("stop")),
        ]),
        row(1, "interfaces.relationship.Configure", "Configure Mixin applied to Link", vec![
            ("tosca.interfaces.relationship.Configure", Applies(ids::COMPONENTLINK)),
        ]),
        row(1, "Operation", "Action", vec![
            ("tosca.interfaces.node.lifecycle.Backup", ActionsOnly(&["backup", "restore"])),
        ]),
        row(1, "Capability_type", "Mixin applied to Resource or Link", vec![
            ("", AllMapped(TypeClass::Capability)),
            ("tosca.capabilities.OperatingSystem", Datatype("distribution", "string")),
        ]),
        row(2, "nodes.Apache", "Mixin that depends on nodes.WebServer Mixin", vec![
            ("tosca.nodes.Apache", DependsOn(&["tosca.nodes.WebServer"])),
        ]),
        row(2, "nodes.SoftwareComponent.Collectd", "Mixin that depends on nodes.SoftwareComponent Mixin", vec![
            ("tosca.nodes.SoftwareComponent.Collectd", DependsOn(&["tosca.nodes.SoftwareComponent"])),
        ]),
        row(2, "nodes.HACompute", "Mixin that depends on nodes.Compute Mixin", vec![
            ("tosca.nodes.HACompute", DependsOn(&["tosca.nodes.Compute"])),
        ]),
        row(2, "nodes.Database.Mysql", "Mixin that depends on nodes.Database Mixin", vec![
            ("tosca.nodes.Database.Mysql", DependsOn(&["tosca.nodes.Database"])),
        ]),
        row(2, "nodes.DBMS.MySQL", "Mixin that depends on nodes.DBMS Mixin", vec![
            ("tosca.nodes.DBMS.MySQL", DependsOn(&["tosca.nodes.DBMS"])),
        ]),
        row(2, "nodes.Container.Application.Docker", "Mixin that depends on nodes.container.Application Mixin", vec![
            ("tosca.nodes.Container.Application.Docker", DependsOn(&["tosca.nodes.Container.Application"])),
        ]),
        row(2, "nodes.SoftwareComponent.Elasticsearch", "Mixin that depends on nodes.SoftwareComponent Mixin", vec![
            ("tosca.nodes.SoftwareComponent.Elasticsearch", DependsOn(&["tosca.nodes.SoftwareComponent"])),
        ]),
        row(2, "nodes.SoftwareComponent.Logstash", "Mixin that depends on nodes.SoftwareComponent Mixin", vec![
            ("tosca.nodes.SoftwareComponent.Logstash", DependsOn(&["tosca.nodes.SoftwareComponent"])),
        ]),
        row(2, "nodes.SoftwareComponent.Kibana", "Mixin that depends on nodes.SoftwareComponent Mixin", vec![
            ("tosca.nodes.SoftwareComponent.Kibana", DependsOn(&["tosca.nodes.SoftwareComponent"])),
        ]),
        row(2, "nodes.AbstractMysql", "Mixin that depends on nodes.Database Mixin", vec![
            ("tosca.nodes.AbstractMysql", DependsOn(&["tosca.nodes.Database"])),
        ]),
        row(2, "nodes.network.Network", "Mixin applied to Network Resource", vec![
            ("tosca.nodes.network.Network", Applies(ids::NETWORK)),
        ]),
        row(2, "nodes.network.Port", "Mixin applied to Network Resource", vec![
            ("tosca.nodes.network.Port", Applies(ids::NETWORK)),
        ]),
        row(2, "nodes.Nodejs", "Mixin that depends on nodes.WebServer Mixin", vec![
            ("tosca.nodes.Nodejs", DependsOn(&["tosca.nodes.WebServer"])),
        ]),
        row(2, "nodes.WebApplication.PayPalPizzaStore", "Mixin that depends on nodes.WebApplication Mixin", vec![
            ("tosca.nodes.WebApplication.PayPalPizzaStore", DependsOn(&["tosca.nodes.WebApplication"])),
        ]),
        row(2, "nodes.PHP", "Mixin that depends on nodes.SoftwareComponent Mixin", vec![
            ("tosca.nodes.PHP", DependsOn(&["tosca.nodes.SoftwareComponent"])),
        ]),
        row(2, "nodes.SoftwareComponent.Rsyslog", "Mixin that depends on nodes.SoftwareComponent Mixin", vec![
            ("tosca.nodes.SoftwareComponent.Rsyslog", DependsOn(&["tosca.nodes.SoftwareComponent"])),
        ]),
        row(2, "nodes.Wordpress", "Mixin that depends on nodes.WebApplication Mixin", vec![
            ("tosca.nodes.Wordpress", DependsOn(&["tosca.nodes.WebApplication"])),
        ]),
        row(2, "nodes.Nodecellar", "Mixin that depends on nodes.WebApplication Mixin", vec![
            ("tosca.nodes.Nodecellar", DependsOn(&["tosca.nodes.WebApplication"])),
        ]),
        row(2, "nodes.MongoD", "Mixin that depends on nodes.DBMS Mixin", vec![
            ("tosca.nodes.MongoD", DependsOn(&["tosca.nodes.DBMS"])),
        ]),
    ]
}

fn mixin<'a>(exts: &'a ExtensionSet, tosca: &str) -> Result<&'a Mixin, String> {
    exts.mixin(&mixin_id(tosca)).ok_or_else(|| format!("no mixin for {tosca}"))
}

fn datatype_of<'a>(exts: &'a ExtensionSet, tosca: &str, attr: &str) -> Result<(&'a str, &'a DataType), String> {
    let m = mixin(exts, tosca)?;
    let a = m.category.attribute(attr).ok_or_else(|| format!("{tosca} has no attribute {attr}"))?;
    let dt = exts.datatype(&a.datatype).ok_or_else(|| format!("datatype {} is not declared", a.datatype))?;
    Ok((&a.datatype, dt))
}

fn check(exts: &ExtensionSet, registry: &ToscaTypeRegistry, tosca: &str, expect: &Expect) -> Result<(), String> {
    let fail = |what: String| Err(format!("{tosca}: {what}"));
    match expect {
        Expect::AllMapped(class) => {
            let missing: Vec<&str> = registry
                .types()
                .filter(|d| d.type_class == *class && exts.mixin(&mixin_id(&d.name)).is_none())
                .map(|d| d.name.as_str())
                .collect();
            if !missing.is_empty() {
                return fail(format!("unmapped {missing:?}"));
            }
        }
        Expect::AnchoredOn(class, role) => {
            for d in registry.types().filter(|d| d.type_class == *class && d.name != class.root()) {
                let anchors = exts.anchor_kinds(&mixin_id(&d.name));
                let on_role = anchors.iter().all(|k| exts.kind(k).is_some_and(|k| k.entity_role == *role));
                if anchors.is_empty() || !on_role {
                    return Err(format!("{} anchors on {anchors:?}", d.name));
                }
            }
        }
        Expect::Title(t) => {
            let m = mixin(exts, tosca)?;
            if m.category.title.as_deref() != Some(*t) {
                return fail(format!("title {:?}", m.category.title));
            }
        }
        Expect::Applies(kind) => {
            let m = mixin(exts, tosca)?;
            if m.applies != [kind.to_string()] {
                return fail(format!("applies {:?}", m.applies));
            }
        }
        Expect::DependsOn(parents) => {
            let m = mixin(exts, tosca)?;
            for p in *parents {
                if !m.depends.contains(&mixin_id(p)) {
                    return fail(format!("does not depend on {p}: {:?}", m.depends));
                }
            }
        }
        Expect::Default(attr, v) => {
            let a = mixin(exts, tosca)?.category.attribute(attr).ok_or("missing attribute")?;
            if a.default.as_ref() != Some(v) {
                return fail(format!("{attr} default {:?}", a.default));
            }
        }
        Expect::Required(attr, r) => {
            let a = mixin(exts, tosca)?.category.attribute(attr).ok_or("missing attribute")?;
            if a.required != *r {
                return fail(format!("{attr} required {}", a.required));
            }
        }
        Expect::Datatype(attr, name) => {
            let (got, _) = datatype_of(exts, tosca, attr)?;
            if got != *name {
                return fail(format!("{attr} has datatype {got}"));
            }
        }
        Expect::Pattern(attr) => match datatype_of(exts, tosca, attr)?.1 {
            DataType::StringType { pattern: Some(_), .. } => {}
            other => return fail(format!("{attr} is {other:?}")),
        },
        Expect::Enumeration(attr, literals) => match datatype_of(exts, tosca, attr)?.1 {
            DataType::EnumerationType { literals: got } if got == literals => {}
            other => return fail(format!("{attr} is {other:?}")),
        },
        Expect::MinInclusive(attr, n) => match datatype_of(exts, tosca, attr)?.1 {
            DataType::NumericType { min_inclusive: Some(min), .. } if min.as_i64() == Some(*n) => {}
            other => return fail(format!("{attr} is {other:?}")),
        },
        Expect::MinLength(attr, n) => match datatype_of(exts, tosca, attr)?.1 {
            DataType::StringType { min_length: Some(min), .. } if min == n => {}
            other => return fail(format!("{attr} is {other:?}")),
        },
        Expect::Constraint(name) => {
            let m = mixin(exts, tosca)?;
            if !m.constraints.iter().any(|c| c.name == *name) {
                return fail(format!("no constraint {name}"));
            }
        }
        Expect::Record(name, fields) => match exts.datatype(name) {
            Some(DataType::RecordType { record_fields }) => {
                let got: Vec<&str> = record_fields.iter().map(|f| f.name.as_str()).collect();
                if got != *fields {
                    return fail(format!("{name} has fields {got:?}"));
                }
            }
            other => return fail(format!("{name} is {other:?}")),
        },
        Expect::ShortMap(attr) => match datatype_of(exts, tosca, attr)?.1 {
            DataType::MapType { value_type } => match exts.datatype(value_type) {
                Some(DataType::NumericType { numeric_kind: NumericKind::Short, .. }) if value_type == "short" => {}
                other => return fail(format!("{attr} values are {value_type} {other:?}")),
            },
            other => return fail(format!("{attr} is {other:?}")),
        },
        Expect::ActionsOnly(actions) => {
            let m = mixin(exts, tosca)?;
            let got: Vec<&str> = m.actions.iter().map(|a| a.category.term.as_str()).collect();
            if !m.category.attributes.is_empty() || got != *actions {
                return fail(format!("{} attributes, actions {got:?}", m.category.attributes.len()));
            }
        }
        Expect::Action(action) => {
            let m = mixin(exts, tosca)?;
            if !m.actions.iter().any(|a| a.category.term == *action) {
                return fail(format!("no action {action}"));
            }
        }
    }
    Ok(())
}

/// Checks every row; returns the failures.
pub fn check_mapping_rows(corpus: &Corpus) -> Vec<String> {
    let mut failures = Vec::new();
    for r in mapping_rows() {
        for (tosca, expect) in &r.checks {
            if let Err(e) = check(&corpus.extensions, &corpus.registry, tosca, expect) {
                failures.push(format!("table {} row {} -> {}: {e}", r.table, r.tosca, r.target));
            }
        }
    }
    failures
}

// ---------------------------------------------------------------------------
// topology structure

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkClass {
    Member,
    ConnectsTo,
    HostedOn,
    Placement,
}

fn classify(exts: &ExtensionSet, l: &tosca2occi::core::occi::Link) -> Option<LinkClass> {
    let e = EntityRef::Link(l);
    if l.kind == ids::PLACEMENTLINK {
        return Some(LinkClass::Placement);
    }
    if l.kind != ids::COMPONENTLINK {
        return None;
    }
    if exts.entity_matches(e, &mixin_id("tosca.relationships.ConnectsTo")) {
        Some(LinkClass::ConnectsTo)
    } else if exts.entity_matches(e, &mixin_id("tosca.relationships.HostedOn")) {
        Some(LinkClass::HostedOn)
    } else if l.mixin_bases.is_empty() {
        Some(LinkClass::Member)
    } else {
        None
    }
}

fn count(cfg: &OcciConfiguration, kind: &str) -> usize {
    cfg.resources.iter().filter(|r| r.kind == kind).count()
}

/// Resource counts and link titles by class.
pub fn check_structure(
    exts: &ExtensionSet,
    cfg: &OcciConfiguration,
    counts: (usize, usize, usize),
    links: &[(&str, LinkClass)],
) -> Result<(), String> {
    let got = (count(cfg, ids::APPLICATION), count(cfg, ids::COMPONENT), count(cfg, ids::COMPUTE));
    if got != counts || cfg.resources.len() != counts.0 + counts.1 + counts.2 {
        return Err(format!("resource counts {got:?} (total {}), want {counts:?}", cfg.resources.len()));
    }
    let actual: BTreeMap<&str, Option<LinkClass>> =
        cfg.links.iter().map(|l| (l.title.as_deref().unwrap_or(""), classify(exts, l))).collect();
    let wanted: BTreeMap<&str, Option<LinkClass>> = links.iter().map(|(t, c)| (*t, Some(*c))).collect();
    if actual.len() != cfg.links.len() || actual != wanted {
        return Err(format!("links {actual:?}, want {wanted:?}"));
    }
    Ok(())
}

fn titled<'a>(cfg: &'a OcciConfiguration, title: &str) -> Option<&'a tosca2occi::core::occi::Resource> {
    let suffix = format!(":{title}");
    cfg.resources.iter().find(|r| r.id.ends_with(&suffix))
}

fn link_between(cfg: &OcciConfiguration, title: &str) -> Option<(String, String)> {
    let short = |id: &str| id.rsplit(':').next().unwrap_or_default().to_string();
    cfg.links.iter().find(|l| l.title.as_deref() == Some(title)).map(|l| (short(&l.source), short(&l.target)))
}

fn capability_property_type(registry: &ToscaTypeRegistry, node_type: &str, prop: &str) -> Option<String> {
    let mut node = registry.get(node_type);
    while let Some(n) = node {
        for cap_type in n.capabilities.values() {
            let mut cap = registry.get(cap_type);
            while let Some(c) = cap {
                if let Some(p) = c.properties.iter().find(|p| p.name == prop) {
                    return Some(p.tosca_type.clone());
                }
                cap = c.derived_from.as_deref().and_then(|d| registry.get(d));
            }
        }
        node = n.derived_from.as_deref().and_then(|d| registry.get(d));
    }
    None
}

/// Every capability property value of `template` appears on the compute's
/// mixin base, after scalar units are normalized.
fn check_capability_values(corpus: &Corpus, topology: &str, template: &str, cfg: &OcciConfiguration) -> Result<(), String> {
    let topo = tosca2occi::pipeline::load_topology(&fixtures::topology_path(topology), &BTreeMap::new())
        .map_err(|e| e.to_string())?;
    let node = topo.node_template(template).ok_or("template missing")?;
    let compute = titled(cfg, template).ok_or("compute missing")?;
    let base = compute
        .mixin_bases
        .iter()
        .find(|mb| mb.mixin == mixin_id(&node.type_name))
        .ok_or("compute has no mixin base for its type")?;
    let mut seen = 0;
    for props in node.capability_property_values.values() {
        for (name, value) in props {
            let ty = capability_property_type(&corpus.registry, &node.type_name, name)
                .ok_or_else(|| format!("unknown capability property {name}"))?;
            let want = normalize_value(&ty, None, value);
            if base.attribute_values.get(name) != Some(&want) {
                return Err(format!("{name}: {:?} on the mixin base, {want} in the template", base.attribute_values.get(name)));
            }
            seen += 1;
        }
    }
    if seen == 0 {
        return Err(format!("{template} has no capability properties"));
    }
    Ok(())
}

use LinkClass::*;

pub fn check_wordpress(corpus: &Corpus, cfg: &OcciConfiguration) -> Result<(), String> {
    let links = [
        ("c1", Member),
        ("c2", Member),
        ("c3", Member),
        ("c4", Member),
        ("c5", ConnectsTo),
        ("c6", HostedOn),
        ("c7", ConnectsTo),
        ("p1", Placement),
        ("p2", Placement),
        ("p3", Placement),
        ("p4", Placement),
    ];
    check_structure(&corpus.extensions, cfg, (1, 4, 2), &links)?;
    let want = [
        ("c5", ("wordpress", "mysql")),
        ("c6", ("wordpress", "apache")),
        ("c7", ("wordpress", "php")),
        ("p1", ("wordpress", "computeWww")),
        ("p2", ("apache", "computeWww")),
        ("p3", ("mysql", "computeDb")),
        ("p4", ("php", "computeWww")),
    ];
    for (title, (s, t)) in want {
        if link_between(cfg, title) != Some((s.into(), t.into())) {
            return Err(format!("{title} connects {:?}", link_between(cfg, title)));
        }
    }
    check_capability_values(corpus, "wordpress", "computeWww", cfg)?;
    check_capability_values(corpus, "wordpress", "computeDb", cfg)
}

pub fn check_nodecellar(corpus: &Corpus, cfg: &OcciConfiguration) -> Result<(), String> {
    let links = [
        ("c1", Member),
        ("c2", Member),
        ("c3", Member),
        ("c4", ConnectsTo),
        ("c5", HostedOn),
        ("p1", Placement),
        ("p2", Placement),
        ("p3", Placement),
    ];
    check_structure(&corpus.extensions, cfg, (1, 3, 2), &links)?;
    let topo = tosca2occi::pipeline::load_topology(&fixtures::topology_path("nodecellar"), &BTreeMap::new())
        .map_err(|e| e.to_string())?;
    for name in ["nodecellar", "mongodb"] {
        let want = topo.node_template(name).and_then(|n| n.property_values.get("port")).ok_or("port missing")?;
        let got = titled(cfg, name).and_then(|r| r.mixin_bases.first()).and_then(|mb| mb.attribute_values.get("port"));
        if got != Some(want) {
            return Err(format!("{name} port {got:?}, want {want}"));
        }
    }
    Ok(())
}

pub fn check_multitier(corpus: &Corpus, cfg: &OcciConfiguration) -> Result<(), String> {
    let mut links: Vec<(String, LinkClass)> = (1..=9).map(|i| (format!("c{i}"), Member)).collect();
    links.extend((1..=9).map(|i| (format!("p{i}"), Placement)));
    // relationship links continue the c numbering
    let rels: Vec<(String, LinkClass)> = cfg
        .links
        .iter()
        .filter_map(|l| {
            let t = l.title.clone()?;
            let n: usize = t.strip_prefix('c')?.parse().ok()?;
            (n > 9).then(|| classify(&corpus.extensions, l).map(|c| (t, c)))?
        })
        .collect();
    links.extend(rels);
    let refs: Vec<(&str, LinkClass)> = links.iter().map(|(t, c)| (t.as_str(), *c)).collect();
    check_structure(&corpus.extensions, cfg, (1, 9, 6), &refs)?;
    let host = |c: &str| {
        cfg.links
            .iter()
            .find(|l| l.kind == ids::PLACEMENTLINK && l.source.ends_with(&format!(":{c}")))
            .map(|l| l.target.clone())
    };
    for (a, b) in [("app_collectd", "app_rsyslog"), ("mongo_db", "mongo_dbms")] {
        if host(a).is_none() || host(a) != host(b) {
            return Err(format!("{a} on {:?}, {b} on {:?}", host(a), host(b)));
        }
    }
    let placed: BTreeSet<String> = cfg.links.iter().filter(|l| l.kind == ids::PLACEMENTLINK).map(|l| l.target.clone()).collect();
    if placed.len() != 6 {
        return Err(format!("components are placed on {} computes", placed.len()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// orchestration

pub fn fast_options() -> ExecutorOptions {
    ExecutorOptions { poll_interval: Duration::from_millis(1), gate_timeout: Duration::from_secs(5), record_timing: false }
}

pub fn runtime(corpus: &Corpus) -> MockRuntime {
    MockRuntime::new(MockConfig::deterministic().with_extensions(corpus.extensions.clone()))
}

/// PSM of `topology` reconciled against a fresh deterministic runtime.
pub fn converge(corpus: &Corpus, topology: &str) -> (MockRuntime, ReconcileReport, Duration) {
    let psm = corpus.psm(topology).unwrap();
    let rt = runtime(corpus);
    let started = Instant::now();
    let report = reconcile(&psm, &rt, &corpus.extensions, &fast_options()).unwrap();
    (rt, report, started.elapsed())
}

/// All resource CREATEs, then all link CREATEs, then the application start.
pub fn check_phases(report: &ReconcileReport, psm: &OcciConfiguration) -> Result<(), String> {
    use tosca2occi::core::orchestrator::Verb;
    let mut phase = 0;
    for s in &report.plan.steps {
        let p = match s.verb {
            Verb::Delete => 0,
            Verb::Update => 1,
            Verb::Create if psm.resource(&s.entity_id).is_some() => 2,
            Verb::Create => 3,
            Verb::Action => 4,
        };
        if p < phase {
            return Err(format!("{:?} {} out of phase", s.verb, s.entity_id));
        }
        phase = p;
    }
    let last = report.plan.steps.last().ok_or("empty plan")?;
    if last.verb != Verb::Action || last.action.as_deref() != Some("start") || !last.entity_id.ends_with(":app") {
        return Err(format!("plan ends with {:?} {}", last.verb, last.entity_id));
    }
    let creates = report.plan.steps.iter().filter(|s| s.verb == Verb::Create).count();
    if creates != psm.resources.len() + psm.links.len() {
        return Err(format!("{creates} creates for {} entities", psm.resources.len() + psm.links.len()));
    }
    Ok(())
}
