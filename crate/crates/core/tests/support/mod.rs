//! Generators and reference oracles shared by the property tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use serde_json::Value;

use tosca2occi_core::occi::{ids, Entity, EntityRef, Link, MixinBase, OcciConfiguration, Resource};
use tosca2occi_core::orchestrator::{
    build_graph, compare, plan, CyclicDependencyError, EdgeReason, ProvisioningPlan, Verb,
};
use tosca2occi_core::AttributeMap;

pub const DIFF_CASES: u32 = 10_000;
pub const DAG_CASES: u32 = 1_000;

pub const DEP: &str = "urn:test#dep";
pub const PLAIN: &str = "urn:test#plain";

fn resource_strategy() -> impl Strategy<Value = Resource> {
    (
        prop::sample::select(vec!["a", "b", "c"]),
        prop::sample::select(vec![ids::COMPUTE, ids::NETWORK]),
        prop::option::of(prop::sample::select(vec!["x", "y"])),
        prop::collection::btree_set(prop::sample::select(vec!["urn:m#one", "urn:m#two"]), 0..=2),
        prop::option::of(1i64..=2),
        prop::option::of(prop::sample::select(vec!["active", "inactive", "error"])),
        prop::option::of(prop::sample::select(vec!["p-1", "p-2"])),
    )
        .prop_map(|(id, kind, title, mixins, memory, state, provider)| {
            let mut attrs = AttributeMap::new();
            if let Some(m) = memory {
                attrs.insert("occi.compute.memory".into(), Value::from(m));
            }
            if let Some(s) = state {
                attrs.insert("occi.compute.state".into(), Value::from(s));
            }
            if let Some(p) = provider {
                attrs.insert(ids::PROVIDER_ID_ATTRIBUTE.into(), Value::from(p));
            }
            Resource {
                id: id.into(),
                kind: kind.into(),
                title: title.map(Into::into),
                mixin_bases: mixins.into_iter().map(MixinBase::new).collect(),
                attribute_values: attrs,
            }
        })
}

pub fn configuration_strategy() -> impl Strategy<Value = OcciConfiguration> {
    prop::collection::vec(resource_strategy(), 0..=5)
        .prop_map(|resources| OcciConfiguration { resources, ..Default::default() })
}

pub fn diff_pair_strategy() -> impl Strategy<Value = (OcciConfiguration, OcciConfiguration)> {
    (configuration_strategy(), configuration_strategy())
}

type Key = (String, String);

fn first_by_key(cfg: &OcciConfiguration) -> BTreeMap<Key, &Resource> {
    let mut out = BTreeMap::new();
    for r in &cfg.resources {
        out.entry((r.id.clone(), r.kind.clone())).or_insert(r);
    }
    out
}

fn same_model(a: &Resource, b: &Resource) -> bool {
    let plain = |r: &Resource| -> AttributeMap {
        r.attribute_values.iter().filter(|(k, _)| !k.ends_with(".state") && *k != "providerId").map(|(k, v)| (k.clone(), v.clone())).collect()
    };
    let mixins = |r: &Resource| -> BTreeSet<String> { r.mixin_bases.iter().map(|m| m.mixin.clone()).collect() };
    a.title == b.title && mixins(a) == mixins(b) && plain(a) == plain(b)
}

fn keys_of(entities: &[Entity]) -> Result<BTreeSet<Key>, String> {
    let set: BTreeSet<Key> = entities.iter().map(|e| (e.id().to_string(), e.kind().to_string())).collect();
    if set.len() != entities.len() {
        return Err(format!("duplicate keys in {entities:?}"));
    }
    Ok(set)
}

/// Checks `compare` against a set-algebra oracle over first occurrences.
pub fn check_diff(desired: &OcciConfiguration, current: &OcciConfiguration) -> Result<(), String> {
    let d = first_by_key(desired);
    let c = first_by_key(current);
    let want_create: BTreeSet<Key> = d.keys().filter(|k| !c.contains_key(*k)).cloned().collect();
    let want_delete: BTreeSet<Key> = c.keys().filter(|k| !d.contains_key(*k)).cloned().collect();
    let (mut want_update, mut want_same) = (BTreeSet::new(), BTreeSet::new());
    for (k, r) in &d {
        if let Some(other) = c.get(k) {
            if same_model(r, other) {
                want_same.insert(k.clone());
            } else {
                want_update.insert(k.clone());
            }
        }
    }

    let diff = compare(desired, current);
    let updates: Vec<Entity> = diff.to_update.iter().map(|u| u.entity.clone()).collect();
    let got = (keys_of(&diff.to_create)?, keys_of(&updates)?, keys_of(&diff.to_delete)?, keys_of(&diff.unchanged)?);
    let want = (want_create, want_update, want_delete, want_same);
    if got != want {
        return Err(format!("compare disagrees with oracle\n got: {got:?}\nwant: {want:?}"));
    }
    for u in &diff.to_update {
        if u.changed.keys().any(|k| k.ends_with(".state") || k == "providerId") {
            return Err(format!("runtime attribute reported as changed on {}", u.id));
        }
    }
    if diff.is_empty() != (got.0.is_empty() && got.1.is_empty() && got.2.is_empty()) {
        return Err("is_empty inconsistent".into());
    }
    Ok(())
}

/// A random dependency DAG: `deps[i]` lists the `j < i` that `r{i}` waits for.
#[derive(Clone, Debug)]
pub struct DagCase {
    pub kinds: Vec<&'static str>,
    pub deps: Vec<Vec<usize>>,
    /// Unclassified links between arbitrary pairs, in either direction.
    pub plain: Vec<(usize, usize)>,
}

const KINDS: [&str; 6] = [ids::COMPUTE, ids::NETWORK, ids::STORAGE, ids::APPLICATION, ids::COMPONENT, ids::RESOURCE];

pub fn dag_strategy() -> impl Strategy<Value = DagCase> {
    (2usize..=8)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(prop::sample::select(KINDS.to_vec()), n),
                prop::collection::vec(prop::collection::vec(any::<bool>(), n), n),
                prop::collection::vec((0..n, 0..n), 0..=4),
            )
        })
        .prop_map(|(kinds, matrix, plain)| {
            let deps = (0..kinds.len()).map(|i| (0..i).filter(|&j| matrix[i][j]).collect()).collect();
            DagCase { kinds, deps, plain }
        })
}

fn rid(i: usize) -> String {
    format!("r{i}")
}

fn link(id: String, kind: &str, source: usize, target: usize) -> Link {
    Link {
        id,
        kind: kind.into(),
        title: None,
        source: rid(source),
        target: rid(target),
        mixin_bases: Vec::new(),
        attribute_values: AttributeMap::new(),
    }
}

impl DagCase {
    pub fn configuration(&self) -> OcciConfiguration {
        // resources are listed in reverse dependency order on purpose
        let resources = (0..self.kinds.len())
            .rev()
            .map(|i| Resource {
                id: rid(i),
                kind: self.kinds[i].into(),
                title: None,
                mixin_bases: Vec::new(),
                attribute_values: AttributeMap::new(),
            })
            .collect();
        let mut links = Vec::new();
        for (i, deps) in self.deps.iter().enumerate() {
            for &j in deps {
                links.push(link(format!("dep-{i}-{j}"), DEP, i, j));
            }
        }
        for (n, &(s, t)) in self.plain.iter().enumerate() {
            links.push(link(format!("plain-{n}"), PLAIN, s, t));
        }
        OcciConfiguration { resources, links, ..Default::default() }
    }
}

pub fn classify(l: &Link) -> Option<EdgeReason> {
    (l.kind == DEP).then_some(EdgeReason::Depends)
}

pub fn plan_for(cfg: &OcciConfiguration) -> Result<ProvisioningPlan, CyclicDependencyError> {
    let diff = compare(cfg, &OcciConfiguration::default());
    let graph = build_graph(&diff, &classify)?;
    Ok(plan(&diff, &graph))
}

/// Every dependency is created before its dependant, every link after both
/// endpoints, and every entity exactly once.
pub fn check_plan_order(case: &DagCase) -> Result<(), String> {
    let cfg = case.configuration();
    let plan = plan_for(&cfg).map_err(|e| format!("acyclic input rejected: {e}"))?;
    let creates: Vec<&str> = plan.steps.iter().filter(|s| s.verb == Verb::Create).map(|s| s.entity_id.as_str()).collect();
    let unique: BTreeSet<&str> = creates.iter().copied().collect();
    let expected: BTreeSet<&str> = cfg.entities().map(|e| e.id()).collect();
    if unique.len() != creates.len() || unique != expected {
        return Err(format!("creates {creates:?} do not cover {expected:?} exactly once"));
    }
    let pos = |id: &str| plan.position(Verb::Create, id).unwrap();
    for (i, deps) in case.deps.iter().enumerate() {
        for &j in deps {
            if pos(&rid(i)) <= pos(&rid(j)) {
                return Err(format!("r{i} created before its dependency r{j}"));
            }
        }
    }
    for l in &cfg.links {
        let at = pos(&l.id);
        if at <= pos(&l.source) || at <= pos(&l.target) {
            return Err(format!("{} created before an endpoint", l.id));
        }
    }
    if plan.steps.iter().any(|s| s.verb == Verb::Delete || s.verb == Verb::Update) {
        return Err("plan from empty runtime contains deletes or updates".into());
    }
    Ok(())
}

/// A DAG plus links closing a cycle `r0 -> r{len-1} -> ... -> r0`.
pub fn cyclic_strategy() -> impl Strategy<Value = (DagCase, usize)> {
    dag_strategy().prop_flat_map(|case| {
        let n = case.kinds.len();
        (Just(case), 2..=n)
    })
}

pub fn cyclic_configuration(case: &DagCase, len: usize) -> OcciConfiguration {
    let mut case = case.clone();
    for m in 1..len {
        if !case.deps[m].contains(&(m - 1)) {
            case.deps[m].push(m - 1);
        }
    }
    let mut cfg = case.configuration();
    cfg.links.push(link("back".into(), DEP, 0, len - 1));
    cfg
}

/// The planner must refuse and name a genuine cycle.
pub fn check_cycle(case: &DagCase, len: usize) -> Result<(), String> {
    let cfg = cyclic_configuration(case, len);
    let err = match plan_for(&cfg) {
        Ok(_) => return Err(format!("cycle of length {len} accepted")),
        Err(e) => e,
    };
    let edges: BTreeSet<(&str, &str)> = cfg
        .links
        .iter()
        .filter(|l| l.kind == DEP)
        .map(|l| (l.source.as_str(), l.target.as_str()))
        .chain(cfg.links.iter().flat_map(|l| [(l.id.as_str(), l.source.as_str()), (l.id.as_str(), l.target.as_str())]))
        .collect();
    let c = &err.cycle;
    if c.len() < 3 || c.first() != c.last() {
        return Err(format!("malformed cycle {c:?}"));
    }
    for w in c.windows(2) {
        if !edges.contains(&(w[0].as_str(), w[1].as_str())) {
            return Err(format!("{} -> {} in reported cycle is not an edge", w[0], w[1]));
        }
    }
    Ok(())
}

pub fn entity_ids(cfg: &OcciConfiguration) -> Vec<String> {
    cfg.entities().map(|e: EntityRef<'_>| e.id().to_string()).collect()
}
