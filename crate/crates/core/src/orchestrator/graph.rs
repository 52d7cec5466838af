use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::DiffResult;
use crate::mapping::mixin_id;
use crate::occi::{ids, Entity, EntityRef, ExtensionSet, Link};
use crate::tosca::{CONNECTS_TO, DEPENDS_ON, HOSTED_ON};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeReason {
    LinkEndpoint,
    Placement,
    Connects,
    Hosted,
    Depends,
}

/// `from` can only be created once `to` exists.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub reason: EdgeReason,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvisioningOrderGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    /// A topological order of `nodes`: dependencies first, ties broken by
    /// kind rank and then id.
    pub order: Vec<String>,
}

impl ProvisioningOrderGraph {
    pub fn dependencies_of<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.from == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cyclic provisioning dependency: {}", .cycle.join(" -> "))]
pub struct CyclicDependencyError {
    /// The entities on the cycle; the first one is repeated at the end.
    pub cycle: Vec<String>,
}

/// Decides which ordering a link imposes between its endpoints, if any.
pub trait LinkClassifier {
    fn classify(&self, link: &Link) -> Option<EdgeReason>;
}

impl<F: Fn(&Link) -> Option<EdgeReason>> LinkClassifier for F {
    fn classify(&self, link: &Link) -> Option<EdgeReason> {
        self(link)
    }
}

impl LinkClassifier for ExtensionSet {
    fn classify(&self, link: &Link) -> Option<EdgeReason> {
        if self.kind_is_a(&link.kind, ids::PLACEMENTLINK) || link.kind == ids::PLACEMENTLINK {
            return Some(EdgeReason::Placement);
        }
        let e = EntityRef::Link(link);
        [(HOSTED_ON, EdgeReason::Hosted), (CONNECTS_TO, EdgeReason::Connects), (DEPENDS_ON, EdgeReason::Depends)]
            .into_iter()
            .find(|(ty, _)| self.entity_matches(e, &mixin_id(ty)))
            .map(|(_, reason)| reason)
    }
}

/// Tie-break rank: infrastructure first, then applications, components,
/// other resources and finally links.
pub fn kind_rank(kind: &str, is_link: bool) -> u8 {
    match kind {
        _ if is_link => 6,
        ids::COMPUTE => 0,
        ids::NETWORK => 1,
        ids::STORAGE => 2,
        ids::APPLICATION => 3,
        ids::COMPONENT => 4,
        _ => 5,
    }
}

fn rank_of(e: &Entity) -> u8 {
    kind_rank(e.kind(), e.is_link())
}

/// Builds the ordering graph over the entities to create. Every link waits
/// for its endpoints; placement, hosting, connection and dependency links
/// also make their source wait for their target when both are new.
pub fn build_graph(
    diff: &DiffResult,
    classifier: &(impl LinkClassifier + ?Sized),
) -> Result<ProvisioningOrderGraph, CyclicDependencyError> {
    let mut ranks: BTreeMap<&str, u8> = BTreeMap::new();
    let mut nodes = Vec::new();
    for e in &diff.to_create {
        if ranks.insert(e.id(), rank_of(e)).is_none() {
            nodes.push(String::from(e.id()));
        }
    }

    let mut edges = BTreeSet::new();
    for e in &diff.to_create {
        if let Entity::Link(l) = e {
            for end in [&l.source, &l.target] {
                if ranks.contains_key(end.as_str()) && *end != l.id {
                    edges.insert(Edge { from: l.id.clone(), to: end.clone(), reason: EdgeReason::LinkEndpoint });
                }
            }
        }
    }
    for e in diff.desired() {
        let Entity::Link(l) = e else { continue };
        let Some(reason) = classifier.classify(l) else { continue };
        if l.source != l.target && ranks.contains_key(l.source.as_str()) && ranks.contains_key(l.target.as_str()) {
            edges.insert(Edge { from: l.source.clone(), to: l.target.clone(), reason });
        }
    }
    let edges: Vec<Edge> = edges.into_iter().collect();
    let order = topological_order(&nodes, &edges, |id| ranks.get(id).copied().unwrap_or(u8::MAX))?;
    Ok(ProvisioningOrderGraph { nodes, edges, order })
}

fn topological_order(
    nodes: &[String],
    edges: &[Edge],
    rank: impl Fn(&str) -> u8,
) -> Result<Vec<String>, CyclicDependencyError> {
    let mut pending: BTreeMap<&str, usize> = nodes.iter().map(|n| (n.as_str(), 0)).collect();
    let mut dependents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for e in edges {
        if seen.insert((e.from.as_str(), e.to.as_str())) {
            *pending.entry(e.from.as_str()).or_default() += 1;
            dependents.entry(e.to.as_str()).or_default().push(e.from.as_str());
        }
    }
    let mut ready: BTreeSet<(u8, &str)> =
        pending.iter().filter(|(_, n)| **n == 0).map(|(id, _)| (rank(id), *id)).collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(next) = ready.pop_first() {
        order.push(String::from(next.1));
        pending.remove(next.1);
        for d in dependents.get(next.1).into_iter().flatten() {
            if let Some(n) = pending.get_mut(d) {
                *n -= 1;
                if *n == 0 {
                    ready.insert((rank(d), d));
                }
            }
        }
    }
    if pending.is_empty() {
        return Ok(order);
    }

    // Every node left waits on another node left, so walking dependencies
    // from any of them must come back around.
    let start = *pending.keys().next().unwrap_or(&"");
    let mut path: Vec<&str> = Vec::new();
    let mut current = start;
    loop {
        if let Some(pos) = path.iter().position(|p| *p == current) {
            let mut cycle: Vec<String> = path[pos..].iter().map(|s| String::from(*s)).collect();
            cycle.push(String::from(current));
            return Err(CyclicDependencyError { cycle });
        }
        path.push(current);
        current = edges
            .iter()
            .find(|e| e.from == current && pending.contains_key(e.to.as_str()))
            .map(|e| e.to.as_str())
            .unwrap_or(start);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occi::Resource;
    use crate::AttributeMap;

    fn res(id: &str, kind: &str) -> Entity {
        Entity::Resource(Resource {
            id: id.into(),
            kind: kind.into(),
            title: None,
            mixin_bases: Vec::new(),
            attribute_values: AttributeMap::new(),
        })
    }

    fn link(id: &str, s: &str, t: &str) -> Entity {
        Entity::Link(Link {
            id: id.into(),
            kind: ids::COMPONENTLINK.into(),
            title: None,
            source: s.into(),
            target: t.into(),
            mixin_bases: Vec::new(),
            attribute_values: AttributeMap::new(),
        })
    }

    fn depends(_: &Link) -> Option<EdgeReason> {
        Some(EdgeReason::Depends)
    }

    #[test]
    fn resources_only_is_edgeless() {
        let diff = DiffResult {
            to_create: alloc::vec![res("b", ids::COMPONENT), res("a", ids::COMPUTE)],
            ..Default::default()
        };
        let g = build_graph(&diff, &depends).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.order, ["a", "b"]);
    }

    #[test]
    fn mutual_depends_is_a_cycle() {
        let diff = DiffResult {
            to_create: alloc::vec![
                res("x", ids::COMPONENT),
                res("y", ids::COMPONENT),
                link("l1", "x", "y"),
                link("l2", "y", "x"),
            ],
            ..Default::default()
        };
        let err = build_graph(&diff, &depends).unwrap_err();
        assert_eq!(err.cycle, ["x", "y", "x"]);
    }

    #[test]
    fn link_waits_for_endpoints() {
        let diff = DiffResult {
            to_create: alloc::vec![link("l", "a", "b"), res("a", ids::COMPONENT), res("b", ids::COMPONENT)],
            ..Default::default()
        };
        let g = build_graph(&diff, &|_: &Link| None).unwrap();
        assert_eq!(g.order.last().map(String::as_str), Some("l"));
        assert_eq!(g.dependencies_of("l").count(), 2);
    }
}
