use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The constrained entity is the link target.
    In,
    /// The constrained entity is the link source.
    Out,
}

/// Business constraint language attached to mixins.
///
/// `ExistsLink` holds when the constrained entity has a link in `direction`
/// whose kind or mixins match `link` and whose opposite end matches `peer`. A
/// category reference matches an entity when it names the entity's kind (or
/// a parent kind) or a mixin in the depends closure of one of its mixins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ConstraintExpr {
    ExistsLink { direction: Direction, link: String, peer: String },
    AttrMatches { attribute: String, pattern: String },
    And(Vec<ConstraintExpr>),
    Or(Vec<ConstraintExpr>),
    Not(Box<ConstraintExpr>),
}

impl ConstraintExpr {
    pub fn exists_link(direction: Direction, link: impl Into<String>, peer: impl Into<String>) -> Self {
        ConstraintExpr::ExistsLink { direction, link: link.into(), peer: peer.into() }
    }

    /// Category identifiers referenced anywhere in the expression.
    pub fn category_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ConstraintExpr::ExistsLink { link, peer, .. } => {
                out.push(link);
                out.push(peer);
            }
            ConstraintExpr::AttrMatches { .. } => {}
            ConstraintExpr::And(items) | ConstraintExpr::Or(items) => items.iter().for_each(|e| e.collect_refs(out)),
            ConstraintExpr::Not(inner) => inner.collect_refs(out),
        }
    }
}

impl fmt::Display for ConstraintExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, op: &str, items: &[ConstraintExpr]) -> fmt::Result {
            write!(f, "(")?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{item}")?;
            }
            write!(f, ")")
        }
        match self {
            ConstraintExpr::ExistsLink { direction, link, peer } => {
                let dir = match direction {
                    Direction::In => "in",
                    Direction::Out => "out",
                };
                write!(f, "exists_link({dir}, {link}, {peer})")
            }
            ConstraintExpr::AttrMatches { attribute, pattern } => write!(f, "attr_matches({attribute}, {pattern:?})"),
            ConstraintExpr::And(items) => join(f, "and", items),
            ConstraintExpr::Or(items) => join(f, "or", items),
            ConstraintExpr::Not(inner) => write!(f, "not {inner}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintDef {
    pub name: String,
    pub body: ConstraintExpr,
}
