//! Platform-independent to platform-specific rewrite of a configuration.
//!
//! The transform adds a management network, connects every compute to it,
//! tags infrastructure resources with a provider-id mixin and fills in
//! compute defaults from a provider profile. It only ever appends, so running
//! it twice gives the same result as running it once.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::occi::{ids, Link, MixinBase, OcciConfiguration, Resource};
use crate::AttributeMap;

/// Name of the extension declaring the PSM mixins.
pub const PSM_EXTENSION: &str = "psm";

pub const MANAGEMENT_CIDR: &str = "psm.management.cidr";
pub const PROVIDER: &str = "psm.provider";
pub const IMAGE: &str = "psm.image";
pub const FLAVOR: &str = "psm.flavor";
pub const SSH_KEY: &str = "psm.ssh_key";
pub const USER_DATA: &str = "psm.user_data";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PsmProfile {
    pub provider_name: String,
    pub default_image: String,
    pub default_flavor: String,
    pub ssh_key_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_data: Option<String>,
    pub management_cidr: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PsmError {
    #[error("management CIDR {0:?} is not an IPv4 CIDR")]
    InvalidCidr(String),
}

/// Parses `a.b.c.d/n` with `n <= 32`.
pub fn parse_cidr(cidr: &str) -> Option<(Ipv4Addr, u8)> {
    let (addr, prefix) = cidr.split_once('/')?;
    let addr: Ipv4Addr = addr.parse().ok()?;
    if prefix.is_empty() || !prefix.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let prefix: u8 = prefix.parse().ok()?;
    (prefix <= 32).then_some((addr, prefix))
}

impl PsmProfile {
    pub fn validate(&self) -> Result<(), PsmError> {
        parse_cidr(&self.management_cidr).map(|_| ()).ok_or_else(|| PsmError::InvalidCidr(self.management_cidr.clone()))
    }
}

fn is_infrastructure(kind: &str) -> bool {
    matches!(kind, ids::COMPUTE | ids::NETWORK | ids::STORAGE)
}

fn has_mixin(r: &Resource, mixin: &str) -> bool {
    r.mixin_bases.iter().any(|mb| mb.mixin == mixin)
}

/// Id of the management network: next to the application when there is one.
fn management_network_id(cfg: &OcciConfiguration) -> String {
    let app = cfg.resources.iter().find(|r| r.kind == ids::APPLICATION);
    match app.and_then(|a| a.id.strip_suffix(":app")) {
        Some(prefix) => format!("{prefix}:psm:mgmt-net"),
        None => "urn:psm:mgmt-net".to_string(),
    }
}

pub fn transform(cfg: &OcciConfiguration, profile: &PsmProfile) -> Result<OcciConfiguration, PsmError> {
    profile.validate()?;
    let mut out = cfg.clone();

    let net_id = match out.resources.iter().find(|r| has_mixin(r, ids::MANAGEMENT_NETWORK)) {
        Some(existing) => existing.id.clone(),
        None => {
            let id = management_network_id(&out);
            let mut base = MixinBase::new(ids::MANAGEMENT_NETWORK);
            base.attribute_values.insert(MANAGEMENT_CIDR.into(), Value::from(profile.management_cidr.as_str()));
            base.attribute_values.insert(PROVIDER.into(), Value::from(profile.provider_name.as_str()));
            out.resources.push(Resource {
                id: id.clone(),
                kind: ids::NETWORK.into(),
                title: Some("management".into()),
                mixin_bases: alloc::vec![base],
                attribute_values: AttributeMap::new(),
            });
            id
        }
    };

    let computes: Vec<String> = out.resources.iter().filter(|r| r.kind == ids::COMPUTE).map(|r| r.id.clone()).collect();
    for compute in &computes {
        let connected =
            out.links.iter().any(|l| l.kind == ids::NETWORKINTERFACE && l.source == *compute && l.target == net_id);
        if connected {
            continue;
        }
        let mut id = format!("{compute}:mgmt-nic");
        while out.entity(&id).is_some() {
            id.push('_');
        }
        out.links.push(Link {
            id,
            kind: ids::NETWORKINTERFACE.into(),
            title: Some("mgmt".into()),
            source: compute.clone(),
            target: net_id.clone(),
            mixin_bases: Vec::new(),
            attribute_values: AttributeMap::new(),
        });
    }

    let defaults = [
        (IMAGE, Some(&profile.default_image)),
        (FLAVOR, Some(&profile.default_flavor)),
        (SSH_KEY, Some(&profile.ssh_key_name)),
        (USER_DATA, profile.user_data.as_ref()),
    ];
    for r in out.resources.iter_mut().filter(|r| is_infrastructure(&r.kind)) {
        if !has_mixin(r, ids::RUNTIME_ID) {
            r.mixin_bases.push(MixinBase::new(ids::RUNTIME_ID));
        }
        if r.kind != ids::COMPUTE {
            continue;
        }
        let missing: Vec<(&str, &String)> = defaults
            .iter()
            .filter_map(|(name, value)| Some((*name, (*value)?)))
            .filter(|(name, _)| crate::occi::EntityRef::Resource(r).attribute(name).is_none())
            .collect();
        if missing.is_empty() {
            continue;
        }
        let slot = match r.mixin_bases.iter().position(|mb| mb.mixin == ids::COMPUTE_DEFAULTS) {
            Some(i) => i,
            None => {
                r.mixin_bases.push(MixinBase::new(ids::COMPUTE_DEFAULTS));
                r.mixin_bases.len() - 1
            }
        };
        for (name, value) in missing {
            r.mixin_bases[slot].attribute_values.insert(name.into(), Value::from(value.as_str()));
        }
    }

    if !out.uses.iter().any(|u| u == PSM_EXTENSION) {
        out.uses.push(PSM_EXTENSION.into());
        out.uses.sort();
    }
    Ok(out)
}
