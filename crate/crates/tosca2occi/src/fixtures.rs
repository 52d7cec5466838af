//! The shipped fixture corpus: base extensions, TOSCA type files, the three
//! case-study topologies, a provider profile and golden outputs.
//!
//! The directory defaults to the one in this crate and can be moved with the
//! `TOSCA2OCCI_FIXTURES` environment variable.

use std::collections::BTreeMap;
use std::path::PathBuf;

use tosca2occi_core::configgen::GeneratedConfiguration;
use tosca2occi_core::mapping::GeneratedExtension;
use tosca2occi_core::occi::{ExtensionSet, OcciConfiguration};
use tosca2occi_core::psm::{self, PsmProfile};
use tosca2occi_core::tosca::ToscaTypeRegistry;

use crate::io::{load_extension_set, read_json};
use crate::pipeline;
use crate::Result;

pub const ENV_VAR: &str = "TOSCA2OCCI_FIXTURES";

/// Base extensions, in import order.
pub const BASE_EXTENSIONS: [&str; 5] = ["core", "infrastructure", "platform", "sla", "psm"];

/// The case studies: topology file stem and topology name.
pub const TOPOLOGIES: [&str; 3] = ["wordpress", "nodecellar", "multitier"];

pub fn dir() -> PathBuf {
    std::env::var_os(ENV_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
}

pub fn path(relative: &str) -> PathBuf {
    dir().join(relative)
}

pub fn extension_path(name: &str) -> PathBuf {
    path(&format!("extensions/{name}.json"))
}

pub fn base_extension_paths() -> Vec<PathBuf> {
    BASE_EXTENSIONS.iter().map(|n| extension_path(n)).collect()
}

pub fn types_dir() -> PathBuf {
    path("types")
}

/// Normative type file followed by the custom type files.
pub fn type_paths() -> Vec<PathBuf> {
    vec![path("types/normative.yaml"), path("types/custom")]
}

pub fn topology_path(name: &str) -> PathBuf {
    path(&format!("topologies/{name}.yaml"))
}

pub fn golden_path(name: &str) -> PathBuf {
    path(&format!("golden/{name}"))
}

pub fn profile_path() -> PathBuf {
    path("profile.json")
}

pub fn generated_extension_path() -> PathBuf {
    golden_path("tosca-extension.json")
}

pub fn base_extensions() -> Result<ExtensionSet> {
    load_extension_set(&base_extension_paths())
}

pub fn registry() -> Result<ToscaTypeRegistry> {
    pipeline::load_registry(&type_paths())
}

pub fn profile() -> Result<PsmProfile> {
    read_json(&profile_path())
}

/// Everything needed to go from a topology to a deployment.
pub struct Corpus {
    pub base: ExtensionSet,
    pub registry: ToscaTypeRegistry,
    pub generated: GeneratedExtension,
    /// Base extensions plus the generated one.
    pub extensions: ExtensionSet,
    pub profile: PsmProfile,
}

impl Corpus {
    pub fn load() -> Result<Corpus> {
        let base = base_extensions()?;
        let registry = registry()?;
        let generated = pipeline::build_extension(&registry, &base)?;
        let extensions = pipeline::with_extension(&base, generated.extension.clone())?;
        Ok(Corpus { base, registry, generated, extensions, profile: profile()? })
    }

    pub fn configuration(&self, topology: &str) -> Result<GeneratedConfiguration> {
        let topo = pipeline::load_topology(&topology_path(topology), &BTreeMap::new())?;
        pipeline::build_configuration(&topo, &self.registry, &self.extensions)
    }

    pub fn psm(&self, topology: &str) -> Result<OcciConfiguration> {
        let pim = self.configuration(topology)?.configuration;
        Ok(psm::transform(&pim, &self.profile)?)
    }
}
