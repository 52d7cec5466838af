//! File-level composition of the core transformations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;

use tosca2occi_core::configgen::{generate_configuration, GeneratedConfiguration};
use tosca2occi_core::mapping::{generate_extension, GeneratedExtension, RuleTable};
use tosca2occi_core::occi::{ExtensionSet, OcciExtension};
use tosca2occi_core::tosca::{ToscaTopology, ToscaTypeDef, ToscaTypeRegistry};

use crate::io::{expand_paths, read_text};
use crate::parser::{parse_topology, parse_types};
use crate::{Error, Result};

/// Parses every type file (directories expand to their `*.yaml` files).
pub fn load_type_defs(paths: &[PathBuf]) -> Result<Vec<ToscaTypeDef>> {
    let mut defs = Vec::new();
    for path in expand_paths(paths, "yaml")? {
        let text = read_text(&path)?;
        defs.extend(parse_types(&text).map_err(|source| Error::Parse { path: path.clone(), source })?);
    }
    Ok(defs)
}

pub fn load_registry(paths: &[PathBuf]) -> Result<ToscaTypeRegistry> {
    Ok(ToscaTypeRegistry::resolve(load_type_defs(paths)?)?)
}

pub fn load_topology(path: &Path, inputs: &BTreeMap<String, Value>) -> Result<ToscaTopology> {
    let text = read_text(path)?;
    parse_topology(&text, inputs).map_err(|source| Error::Parse { path: path.to_path_buf(), source })
}

/// Compiles a registry into the TOSCA extension with the builtin rules.
pub fn build_extension(registry: &ToscaTypeRegistry, base: &ExtensionSet) -> Result<GeneratedExtension> {
    Ok(generate_extension(registry, &RuleTable::builtin(), base)?)
}

/// `base` plus `ext`, linked.
pub fn with_extension(base: &ExtensionSet, ext: OcciExtension) -> Result<ExtensionSet> {
    let mut set = base.clone();
    set.add(ext).map_err(|source| Error::Link { path: PathBuf::from("<generated>"), source })?;
    Ok(set)
}

pub fn build_configuration(
    topology: &ToscaTopology,
    registry: &ToscaTypeRegistry,
    exts: &ExtensionSet,
) -> Result<GeneratedConfiguration> {
    let generated = generate_configuration(topology, registry, exts)?;
    for group in &generated.unmapped_groups {
        log::warn!("group {group:?} is not instantiated");
    }
    Ok(generated)
}
