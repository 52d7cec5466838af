//! JSON documents on disk: extensions, configurations, profiles, reports.
//!
//! Output is pretty-printed with sorted object keys and a trailing newline,
//! so files are byte-stable across runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use tosca2occi_core::occi::{ExtensionSet, LinkError, OcciExtension};

use crate::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    // Going through Value sorts every object's keys.
    let value = serde_json::to_value(value).expect("model types serialize to JSON");
    let mut out = serde_json::to_string_pretty(&value).expect("JSON values serialize");
    out.push('\n');
    out
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_string(value))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Reads one extension file. Linking happens when it is added to a set.
pub fn read_extension(path: &Path) -> Result<OcciExtension> {
    read_json(path)
}

/// Loads a single extension and links it against `imports`.
pub fn load_extension(path: &Path, imports: &ExtensionSet) -> Result<OcciExtension> {
    let ext = read_extension(path)?;
    let mut set = imports.clone();
    set.add(ext.clone()).map_err(|source| Error::Link { path: path.to_path_buf(), source })?;
    Ok(ext)
}

/// Expands directories into their `*.json` files, sorted by name.
pub fn expand_paths(paths: &[PathBuf], extension: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|source| Error::Io { path: p.clone(), source })?;
            let mut files: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == extension))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Loads extension files given in any order (or directories of them) and
/// links them imports first.
pub fn load_extension_set(paths: &[PathBuf]) -> Result<ExtensionSet> {
    let files = expand_paths(paths, "json")?;
    let mut pending: BTreeMap<String, (PathBuf, OcciExtension)> = BTreeMap::new();
    for f in files {
        let ext = read_extension(&f)?;
        if pending.contains_key(&ext.name) {
            return Err(Error::Link { path: f, source: LinkError::DuplicateExtension(ext.name) });
        }
        pending.insert(ext.name.clone(), (f, ext));
    }
    let mut set = ExtensionSet::new();
    while !pending.is_empty() {
        let ready = pending
            .iter()
            .find(|(_, (_, e))| e.imports.iter().all(|i| set.contains(i) || !pending.contains_key(i)))
            .map(|(name, _)| name.clone());
        // With no extension ready, every remaining one waits on another; adding
        // any of them reports the missing import.
        let name = ready.unwrap_or_else(|| pending.keys().next().cloned().unwrap_or_default());
        let (path, ext) = pending.remove(&name).expect("name taken from the map");
        set.add(ext).map_err(|source| Error::Link { path, source })?;
    }
    Ok(set)
}
