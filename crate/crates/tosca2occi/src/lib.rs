//! TOSCA to OCCI toolchain: the std half.
//!
//! The pure transformations live in [`tosca2occi_core`]; this crate adds the
//! TOSCA YAML parser, JSON file IO, the shipped fixture corpus, the mock OCCI
//! runtime with its HTTP surface, plan execution and the `tosca2occi` CLI.

pub mod cli;
pub mod executor;
pub mod fixtures;
pub mod io;
pub mod parser;
pub mod pipeline;
pub mod runtime;

pub use tosca2occi_core as core;

use std::path::PathBuf;

use tosca2occi_core::configgen::ConfigGenError;
use tosca2occi_core::mapping::MappingError;
use tosca2occi_core::occi::LinkError;
use tosca2occi_core::orchestrator::CyclicDependencyError;
use tosca2occi_core::psm::PsmError;
use tosca2occi_core::tosca::RegistryError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: parser::ParseError },
    #[error("{path}: {source}")]
    Link { path: PathBuf, source: LinkError },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    ConfigGen(#[from] ConfigGenError),
    #[error(transparent)]
    Psm(#[from] PsmError),
    #[error(transparent)]
    Runtime(#[from] runtime::RuntimeError),
    #[error(transparent)]
    Cycle(#[from] CyclicDependencyError),
    #[error(transparent)]
    Execution(#[from] Box<executor::ExecutionFailure>),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
