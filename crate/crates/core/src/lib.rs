//! Core of the TOSCA to OCCI toolchain.
//!
//! This crate is `no_std` (it only needs `alloc`) and holds everything that is
//! a pure transformation over in-memory models:
//!
//! * [`occi`]: the OCCIware metamodel (extensions, kinds, mixins, datatypes,
//!   constraints) and its instance model (configurations), with linking,
//!   datatype checking and configuration validation.
//! * [`tosca`]: the TOSCA data model produced by the YAML parser, plus the
//!   `derived_from` resolved type registry.
//! * [`mapping`]: compilation of a TOSCA type registry into the OCCI "TOSCA
//!   extension".
//! * [`configgen`]: instantiation of a TOSCA topology into an OCCI
//!   configuration.
//! * [`psm`]: the platform-independent to platform-specific model rewrite.
//! * [`orchestrator`]: diffing desired against current state, the
//!   provisioning-order graph and the sequenced provisioning plan.
//! * [`lifecycle`]: the lifecycle state machines of the simulated runtime.
//!
//! Parsing, file IO, the mock runtime and the CLI live in the `tosca2occi`
//! crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod configgen;
pub mod lifecycle;
pub mod mapping;
pub mod occi;
pub mod orchestrator;
pub mod psm;
pub mod tosca;

pub use serde_json::Value;

/// Attribute map used by entities and mixin bases. Keys are kept sorted so
/// serialization is deterministic.
pub type AttributeMap = alloc::collections::BTreeMap<alloc::string::String, Value>;
