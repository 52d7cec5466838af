//! Simulated OCCI runtime.
//!
//! [`MockRuntime`] keeps a runtime model of the deployed entities, drives
//! every entity with a lifecycle through its kind's state machine and can be
//! told to misbehave. It is used in-process through [`RuntimeClient`] or over
//! HTTP through [`http::serve`] and [`http::HttpClient`].

pub mod http;
mod mock;

use serde::{Deserialize, Serialize};

use tosca2occi_core::lifecycle::fsm_for;
use tosca2occi_core::occi::{Entity, OcciConfiguration};
use tosca2occi_core::orchestrator::{EntityBody, PatchBody};

pub use mock::{FaultSpec, MockConfig, MockRuntime, RuntimeRequest, TransitionRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "error", content = "message", rename_all = "kebab-case")]
pub enum RuntimeError {
    #[error("runtime unreachable: {0}")]
    Unreachable(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl RuntimeError {
    pub fn status(&self) -> u16 {
        match self {
            RuntimeError::Unreachable(_) => 503,
            RuntimeError::NotFound(_) => 404,
            RuntimeError::Conflict(_) => 409,
            RuntimeError::BadRequest(_) => 400,
        }
    }

    pub fn from_status(status: u16, message: String) -> Self {
        match status {
            404 => RuntimeError::NotFound(message),
            409 => RuntimeError::Conflict(message),
            400 => RuntimeError::BadRequest(message),
            _ => RuntimeError::Unreachable(format!("status {status}: {message}")),
        }
    }
}

/// What the orchestrator needs from a runtime.
pub trait RuntimeClient {
    /// The current runtime model, lifecycle states included.
    fn configuration(&self) -> Result<OcciConfiguration, RuntimeError>;
    fn create(&self, id: &str, body: &EntityBody) -> Result<(), RuntimeError>;
    fn update(&self, id: &str, patch: &PatchBody) -> Result<(), RuntimeError>;
    fn delete(&self, id: &str) -> Result<(), RuntimeError>;
    fn action(&self, id: &str, action: &str) -> Result<(), RuntimeError>;
    fn inject_fault(&self, fault: &FaultSpec) -> Result<(), RuntimeError>;

    fn entity(&self, id: &str) -> Result<Option<Entity>, RuntimeError> {
        Ok(self.configuration()?.entity(id).map(|e| e.to_owned()))
    }

    /// Lifecycle state of `id`, if it exists and its kind has one.
    fn state(&self, id: &str) -> Result<Option<String>, RuntimeError> {
        Ok(self.entity(id)?.as_ref().and_then(state_of))
    }
}

pub fn state_of(e: &Entity) -> Option<String> {
    let fsm = fsm_for(e.kind())?;
    e.attribute_values().get(fsm.state_attribute).and_then(|v| v.as_str()).map(String::from)
}

/// Runtime addressed by `url`: `memory:` gives a fresh in-process mock,
/// anything else is an HTTP base URL.
pub fn connect(url: &str, config: MockConfig) -> Box<dyn RuntimeClient> {
    if url == "memory:" || url.is_empty() {
        Box::new(MockRuntime::new(config))
    } else {
        Box::new(http::HttpClient::new(url))
    }
}
