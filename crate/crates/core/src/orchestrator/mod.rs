//! Reconciliation planning: compare a desired configuration with the current
//! one, order the entities to create and sequence the provisioning requests.
//!
//! Executing a plan needs a runtime and lives in the std crate.

mod diff;
mod graph;
mod plan;

pub use diff::{comparable_attributes, compare, DiffResult, EntityUpdate};
pub use graph::{
    build_graph, kind_rank, CyclicDependencyError, Edge, EdgeReason, LinkClassifier, ProvisioningOrderGraph,
};
pub use plan::{plan, EntityBody, PatchBody, Payload, ProvisioningPlan, Request, StateGate, Verb};
