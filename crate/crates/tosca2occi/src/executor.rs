//! Runs a provisioning plan against a runtime.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use tosca2occi_core::occi::OcciConfiguration;
use tosca2occi_core::orchestrator::{
    build_graph, compare, plan, DiffResult, LinkClassifier, Payload, ProvisioningPlan, Request, Verb,
};

use crate::runtime::{RuntimeClient, RuntimeError};
use crate::Error;

#[derive(Clone, Debug)]
pub struct ExecutorOptions {
    pub poll_interval: Duration,
    /// How long a step waits for its gates before the run fails.
    pub gate_timeout: Duration,
    /// Report wall-clock times. Off for byte-stable reports.
    pub record_timing: bool,
}

impl Default for ExecutorOptions {
    fn default() -> Self {
        ExecutorOptions {
            poll_interval: Duration::from_millis(50),
            gate_timeout: Duration::from_secs(10),
            record_timing: true,
        }
    }
}

impl ExecutorOptions {
    pub fn deterministic() -> Self {
        ExecutorOptions { record_timing: false, ..ExecutorOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum StepOutcome {
    Succeeded,
    Failed { error: String },
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepReport {
    pub index: usize,
    pub verb: Verb,
    pub entity_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(flatten)]
    pub outcome: StepOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutionReport {
    pub steps: Vec<StepReport>,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExecutionError {
    #[error("step {step}: {entity_id} did not reach {required_state} (last state {last_state:?})")]
    GateTimeout { step: usize, entity_id: String, required_state: String, last_state: Option<String> },
    #[error("step {step}: request on {entity_id} failed: {error}")]
    Request { step: usize, entity_id: String, error: RuntimeError },
}

/// A failed run: the error plus the report up to and including the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct ExecutionFailure {
    pub error: ExecutionError,
    pub report: ExecutionReport,
}

fn millis(d: Duration) -> u64 {
    u64::try_from(d.as_millis()).unwrap_or(u64::MAX)
}

fn wait_for_gates(
    client: &dyn RuntimeClient,
    step: usize,
    request: &Request,
    opts: &ExecutorOptions,
) -> Result<(), ExecutionError> {
    for gate in &request.gates {
        let deadline = Instant::now() + opts.gate_timeout;
        loop {
            let state = client.state(&gate.entity_id).map_err(|error| ExecutionError::Request {
                step,
                entity_id: gate.entity_id.clone(),
                error,
            })?;
            if state.as_deref() == Some(gate.required_state.as_str()) {
                break;
            }
            if Instant::now() >= deadline {
                return Err(ExecutionError::GateTimeout {
                    step,
                    entity_id: gate.entity_id.clone(),
                    required_state: gate.required_state.clone(),
                    last_state: state,
                });
            }
            std::thread::sleep(opts.poll_interval);
        }
    }
    Ok(())
}

fn send(client: &dyn RuntimeClient, request: &Request) -> Result<(), RuntimeError> {
    let id = &request.entity_id;
    match (request.verb, &request.payload) {
        (Verb::Create, Some(Payload::Create(body))) => client.create(id, body),
        (Verb::Update, Some(Payload::Patch(patch))) => client.update(id, patch),
        (Verb::Delete, _) => client.delete(id),
        (Verb::Action, _) => client.action(id, request.action.as_deref().unwrap_or_default()),
        (verb, _) => Err(RuntimeError::BadRequest(format!("{verb:?} on {id} has no usable payload"))),
    }
}

/// Executes the steps in order. The first failure stops the run; the
/// remaining steps are reported as skipped.
pub fn execute(
    plan: &ProvisioningPlan,
    client: &dyn RuntimeClient,
    opts: &ExecutorOptions,
) -> Result<ExecutionReport, Box<ExecutionFailure>> {
    let started = Instant::now();
    let mut report = ExecutionReport::default();
    let mut failure = None;
    for (index, request) in plan.steps.iter().enumerate() {
        let mut step = StepReport {
            index,
            verb: request.verb,
            entity_id: request.entity_id.clone(),
            action: request.action.clone(),
            outcome: StepOutcome::Skipped,
            elapsed_ms: None,
        };
        if failure.is_none() {
            let t = Instant::now();
            let result = wait_for_gates(client, index, request, opts).and_then(|_| {
                send(client, request).map_err(|error| ExecutionError::Request {
                    step: index,
                    entity_id: request.entity_id.clone(),
                    error,
                })
            });
            step.outcome = match result {
                Ok(()) => StepOutcome::Succeeded,
                Err(e) => {
                    log::error!("{e}");
                    let outcome = StepOutcome::Failed { error: e.to_string() };
                    failure = Some(e);
                    outcome
                }
            };
            if opts.record_timing {
                step.elapsed_ms = Some(millis(t.elapsed()));
            }
            log::info!("step {index}: {:?} {} {:?}", request.verb, request.entity_id, step.outcome);
        }
        report.steps.push(step);
    }
    report.success = failure.is_none();
    if opts.record_timing {
        report.elapsed_ms = Some(millis(started.elapsed()));
    }
    match failure {
        None => Ok(report),
        Some(error) => Err(Box::new(ExecutionFailure { error, report })),
    }
}

/// The runtime model as the runtime reports it.
pub fn extract(client: &dyn RuntimeClient) -> Result<OcciConfiguration, RuntimeError> {
    client.configuration()
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReconcileReport {
    pub plan: ProvisioningPlan,
    pub execution: ExecutionReport,
    /// Difference left between desired and extracted after execution.
    pub residual: DiffResult,
    pub conforms: bool,
}

/// Drives the runtime to `desired`: extract, compare, order, plan, execute,
/// then extract again and compare.
pub fn reconcile(
    desired: &OcciConfiguration,
    client: &dyn RuntimeClient,
    classifier: &dyn LinkClassifier,
    opts: &ExecutorOptions,
) -> Result<ReconcileReport, Error> {
    let current = extract(client)?;
    let diff = compare(desired, &current);
    let graph = build_graph(&diff, classifier)?;
    let plan = plan(&diff, &graph);
    let execution = execute(&plan, client, opts)?;
    let residual = compare(desired, &extract(client)?);
    let conforms = residual.is_empty();
    Ok(ReconcileReport { plan, execution, residual, conforms })
}
