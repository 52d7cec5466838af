mod common;

use std::time::Duration;

use tosca2occi::core::occi::OcciConfiguration;
use tosca2occi::core::orchestrator::{build_graph, compare, plan, ProvisioningPlan, Verb};
use tosca2occi::executor::{execute, reconcile, ExecutionError, ExecutorOptions, StepOutcome};
use tosca2occi::fixtures::Corpus;
use tosca2occi::io::to_json_string;
use tosca2occi::runtime::{FaultSpec, RuntimeClient, RuntimeError};

#[test]
fn fixtures_converge_in_phase_order() {
    let corpus = Corpus::load().unwrap();
    for t in common::TOPOLOGIES {
        let (_, report, elapsed) = common::converge(&corpus, t);
        assert!(report.conforms, "{t}: {:?}", report.residual);
        assert!(report.execution.success);
        common::check_phases(&report, &corpus.psm(t).unwrap()).unwrap();
        assert!(elapsed < Duration::from_secs(5), "{t} took {elapsed:?}");
    }
}

#[test]
fn second_reconcile_is_empty() {
    let corpus = Corpus::load().unwrap();
    for t in common::TOPOLOGIES {
        let (rt, _, _) = common::converge(&corpus, t);
        let again = reconcile(&corpus.psm(t).unwrap(), &rt, &corpus.extensions, &common::fast_options()).unwrap();
        assert_eq!(again.plan.len(), 0, "{t}");
        assert!(again.conforms);
    }
}

#[test]
fn deterministic_runs_are_identical() {
    let corpus = Corpus::load().unwrap();
    let (rt_a, a, _) = common::converge(&corpus, "wordpress");
    let (rt_b, b, _) = common::converge(&corpus, "wordpress");
    assert_eq!(to_json_string(&a), to_json_string(&b));
    assert_eq!(rt_a.transitions(), rt_b.transitions());
    assert_eq!(to_json_string(&rt_a.snapshot()), to_json_string(&rt_b.snapshot()));
}

#[test]
fn components_start_after_their_dependencies() {
    let corpus = Corpus::load().unwrap();
    let (rt, _, _) = common::converge(&corpus, "wordpress");
    let log = rt.transitions();
    let seq = |id: &str, from: &str, to: &str| {
        log.iter()
            .find(|t| t.entity_id.ends_with(id) && t.from.as_deref() == Some(from) && t.to == to)
            .map(|t| t.seq)
            .unwrap_or_else(|| panic!("no {from} -> {to} for {id}"))
    };
    assert!(seq(":mysql", "deployed", "active") < seq(":wordpress", "deployed", "active"));
    assert!(seq(":apache", "deployed", "active") < seq(":wordpress", "deployed", "active"));
    assert!(seq(":wordpress", "deployed", "active") < seq(":app", "deployed", "active"));
}

fn without(cfg: &OcciConfiguration, id_suffix: &str) -> (OcciConfiguration, Vec<String>) {
    let victim = cfg.resources.iter().find(|r| r.id.ends_with(id_suffix)).unwrap().id.clone();
    let mut out = cfg.clone();
    let mut removed = vec![victim.clone()];
    out.resources.retain(|r| r.id != victim);
    out.links.retain(|l| {
        let keep = l.source != victim && l.target != victim;
        if !keep {
            removed.push(l.id.clone());
        }
        keep
    });
    (out, removed)
}

#[test]
fn removing_mongodb_deletes_it_and_its_links() {
    let corpus = Corpus::load().unwrap();
    let (rt, _, _) = common::converge(&corpus, "nodecellar");
    let (desired, mut removed) = without(&corpus.psm("nodecellar").unwrap(), ":mongodb");
    assert_eq!(removed.len(), 4, "mongodb, c3, c4 and p3: {removed:?}");
    let report = reconcile(&desired, &rt, &corpus.extensions, &common::fast_options()).unwrap();
    assert!(report.conforms);
    let mut deleted: Vec<String> =
        report.plan.steps.iter().filter(|s| s.verb == Verb::Delete).map(|s| s.entity_id.clone()).collect();
    assert_eq!(deleted.len(), report.plan.len(), "only deletions: {:?}", report.plan);
    assert_eq!(deleted.last().unwrap(), &removed[0], "links go first");
    deleted.sort();
    removed.sort();
    assert_eq!(deleted, removed);
    assert!(rt.snapshot().resources.iter().all(|r| !r.id.ends_with(":mongodb")));
}

#[test]
fn changed_attribute_is_patched_in_place() {
    let corpus = Corpus::load().unwrap();
    let (rt, _, _) = common::converge(&corpus, "wordpress");
    let mut desired = corpus.psm("wordpress").unwrap();
    let db = desired.resources.iter_mut().find(|r| r.id.ends_with(":computeDb")).unwrap();
    db.mixin_bases[0].attribute_values.insert("mem_size".into(), 8000.into());
    let report = reconcile(&desired, &rt, &corpus.extensions, &common::fast_options()).unwrap();
    assert_eq!(report.plan.len(), 1);
    assert_eq!(report.plan.steps[0].verb, Verb::Update);
    assert!(report.conforms);
}

fn plan_for(corpus: &Corpus, cfg: &OcciConfiguration, client: &dyn RuntimeClient) -> ProvisioningPlan {
    let diff = compare(cfg, &client.configuration().unwrap());
    plan(&diff, &build_graph(&diff, &corpus.extensions).unwrap())
}

#[test]
fn held_compute_times_out_its_gate() {
    let corpus = Corpus::load().unwrap();
    let psm = corpus.psm("wordpress").unwrap();
    let rt = common::runtime(&corpus);
    let held = "urn:tosca:wordpress:computeDb";
    rt.inject(FaultSpec::HoldState { entity_id: held.into() });
    let opts = ExecutorOptions { gate_timeout: Duration::from_millis(100), ..common::fast_options() };
    let p = plan_for(&corpus, &psm, &rt);
    let failure = execute(&p, &rt, &opts).unwrap_err();
    match &failure.error {
        ExecutionError::GateTimeout { entity_id, required_state, last_state, .. } => {
            assert_eq!(entity_id, held);
            assert_eq!(required_state, "active");
            assert_eq!(last_state.as_deref(), Some("inactive"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(!failure.report.success);
}

#[test]
fn rejected_create_skips_the_rest() {
    let corpus = Corpus::load().unwrap();
    let psm = corpus.psm("nodecellar").unwrap();
    let rt = common::runtime(&corpus);
    rt.inject(FaultSpec::RejectCreate { nth: 3 });
    let p = plan_for(&corpus, &psm, &rt);
    let failure = execute(&p, &rt, &common::fast_options()).unwrap_err();
    let n = match &failure.error {
        ExecutionError::Request { step, error: RuntimeError::Conflict(_), .. } => *step,
        other => panic!("unexpected {other:?}"),
    };
    let creates_before = p.steps[..n].iter().filter(|s| s.verb == Verb::Create).count();
    assert_eq!(creates_before, 2);
    let steps = &failure.report.steps;
    assert_eq!(steps.len(), p.len());
    assert!(steps[..n].iter().all(|s| s.outcome == StepOutcome::Succeeded));
    assert!(matches!(steps[n].outcome, StepOutcome::Failed { .. }));
    assert!(steps[n + 1..].iter().all(|s| s.outcome == StepOutcome::Skipped));
    // nothing after the failure reached the runtime
    assert_eq!(rt.snapshot().resources.len() + rt.snapshot().links.len(), 2);
}

#[test]
fn reconcile_recovers_after_a_fault_is_cleared() {
    let corpus = Corpus::load().unwrap();
    let psm = corpus.psm("wordpress").unwrap();
    let rt = common::runtime(&corpus);
    rt.inject(FaultSpec::RejectCreate { nth: 5 });
    assert!(reconcile(&psm, &rt, &corpus.extensions, &common::fast_options()).is_err());
    rt.clear_faults();
    let report = reconcile(&psm, &rt, &corpus.extensions, &common::fast_options()).unwrap();
    assert!(report.conforms, "{:?}", report.residual);
    let created: Vec<&str> = report
        .plan
        .steps
        .iter()
        .filter(|s| s.verb == Verb::Create)
        .map(|s| s.entity_id.as_str())
        .collect();
    assert_eq!(created.len(), psm.resources.len() + psm.links.len() - 4);
}

#[test]
fn extracted_model_keeps_provider_ids_out_of_the_diff() {
    let corpus = Corpus::load().unwrap();
    let (rt, _, _) = common::converge(&corpus, "multitier");
    let snapshot = rt.snapshot();
    let tagged = snapshot
        .resources
        .iter()
        .filter(|r| r.attribute_values.contains_key("providerId"))
        .count();
    assert!(tagged > 0);
    assert!(compare(&corpus.psm("multitier").unwrap(), &snapshot).is_empty());
}
