//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

mod common;
#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::cell::Cell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use tosca2occi::core::mapping::MappingReport;
use tosca2occi::core::occi::{check_datatype, validate_configuration, DataTypeLookup, OcciConfiguration};
use tosca2occi::core::orchestrator::{build_graph, compare, plan, ProvisioningPlan};
use tosca2occi::executor::{execute, reconcile, ExecutionError, ExecutorOptions, StepOutcome};
use tosca2occi::fixtures::{self, Corpus};
use tosca2occi::io::{read_json, to_json_string};
use tosca2occi::runtime::{FaultSpec, RuntimeError};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn mapping_tables(corpus: &Corpus) -> Outcome {
    let started = Instant::now();
    let failures = common::check_mapping_rows(corpus);
    let elapsed = started.elapsed();
    ensure(failures.is_empty(), failures.join("; "))?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    let rows = common::mapping_rows();
    let t1 = rows.iter().filter(|r| r.table == 1).count();
    Ok(format!("{t1} + {} rows in {elapsed:?}", rows.len() - t1))
}

fn extension_consistency(corpus: &Corpus) -> Outcome {
    ensure(corpus.generated.report.errors.is_empty(), corpus.generated.report.errors.join("; "))?;
    let mut set = fixtures::base_extensions().map_err(|e| e.to_string())?;
    let golden = tosca2occi::io::read_extension(&fixtures::generated_extension_path()).map_err(|e| e.to_string())?;
    set.add(golden).map_err(|e| e.to_string())?;
    let census: MappingReport = read_json(&fixtures::golden_path("census.json")).map_err(|e| e.to_string())?;
    let got = corpus.generated.report.census();
    ensure(got == census, format!("census {got:?} differs from golden {census:?}"))?;
    common::golden_json("census.json", &got)?;
    let by: Vec<String> = got.by_extension.iter().map(|(k, v)| format!("{k}={v}")).collect();
    Ok(format!("{} mixins ({}), {} datatypes; reference 68/10/33/4", got.mixins, by.join(" "), got.datatypes))
}

fn structure(
    corpus: &Corpus,
    topology: &str,
    check: fn(&Corpus, &OcciConfiguration) -> Result<(), String>,
) -> Outcome {
    let cfg = corpus.configuration(topology).map_err(|e| e.to_string())?.configuration;
    check(corpus, &cfg)?;
    common::golden_json(&format!("config/{topology}.json"), &cfg)?;
    Ok(format!("{} resources, {} links, golden equal", cfg.resources.len(), cfg.links.len()))
}

fn convergence(corpus: &Corpus) -> Outcome {
    let mut notes = Vec::new();
    for t in common::TOPOLOGIES {
        let (_, report, elapsed) = common::converge(corpus, t);
        ensure(report.conforms, format!("{t} does not conform: {:?}", report.residual))?;
        common::check_phases(&report, &corpus.psm(t).map_err(|e| e.to_string())?).map_err(|e| format!("{t}: {e}"))?;
        ensure(elapsed < Duration::from_secs(5), format!("{t} took {elapsed:?}"))?;
        notes.push(format!("{t} {} steps", report.plan.len()));
    }
    Ok(notes.join(", "))
}

fn idempotence(corpus: &Corpus) -> Outcome {
    for t in common::TOPOLOGIES {
        let (rt, _, _) = common::converge(corpus, t);
        let psm = corpus.psm(t).map_err(|e| e.to_string())?;
        let again = reconcile(&psm, &rt, &corpus.extensions, &common::fast_options()).map_err(|e| e.to_string())?;
        ensure(again.plan.is_empty(), format!("{t}: second plan has {} steps", again.plan.len()))?;
    }
    Ok("0 steps on every fixture".into())
}

fn diff_oracle() -> Outcome {
    let runs = Cell::new(0u32);
    runner(support::DIFF_CASES)
        .run(&support::diff_pair_strategy(), |(d, c)| {
            runs.set(runs.get() + 1);
            support::check_diff(&d, &c).map_err(proptest::test_runner::TestCaseError::fail)
        })
        .map_err(|e| e.to_string())?;
    ensure(runs.get() >= support::DIFF_CASES, format!("only {} cases ran", runs.get()))?;
    Ok(format!("{} pairs, 0 mismatches", runs.get()))
}

fn plan_order() -> Outcome {
    let (dags, cycles) = (Cell::new(0u32), Cell::new(0u32));
    runner(support::DAG_CASES)
        .run(&support::dag_strategy(), |case| {
            dags.set(dags.get() + 1);
            support::check_plan_order(&case).map_err(proptest::test_runner::TestCaseError::fail)
        })
        .map_err(|e| e.to_string())?;
    runner(support::DAG_CASES)
        .run(&support::cyclic_strategy(), |(case, len)| {
            cycles.set(cycles.get() + 1);
            support::check_cycle(&case, len).map_err(proptest::test_runner::TestCaseError::fail)
        })
        .map_err(|e| e.to_string())?;
    ensure(dags.get() >= support::DAG_CASES, "too few DAGs")?;
    Ok(format!("{} DAGs, 0 violations; {} cyclic inputs rejected", dags.get(), cycles.get()))
}

fn constraint_validation(corpus: &Corpus) -> Outcome {
    let cfg: OcciConfiguration =
        read_json(&fixtures::path("configs/wordpress-unplaced-compute.json")).map_err(|e| e.to_string())?;
    let report = validate_configuration(&cfg, &corpus.extensions);
    let rules: Vec<&str> = report.violations.iter().map(|v| v.rule.as_str()).collect();
    ensure(rules == ["SourceMustBeSoftwareComponent"], format!("violations {rules:?}"))?;
    let cores = corpus.extensions.datatype("CoresType").ok_or("CoresType missing")?;
    ensure(!check_datatype(&0.into(), cores, &corpus.extensions), "0 accepted as CoresType")?;
    ensure(check_datatype(&1.into(), cores, &corpus.extensions), "1 rejected as CoresType")?;
    Ok("one SourceMustBeSoftwareComponent violation; 0 < minInclusive 1 rejected".into())
}

fn plan_of(corpus: &Corpus, psm: &OcciConfiguration) -> ProvisioningPlan {
    let diff = compare(psm, &OcciConfiguration::default());
    plan(&diff, &build_graph(&diff, &corpus.extensions).unwrap())
}

fn hold_state_run(corpus: &Corpus) -> Result<(String, String), String> {
    let psm = corpus.psm("wordpress").map_err(|e| e.to_string())?;
    let rt = common::runtime(corpus);
    let held = "urn:tosca:wordpress:computeDb";
    rt.inject(FaultSpec::HoldState { entity_id: held.into() });
    let opts = ExecutorOptions { gate_timeout: Duration::from_millis(100), ..common::fast_options() };
    let failure = execute(&plan_of(corpus, &psm), &rt, &opts).err().ok_or("run succeeded")?;
    match &failure.error {
        ExecutionError::GateTimeout { entity_id, .. } if entity_id == held => {}
        other => return Err(format!("unexpected {other}")),
    }
    Ok((failure.error.to_string(), to_json_string(&failure.report)))
}

fn reject_create_run(corpus: &Corpus, nth: usize) -> Result<String, String> {
    let psm = corpus.psm("multitier").map_err(|e| e.to_string())?;
    let rt = common::runtime(corpus);
    rt.inject(FaultSpec::RejectCreate { nth });
    let failure = execute(&plan_of(corpus, &psm), &rt, &common::fast_options()).err().ok_or("run succeeded")?;
    let n = match &failure.error {
        ExecutionError::Request { step, error: RuntimeError::Conflict(_), .. } => *step,
        other => return Err(format!("unexpected {other}")),
    };
    let steps = &failure.report.steps;
    ensure(steps[n + 1..].iter().all(|s| s.outcome == StepOutcome::Skipped), "steps after the failure ran")?;
    ensure(steps[..n].iter().all(|s| s.outcome == StepOutcome::Succeeded), "steps before the failure failed")?;
    Ok(to_json_string(&failure.report))
}

fn fault_handling(corpus: &Corpus) -> Outcome {
    let (error, first) = hold_state_run(corpus)?;
    let (_, second) = hold_state_run(corpus)?;
    ensure(first == second, "hold-state reports differ between runs")?;
    for nth in [1, 7, 20] {
        let a = reject_create_run(corpus, nth)?;
        ensure(a == reject_create_run(corpus, nth)?, format!("reject-create {nth} reports differ"))?;
    }
    Ok(error)
}

fn main() {
    let corpus = Corpus::load().expect("fixture corpus loads");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("mapping-table coverage", Box::new(|| mapping_tables(&corpus))),
        ("extension self-consistency", Box::new(|| extension_consistency(&corpus))),
        ("WordPress structure", Box::new(|| structure(&corpus, "wordpress", common::check_wordpress))),
        ("Node Cellar structure", Box::new(|| structure(&corpus, "nodecellar", common::check_nodecellar))),
        ("Multi-Tier structure", Box::new(|| structure(&corpus, "multitier", common::check_multitier))),
        ("end-to-end convergence", Box::new(|| convergence(&corpus))),
        ("idempotence", Box::new(|| idempotence(&corpus))),
        ("diff oracle equivalence", Box::new(diff_oracle)),
        ("plan-order property", Box::new(plan_order)),
        ("constraint validation", Box::new(|| constraint_validation(&corpus))),
        ("fault handling", Box::new(|| fault_handling(&corpus))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
