//! The `tosca2occi` command line.
//!
//! Every stage reads and writes JSON, so stages compose through pipes:
//!
//! ```text
//! tosca2occi gen-config --topology wordpress.yaml | tosca2occi pim2psm | tosca2occi plan
//! ```
//!
//! Exit status is 0 on success, 1 when a configuration has violations or a
//! deployment does not conform, 2 on any error.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use tosca2occi_core::occi::{validate_configuration, ExtensionSet, OcciConfiguration};
use tosca2occi_core::orchestrator::{build_graph, compare, plan};
use tosca2occi_core::psm::{self, PsmProfile};

use crate::executor::{self, ExecutorOptions};
use crate::io::{load_extension_set, to_json_string, write_text};
use crate::parser::{emit_topology, emit_types, parse_input_override};
use crate::runtime::{self, http, MockConfig, MockRuntime};
use crate::{fixtures, pipeline, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "tosca2occi", version, about = "TOSCA to OCCI toolchain", arg_required_else_help = true)]
struct Cli {
    /// Zero-delay mock runtime and no timings in reports.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse TOSCA type files and print the type definitions.
    ParseTypes {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Print canonical YAML instead of JSON.
        #[arg(long)]
        yaml: bool,
    },
    /// Parse a topology template and print it with inputs resolved.
    ParseTopology {
        file: PathBuf,
        #[arg(long = "input", value_name = "K=V")]
        inputs: Vec<String>,
        #[arg(long)]
        yaml: bool,
    },
    /// Compile TOSCA types into the TOSCA OCCI extension.
    GenExtension {
        /// Type files or directories; defaults to the fixture types.
        #[arg(long)]
        types: Vec<PathBuf>,
        #[command(flatten)]
        base: BaseArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the OCCI configuration of a topology.
    GenConfig {
        #[arg(long)]
        topology: PathBuf,
        #[command(flatten)]
        exts: ExtArgs,
        #[arg(long)]
        types: Vec<PathBuf>,
        #[arg(long = "input", value_name = "K=V")]
        inputs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration against its extensions.
    Validate {
        #[arg(long, default_value = "-")]
        config: PathBuf,
        #[command(flatten)]
        exts: ExtArgs,
    },
    /// Add platform-specific details to a configuration.
    Pim2psm {
        #[arg(long, default_value = "-")]
        config: PathBuf,
        /// Provider profile; defaults to the fixture profile.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the provisioning plan that would bring a runtime to a configuration.
    Plan {
        #[arg(long, default_value = "-")]
        desired: PathBuf,
        #[command(flatten)]
        runtime: RuntimeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconcile a runtime with a configuration.
    Deploy {
        #[arg(long, default_value = "-")]
        desired: PathBuf,
        #[command(flatten)]
        runtime: RuntimeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the runtime model.
    Extract {
        #[command(flatten)]
        runtime: RuntimeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the mock runtime over HTTP until interrupted.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Milliseconds before created entities activate.
        #[arg(long, default_value_t = 20)]
        delay_ms: u64,
        /// Validate incoming entities against these extensions.
        #[arg(long)]
        extensions: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct BaseArgs {
    /// Base extension files or directories; defaults to the fixture base extensions.
    #[arg(long)]
    extensions: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtArgs {
    /// Extension files or directories; defaults to the fixture base extensions.
    #[arg(long)]
    extensions: Vec<PathBuf>,
    /// Additional extension files, typically the generated TOSCA extension.
    /// Defaults to the fixture copy when absent.
    #[arg(long)]
    extension: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct RuntimeArgs {
    /// Runtime base URL, or `memory:` for a fresh in-process mock.
    #[arg(long, default_value = "memory:")]
    runtime: String,
    #[arg(long, default_value_t = 50)]
    poll_ms: u64,
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
}

impl BaseArgs {
    fn load(&self) -> Result<ExtensionSet> {
        if self.extensions.is_empty() {
            fixtures::base_extensions()
        } else {
            load_extension_set(&self.extensions)
        }
    }
}

impl ExtArgs {
    fn load(&self) -> Result<ExtensionSet> {
        let mut paths =
            if self.extensions.is_empty() { fixtures::base_extension_paths() } else { self.extensions.clone() };
        if self.extension.is_empty() {
            if self.extensions.is_empty() {
                paths.push(fixtures::generated_extension_path());
            }
        } else {
            paths.extend(self.extension.iter().cloned());
        }
        load_extension_set(&paths)
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Ok(text)
    } else {
        crate::io::read_text(path)
    }
}

fn read_json_input<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_input(path)?).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

fn emit_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) if path != Path::new("-") => write_text(path, text),
        _ => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn emit<T: Serialize + ?Sized>(out: Option<&Path>, value: &T) -> Result<()> {
    emit_text(out, &to_json_string(value))
}

fn inputs(args: &[String]) -> Result<BTreeMap<String, Value>> {
    args.iter()
        .map(|a| parse_input_override(a).ok_or_else(|| Error::Usage(format!("--input expects K=V, got {a:?}"))))
        .collect()
}

fn type_paths(types: &[PathBuf]) -> Vec<PathBuf> {
    if types.is_empty() {
        fixtures::type_paths()
    } else {
        types.to_vec()
    }
}

fn executor_options(args: &RuntimeArgs, deterministic: bool) -> ExecutorOptions {
    ExecutorOptions {
        poll_interval: Duration::from_millis(args.poll_ms),
        gate_timeout: Duration::from_millis(args.timeout_ms),
        record_timing: !deterministic,
    }
}

fn mock_config(deterministic: bool) -> MockConfig {
    if deterministic {
        MockConfig::deterministic()
    } else {
        MockConfig::default()
    }
}

/// Extensions used to classify links while ordering: the default set when
/// it loads, otherwise links only wait for their endpoints.
fn classifier() -> ExtensionSet {
    ExtArgs { extensions: Vec::new(), extension: Vec::new() }.load().unwrap_or_else(|e| {
        log::warn!("link classification disabled: {e}");
        ExtensionSet::new()
    })
}

fn execute(cli: Cli) -> Result<i32> {
    let deterministic = cli.deterministic;
    match cli.command {
        Command::ParseTypes { files, yaml } => {
            let defs = pipeline::load_type_defs(&files)?;
            if yaml {
                emit_text(None, &emit_types(&defs))?;
            } else {
                emit(None, &defs)?;
            }
        }
        Command::ParseTopology { file, inputs: args, yaml } => {
            let topo = pipeline::load_topology(&file, &inputs(&args)?)?;
            if yaml {
                emit_text(None, &emit_topology(&topo))?;
            } else {
                emit(None, &topo)?;
            }
        }
        Command::GenExtension { types, base, out } => {
            let registry = pipeline::load_registry(&type_paths(&types))?;
            let generated = pipeline::build_extension(&registry, &base.load()?)?;
            let report = &generated.report;
            eprintln!("census mixins={} datatypes={}", report.mixins, report.datatypes);
            for (ext, n) in &report.by_extension {
                eprintln!("census extension={ext} mixins={n}");
            }
            for err in &report.errors {
                eprintln!("error {err}");
            }
            emit(out.as_deref(), &generated.extension)?;
        }
        Command::GenConfig { topology, exts, types, inputs: args, out } => {
            let topo = pipeline::load_topology(&topology, &inputs(&args)?)?;
            let registry = pipeline::load_registry(&type_paths(&types))?;
            let generated = pipeline::build_configuration(&topo, &registry, &exts.load()?)?;
            emit(out.as_deref(), &generated.configuration)?;
        }
        Command::Validate { config, exts } => {
            let cfg: OcciConfiguration = read_json_input(&config)?;
            let report = validate_configuration(&cfg, &exts.load()?);
            for v in &report.violations {
                eprintln!("violation {v}");
            }
            emit(None, &report)?;
            return Ok(if report.is_valid() { 0 } else { 1 });
        }
        Command::Pim2psm { config, profile, out } => {
            let cfg: OcciConfiguration = read_json_input(&config)?;
            let profile: PsmProfile = match profile {
                Some(p) => crate::io::read_json(&p)?,
                None => fixtures::profile()?,
            };
            emit(out.as_deref(), &psm::transform(&cfg, &profile)?)?;
        }
        Command::Plan { desired, runtime: args, out } => {
            let desired: OcciConfiguration = read_json_input(&desired)?;
            let client = runtime::connect(&args.runtime, mock_config(deterministic));
            let current = executor::extract(client.as_ref())?;
            let diff = compare(&desired, &current);
            let graph = build_graph(&diff, &classifier())?;
            emit(out.as_deref(), &plan(&diff, &graph))?;
        }
        Command::Deploy { desired, runtime: args, out } => {
            let desired: OcciConfiguration = read_json_input(&desired)?;
            let client = runtime::connect(&args.runtime, mock_config(deterministic));
            let opts = executor_options(&args, deterministic);
            match executor::reconcile(&desired, client.as_ref(), &classifier(), &opts) {
                Ok(report) => {
                    emit(out.as_deref(), &report)?;
                    return Ok(if report.conforms { 0 } else { 1 });
                }
                Err(Error::Execution(failure)) => {
                    emit(out.as_deref(), &failure.report)?;
                    return Err(Error::Execution(failure));
                }
                Err(e) => return Err(e),
            }
        }
        Command::Extract { runtime: args, out } => {
            let client = runtime::connect(&args.runtime, mock_config(deterministic));
            emit(out.as_deref(), &executor::extract(client.as_ref())?)?;
        }
        Command::Serve { addr, delay_ms, extensions } => {
            let mut config = MockConfig { delay: Duration::from_millis(delay_ms), ..MockConfig::default() };
            if deterministic {
                config.delay = Duration::ZERO;
            }
            if !extensions.is_empty() {
                config = config.with_extensions(load_extension_set(&extensions)?);
            }
            let handle = http::serve(MockRuntime::new(config), &addr)
                .map_err(|source| Error::Io { path: PathBuf::from(&addr), source })?;
            eprintln!("listening on {}", handle.url());
            handle.join();
        }
    }
    Ok(0)
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
