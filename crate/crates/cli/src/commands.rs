//! Subcommands and their exit-code contract: 0 success, 1 validation,
//! 2 infeasible, 3 I/O.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use zonecut::fitness::Objective;
use zonecut::fwgen::FlowTable;
use zonecut::pipeline::{emit_solution, optimize_system, read_result, write_emit, write_results, PipelineError, RunConfig};
use zonecut::reporting::{write_report, Picker, Report, ReportError};
use zonecut::system::{synth_system, topology_to_json, SynthSpec, SystemError, TopologyShape};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        PipelineError::from(e).into()
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Parser)]
#[command(name = "zonecut", version, about = "Security-zone partitioning of utility SCADA networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic topology document.
    Synth(SynthArgs),
    /// Search for Pareto-optimal zone partitions of every utility.
    Optimize(OptimizeArgs),
    /// Emit firewall configurations for one solution of a result file.
    Emit(EmitArgs),
    /// Summarize result files as CSV and JSON reports.
    Report(ReportArgs),
    /// Serve the HTTP JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub utilities: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub subs: u32,
    #[arg(long, value_enum, default_value = "hybrid")]
    pub topology: ShapeArg,
    #[arg(long, default_value_t = 0.0)]
    pub edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum ShapeArg {
    Star,
    Hybrid,
}

impl From<ShapeArg> for TopologyShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Star => TopologyShape::Star,
            ShapeArg::Hybrid => TopologyShape::Hybrid,
        }
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// RunConfig JSON; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub objectives: Option<Vec<Objective>>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Result directory; falls back to the config's output_dir, then `results`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    pub result: PathBuf,
    /// knee, min-cost, max-resilience or a solution index.
    #[arg(long, default_value = "knee")]
    pub solution: Picker,
    #[arg(long, default_value = "configs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long, default_value = "report")]
    pub out: PathBuf,
    /// Solution used for the baseline comparison.
    #[arg(long, default_value = "min-cost")]
    pub picker: Picker,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// Topology served at /topology and used by runs that name no source.
    #[arg(long)]
    pub topology: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Optimize(a) => cmd_optimize(&a),
        Command::Emit(a) => cmd_emit(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Serve(a) => cmd_serve(&a),
    }
}

pub fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let spec = SynthSpec {
        utilities: a.utilities as usize,
        subs: a.subs as usize,
        topology: a.topology.into(),
        edge_prob: a.edge_prob,
        seed: a.seed,
    };
    let text = topology_to_json(&synth_system(&spec)?);
    match &a.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn build_config(a: &OptimizeArgs) -> Result<RunConfig, CliError> {
    let mut config = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(t) = &a.topology {
        config.topology = Some(t.clone());
        config.synth = None;
    }
    if let Some(o) = &a.objectives {
        config.objectives = o.clone();
    }
    if let Some(p) = a.population {
        config.ga.population_size = p;
    }
    if let Some(g) = a.generations {
        config.ga.max_generations = g;
    }
    if let Some(s) = a.seed {
        config.ga.seed = s;
    }
    if a.parallelism.is_some() {
        config.parallelism = a.parallelism;
    }
    if a.out.is_some() {
        config.output_dir = a.out.clone();
    }
    config.validate()?;
    Ok(config)
}

pub fn cmd_optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let config = build_config(a)?;
    let system = config.resolve_system()?;
    let docs = optimize_system(&system, &config)?;
    let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let paths = write_results(&dir, &docs)?;
    let mut infeasible = Vec::new();
    for (doc, path) in docs.iter().zip(&paths) {
        let status = if doc.feasible { "feasible" } else { "infeasible" };
        println!("{}\t{status}\t{} solutions\t{}", doc.utility, doc.solutions.len(), path.display());
        if !doc.feasible {
            infeasible.push(doc.utility.clone());
        }
    }
    if infeasible.is_empty() {
        Ok(())
    } else {
        Err(CliError::Infeasible(format!("no feasible solution for {}", infeasible.join(", "))))
    }
}

pub fn cmd_emit(a: &EmitArgs) -> Result<(), CliError> {
    let doc = read_result(&a.result)?;
    let out = emit_solution(&doc, &a.solution, &FlowTable::builtin())?;
    write_emit(&a.out, &out)?;
    if !out.audit.clean {
        return Err(CliError::Validation(format!("audit found {} mismatches", out.audit.mismatches.len())));
    }
    println!(
        "{}: solution {} -> {} configs, {} ACL entries, audit clean",
        doc.utility,
        out.manifest.solution,
        out.audit.emitted_firewalls,
        out.audit.emitted_acls
    );
    Ok(())
}

pub fn cmd_report(a: &ReportArgs) -> Result<(), CliError> {
    let docs = a.results.iter().map(|p| read_result(p)).collect::<Result<Vec<_>, _>>()?;
    let report = Report::from_results(&docs, &a.picker)?;
    write_report(&a.out, &report)?;
    println!("{} runs summarized in {}", report.runs.len(), a.out.display());
    Ok(())
}

pub fn cmd_serve(a: &ServeArgs) -> Result<(), CliError> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    runtime.block_on(async {
        let state = crate::server::AppState::new(a.topology.clone())?;
        let addr = format!("{}:{}", a.bind, a.port);
        let listener =
            tokio::net::TcpListener::bind(&addr).await.map_err(|e| CliError::Io(format!("bind {addr}: {e}")))?;
        eprintln!("listening on {addr}");
        axum::serve(listener, crate::server::router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Io(e.to_string()))
    })
}
