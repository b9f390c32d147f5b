//! End-to-end runs: configuration, per-utility optimization, result
//! documents, and emission of a selected solution.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{ConstraintParams, ConstraintViolation, FitnessError, Objective, ObjectiveVector, UtilityProblem};
use crate::fwgen::{
    audit_counts, config_file_name, emit_utility, render_config_text, Addressing, AuditReport, FlowTable,
    FwgenError, Manifest, ManifestEntry,
};
use crate::grid::{GridError, Weights};
use crate::nsga2::{self, GaParams, NsgaError};
use crate::reporting::{pick, Picker, ReportError};
use crate::system::{load_topology, synth_system, SynthSpec, SystemError, SystemModel, UtilityDoc};
use crate::topology::{decompose, Chromosome, TopologyError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Nsga(#[from] NsgaError),
    #[error(transparent)]
    Fwgen(#[from] FwgenError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("malformed result document: {0}")]
    Result(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// True for errors caused by bad user input rather than the filesystem.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            PipelineError::Io { .. } | PipelineError::System(SystemError::Io { .. }) | PipelineError::Report(ReportError::Io { .. })
        )
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.display().to_string(), source }
}

fn default_objectives() -> Vec<Objective> {
    Objective::ALL.to_vec()
}

/// Everything needed to reproduce a multi-utility run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    #[serde(default)]
    pub ga: GaParams,
    #[serde(default = "default_objectives")]
    pub objectives: Vec<Objective>,
    #[serde(default)]
    pub constraints: ConstraintParams,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Utilities optimized concurrently; `None` uses all cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    /// Record wall-clock time in result documents (breaks byte identity).
    #[serde(default)]
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            topology: None,
            synth: None,
            ga: GaParams::default(),
            objectives: default_objectives(),
            constraints: ConstraintParams::default(),
            weights: Weights::default(),
            output_dir: None,
            parallelism: None,
            record_timing: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        match (&self.topology, &self.synth) {
            (Some(_), Some(_)) => {
                return Err(PipelineError::Config("give a topology path or a synthesis spec, not both".into()))
            }
            (None, None) => return Err(PipelineError::Config("a topology path or a synthesis spec is required".into())),
            _ => {}
        }
        if self.parallelism == Some(0) {
            return Err(PipelineError::Config("parallelism must be at least 1".into()));
        }
        self.ga.validate()?;
        self.constraints.validate()?;
        self.weights.validate()?;
        crate::fitness::validate_objectives(&self.objectives)?;
        Ok(())
    }

    /// Loads or synthesizes the system named by the configuration.
    pub fn resolve_system(&self) -> Result<SystemModel, PipelineError> {
        self.validate()?;
        match (&self.topology, &self.synth) {
            (Some(path), None) => Ok(load_topology(path)?),
            (None, Some(spec)) => Ok(synth_system(spec)?),
            _ => unreachable!("validated"),
        }
    }
}

/// One Pareto solution as stored in a result document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionRecord {
    pub index: usize,
    pub chromosome: String,
    /// F3 in its maximized form.
    pub objectives: ObjectiveVector,
    pub n_sg: usize,
    pub sizes: Vec<usize>,
    pub clusters: Vec<Vec<String>>,
    pub violation: ConstraintViolation,
    pub rank: usize,
    /// `None` for boundary solutions (infinite crowding).
    pub crowding: Option<f64>,
}

/// Outcome of one utility's run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub utility: String,
    /// 1-based position in the system; selects the address block.
    pub utility_index: usize,
    pub graph: UtilityDoc,
    pub objectives: Vec<Objective>,
    pub ga: GaParams,
    pub constraints: ConstraintParams,
    pub weights: Weights,
    pub feasible: bool,
    pub evaluations: usize,
    pub generations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
    pub solutions: Vec<SolutionRecord>,
}

impl ResultDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let doc: Self = serde_json::from_str(text)?;
        doc.check()?;
        Ok(doc)
    }

    /// Structural checks beyond the schema.
    pub fn check(&self) -> Result<(), PipelineError> {
        let graph = self.graph.to_graph()?;
        if graph.id() != self.utility {
            return Err(PipelineError::Result(format!("graph id `{}` differs from utility", graph.id())));
        }
        for (i, s) in self.solutions.iter().enumerate() {
            if s.index != i {
                return Err(PipelineError::Result(format!("solution {i} carries index {}", s.index)));
            }
            let c = Chromosome::parse(&s.chromosome)
                .filter(|c| c.len() == graph.edge_count())
                .ok_or_else(|| PipelineError::Result(format!("solution {i} has a malformed chromosome")))?;
            let clustering = decompose(&graph, &c).map_err(topo_err(&self.utility))?;
            if clustering.member_ids(&graph) != s.clusters {
                return Err(PipelineError::Result(format!("solution {i} clusters disagree with its chromosome")));
            }
        }
        Ok(())
    }

    pub fn file_name(&self) -> String {
        format!("{}.result.json", self.utility)
    }
}

fn topo_err(utility: &str) -> impl FnOnce(TopologyError) -> SystemError + '_ {
    move |source| SystemError::Utility { utility: utility.to_string(), source }
}

/// Runs one utility of `system` (0-based `index`).
pub fn optimize_utility(
    system: &SystemModel,
    lodf: &crate::grid::LodfTable,
    index: usize,
    config: &RunConfig,
) -> Result<ResultDocument, PipelineError> {
    let graph = system.utilities[index].clone();
    let problem = UtilityProblem::new(
        graph.clone(),
        lodf,
        config.weights,
        config.constraints,
        config.objectives.clone(),
    )?;
    let params = GaParams { seed: config.ga.seed.wrapping_add(index as u64), ..config.ga.clone() };
    let front = nsga2::run(&problem, &params)?;
    let mut solutions = Vec::with_capacity(front.members.len());
    for (i, m) in front.members.iter().enumerate() {
        let e = problem.evaluate_full(&m.chromosome)?;
        solutions.push(SolutionRecord {
            index: i,
            chromosome: m.chromosome.to_string(),
            objectives: e.objectives,
            n_sg: e.clustering.n_sg(),
            sizes: e.clustering.sizes(),
            clusters: e.clustering.member_ids(&graph),
            violation: e.violation,
            rank: m.rank,
            crowding: m.crowding.is_finite().then_some(m.crowding),
        });
    }
    Ok(ResultDocument {
        utility: graph.id().to_string(),
        utility_index: index + 1,
        graph: UtilityDoc::from_graph(&graph),
        objectives: config.objectives.clone(),
        ga: config.ga.clone(),
        constraints: config.constraints,
        weights: config.weights,
        feasible: front.feasible,
        evaluations: front.evaluations,
        generations: front.generations,
        wall_time_ms: config.record_timing.then_some(front.wall_time.as_millis() as u64),
        solutions,
    })
}

/// Runs every utility, at most `config.parallelism` at a time. Results keep
/// the system's utility order.
pub fn optimize_system(system: &SystemModel, config: &RunConfig) -> Result<Vec<ResultDocument>, PipelineError> {
    config.ga.validate()?;
    config.constraints.validate()?;
    let lodf = system.lodf()?;
    let job = || {
        (0..system.utilities.len())
            .into_par_iter()
            .map(|i| optimize_utility(system, &lodf, i, config))
            .collect::<Result<Vec<_>, _>>()
    };
    match config.parallelism {
        Some(p) => rayon::ThreadPoolBuilder::new()
            .num_threads(p)
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?
            .install(job),
        None => job(),
    }
}

pub fn write_results(dir: &Path, docs: &[ResultDocument]) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    docs.iter()
        .map(|d| {
            let path = dir.join(d.file_name());
            fs::write(&path, d.to_json()).map_err(io_err(&path))?;
            Ok(path)
        })
        .collect()
}

pub fn read_result(path: &Path) -> Result<ResultDocument, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ResultDocument::from_json(&text)
}

/// Rendered configurations of one solution plus their manifest and audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitOutput {
    pub manifest: Manifest,
    pub audit: AuditReport,
    /// (file name, configuration text) in manifest order.
    pub files: Vec<(String, String)>,
}

/// Emits the configurations of the solution chosen by `picker`.
pub fn emit_solution(doc: &ResultDocument, picker: &Picker, flows: &FlowTable) -> Result<EmitOutput, PipelineError> {
    let k = pick(&doc.solutions, picker)?;
    let graph = doc.graph.to_graph()?;
    let chromosome = Chromosome::parse(&doc.solutions[k].chromosome)
        .filter(|c| c.len() == graph.edge_count())
        .ok_or_else(|| PipelineError::Result(format!("solution {k} has a malformed chromosome")))?;
    let clustering = decompose(&graph, &chromosome).map_err(topo_err(&doc.utility))?;
    let configs = emit_utility(&graph, &clustering, &Addressing::new(doc.utility_index)?, flows)?;
    let audit = audit_counts(&configs, &clustering)?;
    let mut devices = Vec::with_capacity(configs.len());
    let mut files = Vec::with_capacity(configs.len());
    for c in &configs {
        let file = config_file_name(&doc.utility, c);
        files.push((file.clone(), render_config_text(c)?));
        devices.push(ManifestEntry { device: c.device_name.clone(), role: c.role, cluster: c.cluster, file });
    }
    Ok(EmitOutput { manifest: Manifest { utility: doc.utility.clone(), solution: k, devices }, audit, files })
}

/// Writes configuration files, `manifest.json` and `audit.json` to `dir`.
pub fn write_emit(dir: &Path, out: &EmitOutput) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (name, text) in &out.files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    for (name, json) in [
        ("manifest.json", serde_json::to_string_pretty(&out.manifest)?),
        ("audit.json", serde_json::to_string_pretty(&out.audit)?),
    ] {
        let path = dir.join(name);
        fs::write(&path, json + "\n").map_err(io_err(&path))?;
    }
    Ok(())
}
