//! Multi-utility system model: the JSON topology document, its validation,
//! and seeded synthesis of complete systems.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{compute_lodf, Bus, GridError, GridModel, LodfTable, Line};
use crate::topology::{
    synth_hybrid, synth_star, Node, NodeKind, SubstationProfile, TopologyError, UtilityGraph,
};

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("topology document does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("utility `{utility}`: {source}")]
    Utility { utility: String, source: TopologyError },
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("line `{line}` references unknown substation `{substation}`")]
    UnknownSubstation { line: String, substation: String },
    #[error("system has no utilities")]
    NoUtilities,
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityDoc {
    pub id: String,
    pub ucc_id: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<(String, String)>,
}

impl UtilityDoc {
    pub fn from_graph(graph: &UtilityGraph) -> Self {
        Self {
            id: graph.id().to_string(),
            ucc_id: graph.ucc_id().to_string(),
            nodes: graph.nodes().to_vec(),
            edges: graph.edge_pairs(),
        }
    }

    pub fn to_graph(&self) -> Result<UtilityGraph, SystemError> {
        let wrap = |source| SystemError::Utility { utility: self.id.clone(), source };
        let graph = UtilityGraph::new(self.id.clone(), self.nodes.clone(), &self.edges).map_err(wrap)?;
        if graph.ucc_id() != self.ucc_id {
            return Err(wrap(TopologyError::UccMismatch {
                utility: self.id.clone(),
                ucc_id: self.ucc_id.clone(),
            }));
        }
        Ok(graph)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    /// Precomputed factors: monitored line -> outaged line -> value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lodf_overrides: Option<BTreeMap<String, BTreeMap<String, f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDocument {
    pub utilities: Vec<UtilityDoc>,
    pub grid: GridDoc,
}

/// Validated utilities plus the shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel {
    pub utilities: Vec<UtilityGraph>,
    pub grid: GridModel,
    pub lodf_overrides: Option<BTreeMap<String, BTreeMap<String, f64>>>,
}

impl SystemModel {
    pub fn from_document(doc: &TopologyDocument) -> Result<Self, SystemError> {
        if doc.utilities.is_empty() {
            return Err(SystemError::NoUtilities);
        }
        let mut ids = HashSet::new();
        let mut substations = HashSet::new();
        let mut utilities = Vec::with_capacity(doc.utilities.len());
        for u in &doc.utilities {
            if !ids.insert(u.id.clone()) {
                return Err(SystemError::DuplicateId(u.id.clone()));
            }
            let graph = u.to_graph()?;
            for n in graph.nodes() {
                if !ids.insert(n.id.clone()) {
                    return Err(SystemError::DuplicateId(n.id.clone()));
                }
                if n.kind == NodeKind::Substation {
                    substations.insert(n.id.clone());
                }
            }
            utilities.push(graph);
        }
        for l in &doc.grid.lines {
            for s in [&l.from_sub, &l.to_sub] {
                if !substations.contains(s) {
                    return Err(SystemError::UnknownSubstation {
                        line: l.id.clone(),
                        substation: s.clone(),
                    });
                }
            }
        }
        let grid = GridModel::new(doc.grid.buses.clone(), doc.grid.lines.clone())?;
        Ok(Self { utilities, grid, lodf_overrides: doc.grid.lodf_overrides.clone() })
    }

    pub fn to_document(&self) -> TopologyDocument {
        TopologyDocument {
            utilities: self.utilities.iter().map(UtilityDoc::from_graph).collect(),
            grid: GridDoc {
                buses: self.grid.buses().to_vec(),
                lines: self.grid.lines().to_vec(),
                lodf_overrides: self.lodf_overrides.clone(),
            },
        }
    }

    /// Overrides when supplied, otherwise the DC computation.
    pub fn lodf(&self) -> Result<LodfTable, GridError> {
        match &self.lodf_overrides {
            Some(o) => LodfTable::from_overrides(&self.grid, o),
            None => compute_lodf(&self.grid),
        }
    }
}

pub fn load_topology_str(text: &str) -> Result<SystemModel, SystemError> {
    let doc: TopologyDocument = serde_json::from_str(text)?;
    SystemModel::from_document(&doc)
}

pub fn load_topology(path: &Path) -> Result<SystemModel, SystemError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SystemError::Io { path: path.display().to_string(), source })?;
    load_topology_str(&text)
}

pub fn topology_to_json(system: &SystemModel) -> String {
    let mut s = serde_json::to_string_pretty(&system.to_document()).expect("serializable");
    s.push('\n');
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyShape {
    Star,
    Hybrid,
}

/// Parameters for a seeded synthetic system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub utilities: usize,
    pub subs: usize,
    pub topology: TopologyShape,
    #[serde(default)]
    pub edge_prob: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Builds `utilities` utilities of `subs` substations each, with random
/// device profiles and a grid of one bus per substation. Each utility's
/// buses form a ring with random chords; neighbouring utilities are tied by
/// two lines, so no single outage islands the grid when `subs >= 2`.
pub fn synth_system(spec: &SynthSpec) -> Result<SystemModel, SystemError> {
    if spec.utilities == 0 {
        return Err(SystemError::NoUtilities);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut utilities = Vec::with_capacity(spec.utilities);
    for u in 1..=spec.utilities {
        let uid = format!("U{u:02}");
        let wrap = |source| SystemError::Utility { utility: uid.clone(), source };
        let base = match spec.topology {
            TopologyShape::Star => synth_star(spec.subs),
            TopologyShape::Hybrid => synth_hybrid(spec.subs, spec.edge_prob, rng.gen()),
        }
        .map_err(wrap)?;
        let nodes = base
            .nodes()
            .iter()
            .map(|n| Node {
                id: format!("{uid}_{}", n.id),
                kind: n.kind,
                profile: n.profile.map(|_| random_profile(&mut rng)),
            })
            .collect();
        let edges: Vec<(String, String)> = base
            .edge_pairs()
            .into_iter()
            .map(|(a, b)| (format!("{uid}_{a}"), format!("{uid}_{b}")))
            .collect();
        utilities.push(UtilityGraph::new(uid.clone(), nodes, &edges).map_err(wrap)?);
    }

    let mut buses = Vec::new();
    let mut lines = Vec::new();
    let mut bus_of = HashMap::new();
    let mut subs_by_utility = Vec::new();
    for g in &utilities {
        let subs: Vec<String> = g.substations().map(|v| g.nodes()[v].id.clone()).collect();
        for s in &subs {
            let bus = format!("B_{s}");
            bus_of.insert(s.clone(), bus.clone());
            buses.push(Bus { id: bus, slack: buses.is_empty() });
        }
        subs_by_utility.push(subs);
    }
    let mut add_line = |a: &String, b: &String, rng: &mut ChaCha8Rng| {
        lines.push(Line {
            id: format!("L{:04}", lines.len() + 1),
            from: bus_of[a].clone(),
            to: bus_of[b].clone(),
            x: Some(round4(rng.gen_range(0.05..0.5))),
            from_sub: a.clone(),
            to_sub: b.clone(),
        });
    };
    for subs in &subs_by_utility {
        let n = subs.len();
        if n == 2 {
            add_line(&subs[0], &subs[1], &mut rng);
            add_line(&subs[0], &subs[1], &mut rng);
        } else if n >= 3 {
            for i in 0..n {
                add_line(&subs[i], &subs[(i + 1) % n], &mut rng);
            }
            for i in 0..n {
                for j in (i + 2)..n {
                    if (i, j) != (0, n - 1) && rng.gen_bool(0.1) {
                        add_line(&subs[i], &subs[j], &mut rng);
                    }
                }
            }
        }
    }
    for pair in subs_by_utility.windows(2) {
        for _ in 0..2 {
            let a = &pair[0][rng.gen_range(0..pair[0].len())];
            let b = &pair[1][rng.gen_range(0..pair[1].len())];
            add_line(a, b, &mut rng);
        }
    }
    let grid = GridModel::new(buses, lines)?;
    Ok(SystemModel { utilities, grid, lodf_overrides: None })
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn random_profile<R: Rng>(rng: &mut R) -> SubstationProfile {
    SubstationProfile::new(
        rng.gen_range(2..=8),
        rng.gen_range(1..=6),
        rng.gen_range(0..=4),
        rng.gen_range(0..=3),
    )
}
