//! Objectives and constraints of the zoning problem.
//!
//! Firewall and ACL counts follow the closed-form rules realized by
//! [`crate::fwgen`]: a substation firewall per substation in the UCC
//! subgraph, one firewall per detached subgraph, six rules per substation
//! firewall and `2` per protected target plus `5` fixed rules at the UCC.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{nlodf, ps_metric, GridError, LodfTable, Weights};
use crate::nsga2::{Fitness, Problem};
use crate::topology::{decompose, Chromosome, Clustering, TopologyError, UtilityGraph};

#[derive(Debug, Error, PartialEq)]
pub enum FitnessError {
    #[error("clustering has {0} UCC subgraphs; exactly one is required")]
    UccSubgraphs(usize),
    #[error("invalid constraint parameters: {0}")]
    BadConstraints(String),
    #[error("objective list must name 2 to 4 distinct objectives")]
    BadObjectives,
    #[error("unknown objective `{0}`")]
    UnknownObjective(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Objective {
    F1,
    F2,
    F3,
    F4,
}

impl Objective {
    pub const ALL: [Objective; 4] = [Objective::F1, Objective::F2, Objective::F3, Objective::F4];
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Objective::F1 => "F1",
            Objective::F2 => "F2",
            Objective::F3 => "F3",
            Objective::F4 => "F4",
        };
        f.write_str(s)
    }
}

impl FromStr for Objective {
    type Err = FitnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F1" => Ok(Objective::F1),
            "F2" => Ok(Objective::F2),
            "F3" => Ok(Objective::F3),
            "F4" => Ok(Objective::F4),
            other => Err(FitnessError::UnknownObjective(other.to_string())),
        }
    }
}

/// Checks an objective subset: 2 to 4 distinct entries.
pub fn validate_objectives(objectives: &[Objective]) -> Result<(), FitnessError> {
    let mut sorted = objectives.to_vec();
    sorted.sort();
    sorted.dedup();
    if !(2..=4).contains(&objectives.len()) || sorted.len() != objectives.len() {
        return Err(FitnessError::BadObjectives);
    }
    Ok(())
}

/// Firewall count, ACL count, physical security (maximized) and
/// cluster-aggregated NLODF (minimized).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: u32,
    pub f2: u32,
    pub f3: f64,
    pub f4: f64,
}

impl ObjectiveVector {
    /// Value of one objective in minimization form (F3 negated).
    pub fn minimized(&self, objective: Objective) -> f64 {
        match objective {
            Objective::F1 => self.f1 as f64,
            Objective::F2 => self.f2 as f64,
            Objective::F3 => -self.f3,
            Objective::F4 => self.f4,
        }
    }

    pub fn minimization_form(&self, objectives: &[Objective]) -> Vec<f64> {
        objectives.iter().map(|&o| self.minimized(o)).collect()
    }

    /// Combined firewall-resource metric `F1 + F2`.
    pub fn fs_metric(&self) -> u32 {
        self.f1 + self.f2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintParams {
    pub p_min: usize,
    pub p_max: usize,
    pub n_p_min: usize,
}

impl Default for ConstraintParams {
    fn default() -> Self {
        Self { p_min: 2, p_max: 40, n_p_min: 1 }
    }
}

impl ConstraintParams {
    pub fn new(p_min: usize, p_max: usize, n_p_min: usize) -> Result<Self, FitnessError> {
        let p = Self { p_min, p_max, n_p_min };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), FitnessError> {
        if self.p_min < 1 || self.p_min > self.p_max {
            return Err(FitnessError::BadConstraints(format!(
                "need 1 <= p_min <= p_max, got p_min={} p_max={}",
                self.p_min, self.p_max
            )));
        }
        if self.n_p_min < 1 {
            return Err(FitnessError::BadConstraints("n_p_min must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    /// Cluster count outside `[p_min, p_max]`.
    pub g1: f64,
    /// Shortfall below `n_p_min`, summed over clusters.
    pub g2: f64,
    /// Detached clusters with no node originally adjacent to the UCC.
    pub g3: f64,
    pub total: f64,
}

impl ConstraintViolation {
    pub fn new(g1: f64, g2: f64, g3: f64) -> Self {
        Self { g1, g2, g3, total: g1 + g2 + g3 }
    }

    pub fn is_feasible(&self) -> bool {
        self.total == 0.0
    }
}

fn ucc_block(clustering: &Clustering) -> Result<(&[Vec<usize>], &[Vec<usize>]), FitnessError> {
    if clustering.m_u != 1 {
        return Err(FitnessError::UccSubgraphs(clustering.m_u));
    }
    Ok(clustering.subgraphs.split_at(clustering.m_u))
}

/// `Σ_{UCC subgraphs} (N_x − 1) + Σ_{detached} 1`.
pub fn count_firewalls(clustering: &Clustering) -> Result<u32, FitnessError> {
    let (ucc, detached) = ucc_block(clustering)?;
    let inner: usize = ucc.iter().map(|c| c.len() - 1).sum();
    Ok((inner + detached.len()) as u32)
}

/// Substation-side plus UCC-side access-list entries.
pub fn count_acls(clustering: &Clustering) -> Result<u32, FitnessError> {
    let (ucc, detached) = ucc_block(clustering)?;
    let inner: usize = ucc.iter().map(|c| c.len() - 1).sum();
    let acl_sub = 6 * inner + 6 * detached.len();
    let acl_ucc = 2 * inner + 5 + 2 * detached.len();
    Ok((acl_sub + acl_ucc) as u32)
}

/// Sum over clusters of the physical security metric of the cluster's
/// pooled device counts.
pub fn f3_security(
    clustering: &Clustering,
    graph: &UtilityGraph,
    weights: &Weights,
) -> Result<f64, FitnessError> {
    let mut terms = Vec::with_capacity(clustering.n_sg());
    for members in &clustering.subgraphs {
        let counts = members.iter().filter_map(|&v| graph.profile(v).copied()).sum();
        terms.push(ps_metric(&counts, weights)?);
    }
    // summation order independent of cluster order
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum())
}

/// The lines of one utility whose two endpoint substations both belong to
/// the utility graph, with a dense copy of their pairwise factors.
#[derive(Clone, Debug, PartialEq)]
pub struct LodfView {
    // (node a, node b) per local line
    ends: Vec<(usize, usize)>,
    factors: Vec<Option<f64>>,
}

impl LodfView {
    pub fn new(graph: &UtilityGraph, table: &LodfTable) -> Self {
        let mut ends = Vec::new();
        let mut global = Vec::new();
        for (k, (a, b)) in table.endpoints().iter().enumerate() {
            if let (Some(a), Some(b)) = (graph.index_of(a), graph.index_of(b)) {
                ends.push((a, b));
                global.push(k);
            }
        }
        let n = global.len();
        let mut factors = vec![None; n * n];
        for (i, &l) in global.iter().enumerate() {
            for (j, &k) in global.iter().enumerate() {
                factors[i * n + j] = table.get(l, k);
            }
        }
        Self { ends, factors }
    }

    pub fn line_count(&self) -> usize {
        self.ends.len()
    }

    /// Absolute factors over ordered pairs of distinct lines drawn from `lines`.
    fn magnitudes(&self, lines: &[usize]) -> Vec<f64> {
        let n = self.ends.len();
        let mut out = Vec::with_capacity(lines.len() * lines.len());
        for &l in lines {
            for &k in lines {
                if let Some(v) = self.factors[l * n + k] {
                    out.push(v.abs());
                }
            }
        }
        out
    }
}

/// Mean NLODF over clusters holding at least two internal lines; a line is
/// internal when both of its substations sit in the cluster.
pub fn f4_lodf(clustering: &Clustering, graph: &UtilityGraph, view: &LodfView) -> f64 {
    let labels = clustering.labels(graph.node_count());
    let mut per_cluster = vec![Vec::new(); clustering.n_sg()];
    for (i, &(a, b)) in view.ends.iter().enumerate() {
        if labels[a] == labels[b] {
            per_cluster[labels[a]].push(i);
        }
    }
    let mut sum = 0.0;
    let mut qualifying = 0usize;
    for lines in per_cluster.iter().filter(|l| l.len() >= 2) {
        let mags = view.magnitudes(lines);
        if let Ok(v) = nlodf(&mags) {
            sum += v;
            qualifying += 1;
        }
    }
    if qualifying == 0 {
        0.0
    } else {
        sum / qualifying as f64
    }
}

/// Constraint violations of a clustering.
pub fn violations(
    clustering: &Clustering,
    graph: &UtilityGraph,
    params: &ConstraintParams,
) -> ConstraintViolation {
    let n_sg = clustering.n_sg();
    let g1 = params.p_min.saturating_sub(n_sg) + n_sg.saturating_sub(params.p_max);
    let g2: usize = clustering.subgraphs.iter().map(|c| params.n_p_min.saturating_sub(c.len())).sum();
    let g3 = clustering.subgraphs[clustering.m_u..]
        .iter()
        .filter(|c| !c.iter().any(|&v| graph.is_ucc_neighbor(v)))
        .count();
    ConstraintViolation::new(g1 as f64, g2 as f64, g3 as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub clustering: Clustering,
    pub objectives: ObjectiveVector,
    pub violation: ConstraintViolation,
}

pub fn evaluate(
    graph: &UtilityGraph,
    chromosome: &Chromosome,
    weights: &Weights,
    lodf: &LodfView,
    params: &ConstraintParams,
) -> Result<Evaluation, FitnessError> {
    let clustering = decompose(graph, chromosome)?;
    let objectives = ObjectiveVector {
        f1: count_firewalls(&clustering)?,
        f2: count_acls(&clustering)?,
        f3: f3_security(&clustering, graph, weights)?,
        f4: f4_lodf(&clustering, graph, lodf),
    };
    let violation = violations(&clustering, graph, params);
    Ok(Evaluation { clustering, objectives, violation })
}

/// One utility's zoning problem, ready for the genetic engine.
#[derive(Clone, Debug)]
pub struct UtilityProblem {
    pub graph: UtilityGraph,
    pub lodf: LodfView,
    pub weights: Weights,
    pub params: ConstraintParams,
    pub objectives: Vec<Objective>,
}

impl UtilityProblem {
    pub fn new(
        graph: UtilityGraph,
        lodf: &LodfTable,
        weights: Weights,
        params: ConstraintParams,
        objectives: Vec<Objective>,
    ) -> Result<Self, FitnessError> {
        weights.validate()?;
        params.validate()?;
        validate_objectives(&objectives)?;
        let lodf = LodfView::new(&graph, lodf);
        Ok(Self { graph, lodf, weights, params, objectives })
    }

    pub fn evaluate_full(&self, chromosome: &Chromosome) -> Result<Evaluation, FitnessError> {
        evaluate(&self.graph, chromosome, &self.weights, &self.lodf, &self.params)
    }
}

impl Problem for UtilityProblem {
    fn chromosome_len(&self) -> usize {
        self.graph.edge_count()
    }

    fn objective_count(&self) -> usize {
        self.objectives.len()
    }

    fn evaluate(&self, chromosome: &Chromosome) -> Fitness {
        let e = self.evaluate_full(chromosome).expect("chromosome length matches graph");
        Fitness {
            objectives: e.objectives.minimization_form(&self.objectives),
            violation: e.violation.total,
        }
    }
}
