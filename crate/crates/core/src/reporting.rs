//! Multi-run statistics: distributions, solution pickers, baseline
//! comparisons and the CSV/JSON report files.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{ResultDocument, SolutionRecord};
use crate::topology::UtilityGraph;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("histogram needs at least two strictly increasing edges")]
    BadEdges,
    #[error("no result document for utility `{0}`")]
    MissingFront(String),
    #[error("front is empty")]
    EmptyFront,
    #[error("solution {index} does not exist; the front has {len}")]
    NoSuchSolution { index: usize, len: usize },
    #[error("unknown solution selector `{0}`")]
    UnknownPicker(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// `counts[i]` covers `[edges[i], edges[i + 1])`.
    pub counts: Vec<usize>,
    pub underflow: usize,
    pub overflow: usize,
}

pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Histogram, ReportError> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ReportError::BadEdges);
    }
    let mut h = Histogram { edges: edges.to_vec(), counts: vec![0; edges.len() - 1], underflow: 0, overflow: 0 };
    for &v in values {
        if v < edges[0] {
            h.underflow += 1;
        } else if v >= edges[edges.len() - 1] || v.is_nan() {
            h.overflow += 1;
        } else {
            // last edge <= v is the bin
            let bin = edges.partition_point(|&e| e <= v) - 1;
            h.counts[bin] += 1;
        }
    }
    Ok(h)
}

/// Rule that picks one solution of a front.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Picker {
    /// Largest finite crowding distance; the first solution if none is finite.
    #[default]
    Knee,
    /// Smallest `F1 + F2`.
    MinCost,
    /// Largest F3.
    MaxResilience,
    Index(usize),
}

impl FromStr for Picker {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "knee" => Ok(Picker::Knee),
            "min-cost" => Ok(Picker::MinCost),
            "max-resilience" => Ok(Picker::MaxResilience),
            other => other.parse().map(Picker::Index).map_err(|_| ReportError::UnknownPicker(other.into())),
        }
    }
}

impl fmt::Display for Picker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Picker::Knee => f.write_str("knee"),
            Picker::MinCost => f.write_str("min-cost"),
            Picker::MaxResilience => f.write_str("max-resilience"),
            Picker::Index(k) => write!(f, "{k}"),
        }
    }
}

/// Index of the solution chosen by `picker`; ties go to the lowest index.
pub fn pick(solutions: &[SolutionRecord], picker: &Picker) -> Result<usize, ReportError> {
    if solutions.is_empty() {
        return Err(ReportError::EmptyFront);
    }
    let best_by = |key: &dyn Fn(&SolutionRecord) -> f64| {
        let mut best = 0;
        for (i, s) in solutions.iter().enumerate().skip(1) {
            if key(s) < key(&solutions[best]) {
                best = i;
            }
        }
        best
    };
    Ok(match picker {
        Picker::Knee => {
            let finite = solutions.iter().enumerate().filter_map(|(i, s)| s.crowding.map(|c| (i, c)));
            finite.fold(None, |acc: Option<(usize, f64)>, (i, c)| match acc {
                Some((_, b)) if b >= c => acc,
                _ => Some((i, c)),
            })
            .map_or(0, |(i, _)| i)
        }
        Picker::MinCost => best_by(&|s| f64::from(s.objectives.fs_metric())),
        Picker::MaxResilience => best_by(&|s| -s.objectives.f3),
        Picker::Index(k) => {
            if *k >= solutions.len() {
                return Err(ReportError::NoSuchSolution { index: *k, len: solutions.len() });
            }
            *k
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub index: usize,
    pub n_sg: usize,
    pub f1: u32,
    pub f2: u32,
    pub f3: f64,
    pub f4: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub utility: String,
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub computation_time_ms: Option<u64>,
    pub feasible: bool,
    pub solutions: Vec<SolutionSummary>,
}

impl RunSummary {
    pub fn from_result(doc: &ResultDocument) -> Self {
        Self {
            utility: doc.utility.clone(),
            graph_nodes: doc.graph.nodes.len(),
            graph_edges: doc.graph.edges.len(),
            computation_time_ms: doc.wall_time_ms,
            feasible: doc.feasible,
            solutions: doc
                .solutions
                .iter()
                .map(|s| SolutionSummary {
                    index: s.index,
                    n_sg: s.n_sg,
                    f1: s.objectives.f1,
                    f2: s.objectives.f2,
                    f3: s.objectives.f3,
                    f4: s.objectives.f4,
                    feasible: s.violation.is_feasible(),
                })
                .collect(),
        }
    }
}

/// The distribution dimensions tracked across runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    GraphSize,
    ComputationTime,
    SolutionCount,
    NSg,
    F1,
    F2,
    F3,
    F4,
}

impl Dimension {
    pub const ALL: [Dimension; 8] = [
        Dimension::GraphSize,
        Dimension::ComputationTime,
        Dimension::SolutionCount,
        Dimension::NSg,
        Dimension::F1,
        Dimension::F2,
        Dimension::F3,
        Dimension::F4,
    ];

    /// Per-run dimensions yield one value per summary; the others one per
    /// solution. Runs without recorded time are skipped.
    pub fn values(&self, summaries: &[RunSummary]) -> Vec<f64> {
        let per_solution = |f: fn(&SolutionSummary) -> f64| {
            summaries.iter().flat_map(|r| r.solutions.iter().map(f)).collect()
        };
        match self {
            Dimension::GraphSize => summaries.iter().map(|r| r.graph_nodes as f64).collect(),
            Dimension::ComputationTime => {
                summaries.iter().filter_map(|r| r.computation_time_ms.map(|t| t as f64)).collect()
            }
            Dimension::SolutionCount => summaries.iter().map(|r| r.solutions.len() as f64).collect(),
            Dimension::NSg => per_solution(|s| s.n_sg as f64),
            Dimension::F1 => per_solution(|s| f64::from(s.f1)),
            Dimension::F2 => per_solution(|s| f64::from(s.f2)),
            Dimension::F3 => per_solution(|s| s.f3),
            Dimension::F4 => per_solution(|s| s.f4),
        }
    }
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// fewer than two pairs or either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub picker: Picker,
    pub star_f1: u64,
    pub star_f2: u64,
    pub hybrid_unclustered_f1: u64,
    pub hybrid_unclustered_f2: u64,
    pub clustered_f1: u64,
    pub clustered_f2: u64,
    /// `(base - clustered) / base` in percent.
    pub f1_reduction_vs_star_pct: f64,
    pub f2_reduction_vs_star_pct: f64,
    pub f1_reduction_vs_hybrid_pct: f64,
    pub f2_reduction_vs_hybrid_pct: f64,
}

fn reduction(base: u64, new: u64) -> f64 {
    if base == 0 {
        0.0
    } else {
        (base as f64 - new as f64) / base as f64 * 100.0
    }
}

/// Compares the picked solutions against two unclustered designs: a star
/// (one firewall per substation) and the hybrid graph with one firewall per
/// substation link, i.e. as many firewalls as the substation's degree. ACLs
/// of both baselines follow `8 * F1 + 5` per utility.
pub fn compare_baselines(
    utilities: &[UtilityGraph],
    docs: &[ResultDocument],
    picker: &Picker,
) -> Result<BaselineComparison, ReportError> {
    let mut c = BaselineComparison {
        picker: *picker,
        star_f1: 0,
        star_f2: 0,
        hybrid_unclustered_f1: 0,
        hybrid_unclustered_f2: 0,
        clustered_f1: 0,
        clustered_f2: 0,
        f1_reduction_vs_star_pct: 0.0,
        f2_reduction_vs_star_pct: 0.0,
        f1_reduction_vs_hybrid_pct: 0.0,
        f2_reduction_vs_hybrid_pct: 0.0,
    };
    for g in utilities {
        let doc = docs.iter().find(|d| d.utility == g.id()).ok_or_else(|| ReportError::MissingFront(g.id().into()))?;
        let star = g.substations().count() as u64;
        let hybrid: u64 = g.substations().map(|v| g.degree(v) as u64).sum();
        c.star_f1 += star;
        c.star_f2 += 8 * star + 5;
        c.hybrid_unclustered_f1 += hybrid;
        c.hybrid_unclustered_f2 += 8 * hybrid + 5;
        let s = &doc.solutions[pick(&doc.solutions, picker)?];
        c.clustered_f1 += u64::from(s.objectives.f1);
        c.clustered_f2 += u64::from(s.objectives.f2);
    }
    c.f1_reduction_vs_star_pct = reduction(c.star_f1, c.clustered_f1);
    c.f2_reduction_vs_star_pct = reduction(c.star_f2, c.clustered_f2);
    c.f1_reduction_vs_hybrid_pct = reduction(c.hybrid_unclustered_f1, c.clustered_f1);
    c.f2_reduction_vs_hybrid_pct = reduction(c.hybrid_unclustered_f2, c.clustered_f2);
    Ok(c)
}

const CSV_HEADER: [&str; 12] = [
    "utility",
    "graph_nodes",
    "graph_edges",
    "computation_time_ms",
    "run_feasible",
    "solution",
    "n_sg",
    "f1",
    "f2",
    "f3",
    "f4",
    "feasible",
];

/// One row per utility and solution.
pub fn report_csv(summaries: &[RunSummary]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in summaries {
        let time = r.computation_time_ms.map(|t| t.to_string()).unwrap_or_default();
        for s in &r.solutions {
            w.write_record([
                r.utility.clone(),
                r.graph_nodes.to_string(),
                r.graph_edges.to_string(),
                time.clone(),
                r.feasible.to_string(),
                s.index.to_string(),
                s.n_sg.to_string(),
                s.f1.to_string(),
                s.f2.to_string(),
                s.f3.to_string(),
                s.f4.to_string(),
                s.feasible.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: Vec<RunSummary>,
    pub baselines: Option<BaselineComparison>,
}

impl Report {
    pub fn from_results(
        docs: &[ResultDocument],
        picker: &Picker,
    ) -> Result<Self, ReportError> {
        let runs = docs.iter().map(RunSummary::from_result).collect();
        let graphs: Vec<UtilityGraph> = docs.iter().filter_map(|d| d.graph.to_graph().ok()).collect();
        let baselines = if docs.is_empty() { None } else { Some(compare_baselines(&graphs, docs, picker)?) };
        Ok(Self { runs, baselines })
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<String, ReportError> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Writes `report.csv`, `report.json` and (when present) `baselines.json`.
pub fn write_report(dir: &Path, report: &Report) -> Result<(), ReportError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ReportError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files = vec![("report.csv", report_csv(&report.runs)?), ("report.json", pretty(report)?)];
    if let Some(b) = &report.baselines {
        files.push(("baselines.json", pretty(b)?));
    }
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io(&path))?;
    }
    Ok(())
}
