//! DC grid model, line outage distribution factors and the physical metrics
//! built on them.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::SubstationProfile;

/// Below this `1 - PTDF[k,k]` the outage of `k` islands the network.
pub const ISLANDING_TOL: f64 = 1e-9;

/// Returned by [`nlodf`] when the magnitudes have zero spread.
pub const NLODF_SENTINEL: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid has no buses")]
    NoBuses,
    #[error("expected exactly one slack bus, found {0}")]
    SlackCount(usize),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("line `{line}` references unknown bus `{bus}`")]
    UnknownBus { line: String, bus: String },
    #[error("line `{0}` has non-positive reactance")]
    BadReactance(String),
    #[error("line `{0}` has no reactance")]
    MissingReactance(String),
    #[error("line `{0}` connects a bus to itself")]
    SelfLoop(String),
    #[error("grid is disconnected")]
    Disconnected,
    #[error("susceptance matrix is singular")]
    Singular,
    #[error("outage of line `{line}` islands the grid; its factors are unavailable")]
    Islanding { line: String },
    #[error("unknown line `{0}`")]
    UnknownLine(String),
    #[error("a line has no outage factor with respect to itself")]
    SameLine,
    #[error("factor list is empty")]
    EmptyFactors,
    #[error("weight `{0}` must be strictly positive")]
    BadWeight(&'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    #[serde(default)]
    pub slack: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Series reactance in per-unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    pub from_sub: String,
    pub to_sub: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridModel {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    slack: usize,
    // (from, to) bus indices per line
    terminals: Vec<(usize, usize)>,
}

impl GridModel {
    pub fn new(buses: Vec<Bus>, lines: Vec<Line>) -> Result<Self, GridError> {
        if buses.is_empty() {
            return Err(GridError::NoBuses);
        }
        let mut index = HashMap::new();
        for (i, b) in buses.iter().enumerate() {
            if index.insert(b.id.as_str(), i).is_some() {
                return Err(GridError::DuplicateId(b.id.clone()));
            }
        }
        let slacks: Vec<usize> = (0..buses.len()).filter(|&i| buses[i].slack).collect();
        if slacks.len() != 1 {
            return Err(GridError::SlackCount(slacks.len()));
        }
        let mut line_ids = HashSet::new();
        let mut terminals = Vec::with_capacity(lines.len());
        for l in &lines {
            if !line_ids.insert(l.id.as_str()) {
                return Err(GridError::DuplicateId(l.id.clone()));
            }
            let lookup = |bus: &String| {
                index.get(bus.as_str()).copied().ok_or_else(|| GridError::UnknownBus {
                    line: l.id.clone(),
                    bus: bus.clone(),
                })
            };
            let (f, t) = (lookup(&l.from)?, lookup(&l.to)?);
            if f == t {
                return Err(GridError::SelfLoop(l.id.clone()));
            }
            if let Some(x) = l.x {
                if !(x > 0.0) {
                    return Err(GridError::BadReactance(l.id.clone()));
                }
            }
            terminals.push((f, t));
        }

        let mut adj = vec![Vec::new(); buses.len()];
        for &(f, t) in &terminals {
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; buses.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(GridError::Disconnected);
        }
        let slack = slacks[0];
        Ok(Self { buses, lines, slack, terminals })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn terminals(&self) -> &[(usize, usize)] {
        &self.terminals
    }

    /// Same network with `bus` as the slack.
    pub fn with_slack(&self, bus: usize) -> Self {
        let mut out = self.clone();
        for (i, b) in out.buses.iter_mut().enumerate() {
            b.slack = i == bus;
        }
        out.slack = bus;
        out
    }

    /// Same network with every reactance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for l in &mut out.lines {
            l.x = l.x.map(|x| x * factor);
        }
        out
    }

    fn reactances(&self) -> Result<Vec<f64>, GridError> {
        self.lines
            .iter()
            .map(|l| l.x.ok_or_else(|| GridError::MissingReactance(l.id.clone())))
            .collect()
    }
}

/// Single-outage distribution factors for every ordered line pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LodfTable {
    line_ids: Vec<String>,
    endpoints: Vec<(String, String)>,
    // row = monitored line, column = outaged line
    values: Vec<Option<f64>>,
    islanding: Vec<bool>,
}

impl LodfTable {
    pub fn len(&self) -> usize {
        self.line_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.line_ids.is_empty()
    }

    pub fn line_ids(&self) -> &[String] {
        &self.line_ids
    }

    /// Substation ids at each end of every line.
    pub fn endpoints(&self) -> &[(String, String)] {
        &self.endpoints
    }

    /// Factor on monitored line `l` for the outage of `k`; `None` when the
    /// outage islands the grid, when `l == k`, or when no value was supplied.
    pub fn get(&self, l: usize, k: usize) -> Option<f64> {
        if l == k {
            return None;
        }
        self.values[l * self.len() + k]
    }

    pub fn factor(&self, l: usize, k: usize) -> Result<f64, GridError> {
        if l == k {
            return Err(GridError::SameLine);
        }
        self.get(l, k).ok_or_else(|| GridError::Islanding { line: self.line_ids[k].clone() })
    }

    /// All factors for the outage of line `k`, indexed by monitored line.
    pub fn outage(&self, k: usize) -> Result<Vec<Option<f64>>, GridError> {
        if self.is_islanding(k) {
            return Err(GridError::Islanding { line: self.line_ids[k].clone() });
        }
        Ok((0..self.len()).map(|l| self.get(l, k)).collect())
    }

    fn is_islanding(&self, k: usize) -> bool {
        self.islanding[k]
    }

    /// Ids of lines whose outage islands part of the grid.
    pub fn islanding_lines(&self) -> Vec<&str> {
        (0..self.len()).filter(|&k| self.is_islanding(k)).map(|k| self.line_ids[k].as_str()).collect()
    }

    /// Every available factor, excluding the diagonal.
    pub fn all_factors(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|l| (0..n).map(move |k| (l, k)))
            .filter_map(|(l, k)| self.get(l, k))
            .collect()
    }

    /// Builds a table from user-supplied rows: `monitored -> outaged -> factor`.
    pub fn from_overrides(
        grid: &GridModel,
        overrides: &BTreeMap<String, BTreeMap<String, f64>>,
    ) -> Result<Self, GridError> {
        let (line_ids, endpoints) = line_meta(grid);
        let index: HashMap<&str, usize> =
            line_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let n = line_ids.len();
        let mut values = vec![None; n * n];
        for (l, row) in overrides {
            let &li = index.get(l.as_str()).ok_or_else(|| GridError::UnknownLine(l.clone()))?;
            for (k, &v) in row {
                let &ki = index.get(k.as_str()).ok_or_else(|| GridError::UnknownLine(k.clone()))?;
                if li != ki {
                    values[li * n + ki] = Some(v);
                }
            }
        }
        Ok(Self { line_ids, endpoints, values, islanding: vec![false; n] })
    }
}

fn line_meta(grid: &GridModel) -> (Vec<String>, Vec<(String, String)>) {
    let ids = grid.lines.iter().map(|l| l.id.clone()).collect();
    let ends = grid.lines.iter().map(|l| (l.from_sub.clone(), l.to_sub.clone())).collect();
    (ids, ends)
}

/// Computes the DC single-outage distribution factors of `grid`.
///
/// The power transfer distribution factor of line `l` for a unit transfer
/// across the terminals of line `k` is built from the inverse of the
/// slack-reduced susceptance matrix; `LODF[l,k] = PTDF[l,k] / (1 - PTDF[k,k])`.
/// Outaging a line with `PTDF[k,k]` within [`ISLANDING_TOL`] of 1 splits the
/// grid, so its column is marked unavailable.
pub fn compute_lodf(grid: &GridModel) -> Result<LodfTable, GridError> {
    let x = grid.reactances()?;
    let n = grid.buses.len();
    let s = grid.slack;

    // reduced bus ordering: every bus except the slack
    let reduced = |bus: usize| -> Option<usize> {
        match bus.cmp(&s) {
            std::cmp::Ordering::Less => Some(bus),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(bus - 1),
        }
    };
    let mut b = DMatrix::<f64>::zeros(n - 1, n - 1);
    for (&(f, t), &xl) in grid.terminals.iter().zip(&x) {
        let y = 1.0 / xl;
        let (rf, rt) = (reduced(f), reduced(t));
        if let Some(i) = rf {
            b[(i, i)] += y;
        }
        if let Some(j) = rt {
            b[(j, j)] += y;
        }
        if let (Some(i), Some(j)) = (rf, rt) {
            b[(i, j)] -= y;
            b[(j, i)] -= y;
        }
    }
    let inv = if n > 1 { b.try_inverse().ok_or(GridError::Singular)? } else { b };
    let reactance_of = |bus_a: usize, bus_b: usize| -> f64 {
        match (reduced(bus_a), reduced(bus_b)) {
            (Some(i), Some(j)) => inv[(i, j)],
            _ => 0.0,
        }
    };

    let m = grid.lines.len();
    // ptdf[l][k]: flow on l per unit injected at from(k), withdrawn at to(k)
    let mut ptdf = vec![0.0; m * m];
    for (l, &(fl, tl)) in grid.terminals.iter().enumerate() {
        for (k, &(fk, tk)) in grid.terminals.iter().enumerate() {
            let dtheta = reactance_of(fl, fk) - reactance_of(fl, tk) - reactance_of(tl, fk)
                + reactance_of(tl, tk);
            ptdf[l * m + k] = dtheta / x[l];
        }
    }

    let mut values = vec![None; m * m];
    let mut islanding = vec![false; m];
    for k in 0..m {
        let denom = 1.0 - ptdf[k * m + k];
        if denom.abs() < ISLANDING_TOL {
            islanding[k] = true;
            continue;
        }
        for l in 0..m {
            if l != k {
                values[l * m + k] = Some(ptdf[l * m + k] / denom);
            }
        }
    }
    let (line_ids, endpoints) = line_meta(grid);
    Ok(LodfTable { line_ids, endpoints, values, islanding })
}

/// `mean(|x|) / std(|x|)` with the population standard deviation. Returns
/// [`NLODF_SENTINEL`] when the spread is below `1e-12`.
pub fn nlodf(factors: &[f64]) -> Result<f64, GridError> {
    if factors.is_empty() {
        return Err(GridError::EmptyFactors);
    }
    let n = factors.len() as f64;
    let mean = factors.iter().map(|v| v.abs()).sum::<f64>() / n;
    let var = factors.iter().map(|v| (v.abs() - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        Ok(NLODF_SENTINEL)
    } else {
        Ok(mean / std)
    }
}

/// Per-device-type weights of the physical security metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub w_iso: f64,
    pub w_cb: f64,
    pub w_xline: f64,
    pub w_xfmr: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { w_iso: 1.0, w_cb: 1.0, w_xline: 1.0, w_xfmr: 1.0 }
    }
}

impl Weights {
    pub fn new(w_iso: f64, w_cb: f64, w_xline: f64, w_xfmr: f64) -> Result<Self, GridError> {
        let w = Self { w_iso, w_cb, w_xline, w_xfmr };
        w.validate()?;
        Ok(w)
    }

    pub fn uniform(w: f64) -> Result<Self, GridError> {
        Self::new(w, w, w, w)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        for (name, w) in [
            ("w_iso", self.w_iso),
            ("w_cb", self.w_cb),
            ("w_xline", self.w_xline),
            ("w_xfmr", self.w_xfmr),
        ] {
            if !(w > 0.0) {
                return Err(GridError::BadWeight(name));
            }
        }
        Ok(())
    }
}

/// Sum of `1 / (w_t * n_t)` over the four device types; types with no
/// devices contribute nothing.
pub fn ps_metric(counts: &SubstationProfile, weights: &Weights) -> Result<f64, GridError> {
    weights.validate()?;
    let terms = [
        (weights.w_iso, counts.iso),
        (weights.w_cb, counts.cb),
        (weights.w_xline, counts.xline),
        (weights.w_xfmr, counts.xfmr),
    ];
    Ok(terms.iter().filter(|(_, n)| *n > 0).map(|&(w, n)| 1.0 / (w * n as f64)).sum())
}
