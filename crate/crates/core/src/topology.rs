//! Utility cyber-network graphs and their decomposition into security zones.
//!
//! A [`UtilityGraph`] holds one utility control center (UCC) and the
//! substations it manages. Nodes are stored sorted by id, so node indices,
//! the canonical edge ordering and the component ordering produced by
//! [`decompose`] are all stable across runs and serializations.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("utility `{0}` has no nodes")]
    Empty(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("utility `{utility}`: expected exactly one UCC node, found {found}")]
    UccCount { utility: String, found: usize },
    #[error("utility `{utility}`: declared ucc_id `{ucc_id}` is not its UCC node")]
    UccMismatch { utility: String, ucc_id: String },
    #[error("node `{0}`: balancing-authority nodes cannot appear in a utility graph")]
    BalancingAuthority(String),
    #[error("substation `{0}` has no device profile")]
    MissingProfile(String),
    #[error("UCC `{0}` must not carry a device profile")]
    UnexpectedProfile(String),
    #[error("edge references unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge `{0}`-`{1}`")]
    DuplicateEdge(String, String),
    #[error("utility `{0}` graph is disconnected")]
    Disconnected(String),
    #[error("substation count must be at least 1")]
    NoSubstations,
    #[error("edge probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("chromosome length {got} does not match edge count {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    #[serde(rename = "BA")]
    Ba,
    #[serde(rename = "UCC")]
    Ucc,
    Substation,
}

/// Protection-device inventory of one substation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstationProfile {
    pub iso: u32,
    pub cb: u32,
    pub xline: u32,
    pub xfmr: u32,
}

impl SubstationProfile {
    pub const fn new(iso: u32, cb: u32, xline: u32, xfmr: u32) -> Self {
        Self { iso, cb, xline, xfmr }
    }
}

impl std::ops::Add for SubstationProfile {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            iso: self.iso + rhs.iso,
            cb: self.cb + rhs.cb,
            xline: self.xline + rhs.xline,
            xfmr: self.xfmr + rhs.xfmr,
        }
    }
}

impl std::iter::Sum for SubstationProfile {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<SubstationProfile>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    UccSub,
    SubSub,
}

/// An undirected edge between two node indices, `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
}

/// Cyber topology of one UCC and its substations.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityGraph {
    id: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    ucc: usize,
    // (neighbor, edge index) per node
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl UtilityGraph {
    /// Validates and builds a graph. Nodes are re-ordered by id and edges
    /// sorted into canonical `(min id, max id)` order.
    pub fn new(
        id: impl Into<String>,
        mut nodes: Vec<Node>,
        edges: &[(String, String)],
    ) -> Result<Self, TopologyError> {
        let id = id.into();
        if nodes.is_empty() {
            return Err(TopologyError::Empty(id));
        }
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(TopologyError::DuplicateId(pair[0].id.clone()));
            }
        }
        let mut ucc = None;
        let mut ucc_count = 0;
        for (i, n) in nodes.iter().enumerate() {
            match n.kind {
                NodeKind::Ba => return Err(TopologyError::BalancingAuthority(n.id.clone())),
                NodeKind::Ucc => {
                    ucc_count += 1;
                    ucc = Some(i);
                    if n.profile.is_some() {
                        return Err(TopologyError::UnexpectedProfile(n.id.clone()));
                    }
                }
                NodeKind::Substation => {
                    if n.profile.is_none() {
                        return Err(TopologyError::MissingProfile(n.id.clone()));
                    }
                }
            }
        }
        if ucc_count != 1 {
            return Err(TopologyError::UccCount { utility: id, found: ucc_count });
        }
        let ucc = ucc.expect("counted");

        let index: HashMap<&str, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut out = Vec::with_capacity(edges.len());
        for (x, y) in edges {
            let &i = index.get(x.as_str()).ok_or_else(|| TopologyError::UnknownNode(x.clone()))?;
            let &j = index.get(y.as_str()).ok_or_else(|| TopologyError::UnknownNode(y.clone()))?;
            if i == j {
                return Err(TopologyError::SelfLoop(x.clone()));
            }
            let (a, b) = (i.min(j), i.max(j));
            let kind = if a == ucc || b == ucc { EdgeKind::UccSub } else { EdgeKind::SubSub };
            out.push(Edge { a, b, kind });
        }
        out.sort_by_key(|e| (e.a, e.b));
        for pair in out.windows(2) {
            if (pair[0].a, pair[0].b) == (pair[1].a, pair[1].b) {
                return Err(TopologyError::DuplicateEdge(
                    nodes[pair[0].a].id.clone(),
                    nodes[pair[0].b].id.clone(),
                ));
            }
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (k, e) in out.iter().enumerate() {
            adjacency[e.a].push((e.b, k));
            adjacency[e.b].push((e.a, k));
        }
        let graph = Self { id, nodes, edges: out, ucc, adjacency };
        if graph.components(|_| true).len() != 1 {
            return Err(TopologyError::Disconnected(graph.id));
        }
        Ok(graph)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Edges in canonical order; bit `i` of a chromosome refers to `edges()[i]`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn ucc(&self) -> usize {
        self.ucc
    }

    pub fn ucc_id(&self) -> &str {
        &self.nodes[self.ucc].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[node].iter().map(|&(n, _)| n)
    }

    pub fn is_ucc_neighbor(&self, node: usize) -> bool {
        self.adjacency[self.ucc].iter().any(|&(n, _)| n == node)
    }

    pub fn substations(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&i| i != self.ucc)
    }

    pub fn profile(&self, node: usize) -> Option<&SubstationProfile> {
        self.nodes[node].profile.as_ref()
    }

    pub fn edge_pairs(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|e| (self.nodes[e.a].id.clone(), self.nodes[e.b].id.clone()))
            .collect()
    }

    /// Connected components over the edges accepted by `keep`, ordered with
    /// the UCC component first and the rest by smallest node index.
    fn components(&self, keep: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        let starts = std::iter::once(self.ucc).chain((0..n).filter(|&i| i != self.ucc));
        for start in starts {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &(w, e) in &self.adjacency[v] {
                    if !seen[w] && keep(e) {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Edge-removal decision vector; `true` means the edge is cut.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chromosome(Vec<bool>);

impl Chromosome {
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Bit `i` is set when `(mask >> i) & 1 == 1`.
    pub fn from_mask(mask: u64, len: usize) -> Self {
        Self((0..len).map(|i| (mask >> i) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Parses a `0`/`1` string.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Connected-component decomposition of a graph after edge removal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clustering {
    /// Node-index sets; the UCC-containing subgraph comes first.
    pub subgraphs: Vec<Vec<usize>>,
    pub m_u: usize,
}

impl Clustering {
    pub fn n_sg(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.subgraphs.iter().map(Vec::len).collect()
    }

    /// Cluster index of each node.
    pub fn labels(&self, node_count: usize) -> Vec<usize> {
        let mut labels = vec![usize::MAX; node_count];
        for (c, members) in self.subgraphs.iter().enumerate() {
            for &v in members {
                labels[v] = c;
            }
        }
        labels
    }

    pub fn member_ids(&self, graph: &UtilityGraph) -> Vec<Vec<String>> {
        self.subgraphs
            .iter()
            .map(|c| c.iter().map(|&v| graph.nodes()[v].id.clone()).collect())
            .collect()
    }

    /// Builds a clustering from explicit node-id groups, checking that they
    /// partition the graph. The UCC group is moved first.
    pub fn from_ids(graph: &UtilityGraph, groups: &[Vec<String>]) -> Result<Self, TopologyError> {
        let mut seen = vec![false; graph.node_count()];
        let mut subgraphs = Vec::with_capacity(groups.len());
        for g in groups {
            let mut members = Vec::with_capacity(g.len());
            for id in g {
                let v = graph.index_of(id).ok_or_else(|| TopologyError::UnknownNode(id.clone()))?;
                if seen[v] {
                    return Err(TopologyError::DuplicateId(id.clone()));
                }
                seen[v] = true;
                members.push(v);
            }
            if members.is_empty() {
                return Err(TopologyError::Empty(graph.id().to_string()));
            }
            members.sort_unstable();
            subgraphs.push(members);
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(TopologyError::UnknownNode(graph.nodes()[v].id.clone()));
        }
        let ucc = graph.ucc();
        subgraphs.sort_by_key(|c| (!c.contains(&ucc), c[0]));
        Ok(Self { subgraphs, m_u: 1 })
    }
}

/// Connected components of `graph` after deleting every edge whose bit is set.
pub fn decompose(graph: &UtilityGraph, chromosome: &Chromosome) -> Result<Clustering, TopologyError> {
    if chromosome.len() != graph.edge_count() {
        return Err(TopologyError::LengthMismatch {
            expected: graph.edge_count(),
            got: chromosome.len(),
        });
    }
    let subgraphs = graph.components(|e| !chromosome.get(e));
    let m_u = subgraphs.iter().filter(|c| c.contains(&graph.ucc)).count();
    Ok(Clustering { subgraphs, m_u })
}

pub(crate) const UCC_ID: &str = "UCC";

pub(crate) fn substation_id(i: usize) -> String {
    format!("S{i:03}")
}

fn star_parts(n_subs: usize) -> (Vec<Node>, Vec<(String, String)>) {
    let mut nodes = vec![Node { id: UCC_ID.into(), kind: NodeKind::Ucc, profile: None }];
    let mut edges = Vec::with_capacity(n_subs);
    for i in 1..=n_subs {
        let id = substation_id(i);
        edges.push((UCC_ID.to_string(), id.clone()));
        nodes.push(Node {
            id,
            kind: NodeKind::Substation,
            profile: Some(SubstationProfile::new(1, 1, 1, 1)),
        });
    }
    (nodes, edges)
}

/// Star topology: every substation linked only to the UCC. Substations get
/// a unit device profile.
pub fn synth_star(n_subs: usize) -> Result<UtilityGraph, TopologyError> {
    if n_subs == 0 {
        return Err(TopologyError::NoSubstations);
    }
    let (nodes, edges) = star_parts(n_subs);
    UtilityGraph::new("U001", nodes, &edges)
}

/// Star backbone plus a `sub_sub` edge for each substation pair with
/// probability `extra_edge_prob`, drawn from a ChaCha8 stream seeded by `seed`.
pub fn synth_hybrid(
    n_subs: usize,
    extra_edge_prob: f64,
    seed: u64,
) -> Result<UtilityGraph, TopologyError> {
    if n_subs == 0 {
        return Err(TopologyError::NoSubstations);
    }
    if !(0.0..=1.0).contains(&extra_edge_prob) {
        return Err(TopologyError::BadProbability(extra_edge_prob));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nodes, mut edges) = star_parts(n_subs);
    for i in 1..=n_subs {
        for j in (i + 1)..=n_subs {
            if rng.gen_bool(extra_edge_prob) {
                edges.push((substation_id(i), substation_id(j)));
            }
        }
    }
    UtilityGraph::new("U001", nodes, &edges)
}
