//! Heteroclinic graphs: directed multigraphs whose vertices model basic sets
//! (by a periodic saddle) and whose edges model connecting orbits, annotated
//! with mechanical obstructions to domination.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::cocycle::{
    classify_periodic, domination_profile, lyapunov_map_of_periodic, spectral_obstruction_indices,
    DominationVerdict, MatrixWord, PeriodicClass, MULTIPLICITY_TOL,
};
use crate::error::{Error, Result};

/// Bundle tangency of a connecting orbit: the splitting index at the
/// α-limit, at the ω-limit, and the dimension of the non-generic
/// intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TangencyData {
    pub i_alpha: usize,
    pub i_omega: usize,
    pub d_t: usize,
}

impl TangencyData {
    pub fn new(i_alpha: usize, i_omega: usize, d_t: usize) -> Self {
        Self {
            i_alpha,
            i_omega,
            d_t,
        }
    }

    /// Homoclinic tangency of a saddle of the given index.
    pub fn homoclinic(index: usize) -> Self {
        Self::new(index, index, 1)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let Self {
            i_alpha,
            i_omega,
            d_t,
        } = *self;
        if i_alpha == 0 || i_alpha >= dim {
            return Err(Error::InvalidTangency(format!("0 < i_alpha < {dim} (i_alpha = {i_alpha})")));
        }
        if i_omega == 0 || i_omega >= dim {
            return Err(Error::InvalidTangency(format!("0 < i_omega < {dim} (i_omega = {i_omega})")));
        }
        if d_t < 1 {
            return Err(Error::InvalidTangency("d_T >= 1".into()));
        }
        if i_alpha + d_t <= i_omega {
            return Err(Error::InvalidTangency(format!(
                "i_alpha + d_T > i_omega ({i_alpha} + {d_t} <= {i_omega})"
            )));
        }
        if d_t > (dim - i_alpha).min(i_omega) {
            return Err(Error::InvalidTangency(format!(
                "d_T <= min(d - i_alpha, i_omega) ({d_t} > min({}, {i_omega}))",
                dim - i_alpha
            )));
        }
        Ok(())
    }
}

/// Indices `i` with `i_omega − d_T < i < i_alpha + d_T`, clipped to `(0, d)`.
pub fn tangency_indices(t: &TangencyData, dim: usize) -> Result<BTreeSet<usize>> {
    t.validate(dim)?;
    let lo = (t.i_omega + 1).saturating_sub(t.d_t).max(1);
    let hi = (t.i_alpha + t.d_t - 1).min(dim - 1);
    Ok((lo..=hi).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicSetNode {
    pub id: String,
    /// Stable index.
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<MatrixWord>,
    #[serde(default)]
    pub declared_obstructions: BTreeSet<usize>,
    /// Spectral obstructions of the word that a rewrite has relocated
    /// elsewhere.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub suppressed_obstructions: BTreeSet<usize>,
}

impl BasicSetNode {
    pub fn new(id: impl Into<String>, index: usize) -> Self {
        Self {
            id: id.into(),
            index,
            word: None,
            declared_obstructions: BTreeSet::new(),
            suppressed_obstructions: BTreeSet::new(),
        }
    }

    pub fn with_word(mut self, word: MatrixWord) -> Self {
        self.word = Some(word);
        self
    }

    pub fn with_obstructions(mut self, indices: impl IntoIterator<Item = usize>) -> Self {
        self.declared_obstructions.extend(indices);
        self
    }

    /// Spectral obstructions of the word plus declared ones, minus
    /// suppressed ones.
    pub fn obstructions(&self) -> Result<BTreeSet<usize>> {
        let mut out = self.declared_obstructions.clone();
        if let Some(w) = &self.word {
            out.extend(spectral_obstruction_indices(w, MULTIPLICITY_TOL)?);
        }
        Ok(&out - &self.suppressed_obstructions)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.index == 0 || self.index >= dim {
            return Err(Error::InvalidGraph(format!(
                "node `{}`: index {} outside (0, {dim})",
                self.id, self.index
            )));
        }
        for set in [&self.declared_obstructions, &self.suppressed_obstructions] {
            if let Some(&i) = set.iter().find(|&&i| i == 0 || i >= dim) {
                return Err(Error::InvalidGraph(format!(
                    "node `{}`: obstruction index {i} outside (0, {dim})",
                    self.id
                )));
            }
        }
        if let Some(w) = &self.word {
            if w.dim() != dim {
                return Err(Error::InvalidGraph(format!(
                    "node `{}`: word has dimension {}, graph has {dim}",
                    self.id,
                    w.dim()
                )));
            }
            let class = classify_periodic(w, MULTIPLICITY_TOL)?;
            if class != PeriodicClass::Saddle(self.index) {
                return Err(Error::InvalidGraph(format!(
                    "node `{}`: word classifies as {class:?}, declared Saddle({})",
                    self.id, self.index
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicEdge {
    pub id: String,
    pub src: String,
    pub dst: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangency: Option<TangencyData>,
    /// Obstructions carried without a single tangency reproducing them.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub declared_obstructions: BTreeSet<usize>,
    /// Stands for an infinite family of parallel connections.
    #[serde(default)]
    pub infinite_multiplicity: bool,
}

impl HeteroclinicEdge {
    pub fn new(id: impl Into<String>, src: impl Into<String>, dst: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            src: src.into(),
            dst: dst.into(),
            tangency: None,
            declared_obstructions: BTreeSet::new(),
            infinite_multiplicity: false,
        }
    }

    pub fn with_tangency(mut self, t: TangencyData) -> Self {
        self.tangency = Some(t);
        self
    }

    pub fn with_obstructions(mut self, indices: impl IntoIterator<Item = usize>) -> Self {
        self.declared_obstructions.extend(indices);
        self
    }

    pub fn is_loop(&self) -> bool {
        self.src == self.dst
    }

    pub fn obstructions(&self, dim: usize) -> Result<BTreeSet<usize>> {
        let mut out = self.declared_obstructions.clone();
        if let Some(t) = &self.tangency {
            out.extend(tangency_indices(t, dim)?);
        }
        Ok(out)
    }
}

/// Serialized form of [`HeteroclinicGraph`]; validated on conversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphData {
    pub dim: usize,
    #[serde(default)]
    pub nodes: Vec<BasicSetNode>,
    #[serde(default)]
    pub edges: Vec<HeteroclinicEdge>,
    /// Rewrite counter used to derive fresh ids.
    #[serde(default)]
    pub generation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphData", into = "GraphData")]
pub struct HeteroclinicGraph {
    dim: usize,
    nodes: Vec<BasicSetNode>,
    edges: Vec<HeteroclinicEdge>,
    generation: u64,
}

impl TryFrom<GraphData> for HeteroclinicGraph {
    type Error = Error;

    fn try_from(data: GraphData) -> Result<Self> {
        let mut g = HeteroclinicGraph::new(data.dim)?;
        g.generation = data.generation;
        for n in data.nodes {
            g.add_node(n)?;
        }
        for e in data.edges {
            g.add_edge(e)?;
        }
        Ok(g)
    }
}

impl From<HeteroclinicGraph> for GraphData {
    fn from(g: HeteroclinicGraph) -> Self {
        Self {
            dim: g.dim,
            nodes: g.nodes,
            edges: g.edges,
            generation: g.generation,
        }
    }
}

impl HeteroclinicGraph {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidGraph(format!("dimension must be at least 2, got {dim}")));
        }
        Ok(Self {
            dim,
            nodes: Vec::new(),
            edges: Vec::new(),
            generation: 0,
        })
    }

    /// Empty graph that continues an earlier rewrite history.
    pub fn from_parts(dim: usize, generation: u64) -> Result<Self> {
        let mut g = Self::new(dim)?;
        g.generation = generation;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[BasicSetNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[HeteroclinicEdge] {
        &self.edges
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub(crate) fn bump_generation(&mut self) -> u64 {
        self.generation += 1;
        self.generation
    }

    pub fn add_node(&mut self, node: BasicSetNode) -> Result<()> {
        if self.node_position(&node.id).is_some() {
            return Err(Error::InvalidGraph(format!("duplicate node id `{}`", node.id)));
        }
        node.validate(self.dim)?;
        self.nodes.push(node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: HeteroclinicEdge) -> Result<()> {
        if self.edge_position(&edge.id).is_some() {
            return Err(Error::InvalidGraph(format!("duplicate edge id `{}`", edge.id)));
        }
        for end in [&edge.src, &edge.dst] {
            if self.node_position(end).is_none() {
                return Err(Error::InvalidGraph(format!(
                    "edge `{}` references unknown node `{end}`",
                    edge.id
                )));
            }
        }
        if let Some(t) = &edge.tangency {
            t.validate(self.dim)
                .map_err(|e| Error::InvalidGraph(format!("edge `{}`: {e}", edge.id)))?;
        }
        if let Some(&i) = edge.declared_obstructions.iter().find(|&&i| i == 0 || i >= self.dim) {
            return Err(Error::InvalidGraph(format!(
                "edge `{}`: obstruction index {i} outside (0, {})",
                edge.id, self.dim
            )));
        }
        self.edges.push(edge);
        Ok(())
    }

    pub(crate) fn remove_edges(&mut self, ids: &BTreeSet<String>) {
        self.edges.retain(|e| !ids.contains(&e.id));
    }

    pub(crate) fn node_mut(&mut self, id: &str) -> Result<&mut BasicSetNode> {
        self.nodes
            .iter_mut()
            .find(|n| n.id == id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn node_position(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn edge_position(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn node(&self, id: &str) -> Result<&BasicSetNode> {
        self.node_position(id)
            .map(|k| &self.nodes[k])
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn edge(&self, id: &str) -> Result<&HeteroclinicEdge> {
        self.edge_position(id)
            .map(|k| &self.edges[k])
            .ok_or_else(|| Error::UnknownEdge(id.to_string()))
    }

    /// Edges as (src, dst) node positions.
    fn endpoints(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .map(|e| {
                (
                    self.node_position(&e.src).expect("validated"),
                    self.node_position(&e.dst).expect("validated"),
                )
            })
            .collect()
    }

    fn non_isolated(&self) -> Vec<bool> {
        let mut used = vec![false; self.nodes.len()];
        for (s, t) in self.endpoints() {
            used[s] = true;
            used[t] = true;
        }
        used
    }

    /// Strongly connected component label of every node.
    fn components(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let ends = self.endpoints();
        let mut fwd = vec![Vec::new(); n];
        let mut bwd = vec![Vec::new(); n];
        for &(s, t) in &ends {
            fwd[s].push(t);
            bwd[t].push(s);
        }
        // Kosaraju: finishing order on the forward graph, then sweep the
        // reverse graph.
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![(root, 0usize)];
            while let Some((v, k)) = stack.pop() {
                if k < fwd[v].len() {
                    stack.push((v, k + 1));
                    let w = fwd[v][k];
                    if !seen[w] {
                        seen[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    order.push(v);
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut label = 0;
        for &root in order.iter().rev() {
            if comp[root] != usize::MAX {
                continue;
            }
            comp[root] = label;
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                for &w in &bwd[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = label;
                        stack.push(w);
                    }
                }
            }
            label += 1;
        }
        comp
    }

    /// Positions of the nodes in the component of `id`, and whether the
    /// component carries at least one internal edge.
    fn component_of(&self, id: &str) -> Result<(Vec<bool>, bool)> {
        let k = self.node_position(id).ok_or_else(|| Error::UnknownNode(id.to_string()))?;
        let comp = self.components();
        let members: Vec<bool> = comp.iter().map(|&c| c == comp[k]).collect();
        let has_cycle = self.endpoints().iter().any(|&(s, t)| members[s] && members[t]);
        Ok((members, has_cycle))
    }
}

/// Strong connectivity over nodes with at least one incident edge. An
/// edgeless graph counts as connected iff it has at most one node.
pub fn strongly_connected(g: &HeteroclinicGraph) -> bool {
    if g.edges.is_empty() {
        return g.nodes.len() <= 1;
    }
    let used = g.non_isolated();
    let comp = g.components();
    let mut labels = comp.iter().zip(&used).filter(|(_, &u)| u).map(|(c, _)| *c);
    let first = labels.next();
    labels.all(|c| Some(c) == first)
}

pub fn is_eulerian(g: &HeteroclinicGraph) -> bool {
    if g.edges.is_empty() {
        return true;
    }
    let n = g.nodes.len();
    let mut balance = vec![0i64; n];
    for (s, t) in g.endpoints() {
        balance[s] += 1;
        balance[t] -= 1;
    }
    balance.iter().all(|&b| b == 0) && strongly_connected(g)
}

/// Closed trail through every edge exactly once, as edge ids. Starts at the
/// source of the first edge; deterministic in edge insertion order.
pub fn eulerian_circuit(g: &HeteroclinicGraph) -> Result<Vec<String>> {
    if !is_eulerian(g) {
        return Err(Error::NotEulerian);
    }
    if g.edges.is_empty() {
        return Ok(Vec::new());
    }
    let ends = g.endpoints();
    let mut out_edges = vec![Vec::new(); g.nodes.len()];
    for (k, &(s, _)) in ends.iter().enumerate() {
        out_edges[s].push(k);
    }
    let mut next = vec![0usize; g.nodes.len()];
    // Hierholzer with an explicit stack of (node, edge used to arrive).
    let mut stack: Vec<(usize, Option<usize>)> = vec![(ends[0].0, None)];
    let mut circuit = Vec::with_capacity(ends.len());
    while let Some(&(v, via)) = stack.last() {
        if next[v] < out_edges[v].len() {
            let e = out_edges[v][next[v]];
            next[v] += 1;
            stack.push((ends[e].1, Some(e)));
        } else {
            stack.pop();
            if let Some(e) = via {
                circuit.push(e);
            }
        }
    }
    circuit.reverse();
    Ok(circuit.into_iter().map(|e| g.edges[e].id.clone()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeConnectivity {
    /// Fewer than two non-isolated nodes: no pair to separate.
    Infinite,
    Level(usize),
}

impl EdgeConnectivity {
    /// Whether the graph survives removal of any `k − 1` edges.
    pub fn at_least(&self, k: usize) -> bool {
        match self {
            Self::Infinite => true,
            Self::Level(n) => *n >= k,
        }
    }
}

/// Unit-capacity max flow from `s` to `t` on a capacity matrix.
fn max_flow(cap: &[Vec<usize>], s: usize, t: usize) -> usize {
    let n = cap.len();
    let mut residual: Vec<Vec<i64>> = cap.iter().map(|r| r.iter().map(|&c| c as i64).collect()).collect();
    let mut flow = 0;
    loop {
        let mut parent = vec![usize::MAX; n];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            if v == t {
                break;
            }
            for w in 0..n {
                if residual[v][w] > 0 && parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        if parent[t] == usize::MAX {
            return flow;
        }
        let mut v = t;
        while v != s {
            let u = parent[v];
            residual[u][v] -= 1;
            residual[v][u] += 1;
            v = u;
        }
        flow += 1;
    }
}

/// Minimum number of edge-disjoint paths between ordered pairs of
/// non-isolated nodes. `Level(0)` when not strongly connected.
pub fn edge_connectivity(g: &HeteroclinicGraph) -> EdgeConnectivity {
    if !strongly_connected(g) {
        return EdgeConnectivity::Level(0);
    }
    let used = g.non_isolated();
    let live: Vec<usize> = (0..g.nodes.len()).filter(|&k| used[k]).collect();
    if live.len() < 2 {
        return EdgeConnectivity::Infinite;
    }
    let n = g.nodes.len();
    let mut cap = vec![vec![0usize; n]; n];
    for (s, t) in g.endpoints() {
        if s != t {
            cap[s][t] += 1;
        }
    }
    let root = live[0];
    let level = live[1..]
        .iter()
        .map(|&v| max_flow(&cap, root, v).min(max_flow(&cap, v, root)))
        .min()
        .unwrap_or(0);
    EdgeConnectivity::Level(level)
}

/// Obstructed indices contributed by nodes and edges on cycles through `p`
/// (its strongly connected component, when that component has an edge).
pub fn mechanical_nondomination_indices(g: &HeteroclinicGraph, p: &str) -> Result<BTreeSet<usize>> {
    let (members, has_cycle) = g.component_of(p)?;
    let mut out = BTreeSet::new();
    if !has_cycle {
        return Ok(out);
    }
    for (node, _) in g.nodes.iter().zip(&members).filter(|(_, &m)| m) {
        out.extend(node.obstructions()?);
    }
    for (e, (s, t)) in g.edges.iter().zip(g.endpoints()) {
        if members[s] && members[t] {
            out.extend(e.obstructions(g.dim)?);
        }
    }
    Ok(out)
}

/// Induced subgraph on the strongly connected component of `k`.
pub fn heteroclinic_class(g: &HeteroclinicGraph, k: &str) -> Result<HeteroclinicGraph> {
    let (members, _) = g.component_of(k)?;
    let nodes = g
        .nodes
        .iter()
        .zip(&members)
        .filter(|(_, &m)| m)
        .map(|(n, _)| n.clone())
        .collect();
    let edges = g
        .edges
        .iter()
        .zip(g.endpoints())
        .filter(|(_, (s, t))| members[*s] && members[*t])
        .map(|(e, _)| e.clone())
        .collect();
    Ok(HeteroclinicGraph {
        dim: g.dim,
        nodes,
        edges,
        generation: g.generation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeObstruction {
    pub verdict: bool,
    pub witness: Option<String>,
    /// Block dimensions of the common splitting that was tested.
    pub blocks: Vec<usize>,
}

/// Mechanical failure of volume hyperbolicity on the class of `p`, witnessed
/// at the vertex periodic models.
pub fn mechanically_not_volume_hyperbolic(
    g: &HeteroclinicGraph,
    p: &str,
    horizon: usize,
    rate: f64,
) -> Result<VolumeObstruction> {
    let class = heteroclinic_class(g, p)?;
    let mechanical = mechanical_nondomination_indices(g, p)?;
    let words = class
        .nodes
        .iter()
        .map(|n| {
            n.word
                .as_ref()
                .map(|w| (n.id.as_str(), w))
                .ok_or_else(|| Error::MissingLinearModel(n.id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    volume_obstruction_of_words(&words, &mechanical, g.dim, horizon, rate)
}

pub(crate) fn volume_obstruction_of_words(
    words: &[(&str, &MatrixWord)],
    mechanical: &BTreeSet<usize>,
    dim: usize,
    horizon: usize,
    rate: f64,
) -> Result<VolumeObstruction> {
    let mut cuts: BTreeSet<usize> = (1..dim).filter(|i| !mechanical.contains(i)).collect();
    let mut maps = Vec::with_capacity(words.len());
    for (id, w) in words {
        let dominated: BTreeSet<usize> = domination_profile(w, horizon, rate)?
            .into_iter()
            .filter(|c| c.verdict == DominationVerdict::Dominated)
            .map(|c| c.index)
            .collect();
        cuts = &cuts & &dominated;
        maps.push((*id, lyapunov_map_of_periodic(w)?));
    }
    let cut_list: Vec<usize> = cuts.iter().copied().collect();
    let blocks = crate::cocycle::blocks_from_cuts(&cut_list, dim);
    let first = cut_list.first().copied().unwrap_or(dim);
    let last = cut_list.last().copied().unwrap_or(0);

    let first_obstructed = (1..first).all(|i| mechanical.contains(&i));
    if first_obstructed {
        if let Some((id, _)) = maps.iter().find(|(_, m)| m.values()[first] >= 0.0) {
            return Ok(VolumeObstruction {
                verdict: true,
                witness: Some(id.to_string()),
                blocks,
            });
        }
    }
    let last_obstructed = (last + 1..dim).all(|i| mechanical.contains(&i));
    if last_obstructed {
        if let Some((id, _)) = maps
            .iter()
            .find(|(_, m)| m.values()[dim] - m.values()[last] <= 0.0)
        {
            return Ok(VolumeObstruction {
                verdict: true,
                witness: Some(id.to_string()),
                blocks,
            });
        }
    }
    Ok(VolumeObstruction {
        verdict: false,
        witness: None,
        blocks,
    })
}
