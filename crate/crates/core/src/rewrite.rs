//! The two graph transformations: gathering the obstructions of a trail onto
//! a single edge, and replacing an obstructed loop by a highly connected
//! gadget. Both act only on the combinatorial annotations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cocycle::{spectral_obstruction_indices, MULTIPLICITY_TOL};
use crate::error::{Error, Result};
use crate::graph::{tangency_indices, BasicSetNode, HeteroclinicEdge, HeteroclinicGraph, TangencyData};

/// Alternating sequence `node_0, e_1, node_1, …, e_k, node_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trail {
    nodes: Vec<String>,
    edges: Vec<String>,
}

impl Trail {
    /// Trail following the given edges; nodes are read off the graph.
    pub fn from_edges(g: &HeteroclinicGraph, edges: &[impl AsRef<str>]) -> Result<Self> {
        let Some(first) = edges.first() else {
            return Err(Error::InvalidTrail("a trail needs at least one edge".into()));
        };
        let mut nodes = vec![g.edge(first.as_ref())?.src.clone()];
        for id in edges {
            nodes.push(g.edge(id.as_ref())?.dst.clone());
        }
        let t = Self {
            nodes,
            edges: edges.iter().map(|e| e.as_ref().to_string()).collect(),
        };
        t.validate(g)?;
        Ok(t)
    }

    pub fn new(nodes: Vec<String>, edges: Vec<String>) -> Self {
        Self { nodes, edges }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[String] {
        &self.edges
    }

    pub fn start(&self) -> &str {
        &self.nodes[0]
    }

    pub fn end(&self) -> &str {
        &self.nodes[self.nodes.len() - 1]
    }

    pub fn validate(&self, g: &HeteroclinicGraph) -> Result<()> {
        if self.edges.is_empty() {
            return Err(Error::InvalidTrail("a trail needs at least one edge".into()));
        }
        if self.nodes.len() != self.edges.len() + 1 {
            return Err(Error::InvalidTrail(format!(
                "{} nodes for {} edges",
                self.nodes.len(),
                self.edges.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for (k, id) in self.edges.iter().enumerate() {
            if !seen.insert(id) {
                return Err(Error::InvalidTrail(format!("edge `{id}` repeats")));
            }
            let e = g.edge(id)?;
            if e.src != self.nodes[k] || e.dst != self.nodes[k + 1] {
                return Err(Error::InvalidTrail(format!(
                    "edge `{id}` goes {} -> {}, trail expects {} -> {}",
                    e.src,
                    e.dst,
                    self.nodes[k],
                    self.nodes[k + 1]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteReceipt {
    pub operation: String,
    pub consumed_edges: Vec<String>,
    pub produced_nodes: Vec<String>,
    pub produced_edges: Vec<String>,
    pub indices: BTreeSet<usize>,
}

fn check_indices(indices: &BTreeSet<usize>, dim: usize) -> Result<()> {
    match indices.iter().find(|&&i| i == 0 || i >= dim) {
        Some(&index) => Err(Error::IndexOutOfRange { index, dim }),
        None => Ok(()),
    }
}

fn fresh_id(g: &HeteroclinicGraph, base: String, taken: impl Fn(&HeteroclinicGraph, &str) -> bool) -> String {
    if !taken(g, &base) {
        return base;
    }
    (1..)
        .map(|n| format!("{base}.{n}"))
        .find(|c| !taken(g, c))
        .expect("unbounded search")
}

fn fresh_edge_id(g: &HeteroclinicGraph, base: String) -> String {
    fresh_id(g, base, |g, id| g.edge_position(id).is_some())
}

fn fresh_node_id(g: &HeteroclinicGraph, base: String) -> String {
    fresh_id(g, base, |g, id| g.node_position(id).is_some())
}

/// Annotate an edge with obstruction set `set`: a copied tangency when one
/// of `candidates` reproduces it exactly, a single tangency when `set` is a
/// nonempty interval, and a declared set otherwise.
fn annotate(
    mut edge: HeteroclinicEdge,
    set: &BTreeSet<usize>,
    candidates: &[TangencyData],
    dim: usize,
) -> HeteroclinicEdge {
    if set.is_empty() {
        return edge;
    }
    if let Some(t) = candidates
        .iter()
        .find(|t| tangency_indices(t, dim).is_ok_and(|s| &s == set))
    {
        edge.tangency = Some(*t);
        return edge;
    }
    let lo = *set.first().expect("nonempty");
    let hi = *set.last().expect("nonempty");
    if hi - lo + 1 == set.len() {
        edge.tangency = Some(TangencyData::new(hi, lo, 1));
    } else {
        edge.declared_obstructions = set.clone();
    }
    edge
}

/// Replace the trail's edges by one edge from its start to its end carrying
/// the obstructions `indices`; interior nodes lose their obstructions in
/// `indices`. Obstructions of consumed edges outside `indices` ride along
/// on the new edge so nothing outside `indices` is lost.
pub fn gather(
    g: &HeteroclinicGraph,
    trail: &Trail,
    indices: &BTreeSet<usize>,
) -> Result<(HeteroclinicGraph, RewriteReceipt)> {
    trail.validate(g)?;
    let dim = g.dim();
    check_indices(indices, dim)?;

    let mut witnessed = BTreeSet::new();
    let mut carried = BTreeSet::new();
    let mut tangencies = Vec::new();
    for id in trail.edges() {
        let e = g.edge(id)?;
        let obs = e.obstructions(dim)?;
        carried.extend(obs.difference(indices).copied());
        witnessed.extend(obs);
        tangencies.extend(e.tangency);
    }
    let interior = &trail.nodes()[1..trail.nodes().len() - 1];
    for id in interior {
        witnessed.extend(g.node(id)?.obstructions()?);
    }
    let uncovered: BTreeSet<usize> = indices.difference(&witnessed).copied().collect();
    if !uncovered.is_empty() {
        return Err(Error::UnwitnessedIndices { uncovered });
    }

    let mut out = g.clone();
    let generation = out.bump_generation();
    let consumed: BTreeSet<String> = trail.edges().iter().cloned().collect();
    out.remove_edges(&consumed);
    for id in interior.iter().collect::<BTreeSet<_>>() {
        let node = out.node_mut(id)?;
        let spectral = match &node.word {
            Some(w) => spectral_obstruction_indices(w, MULTIPLICITY_TOL)?,
            None => BTreeSet::new(),
        };
        node.declared_obstructions = &node.declared_obstructions - indices;
        node.suppressed_obstructions.extend(spectral.intersection(indices).copied());
    }

    let new_id = fresh_edge_id(&out, format!("gather{generation}"));
    let full: BTreeSet<usize> = indices | &carried;
    let edge = annotate(
        HeteroclinicEdge::new(new_id.clone(), trail.start(), trail.end()),
        &full,
        &tangencies,
        dim,
    );
    out.add_edge(edge)?;
    let receipt = RewriteReceipt {
        operation: "gather".into(),
        consumed_edges: trail.edges().to_vec(),
        produced_nodes: Vec::new(),
        produced_edges: vec![new_id],
        indices: indices.clone(),
    };
    Ok((out, receipt))
}

/// Replace the loop `loop_edge` at `K` by a gadget of `k − 1` fresh nodes
/// and `k` directed cycles through `K` and the fresh nodes, alternating in
/// orientation. Every gadget edge carries `indices` and the infinite
/// multiplicity marker; obstructions of the loop outside `indices` are kept
/// on the first gadget edge.
pub fn robustize(
    g: &HeteroclinicGraph,
    loop_edge: &str,
    indices: &BTreeSet<usize>,
    k: usize,
) -> Result<(HeteroclinicGraph, RewriteReceipt)> {
    let dim = g.dim();
    let e = g.edge(loop_edge)?;
    if !e.is_loop() {
        return Err(Error::NotALoop(loop_edge.to_string()));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("robustize needs k >= 2, got {k}")));
    }
    check_indices(indices, dim)?;
    let anchor = g.node(&e.src)?;
    let loop_obs = e.obstructions(dim)?;
    let witnessed: BTreeSet<usize> = &loop_obs | &anchor.obstructions()?;
    let uncovered: BTreeSet<usize> = indices.difference(&witnessed).copied().collect();
    if !uncovered.is_empty() {
        return Err(Error::UnwitnessedIndices { uncovered });
    }
    let carried: BTreeSet<usize> = loop_obs.difference(indices).copied().collect();
    let anchor_id = anchor.id.clone();
    let anchor_index = anchor.index;

    let mut out = g.clone();
    let generation = out.bump_generation();
    out.remove_edges(&BTreeSet::from([loop_edge.to_string()]));

    let mut ring = vec![anchor_id.clone()];
    let mut produced_nodes = Vec::new();
    for j in 1..k {
        let id = fresh_node_id(&out, format!("{anchor_id}~r{generation}.{j}"));
        out.add_node(BasicSetNode::new(id.clone(), anchor_index).with_obstructions(indices.iter().copied()))?;
        ring.push(id.clone());
        produced_nodes.push(id);
    }
    let mut produced_edges = Vec::new();
    for c in 0..k {
        for j in 0..k {
            let (a, b) = (j, (j + 1) % k);
            let (src, dst) = if c % 2 == 0 { (a, b) } else { (b, a) };
            let id = fresh_edge_id(&out, format!("{anchor_id}~r{generation}.c{c}.{j}"));
            let mut edge = HeteroclinicEdge::new(id.clone(), ring[src].clone(), ring[dst].clone())
                .with_obstructions(indices.iter().copied());
            if c == 0 && j == 0 {
                edge.declared_obstructions.extend(carried.iter().copied());
            }
            edge.infinite_multiplicity = true;
            out.add_edge(edge)?;
            produced_edges.push(id);
        }
    }
    let receipt = RewriteReceipt {
        operation: "robustize".into(),
        consumed_edges: vec![loop_edge.to_string()],
        produced_nodes,
        produced_edges,
        indices: indices.clone(),
    };
    Ok((out, receipt))
}

/// One step of a rewrite script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RewriteStep {
    Gather {
        trail: Vec<String>,
        indices: BTreeSet<usize>,
    },
    Robustize {
        edge: String,
        indices: BTreeSet<usize>,
        k: usize,
    },
}

/// Apply steps in order, stopping at the first error.
pub fn apply_script(
    g: &HeteroclinicGraph,
    steps: &[RewriteStep],
) -> Result<(HeteroclinicGraph, Vec<RewriteReceipt>)> {
    let mut cur = g.clone();
    let mut receipts = Vec::with_capacity(steps.len());
    for step in steps {
        let (next, receipt) = match step {
            RewriteStep::Gather { trail, indices } => {
                let t = Trail::from_edges(&cur, trail)?;
                gather(&cur, &t, indices)?
            }
            RewriteStep::Robustize { edge, indices, k } => robustize(&cur, edge, indices, *k)?,
        };
        cur = next;
        receipts.push(receipt);
    }
    Ok((cur, receipts))
}
