//! Constructive realization of Lyapunov maps in monomial toy models.
//!
//! Node words are diagonal, mixers are quarter-turns on adjacent coordinate
//! planes, so every word is a signed permutation times a diagonal matrix.
//! Following one coordinate line ("particle") through the word, its growth
//! rate is the time average of the exponents of the coordinates it visits.
//! Inside a block of consecutive non-pinned indices the target exponents
//! `t` are majorized by the exponents `s` of the node, so `t = D·s` for a
//! doubly stochastic `D`. A Birkhoff decomposition of `D` gives
//! arrangements and time shares; the word repeats the node word in each
//! arrangement for its share and uses adjacent swaps in between.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cocycle::{spectrum_of_weighted_runs, MatrixWord};
use crate::error::{Error, Result};
use crate::graph::{heteroclinic_class, is_eulerian, mechanical_nondomination_indices, HeteroclinicGraph};
use crate::polytope::{build_polytope, LyapunovMap, LyapunovPolytope};

/// Default cap on the number of expanded matrices in a realized word.
pub const DEFAULT_WORD_CAP: usize = 1_000_000;

const WEIGHT_TOL: f64 = 1e-12;

/// Quarter-turn on the plane of coordinates `index, index + 1` (1-based),
/// available at `node`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mixer {
    pub id: String,
    pub node: String,
    pub index: usize,
}

impl Mixer {
    pub fn matrix(&self, dim: usize) -> DMatrix<f64> {
        let mut m = DMatrix::identity(dim, dim);
        let (a, b) = (self.index - 1, self.index);
        m[(a, a)] = 0.0;
        m[(b, b)] = 0.0;
        m[(a, b)] = -1.0;
        m[(b, a)] = 1.0;
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelData", into = "ModelData")]
pub struct CocycleModel {
    graph: HeteroclinicGraph,
    mixers: Vec<Mixer>,
}

/// Serialized form of [`CocycleModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelData {
    pub graph: HeteroclinicGraph,
    #[serde(default)]
    pub mixers: Vec<Mixer>,
}

impl TryFrom<ModelData> for CocycleModel {
    type Error = Error;

    fn try_from(d: ModelData) -> Result<Self> {
        CocycleModel::new(d.graph, d.mixers)
    }
}

impl From<CocycleModel> for ModelData {
    fn from(m: CocycleModel) -> Self {
        Self {
            graph: m.graph,
            mixers: m.mixers,
        }
    }
}

impl CocycleModel {
    pub fn new(graph: HeteroclinicGraph, mixers: Vec<Mixer>) -> Result<Self> {
        let dim = graph.dim();
        for n in graph.nodes() {
            if n.word.is_none() {
                return Err(Error::MissingLinearModel(n.id.clone()));
            }
        }
        if !is_eulerian(&graph) {
            return Err(Error::NotEulerian);
        }
        let mut ids = BTreeSet::new();
        for m in &mixers {
            if !ids.insert(&m.id) {
                return Err(Error::InvalidParameter(format!("duplicate mixer id `{}`", m.id)));
            }
            graph.node(&m.node)?;
            if m.index == 0 || m.index >= dim {
                return Err(Error::IndexOutOfRange { index: m.index, dim });
            }
        }
        let mut declared = BTreeSet::new();
        let mut spectral = BTreeSet::new();
        for n in graph.nodes() {
            declared.extend(n.declared_obstructions.iter().copied());
            spectral.extend(&n.obstructions()? - &n.declared_obstructions);
        }
        for e in graph.edges() {
            declared.extend(e.obstructions(dim)?);
        }
        let mixed: BTreeSet<usize> = mixers.iter().map(|m| m.index).collect();
        if let Some(i) = declared.iter().find(|i| !mixed.contains(i) && !spectral.contains(i)) {
            return Err(Error::InvalidParameter(format!(
                "obstructed index {i} has neither a mixer nor an equal-moduli witness"
            )));
        }
        Ok(Self { graph, mixers })
    }

    pub fn graph(&self) -> &HeteroclinicGraph {
        &self.graph
    }

    pub fn mixers(&self) -> &[Mixer] {
        &self.mixers
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    fn word(&self, node: &str) -> Result<&MatrixWord> {
        self.graph
            .node(node)?
            .word
            .as_ref()
            .ok_or_else(|| Error::MissingLinearModel(node.to_string()))
    }

    fn mixer(&self, id: &str) -> Result<&Mixer> {
        self.mixers
            .iter()
            .find(|m| m.id == id)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mixer `{id}`")))
    }

    /// Mixers attached to nodes of the class of `p`.
    fn class_mixers(&self, p: &str) -> Result<Vec<&Mixer>> {
        let class = heteroclinic_class(&self.graph, p)?;
        Ok(self
            .mixers
            .iter()
            .filter(|m| class.node_position(&m.node).is_some())
            .collect())
    }

    /// Shortest node path from `from` to `to` (inclusive), by BFS in edge
    /// order.
    fn path(&self, from: &str, to: &str) -> Option<Vec<String>> {
        let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = BTreeSet::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                let mut out = vec![to.to_string()];
                let mut cur = to;
                while cur != from {
                    cur = parent[cur];
                    out.push(cur.to_string());
                }
                out.reverse();
                return Some(out);
            }
            for e in self.graph.edges().iter().filter(|e| e.src == v) {
                if seen.insert(e.dst.as_str()) {
                    parent.insert(e.dst.as_str(), v);
                    queue.push_back(e.dst.as_str());
                }
            }
        }
        None
    }
}

/// The polytope of maps realizable near `p`: pinned at every index that is
/// neither mechanically obstructed nor served by a mixer in the class.
pub fn realizable_polytope(m: &CocycleModel, p: &str) -> Result<LyapunovPolytope> {
    let d = m.dim();
    let sigma = crate::cocycle::lyapunov_map_of_periodic(m.word(p)?)?;
    let mut free = mechanical_nondomination_indices(&m.graph, p)?;
    free.extend(m.class_mixers(p)?.iter().map(|x| x.index));
    let pinned: BTreeSet<usize> = (0..=d).filter(|i| !free.contains(i)).collect();
    build_polytope(&sigma, &pinned)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    Node(String),
    Mixer(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub symbol: Symbol,
    pub count: usize,
}

/// Run-length encoded word over node words and mixers.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PeriodicWord {
    runs: Vec<Run>,
}

impl PeriodicWord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    /// Append, merging with the last run when the symbol repeats.
    pub fn push(&mut self, symbol: Symbol, count: usize) {
        if count == 0 {
            return;
        }
        match self.runs.last_mut() {
            Some(last) if last.symbol == symbol => last.count += count,
            _ => self.runs.push(Run { symbol, count }),
        }
    }

    /// Number of matrices after expansion.
    pub fn expanded_len(&self, m: &CocycleModel) -> Result<usize> {
        self.runs.iter().try_fold(0usize, |acc, r| {
            let len = match &r.symbol {
                Symbol::Node(id) => m.word(id)?.period(),
                Symbol::Mixer(id) => {
                    m.mixer(id)?;
                    1
                }
            };
            Ok(acc.saturating_add(len.saturating_mul(r.count)))
        })
    }

    pub fn expand(&self, m: &CocycleModel) -> Result<MatrixWord> {
        let mut entries = Vec::new();
        for r in &self.runs {
            let block: Vec<DMatrix<f64>> = match &r.symbol {
                Symbol::Node(id) => m.word(id)?.entries().to_vec(),
                Symbol::Mixer(id) => vec![m.mixer(id)?.matrix(m.dim())],
            };
            for _ in 0..r.count {
                entries.extend(block.iter().cloned());
            }
        }
        MatrixWord::new(entries)
    }

    /// Lyapunov map of the expansion, computed from the runs directly.
    pub fn lyapunov_map(&self, m: &CocycleModel) -> Result<LyapunovMap> {
        let mats = self
            .runs
            .iter()
            .map(|r| match &r.symbol {
                Symbol::Node(id) => {
                    let w = m.word(id)?;
                    Ok((w.product(), w.period()))
                }
                Symbol::Mixer(id) => Ok((m.mixer(id)?.matrix(m.dim()), 1)),
            })
            .collect::<Result<Vec<_>>>()?;
        let runs: Vec<_> = mats
            .iter()
            .zip(&self.runs)
            .map(|((mat, len), r)| (mat, r.count, *len))
            .collect();
        let spec = spectrum_of_weighted_runs(&runs)?;
        LyapunovMap::from_exponents(&spec.exponents)
    }
}

/// An arrangement of coordinate lines held for a share of the time:
/// `arrangement[j]` is the coordinate occupied by line `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub arrangement: Vec<usize>,
    pub weight: f64,
}

/// Diagonal part of a word, or `None` when an entry is not diagonal.
fn diagonal_logs(w: &MatrixWord) -> Option<Vec<f64>> {
    let d = w.dim();
    let mut out = vec![0.0; d];
    for m in w.entries() {
        for r in 0..d {
            for c in 0..d {
                if r != c && m[(r, c)] != 0.0 {
                    return None;
                }
            }
            out[r] += m[(r, r)].abs().ln();
        }
    }
    let p = w.period() as f64;
    Some(out.into_iter().map(|x| x / p).collect())
}

/// Doubly stochastic `D` with `t = D·s`, for `t ≺ s`, both ascending. Built
/// from T-transforms (convex combinations of the identity and a
/// transposition).
fn doubly_stochastic(s: &[f64], t: &[f64]) -> DMatrix<f64> {
    let m = s.len();
    // descending copies
    let mut x: Vec<f64> = s.iter().rev().copied().collect();
    let y: Vec<f64> = t.iter().rev().copied().collect();
    let scale = x.iter().chain(&y).fold(1.0_f64, |a, v| a.max(v.abs()));
    let tol = 1e-13 * scale;
    let mut d = DMatrix::<f64>::identity(m, m);
    for _ in 0..m * m {
        let Some(j) = (0..m).rev().find(|&j| x[j] > y[j] + tol) else {
            break;
        };
        let Some(k) = (j + 1..m).find(|&k| x[k] < y[k] - tol) else {
            break;
        };
        let delta = (x[j] - y[j]).min(y[k] - x[k]);
        let lambda = 1.0 - delta / (x[j] - x[k]);
        let mut tr = DMatrix::<f64>::identity(m, m);
        tr[(j, j)] = lambda;
        tr[(k, k)] = lambda;
        tr[(j, k)] = 1.0 - lambda;
        tr[(k, j)] = 1.0 - lambda;
        let (xj, xk) = (x[j], x[k]);
        x[j] = lambda * xj + (1.0 - lambda) * xk;
        x[k] = lambda * xk + (1.0 - lambda) * xj;
        d = tr * d;
    }
    // back to ascending order
    DMatrix::from_fn(m, m, |a, b| d[(m - 1 - a, m - 1 - b)])
}

/// Perfect matching on the positive support of `d` (Kuhn's algorithm).
fn support_matching(d: &DMatrix<f64>) -> Option<Vec<usize>> {
    let m = d.nrows();
    let mut owner = vec![usize::MAX; m];
    fn augment(
        r: usize,
        d: &DMatrix<f64>,
        owner: &mut [usize],
        seen: &mut [bool],
    ) -> bool {
        for c in 0..d.ncols() {
            if d[(r, c)] > WEIGHT_TOL && !seen[c] {
                seen[c] = true;
                if owner[c] == usize::MAX || augment(owner[c], d, owner, seen) {
                    owner[c] = r;
                    return true;
                }
            }
        }
        false
    }
    for r in 0..m {
        let mut seen = vec![false; m];
        if !augment(r, d, &mut owner, &mut seen) {
            return None;
        }
    }
    let mut perm = vec![0; m];
    for (c, &r) in owner.iter().enumerate() {
        perm[r] = c;
    }
    Some(perm)
}

/// Birkhoff decomposition into (permutation, weight) pairs, weights summing
/// to one.
fn birkhoff(d: &DMatrix<f64>) -> Vec<(Vec<usize>, f64)> {
    let mut rest = d.clone();
    let mut out = Vec::new();
    while let Some(perm) = support_matching(&rest) {
        let w = perm
            .iter()
            .enumerate()
            .map(|(r, &c)| rest[(r, c)])
            .fold(f64::INFINITY, f64::min);
        for (r, &c) in perm.iter().enumerate() {
            rest[(r, c)] -= w;
            if rest[(r, c)] <= WEIGHT_TOL {
                rest[(r, c)] = 0.0;
            }
        }
        out.push((perm, w));
    }
    let total: f64 = out.iter().map(|p| p.1).sum();
    for p in &mut out {
        p.1 /= total;
    }
    out
}

/// Time shares of arrangements realizing the exponents of `target` from the
/// node exponents `s` (ascending), block by block between pinned indices.
pub fn schedule(s: &[f64], target: &LyapunovMap, pinned: &BTreeSet<usize>) -> Result<Vec<Phase>> {
    let d = s.len();
    if target.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: target.dim(),
        });
    }
    let t = target.exponents();
    let cuts: Vec<usize> = pinned.iter().copied().filter(|&i| i <= d).collect();
    // per-block timelines as (end time, block-local permutation)
    let mut timelines: Vec<(usize, Vec<(f64, Vec<usize>)>)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dec = birkhoff(&doubly_stochastic(&s[a..b], &t[a..b]));
        let mut acc = 0.0;
        let line = dec
            .into_iter()
            .map(|(perm, weight)| {
                acc += weight;
                (acc, perm)
            })
            .collect();
        timelines.push((a, line));
    }
    let mut breaks: Vec<f64> = timelines
        .iter()
        .flat_map(|(_, l)| l.iter().map(|p| p.0))
        .collect();
    breaks.sort_by(f64::total_cmp);
    let mut phases = Vec::new();
    let mut start = 0.0;
    for &end in &breaks {
        let end = end.min(1.0);
        if end - start <= WEIGHT_TOL {
            continue;
        }
        let mid = 0.5 * (start + end);
        let mut arrangement: Vec<usize> = (0..d).collect();
        for (offset, line) in &timelines {
            let perm = &line
                .iter()
                .find(|p| p.0 >= mid)
                .unwrap_or_else(|| line.last().expect("nonempty timeline"))
                .1;
            for (j, &c) in perm.iter().enumerate() {
                arrangement[offset + j] = offset + c;
            }
        }
        phases.push(Phase {
            arrangement,
            weight: end - start,
        });
        start = end;
    }
    if start < 1.0 - 1e-9 {
        if let Some(last) = phases.last_mut() {
            last.weight += 1.0 - start;
        }
    }
    Ok(phases)
}

/// Adjacent swaps (1-based mixer indices) taking arrangement `from` to `to`.
fn swaps_between(from: &[usize], to: &[usize]) -> Vec<usize> {
    let d = from.len();
    // at[c] = line at coordinate c, ranked by its target coordinate
    let mut at = vec![0; d];
    for (line, &c) in from.iter().enumerate() {
        at[c] = to[line];
    }
    let mut out = Vec::new();
    for pass in 0..d {
        for c in 0..d.saturating_sub(1 + pass) {
            if at[c] > at[c + 1] {
                at.swap(c, c + 1);
                out.push(c + 1);
            }
        }
    }
    out
}

/// Word holding each phase for `round(weight·n)` repetitions of the node
/// word of `p`, with mixer detours between phases.
pub fn build_word(m: &CocycleModel, p: &str, phases: &[Phase], n: usize) -> Result<PeriodicWord> {
    let d = m.dim();
    let identity: Vec<usize> = (0..d).collect();
    let mut routes: BTreeMap<usize, Vec<Symbol>> = BTreeMap::new();
    let mut word = PeriodicWord::new();
    let mut current = identity.clone();
    let mut emit_swaps = |word: &mut PeriodicWord, from: &[usize], to: &[usize]| -> Result<()> {
        for index in swaps_between(from, to) {
            if let std::collections::btree_map::Entry::Vacant(slot) = routes.entry(index) {
                slot.insert(mixer_route(m, p, index)?);
            }
            for sym in &routes[&index] {
                word.push(sym.clone(), 1);
            }
        }
        Ok(())
    };
    for phase in phases {
        let reps = (phase.weight * n as f64).round() as usize;
        if reps == 0 {
            continue;
        }
        emit_swaps(&mut word, &current, &phase.arrangement)?;
        current = phase.arrangement.clone();
        word.push(Symbol::Node(p.to_string()), reps);
    }
    emit_swaps(&mut word, &current, &identity)?;
    if word.runs.is_empty() {
        word.push(Symbol::Node(p.to_string()), 1);
    }
    Ok(word)
}

/// Symbols applying a mixer of the given index, starting and ending at `p`.
fn mixer_route(m: &CocycleModel, p: &str, index: usize) -> Result<Vec<Symbol>> {
    let mut best: Option<Vec<Symbol>> = None;
    for x in m.mixers.iter().filter(|x| x.index == index) {
        let route = if x.node == p {
            vec![Symbol::Mixer(x.id.clone())]
        } else {
            let (Some(go), Some(back)) = (m.path(p, &x.node), m.path(&x.node, p)) else {
                continue;
            };
            let mut r: Vec<Symbol> = go[1..].iter().map(|v| Symbol::Node(v.clone())).collect();
            r.push(Symbol::Mixer(x.id.clone()));
            r.extend(back[1..back.len() - 1].iter().map(|v| Symbol::Node(v.clone())));
            r
        };
        if best.as_ref().is_none_or(|b| route.len() < b.len()) {
            best = Some(route);
        }
    }
    best.ok_or_else(|| {
        Error::UnreachableWithinModel(format!(
            "mixing across index {index} is needed but no mixer for it is reachable from `{p}`"
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Realization {
    pub word: PeriodicWord,
    pub achieved: LyapunovMap,
    pub error: f64,
    /// Repetition scale of the final word.
    pub scale: usize,
    pub expanded_len: usize,
}

/// Build a periodic word whose Lyapunov map is within `eps` (sup norm) of
/// `target`.
pub fn realize(m: &CocycleModel, p: &str, target: &LyapunovMap, eps: f64) -> Result<Realization> {
    realize_with_cap(m, p, target, eps, DEFAULT_WORD_CAP)
}

pub fn realize_with_cap(
    m: &CocycleModel,
    p: &str,
    target: &LyapunovMap,
    eps: f64,
    cap: usize,
) -> Result<Realization> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let poly = realizable_polytope(m, p)?;
    if let Some(c) = poly.violated(target, eps / 2.0)? {
        return Err(Error::OutsidePolytope(c.label.clone()));
    }
    let s = diagonal_logs(m.word(p)?).ok_or_else(|| {
        Error::UnsupportedModel(format!("node `{p}` has a non-diagonal word"))
    })?;
    if s.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::UnsupportedModel(format!(
            "coordinates of `{p}` are not ordered by ascending exponent: {s:?}"
        )));
    }
    // target projected onto the pinned values; pinned sums then match s
    let mut values = target.values().to_vec();
    let base = poly.base().values();
    for &i in poly.pinned() {
        values[i] = base[i];
    }
    let goal = LyapunovMap::unchecked(values)?;
    let phases = schedule(&s, &goal, poly.pinned())?;

    let mut n = 1usize;
    loop {
        let word = build_word(m, p, &phases, n)?;
        for r in word.runs() {
            if let Symbol::Node(id) = &r.symbol {
                if diagonal_logs(m.word(id)?).is_none() {
                    return Err(Error::UnsupportedModel(format!("node `{id}` has a non-diagonal word")));
                }
            }
        }
        let len = word.expanded_len(m)?;
        if len > cap {
            return Err(Error::UnreachableWithinCap { cap });
        }
        let achieved = word.lyapunov_map(m)?;
        let error = achieved.sup_distance(target);
        if error <= eps {
            return Ok(Realization {
                word,
                achieved,
                error,
                scale: n,
                expanded_len: len,
            });
        }
        n = n.checked_mul(2).ok_or(Error::UnreachableWithinCap { cap })?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BasicSetNode, HeteroclinicEdge};
    use crate::polytope::map_from_exponents;

    fn model_2d() -> CocycleModel {
        let mut g = HeteroclinicGraph::new(2).unwrap();
        g.add_node(BasicSetNode::new("P", 1).with_word(MatrixWord::diagonal(&[0.5, 2.0]).unwrap()))
            .unwrap();
        let mixer = Mixer {
            id: "R".into(),
            node: "P".into(),
            index: 1,
        };
        CocycleModel::new(g, vec![mixer]).unwrap()
    }

    #[test]
    fn mixer_times_node_matches_hand_product() {
        let r = Mixer {
            id: "R".into(),
            node: "P".into(),
            index: 1,
        }
        .matrix(2);
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 2.0]));
        let ar = &a * &r;
        assert_eq!(ar, DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 2.0, 0.0]));
    }

    #[test]
    fn polytope_examples() {
        let p = realizable_polytope(&model_2d(), "P").unwrap();
        let v = p.vertices().unwrap().vertices;
        let l2 = 2f64.ln();
        assert_eq!(v.len(), 2);
        assert!((v[0].values()[1] + l2).abs() < 1e-12);
        assert!(v[1].values()[1].abs() < 1e-12);

        let mut g = HeteroclinicGraph::new(2).unwrap();
        let cat = MatrixWord::from_rows(&[vec![vec![2.0, 1.0], vec![1.0, 1.0]]]).unwrap();
        g.add_node(BasicSetNode::new("P", 1).with_word(cat)).unwrap();
        g.add_edge(HeteroclinicEdge::new("l", "P", "P")).unwrap();
        let m = CocycleModel::new(g, vec![]).unwrap();
        assert_eq!(realizable_polytope(&m, "P").unwrap().vertices().unwrap().vertices.len(), 1);
    }

    #[test]
    fn base_map_is_hit_exactly() {
        let m = model_2d();
        let sigma = map_from_exponents(&[-2f64.ln(), 2f64.ln()]).unwrap();
        let r = realize(&m, "P", &sigma, 1e-9).unwrap();
        assert_eq!(r.word.runs().len(), 1);
        assert_eq!(r.error, 0.0);
    }

    #[test]
    fn flat_target_is_hit_exactly() {
        let m = model_2d();
        let zero = LyapunovMap::new(vec![0.0, 0.0, 0.0]).unwrap();
        let r = realize(&m, "P", &zero, 1e-9).unwrap();
        assert!(r.error < 1e-12, "{r:?}");
        assert_eq!(r.expanded_len, 4);
        let expanded = r.word.expand(&m).unwrap();
        let direct = crate::cocycle::lyapunov_map_of_periodic(&expanded).unwrap();
        assert!(direct.sup_distance(&zero) < 1e-12);
    }

    #[test]
    fn interior_target_within_eps() {
        let m = model_2d();
        let tau = LyapunovMap::new(vec![0.0, -0.5 * 2f64.ln(), 0.0]).unwrap();
        let r = realize(&m, "P", &tau, 1e-2).unwrap();
        assert!(r.error <= 1e-2);
        assert!(r.achieved.values()[2].abs() < 1e-12);
    }

    #[test]
    fn outside_target_names_the_constraint() {
        let m = model_2d();
        let tau = LyapunovMap::unchecked(vec![0.0, -1.0, 0.0]).unwrap();
        assert!(matches!(realize(&m, "P", &tau, 1e-3), Err(Error::OutsidePolytope(_))));
    }

    #[test]
    fn cap_is_enforced() {
        let m = model_2d();
        let tau = LyapunovMap::new(vec![0.0, -0.3, 0.0]).unwrap();
        assert_eq!(
            realize_with_cap(&m, "P", &tau, 1e-6, 50),
            Err(Error::UnreachableWithinCap { cap: 50 })
        );
    }

    #[test]
    fn doubly_stochastic_maps_s_to_t() {
        let s = [-3.0, -1.0, 0.5, 3.5];
        let t = [-2.0, -0.5, 0.5, 2.0];
        let d = doubly_stochastic(&s, &t);
        for r in 0..4 {
            let row: f64 = d.row(r).sum();
            let col: f64 = d.column(r).sum();
            assert!((row - 1.0).abs() < 1e-12 && (col - 1.0).abs() < 1e-12);
            let v: f64 = (0..4).map(|c| d[(r, c)] * s[c]).sum();
            assert!((v - t[r]).abs() < 1e-12);
        }
        let parts = birkhoff(&d);
        let total: f64 = parts.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_dim_block_with_two_mixers() {
        let mut g = HeteroclinicGraph::new(3).unwrap();
        g.add_node(BasicSetNode::new("P", 1).with_word(MatrixWord::diagonal(&[0.25, 2.0, 4.0]).unwrap()))
            .unwrap();
        let mixers = vec![
            Mixer {
                id: "R1".into(),
                node: "P".into(),
                index: 1,
            },
            Mixer {
                id: "R2".into(),
                node: "P".into(),
                index: 2,
            },
        ];
        let m = CocycleModel::new(g, mixers).unwrap();
        let poly = realizable_polytope(&m, "P").unwrap();
        for tau in poly.sample(5, 11).unwrap() {
            let r = realize(&m, "P", &tau, 1e-2).unwrap();
            assert!(r.error <= 1e-2);
            assert!(poly.contains(&r.achieved, 1e-2 + 1e-6).unwrap());
        }
    }

    #[test]
    fn remote_mixer_is_reached_by_a_detour() {
        let mut g = HeteroclinicGraph::new(2).unwrap();
        g.add_node(BasicSetNode::new("P", 1).with_word(MatrixWord::diagonal(&[0.5, 2.0]).unwrap()))
            .unwrap();
        g.add_node(BasicSetNode::new("Q", 1).with_word(MatrixWord::diagonal(&[0.25, 3.0]).unwrap()))
            .unwrap();
        g.add_edge(HeteroclinicEdge::new("pq", "P", "Q")).unwrap();
        g.add_edge(HeteroclinicEdge::new("qp", "Q", "P")).unwrap();
        let mixer = Mixer {
            id: "R".into(),
            node: "Q".into(),
            index: 1,
        };
        let m = CocycleModel::new(g, vec![mixer]).unwrap();
        let tau = LyapunovMap::new(vec![0.0, -0.2, 0.0]).unwrap();
        let r = realize(&m, "P", &tau, 1e-2).unwrap();
        assert!(r.error <= 1e-2);
        assert!(r.word.runs().iter().any(|x| x.symbol == Symbol::Node("Q".into())));
    }

    #[test]
    fn missing_mixer_is_unreachable() {
        let mut g = HeteroclinicGraph::new(2).unwrap();
        g.add_node(BasicSetNode::new("P", 1).with_word(MatrixWord::diagonal(&[0.5, 2.0]).unwrap()))
            .unwrap();
        g.add_node(BasicSetNode::new("Q", 1).with_word(MatrixWord::diagonal(&[0.5, 2.0]).unwrap()))
            .unwrap();
        let mixer = Mixer {
            id: "R".into(),
            node: "Q".into(),
            index: 1,
        };
        let m = CocycleModel::new(g, vec![mixer]).unwrap();
        // Q lies outside the class of P, so the polytope is a point
        let tau = LyapunovMap::new(vec![0.0, -0.2, 0.0]).unwrap();
        assert!(matches!(realize(&m, "P", &tau, 1e-2), Err(Error::OutsidePolytope(_))));
        assert!(mixer_route(&m, "P", 1).is_err());
    }
}
