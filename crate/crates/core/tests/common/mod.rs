//! Independent oracles and generators shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use hetclass::cocycle::MatrixWord;
use hetclass::graph::{BasicSetNode, EdgeConnectivity, HeteroclinicEdge, HeteroclinicGraph, TangencyData};
use hetclass::rewrite::{RewriteReceipt, RewriteStep};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};

pub fn node_id(k: usize) -> String {
    format!("N{k}")
}

/// Graph of dimension 2 on `n` index-1 nodes with the given edges.
pub fn simple_graph(n: usize, edges: &[(usize, usize)]) -> HeteroclinicGraph {
    let mut g = HeteroclinicGraph::new(2).unwrap();
    for k in 0..n {
        g.add_node(BasicSetNode::new(node_id(k), 1)).unwrap();
    }
    for (j, &(s, t)) in edges.iter().enumerate() {
        g.add_edge(HeteroclinicEdge::new(format!("e{j}"), node_id(s), node_id(t))).unwrap();
    }
    g
}

/// Every multiset of at most `max_edges` ordered pairs on `n` nodes.
pub fn all_multigraphs(n: usize, max_edges: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|s| (0..n).map(move |t| (s, t))).collect();
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<(Vec<(usize, usize)>, usize)> = vec![(Vec::new(), 0)];
    for _ in 0..max_edges {
        let mut next = Vec::new();
        for (edges, from) in &frontier {
            for (k, &p) in pairs.iter().enumerate().skip(*from) {
                let mut e = edges.clone();
                e.push(p);
                out.push(e.clone());
                next.push((e, k));
            }
        }
        frontier = next;
    }
    out
}

/// Depth-first search for a closed trail using every edge exactly once.
pub fn brute_eulerian(edges: &[(usize, usize)]) -> bool {
    fn extend(edges: &[(usize, usize)], used: &mut [bool], at: usize, start: usize, left: usize) -> bool {
        if left == 0 {
            return at == start;
        }
        for k in 0..edges.len() {
            if !used[k] && edges[k].0 == at {
                used[k] = true;
                if extend(edges, used, edges[k].1, start, left - 1) {
                    return true;
                }
                used[k] = false;
            }
        }
        false
    }
    if edges.is_empty() {
        return true;
    }
    // any circuit can be rotated to start with edge 0
    let mut used = vec![false; edges.len()];
    used[0] = true;
    extend(edges, &mut used, edges[0].1, edges[0].0, edges.len() - 1)
}

fn reach(n: usize, edges: &[(usize, usize)], keep: impl Fn(usize) -> bool) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (v, row) in r.iter_mut().enumerate() {
        row[v] = true;
    }
    for (k, &(s, t)) in edges.iter().enumerate() {
        if keep(k) {
            r[s][t] = true;
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][m] && r[m][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

fn live_nodes(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    (0..n).filter(|&v| edges.iter().any(|&(s, t)| s == v || t == v)).collect()
}

fn mutually_reachable(r: &[Vec<bool>], live: &[usize]) -> bool {
    live.iter().all(|&a| live.iter().all(|&b| r[a][b]))
}

/// Smallest number of edges whose removal leaves some pair of originally
/// non-isolated nodes without a directed path, by exhaustive search.
pub fn brute_connectivity(n: usize, edges: &[(usize, usize)]) -> EdgeConnectivity {
    if edges.is_empty() {
        return if n <= 1 { EdgeConnectivity::Infinite } else { EdgeConnectivity::Level(0) };
    }
    let live = live_nodes(n, edges);
    if !mutually_reachable(&reach(n, edges, |_| true), &live) {
        return EdgeConnectivity::Level(0);
    }
    if live.len() < 2 {
        return EdgeConnectivity::Infinite;
    }
    let m = edges.len();
    let mut best = m;
    for mask in 0u32..(1 << m) {
        let removed = mask.count_ones() as usize;
        if removed >= best {
            continue;
        }
        let r = reach(n, edges, |k| mask & (1 << k) == 0);
        if !mutually_reachable(&r, &live) {
            best = removed;
        }
    }
    EdgeConnectivity::Level(best)
}

/// Vertices of `{τ convex, τ ≥ σ, τ_i = σ_i on pinned}` by solving every
/// square system of active constraints.
pub fn oracle_vertices(sigma: &[f64], pinned: &BTreeSet<usize>) -> Vec<Vec<f64>> {
    let d = sigma.len() - 1;
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 1..d {
        let mut c = vec![0.0; d + 1];
        c[i - 1] = 1.0;
        c[i] = -2.0;
        c[i + 1] = 1.0;
        rows.push((c, 0.0));
    }
    for i in 0..=d {
        if !pinned.contains(&i) {
            let mut c = vec![0.0; d + 1];
            c[i] = 1.0;
            rows.push((c, sigma[i]));
        }
    }
    let free = d + 1 - pinned.len();
    let feasible = |tau: &[f64]| {
        rows.iter()
            .all(|(c, b)| c.iter().zip(tau).map(|(x, y)| x * y).sum::<f64>() >= b - 1e-9)
    };
    let mut found: Vec<Vec<f64>> = Vec::new();
    for subset in combinations(rows.len(), free) {
        let mut a = DMatrix::zeros(d + 1, d + 1);
        let mut b = DVector::zeros(d + 1);
        let mut r = 0;
        for &i in pinned {
            a[(r, i)] = 1.0;
            b[r] = sigma[i];
            r += 1;
        }
        for &k in &subset {
            for j in 0..=d {
                a[(r, j)] = rows[k].0[j];
            }
            b[r] = rows[k].1;
            r += 1;
        }
        let Some(x) = a.lu().solve(&b) else { continue };
        let tau: Vec<f64> = x.iter().copied().collect();
        if tau.iter().all(|v| v.is_finite())
            && feasible(&tau)
            && !found.iter().any(|f| sup_dist(f, &tau) < 1e-7)
        {
            found.push(tau);
        }
    }
    found
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Same point sets up to `tol` in the sup norm.
pub fn same_points(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|p| b.iter().any(|q| sup_dist(p, q) < tol))
        && b.iter().all(|q| a.iter().any(|p| sup_dist(p, q) < tol))
}

/// Strictly increasing exponents summed into a map, as plain values.
pub fn random_convex_map(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let mut exps: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    exps.sort_by(f64::total_cmp);
    let mut v = vec![0.0];
    for e in exps {
        v.push(v.last().unwrap() + e);
    }
    v
}

pub fn henon(a: f64, b: f64, x: &[f64]) -> [f64; 2] {
    [1.0 - a * x[0] * x[0] + x[1], b * x[0]]
}

/// Random valid graph for rewrite tests: dimension 3 to 5, nodes with
/// optional diagonal words (repeated moduli give spectral obstructions),
/// edges with optional tangencies or declared obstructions, and some loops.
pub fn random_rewrite_graph(rng: &mut impl Rng) -> HeteroclinicGraph {
    let dim = rng.random_range(3..=5usize);
    let mut g = HeteroclinicGraph::new(dim).unwrap();
    let n = rng.random_range(1..=4usize);
    for k in 0..n {
        let index = rng.random_range(1..dim);
        let mut node = BasicSetNode::new(node_id(k), index);
        if rng.random_bool(0.5) {
            let mut values: Vec<f64> = (0..dim)
                .map(|i| {
                    let r = rng.random_range(1..=2) as f64;
                    if i < index { 0.5f64.powf(r) } else { 2f64.powf(r) }
                })
                .collect();
            values.sort_by(f64::total_cmp);
            node = node.with_word(MatrixWord::diagonal(&values).unwrap());
        }
        if rng.random_bool(0.3) {
            node = node.with_obstructions([rng.random_range(1..dim)]);
        }
        g.add_node(node).unwrap();
    }
    let m = rng.random_range(1..=6usize);
    for j in 0..m {
        let s = rng.random_range(0..n);
        let t = if rng.random_bool(0.25) { s } else { rng.random_range(0..n) };
        let mut e = HeteroclinicEdge::new(format!("e{j}"), node_id(s), node_id(t));
        match rng.random_range(0..3) {
            0 => {
                let t = random_tangency(rng, dim);
                e = e.with_tangency(t);
            }
            1 => e = e.with_obstructions([rng.random_range(1..dim)]),
            _ => {}
        }
        g.add_edge(e).unwrap();
    }
    g
}

fn random_tangency(rng: &mut impl Rng, dim: usize) -> TangencyData {
    loop {
        let t = TangencyData::new(rng.random_range(1..dim), rng.random_range(1..dim), rng.random_range(1..dim));
        if t.validate(dim).is_ok() {
            return t;
        }
    }
}

fn random_subset(rng: &mut impl Rng, set: &BTreeSet<usize>) -> BTreeSet<usize> {
    set.iter().copied().filter(|_| rng.random_bool(0.5)).collect()
}

/// A rewrite step that is valid on `g`: a gather along a random trail, or a
/// robustize of a random loop, with indices drawn from what is witnessed.
pub fn random_step(rng: &mut impl Rng, g: &HeteroclinicGraph) -> RewriteStep {
    let dim = g.dim();
    let loops: Vec<_> = g.edges().iter().filter(|e| e.is_loop()).collect();
    if !loops.is_empty() && rng.random_bool(0.4) {
        let e = loops[rng.random_range(0..loops.len())];
        let witnessed = &e.obstructions(dim).unwrap() | &g.node(&e.src).unwrap().obstructions().unwrap();
        return RewriteStep::Robustize {
            edge: e.id.clone(),
            indices: random_subset(rng, &witnessed),
            k: rng.random_range(2..=4),
        };
    }
    let edges = g.edges();
    let first = &edges[rng.random_range(0..edges.len())];
    let mut trail = vec![first.id.clone()];
    let mut witnessed = first.obstructions(dim).unwrap();
    let mut at = first.dst.clone();
    let len = rng.random_range(1..=4usize);
    while trail.len() < len {
        let next: Vec<_> = edges.iter().filter(|e| e.src == at && !trail.contains(&e.id)).collect();
        if next.is_empty() {
            break;
        }
        let e = next[rng.random_range(0..next.len())];
        witnessed.extend(g.node(&at).unwrap().obstructions().unwrap());
        witnessed.extend(e.obstructions(dim).unwrap());
        trail.push(e.id.clone());
        at = e.dst.clone();
    }
    RewriteStep::Gather {
        trail,
        indices: random_subset(rng, &witnessed),
    }
}

/// Checks the documented effect of `step` taking `before` to `after`.
pub fn check_rewrite(
    before: &HeteroclinicGraph,
    step: &RewriteStep,
    after: &HeteroclinicGraph,
    receipt: &RewriteReceipt,
) -> Result<(), String> {
    let dim = before.dim();
    let obs = |g: &HeteroclinicGraph, id: &str| g.edge(id).unwrap().obstructions(dim).unwrap();
    let ensure = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("{what}: {step:?}")) };
    ensure(after.generation() == before.generation() + 1, "generation")?;
    match step {
        RewriteStep::Gather { trail, indices } => {
            let first = before.edge(&trail[0]).unwrap();
            let last = before.edge(trail.last().unwrap()).unwrap();
            ensure(receipt.consumed_edges == *trail, "consumed edges")?;
            ensure(receipt.produced_edges.len() == 1 && receipt.produced_nodes.is_empty(), "products")?;
            ensure(after.edges().len() + trail.len() == before.edges().len() + 1, "edge count")?;
            ensure(after.nodes().len() == before.nodes().len(), "node count")?;
            let new = after.edge(&receipt.produced_edges[0]).unwrap();
            ensure(new.src == first.src && new.dst == last.dst, "new edge endpoints")?;
            let carried: BTreeSet<usize> = trail.iter().flat_map(|id| obs(before, id)).filter(|i| !indices.contains(i)).collect();
            ensure(obs(after, &new.id) == indices | &carried, "new edge obstructions")?;
            for e in before.edges().iter().filter(|e| !trail.contains(&e.id)) {
                ensure(after.edge(&e.id).ok() == Some(e), "untouched edge")?;
            }
            for id in trail {
                ensure(after.edge(id).is_err() || receipt.produced_edges[0] == *id, "consumed edge removed")?;
            }
            let interior: BTreeSet<&String> = trail[..trail.len() - 1].iter().map(|id| &before.edge(id).unwrap().dst).collect();
            for n in before.nodes() {
                let now = after.node(&n.id).unwrap();
                let want = if interior.contains(&n.id) {
                    &n.obstructions().unwrap() - indices
                } else {
                    n.obstructions().unwrap()
                };
                let got = now.obstructions().unwrap();
                ensure(got == want, &format!("node {} obstructions {got:?}, want {want:?}", n.id))?;
            }
        }
        RewriteStep::Robustize { edge, indices, k } => {
            let l = before.edge(edge).unwrap();
            let anchor = before.node(&l.src).unwrap();
            ensure(after.edge(edge).is_err(), "loop removed")?;
            ensure(receipt.produced_nodes.len() == k - 1, "gadget nodes")?;
            ensure(receipt.produced_edges.len() == k * k, "gadget edges")?;
            let carried = &obs(before, edge) - indices;
            let mut union = BTreeSet::new();
            let mut gadget = HeteroclinicGraph::new(dim).unwrap();
            gadget.add_node(anchor.clone()).unwrap();
            for id in &receipt.produced_nodes {
                let n = after.node(id).unwrap();
                ensure(n.index == anchor.index && n.obstructions().unwrap() == *indices, "gadget node")?;
                gadget.add_node(n.clone()).unwrap();
            }
            for id in &receipt.produced_edges {
                let e = after.edge(id).unwrap();
                let o = obs(after, id);
                ensure(e.infinite_multiplicity && o.is_superset(indices), "gadget edge")?;
                ensure((&o - indices).is_subset(&carried), "gadget edge extras")?;
                union.extend(o);
                gadget.add_edge(e.clone()).unwrap();
            }
            ensure(union == indices | &carried, "gadget keeps loop obstructions")?;
            ensure(hetclass::graph::edge_connectivity(&gadget).at_least(*k), "gadget connectivity")?;
            for e in before.edges().iter().filter(|e| e.id != *edge) {
                ensure(after.edge(&e.id).ok() == Some(e), "untouched edge")?;
            }
            for n in before.nodes() {
                ensure(after.node(&n.id).ok() == Some(n), "untouched node")?;
            }
        }
    }
    Ok(())
}
