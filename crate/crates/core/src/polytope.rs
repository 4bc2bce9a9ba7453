//! Lyapunov maps and the polytope of convex maps `τ ≥ σ` pinned to `σ` on a
//! set of indices.
//!
//! Coordinates are the partial sums `τ_1, …, τ_d` (`τ_0 ≡ 0`), not the
//! exponents. With both `0` and `d` pinned, convexity bounds every `τ_i` by
//! the chord `i·τ_d/d`, so the polytope is always bounded; the recession
//! cone check is kept anyway and reported as an error if it ever finds a
//! ray.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::combinations;

/// Convexity slack accepted by [`LyapunovMap::new`].
pub const CONVEXITY_TOL: f64 = 1e-9;
/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Vertices closer than this (sup norm) are merged.
pub const VERTEX_DEDUP_TOL: f64 = 1e-7;

const RANK_TOL: f64 = 1e-10;

/// `i ↦ σ_i`, the partial sums of ascending exponents.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LyapunovMap {
    values: Vec<f64>,
}

impl LyapunovMap {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::check(&values, CONVEXITY_TOL)?;
        Ok(Self { values })
    }

    /// Like [`LyapunovMap::new`] without the convexity check; `σ_0 = 0` is
    /// still required. Used for candidate maps that membership tests judge.
    pub fn unchecked(values: Vec<f64>) -> Result<Self> {
        Self::check_origin(&values)?;
        Ok(Self { values })
    }

    fn check_origin(values: &[f64]) -> Result<()> {
        match values.first() {
            None => Err(Error::InvalidLyapunovMap("needs at least σ_0".into())),
            Some(v) if *v != 0.0 => Err(Error::InvalidLyapunovMap(format!("σ_0 = {v}, expected 0"))),
            _ if values.iter().any(|v| !v.is_finite()) => {
                Err(Error::InvalidLyapunovMap("non-finite value".into()))
            }
            _ => Ok(()),
        }
    }

    fn check(values: &[f64], tol: f64) -> Result<()> {
        Self::check_origin(values)?;
        for i in 1..values.len().saturating_sub(1) {
            let second = values[i + 1] - 2.0 * values[i] + values[i - 1];
            if second < -tol {
                return Err(Error::InvalidLyapunovMap(format!(
                    "not convex at {i} (second difference {second:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn from_exponents(exponents: &[f64]) -> Result<Self> {
        map_from_exponents(exponents)
    }

    pub fn dim(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        Self::check(&self.values, tol).is_ok()
    }

    /// First differences, `λ_i = σ_i − σ_{i−1}`.
    pub fn exponents(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn sup_distance(&self, other: &LyapunovMap) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Partial sums with `σ_0 = 0`.
pub fn map_from_exponents(exponents: &[f64]) -> Result<LyapunovMap> {
    if exponents.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::ExponentsNotAscending);
    }
    let mut values = Vec::with_capacity(exponents.len() + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for e in exponents {
        acc += e;
        values.push(acc);
    }
    LyapunovMap::unchecked(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintKind {
    /// `a·τ = b`
    Equal,
    /// `a·τ ≥ b`
    AtLeast,
}

/// Linear constraint over `τ_1..τ_d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub label: String,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub kind: ConstraintKind,
}

impl Constraint {
    fn eval(&self, tau: &[f64]) -> f64 {
        self.coeffs.iter().zip(tau).map(|(a, t)| a * t).sum::<f64>() - self.rhs
    }

    fn holds(&self, tau: &[f64], tol: f64) -> bool {
        let r = self.eval(tau);
        match self.kind {
            ConstraintKind::Equal => r.abs() <= tol,
            ConstraintKind::AtLeast => r >= -tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovPolytope {
    dim: usize,
    base: LyapunovMap,
    pinned: BTreeSet<usize>,
    constraints: Vec<Constraint>,
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    if i >= 1 {
        v[i - 1] = 1.0;
    }
    v
}

/// The polytope of convex `τ ≥ σ` with `τ_i = σ_i` for `i ∈ pinned`.
pub fn build_polytope(sigma: &LyapunovMap, pinned: &BTreeSet<usize>) -> Result<LyapunovPolytope> {
    let d = sigma.dim();
    for must in [0, d] {
        if !pinned.contains(&must) {
            return Err(Error::MissingPinnedIndex { missing: must, dim: d });
        }
    }
    if let Some(&bad) = pinned.iter().find(|&&i| i > d) {
        return Err(Error::IndexOutOfRange { index: bad, dim: d });
    }
    let s = sigma.values();
    let mut constraints = Vec::new();
    for i in 1..=d {
        if pinned.contains(&i) {
            constraints.push(Constraint {
                label: format!("tau_{i} = sigma_{i}"),
                coeffs: unit(d, i),
                rhs: s[i],
                kind: ConstraintKind::Equal,
            });
        }
    }
    for i in 1..d {
        if !pinned.contains(&i) {
            constraints.push(Constraint {
                label: format!("tau_{i} >= sigma_{i}"),
                coeffs: unit(d, i),
                rhs: s[i],
                kind: ConstraintKind::AtLeast,
            });
        }
    }
    for i in 1..d {
        let mut coeffs = vec![0.0; d];
        coeffs[i] += 1.0;
        coeffs[i - 1] -= 2.0;
        if i >= 2 {
            coeffs[i - 2] += 1.0;
        }
        constraints.push(Constraint {
            label: format!("convex at {i}"),
            coeffs,
            rhs: 0.0,
            kind: ConstraintKind::AtLeast,
        });
    }
    Ok(LyapunovPolytope {
        dim: d,
        base: sigma.clone(),
        pinned: pinned.clone(),
        constraints,
    })
}

/// Outcome of vertex enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexSet {
    pub vertices: Vec<LyapunovMap>,
    /// Dimension of the affine hull of the vertices.
    pub hull_dim: usize,
}

impl LyapunovPolytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &LyapunovMap {
        &self.base
    }

    pub fn pinned(&self) -> &BTreeSet<usize> {
        &self.pinned
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Codimension of the affine subspace cut out by the equalities, i.e. the
    /// rank of the equality system (`#I − 1`).
    pub fn equality_codimension(&self) -> usize {
        let rows: Vec<&Constraint> = self
            .constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Equal)
            .collect();
        if rows.is_empty() {
            return 0;
        }
        let m = DMatrix::from_fn(rows.len(), self.dim, |r, c| rows[r].coeffs[c]);
        m.rank(RANK_TOL)
    }

    /// First violated constraint at `tau`, if any.
    pub fn violated(&self, tau: &LyapunovMap, tol: f64) -> Result<Option<&Constraint>> {
        if tau.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: tau.dim(),
            });
        }
        let t = &tau.values()[1..];
        Ok(self.constraints.iter().find(|c| !c.holds(t, tol)))
    }

    pub fn contains(&self, tau: &LyapunovMap, tol: f64) -> Result<bool> {
        Ok(self.violated(tau, tol)?.is_none())
    }

    fn free_indices(&self) -> Vec<usize> {
        (1..self.dim).filter(|i| !self.pinned.contains(i)).collect()
    }

    /// Inequalities restricted to the free coordinates: rows `(a, b)` meaning
    /// `a·y ≥ b` where `y` are the non-pinned `τ_i`.
    fn reduced_inequalities(&self) -> (Vec<usize>, Vec<(Vec<f64>, f64)>) {
        let free = self.free_indices();
        let s = self.base.values();
        let rows = self
            .constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::AtLeast)
            .map(|c| {
                let mut rhs = c.rhs;
                for i in 1..=self.dim {
                    if self.pinned.contains(&i) {
                        rhs -= c.coeffs[i - 1] * s[i];
                    }
                }
                let a = free.iter().map(|&i| c.coeffs[i - 1]).collect();
                (a, rhs)
            })
            .collect();
        (free, rows)
    }

    fn lift(&self, free: &[usize], y: &[f64]) -> LyapunovMap {
        let mut values = self.base.values().to_vec();
        for (k, &i) in free.iter().enumerate() {
            values[i] = y[k];
        }
        LyapunovMap { values }
    }

    /// Extreme rays of the recession cone `{r : a·r ≥ 0}` in free
    /// coordinates.
    pub fn recession_rays(&self) -> Vec<Vec<f64>> {
        let (free, rows) = self.reduced_inequalities();
        let n = free.len();
        if n == 0 {
            return Vec::new();
        }
        let mut rays: Vec<Vec<f64>> = Vec::new();
        for subset in combinations(rows.len(), n - 1) {
            let r: Vec<f64> = if n == 1 {
                vec![1.0]
            } else {
                // pad to square so the SVD yields a full right basis
                let m = DMatrix::from_fn(n, n, |r, c| if r < n - 1 { rows[subset[r]].0[c] } else { 0.0 });
                let svd = m.svd(false, true);
                let Some(vt) = svd.v_t else { continue };
                let rank = svd.singular_values.iter().filter(|&&s| s > RANK_TOL).count();
                if rank != n - 1 {
                    continue;
                }
                let k = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map_or(n - 1, |(k, _)| k);
                (0..n).map(|c| vt[(k, c)]).collect()
            };
            for sign in [1.0, -1.0] {
                let cand: Vec<f64> = r.iter().map(|x| sign * x).collect();
                let ok = rows
                    .iter()
                    .all(|(a, _)| a.iter().zip(&cand).map(|(p, q)| p * q).sum::<f64>() >= -1e-12);
                if ok && !rays.iter().any(|q| sup(q, &cand) < 1e-9) {
                    rays.push(cand);
                }
            }
        }
        rays
    }

    /// All extreme points, sorted lexicographically.
    pub fn vertices(&self) -> Result<VertexSet> {
        if self.dim > 10 {
            return Err(Error::InvalidParameter(format!(
                "vertex enumeration supports d ≤ 10, got {}",
                self.dim
            )));
        }
        let rays = self.recession_rays();
        if !rays.is_empty() {
            return Err(Error::PolytopeUnbounded { rays });
        }
        let (free, rows) = self.reduced_inequalities();
        let n = free.len();
        let mut found: Vec<LyapunovMap> = Vec::new();
        if n == 0 {
            found.push(self.base.clone());
        } else {
            for subset in combinations(rows.len(), n) {
                let a = DMatrix::from_fn(n, n, |r, c| rows[subset[r]].0[c]);
                let b = DVector::from_fn(n, |r, _| rows[subset[r]].1);
                let lu = a.clone().full_piv_lu();
                if a.rank(RANK_TOL) < n {
                    continue;
                }
                let Some(y) = lu.solve(&b) else { continue };
                let feasible = rows.iter().all(|(a, b)| {
                    a.iter().zip(y.iter()).map(|(p, q)| p * q).sum::<f64>() - b >= -1e-9
                });
                if !feasible {
                    continue;
                }
                let v = self.lift(&free, y.as_slice());
                if !found.iter().any(|w| w.sup_distance(&v) < VERTEX_DEDUP_TOL) {
                    found.push(v);
                }
            }
        }
        found.sort_by(|a, b| {
            a.values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let hull_dim = if found.len() <= 1 {
            0
        } else {
            let v0 = &found[0].values;
            let m = DMatrix::from_fn(found.len() - 1, self.dim, |r, c| {
                found[r + 1].values[c + 1] - v0[c + 1]
            });
            m.rank(1e-8)
        };
        Ok(VertexSet {
            vertices: found,
            hull_dim,
        })
    }

    /// `n` points as Dirichlet-weighted convex combinations of the vertices.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<LyapunovMap>> {
        let verts = self.vertices()?.vertices;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                let weights: Vec<f64> = verts
                    .iter()
                    .map(|_| {
                        let u: f64 = rng.random();
                        -(1.0 - u).ln()
                    })
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut values = vec![0.0; self.dim + 1];
                for (w, v) in weights.iter().zip(&verts) {
                    for (acc, x) in values.iter_mut().zip(&v.values) {
                        *acc += w / total * x;
                    }
                }
                // pinned coordinates are exact
                for &i in &self.pinned {
                    values[i] = self.base.values[i];
                }
                LyapunovMap { values }
            })
            .collect())
    }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleMembership {
    pub member: bool,
    pub lambda_witness: Option<f64>,
}

/// Membership in the heterodimensional-cycle candidate set: convex `τ` with
/// `τ ≥ τ_λ = λ·σ_P + (1−λ)·σ_Q` and equality on `pinned`, for some
/// `λ ∈ [0,1]`. The witness is the midpoint of the feasible `λ`-interval.
pub fn cycle_polytope_contains(
    sigma_p: &LyapunovMap,
    sigma_q: &LyapunovMap,
    pinned: &BTreeSet<usize>,
    tau: &LyapunovMap,
    tol: f64,
) -> Result<CycleMembership> {
    let d = sigma_p.dim();
    for other in [sigma_q.dim(), tau.dim()] {
        if other != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: other,
            });
        }
    }
    for must in [0, d] {
        if !pinned.contains(&must) {
            return Err(Error::MissingPinnedIndex { missing: must, dim: d });
        }
    }
    let no = CycleMembership {
        member: false,
        lambda_witness: None,
    };
    if !tau.is_convex(tol) {
        return Ok(no);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for i in 0..=d {
        let q = sigma_q.values[i];
        let delta = sigma_p.values[i] - q;
        let r = tau.values[i] - q;
        // constraint on λ·delta relative to r
        if pinned.contains(&i) {
            if delta.abs() <= f64::EPSILON * q.abs().max(1.0) {
                if r.abs() > tol {
                    return Ok(no);
                }
            } else {
                let a = (r - tol) / delta;
                let b = (r + tol) / delta;
                lo = lo.max(a.min(b));
                hi = hi.min(a.max(b));
            }
        } else if delta > 0.0 {
            hi = hi.min((r + tol) / delta);
        } else if delta < 0.0 {
            lo = lo.max((r + tol) / delta);
        } else if r < -tol {
            return Ok(no);
        }
    }
    if lo > hi {
        return Ok(no);
    }
    Ok(CycleMembership {
        member: true,
        lambda_witness: Some(0.5 * (lo + hi)),
    })
}
