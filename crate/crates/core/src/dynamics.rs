//! Explicit polynomial diffeomorphisms with exact derivatives, periodic
//! orbit search, one-dimensional invariant manifolds of planar saddles, and
//! detection of homoclinic tangencies.
//!
//! Conventions, stated exactly:
//! - Hénon: `(x, y) ↦ (1 − a·x² + y, b·x)`, Jacobian `[[−2a·x, 1], [b, 0]]`.
//! - Linear torus: `x ↦ M·x` on the plane, periodicity taken modulo `Z²`.
//! - Linear: `x ↦ M·x` on the plane for any invertible real `M`.
//! - Cubic 3-D: `(x, y, z) ↦ (y, z, a + b·x + c·y + e·z − z³)`, Jacobian
//!   `[[0, 1, 0], [0, 0, 1], [b, c, e − 3z²]]`, determinant `b`.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cocycle::{classify_periodic, MatrixWord, PeriodicClass, MULTIPLICITY_TOL};
use crate::error::{Error, Result};
use crate::graph::{BasicSetNode, HeteroclinicEdge, HeteroclinicGraph, TangencyData};

/// Spatial tolerance for merging periodic orbits.
pub const ORBIT_DEDUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapModel {
    Henon { a: f64, b: f64 },
    LinearTorus { matrix: [[i64; 2]; 2] },
    Linear { matrix: [[f64; 2]; 2] },
    Cubic3d { a: f64, b: f64, c: f64, e: f64 },
}

impl MapModel {
    pub fn henon(a: f64, b: f64) -> Result<Self> {
        let m = Self::Henon { a, b };
        m.validate()?;
        Ok(m)
    }

    pub fn linear_torus(matrix: [[i64; 2]; 2]) -> Result<Self> {
        let m = Self::LinearTorus { matrix };
        m.validate()?;
        Ok(m)
    }

    pub fn linear(matrix: [[f64; 2]; 2]) -> Result<Self> {
        let m = Self::Linear { matrix };
        m.validate()?;
        Ok(m)
    }

    pub fn cubic3d(a: f64, b: f64, c: f64, e: f64) -> Result<Self> {
        let m = Self::Cubic3d { a, b, c, e };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Henon { a, b } => {
                if !a.is_finite() || !b.is_finite() || b == 0.0 {
                    return Err(Error::InvalidParameter(format!("Hénon needs finite a and b != 0 (a = {a}, b = {b})")));
                }
            }
            Self::LinearTorus { matrix: m } => {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if det.abs() != 1 {
                    return Err(Error::InvalidParameter(format!("torus matrix must be unimodular (det = {det})")));
                }
            }
            Self::Linear { matrix: m } => {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if !det.is_finite() || det == 0.0 {
                    return Err(Error::InvalidParameter(format!("linear map must be invertible (det = {det})")));
                }
            }
            Self::Cubic3d { a, b, c, e } => {
                if [a, b, c, e].iter().any(|v| !v.is_finite()) || b == 0.0 {
                    return Err(Error::InvalidParameter(format!("cubic family needs finite parameters and b != 0 (b = {b})")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Henon { .. } | Self::LinearTorus { .. } | Self::Linear { .. } => 2,
            Self::Cubic3d { .. } => 3,
        }
    }

    fn is_torus(&self) -> bool {
        matches!(self, Self::LinearTorus { .. })
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Self::Henon { a, b } => vec![1.0 - a * x[0] * x[0] + x[1], b * x[0]],
            Self::LinearTorus { matrix: m } => vec![
                m[0][0] as f64 * x[0] + m[0][1] as f64 * x[1],
                m[1][0] as f64 * x[0] + m[1][1] as f64 * x[1],
            ],
            Self::Linear { matrix: m } => vec![
                m[0][0] * x[0] + m[0][1] * x[1],
                m[1][0] * x[0] + m[1][1] * x[1],
            ],
            Self::Cubic3d { a, b, c, e } => {
                let z = x[2];
                vec![x[1], z, a + b * x[0] + c * x[1] + e * z - z * z * z]
            }
        }
    }

    pub fn derivative(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        Ok(self.deriv_unchecked(x))
    }

    fn deriv_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        match *self {
            Self::Henon { a, b } => DMatrix::from_row_slice(2, 2, &[-2.0 * a * x[0], 1.0, b, 0.0]),
            Self::LinearTorus { matrix: m } => DMatrix::from_row_slice(
                2,
                2,
                &[m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64],
            ),
            Self::Linear { matrix: m } => DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]),
            Self::Cubic3d { b, c, e, .. } => DMatrix::from_row_slice(
                3,
                3,
                &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, b, c, e - 3.0 * x[2] * x[2]],
            ),
        }
    }

    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.inv_unchecked(x))
    }

    fn inv_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Self::Henon { a, b } => {
                let u = x[1] / b;
                vec![u, x[0] - 1.0 + a * u * u]
            }
            Self::LinearTorus { matrix: m } => {
                let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) as f64;
                vec![
                    (m[1][1] as f64 * x[0] - m[0][1] as f64 * x[1]) / det,
                    (-(m[1][0] as f64) * x[0] + m[0][0] as f64 * x[1]) / det,
                ]
            }
            Self::Linear { matrix: m } => {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                vec![
                    (m[1][1] * x[0] - m[0][1] * x[1]) / det,
                    (-m[1][0] * x[0] + m[0][0] * x[1]) / det,
                ]
            }
            Self::Cubic3d { a, b, c, e } => {
                let (y, z) = (x[0], x[1]);
                vec![(x[2] - a - c * y - e * z + z * z * z) / b, y, z]
            }
        }
    }

    /// Difference `u − v`, reduced to the nearest representative modulo
    /// `Z²` for torus maps.
    fn displacement(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(v)
            .map(|(a, b)| {
                let d = a - b;
                if self.is_torus() {
                    d - d.round()
                } else {
                    d
                }
            })
            .collect()
    }

    fn canonical_point(&self, x: &[f64]) -> Vec<f64> {
        if self.is_torus() {
            x.iter()
                .map(|v| {
                    let r = v - v.floor();
                    if r >= 1.0 {
                        0.0
                    } else {
                        r
                    }
                })
                .collect()
        } else {
            x.to_vec()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitRecord {
    pub points: Vec<Vec<f64>>,
    /// Derivatives along the orbit: entry `j` is `Df(points[j])`.
    pub word: MatrixWord,
    /// `max |f^p(x) − x|` (modulo `Z²` on the torus).
    pub residual: f64,
    pub minimal_period: usize,
}

impl PeriodicOrbitRecord {
    pub fn period(&self) -> usize {
        self.points.len()
    }
}

/// Orbit record started at `x` with period `p`; no solving is done.
pub fn orbit_record(m: &MapModel, x: &[f64], p: usize) -> Result<PeriodicOrbitRecord> {
    m.check_point(x)?;
    if p == 0 {
        return Err(Error::InvalidParameter("period must be at least 1".into()));
    }
    let mut points = Vec::with_capacity(p);
    let mut mats = Vec::with_capacity(p);
    let mut cur = m.canonical_point(x);
    for _ in 0..p {
        mats.push(m.deriv_unchecked(&cur));
        points.push(cur.clone());
        cur = m.canonical_point(&m.eval_unchecked(&cur));
    }
    let residual = replay_residual(m, &points);
    let minimal_period = (1..=p)
        .find(|q| p.is_multiple_of(*q) && sup(&m.displacement(&points[*q % p], &points[0])) <= ORBIT_DEDUP_TOL)
        .unwrap_or(p);
    Ok(PeriodicOrbitRecord {
        points,
        word: MatrixWord::new(mats)?,
        residual,
        minimal_period,
    })
}

/// `max_j |f(x_j) − x_{j+1}|` around the orbit.
pub fn replay_residual(m: &MapModel, points: &[Vec<f64>]) -> f64 {
    let p = points.len();
    (0..p)
        .map(|j| sup(&m.displacement(&m.eval_unchecked(&points[j]), &points[(j + 1) % p])))
        .fold(0.0, f64::max)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedGuess {
    pub guess: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSearch {
    pub records: Vec<PeriodicOrbitRecord>,
    pub skipped: Vec<SkippedGuess>,
}

/// Regular grid of `n` points per axis on the box `[lo, hi]`.
pub fn grid_guesses(lo: &[f64], hi: &[f64], n: usize) -> Vec<Vec<f64>> {
    let d = lo.len();
    let coord = |k: usize, j: usize| {
        if n <= 1 {
            0.5 * (lo[k] + hi[k])
        } else {
            lo[k] + (hi[k] - lo[k]) * j as f64 / (n - 1) as f64
        }
    };
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|k| {
                    let j = idx % n;
                    idx /= n;
                    coord(k, j)
                })
                .collect()
        })
        .collect()
}

/// Newton's method on `f^p(x) − x` from each guess. Converged orbits are
/// merged up to cyclic shift, rotated to start at their lexicographically
/// smallest point, and sorted.
pub fn find_periodic(
    m: &MapModel,
    p: usize,
    guesses: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<PeriodicSearch> {
    if p == 0 {
        return Err(Error::InvalidParameter("period must be at least 1".into()));
    }
    let d = m.dim();
    let mut found: Vec<PeriodicOrbitRecord> = Vec::new();
    let mut skipped = Vec::new();
    for (gi, g) in guesses.iter().enumerate() {
        m.check_point(g)?;
        let mut x = g.clone();
        let mut converged = false;
        for _ in 0..max_iter {
            let mut y = x.clone();
            let mut jac = DMatrix::<f64>::identity(d, d);
            for _ in 0..p {
                jac = m.deriv_unchecked(&y) * jac;
                y = m.eval_unchecked(&y);
            }
            let f = m.displacement(&y, &x);
            if sup(&f) <= tol && sup(&f).is_finite() {
                converged = true;
                break;
            }
            let a = jac - DMatrix::<f64>::identity(d, d);
            let Some(step) = a.lu().solve(&DVector::from_vec(f)) else {
                skipped.push(SkippedGuess {
                    guess: gi,
                    reason: "singular Newton matrix".into(),
                });
                break;
            };
            for (xi, s) in x.iter_mut().zip(step.iter()) {
                *xi -= s;
            }
            if x.iter().any(|v| !v.is_finite() || v.abs() > 1e8) {
                break;
            }
        }
        if !converged {
            continue;
        }
        let rec = orbit_record(m, &x, p)?;
        if rec.residual > tol {
            continue;
        }
        let rec = canonical_rotation(rec);
        let duplicate = found.iter().any(|r| same_orbit(m, r, &rec));
        if !duplicate {
            found.push(rec);
        }
    }
    found.sort_by(|a, b| lex(&a.points[0], &b.points[0]));
    Ok(PeriodicSearch {
        records: found,
        skipped,
    })
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Rotates the stored points rather than re-iterating, which would amplify
/// the closing error along the unstable direction.
fn canonical_rotation(mut rec: PeriodicOrbitRecord) -> PeriodicOrbitRecord {
    let start = (0..rec.points.len())
        .min_by(|&i, &j| lex(&rec.points[i], &rec.points[j]))
        .unwrap_or(0);
    rec.points.rotate_left(start);
    rec.word = rec.word.rotated(start);
    rec
}

fn same_orbit(m: &MapModel, a: &PeriodicOrbitRecord, b: &PeriodicOrbitRecord) -> bool {
    a.points.len() == b.points.len()
        && b.points
            .iter()
            .any(|q| sup(&m.displacement(q, &a.points[0])) <= ORBIT_DEDUP_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldPolyline {
    /// First point of the saddle orbit.
    pub saddle: [f64; 2],
    pub side: Side,
    /// `+1` or `−1`, relative to the normalized eigenvector.
    pub branch: i8,
    pub step: f64,
    pub points: Vec<[f64; 2]>,
    pub arclength: Vec<f64>,
    pub end: TraceEnd,
}

/// Why a traced branch stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEnd {
    /// Reached the requested arclength.
    Length,
    /// Left the escape radius first.
    Escaped,
    /// Accumulated on an invariant set with finite total arclength.
    Converged,
}

impl ManifoldPolyline {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,arclength\n");
        for (p, s) in self.points.iter().zip(&self.arclength) {
            out.push_str(&format!("{:?},{:?},{:?}\n", p[0], p[1], s));
        }
        out
    }

    pub fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Distance from `q` to the polyline.
    pub fn distance_to(&self, q: [f64; 2]) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(q, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

fn point_segment_distance(q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let aq = [q[0] - a[0], q[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((aq[0] * ab[0] + aq[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let p = [a[0] + t * ab[0] - q[0], a[1] + t * ab[1] - q[1]];
    p[0].hypot(p[1])
}

/// Options for [`trace_manifold`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Arclength to cover.
    pub length: f64,
    /// Maximum spacing between consecutive vertices.
    pub step: f64,
    /// Distance of the first vertex from the saddle.
    pub offset: f64,
    /// Hard cap on the number of vertices.
    pub max_points: usize,
    /// Tracing stops once a vertex leaves this sup-norm radius.
    pub escape_radius: f64,
    /// Largest turning angle between consecutive segments before the
    /// parameter interval is split further.
    pub max_turn: f64,
}

impl TraceOptions {
    pub fn new(length: f64, step: f64) -> Self {
        Self {
            length,
            step,
            offset: (step * 1e-3).min(1e-6),
            max_points: 2_000_000,
            escape_radius: 1e4,
            max_turn: 0.02,
        }
    }
}

/// One branch of the stable or unstable manifold of a planar saddle orbit,
/// grown by iterating a fundamental domain and refining in its parameter.
/// Segments shorter than this are never split for curvature.
const MIN_TURN_SPACING: f64 = 1e-9;

/// Angle between the directions `p→q` and `q→r`.
fn turn(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    let (u, v) = ([q[0] - p[0], q[1] - p[1]], [r[0] - q[0], r[1] - q[1]]);
    (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]).abs()
}

/// A fundamental domain whose image adds less arclength than this ends
/// the trace as converged.
const CONVERGED_LEVEL_LENGTH: f64 = 1e-10;

pub fn trace_manifold(
    m: &MapModel,
    rec: &PeriodicOrbitRecord,
    side: Side,
    branch: i8,
    opts: TraceOptions,
) -> Result<ManifoldPolyline> {
    if m.dim() != 2 {
        return Err(Error::UnsupportedModel("manifold tracing is planar only".into()));
    }
    if branch != 1 && branch != -1 {
        return Err(Error::InvalidParameter(format!("branch must be +1 or -1, got {branch}")));
    }
    if !(opts.step > 0.0 && opts.length > 0.0 && opts.offset > 0.0) {
        return Err(Error::InvalidParameter("length, step and offset must be positive".into()));
    }
    let class = classify_periodic(&rec.word, MULTIPLICITY_TOL)?;
    if class != PeriodicClass::Saddle(1) {
        return Err(Error::NotASaddle(format!("orbit classifies as {class:?}")));
    }
    let p = rec.period();
    let x0 = [rec.points[0][0], rec.points[0][1]];
    let prod = rec.word.product();
    let eig = prod.complex_eigenvalues();
    let mut mus: Vec<f64> = eig.iter().map(|z| z.re).collect();
    mus.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mu = match side {
        Side::Stable => mus[0],
        Side::Unstable => mus[1],
    };
    // eigenvector of prod for mu
    let shifted = &prod - DMatrix::<f64>::identity(2, 2) * mu;
    let (r0, r1) = ([shifted[(0, 0)], shifted[(0, 1)]], [shifted[(1, 0)], shifted[(1, 1)]]);
    let row = if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) { r0 } else { r1 };
    let mut v = [-row[1], row[0]];
    let norm = v[0].hypot(v[1]);
    if norm <= 1e-14 * prod.amax().max(1.0) {
        // prod is a multiple of the identity on this row; any direction
        // solving the other row works
        return Err(Error::DegenerateEigendirection(format!("eigenvalue {mu}")));
    }
    v = [v[0] / norm, v[1] / norm];
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        v = [-v[0], -v[1]];
    }
    let sgn = branch as f64;
    let iterations = if mu < 0.0 { 2 * p } else { p };
    let forward = side == Side::Unstable;
    let g = |q: [f64; 2]| -> [f64; 2] {
        let mut x = vec![q[0], q[1]];
        for _ in 0..iterations {
            x = if forward { m.eval_unchecked(&x) } else { m.inv_unchecked(&x) };
        }
        [x[0], x[1]]
    };

    // fundamental domain: the chord from a to g(a)
    let a = [x0[0] + sgn * opts.offset * v[0], x0[1] + sgn * opts.offset * v[1]];
    let ga = g(a);
    let seed = |t: f64| [a[0] + t * (ga[0] - a[0]), a[1] + t * (ga[1] - a[1])];
    let dist = |u: [f64; 2], w: [f64; 2]| (u[0] - w[0]).hypot(u[1] - w[1]);

    // current level: parameters and images under g^level
    let mut params = vec![0.0, 1.0];
    let mut images = vec![a, ga];
    let mut level = 0usize;
    let mut points = vec![a];
    let mut arclength = vec![0.0];
    let image_of = |t: f64, level: usize| {
        let mut q = seed(t);
        for _ in 0..level {
            q = g(q);
        }
        q
    };
    let mut total = 0.0;
    loop {
        // walk the level in order, subdividing each parameter interval
        // until its image is within the step
        let level_start = total;
        let mut next_params = vec![params[0]];
        let mut next_images = vec![images[0]];
        for k in 0..params.len() - 1 {
            let (mut t0, mut q0) = (params[k], images[k]);
            let mut pending = vec![(params[k + 1], images[k + 1])];
            while let Some(&(t1, q1)) = pending.last() {
                let d01 = dist(q0, q1);
                let sharp = d01 > MIN_TURN_SPACING
                    && points.len() >= 2
                    && turn(points[points.len() - 2], q0, q1) > opts.max_turn;
                if (d01 > opts.step || sharp) && t1 - t0 > 1e-15 {
                    let tm = 0.5 * (t0 + t1);
                    pending.push((tm, image_of(tm, level)));
                    continue;
                }
                pending.pop();
                let escaped = !(q1[0].abs() <= opts.escape_radius && q1[1].abs() <= opts.escape_radius);
                if escaped || total + dist(q0, q1) >= opts.length {
                    if !escaped {
                        total += dist(q0, q1);
                        points.push(q1);
                        arclength.push(total);
                    }
                    let end = if escaped { TraceEnd::Escaped } else { TraceEnd::Length };
                    return Ok(ManifoldPolyline {
                        saddle: x0,
                        side,
                        branch,
                        step: opts.step,
                        points,
                        arclength,
                        end,
                    });
                }
                total += dist(q0, q1);
                points.push(q1);
                arclength.push(total);
                if points.len() > opts.max_points {
                    return Err(Error::InvalidParameter(format!(
                        "manifold exceeded {} points before reaching length {}",
                        opts.max_points, opts.length
                    )));
                }
                next_params.push(t1);
                next_images.push(q1);
                (t0, q0) = (t1, q1);
            }
        }
        if total - level_start < CONVERGED_LEVEL_LENGTH {
            return Ok(ManifoldPolyline {
                saddle: x0,
                side,
                branch,
                step: opts.step,
                points,
                arclength,
                end: TraceEnd::Converged,
            });
        }
        params = next_params;
        images = next_images;
        level += 1;
        for q in images.iter_mut() {
            *q = g(*q);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    Transverse,
    NearTangent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub point: [f64; 2],
    /// Acute angle between the crossing segments, in `[0, π/2]`.
    pub angle: f64,
    pub kind: CrossingKind,
    pub stable_segment: usize,
    pub unstable_segment: usize,
}

/// Uniform grid bucketing segments by their bounding boxes.
struct SegmentGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl SegmentGrid {
    fn new(segments: &[([f64; 2], [f64; 2])], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, s) in segments.iter().enumerate() {
            for key in Self::cells(s, cell, 0.0) {
                buckets.entry(key).or_default().push(k);
            }
        }
        Self { cell, buckets }
    }

    fn cells(s: &([f64; 2], [f64; 2]), cell: f64, pad: f64) -> Vec<(i64, i64)> {
        let (a, b) = s;
        let x0 = ((a[0].min(b[0]) - pad) / cell).floor() as i64;
        let x1 = ((a[0].max(b[0]) + pad) / cell).floor() as i64;
        let y0 = ((a[1].min(b[1]) - pad) / cell).floor() as i64;
        let y1 = ((a[1].max(b[1]) + pad) / cell).floor() as i64;
        let mut out = Vec::new();
        for i in x0..=x1 {
            for j in y0..=y1 {
                out.push((i, j));
            }
        }
        out
    }

    fn candidates(&self, s: &([f64; 2], [f64; 2]), pad: f64) -> BTreeSet<usize> {
        Self::cells(s, self.cell, pad)
            .into_iter()
            .filter_map(|key| self.buckets.get(&key))
            .flatten()
            .copied()
            .collect()
    }
}

fn cell_size(a: &ManifoldPolyline, b: &ManifoldPolyline) -> f64 {
    let longest = a
        .segments()
        .chain(b.segments())
        .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
        .fold(0.0_f64, f64::max);
    longest.max(1e-9)
}

/// Proper intersection of two segments: parameters in `[0, 1)` on each,
/// except that the final segment of a polyline is closed.
fn intersect(
    s: ([f64; 2], [f64; 2]),
    u: ([f64; 2], [f64; 2]),
    s_closed: bool,
    u_closed: bool,
) -> Option<([f64; 2], f64)> {
    let r = [s.1[0] - s.0[0], s.1[1] - s.0[1]];
    let q = [u.1[0] - u.0[0], u.1[1] - u.0[1]];
    let denom = r[0] * q[1] - r[1] * q[0];
    let rl = r[0].hypot(r[1]);
    let ql = q[0].hypot(q[1]);
    if rl == 0.0 || ql == 0.0 || denom.abs() <= 1e-15 * rl * ql {
        return None;
    }
    let w = [u.0[0] - s.0[0], u.0[1] - s.0[1]];
    let t = (w[0] * q[1] - w[1] * q[0]) / denom;
    let v = (w[0] * r[1] - w[1] * r[0]) / denom;
    let in_range = |x: f64, closed: bool| x >= 0.0 && (x < 1.0 || (closed && x <= 1.0));
    if !in_range(t, s_closed) || !in_range(v, u_closed) {
        return None;
    }
    let sin = (denom / (rl * ql)).abs().min(1.0);
    Some(([s.0[0] + t * r[0], s.0[1] + t * r[1]], sin.asin()))
}

/// All intersections between a stable and an unstable polyline.
pub fn detect_tangency(ws: &ManifoldPolyline, wu: &ManifoldPolyline, angle_tol: f64) -> Vec<Crossing> {
    let s_segs: Vec<_> = ws.segments().collect();
    let u_segs: Vec<_> = wu.segments().collect();
    if s_segs.is_empty() || u_segs.is_empty() {
        return Vec::new();
    }
    let grid = SegmentGrid::new(&s_segs, cell_size(ws, wu));
    let mut out = Vec::new();
    for (ui, u) in u_segs.iter().enumerate() {
        for si in grid.candidates(u, 0.0) {
            let closed_s = si + 1 == s_segs.len();
            let closed_u = ui + 1 == u_segs.len();
            if let Some((point, angle)) = intersect(s_segs[si], *u, closed_s, closed_u) {
                out.push(Crossing {
                    point,
                    angle,
                    kind: if angle < angle_tol {
                        CrossingKind::NearTangent
                    } else {
                        CrossingKind::Transverse
                    },
                    stable_segment: si,
                    unstable_segment: ui,
                });
            }
        }
    }
    out.sort_by_key(|c| (c.stable_segment, c.unstable_segment));
    out
}

/// Smallest distance from a vertex of `b` to a segment of `a`, ignoring
/// vertices within `local` of the saddle where both branches start.
/// Segments must be at most `cell` long.
fn clearance(a: &[&ManifoldPolyline], b: &[&ManifoldPolyline], cell: f64, local: f64) -> f64 {
    let far = |l: &ManifoldPolyline, p: [f64; 2]| (p[0] - l.saddle[0]).hypot(p[1] - l.saddle[1]) >= local;
    let mut buckets: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
    let key = |p: [f64; 2]| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    for (li, l) in a.iter().enumerate() {
        for (pi, &p) in l.points.iter().enumerate() {
            if far(l, p) {
                buckets.entry(key(p)).or_default().push((li, pi));
            }
        }
    }
    let seg_dist = |q: [f64; 2], u: [f64; 2], v: [f64; 2]| {
        let d = [v[0] - u[0], v[1] - u[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 { (((q[0] - u[0]) * d[0] + (q[1] - u[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (u[0] + t * d[0] - q[0]).hypot(u[1] + t * d[1] - q[1])
    };
    let (mut lo, mut hi) = ((i64::MAX, i64::MAX), (i64::MIN, i64::MIN));
    for k in buckets.keys() {
        lo = (lo.0.min(k.0), lo.1.min(k.1));
        hi = (hi.0.max(k.0), hi.1.max(k.1));
    }
    let mut best = f64::INFINITY;
    for l in b {
        for &q in l.points.iter().filter(|&&q| far(l, q)) {
            let (ci, cj) = key(q);
            let max_ring = (ci - lo.0).max(hi.0 - ci).max(cj - lo.1).max(hi.1 - cj);
            // widen the search ring until every segment that could beat the
            // best has an endpoint inside it
            let mut ring = 0i64;
            loop {
                for i in ci - ring..=ci + ring {
                    for j in cj - ring..=cj + ring {
                        if (i - ci).abs() != ring && (j - cj).abs() != ring {
                            continue;
                        }
                        for &(li, pi) in buckets.get(&(i, j)).into_iter().flatten() {
                            let pts = &a[li].points;
                            best = best.min((pts[pi][0] - q[0]).hypot(pts[pi][1] - q[1]));
                            if pi + 1 < pts.len() {
                                best = best.min(seg_dist(q, pts[pi], pts[pi + 1]));
                            }
                            if pi > 0 {
                                best = best.min(seg_dist(q, pts[pi - 1], pts[pi]));
                            }
                        }
                    }
                }
                if ((ring - 1) as f64) * cell >= best || ring > max_ring {
                    break;
                }
                ring += 1;
            }
        }
    }
    best
}

/// Signed tangency indicator between the stable and unstable manifolds
/// (both branches) of a saddle: the smallest crossing angle when they
/// cross, and minus their clearance when they do not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyProbe {
    pub indicator: f64,
    pub crossings: Vec<Crossing>,
}

/// Grid cell used by the clearance search.
const CLEARANCE_CELL: f64 = 0.02;

/// Share of the traced length around the saddle excluded from the clearance.
const LOCAL_FRACTION: f64 = 0.05;

pub fn homoclinic_probe(
    m: &MapModel,
    rec: &PeriodicOrbitRecord,
    opts: TraceOptions,
    angle_tol: f64,
) -> Result<TangencyProbe> {
    let mut stable = Vec::new();
    let mut unstable = Vec::new();
    for branch in [1, -1] {
        stable.push(trace_manifold(m, rec, Side::Stable, branch, opts)?);
        unstable.push(trace_manifold(m, rec, Side::Unstable, branch, opts)?);
    }
    let mut crossings = Vec::new();
    for ws in &stable {
        for wu in &unstable {
            crossings.extend(detect_tangency(ws, wu, angle_tol));
        }
    }
    let indicator = if crossings.is_empty() {
        let s: Vec<&ManifoldPolyline> = stable.iter().collect();
        let u: Vec<&ManifoldPolyline> = unstable.iter().collect();
        let local = LOCAL_FRACTION * opts.length;
        -clearance(&s, &u, opts.step.max(CLEARANCE_CELL), local).max(f64::MIN_POSITIVE)
    } else {
        crossings.iter().map(|c| c.angle).fold(f64::INFINITY, f64::min)
    };
    Ok(TangencyProbe { indicator, crossings })
}

/// The fixed point of Hénon with positive `x`,
/// `x = (−(1−b) + √((1−b)² + 4a)) / (2a)`, `y = b·x`.
pub fn henon_positive_fixed_point(a: f64, b: f64) -> Option<[f64; 2]> {
    let disc = (1.0 - b) * (1.0 - b) + 4.0 * a;
    if a == 0.0 || disc < 0.0 {
        return None;
    }
    let x = (-(1.0 - b) + disc.sqrt()) / (2.0 * a);
    Some([x, b * x])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    pub b: f64,
    pub a_lo: f64,
    pub a_hi: f64,
    /// Number of grid samples used to find a sign change.
    pub samples: usize,
    /// Target bracket width in `a`.
    pub a_tol: f64,
    pub length: f64,
    pub step: f64,
    pub angle_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            b: 0.3,
            a_lo: 1.0,
            a_hi: 1.2,
            samples: 9,
            a_tol: 1e-6,
            length: 4.0,
            step: 2e-3,
            angle_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyScan {
    /// `(a_minus, a_plus)`: indicator negative at the first, positive at the
    /// second.
    pub bracket: (f64, f64),
    pub indicator: (f64, f64),
    /// Every `(a, indicator)` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
    /// Crossings at the positive end of the bracket.
    pub crossings: Vec<Crossing>,
}

/// Locate a homoclinic tangency of the positive Hénon fixed point in `a`:
/// sample the indicator, take the first sign change, then bisect.
pub fn tangency_scan(opts: &ScanOptions) -> Result<TangencyScan> {
    if !(opts.a_lo < opts.a_hi) || opts.samples < 2 || !(opts.a_tol > 0.0) {
        return Err(Error::InvalidParameter(
            "scan needs a_lo < a_hi, at least 2 samples and a positive a_tol".into(),
        ));
    }
    let topts = TraceOptions::new(opts.length, opts.step);
    let probe = |a: f64| -> Result<TangencyProbe> {
        let m = MapModel::henon(a, opts.b)?;
        let x = henon_positive_fixed_point(a, opts.b)
            .ok_or_else(|| Error::InvalidParameter(format!("no real fixed point at a = {a}")))?;
        let rec = orbit_record(&m, &x, 1)?;
        homoclinic_probe(&m, &rec, topts, opts.angle_tol)
    };
    let mut evaluations = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for k in 0..opts.samples {
        let a = opts.a_lo + (opts.a_hi - opts.a_lo) * k as f64 / (opts.samples - 1) as f64;
        let v = probe(a)?.indicator;
        evaluations.push((a, v));
        if let Some((pa, pv)) = prev {
            if (pv < 0.0) != (v < 0.0) {
                bracket = Some(((pa, pv), (a, v)));
                break;
            }
        }
        prev = Some((a, v));
    }
    let Some(((mut lo, mut vlo), (mut hi, mut vhi))) = bracket else {
        return Err(Error::InvalidParameter(format!(
            "indicator does not change sign on [{}, {}]",
            opts.a_lo, opts.a_hi
        )));
    };
    while (hi - lo).abs() > opts.a_tol {
        let mid = 0.5 * (lo + hi);
        let v = probe(mid)?.indicator;
        evaluations.push((mid, v));
        if (v < 0.0) == (vlo < 0.0) {
            lo = mid;
            vlo = v;
        } else {
            hi = mid;
            vhi = v;
        }
    }
    let (neg, pos) = if vlo < 0.0 { ((lo, vlo), (hi, vhi)) } else { ((hi, vhi), (lo, vlo)) };
    let crossings = probe(pos.0)?.crossings;
    Ok(TangencyScan {
        bracket: (neg.0, pos.0),
        indicator: (neg.1, pos.1),
        evaluations,
        crossings,
    })
}

/// Declared connection between two named records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub tangency: Option<TangencyData>,
}

/// Graph with one node per saddle record (index from its classification)
/// and the declared edges.
pub fn build_graph_from_records(
    records: &[(String, PeriodicOrbitRecord)],
    edges: &[EdgeSpec],
) -> Result<HeteroclinicGraph> {
    let dim = records
        .first()
        .map(|r| r.1.word.dim())
        .ok_or_else(|| Error::InvalidGraph("no records".into()))?;
    let mut g = HeteroclinicGraph::new(dim)?;
    for (id, rec) in records {
        match classify_periodic(&rec.word, MULTIPLICITY_TOL)? {
            PeriodicClass::Saddle(index) => {
                g.add_node(BasicSetNode::new(id.clone(), index).with_word(rec.word.clone()))?
            }
            other => return Err(Error::NotASaddle(format!("record `{id}` classifies as {other:?}"))),
        }
    }
    for e in edges {
        let mut edge = HeteroclinicEdge::new(e.id.clone(), e.src.clone(), e.dst.clone());
        edge.tangency = e.tangency;
        g.add_edge(edge)?;
    }
    Ok(g)
}
