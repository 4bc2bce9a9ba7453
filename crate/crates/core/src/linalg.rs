//! Small dense helpers shared by the cocycle and realizer code.
//!
//! Products of long matrix words are evaluated on exterior powers: the
//! spectral radius (resp. spectral norm) of the k-th compound of a product is
//! the product of its k largest eigenvalue moduli (resp. singular values).
//! Each compound product is accumulated with per-step norm factoring, so only
//! the dominant quantity of each power is ever extracted. This keeps the small
//! exponents accurate even when the raw product spans hundreds of orders of
//! magnitude.

use nalgebra::DMatrix;

/// Lexicographically ordered k-subsets of `0..n`.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// k-th compound matrix: all k×k minors, rows and columns indexed by
/// `subsets` (as returned by [`combinations`]).
pub(crate) fn compound(a: &DMatrix<f64>, subsets: &[Vec<usize>]) -> DMatrix<f64> {
    let k = subsets.first().map_or(0, Vec::len);
    let m = subsets.len();
    if k == 1 {
        return a.clone();
    }
    DMatrix::from_fn(m, m, |r, c| {
        let rows = &subsets[r];
        let cols = &subsets[c];
        DMatrix::from_fn(k, k, |i, j| a[(rows[i], cols[j])]).determinant()
    })
}

/// A matrix kept as `exp(log_scale) * mat` with `mat` normalized to unit
/// max-entry.
#[derive(Debug, Clone)]
pub(crate) struct ScaledMatrix {
    pub mat: DMatrix<f64>,
    pub log_scale: f64,
}

impl ScaledMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
            log_scale: 0.0,
        }
    }

    fn renormalize(&mut self) {
        let s = self.mat.amax();
        if s > 0.0 && s.is_finite() {
            self.mat /= s;
            self.log_scale += s.ln();
        }
    }

    /// `self <- m * self`
    pub fn left_mul(&mut self, m: &ScaledMatrix) {
        self.mat = &m.mat * &self.mat;
        self.log_scale += m.log_scale;
        self.renormalize();
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut out = Self {
            mat: m.clone(),
            log_scale: 0.0,
        };
        out.renormalize();
        out
    }

    pub fn pow(&self, mut n: usize) -> Self {
        let mut result = ScaledMatrix::identity(self.mat.nrows());
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result.left_mul(&base);
            }
            n >>= 1;
            if n > 0 {
                let b = base.clone();
                base.left_mul(&b);
            }
        }
        result
    }

    /// log of the spectral radius, or `None` when it vanishes numerically.
    pub fn log_spectral_radius(&self) -> Option<f64> {
        let rho = self
            .mat
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        (rho > 0.0 && rho.is_finite()).then(|| rho.ln() + self.log_scale)
    }

    /// log of the largest singular value.
    pub fn log_spectral_norm(&self) -> Option<f64> {
        let s = self
            .mat
            .singular_values()
            .iter()
            .copied()
            .fold(0.0_f64, f64::max);
        (s > 0.0 && s.is_finite()).then(|| s.ln() + self.log_scale)
    }
}

/// Precomputed compounds of a list of matrices, for every order 1..d-1.
pub(crate) struct CompoundTable {
    /// `levels[k-1][j]` is the k-th compound of matrix j.
    pub levels: Vec<Vec<ScaledMatrix>>,
    pub log_abs_det: Vec<f64>,
}

impl CompoundTable {
    pub fn new(mats: &[DMatrix<f64>]) -> Self {
        let d = mats.first().map_or(0, DMatrix::nrows);
        let levels = (1..d)
            .map(|k| {
                let subsets = combinations(d, k);
                mats.iter()
                    .map(|m| ScaledMatrix::from_matrix(&compound(m, &subsets)))
                    .collect()
            })
            .collect();
        let log_abs_det = mats.iter().map(|m| m.determinant().abs().ln()).collect();
        Self {
            levels,
            log_abs_det,
        }
    }
}

/// Orthonormalize the columns of `frame` in place; returns log|diag R|.
pub(crate) fn qr_step(frame: &mut DMatrix<f64>) -> Vec<f64> {
    let qr = frame.clone().qr();
    let r = qr.r();
    let q = qr.q();
    let k = frame.ncols();
    let mut logs = Vec::with_capacity(k);
    let mut out = q.columns(0, k).into_owned();
    for j in 0..k {
        let rjj = r[(j, j)];
        if rjj < 0.0 {
            out.column_mut(j).neg_mut();
        }
        logs.push(rjj.abs().ln());
    }
    *frame = out;
    logs
}

/// Distance between the column spans of two orthonormal frames, measured as
/// the max-entry norm of the projector difference.
pub(crate) fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let pa = a * a.transpose();
    let pb = b * b.transpose();
    (pa - pb).amax()
}

/// A fixed, generic-looking d×k starting frame.
pub(crate) fn generic_frame(d: usize, k: usize) -> DMatrix<f64> {
    let mut f = DMatrix::from_fn(d, k, |i, j| {
        let x = ((i * 7 + j * 13 + 3) as f64 * 0.618_033_988_749_895).fract();
        x - 0.5 + if i == j { 1.0 } else { 0.0 }
    });
    qr_step(&mut f);
    f
}
