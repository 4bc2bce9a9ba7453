//! Linear analysis of derivative cocycles along periodic orbits.
//!
//! A [`MatrixWord`] holds the derivatives `A_0, …, A_{p-1}` along a periodic
//! orbit; the return map is the cyclic product `A_{p-1} ⋯ A_0`. Everything
//! here works on exponents (logarithms of moduli divided by the period) so
//! that long periods never overflow.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{generic_frame, qr_step, subspace_distance, CompoundTable, ScaledMatrix};
use crate::polytope::LyapunovMap;

/// Relative tolerance used to decide that two moduli (or singular values)
/// coincide.
pub const MULTIPLICITY_TOL: f64 = 1e-9;

/// Default finite-time horizon for domination tests.
pub const DEFAULT_HORIZON: usize = 32;

/// Default domination rate, `2^(1/8)`.
pub fn default_rate() -> f64 {
    2f64.powf(0.125)
}

const DET_TOL: f64 = 1e-12;

/// Finite cyclic sequence of invertible `d×d` matrices. Serializes as nested
/// rows, `entries[j][r][c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct MatrixWord {
    dim: usize,
    entries: Vec<DMatrix<f64>>,
}

impl MatrixWord {
    pub fn new(entries: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::InvalidWord("period must be at least 1".into()));
        };
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::InvalidWord("dimension must be at least 1".into()));
        }
        for (j, m) in entries.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidWord(format!(
                    "entry {j} is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidWord(format!("entry {j} has non-finite values")));
            }
            let scale = m.amax();
            let det = m.determinant();
            if scale == 0.0 || det.abs() <= DET_TOL * scale.powi(dim as i32) {
                return Err(Error::InvalidWord(format!("entry {j} is singular (det = {det:e})")));
            }
        }
        Ok(Self { dim, entries })
    }

    /// Build from nested rows: `entries[j][r][c]`.
    pub fn from_rows(rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let mut mats = Vec::with_capacity(rows.len());
        for (j, m) in rows.iter().enumerate() {
            let n = m.len();
            if m.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidWord(format!("entry {j} is not square")));
            }
            mats.push(DMatrix::from_fn(n, n, |r, c| m[r][c]));
        }
        Self::new(mats)
    }

    pub fn single(m: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![m])
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::single(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[DMatrix<f64>] {
        &self.entries
    }

    /// Nested-row form, inverse of [`MatrixWord::from_rows`].
    pub fn to_rows(&self) -> Vec<Vec<Vec<f64>>> {
        self.entries
            .iter()
            .map(|m| {
                (0..self.dim)
                    .map(|r| (0..self.dim).map(|c| m[(r, c)]).collect())
                    .collect()
            })
            .collect()
    }

    /// The inverse cocycle along the reversed orbit.
    pub fn inverse(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .rev()
            .map(|m| m.clone().try_inverse().expect("validated invertible"))
            .collect();
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// The same orbit started `shift` positions later.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut entries = self.entries.clone();
        let p = entries.len();
        entries.rotate_left(shift % p);
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// The word `self` followed by `other`.
    pub fn concat(&self, other: &MatrixWord) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    /// Plain cyclic product `A_{p-1} ⋯ A_0`; may overflow for long words.
    pub fn product(&self) -> DMatrix<f64> {
        self.entries
            .iter()
            .fold(DMatrix::identity(self.dim, self.dim), |acc, m| m * acc)
    }
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for MatrixWord {
    type Error = Error;

    fn try_from(rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<MatrixWord> for Vec<Vec<Vec<f64>>> {
    fn from(w: MatrixWord) -> Self {
        w.to_rows()
    }
}

/// Eigenvalue moduli of the return map and the matching exponents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumData {
    /// Ascending, with multiplicity.
    pub moduli: Vec<f64>,
    /// `log(moduli) / period`, ascending.
    pub exponents: Vec<f64>,
}

/// Spectrum of the cyclic product of `runs`, each matrix repeated `count`
/// times, in order. Shared with the realizer, whose words are run-length
/// encoded.
pub(crate) fn spectrum_of_runs(runs: &[(&DMatrix<f64>, usize)]) -> Result<SpectrumData> {
    let weighted: Vec<_> = runs.iter().map(|&(m, c)| (m, c, 1)).collect();
    spectrum_of_weighted_runs(&weighted)
}

/// As [`spectrum_of_runs`], where each run entry `(m, count, len)` stands for
/// a product `m` of `len` matrices, so the period is `Σ count·len`.
pub(crate) fn spectrum_of_weighted_runs(runs: &[(&DMatrix<f64>, usize, usize)]) -> Result<SpectrumData> {
    let period: usize = runs.iter().map(|r| r.1 * r.2).sum();
    let dim = runs.first().map_or(0, |r| r.0.nrows());
    if period == 0 || dim == 0 {
        return Err(Error::InvalidWord("empty word".into()));
    }
    let mats: Vec<DMatrix<f64>> = runs.iter().map(|r| r.0.clone()).collect();
    let table = CompoundTable::new(&mats);
    // log of the product of the k largest moduli, k = 0..=d
    let mut top = vec![0.0; dim + 1];
    for k in 1..dim {
        let mut acc = ScaledMatrix::identity(table.levels[k - 1][0].mat.nrows());
        for (j, &(_, count, _)) in runs.iter().enumerate() {
            let step = &table.levels[k - 1][j];
            if count == 1 {
                acc.left_mul(step);
            } else {
                acc.left_mul(&step.pow(count));
            }
        }
        top[k] = acc.log_spectral_radius().ok_or(Error::DegenerateCocycle)?;
    }
    top[dim] = runs
        .iter()
        .zip(&table.log_abs_det)
        .map(|(r, ld)| r.1 as f64 * ld)
        .sum();
    if !top[dim].is_finite() {
        return Err(Error::DegenerateCocycle);
    }
    let p = period as f64;
    let mut exponents: Vec<f64> = (1..=dim).map(|k| (top[k] - top[k - 1]) / p).collect();
    exponents.sort_by(f64::total_cmp);
    let moduli = exponents.iter().map(|e| (e * p).exp()).collect();
    Ok(SpectrumData { moduli, exponents })
}

/// Eigenvalue moduli of `entries[p-1] ⋯ entries[0]`, ascending.
pub fn eigen_moduli(word: &MatrixWord) -> Result<SpectrumData> {
    let runs: Vec<_> = word.entries.iter().map(|m| (m, 1)).collect();
    spectrum_of_runs(&runs)
}

pub fn lyapunov_map_of_periodic(word: &MatrixWord) -> Result<LyapunovMap> {
    let spec = eigen_moduli(word)?;
    LyapunovMap::from_exponents(&spec.exponents)
}

fn moduli_coincide(a: f64, b: f64, tol: f64) -> bool {
    if a.is_finite() && b.is_finite() {
        (a - b).abs() <= tol * a.max(b).max(1.0)
    } else {
        a == b
    }
}

/// Indices `i` with `|λ_i| = |λ_{i+1}|` up to `tol`: the non-simple-spectrum
/// obstruction to domination.
pub fn spectral_obstruction_indices(word: &MatrixWord, tol: f64) -> Result<BTreeSet<usize>> {
    let spec = eigen_moduli(word)?;
    Ok(obstructions_from_spectrum(&spec, word.period(), tol))
}

fn obstructions_from_spectrum(spec: &SpectrumData, period: usize, tol: f64) -> BTreeSet<usize> {
    let d = spec.moduli.len();
    (1..d)
        .filter(|&i| {
            let (a, b) = (spec.moduli[i - 1], spec.moduli[i]);
            if a.is_finite() && b.is_finite() && a > 0.0 {
                moduli_coincide(a, b, tol)
            } else {
                // moduli out of f64 range: compare in the log domain
                let p = period as f64;
                let (la, lb) = (spec.exponents[i - 1] * p, spec.exponents[i] * p);
                (lb - la).abs() <= tol * la.abs().max(lb.abs()).max(1.0)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DominationVerdict {
    Dominated,
    NotDominated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationCertificate {
    pub index: usize,
    pub verdict: DominationVerdict,
    pub rate: f64,
    pub horizon: usize,
    /// Smallest `log(s_{i+1} / s_i)` over orbit positions, singular values
    /// in ascending order.
    pub min_log_gap: f64,
}

/// Ascending log singular values of the `horizon`-step product starting at
/// each orbit position.
fn log_singular_values(word: &MatrixWord, horizon: usize) -> Vec<Vec<f64>> {
    let d = word.dim;
    let p = word.period();
    let table = CompoundTable::new(&word.entries);
    (0..p)
        .map(|x| {
            let mut top = vec![0.0; d + 1];
            for k in 1..d {
                let level = &table.levels[k - 1];
                let mut acc = ScaledMatrix::identity(level[0].mat.nrows());
                for t in 0..horizon {
                    acc.left_mul(&level[(x + t) % p]);
                }
                top[k] = acc.log_spectral_norm().unwrap_or(f64::NEG_INFINITY);
            }
            top[d] = (0..horizon).map(|t| table.log_abs_det[(x + t) % p]).sum();
            let mut s: Vec<f64> = (1..=d).map(|k| top[k] - top[k - 1]).collect();
            s.sort_by(f64::total_cmp);
            s
        })
        .collect()
}

fn check_domination_args(word: &MatrixWord, horizon: usize, rate: f64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    if !(rate > 1.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("rate must be > 1, got {rate}")));
    }
    if word.dim < 2 {
        return Err(Error::InvalidParameter("domination needs dimension ≥ 2".into()));
    }
    Ok(())
}

fn certificates(word: &MatrixWord, horizon: usize, rate: f64) -> Vec<DominationCertificate> {
    let svals = log_singular_values(word, horizon);
    let log_rate = rate.ln();
    (1..word.dim)
        .map(|i| {
            let min_log_gap = svals
                .iter()
                .map(|s| s[i] - s[i - 1])
                .fold(f64::INFINITY, f64::min);
            let verdict = if min_log_gap >= log_rate {
                DominationVerdict::Dominated
            } else if min_log_gap <= MULTIPLICITY_TOL {
                DominationVerdict::NotDominated
            } else {
                DominationVerdict::Inconclusive
            };
            DominationCertificate {
                index: i,
                verdict,
                rate,
                horizon,
                min_log_gap,
            }
        })
        .collect()
}

/// Finite-time test of domination of index `i` in singular-value-gap form.
pub fn finite_time_domination(
    word: &MatrixWord,
    index: usize,
    horizon: usize,
    rate: f64,
) -> Result<DominationCertificate> {
    check_domination_args(word, horizon, rate)?;
    if index == 0 || index >= word.dim {
        return Err(Error::IndexOutOfRange {
            index,
            dim: word.dim,
        });
    }
    Ok(certificates(word, horizon, rate).swap_remove(index - 1))
}

/// Verdicts at every index `1..d`.
pub fn domination_profile(
    word: &MatrixWord,
    horizon: usize,
    rate: f64,
) -> Result<Vec<DominationCertificate>> {
    check_domination_args(word, horizon, rate)?;
    Ok(certificates(word, horizon, rate))
}

/// Block dimensions of the finest splitting whose cuts are certified
/// dominated.
pub fn finest_dominated_splitting(word: &MatrixWord, horizon: usize, rate: f64) -> Result<Vec<usize>> {
    if word.dim == 1 {
        return Ok(vec![1]);
    }
    let cuts: Vec<usize> = domination_profile(word, horizon, rate)?
        .into_iter()
        .filter(|c| c.verdict == DominationVerdict::Dominated)
        .map(|c| c.index)
        .collect();
    Ok(blocks_from_cuts(&cuts, word.dim))
}

pub(crate) fn blocks_from_cuts(cuts: &[usize], dim: usize) -> Vec<usize> {
    let mut blocks = Vec::new();
    let mut last = 0;
    for &c in cuts.iter().chain(std::iter::once(&dim)) {
        if c > last {
            blocks.push(c - last);
            last = c;
        }
    }
    blocks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeReport {
    pub volume_hyperbolic: bool,
    pub det_contracted_first: bool,
    pub det_expanded_last: bool,
    /// Worst (largest) log-volume growth of the first block over the horizon.
    pub first_block_log_volume: f64,
    /// Worst (smallest) log-volume growth of the last block over the horizon.
    pub last_block_log_volume: f64,
}

/// Invariant subspace frames, one per orbit position, of the dominant
/// `k`-dimensional bundle of `word` (forward iteration).
fn dominant_frames(word: &MatrixWord, k: usize) -> Vec<DMatrix<f64>> {
    let p = word.period();
    let mut frame = generic_frame(word.dim, k);
    let mut frames = vec![frame.clone(); p];
    for _ in 0..10_000 {
        let before = frame.clone();
        for j in 0..p {
            frames[j] = frame.clone();
            frame = &word.entries[j] * &frame;
            qr_step(&mut frame);
        }
        if subspace_distance(&before, &frame) < 1e-14 {
            break;
        }
    }
    for j in 0..p {
        frames[j] = frame.clone();
        frame = &word.entries[j] * &frame;
        qr_step(&mut frame);
    }
    frames
}

/// Log-volume growth of `horizon` forward steps restricted to the invariant
/// subspace spanned by `frame` at position `x`.
fn log_volume_forward(word: &MatrixWord, frame: &DMatrix<f64>, x: usize, horizon: usize) -> f64 {
    let p = word.period();
    let mut f = frame.clone();
    let mut total = 0.0;
    for t in 0..horizon {
        f = &word.entries[(x + t) % p] * &f;
        total += qr_step(&mut f).iter().sum::<f64>();
    }
    total
}

/// Checks volume contraction on the first block and volume expansion on the
/// last block of a dominated splitting, over `horizon` steps from every orbit
/// position.
pub fn volume_hyperbolicity_check(
    word: &MatrixWord,
    splitting: &[usize],
    rate: f64,
    horizon: usize,
) -> Result<VolumeReport> {
    let d = word.dim;
    if splitting.len() < 2 {
        return Err(Error::InvalidSplitting("at least two blocks are required".into()));
    }
    if splitting.contains(&0) || splitting.iter().sum::<usize>() != d {
        return Err(Error::InvalidSplitting(format!(
            "block dimensions {splitting:?} must be positive and sum to {d}"
        )));
    }
    let profile = domination_profile(word, horizon, rate)?;
    let mut cut = 0;
    for &k in &splitting[..splitting.len() - 1] {
        cut += k;
        if profile[cut - 1].verdict != DominationVerdict::Dominated {
            return Err(Error::SplittingNotCertified { index: cut });
        }
    }
    let p = word.period();
    let log_rate = rate.ln();
    let k_first = splitting[0];
    let k_last = splitting[splitting.len() - 1];

    // First block: dominant bundle of the inverse cocycle. Its forward volume
    // growth is minus the backward growth, which is the stable direction to
    // iterate.
    let inv = word.inverse();
    let inv_frames = dominant_frames(&inv, k_first);
    // inverse position j sits at original position (p - j) % p
    let first = (0..p)
        .map(|x| {
            let y = (x + horizon) % p;
            let j = (p - y) % p;
            -log_volume_forward(&inv, &inv_frames[j], j, horizon)
        })
        .fold(f64::NEG_INFINITY, f64::max);

    let frames = dominant_frames(word, k_last);
    let last = (0..p)
        .map(|x| log_volume_forward(word, &frames[x], x, horizon))
        .fold(f64::INFINITY, f64::min);

    let det_contracted_first = first <= -log_rate;
    let det_expanded_last = last >= log_rate;
    Ok(VolumeReport {
        volume_hyperbolic: det_contracted_first && det_expanded_last,
        det_contracted_first,
        det_expanded_last,
        first_block_log_volume: first,
        last_block_log_volume: last,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PeriodicClass {
    Sink,
    Source,
    /// Stable index.
    Saddle(usize),
    Neutral,
}

pub fn classify_periodic(word: &MatrixWord, tol: f64) -> Result<PeriodicClass> {
    let spec = eigen_moduli(word)?;
    Ok(classify_moduli(&spec.moduli, tol))
}

pub(crate) fn classify_moduli(moduli: &[f64], tol: f64) -> PeriodicClass {
    let d = moduli.len();
    let contracting = moduli.iter().filter(|&&m| m < 1.0 - tol).count();
    let expanding = moduli.iter().filter(|&&m| m > 1.0 + tol).count();
    match (contracting, expanding) {
        (c, _) if c == d => PeriodicClass::Sink,
        (_, e) if e == d => PeriodicClass::Source,
        (c, e) if c + e == d => PeriodicClass::Saddle(c),
        _ => PeriodicClass::Neutral,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SectionalDissipativity {
    pub forward: bool,
    pub backward: bool,
}

pub fn sectional_dissipativity(word: &MatrixWord) -> Result<SectionalDissipativity> {
    let spec = eigen_moduli(word)?;
    sectional_dissipativity_of_exponents(&spec.exponents)
}

/// Same test on an ascending exponent list.
pub fn sectional_dissipativity_of_exponents(exponents: &[f64]) -> Result<SectionalDissipativity> {
    let d = exponents.len();
    if d < 2 {
        return Err(Error::InvalidParameter(
            "sectional dissipativity needs dimension ≥ 2".into(),
        ));
    }
    if exponents.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::ExponentsNotAscending);
    }
    Ok(SectionalDissipativity {
        forward: exponents[d - 2] + exponents[d - 1] < 0.0,
        backward: exponents[0] + exponents[1] > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> f64 {
        (3.0 + 5f64.sqrt()) / 2.0
    }

    fn cat() -> MatrixWord {
        MatrixWord::from_rows(&[vec![vec![2.0, 1.0], vec![1.0, 1.0]]]).unwrap()
    }

    fn rotation(theta: f64) -> MatrixWord {
        let (s, c) = theta.sin_cos();
        MatrixWord::from_rows(&[vec![vec![c, -s], vec![s, c]]]).unwrap()
    }

    #[test]
    fn rejects_singular_and_empty_words() {
        assert!(MatrixWord::new(vec![]).is_err());
        assert!(MatrixWord::from_rows(&[vec![vec![1.0, 2.0], vec![2.0, 4.0]]]).is_err());
        assert!(MatrixWord::from_rows(&[vec![vec![1.0, 2.0]]]).is_err());
    }

    #[test]
    fn identity_spectrum() {
        let w = MatrixWord::diagonal(&[1.0, 1.0]).unwrap();
        let s = eigen_moduli(&w).unwrap();
        assert_eq!(s.moduli, vec![1.0, 1.0]);
        assert_eq!(s.exponents, vec![0.0, 0.0]);
    }

    #[test]
    fn cat_map_moduli_match_quadratic_roots() {
        // roots of t^2 - 3t + 1
        let disc = (9.0f64 - 4.0).sqrt();
        let expected = [(3.0 - disc) / 2.0, (3.0 + disc) / 2.0];
        let s = eigen_moduli(&cat()).unwrap();
        for (m, e) in s.moduli.iter().zip(expected) {
            assert!((m - e).abs() < 1e-12, "{m} vs {e}");
        }
    }

    #[test]
    fn rotation_has_unit_moduli() {
        let s = eigen_moduli(&rotation(1.0)).unwrap();
        for m in s.moduli {
            assert!((m - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn long_products_keep_small_exponents() {
        let w = MatrixWord::new(vec![DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]); 400]).unwrap();
        let s = eigen_moduli(&w).unwrap();
        assert!((s.exponents[0] + golden().ln()).abs() < 1e-9);
        assert!((s.exponents[1] - golden().ln()).abs() < 1e-9);
    }

    #[test]
    fn lyapunov_map_examples() {
        let m = lyapunov_map_of_periodic(&MatrixWord::diagonal(&[1.0, 1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(m.values(), &[0.0, 0.0, 0.0, 0.0]);
        let m = lyapunov_map_of_periodic(&cat()).unwrap();
        assert!((m.values()[1] + golden().ln()).abs() < 1e-12);
        assert!(m.values()[2].abs() < 1e-12);
        let m = lyapunov_map_of_periodic(&MatrixWord::diagonal(&[0.5, 2.0]).unwrap()).unwrap();
        assert!((m.values()[1] + 2f64.ln()).abs() < 1e-15);
        assert!(m.values()[2].abs() < 1e-15);
    }

    #[test]
    fn spectral_obstruction_examples() {
        assert!(spectral_obstruction_indices(&cat(), 1e-9).unwrap().is_empty());
        let w = MatrixWord::diagonal(&[-2.0, 2.0]).unwrap();
        assert_eq!(spectral_obstruction_indices(&w, 1e-9).unwrap(), BTreeSet::from([1]));
        let w = MatrixWord::diagonal(&[0.25, 0.5, 3.0]).unwrap();
        assert!(spectral_obstruction_indices(&w, 1e-9).unwrap().is_empty());
        // complex pair counts as an equal-moduli obstruction
        let w = MatrixWord::from_rows(&[vec![
            vec![0.0, -2.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.1],
        ]])
        .unwrap();
        assert_eq!(spectral_obstruction_indices(&w, 1e-9).unwrap(), BTreeSet::from([2]));
    }

    #[test]
    fn domination_examples() {
        let c = finite_time_domination(&cat(), 1, 3, 2.0).unwrap();
        assert_eq!(c.verdict, DominationVerdict::Dominated);
        // A^3 is symmetric with eigenvalues γ^{±3}: gap ratio γ^6
        assert!((c.min_log_gap - 6.0 * golden().ln()).abs() < 1e-9);
        for n in [1, 5, 40] {
            let c = finite_time_domination(&rotation(1.0), 1, n, 1.01).unwrap();
            assert_eq!(c.verdict, DominationVerdict::NotDominated);
        }
        let id = MatrixWord::diagonal(&[1.0, 1.0]).unwrap();
        let c = finite_time_domination(&id, 1, 1, 1.5).unwrap();
        assert_eq!(c.verdict, DominationVerdict::NotDominated);
    }

    #[test]
    fn domination_is_inconclusive_on_short_horizons() {
        let w = MatrixWord::diagonal(&[1.0, 1.1]).unwrap();
        let c = finite_time_domination(&w, 1, 1, 2.0).unwrap();
        assert_eq!(c.verdict, DominationVerdict::Inconclusive);
        let c = finite_time_domination(&w, 1, 10, 2.0).unwrap();
        assert_eq!(c.verdict, DominationVerdict::Dominated);
    }

    #[test]
    fn domination_argument_errors() {
        assert!(finite_time_domination(&cat(), 0, 3, 2.0).is_err());
        assert!(finite_time_domination(&cat(), 2, 3, 2.0).is_err());
        assert!(finite_time_domination(&cat(), 1, 0, 2.0).is_err());
        assert!(finite_time_domination(&cat(), 1, 3, 1.0).is_err());
    }

    #[test]
    fn finest_splitting_examples() {
        let rate = default_rate();
        assert_eq!(finest_dominated_splitting(&cat(), 32, rate).unwrap(), vec![1, 1]);
        assert_eq!(finest_dominated_splitting(&rotation(1.0), 32, rate).unwrap(), vec![2]);
        let w = MatrixWord::diagonal(&[0.25, 0.5, 3.0]).unwrap();
        assert_eq!(finest_dominated_splitting(&w, 64, rate).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn volume_examples() {
        let rate = default_rate();
        let r = volume_hyperbolicity_check(&cat(), &[1, 1], rate, 32).unwrap();
        assert!(r.volume_hyperbolic);
        assert!((r.first_block_log_volume + 32.0 * golden().ln()).abs() < 1e-8);

        let w = MatrixWord::diagonal(&[0.5, 1.0 / 3.0, 4.0]).unwrap();
        let r = volume_hyperbolicity_check(&w, &[2, 1], rate, 32).unwrap();
        assert!(r.volume_hyperbolic);
        assert!((r.first_block_log_volume - 32.0 * (1.0f64 / 6.0).ln()).abs() < 1e-8);

        let w = MatrixWord::diagonal(&[2.0, 3.0]).unwrap();
        assert!(matches!(
            volume_hyperbolicity_check(&w, &[2], rate, 32),
            Err(Error::InvalidSplitting(_))
        ));
        let r = volume_hyperbolicity_check(&w, &[1, 1], rate, 32).unwrap();
        assert!(!r.volume_hyperbolic && !r.det_contracted_first && r.det_expanded_last);

        let rot = rotation(1.0);
        assert_eq!(
            volume_hyperbolicity_check(&rot, &[1, 1], rate, 32),
            Err(Error::SplittingNotCertified { index: 1 })
        );
    }

    #[test]
    fn volume_on_non_diagonal_periodic_word() {
        // conjugated diagonal cocycle of period 2: volumes are conjugation
        // invariant up to bounded distortion, so signs must survive
        let h = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, 0.0, 1.0, 0.2, 0.1, 0.0, 1.0]);
        let hi = h.clone().try_inverse().unwrap();
        let d1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, 0.6, 3.0]));
        let d2 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.4, 2.5]));
        let w = MatrixWord::new(vec![&h * &d1 * &hi, &h * &d2 * &hi]).unwrap();
        let r = volume_hyperbolicity_check(&w, &[2, 1], default_rate(), 32).unwrap();
        assert!(r.volume_hyperbolic);
    }

    #[test]
    fn classification_examples() {
        let w = MatrixWord::diagonal(&[0.5, 1.0 / 3.0]).unwrap();
        assert_eq!(classify_periodic(&w, 1e-9).unwrap(), PeriodicClass::Sink);
        assert_eq!(classify_periodic(&cat(), 1e-9).unwrap(), PeriodicClass::Saddle(1));
        assert_eq!(classify_periodic(&rotation(1.0), 1e-9).unwrap(), PeriodicClass::Neutral);
        let w = MatrixWord::diagonal(&[3.0, 4.0]).unwrap();
        assert_eq!(classify_periodic(&w, 1e-9).unwrap(), PeriodicClass::Source);
    }

    #[test]
    fn sectional_dissipativity_examples() {
        let s = sectional_dissipativity_of_exponents(&[-2.0, 1.0, 3.0]).unwrap();
        assert_eq!(s, SectionalDissipativity { forward: false, backward: false });
        let w = MatrixWord::diagonal(&[0.25, 0.5]).unwrap();
        assert!(sectional_dissipativity(&w).unwrap().forward);
        let w = MatrixWord::diagonal(&[3.0, 4.0]).unwrap();
        assert!(sectional_dissipativity(&w).unwrap().backward);
        assert!(sectional_dissipativity_of_exponents(&[1.0]).is_err());
    }
}
