//! Hemi-metrics on the nonnegative orthant and on nonnegative matrices.
//!
//! On the orthant the Funk hemi-metric is `Funk(x, y) = log max_i x_i / y_i`.
//! Its symmetrizations are the Thompson metric `max(Funk(x,y), Funk(y,x))`
//! and Hilbert's projective metric `Funk(x,y) + Funk(y,x)`. For square
//! matrices acting on row vectors the same construction applies entrywise
//! on a common support pattern.
//!
//! The checked functions return [`Error::DifferentParts`] instead of `+∞`.
//! Hot loops elsewhere in the crate use [`funk_or_inf`], which maps the
//! incomparable case to `f64::INFINITY`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square nonnegative matrix acting on row vectors (`x ↦ xM`).
pub type Matrix = DMatrix<f64>;

/// A point of the closed nonnegative orthant, not identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PosVector(Vec<f64>);

impl PosVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParam("empty vector".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidParam(format!(
                "coordinate {c} is not a finite nonnegative number"
            )));
        }
        if coords.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidParam("vector is identically zero".into()));
        }
        Ok(PosVector(coords))
    }

    /// Builds an interior point, rejecting any zero coordinate.
    pub fn interior(coords: Vec<f64>) -> Result<Self> {
        let v = Self::new(coords)?;
        if !v.is_interior() {
            return Err(Error::InvalidParam(
                "interior point required, found a zero coordinate".into(),
            ));
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&c| c > 0.0)
    }

    /// Rescales so that `⟨x, e*⟩ = 1`.
    pub fn normalized(&self, e_star: &[f64]) -> PosVector {
        PosVector(normalize(&self.0, e_star))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for PosVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PosVector::new(v)
    }
}

impl From<PosVector> for Vec<f64> {
    fn from(v: PosVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for PosVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Row vector times matrix.
pub fn row_times(x: &[f64], m: &Matrix) -> Vec<f64> {
    let n = m.ncols();
    let mut out = vec![0.0; n];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += xi * m[(i, j)];
        }
    }
    out
}

/// `x / ⟨x, e*⟩`.
pub fn normalize(x: &[f64], e_star: &[f64]) -> Vec<f64> {
    let s = dot(x, e_star);
    x.iter().map(|c| c / s).collect()
}

/// Directed Funk distance with the incomparable case mapped to `+∞`.
///
/// Coordinates where both entries vanish are ignored; `x_i > 0 = y_i`
/// yields `+∞`.
pub fn funk_or_inf(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = f64::NEG_INFINITY;
    for (&a, &b) in x.iter().zip(y) {
        if a > 0.0 {
            if b == 0.0 {
                return f64::INFINITY;
            }
            let t = a.ln() - b.ln();
            if t > acc {
                acc = t;
            }
        }
    }
    acc
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(())
}

/// `log max_i x_i / y_i`.
pub fn funk_vec(x: &PosVector, y: &PosVector) -> Result<f64> {
    check_dims(x.coords(), y.coords())?;
    let d = funk_or_inf(x.coords(), y.coords());
    if d.is_infinite() {
        return Err(Error::DifferentParts(
            "x has a positive coordinate where y vanishes".into(),
        ));
    }
    Ok(d)
}

pub fn thompson_vec(x: &PosVector, y: &PosVector) -> Result<f64> {
    Ok(funk_vec(x, y)?.max(funk_vec(y, x)?))
}

/// Hilbert's projective metric; zero exactly on proportional pairs.
pub fn hilbert_vec(x: &PosVector, y: &PosVector) -> Result<f64> {
    Ok(funk_vec(x, y)? + funk_vec(y, x)?)
}

/// Hilbert distance with `+∞` for incomparable pairs.
pub fn hilbert_or_inf(x: &[f64], y: &[f64]) -> f64 {
    funk_or_inf(x, y) + funk_or_inf(y, x)
}

/// Boolean support of a square nonnegative matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SupportPattern {
    n: usize,
    mask: Vec<bool>,
}

impl SupportPattern {
    pub fn from_mask(n: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: mask.len(),
            });
        }
        Ok(SupportPattern { n, mask })
    }

    /// Exact zero test: an entry is in the support iff it is nonzero.
    pub fn of(m: &Matrix) -> Self {
        let n = m.nrows();
        let mask = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] != 0.0)
            .collect();
        SupportPattern { n, mask }
    }

    pub fn all_true(n: usize) -> Self {
        SupportPattern {
            n,
            mask: vec![true; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut mask = vec![false; n * n];
        for i in 0..n {
            mask[i * n + i] = true;
        }
        SupportPattern { n, mask }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n + j]
    }

    pub fn is_all_true(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    /// Index of the first row with no true entry, if any.
    pub fn zero_row(&self) -> Option<usize> {
        (0..self.n).find(|&i| (0..self.n).all(|j| !self.get(i, j)))
    }

    /// Boolean matrix product.
    pub fn compose(&self, other: &SupportPattern) -> SupportPattern {
        let n = self.n;
        let mut mask = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if self.get(i, k) {
                    for j in 0..n {
                        if other.get(k, j) {
                            mask[i * n + j] = true;
                        }
                    }
                }
            }
        }
        SupportPattern { n, mask }
    }
}

impl fmt::Debug for SupportPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| if self.get(i, j) { '1' } else { '0' })
                    .collect()
            })
            .collect();
        write!(f, "SupportPattern[{}]", rows.join(";"))
    }
}

/// A finite set of nonnegative matrices sharing one support pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    matrices: Vec<Matrix>,
    support: SupportPattern,
}

impl MatrixSet {
    pub fn new(matrices: Vec<Matrix>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidParam("empty matrix set".into()))?;
        let n = first.nrows();
        for m in &matrices {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.nrows().max(m.ncols()),
                });
            }
            if m.iter().any(|c| !c.is_finite() || *c < 0.0) {
                return Err(Error::InvalidParam(
                    "matrix entries must be finite and nonnegative".into(),
                ));
            }
        }
        let support = SupportPattern::of(first);
        if let Some(k) = matrices
            .iter()
            .position(|m| SupportPattern::of(m) != support)
        {
            return Err(Error::DifferentParts(format!(
                "matrix {k} does not share the support of matrix 0"
            )));
        }
        Ok(MatrixSet { matrices, support })
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn support(&self) -> &SupportPattern {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }
}

/// Matrix Funk distance `log max {A_ij / A2_ij : (i,j) in the support}`.
///
/// Bounds the vector distance: `Funk(xA, xA2) ≤ funk_mat(A, A2)` for every
/// interior row vector `x`.
pub fn funk_mat(a: &Matrix, a2: &Matrix) -> Result<f64> {
    if a.shape() != a2.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a2.nrows(),
        });
    }
    if SupportPattern::of(a) != SupportPattern::of(a2) {
        return Err(Error::DifferentParts("matrix supports differ".into()));
    }
    let mut acc = f64::NEG_INFINITY;
    for (&p, &q) in a.iter().zip(a2.iter()) {
        if p != 0.0 {
            acc = acc.max(p.ln() - q.ln());
        }
    }
    if acc == f64::NEG_INFINITY {
        return Err(Error::InvalidParam("zero matrix".into()));
    }
    Ok(acc)
}

pub fn thompson_mat(a: &Matrix, b: &Matrix) -> Result<f64> {
    Ok(funk_mat(a, b)?.max(funk_mat(b, a)?))
}

/// Hausdorff distance induced by the Thompson metric on matrices.
pub fn hausdorff_thompson(s1: &MatrixSet, s2: &MatrixSet) -> Result<f64> {
    if s1.support() != s2.support() {
        return Err(Error::DifferentParts(
            "matrix sets do not share a support pattern".into(),
        ));
    }
    let table: Vec<Vec<f64>> = s1
        .matrices()
        .iter()
        .map(|a| {
            s2.matrices()
                .iter()
                .map(|b| thompson_mat(a, b))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let forward = table
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let backward = (0..s2.len())
        .map(|j| table.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(forward.max(backward))
}
