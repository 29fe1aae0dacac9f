//! Quasi-uniform tridiagonal matrices: validation, the declared uniform
//! block, and the affine normalization of the bulk to `(a, b) = (0, 1)`.
//!
//! Indices `u` and `v` are 1-based and inclusive, matching the usual
//! `T_{u:v}` notation for principal submatrices. Storage is 0-based.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QutMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    u: usize,
    v: usize,
    bulk_a: f64,
    bulk_b: f64,
}

impl QutMatrix {
    /// Builds and validates a matrix with declared uniform block `[u, v]`.
    pub fn new(
        diag: Vec<f64>,
        offdiag: Vec<f64>,
        u: usize,
        v: usize,
        bulk_a: f64,
        bulk_b: f64,
    ) -> Result<Self> {
        let m = Self {
            diag,
            offdiag,
            u,
            v,
            bulk_a,
            bulk_b,
        };
        m.validate()?;
        Ok(m)
    }

    /// Fully uniform `ell × ell` matrix.
    pub fn uniform(ell: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a; ell], vec![b; ell.saturating_sub(1)], 1, ell, a, b)
    }

    /// Assembles a matrix from its two boundary regions.
    ///
    /// `left_a[i]` is `a_{i+1}` and `left_b[i]` couples rows `i+1` and `i+2`.
    /// `right_a` lists the last `R` diagonal entries in order and
    /// `right_b[i]` couples row `ell-R+1+i` to the row above it.
    pub fn from_edges(
        ell: usize,
        bulk_a: f64,
        bulk_b: f64,
        left_a: &[f64],
        left_b: &[f64],
        right_a: &[f64],
        right_b: &[f64],
    ) -> Result<Self> {
        let (l, r) = (left_a.len(), right_a.len());
        if left_b.len() != l || right_b.len() != r {
            return Err(Error::Shape(format!(
                "edge lists need equal a/b lengths (left {}/{}, right {}/{})",
                l,
                left_b.len(),
                r,
                right_b.len()
            )));
        }
        if ell == 0 || l + r >= ell {
            return Err(Error::Shape(format!(
                "boundary rows {l}+{r} leave no uniform block in dimension {ell}"
            )));
        }
        let mut diag = vec![bulk_a; ell];
        let mut offdiag = vec![bulk_b; ell - 1];
        diag[..l].copy_from_slice(left_a);
        offdiag[..l].copy_from_slice(left_b);
        diag[ell - r..].copy_from_slice(right_a);
        offdiag[ell - 1 - r..].copy_from_slice(right_b);
        Self::new(diag, offdiag, l + 1, ell - r, bulk_a, bulk_b)
    }

    pub fn validate(&self) -> Result<()> {
        let ell = self.diag.len();
        if ell == 0 {
            return Err(Error::Shape("empty matrix".into()));
        }
        if self.offdiag.len() + 1 != ell {
            return Err(Error::Shape(format!(
                "{} off-diagonal entries for dimension {ell}",
                self.offdiag.len()
            )));
        }
        if self.u == 0 || self.u > self.v || self.v > ell {
            return Err(Error::BadIndices {
                u: self.u,
                v: self.v,
                ell,
            });
        }
        if let Some(i) = self.diag.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "a",
                index: i + 1,
            });
        }
        if let Some(i) = self.offdiag.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "b",
                index: i + 1,
            });
        }
        if !self.bulk_a.is_finite() || !self.bulk_b.is_finite() {
            return Err(Error::NonFinite {
                what: "bulk",
                index: 0,
            });
        }
        if self.bulk_b == 0.0 {
            return Err(Error::ZeroCoupling { index: self.u });
        }
        if let Some(i) = self.offdiag.iter().position(|&b| b == 0.0) {
            return Err(Error::ZeroCoupling { index: i + 1 });
        }
        for mu in self.u..=self.v {
            let a = self.diag[mu - 1];
            if a != self.bulk_a {
                return Err(Error::BlockMismatch {
                    what: "a",
                    index: mu,
                    found: a,
                    expected: self.bulk_a,
                });
            }
        }
        for mu in self.u..self.v {
            let b = self.offdiag[mu - 1];
            if b != self.bulk_b {
                return Err(Error::BlockMismatch {
                    what: "b",
                    index: mu,
                    found: b,
                    expected: self.bulk_b,
                });
            }
        }
        let n = self.block_size();
        if 2 * (ell - n) > ell {
            warn!(
                "only {n} of {ell} rows are uniform; the boundary polynomials will have high degree"
            );
        }
        Ok(())
    }

    pub fn ell(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// First row of the uniform block (1-based).
    pub fn u(&self) -> usize {
        self.u
    }

    /// Last row of the uniform block (1-based).
    pub fn v(&self) -> usize {
        self.v
    }

    /// `n = v - u + 1`.
    pub fn block_size(&self) -> usize {
        self.v - self.u + 1
    }

    pub fn bulk_a(&self) -> f64 {
        self.bulk_a
    }

    pub fn bulk_b(&self) -> f64 {
        self.bulk_b
    }

    /// `a_mu`, 1-based.
    pub fn a(&self, mu: usize) -> f64 {
        self.diag[mu - 1]
    }

    /// `b_mu`, 1-based.
    pub fn b(&self, mu: usize) -> f64 {
        self.offdiag[mu - 1]
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let ell = self.ell();
        (0..ell)
            .map(|i| {
                let left = if i > 0 {
                    self.offdiag[i - 1].abs()
                } else {
                    0.0
                };
                let right = if i + 1 < ell {
                    self.offdiag[i].abs()
                } else {
                    0.0
                };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// True when the matrix commutes with the index reversal.
    pub fn is_mirror_symmetric(&self) -> bool {
        let ell = self.ell();
        (0..ell).all(|i| self.diag[i] == self.diag[ell - 1 - i])
            && (0..ell - 1).all(|i| self.offdiag[i] == self.offdiag[ell - 2 - i])
    }
}

/// Longest run of rows with equal diagonal entries joined by equal
/// couplings, as `(u, v, a, b)` with 1-based inclusive indices.
///
/// This is a convenience for callers; floating-point equality is exact and
/// the result is never applied implicitly.
pub fn detect_uniform_block(diag: &[f64], offdiag: &[f64]) -> Option<(usize, usize, f64, f64)> {
    let ell = diag.len();
    if ell == 0 || offdiag.len() + 1 != ell {
        return None;
    }
    let mut best = (0usize, 0usize);
    let mut s = 0;
    while s < ell {
        let mut e = s;
        while e + 1 < ell && diag[e + 1] == diag[s] && offdiag[e] == offdiag[s] {
            e += 1;
        }
        if e - s > best.1 - best.0 {
            best = (s, e);
        }
        s = if e > s { e } else { s + 1 };
    }
    let (s, e) = best;
    let b = *offdiag.get(s).or_else(|| offdiag.last())?;
    Some((s + 1, e + 1, diag[s], b))
}

/// A matrix whose bulk is `(0, 1)` together with the map back to the
/// original: `λ = shift + scale · λ_normalized`, and eigenvector rows
/// multiplied by `sign_flips`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedQut {
    inner: QutMatrix,
    shift: f64,
    scale: f64,
    sign_flips: Vec<f64>,
}

impl NormalizedQut {
    pub fn matrix(&self) -> &QutMatrix {
        &self.inner
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sign_flips(&self) -> &[f64] {
        &self.sign_flips
    }

    pub fn ell(&self) -> usize {
        self.inner.ell()
    }

    pub fn block_size(&self) -> usize {
        self.inner.block_size()
    }

    /// Wraps an already-normalized matrix with the identity map.
    pub fn identity(m: QutMatrix) -> Result<Self> {
        if m.bulk_a != 0.0 || m.bulk_b != 1.0 || m.offdiag.iter().any(|&b| b < 0.0) {
            return Err(Error::InvalidArgument(
                "matrix is not in normalized form".into(),
            ));
        }
        let ell = m.ell();
        Ok(Self {
            inner: m,
            shift: 0.0,
            scale: 1.0,
            sign_flips: vec![1.0; ell],
        })
    }
}

/// Maps the bulk to `(0, 1)` and makes every coupling positive with a
/// diagonal `±1` similarity.
pub fn normalize(m: &QutMatrix) -> Result<NormalizedQut> {
    m.validate()?;
    let shift = m.bulk_a;
    let scale = m.bulk_b.abs();
    let diag: Vec<f64> = m.diag.iter().map(|&a| (a - shift) / scale).collect();
    let scaled: Vec<f64> = m.offdiag.iter().map(|&b| b / scale).collect();

    let mut sign_flips = Vec::with_capacity(m.ell());
    sign_flips.push(1.0);
    for &b in &scaled {
        let prev = *sign_flips.last().unwrap();
        sign_flips.push(if b < 0.0 { -prev } else { prev });
    }
    let offdiag: Vec<f64> = scaled.iter().map(|b| b.abs()).collect();
    let inner = QutMatrix::new(diag, offdiag, m.u, m.v, 0.0, 1.0)?;
    Ok(NormalizedQut {
        inner,
        shift,
        scale,
        sign_flips,
    })
}

/// Maps a spectrum of the normalized matrix back to the original one.
pub fn denormalize_spectrum(mut s: Spectrum, n: &NormalizedQut) -> Spectrum {
    for lambda in s.eigenvalues.iter_mut() {
        *lambda = n.shift + n.scale * *lambda;
    }
    if let Some(vectors) = s.vectors.as_mut() {
        for row in vectors.iter_mut() {
            for (x, f) in row.iter_mut().zip(&n.sign_flips) {
                *x *= f;
            }
        }
    }
    s.shift = n.shift;
    s.scale = n.scale;
    s
}
