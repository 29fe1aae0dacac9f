//! Brute-force reference eigensolver for symmetric tridiagonal matrices.
//!
//! Eigenvalues come from Sturm-count bisection, eigenvectors from inverse
//! iteration with a pivoted tridiagonal LU. Nothing here depends on the
//! analytic solver so that the two can be compared.

use crate::chebyshev::Scaled;
use crate::error::{Error, Result};
use crate::qutmodel::QutMatrix;

const MAX_INVERSE_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTridiag {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl DenseTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::Shape(format!(
                "{} diagonal and {} off-diagonal entries",
                diag.len(),
                offdiag.len()
            )));
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "entry",
                index: 0,
            });
        }
        Ok(Self { diag, offdiag })
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

    /// Principal submatrix `T_{first:last}` (1-based, inclusive); `None`
    /// when empty.
    pub fn sub(&self, first: usize, last: usize) -> Option<Self> {
        if first == 0 || first > last || last > self.ell() {
            return None;
        }
        Some(Self {
            diag: self.diag[first - 1..last].to_vec(),
            offdiag: self.offdiag[first - 1..last - 1].to_vec(),
        })
    }

    pub fn norm_inf(&self) -> f64 {
        let ell = self.ell();
        (0..ell)
            .map(|i| {
                let l = if i > 0 {
                    self.offdiag[i - 1].abs()
                } else {
                    0.0
                };
                let r = if i + 1 < ell {
                    self.offdiag[i].abs()
                } else {
                    0.0
                };
                self.diag[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    /// `T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let ell = self.ell();
        (0..ell)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < ell {
                    y += self.offdiag[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    fn pivot_floor(&self) -> f64 {
        let bmax = self.offdiag.iter().fold(1.0f64, |m, b| m.max(b * b));
        f64::MIN_POSITIVE * bmax
    }
}

impl From<&QutMatrix> for DenseTridiag {
    fn from(m: &QutMatrix) -> Self {
        Self {
            diag: m.diag().to_vec(),
            offdiag: m.offdiag().to_vec(),
        }
    }
}

/// Number of eigenvalues strictly less than `x`.
pub fn sturm_count(t: &DenseTridiag, x: f64) -> usize {
    let floor = t.pivot_floor();
    let mut count = 0;
    let mut d = t.diag[0] - x;
    for i in 0..t.ell() {
        if i > 0 {
            let b = t.offdiag[i - 1];
            d = (t.diag[i] - x) - b * b / d;
        }
        // a vanishing pivot is read as x moved slightly down, so an
        // eigenvalue exactly at x is not counted
        if d.abs() < floor {
            d = floor;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// `χ(λ) = det(λ - T)` as a scaled pair.
pub fn char_poly_eval(t: &DenseTridiag, lambda: f64) -> Scaled {
    let (mut prev, mut cur) = (1.0f64, lambda - t.diag[0]);
    let mut log_acc = 0.0;
    for i in 1..t.ell() {
        let b = t.offdiag[i - 1];
        let next = (lambda - t.diag[i]) * cur - b * b * prev;
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            let e = m.ln();
            cur /= m;
            prev /= m;
            log_acc += e;
        }
    }
    if cur == 0.0 {
        return Scaled::ZERO;
    }
    Scaled::from_sign_ln(cur.signum(), cur.abs().ln() + log_acc)
}

/// All eigenvalues in descending order.
pub fn eigenvalues(t: &DenseTridiag) -> Vec<f64> {
    let ell = t.ell();
    let norm = t.norm_inf();
    let (lo0, hi0) = (-norm - 1.0, norm + 1.0);
    let mut vals: Vec<f64> = (0..ell)
        .map(|j| {
            // j-th smallest: count(lo) <= j < count(hi)
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sturm_count(t, mid) > j {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    vals.reverse();
    vals
}

/// Solves `(T - σ) x = rhs` with a pivoted LU of the shifted tridiagonal.
struct ShiftedLu {
    // row i of U: (u0[i], u1[i], u2[i]) on columns i, i+1, i+2
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &DenseTridiag, sigma: f64, tiny: f64) -> Self {
        let ell = t.ell();
        let mut u0 = vec![0.0; ell];
        let mut u1 = vec![0.0; ell];
        let mut u2 = vec![0.0; ell];
        let mut mult = vec![0.0; ell];
        let mut swapped = vec![false; ell];
        // current row being eliminated: (d, e) on columns i, i+1
        let mut d = t.diag[0] - sigma;
        let mut e = if ell > 1 { t.offdiag[0] } else { 0.0 };
        for i in 0..ell {
            if i + 1 == ell {
                u0[i] = if d.abs() < tiny { tiny } else { d };
                break;
            }
            let sub = t.offdiag[i];
            let next_d = t.diag[i + 1] - sigma;
            let next_e = if i + 2 < ell { t.offdiag[i + 1] } else { 0.0 };
            if sub.abs() > d.abs() {
                // swap rows i and i+1
                swapped[i] = true;
                u0[i] = sub;
                u1[i] = next_d;
                u2[i] = next_e;
                let l = d / sub;
                mult[i] = l;
                d = e - l * next_d;
                e = -l * next_e;
            } else {
                let piv = if d.abs() < tiny { tiny } else { d };
                u0[i] = piv;
                u1[i] = e;
                u2[i] = 0.0;
                let l = sub / piv;
                mult[i] = l;
                d = next_d - l * e;
                e = next_e;
            }
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let ell = rhs.len();
        for i in 0..ell.saturating_sub(1) {
            if self.swapped[i] {
                rhs.swap(i, i + 1);
            }
            rhs[i + 1] -= self.mult[i] * rhs[i];
        }
        for i in (0..ell).rev() {
            let mut s = rhs[i];
            if i + 1 < ell {
                s -= self.u1[i] * rhs[i + 1];
            }
            if i + 2 < ell {
                s -= self.u2[i] * rhs[i + 2];
            }
            rhs[i] = s / self.u0[i];
        }
    }
}

/// Deterministic start vectors for inverse iteration.
struct SeedSequence(u64);

impl SeedSequence {
    fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }
}

fn normalize_vec(x: &mut [f64]) -> f64 {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// Eigenvectors for the given (descending) eigenvalues, one row per value.
/// Rows are oriented so the first nonzero component is positive.
pub fn eigenvectors(t: &DenseTridiag, values: &[f64]) -> Result<Vec<Vec<f64>>> {
    let ell = t.ell();
    let norm = t.norm_inf().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let cluster_gap = 1e-3 * norm;
    let perturb = 10.0 * eps * norm;
    let tiny = eps * norm;
    let mut seeds = SeedSequence(0x5eed_1234_abcd_0001);

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    let mut last_shift = f64::INFINITY;
    for (idx, &lambda) in values.iter().enumerate() {
        if idx > 0 && (values[idx - 1] - lambda).abs() > cluster_gap {
            cluster_start = idx;
        }
        // separate numerically coincident shifts inside a cluster
        let mut sigma = lambda;
        if idx > cluster_start && last_shift - sigma < perturb {
            sigma = last_shift - perturb;
        }
        last_shift = sigma;

        let lu = ShiftedLu::factor(t, sigma, tiny);
        let mut x: Vec<f64> = (0..ell).map(|_| seeds.next()).collect();
        normalize_vec(&mut x);
        let mut converged = false;
        for _ in 0..MAX_INVERSE_ITERATIONS {
            for prev in &out[cluster_start..idx] {
                let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(prev).for_each(|(xi, pi)| *xi -= dot * pi);
            }
            lu.solve(&mut x);
            for prev in &out[cluster_start..idx] {
                let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(prev).for_each(|(xi, pi)| *xi -= dot * pi);
            }
            let growth = normalize_vec(&mut x);
            if !growth.is_finite() {
                return Err(Error::ConvergenceFailure { lambda });
            }
            let tx = t.apply(&x);
            let resid = tx
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - lambda * b).abs())
                .fold(0.0, f64::max);
            if resid <= 100.0 * ell as f64 * eps * norm {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ConvergenceFailure { lambda });
        }
        if let Some(first) = x.iter().find(|v| v.abs() > 0.0) {
            if *first < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// Eigenvalues in descending order and, optionally, the matching
/// eigenvectors as rows.
pub fn eig_all(t: &DenseTridiag, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
    let values = eigenvalues(t);
    let vectors = if want_vectors {
        Some(eigenvectors(t, &values)?)
    } else {
        None
    };
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn uniform(ell: usize) -> DenseTridiag {
        DenseTridiag::new(vec![0.0; ell], vec![1.0; ell - 1]).unwrap()
    }

    #[test]
    fn sturm_examples() {
        let t = uniform(3);
        assert_eq!(sturm_count(&t, 0.0), 1);
        assert_eq!(sturm_count(&t, t.norm_inf() + 1.5), 3);
        assert_eq!(sturm_count(&t, -10.0), 0);
    }

    #[test]
    fn uniform_eigenvalues() {
        let vals = eigenvalues(&uniform(4));
        for (j, v) in vals.iter().enumerate() {
            let exact = 2.0 * (PI * (j + 1) as f64 / 5.0).cos();
            assert!((v - exact).abs() < 1e-14, "{v} vs {exact}");
        }
    }

    #[test]
    fn char_poly_examples() {
        let t = DenseTridiag::new(vec![0.0], vec![]).unwrap();
        assert!((char_poly_eval(&t, 3.0).value() - 3.0).abs() < 1e-15);
        let t = uniform(5);
        let root = 2.0 * (PI / 6.0).cos();
        assert!(char_poly_eval(&t, root).value().abs() < 1e-12);
    }

    #[test]
    fn char_poly_no_overflow() {
        let t = uniform(3000);
        let v = char_poly_eval(&t, 5.0);
        assert!(v.mantissa.is_finite() && v.log_scale > 700.0);
    }

    #[test]
    fn vectors_are_orthonormal_for_degenerate_pairs() {
        // two far-apart copies of the same block: exact degeneracy up to tunnelling
        let ell = 60;
        let mut diag = vec![0.0; ell];
        diag[0] = 3.0;
        diag[ell - 1] = 3.0;
        let t = DenseTridiag::new(diag, vec![1.0; ell - 1]).unwrap();
        let (vals, vecs) = eig_all(&t, true).unwrap();
        let vecs = vecs.unwrap();
        assert!((vals[0] - vals[1]).abs() < 1e-14);
        for i in 0..ell {
            for j in 0..ell {
                let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "({i},{j}) -> {dot}");
            }
        }
    }

    #[test]
    fn independent_of_analytic_solver() {
        let src = include_str!("oracle.rs");
        for line in src.lines().filter(|l| l.trim_start().starts_with("use ")) {
            assert!(
                !line.contains("polyengine") && !line.contains("spectrum"),
                "oracle must not depend on the analytic path: {line}"
            );
        }
    }
}
