//! Low-degree polynomials in `ξ` and the boundary polynomials of a
//! quasi-uniform matrix.
//!
//! The characteristic polynomial of a normalized QUT matrix with uniform
//! block size `n` is written as
//!
//! ```text
//! χ(2ξ) = p0(ξ) U_n(ξ) + p1(ξ) U_{n-1}(ξ) + p2(ξ) U_{n-2}(ξ)
//!       = u(ξ) U_n(ξ) + t(ξ) T_{n+1}(ξ)
//! ```
//!
//! where only the boundary rows enter `p0, p1, p2`. The same machinery
//! gives the corner polynomials of `T_{2:ℓ}` and `T_{1:ℓ-1}` on the basis of
//! the original block size.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use log::warn;

use crate::chebyshev::{cheb_t_raw, cheb_u_raw};
use crate::error::{Error, Result};
use crate::qutmodel::{NormalizedQut, QutMatrix};

/// Boundary width beyond which monomial-basis conditioning is a concern.
pub const WIDE_BOUNDARY_WARNING: usize = 30;

/// Dense real polynomial, coefficients in ascending degree. The zero
/// polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `ξ`.
    pub fn xi() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    /// `c0 + c1 ξ`.
    pub fn linear(c0: f64, c1: f64) -> Self {
        Self::new(vec![c0, c1])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// Sum of `|c_i| |x|^i`, the natural scale of rounding errors in `eval`.
    pub fn eval_abs(&self, x: f64) -> f64 {
        let x = x.abs();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c.abs())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `p(α ξ + β)`.
    pub fn compose_linear(&self, alpha: f64, beta: f64) -> Self {
        let inner = Poly::linear(beta, alpha);
        self.coeffs.iter().rev().fold(Poly::zero(), |acc, &c| {
            &(&acc * &inner) + &Poly::constant(c)
        })
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            let c = c.abs();
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}ξ")?,
                _ => write!(f, "{c}ξ^{i}")?,
            }
            first = false;
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let c = (0..len)
            .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + rhs.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        Poly::new(c)
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;

    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

/// Coefficients on the basis `(U_n, U_{n-1}, U_{n-2})` of a fixed `n`.
pub type Triple = [Poly; 3];

fn triple_lin(alpha: &Poly, x: &Triple, beta: f64, y: &Triple) -> Triple {
    std::array::from_fn(|i| &(alpha * &x[i]) - &y[i].scale(beta))
}

/// Lowers every Chebyshev index by one, rewriting `U_{n-3}` on the fixed
/// basis with `U_{n-3} = 2ξ U_{n-2} - U_{n-1}`.
fn shift_down(x: &Triple) -> Triple {
    let [c0, c1, c2] = x;
    [Poly::zero(), c0 - c2, c1 + &(&Poly::linear(0.0, 2.0) * c2)]
}

fn basis_vector(i: usize) -> Triple {
    std::array::from_fn(|j| {
        if i == j {
            Poly::constant(1.0)
        } else {
            Poly::zero()
        }
    })
}

/// Expansion of `χ_{first:last}(2ξ)` (1-based, inclusive) for a normalized
/// matrix, on the basis of the full uniform block size `n`.
///
/// The uniform block of the submatrix is the declared block clipped to
/// `[first, last]`; when clipping shortens it, the starting Chebyshev
/// indices are lowered accordingly.
fn expand_submatrix(m: &QutMatrix, first: usize, last: usize) -> Triple {
    let n = m.block_size();
    let bu = m.u().max(first);
    let bv = m.v().min(last);
    let sub_block = (bv + 1).saturating_sub(bu);
    let drop = n - sub_block;

    // χ_{bu:bv} = U_{sub_block}, χ_{bu:bv-1} = U_{sub_block-1}
    let mut cur = basis_vector(0);
    let mut prev = basis_vector(1);
    for _ in 0..drop {
        cur = shift_down(&cur);
        prev = shift_down(&prev);
    }

    // rightward: χ_{bu:r} = (2ξ - a_r) χ_{bu:r-1} - b_{r-1}² χ_{bu:r-2}
    for r in bv + 1..=last {
        let b = m.b(r - 1);
        let next = triple_lin(&Poly::linear(-m.a(r), 2.0), &cur, b * b, &prev);
        prev = std::mem::replace(&mut cur, next);
    }

    // leftward: χ_{r:last} = (2ξ - a_r) χ_{r+1:last} - b_r² χ_{r+2:last}
    let mut inner = shift_down(&cur);
    for r in (first..bu).rev() {
        let b = m.b(r);
        let next = triple_lin(&Poly::linear(-m.a(r), 2.0), &cur, b * b, &inner);
        inner = std::mem::replace(&mut cur, next);
    }
    cur
}

fn check_normalized(m: &NormalizedQut) -> &QutMatrix {
    let q = m.matrix();
    debug_assert!(q.bulk_a() == 0.0 && q.bulk_b() == 1.0);
    let width = q.ell() - q.block_size();
    if width > WIDE_BOUNDARY_WARNING {
        warn!("{width} boundary rows; monomial-basis polynomials may be ill-conditioned");
    }
    q
}

/// `χ_{u:ℓ}(2ξ) = p̃0 U_n + p̃1 U_{n-1}`: the right boundary rows only.
pub fn build_right_expansion(m: &NormalizedQut) -> (Poly, Poly) {
    let q = check_normalized(m);
    let [p0, p1, _] = expand_submatrix(q, q.u(), q.ell());
    (p0, p1)
}

/// `χ(2ξ) = p0 U_n + p1 U_{n-1} + p2 U_{n-2}` for the whole matrix.
pub fn build_full_expansion(m: &NormalizedQut) -> Triple {
    let q = check_normalized(m);
    expand_submatrix(q, 1, q.ell())
}

/// Converts a `(U_n, U_{n-1}, U_{n-2})` expansion to the `(U_n, T_{n+1})`
/// form, enforcing `deg u ≤ max_u_degree` and `deg t ≤ max_u_degree - 1`.
pub fn to_ut(triple: &Triple, max_u_degree: usize) -> Result<(Poly, Poly)> {
    let [p0, p1, p2] = triple;
    let xi = Poly::xi();
    let cheb_t2 = Poly::new(vec![-1.0, 0.0, 2.0]);
    let u = &(p0 + &(&xi * p1)) + &(&cheb_t2 * p2);
    let t = &(-p1) - &(&Poly::linear(0.0, 2.0) * p2);
    if let Some(d) = u.degree() {
        if d > max_u_degree {
            return Err(Error::DegreeOverflow {
                which: "u",
                degree: d,
                bound: max_u_degree,
            });
        }
    }
    if let Some(d) = t.degree() {
        if d + 1 > max_u_degree {
            return Err(Error::DegreeOverflow {
                which: "t",
                degree: d,
                bound: max_u_degree.saturating_sub(1),
            });
        }
    }
    Ok((u, t))
}

/// Corner polynomials `(u⌜, t⌜, u⌟, t⌟)` of `T_{2:ℓ}` and `T_{1:ℓ-1}`,
/// expressed on `(U_n, T_{n+1})` for the full block size `n`.
pub fn corner_polynomials(m: &NormalizedQut) -> Result<(Poly, Poly, Poly, Poly)> {
    let q = check_normalized(m);
    let ell = q.ell();
    let bound = ell - q.block_size() + 1;
    let (u_ul, t_ul) = to_ut(&expand_submatrix(q, 2, ell), bound)?;
    let (u_lr, t_lr) = to_ut(&expand_submatrix(q, 1, ell - 1), bound)?;
    Ok((u_ul, t_ul, u_lr, t_lr))
}

/// Numerators of the starred polynomials over the common denominator
/// `1 - ξ²`:
///
/// ```text
/// u*_num = (1-ξ²) u' + ξ u + (n+1)(1-ξ²) t
/// t*_num = (1-ξ²) t' - (n+1) u
/// ```
///
/// so that `2 χ'(2ξ) (1-ξ²) = u*_num U_n + t*_num T_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StarredPolynomials {
    pub u_num: Poly,
    pub t_num: Poly,
    pub n: usize,
}

impl StarredPolynomials {
    /// `(u*, t*)` at `ξ ≠ ±1`, dividing out the denominator.
    pub fn eval(&self, xi: f64) -> (f64, f64) {
        let d = 1.0 - xi * xi;
        (self.u_num.eval(xi) / d, self.t_num.eval(xi) / d)
    }
}

pub fn starred_polynomials(u: &Poly, t: &Poly, n: usize) -> StarredPolynomials {
    let one_minus = Poly::new(vec![1.0, 0.0, -1.0]);
    let m = n as f64 + 1.0;
    let u_num =
        &(&(&one_minus * &u.derivative()) + &(&Poly::xi() * u)) + &(&one_minus * t).scale(m);
    let t_num = &(&one_minus * &t.derivative()) - &u.scale(m);
    StarredPolynomials { u_num, t_num, n }
}

/// Every boundary polynomial needed by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPolynomials {
    pub u: Poly,
    pub t: Poly,
    pub u_ul: Poly,
    pub t_ul: Poly,
    pub u_lr: Poly,
    pub t_lr: Poly,
    pub star: StarredPolynomials,
    /// Uniform block size the expansions refer to.
    pub n: usize,
    /// Matrix dimension.
    pub ell: usize,
}

impl BoundaryPolynomials {
    pub fn build(m: &NormalizedQut) -> Result<Self> {
        let q = check_normalized(m);
        let ell = q.ell();
        let n = q.block_size();
        let (u, t) = to_ut(&build_full_expansion(m), ell - n)?;
        let (u_ul, t_ul, u_lr, t_lr) = corner_polynomials(m)?;
        let star = starred_polynomials(&u, &t, n);
        Ok(Self {
            u,
            t,
            u_ul,
            t_ul,
            u_lr,
            t_lr,
            star,
            n,
            ell,
        })
    }

    /// `χ(2ξ) = u U_n + t T_{n+1}` at any real `ξ`, by Chebyshev recurrences.
    /// Intended for moderate `n`; overflows for large `n` outside the band.
    pub fn char_poly(&self, xi: f64) -> f64 {
        self.u.eval(xi) * cheb_u_raw(self.n, xi) + self.t.eval(xi) * cheb_t_raw(self.n + 1, xi)
    }

    /// `χ_{2:ℓ}(2ξ)`.
    pub fn char_poly_ul(&self, xi: f64) -> f64 {
        self.u_ul.eval(xi) * cheb_u_raw(self.n, xi)
            + self.t_ul.eval(xi) * cheb_t_raw(self.n + 1, xi)
    }

    /// `χ_{1:ℓ-1}(2ξ)`.
    pub fn char_poly_lr(&self, xi: f64) -> f64 {
        self.u_lr.eval(xi) * cheb_u_raw(self.n, xi)
            + self.t_lr.eval(xi) * cheb_t_raw(self.n + 1, xi)
    }

    /// `dχ/dλ` at `λ = 2ξ`, `ξ ≠ ±1`, from the starred polynomials.
    pub fn char_poly_derivative(&self, xi: f64) -> f64 {
        let (us, ts) = self.star.eval(xi);
        0.5 * (us * cheb_u_raw(self.n, xi) + ts * cheb_t_raw(self.n + 1, xi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutmodel::{normalize, QutMatrix};

    fn poly(c: &[f64]) -> Poly {
        Poly::new(c.to_vec())
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(
            &poly(&[1.0, 1.0]) * &poly(&[1.0, -1.0]),
            poly(&[1.0, 0.0, -1.0])
        );
        assert_eq!(poly(&[-1.0, 0.0, 2.0]).derivative(), poly(&[0.0, 4.0]));
        let lin = poly(&[-1.0, 2.0]);
        assert_eq!(&lin * &lin, poly(&[1.0, -4.0, 4.0]));
        assert_eq!(&poly(&[1.0, 2.0]) + &poly(&[-1.0, -2.0]), Poly::zero());
        assert_eq!(Poly::zero().degree(), None);
        assert_eq!(poly(&[0.0, 0.0]).degree(), None);
    }

    #[test]
    fn composition_with_linear() {
        // (ξ²)(2ξ + 1) = 4ξ² + 4ξ + 1
        let p = poly(&[0.0, 0.0, 1.0]).compose_linear(2.0, 1.0);
        assert_eq!(p, poly(&[1.0, 4.0, 4.0]));
        let q = poly(&[3.0, -1.0, 0.5, 2.0]);
        let c = q.compose_linear(-0.5, 0.25);
        for x in [-1.0, 0.3, 2.0] {
            assert!((c.eval(x) - q.eval(-0.5 * x + 0.25)).abs() < 1e-13);
        }
    }

    #[test]
    fn horner_derivative() {
        let p = poly(&[1.0, -2.0, 0.0, 3.0]);
        let (v, d) = p.eval_with_derivative(1.5);
        assert!((v - p.eval(1.5)).abs() < 1e-14);
        assert!((d - p.derivative().eval(1.5)).abs() < 1e-14);
    }

    fn two_edge(ell: usize, x: f64, y: f64) -> NormalizedQut {
        let m = QutMatrix::from_edges(ell, 0.0, 1.0, &[x], &[y], &[x], &[y]).unwrap();
        normalize(&m).unwrap()
    }

    #[test]
    fn right_expansion_examples() {
        let m = normalize(&QutMatrix::uniform(6, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(
            build_right_expansion(&m),
            (Poly::constant(1.0), Poly::zero())
        );

        let m = QutMatrix::from_edges(8, 0.0, 1.0, &[], &[], &[0.7], &[1.3]).unwrap();
        let (p0, p1) = build_right_expansion(&normalize(&m).unwrap());
        assert_eq!(p0, poly(&[-0.7, 2.0]));
        assert_eq!(p1, Poly::constant(-1.3 * 1.3));
    }

    #[test]
    fn full_expansion_uniform() {
        let m = normalize(&QutMatrix::uniform(7, 0.0, 1.0).unwrap()).unwrap();
        let [p0, p1, p2] = build_full_expansion(&m);
        assert_eq!(
            (p0, p1, p2),
            (Poly::constant(1.0), Poly::zero(), Poly::zero())
        );
        let (u, t) = to_ut(&build_full_expansion(&m), 0).unwrap();
        assert_eq!((u, t), (Poly::constant(1.0), Poly::zero()));
    }

    #[test]
    fn two_edge_triple() {
        let (x, y) = (0.75, 1.25);
        let [p0, p1, p2] = build_full_expansion(&two_edge(12, x, y));
        let y2 = y * y;
        let lin = poly(&[-x, 2.0]);
        let close = |a: &Poly, b: &Poly| {
            let d = a - b;
            d.coeffs().iter().all(|c| c.abs() < 1e-14)
        };
        assert!(close(&p0, &(&lin * &lin)));
        assert!(close(&p1, &lin.scale(-2.0 * y2)));
        assert!(close(&p2, &Poly::constant(y2 * y2)));
    }

    #[test]
    fn degree_overflow_is_reported() {
        let triple = [poly(&[0.0, 0.0, 1.0]), Poly::zero(), Poly::zero()];
        assert!(matches!(
            to_ut(&triple, 1),
            Err(Error::DegreeOverflow { which: "u", .. })
        ));
    }

    #[test]
    fn starred_uniform() {
        let ell = 9;
        let s = starred_polynomials(&Poly::constant(1.0), &Poly::zero(), ell);
        assert_eq!(s.u_num, Poly::xi());
        assert_eq!(s.t_num, Poly::constant(-(ell as f64 + 1.0)));
    }
}
