//! Chebyshev polynomials of the first and second kind on the band
//! (`ξ = cos k`), hyperbolic (`ξ = ±cosh p`) and raw-argument branches.
//!
//! On the hyperbolic branch the values grow like `e^{np}` and overflow
//! a double around `np ≈ 710`, so those evaluations are returned as
//! [`Scaled`] pairs and combined in log space by the callers.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

/// Below this `|sin k|` the ratio form `sin((n+1)k)/sin k` is replaced by
/// the three-term recurrence in `ξ`.
pub const EDGE_SIN_THRESHOLD: f64 = 1e-6;

/// A point of the band `λ = 2 cos k`, `k ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    k: f64,
    xi: f64,
}

impl BandPoint {
    /// Panics if `k` lies outside `[0, π]` (allowing a few ulps of slack).
    pub fn new(k: f64) -> Self {
        assert!(
            (-1e-15..=PI + 1e-15).contains(&k),
            "wavenumber {k} outside [0, π]"
        );
        let k = k.clamp(0.0, PI);
        Self { k, xi: k.cos() }
    }

    /// Band point with `cos k = xi`; `xi` is clamped into `[-1, 1]`.
    pub fn from_xi(xi: f64) -> Self {
        Self::new(xi.clamp(-1.0, 1.0).acos())
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn sin_k(&self) -> f64 {
        self.k.sin()
    }

    /// Eigenvalue of the normalized uniform chain, `2 cos k`.
    pub fn eigenvalue(&self) -> f64 {
        2.0 * self.xi
    }

    /// True when the ratio formulas lose their digits.
    pub fn near_edge(&self) -> bool {
        self.sin_k().abs() < EDGE_SIN_THRESHOLD
    }
}

/// Branch sign of an out-of-band point: above (`+`) or below (`-`) the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    Above,
    Below,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Above => 1.0,
            Side::Below => -1.0,
        }
    }

    /// `sign^n` without a float power.
    pub fn sign_pow(self, n: usize) -> f64 {
        match self {
            Side::Above => 1.0,
            Side::Below if n.is_multiple_of(2) => 1.0,
            Side::Below => -1.0,
        }
    }
}

/// An out-of-band point `λ = ±2 cosh p` with decay rate `p ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicPoint {
    p: f64,
    side: Side,
}

impl HyperbolicPoint {
    /// Panics on negative or non-finite `p`.
    pub fn new(p: f64, side: Side) -> Self {
        assert!(p.is_finite() && p >= 0.0, "decay rate {p} must be >= 0");
        Self { p, side }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn sign(&self) -> f64 {
        self.side.sign()
    }

    /// `ξ = ±cosh p`.
    pub fn xi(&self) -> f64 {
        self.sign() * self.p.cosh()
    }

    pub fn eigenvalue(&self) -> f64 {
        2.0 * self.xi()
    }

    /// Inverse map from an eigenvalue with `|λ| ≥ 2`.
    pub fn from_eigenvalue(lambda: f64) -> Self {
        let side = if lambda >= 0.0 {
            Side::Above
        } else {
            Side::Below
        };
        let c = (lambda.abs() / 2.0).max(1.0);
        Self::new(c.acosh(), side)
    }
}

/// A real number stored as `mantissa · e^{log_scale}` with
/// `1 ≤ |mantissa| < 2` (or `mantissa = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        mantissa: 0.0,
        log_scale: 0.0,
    };

    /// Builds the pair from a sign and the natural log of the magnitude.
    pub fn from_sign_ln(sign: f64, ln_abs: f64) -> Self {
        if sign == 0.0 || ln_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let exp2 = (ln_abs / LN_2).floor();
        let mut mantissa = (ln_abs - exp2 * LN_2).exp();
        let mut exp2 = exp2;
        if mantissa >= 2.0 {
            mantissa /= 2.0;
            exp2 += 1.0;
        } else if mantissa < 1.0 {
            mantissa *= 2.0;
            exp2 -= 1.0;
        }
        Self {
            mantissa: sign.signum() * mantissa,
            log_scale: exp2 * LN_2,
        }
    }

    /// Exact for normal `x`: the mantissa is `x` divided by a power of two.
    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 || !x.is_normal() {
            return if x == 0.0 {
                Self::ZERO
            } else {
                Self::from_sign_ln(x.signum(), x.abs().ln())
            };
        }
        let mut e = x.abs().log2().floor() as i32;
        let mut m = x / 2f64.powi(e);
        if m.abs() >= 2.0 {
            m /= 2.0;
            e += 1;
        } else if m.abs() < 1.0 {
            m *= 2.0;
            e -= 1;
        }
        Self {
            mantissa: m,
            log_scale: e as f64 * LN_2,
        }
    }

    /// Plain value; may overflow to infinity.
    pub fn value(&self) -> f64 {
        // log_scale is always a whole number of ln 2
        let e = (self.log_scale / LN_2).round();
        if e.abs() < 2000.0 {
            self.mantissa * 2f64.powi(e as i32)
        } else {
            self.mantissa * self.log_scale.exp()
        }
    }

    pub fn ln_abs(&self) -> f64 {
        if self.mantissa == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mantissa.abs().ln() + self.log_scale
        }
    }

    pub fn signum(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    /// Value multiplied by `e^{-shift}`; used to bring several pairs onto a
    /// common scale before adding them.
    pub fn value_scaled_by(&self, shift: f64) -> f64 {
        self.mantissa * (self.log_scale - shift).exp()
    }
}

/// `U_n(cos k) = sin((n+1)k) / sin k`, with the analytic limits at the
/// band edges.
pub fn cheb_u(n: usize, point: BandPoint) -> f64 {
    if point.near_edge() {
        return cheb_u_raw(n, point.xi);
    }
    ((n as f64 + 1.0) * point.k).sin() / point.sin_k()
}

/// `T_n(cos k) = cos(nk)`.
pub fn cheb_t(n: usize, point: BandPoint) -> f64 {
    (n as f64 * point.k).cos()
}

/// `U_n` at an arbitrary real argument by the three-term recurrence.
pub fn cheb_u_raw(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `T_n` at an arbitrary real argument by the three-term recurrence.
pub fn cheb_t_raw(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `ln(2 sinh p)` for `p > 0`, stable for both small and large `p`.
fn ln_two_sinh(p: f64) -> f64 {
    p + (-(-2.0 * p).exp_m1()).ln()
}

/// `U_n(±cosh p) = (±1)^n sinh((n+1)p) / sinh p` as a scaled pair.
///
/// Requires `p > 0`; at the band edge use [`cheb_u`].
pub fn cheb_u_hyper_scaled(n: usize, point: HyperbolicPoint) -> Scaled {
    let p = point.p;
    debug_assert!(p > 0.0, "hyperbolic evaluation needs p > 0");
    let m = n as f64 + 1.0;
    // ln sinh(mp) - ln sinh(p)
    let ln_abs = ln_two_sinh(m * p) - ln_two_sinh(p);
    Scaled::from_sign_ln(point.side.sign_pow(n), ln_abs)
}

/// `T_n(±cosh p) = (±1)^n cosh(np)` as a scaled pair.
pub fn cheb_t_hyper_scaled(n: usize, point: HyperbolicPoint) -> Scaled {
    let x = n as f64 * point.p;
    let ln_abs = x + (-2.0 * x).exp().ln_1p() - LN_2;
    Scaled::from_sign_ln(point.side.sign_pow(n), ln_abs)
}
