//! Named matrix families used by the CLI sweeps and the golden tests.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qutmodel::QutMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Corner diagonal `x` and coupling `y` at both ends.
    TwoEdge,
    /// Zero diagonal, couplings `x, y` entering from both ends.
    DeepEdge,
    /// Diagonal `x`, coupling `y` on the left; diagonal `z` on the right.
    Asymmetric,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::TwoEdge, Preset::DeepEdge, Preset::Asymmetric];

    pub fn name(self) -> &'static str {
        match self {
            Preset::TwoEdge => "two-edge",
            Preset::DeepEdge => "deep-edge",
            Preset::Asymmetric => "asymmetric",
        }
    }

    pub fn params(self) -> &'static [&'static str] {
        match self {
            Preset::TwoEdge | Preset::DeepEdge => &["x", "y"],
            Preset::Asymmetric => &["x", "y", "z"],
        }
    }

    /// Builds the matrix with bulk `(0, 1)`; every parameter must be given.
    pub fn build(self, ell: usize, params: &BTreeMap<String, f64>) -> Result<QutMatrix> {
        for key in params.keys() {
            if !self.params().contains(&key.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "preset {self} has no parameter {key:?}"
                )));
            }
        }
        let get = |name: &str| {
            params.get(name).copied().ok_or_else(|| {
                Error::InvalidArgument(format!("preset {self} needs parameter {name:?}"))
            })
        };
        match self {
            Preset::TwoEdge => two_edge(ell, get("x")?, get("y")?),
            Preset::DeepEdge => deep_edge(ell, get("x")?, get("y")?),
            Preset::Asymmetric => asymmetric(ell, get("x")?, get("y")?, get("z")?),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset {s:?}")))
    }
}

/// ```text
/// x y
/// y 0 1
///   1 0 1
///      ⋱
///       1 0 y
///         y x
/// ```
pub fn two_edge(ell: usize, x: f64, y: f64) -> Result<QutMatrix> {
    QutMatrix::from_edges(ell, 0.0, 1.0, &[x], &[y], &[x], &[y])
}

/// ```text
/// 0 x
/// x 0 y
///   y 0 1
///      ⋱
///       1 0 y
///         y 0 x
///           x 0
/// ```
pub fn deep_edge(ell: usize, x: f64, y: f64) -> Result<QutMatrix> {
    QutMatrix::from_edges(ell, 0.0, 1.0, &[0.0, 0.0], &[x, y], &[0.0, 0.0], &[y, x])
}

/// ```text
/// x y
/// y 0 1
///   1 0 1
///      ⋱
///       1 0 1
///         1 z
/// ```
pub fn asymmetric(ell: usize, x: f64, y: f64, z: f64) -> Result<QutMatrix> {
    QutMatrix::from_edges(ell, 0.0, 1.0, &[x], &[y], &[z], &[1.0])
}

/// Large-`ℓ` limit of `∑_k O²_{k1}` over the in-band modes of the two-edge
/// family,
///
/// ```text
/// I(x, y) = ∫₀^π 2dk/π · y² sin²k / ([(2 − y²) cos k − x]² + y⁴ sin²k).
/// ```
///
/// The factor 2 comes from `O²_{k1} = 2/(ℓ+1−2φ'_k) · …` against the
/// spacing `π/(ℓ+1−2φ'_k)` of the allowed wavenumbers.
///
/// by trapezoid sums doubled from `points` intervals until two successive
/// values agree to `1e-14`.
pub fn two_edge_norm_integral(x: f64, y: f64, points: usize) -> Result<f64> {
    if points < 64 {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs at least 64 points, got {points}"
        )));
    }
    let y2 = y * y;
    let f = |k: f64| {
        let s = k.sin();
        let re = (2.0 - y2) * k.cos() - x;
        let den = re * re + y2 * y2 * s * s;
        if den == 0.0 {
            0.0
        } else {
            2.0 * y2 * s * s / den
        }
    };
    let mut n = points;
    let h = PI / n as f64;
    let mut sum = 0.5 * (f(0.0) + f(PI)) + (1..n).map(|i| f(i as f64 * h)).sum::<f64>();
    let mut value = sum * h / PI;
    while n < 1 << 24 {
        // the new midpoints refine the previous sum
        let h = PI / n as f64;
        sum += (0..n).map(|i| f((i as f64 + 0.5) * h)).sum::<f64>();
        n *= 2;
        let next = sum * (PI / n as f64) / PI;
        let done = (next - value).abs() <= 1e-14 * next.abs().max(1.0);
        value = next;
        if done {
            break;
        }
    }
    Ok(value)
}
