//! The analytic solver.
//!
//! In-band eigenvalues `λ = 2 cos k` are the roots of
//! `Θ(k) = (ℓ+1)k − 2φ_k ≡ 0 (mod π)`, where the shift `φ_k` comes from the
//! phase of `u(cos k) + i t(cos k) sin k`. Out-of-band eigenvalues
//! `λ = ±2 cosh p` are roots of a log-scaled secular function on the
//! hyperbolic branch; how many of them exist on each side is fixed by Sturm
//! counts. Eigenvector boundary components come from ratios of low-degree
//! polynomials, the bulk from the Chebyshev closed form, and the
//! in-band vectors are normalized without any explicit normalization step.

use std::f64::consts::PI;

use log::debug;
use serde::Serialize;

use crate::chebyshev::{cheb_u, BandPoint, HyperbolicPoint, Side};
use crate::error::{Error, Result};
use crate::oracle::{sturm_count, DenseTridiag};
use crate::polyengine::BoundaryPolynomials;
use crate::qutmodel::{denormalize_spectrum, normalize, NormalizedQut, QutMatrix};

/// Tolerance on successive fixed-point iterates of the allowed-`k` equation.
pub const FIXED_POINT_TOL: f64 = 1e-13;
/// Cap on fixed-point iterations before falling back to bracketing.
pub const FIXED_POINT_MAX_ITER: usize = 50;
/// Roots closer than this to `k = 0` or `k = π` are flagged.
pub const BAND_EDGE_FLAG: f64 = 1e-9;
/// Grid points per `ℓ + 1` in the phase scan.
pub const SCAN_DENSITY: usize = 8;
/// Points on the log-spaced decay-rate grid.
pub const HYPER_GRID: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum RootMode {
    /// Iterate the allowed-`k` equation to convergence.
    #[default]
    Converged,
    /// A single iteration from the uniform wavenumber `πj/(ℓ+1)`.
    SingleStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub want_vectors: bool,
    pub root_mode: RootMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Branch {
    InBand { k: f64, j: i64 },
    OutOfBand { p: f64, side: Side },
}

/// One eigenpair descriptor, in normalized units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMode {
    pub branch: Branch,
    pub lambda: f64,
    /// Shift `φ_k` (in-band only).
    pub phi: Option<f64>,
    pub phi_prime: Option<f64>,
    /// `ρ_k = (ℓ+1−2φ'_k)/π` (in-band only).
    pub dos_weight: Option<f64>,
    /// In-band: `|Θ(k) − πj|`; out-of-band: scaled secular residual.
    pub residual: f64,
    pub band_edge: bool,
}

impl SpectralMode {
    pub fn is_in_band(&self) -> bool {
        matches!(self.branch, Branch::InBand { .. })
    }

    pub fn k(&self) -> Option<f64> {
        match self.branch {
            Branch::InBand { k, .. } => Some(k),
            _ => None,
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self.branch {
            Branch::OutOfBand { p, .. } => Some(p),
            _ => None,
        }
    }

    pub fn band_point(&self) -> Option<BandPoint> {
        self.k().map(BandPoint::new)
    }

    pub fn hyperbolic_point(&self) -> Option<HyperbolicPoint> {
        match self.branch {
            Branch::OutOfBand { p, side } => Some(HyperbolicPoint::new(p, side)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub in_band: usize,
    pub above_band: usize,
    pub below_band: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    /// In-band roots within `BAND_EDGE_FLAG` of `k = 0` or `π`.
    pub band_edge_roots: usize,
    /// Roots where the fixed-point iteration was abandoned for bracketing.
    pub bracket_fallbacks: usize,
    /// Out-of-band roots accepted as numerically double.
    pub double_roots: usize,
    /// Final number of points in the phase scan.
    pub scan_points: usize,
    pub max_residual: f64,
}

/// Full ordered eigen-decomposition. `eigenvalues` and `vectors` are in the
/// units of whatever matrix the spectrum currently describes (normalized
/// until passed through [`denormalize_spectrum`]); `modes` always carry
/// normalized values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub modes: Vec<SpectralMode>,
    pub eigenvalues: Vec<f64>,
    /// `O_{k1}`, non-negative.
    pub eigvec_first: Vec<f64>,
    /// Eigenvectors as rows, in the order of `modes`.
    pub vectors: Option<Vec<Vec<f64>>>,
    pub counts: Counts,
    pub shift: f64,
    pub scale: f64,
    pub ell: usize,
    pub n: usize,
    pub diagnostics: Diagnostics,
}

impl Spectrum {
    /// `max |O Oᵀ − I|` when vectors are present.
    pub fn orthogonality_residual(&self) -> Option<f64> {
        let v = self.vectors.as_ref()?;
        let mut worst = 0.0f64;
        for i in 0..v.len() {
            for j in i..v.len() {
                let dot: f64 = v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        Some(worst)
    }
}

/// `(u, t)` and their `ξ`-derivatives at a band point.
#[derive(Debug, Clone, Copy)]
struct Amplitude {
    u: f64,
    t: f64,
    du: f64,
    dt: f64,
    s: f64,
    c: f64,
}

impl Amplitude {
    fn at(bp: &BoundaryPolynomials, k: f64) -> Self {
        let c = k.cos();
        let s = k.sin();
        let (u, du) = bp.u.eval_with_derivative(c);
        let (t, dt) = bp.t.eval_with_derivative(c);
        Self { u, t, du, dt, s, c }
    }

    fn norm_sq(&self) -> f64 {
        self.u * self.u + self.t * self.t * self.s * self.s
    }

    /// Principal phase `ψ = arg(u + i t sin k)`.
    fn psi(&self) -> f64 {
        (self.t * self.s).atan2(self.u)
    }

    /// `dψ/dk`.
    fn psi_prime(&self) -> f64 {
        let s2 = self.s * self.s;
        (self.t * self.u * self.c + (self.du * self.t - self.dt * self.u) * s2) / self.norm_sq()
    }
}

/// Shift `φ_k` (principal branch) and its derivative `φ'_k`.
///
/// `2φ_k = (ℓ−n)k − arg(u + i t sin k)` and
/// `2φ'_k = (ℓ−n) − [t u cos k + (u't − t'u) sin²k] / (u² + t² sin²k)`.
pub fn shift_phi(bp: &BoundaryPolynomials, point: BandPoint) -> Result<(f64, f64)> {
    let amp = Amplitude::at(bp, point.k());
    if amp.norm_sq() == 0.0 {
        return Err(Error::ZeroAmplitude { k: point.k() });
    }
    let width = (bp.ell - bp.n) as f64;
    let phi = 0.5 * (width * point.k() - amp.psi());
    let phi_prime = 0.5 * (width - amp.psi_prime());
    Ok((phi, phi_prime))
}

/// `ρ_k = (ℓ+1−2φ'_k)/π` at an arbitrary band point.
pub fn dos_at(bp: &BoundaryPolynomials, point: BandPoint) -> Result<f64> {
    let (_, phi_prime) = shift_phi(bp, point)?;
    let value = bp.ell as f64 + 1.0 - 2.0 * phi_prime;
    if value <= 0.0 {
        return Err(Error::NegativeDos {
            k: point.k(),
            value,
        });
    }
    Ok(value / PI)
}

/// `ρ_k` on `samples` uniformly spaced points of `[0, π]`, unclamped, so
/// that a non-positive density shows up in the output instead of an error.
pub fn dos_curve(bp: &BoundaryPolynomials, samples: usize) -> Result<Vec<(f64, f64)>> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let slope = bp.ell as f64 + 1.0;
    (0..samples)
        .map(|i| {
            let k = if i + 1 == samples {
                PI
            } else {
                PI * i as f64 / (samples - 1) as f64
            };
            let (_, phi_prime) = shift_phi(bp, BandPoint::new(k))?;
            Ok((k, (slope - 2.0 * phi_prime) / PI))
        })
        .collect()
}

/// Trapezoid rule over `(x, y)` samples sorted by `x`.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

/// Density of states of an in-band mode.
pub fn density_of_states(mode: &SpectralMode, ell: usize) -> Result<f64> {
    let (k, phi_prime) = match (mode.k(), mode.phi_prime) {
        (Some(k), Some(d)) => (k, d),
        _ => {
            return Err(Error::InvalidArgument(
                "density of states requires an in-band mode".into(),
            ))
        }
    };
    let value = ell as f64 + 1.0 - 2.0 * phi_prime;
    if value <= 0.0 {
        return Err(Error::NegativeDos { k, value });
    }
    Ok(value / PI)
}

/// Unwrapped `Θ(k) = (n+1)k + ψ(k)` sampled on a uniform grid of `[0, π]`.
#[derive(Debug, Clone)]
struct PhaseScan {
    n1: f64,
    ks: Vec<f64>,
    theta: Vec<f64>,
    /// Spacing of the uniform base grid.
    step: f64,
}

/// Phase residual above which a refined root is taken to be spurious.
const STRAY_ROOT_RESIDUAL: f64 = 1e-6;

/// Largest change of `ψ` allowed between neighbouring scan points; steeper
/// intervals are bisected so the unwrapping cannot jump a branch.
const MAX_PSI_STEP: f64 = PI / 8.0;
const MIN_SCAN_WIDTH: f64 = 1e-13;

/// Limit of `ψ` at a band edge where `sin k = 0`; `None` when both `u` and
/// `t` vanish there.
fn edge_psi(bp: &BoundaryPolynomials, xi: f64) -> Option<f64> {
    let u = bp.u.eval(xi);
    if u > 0.0 {
        Some(0.0)
    } else if u < 0.0 {
        Some(PI)
    } else {
        let t = bp.t.eval(xi);
        (t != 0.0).then(|| t.signum() * PI / 2.0)
    }
}

fn unwrap_near(raw: f64, prev: f64) -> f64 {
    raw + 2.0 * PI * ((prev - raw) / (2.0 * PI)).round()
}

impl PhaseScan {
    fn build(bp: &BoundaryPolynomials, intervals: usize) -> Result<Self> {
        let n1 = bp.n as f64 + 1.0;
        let step = PI / intervals as f64;
        let interior_psi = |k: f64| -> Result<f64> {
            let amp = Amplitude::at(bp, k);
            if amp.norm_sq() == 0.0 {
                return Err(Error::ZeroAmplitude { k });
            }
            Ok(amp.psi())
        };
        let raw_at = |i: usize| -> Result<f64> {
            if i == 0 || i == intervals {
                let xi = if i == 0 { 1.0 } else { -1.0 };
                Ok(match edge_psi(bp, xi) {
                    Some(v) => v,
                    None => Amplitude::at(bp, if i == 0 { 1e-9 } else { PI - 1e-9 }).psi(),
                })
            } else {
                interior_psi(i as f64 * step)
            }
        };
        let mut ks = Vec::with_capacity(intervals + 1);
        let mut psis = Vec::with_capacity(intervals + 1);
        ks.push(0.0);
        psis.push(raw_at(0)?);
        for i in 1..=intervals {
            let k = if i == intervals { PI } else { i as f64 * step };
            let mut pending = vec![(k, raw_at(i)?)];
            while let Some(&(kb, raw)) = pending.last() {
                let (ka, pa) = (*ks.last().unwrap(), *psis.last().unwrap());
                let pb = unwrap_near(raw, pa);
                let km = 0.5 * (ka + kb);
                // next to an edge where u and t both vanish, cos k can round
                // to ±1 before the phase settles; stop there
                let mid = ((pb - pa).abs() > MAX_PSI_STEP && kb - ka > MIN_SCAN_WIDTH)
                    .then(|| Amplitude::at(bp, km))
                    .filter(|amp| amp.norm_sq() > 0.0);
                if let Some(amp) = mid {
                    pending.push((km, amp.psi()));
                } else {
                    pending.pop();
                    ks.push(kb);
                    psis.push(pb);
                }
            }
        }
        let mut theta: Vec<f64> = ks
            .iter()
            .zip(&psis)
            .map(|(&k, &psi)| n1 * k + psi)
            .collect();
        // endpoint values are exact multiples of π whenever u(±1) ≠ 0
        let last = theta.len() - 1;
        for (idx, xi) in [(0, 1.0), (last, -1.0)] {
            if bp.u.eval(xi) != 0.0 {
                theta[idx] = (theta[idx] / PI).round() * PI;
            }
        }
        Ok(Self {
            n1,
            ks,
            theta,
            step,
        })
    }

    fn intervals(&self) -> usize {
        self.theta.len() - 1
    }

    /// Continuous `Θ` at any `k`, choosing the branch closest to the
    /// linear interpolation of the scan.
    fn theta_at(&self, bp: &BoundaryPolynomials, k: f64) -> f64 {
        let amp = Amplitude::at(bp, k);
        let i = self
            .ks
            .partition_point(|&x| x <= k)
            .clamp(1, self.intervals())
            - 1;
        let (ka, kb) = (self.ks[i], self.ks[i + 1]);
        let frac = ((k - ka) / (kb - ka)).clamp(0.0, 1.0);
        let interp = self.theta[i] * (1.0 - frac) + self.theta[i + 1] * frac;
        let base = self.n1 * k + amp.psi();
        base + 2.0 * PI * ((interp - base) / (2.0 * PI)).round()
    }

    /// Level crossings `Θ = mπ` as `(k_lo, k_hi, m)`; a crossing counts at
    /// the grid point it arrives on, never at `k = 0` or `k = π`.
    fn crossings(&self) -> Vec<(f64, f64, i64)> {
        let mut out = Vec::new();
        let last = self.intervals() - 1;
        for i in 0..=last {
            let (a, b) = (self.theta[i], self.theta[i + 1]);
            let (ka, kb) = (self.ks[i], self.ks[i + 1]);
            if b > a {
                // levels in (a, b], or (a, b) on the final interval
                // start one level early: a/π may round up past a level just above a
                let mut m = (a / PI).floor() as i64 - 1;
                while (m as f64) * PI < b || ((m as f64) * PI == b && i != last) {
                    if (m as f64) * PI > a {
                        out.push((ka, kb, m));
                    }
                    m += 1;
                }
            } else if b < a {
                // levels in [b, a), or (b, a) on the final interval
                let mut m = (a / PI).ceil() as i64 + 1;
                while (m as f64) * PI > b || ((m as f64) * PI == b && i != last) {
                    if (m as f64) * PI < a {
                        out.push((ka, kb, m));
                    }
                    m -= 1;
                }
            }
        }
        out
    }
}

/// Refines `Θ(k) = mπ` inside `[ka, kb]`; returns `(k, used_fallback)`.
fn refine_root(
    bp: &BoundaryPolynomials,
    scan: &PhaseScan,
    ka: f64,
    kb: f64,
    level: i64,
    mode: RootMode,
) -> (f64, bool) {
    let target = level as f64 * PI;
    let slope = bp.ell as f64 + 1.0;
    let g = |k: f64| scan.theta_at(bp, k) - target;

    if mode == RootMode::SingleStep {
        let k0 = (target / slope).clamp(1e-300, PI);
        let k1 = k0 - g(k0) / slope;
        return (k1.clamp(0.0, PI), false);
    }

    let (ga, gb) = (g(ka), g(kb));
    // fixed point of k = (πj + 2φ_k)/(ℓ+1), started from the secant estimate
    let mut k = if gb != ga {
        ka - ga * (kb - ka) / (gb - ga)
    } else {
        0.5 * (ka + kb)
    };
    let mut converged = false;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let next = k - g(k) / slope;
        if !(ka..=kb).contains(&next) {
            break;
        }
        let delta = (next - k).abs();
        k = next;
        if delta <= FIXED_POINT_TOL {
            converged = true;
            break;
        }
    }
    if converged {
        // a final step lands within rounding of the fixed point
        let polished = k - g(k) / slope;
        if (ka..=kb).contains(&polished) {
            k = polished;
        }
        return (k, false);
    }
    if (ga > 0.0) == (gb > 0.0) && ga != 0.0 && gb != 0.0 {
        // the root sits on a scan point and rounding moved it outside
        return (if ga.abs() < gb.abs() { ka } else { kb }, true);
    }
    (bracket_root(g, ka, kb, ga, gb), true)
}

/// Bisection interleaved with Illinois-modified secant steps.
fn bracket_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut side = 0i8;
    for iter in 0..200 {
        let width = b - a;
        if width.abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if iter % 3 == 2 || !(secant > a.min(b) && secant < a.max(b)) {
            0.5 * (a + b)
        } else {
            secant
        };
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx > 0.0) == (fb > 0.0) {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

fn in_band_mode(bp: &BoundaryPolynomials, scan: &PhaseScan, k: f64, level: i64) -> SpectralMode {
    let slope = bp.ell as f64 + 1.0;
    let theta = scan.theta_at(bp, k);
    let amp = Amplitude::at(bp, k);
    let phi = 0.5 * (slope * k - theta);
    let (phi_prime, dos) = if amp.norm_sq() > 0.0 {
        let pp = 0.5 * ((bp.ell - bp.n) as f64 - amp.psi_prime());
        (Some(pp), Some((slope - 2.0 * pp) / PI))
    } else {
        (None, None)
    };
    SpectralMode {
        branch: Branch::InBand { k, j: level },
        lambda: 2.0 * k.cos(),
        phi: Some(phi),
        phi_prime,
        dos_weight: dos,
        residual: (theta - level as f64 * PI).abs(),
        band_edge: k < BAND_EDGE_FLAG || PI - k < BAND_EDGE_FLAG,
    }
}

/// Secular function on `[0, kmax]` that is free of the `sin k` factor:
/// `χ(2 cos k) = u U_n + t T_{n+1}`, with the recurrence path near the edge.
fn band_char_poly(bp: &BoundaryPolynomials, k: f64) -> f64 {
    let point = BandPoint::new(k);
    let c = point.xi();
    bp.u.eval(c) * cheb_u(bp.n, point) + bp.t.eval(c) * crate::chebyshev::cheb_t(bp.n + 1, point)
}

/// Looks for roots hidden between a band edge and the first scan point by
/// scanning `χ(2 cos k)` on a geometric grid towards the edge.
fn edge_roots(bp: &BoundaryPolynomials, first: f64, at_pi: bool) -> Vec<f64> {
    let map = |d: f64| if at_pi { PI - d } else { d };
    let mut roots = Vec::new();
    let mut d_prev = first;
    let mut f_prev = band_char_poly(bp, map(d_prev));
    for s in 1..=40 {
        let d = first * 0.5f64.powi(s);
        let f = band_char_poly(bp, map(d));
        if f == 0.0 || (f > 0.0) != (f_prev > 0.0) {
            let g = |x: f64| band_char_poly(bp, map(x));
            roots.push(map(bracket_root(g, d, d_prev, f, f_prev)));
        }
        d_prev = d;
        f_prev = f;
    }
    // a root sitting exactly on the edge
    let xi = if at_pi { -1.0 } else { 1.0 };
    let edge = band_char_poly(bp, map(0.0));
    let scale = bp.u.eval_abs(xi) * (bp.n as f64 + 1.0) + bp.t.eval_abs(xi);
    if roots.is_empty() && edge.abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
        roots.push(map(0.0));
    }
    roots
}

/// All in-band roots of the secular equation, ascending in `k`.
///
/// When `expected` is given (the number of eigenvalues inside the band),
/// the scan is refined until the count matches.
pub fn solve_in_band(
    bp: &BoundaryPolynomials,
    expected: Option<usize>,
    mode: RootMode,
) -> Result<Vec<SpectralMode>> {
    let (modes, _) = solve_in_band_with_stats(bp, expected, mode, 0.0)?;
    Ok(modes)
}

/// Roots with `k` or `π − k` below `k_guard` are left to the out-of-band
/// solver, which takes them as `p = 0`.
fn solve_in_band_with_stats(
    bp: &BoundaryPolynomials,
    expected: Option<usize>,
    mode: RootMode,
    k_guard: f64,
) -> Result<(Vec<SpectralMode>, Diagnostics)> {
    let mut intervals = SCAN_DENSITY * (bp.ell + 1);
    let mut diag = Diagnostics::default();
    for attempt in 0..3 {
        let scan = PhaseScan::build(bp, intervals)?;
        let crossings = scan.crossings();
        let mut modes = Vec::with_capacity(crossings.len());
        diag.bracket_fallbacks = 0;
        for &(ka, kb, level) in &crossings {
            let (k, fallback) = refine_root(bp, &scan, ka, kb, level, mode);
            diag.bracket_fallbacks += usize::from(fallback);
            modes.push(in_band_mode(bp, &scan, k, level));
        }
        diag.scan_points = intervals + 1;
        let short = expected.is_some_and(|e| modes.len() < e);
        if short && attempt == 2 {
            // last resort: roots squeezed against a band edge
            for at_pi in [false, true] {
                for k in edge_roots(bp, scan.step, at_pi) {
                    let level = (scan.theta_at(bp, k) / PI).round() as i64;
                    modes.push(in_band_mode(bp, &scan, k, level));
                }
            }
        }
        modes.retain(|m| {
            let k = m.k().unwrap();
            k >= k_guard && PI - k >= k_guard
        });
        modes.sort_by(|a, b| a.k().partial_cmp(&b.k()).unwrap());
        modes.dedup_by(|a, b| (a.k().unwrap() - b.k().unwrap()).abs() < 1e-15);
        // a root sitting on a branch jump of the interpolated phase
        let stray =
            mode == RootMode::Converged && modes.iter().any(|m| m.residual > STRAY_ROOT_RESIDUAL);
        if stray && attempt < 2 {
            debug!("in-band root off its level; refining the scan");
            intervals *= 4;
            continue;
        }
        match expected {
            Some(e) if modes.len() != e && attempt < 2 => {
                debug!("in-band scan found {} of {e} roots; refining", modes.len());
                intervals *= 4;
            }
            Some(e) if modes.len() != e => {
                return Err(Error::CountMismatch {
                    side: "inside the band",
                    found: modes.len(),
                    expected: e,
                });
            }
            _ => {
                diag.band_edge_roots = modes.iter().filter(|m| m.band_edge).count();
                return Ok((modes, diag));
            }
        }
    }
    unreachable!()
}

/// Scaled secular function on the hyperbolic branch,
///
/// ```text
/// S(p) = u(ξ) (1 − e^{−2mp})/sinh p + σ t(ξ) (1 + e^{−2mp}),  ξ = σ cosh p, m = n+1,
/// ```
///
/// which equals `χ(2ξ) · 2 σ^n e^{−mp}`. Returns `(S, dS/dp, scale)` where
/// `scale` bounds the rounding error of `S`.
pub fn hyperbolic_secular(bp: &BoundaryPolynomials, p: f64, side: Side) -> (f64, f64, f64) {
    let sigma = side.sign();
    let m = bp.n as f64 + 1.0;
    let (sh, ch) = (p.sinh(), p.cosh());
    let xi = sigma * ch;
    let decay = (-2.0 * m * p).exp();
    let (g, dg) = if p > 0.0 {
        let num = -(-2.0 * m * p).exp_m1();
        let g = num / sh;
        let dg = (2.0 * m * decay * sh - num * ch) / (sh * sh);
        (g, dg)
    } else {
        (2.0 * m, 0.0)
    };
    let h = 1.0 + decay;
    let dh = -2.0 * m * decay;
    let (u, du) = bp.u.eval_with_derivative(xi);
    let (t, dt) = bp.t.eval_with_derivative(xi);
    let s = u * g + sigma * t * h;
    let ds = du * sigma * sh * g + u * dg + sigma * (dt * sigma * sh * h + t * dh);
    let scale = bp.u.eval_abs(xi) * g.abs() + bp.t.eval_abs(xi) * h;
    (s, ds, scale)
}

/// Out-of-band roots on both sides; `above`/`below` are the expected counts
/// of eigenvalues `> 2` and `< −2`.
pub fn solve_out_of_band(
    bp: &BoundaryPolynomials,
    norm_inf: f64,
    above: usize,
    below: usize,
) -> Result<Vec<SpectralMode>> {
    let mut modes = Vec::new();
    for (side, want, label) in [
        (Side::Above, above, "above the band"),
        (Side::Below, below, "below the band"),
    ] {
        if want == 0 {
            continue;
        }
        let roots = hyperbolic_roots(bp, norm_inf, side, want);
        if roots.len() != want {
            return Err(Error::CountMismatch {
                side: label,
                found: roots.len(),
                expected: want,
            });
        }
        for (p, residual) in roots {
            let point = HyperbolicPoint::new(p, side);
            modes.push(SpectralMode {
                branch: Branch::OutOfBand { p, side },
                lambda: point.eigenvalue(),
                phi: None,
                phi_prime: None,
                dos_weight: None,
                residual,
                band_edge: p == 0.0,
            });
        }
    }
    Ok(modes)
}

fn hyperbolic_roots(
    bp: &BoundaryPolynomials,
    norm_inf: f64,
    side: Side,
    want: usize,
) -> Vec<(f64, f64)> {
    let f = |p: f64| hyperbolic_secular(bp, p, side).0;
    let df = |p: f64| hyperbolic_secular(bp, p, side).1;
    let p_max = (1.0 + norm_inf).acosh().max(1.0);
    // below this cosh p − 1 is lost to rounding; λ is then within 1e−12 of
    // the edge and [0, p_min] is handled last
    let p_min = 1e-6f64;
    let ratio = (p_max / p_min).ln() / (HYPER_GRID - 1) as f64;
    let grid: Vec<f64> = (0..HYPER_GRID)
        .map(|i| p_min * (ratio * i as f64).exp())
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&p| f(p)).collect();
    let residual = |p: f64| {
        let (s, _, scale) = hyperbolic_secular(bp, p, side);
        s.abs() / scale.max(f64::MIN_POSITIVE)
    };

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..HYPER_GRID - 1 {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 {
            roots.push(grid[i]);
        } else if b != 0.0 && (a > 0.0) != (b > 0.0) {
            roots.push(bracket_root(f, grid[i], grid[i + 1], a, b));
        }
    }

    if roots.len() < want {
        // pairs of roots closer than the grid spacing, possibly coincident
        // to double precision: refine at local minima of |S|
        let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
        for i in 1..HYPER_GRID - 1 {
            let (a, b, c) = (vals[i - 1], vals[i], vals[i + 1]);
            let same_sign = (a > 0.0) == (b > 0.0) && (b > 0.0) == (c > 0.0);
            if !same_sign || b.abs() > a.abs() || b.abs() > c.abs() {
                continue;
            }
            let (da, dc) = (df(grid[i - 1]), df(grid[i + 1]));
            if da == 0.0 || dc == 0.0 || (da > 0.0) == (dc > 0.0) {
                continue;
            }
            let crit = bracket_root(df, grid[i - 1], grid[i + 1], da, dc);
            let fc = f(crit);
            if fc == 0.0 || (fc > 0.0) != (b > 0.0) {
                let left = bracket_root(f, grid[i - 1], crit, a, fc);
                let right = bracket_root(f, crit, grid[i + 1], fc, c);
                candidates.push((0.0, vec![left, right]));
            } else {
                candidates.push((residual(crit), vec![crit, crit]));
            }
        }
        candidates.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for (score, pair) in candidates {
            if roots.len() + 2 > want {
                break;
            }
            if score > 1e-10 {
                break;
            }
            roots.extend(pair);
        }
    }

    if roots.len() < want {
        // eigenvalue exactly at the band edge
        let (s0, _, scale0) = hyperbolic_secular(bp, 0.0, side);
        if s0.abs() <= 1e-13 * scale0 {
            roots.push(0.0);
        } else if (s0 > 0.0) != (vals[0] > 0.0) && vals[0] != 0.0 {
            roots.push(bracket_root(f, 0.0, p_min, s0, vals[0]));
        }
    }

    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.into_iter().map(|p| (p, residual(p))).collect()
}

/// Squared boundary components from the starred-polynomial form,
/// `O²_{1k} = 2(u⌜t − t⌜u)/(u*t − t*u)` and likewise with `⌟`.
pub fn boundary_components_starred(bp: &BoundaryPolynomials, xi: f64) -> (f64, f64) {
    let u = bp.u.eval(xi);
    let t = bp.t.eval(xi);
    let (us, ts) = bp.star.eval(xi);
    let den = us * t - ts * u;
    let first = 2.0 * (bp.u_ul.eval(xi) * t - bp.t_ul.eval(xi) * u) / den;
    let last = 2.0 * (bp.u_lr.eval(xi) * t - bp.t_lr.eval(xi) * u) / den;
    (first, last)
}

/// `(O²_{k1}, O²_{kℓ})` of an in-band mode:
///
/// ```text
/// O²_{k1} = 2 sin²k/(ℓ+1−2φ'_k) · (u⌜t − t⌜u)/(u² + t² sin²k)
/// ```
pub fn eigvec_first_components(
    bp: &BoundaryPolynomials,
    mode: &SpectralMode,
) -> Result<(f64, f64)> {
    let k = mode
        .k()
        .ok_or_else(|| Error::InvalidArgument("boundary components need an in-band mode".into()))?;
    let amp = Amplitude::at(bp, k);
    let norm = amp.norm_sq();
    if norm == 0.0 {
        return Err(Error::ZeroAmplitude { k });
    }
    let slope = bp.ell as f64 + 1.0 - ((bp.ell - bp.n) as f64 - amp.psi_prime());
    let pref = 2.0 * amp.s * amp.s / (slope * norm);
    let c = amp.c;
    let first = pref * (bp.u_ul.eval(c) * amp.t - bp.t_ul.eval(c) * amp.u);
    let last = pref * (bp.u_lr.eval(c) * amp.t - bp.t_lr.eval(c) * amp.u);
    let clamp = |v: f64| {
        if v < -1e-12 {
            Err(Error::NegativeSquare { k, value: v })
        } else {
            Ok(v.max(0.0))
        }
    };
    Ok((clamp(first)?, clamp(last)?))
}

/// Advances `O_{ν+1} = ((λ − a_ν) O_ν − b_{ν−1} O_{ν−1}) / b_ν` (1-based ν).
fn recurrence_step(m: &QutMatrix, o: &[f64], nu: usize, lambda: f64) -> f64 {
    let prev = if nu >= 2 {
        m.b(nu - 1) * o[nu - 2]
    } else {
        0.0
    };
    ((lambda - m.a(nu)) * o[nu - 1] - prev) / m.b(nu)
}

/// Full eigenvector of a normalized matrix.
///
/// In-band: boundary components by the eigenvector recurrence from
/// `O_{k1}`, bulk by `O_ν = O_{u+1} U_{ν−u−1}(cos k) − O_u U_{ν−u−2}(cos k)`
/// (the imaginary part of `e^{ikν} α_k`), then the recurrence again through
/// the right boundary. No normalization is applied.
///
/// Out-of-band: `o_k1` is ignored; the vector is assembled from forward and
/// backward recurrences joined where they are both stable, then normalized.
pub fn eigvec_full(
    bp: &BoundaryPolynomials,
    m: &NormalizedQut,
    mode: &SpectralMode,
    o_k1: f64,
) -> Vec<f64> {
    match mode.branch {
        Branch::InBand { k, .. } => in_band_vector(bp, m.matrix(), k, o_k1),
        Branch::OutOfBand { .. } => {
            let q = m.matrix();
            let mut x = twisted_vector(q.diag(), q.offdiag(), mode.lambda, None);
            orient_and_normalize(&mut x);
            x
        }
    }
}

fn in_band_vector(bp: &BoundaryPolynomials, m: &QutMatrix, k: f64, o_k1: f64) -> Vec<f64> {
    debug_assert_eq!(bp.ell, m.ell());
    in_band_vector_unchecked(m, k, o_k1)
}

fn in_band_vector_unchecked(m: &QutMatrix, k: f64, o_k1: f64) -> Vec<f64> {
    let ell = m.ell();
    let (u, v) = (m.u(), m.v());
    let lambda = 2.0 * k.cos();
    let point = BandPoint::new(k);
    let mut o = vec![0.0; ell];
    o[0] = o_k1;
    // left boundary up to O_{u+1}
    let left_end = (u + 1).min(ell);
    for nu in 1..left_end {
        o[nu] = recurrence_step(m, &o, nu, lambda);
    }
    // bulk closed form for u+2 ≤ ν ≤ v
    if v >= u + 2 {
        let (ou, ou1) = (o[u - 1], o[u]);
        for nu in u + 2..=v {
            let j = nu - u;
            o[nu - 1] = ou1 * cheb_u(j - 1, point) - ou * cheb_u(j - 2, point);
        }
    }
    // right boundary
    let start = v.max(left_end);
    for nu in start..ell {
        o[nu] = recurrence_step(m, &o, nu, lambda);
    }
    o
}

/// Cancellation factors `(|u⌜t| + |t⌜u|)/|u⌜t − t⌜u|` of the two boundary
/// components; large values mean lost digits.
fn boundary_conditioning(bp: &BoundaryPolynomials, k: f64) -> (f64, f64) {
    let c = k.cos();
    let (u, t) = (bp.u.eval(c), bp.t.eval(c));
    let cond = |a: f64, b: f64| {
        let (x, y) = (a * t, b * u);
        (x.abs() + y.abs()) / (x - y).abs()
    };
    (
        cond(bp.u_ul.eval(c), bp.t_ul.eval(c)),
        cond(bp.u_lr.eval(c), bp.t_lr.eval(c)),
    )
}

/// In-band vector seeded from `O_{kℓ}`: the same construction on the
/// index-reversed matrix, oriented so that `O_{k1} ≥ 0`.
fn in_band_vector_from_last(m: &QutMatrix, k: f64, o_last: f64) -> Result<Vec<f64>> {
    let ell = m.ell();
    let diag: Vec<f64> = m.diag().iter().rev().copied().collect();
    let off: Vec<f64> = m.offdiag().iter().rev().copied().collect();
    let rev = QutMatrix::new(
        diag,
        off,
        ell + 1 - m.v(),
        ell + 1 - m.u(),
        m.bulk_a(),
        m.bulk_b(),
    )?;
    let mut o = in_band_vector_unchecked(&rev, k, o_last);
    o.reverse();
    if o[0] < 0.0 {
        o.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(o)
}

/// Flips the sign so the first nonzero component is positive, and
/// normalizes to unit length.
fn orient_and_normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sign = x.iter().find(|v| **v != 0.0).map_or(1.0, |v| v.signum());
    x.iter_mut().for_each(|v| *v *= sign / norm);
}

/// Eigenvector of an unreduced symmetric tridiagonal at an accurate
/// eigenvalue, from forward ratios `O_{ν+1}/O_ν` and backward ratios
/// `O_{ν−1}/O_ν` joined at the index where the joined row equation is best
/// satisfied. `exclude` keeps the join away from a window of indices.
fn twisted_vector(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    exclude: Option<(usize, usize)>,
) -> Vec<f64> {
    let ell = diag.len();
    if ell == 1 {
        return vec![1.0];
    }
    let tiny = f64::MIN_POSITIVE.sqrt();
    let guard = |x: f64| if x.abs() < tiny { tiny.copysign(x) } else { x };
    // fwd[i] = O_{i+1}/O_i (0-based), i = 0..ell-2
    let mut fwd = vec![0.0; ell - 1];
    for i in 0..ell - 1 {
        let prev = if i > 0 { off[i - 1] / fwd[i - 1] } else { 0.0 };
        fwd[i] = guard(((lambda - diag[i]) - prev) / off[i]);
    }
    // bwd[i] = O_{i-1}/O_i, i = 1..ell-1
    let mut bwd = vec![0.0; ell];
    for i in (1..ell).rev() {
        let next = if i + 1 < ell {
            off[i] / bwd[i + 1]
        } else {
            0.0
        };
        bwd[i] = guard(((lambda - diag[i]) - next) / off[i - 1]);
    }
    let gamma = |i: usize| {
        let mut g = lambda - diag[i];
        if i > 0 {
            g -= off[i - 1] / fwd[i - 1];
        }
        if i + 1 < ell {
            g -= off[i] / bwd[i + 1];
        }
        g.abs()
    };
    let r = (0..ell)
        .filter(|i| exclude.is_none_or(|(lo, hi)| *i < lo || *i > hi))
        .min_by(|&a, &b| gamma(a).partial_cmp(&gamma(b)).unwrap())
        .unwrap_or(0);
    let mut x = vec![0.0; ell];
    x[r] = 1.0;
    for i in (0..r).rev() {
        x[i] = x[i + 1] / fwd[i];
    }
    for i in r + 1..ell {
        x[i] = x[i - 1] / bwd[i];
    }
    x
}

/// Out-of-band vector of a mirror-symmetric matrix with the given parity,
/// solved on the half chain so that numerically coincident symmetric and
/// antisymmetric partners stay distinct.
/// Overwrites one half of `v` with the parity image of the other.
fn reflect_half(v: &mut [f64], parity: f64, keep_left: bool) {
    let ell = v.len();
    for i in 0..ell / 2 {
        let j = ell - 1 - i;
        if keep_left {
            v[j] = parity * v[i];
        } else {
            v[i] = parity * v[j];
        }
    }
    if ell % 2 == 1 && parity < 0.0 {
        v[ell / 2] = 0.0;
    }
}

fn mirror_vector(m: &QutMatrix, lambda: f64, parity: f64) -> Vec<f64> {
    let ell = m.ell();
    let half = ell / 2;
    let (diag, off) = (m.diag(), m.offdiag());
    let mut x = if ell.is_multiple_of(2) {
        let mut d = diag[..half].to_vec();
        d[half - 1] += parity * off[half - 1];
        let h = twisted_vector(&d, &off[..half - 1], lambda, None);
        let mut full = h.clone();
        full.extend(h.iter().rev().map(|v| parity * v));
        full
    } else if parity < 0.0 {
        let mut full = if half > 0 {
            twisted_vector(&diag[..half], &off[..half - 1], lambda, None)
        } else {
            Vec::new()
        };
        let h = full.clone();
        full.push(0.0);
        full.extend(h.iter().rev().map(|v| -v));
        full
    } else {
        let d = diag[..=half].to_vec();
        let mut o = off[..half].to_vec();
        if half > 0 {
            o[half - 1] *= std::f64::consts::SQRT_2;
        }
        let h = twisted_vector(&d, &o, lambda, None);
        let mut full = h[..half].to_vec();
        full.push(h[half] * std::f64::consts::SQRT_2);
        full.extend(h[..half].iter().rev());
        full
    };
    orient_and_normalize(&mut x);
    x
}

/// Eigenvalues closer than this to `±2` are treated as sitting on the edge.
fn edge_window(m: &QutMatrix) -> f64 {
    64.0 * f64::EPSILON * m.norm_inf().max(2.0)
}

/// `(below, inside, above)` the band `[−2, 2]`; eigenvalues within
/// [`edge_window`] of an edge count as outside.
fn band_counts(m: &QutMatrix) -> (usize, usize, usize) {
    let d = DenseTridiag::from(m);
    let delta = edge_window(m);
    let below = sturm_count(&d, -2.0 + delta);
    let above = m.ell() - sturm_count(&d, 2.0 - delta);
    (below, m.ell() - above - below, above)
}

/// Symmetric and antisymmetric half problems of a mirror-symmetric matrix,
/// when both still contain a uniform block.
///
/// For `ℓ = 2m` they are `T_{1:m}` with `a_m ± b_m`; for `ℓ = 2m+1` the
/// antisymmetric half is `T_{1:m}` and the symmetric one is `T_{1:m+1}` with
/// `b_m` scaled by `√2`.
fn mirror_halves(m: &QutMatrix) -> Result<Option<[QutMatrix; 2]>> {
    let ell = m.ell();
    if ell < 4 || !m.is_mirror_symmetric() {
        return Ok(None);
    }
    let half = ell / 2;
    let (diag, off) = (m.diag(), m.offdiag());
    // the last row of each half may be modified, so the block ends before it
    let (u, v) = (m.u(), half.min(m.v()).saturating_sub(1));
    if v < u {
        return Ok(None);
    }
    let build = |d: Vec<f64>, o: Vec<f64>| QutMatrix::new(d, o, u, v, 0.0, 1.0);
    let halves = if ell.is_multiple_of(2) {
        let mut plus = diag[..half].to_vec();
        let mut minus = plus.clone();
        plus[half - 1] += off[half - 1];
        minus[half - 1] -= off[half - 1];
        let o = off[..half - 1].to_vec();
        [build(plus, o.clone())?, build(minus, o)?]
    } else {
        let mut o = off[..half].to_vec();
        o[half - 1] *= std::f64::consts::SQRT_2;
        [
            build(diag[..=half].to_vec(), o)?,
            build(diag[..half].to_vec(), off[..half - 1].to_vec())?,
        ]
    };
    Ok(Some(halves))
}

/// Descending order by eigenvalue.
fn sort_descending(modes: &mut [SpectralMode]) {
    modes.sort_by(|a, b| b.lambda.partial_cmp(&a.lambda).unwrap());
}

/// Builds every eigenvector and first component for modes already sorted
/// in descending order.
fn assemble_vectors(
    bp: &BoundaryPolynomials,
    nq: &NormalizedQut,
    modes: &[SpectralMode],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let q = nq.matrix();
    let mirror = q.is_mirror_symmetric();
    let ell = q.ell();
    let mut firsts = Vec::with_capacity(modes.len());
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(modes.len());
    for (rank, mode) in modes.iter().enumerate() {
        let vec = match mode.branch {
            Branch::InBand { k, .. } => {
                let (first, last) = eigvec_first_components(bp, mode)?;
                let (cond_first, cond_last) = boundary_conditioning(bp, k);
                let from_last = cond_last < cond_first && last > 0.0;
                let mut v = if from_last {
                    in_band_vector_from_last(q, k, last.sqrt())?
                } else {
                    in_band_vector(bp, q, k, first.sqrt())
                };
                if mirror && ell > 1 {
                    // resonant pairs split by far less than the recurrence
                    // error; keep the seeded half and impose the parity
                    let parity = if rank % 2 == 0 { 1.0 } else { -1.0 };
                    reflect_half(&mut v, parity, !from_last);
                }
                v
            }
            Branch::OutOfBand { .. } if mirror && ell > 1 => {
                // symmetric for odd rank (1-based), antisymmetric for even
                let parity = if rank % 2 == 0 { 1.0 } else { -1.0 };
                mirror_vector(q, mode.lambda, parity)
            }
            Branch::OutOfBand { .. } => {
                let coincident = rank > 0
                    && !modes[rank - 1].is_in_band()
                    && (modes[rank - 1].lambda - mode.lambda).abs()
                        <= 1e-12 * mode.lambda.abs().max(1.0);
                let mut x = if coincident {
                    // join on the opposite half from the partner's peak
                    let prev = &vectors[rank - 1];
                    let peak = prev
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                        .map_or(0, |(i, _)| i);
                    let window = if peak < ell / 2 {
                        (0, ell / 2)
                    } else {
                        (ell / 2, ell - 1)
                    };
                    let mut x = twisted_vector(q.diag(), q.offdiag(), mode.lambda, Some(window));
                    orient_and_normalize(&mut x);
                    let dot: f64 = x.iter().zip(prev).map(|(a, b)| a * b).sum();
                    x.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
                    x
                } else {
                    twisted_vector(q.diag(), q.offdiag(), mode.lambda, None)
                };
                orient_and_normalize(&mut x);
                x
            }
        };
        firsts.push(vec[0]);
        vectors.push(vec);
    }
    Ok((firsts, vectors))
}

/// Normalizes, builds the polynomials, finds every eigenvalue, and
/// optionally every eigenvector; results are in the original units.
pub fn diagonalize(m: &QutMatrix, opts: SolveOptions) -> Result<Spectrum> {
    let nq = normalize(m)?;
    let s = diagonalize_normalized(&nq, opts)?;
    Ok(denormalize_spectrum(s, &nq))
}

/// Same as [`diagonalize`] but stays in normalized units.
pub fn diagonalize_normalized(nq: &NormalizedQut, opts: SolveOptions) -> Result<Spectrum> {
    let q = nq.matrix();
    let ell = q.ell();
    let bp = BoundaryPolynomials::build(nq)?;
    let (below, expected_in, above) = band_counts(q);
    let k_guard = edge_window(q).sqrt();

    let (mut modes, mut diagnostics) =
        solve_in_band_with_stats(&bp, Some(expected_in), opts.root_mode, k_guard)?;
    let oob = match mirror_halves(q)? {
        // each parity class has simple roots even when the full secular
        // function has a numerically double one
        Some(halves) if above + below > 0 => {
            let mut oob = Vec::with_capacity(above + below);
            for h in halves {
                let hb = BoundaryPolynomials::build(&NormalizedQut::identity(h.clone())?)?;
                let (h_below, _, h_above) = band_counts(&h);
                oob.extend(solve_out_of_band(&hb, h.norm_inf(), h_above, h_below)?);
            }
            oob
        }
        _ => solve_out_of_band(&bp, q.norm_inf(), above, below)?,
    };
    diagnostics.double_roots = oob
        .windows(2)
        .filter(|w| w[0].p() == w[1].p() && w[0].branch == w[1].branch)
        .count();
    modes.extend(oob);
    sort_descending(&mut modes);

    let (eigvec_first, vectors) = {
        let (firsts, vecs) = assemble_vectors(&bp, nq, &modes)?;
        (firsts, opts.want_vectors.then_some(vecs))
    };
    diagnostics.max_residual = modes.iter().map(|m| m.residual).fold(0.0, f64::max);

    Ok(Spectrum {
        eigenvalues: modes.iter().map(|m| m.lambda).collect(),
        modes,
        eigvec_first,
        vectors,
        counts: Counts {
            in_band: expected_in,
            above_band: above,
            below_band: below,
        },
        shift: 0.0,
        scale: 1.0,
        ell,
        n: q.block_size(),
        diagnostics,
    })
}
