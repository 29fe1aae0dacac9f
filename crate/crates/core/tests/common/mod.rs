#![allow(dead_code)]

use qut::oracle::{char_poly_eval, eig_all, DenseTridiag};
use qut::QutMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Coupling with magnitude in [0.25, 3] and random sign.
fn coupling(r: &mut StdRng) -> f64 {
    let mag = r.gen_range(0.25..3.0);
    if r.gen_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Random QUT matrix with bulk (0, 1) or a random bulk, boundary widths
/// in 0..=4 on each side.
pub fn random_qut(
    r: &mut StdRng,
    ell_range: std::ops::RangeInclusive<usize>,
    random_bulk: bool,
) -> QutMatrix {
    let ell = r.gen_range(ell_range);
    let l = r.gen_range(0..=4usize);
    let rr = r.gen_range(0..=4usize);
    let la: Vec<f64> = (0..l).map(|_| r.gen_range(-3.0..3.0)).collect();
    let lb: Vec<f64> = (0..l).map(|_| coupling(r)).collect();
    let ra: Vec<f64> = (0..rr).map(|_| r.gen_range(-3.0..3.0)).collect();
    let rb: Vec<f64> = (0..rr).map(|_| coupling(r)).collect();
    let (a, b) = if random_bulk {
        (r.gen_range(-3.0..3.0), coupling(r))
    } else {
        (0.0, 1.0)
    };
    let shift = |xs: Vec<f64>| xs.into_iter().map(|x| a + x * b.abs()).collect::<Vec<_>>();
    let scale = |xs: Vec<f64>| xs.into_iter().map(|x| x * b.abs()).collect::<Vec<_>>();
    QutMatrix::from_edges(ell, a, b, &shift(la), &scale(lb), &shift(ra), &scale(rb)).unwrap()
}

/// Random mirror-symmetric QUT matrix with positive couplings.
pub fn random_mirror(r: &mut StdRng, ell_range: std::ops::RangeInclusive<usize>) -> QutMatrix {
    let ell = r.gen_range(ell_range);
    let w = r.gen_range(1..=4usize.min((ell - 1) / 2));
    let a: Vec<f64> = (0..w).map(|_| r.gen_range(-3.0..3.0)).collect();
    let b: Vec<f64> = (0..w).map(|_| r.gen_range(0.25..3.0)).collect();
    let ra: Vec<f64> = a.iter().rev().copied().collect();
    let rb: Vec<f64> = b.iter().rev().copied().collect();
    QutMatrix::from_edges(ell, 0.0, 1.0, &a, &b, &ra, &rb).unwrap()
}

pub fn oracle(m: &QutMatrix, vectors: bool) -> (Vec<f64>, Option<Vec<Vec<f64>>>) {
    eig_all(&DenseTridiag::from(m), vectors).unwrap()
}

/// Largest componentwise difference of two vectors after aligning signs.
pub fn max_dev_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - s * y).abs())
        .fold(0.0, f64::max)
}

/// Determinant of `λ − T` restricted to rows `first..=last` (1-based);
/// an empty range gives 1.
pub fn sub_det(t: &DenseTridiag, first: usize, last: usize, lambda: f64) -> f64 {
    if first > last {
        return 1.0;
    }
    char_poly_eval(&t.sub(first, last).unwrap(), lambda).value()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Double-double number `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: err }
    }

    fn quick(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    pub fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let s = Self::quick(s.hi, s.lo + t.hi);
        Self::quick(s.hi, s.lo + t.lo)
    }

    pub fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    pub fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Self::quick(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    pub fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let r = self.sub(Self::new(q1).mul(Self::new(d)));
        let q2 = r.hi / d;
        Self::quick(q1, q2)
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `cosh p` in double-double from the Taylor series (moderate `p`).
pub fn dd_cosh(p: f64) -> Dd {
    let p2 = Dd::new(p).mul(Dd::new(p));
    let mut term = Dd::new(1.0);
    let mut sum = Dd::new(1.0);
    for k in 1..60 {
        term = term.mul(p2).div_f64(((2 * k - 1) * (2 * k)) as f64);
        sum = sum.add(term);
        if term.hi.abs() < 1e-40 {
            break;
        }
    }
    sum
}

/// `U_n(x)` by the three-term recurrence in double-double.
pub fn dd_cheb_u(n: usize, x: Dd) -> Dd {
    let two_x = x.add(x);
    let (mut prev, mut cur) = (Dd::new(0.0), Dd::new(1.0));
    for _ in 0..n {
        let next = two_x.mul(cur).sub(prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// `T_n(x)` by the three-term recurrence in double-double.
pub fn dd_cheb_t(n: usize, x: Dd) -> Dd {
    if n == 0 {
        return Dd::new(1.0);
    }
    let two_x = x.add(x);
    let (mut prev, mut cur) = (Dd::new(1.0), x);
    for _ in 1..n {
        let next = two_x.mul(cur).sub(prev);
        prev = cur;
        cur = next;
    }
    cur
}
