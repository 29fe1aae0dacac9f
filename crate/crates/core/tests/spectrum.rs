mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use qut::chebyshev::BandPoint;
use qut::oracle::{char_poly_eval, DenseTridiag};
use qut::presets::{asymmetric, deep_edge, two_edge};
use qut::spectrum::*;
use qut::{diagonalize, normalize, BoundaryPolynomials, QutMatrix};

fn solve(m: &QutMatrix, vectors: bool) -> Spectrum {
    diagonalize(
        m,
        SolveOptions {
            want_vectors: vectors,
            ..Default::default()
        },
    )
    .unwrap()
}

fn polys(m: &QutMatrix) -> BoundaryPolynomials {
    BoundaryPolynomials::build(&normalize(m).unwrap()).unwrap()
}

fn mod_pi(x: f64) -> f64 {
    x - (x / PI).round() * PI
}

#[test]
fn uniform_closed_form() {
    let ell = 8;
    let s = solve(&QutMatrix::uniform(ell, 0.0, 1.0).unwrap(), true);
    let v = s.vectors.as_ref().unwrap();
    for j in 1..=ell {
        let k = PI * j as f64 / (ell + 1) as f64;
        assert!((s.eigenvalues[j - 1] - 2.0 * k.cos()).abs() < 1e-14);
        assert!(
            (s.eigvec_first[j - 1].powi(2) - 2.0 * k.sin().powi(2) / (ell + 1) as f64).abs()
                < 1e-15
        );
        for mu in 1..=ell {
            let want = (2.0 / (ell + 1) as f64).sqrt() * (mu as f64 * k).sin();
            assert!((v[j - 1][mu - 1] - want).abs() < 1e-14);
        }
        let dos = density_of_states(&s.modes[j - 1], ell).unwrap();
        assert!((dos - (ell + 1) as f64 / PI).abs() < 1e-12);
    }
}

#[test]
fn uniform_in_a_shifted_frame() {
    let s = solve(&QutMatrix::uniform(5, 3.0, -2.0).unwrap(), true);
    for (j, lambda) in s.eigenvalues.iter().enumerate() {
        let want = 3.0 + 4.0 * (PI * (j + 1) as f64 / 6.0).cos();
        assert!((lambda - want).abs() < 1e-13);
    }
    assert_eq!((s.shift, s.scale), (3.0, 2.0));
}

#[test]
fn corner_one_matrix_is_uniform() {
    // x = 0, y = 1 makes the two-edge matrix uniform; ρ stays (ℓ+1)/π
    let s = solve(&two_edge(12, 0.0, 1.0).unwrap(), false);
    for m in &s.modes {
        assert!((density_of_states(m, 12).unwrap() - 13.0 / PI).abs() < 1e-12);
    }
}

#[test]
fn yueh_wavenumbers() {
    let ell = 7;
    let s = solve(&asymmetric(ell, 0.0, 1.0, -1.0).unwrap(), false);
    for (i, m) in s.modes.iter().enumerate() {
        let want = 2.0 * PI * (i + 1) as f64 / 15.0;
        assert!((m.k().unwrap() - want).abs() < 1e-13);
        // the phase part 2φ_k − (ℓ−n)k equals −3k/2 modulo π
        let k = m.k().unwrap();
        assert!(mod_pi(2.0 * m.phi.unwrap() - 2.0 * k + 1.5 * k).abs() < 1e-12);
    }
}

#[test]
fn two_modes_leave_the_band() {
    let m = two_edge(10, 2.0, 1.0).unwrap();
    let bp = polys(&m);
    let in_band = solve_in_band(&bp, None, RootMode::Converged).unwrap();
    assert_eq!(in_band.len(), 8);
    let s = solve(&m, false);
    assert_eq!(
        (s.counts.in_band, s.counts.above_band, s.counts.below_band),
        (8, 2, 0)
    );
}

#[test]
fn two_edge_shift_and_first_component() {
    let (x, y, ell) = (0.8, 1.2, 40);
    let m = two_edge(ell, x, y).unwrap();
    let bp = polys(&m);
    let s = solve(&m, false);
    let y2 = y * y;
    for (mode, o) in s.modes.iter().zip(&s.eigvec_first) {
        let Some(k) = mode.k() else { continue };
        let re = (2.0 - y2) * k.cos() - x;
        let phi = k - (y2 * k.sin() / re).atan();
        let (phi_got, phi_prime) = shift_phi(&bp, BandPoint::new(k)).unwrap();
        assert!(mod_pi(phi_got - phi).abs() < 1e-12);
        let want = 2.0 / (ell as f64 + 1.0 - 2.0 * phi_prime) * y2 * k.sin().powi(2)
            / (re * re + y2 * y2 * k.sin().powi(2));
        assert!((o * o - want).abs() < 1e-13, "{} vs {want}", o * o);
        let (first, last) = eigvec_first_components(&bp, mode).unwrap();
        assert!((first - last).abs() < 1e-13);
    }
}

#[test]
fn deep_edge_shift_and_first_component() {
    let (x, y, ell) = (0.9, 1.1, 41);
    let m = deep_edge(ell, x, y).unwrap();
    let bp = polys(&m);
    let s = solve(&m, false);
    let (x2, y2) = (x * x, y * y);
    let z2 = 2.0 - x2 - y2;
    for mode in s.modes.iter().filter(|m| m.is_in_band()) {
        let k = mode.k().unwrap();
        let den = z2 + (2.0 - y2) * (2.0 * k).cos();
        let phi = 2.0 * k - (y2 * (2.0 * k).sin() / den).atan();
        let (phi_got, phi_prime) = shift_phi(&bp, BandPoint::new(k)).unwrap();
        assert!(mod_pi(phi_got - phi).abs() < 1e-12);
        let want = 2.0 / (ell as f64 + 1.0 - 2.0 * phi_prime) * x2 * y2 * k.sin().powi(2)
            / (den * den + y2 * y2 * (2.0 * k).sin().powi(2));
        let (first, last) = eigvec_first_components(&bp, mode).unwrap();
        assert!((first - want).abs() < 1e-13, "{first} vs {want}");
        assert!((first - last).abs() < 1e-13);
    }
}

#[test]
fn shift_derivative_is_the_slope_of_the_shift() {
    let m = QutMatrix::from_edges(
        30,
        0.0,
        1.0,
        &[1.5, -0.4, 2.2],
        &[0.7, -1.9, 1.1],
        &[0.3],
        &[2.5],
    )
    .unwrap();
    let bp = polys(&m);
    for i in 1..60 {
        let k = PI * i as f64 / 60.0;
        let h = 1e-5;
        let (a, _) = shift_phi(&bp, BandPoint::new(k - h)).unwrap();
        let (b, _) = shift_phi(&bp, BandPoint::new(k + h)).unwrap();
        let diff = b - a;
        let fd = (diff - (diff / (PI / 2.0)).round() * (PI / 2.0)) / (2.0 * h);
        let (_, d) = shift_phi(&bp, BandPoint::new(k)).unwrap();
        assert!(
            (fd - d).abs() < 1e-6 * d.abs().max(1.0),
            "k={k}: {fd} vs {d}"
        );
    }
}

#[test]
fn out_of_band_roots_follow_the_hyperbolic_condition() {
    let ell = 30;
    for &x in &[1.3, 2.0, 3.5] {
        let s = solve(&two_edge(ell, x, 1.0).unwrap(), false);
        let ps: Vec<f64> = s.modes.iter().filter_map(|m| m.p()).collect();
        assert_eq!(ps.len(), 2);
        for p in ps {
            let th = ((ell as f64 - 1.0) * p / 2.0).tanh();
            let plus = p.cosh() + p.sinh() * th;
            let minus = p.cosh() + p.sinh() / th;
            let best = (plus - x).abs().min((minus - x).abs());
            assert!(best < 1e-10, "x={x}: {plus} {minus}");
        }
    }
}

#[test]
fn mirror_pair_splitting_is_resolved() {
    // at x = 2, ℓ = 30 the two localized levels differ by about 4e-9
    let m = two_edge(30, 2.0, 1.0).unwrap();
    let s = solve(&m, true);
    let o = oracle(&m, false);
    assert!(max_abs_diff(&s.eigenvalues, &o.0) < 1e-12);
    assert!(s.eigenvalues[0] - s.eigenvalues[1] > 1e-9);
    assert!(s.orthogonality_residual().unwrap() < 1e-10);
}

#[test]
fn localized_pair_converges() {
    let s = solve(&two_edge(200, 2.0, 1.0).unwrap(), true);
    assert_eq!(s.counts.above_band, 2);
    assert!((s.eigenvalues[0] - 2.5).abs() < 1e-8 && (s.eigenvalues[1] - 2.5).abs() < 1e-8);
    assert!(s.orthogonality_residual().unwrap() < 1e-9);
}

#[test]
fn opposite_pairs_for_strong_coupling() {
    let s = solve(&two_edge(50, 0.0, 2.0).unwrap(), false);
    assert_eq!((s.counts.above_band, s.counts.below_band), (2, 2));
    let e = &s.eigenvalues;
    assert!((e[0] + e[49]).abs() < 1e-10 && (e[1] + e[48]).abs() < 1e-10);
}

#[test]
fn secular_residuals_are_small() {
    let mut r = rng(31);
    for _ in 0..40 {
        let m = random_qut(&mut r, 8..=80, false);
        let s = solve(&m, false);
        for mode in &s.modes {
            assert!(mode.residual <= 1e-10, "{mode:?}");
            if let Some(k) = mode.k() {
                assert!(k > 0.0 && k < PI);
                assert!((mode.lambda - 2.0 * k.cos()).abs() < 1e-15);
            } else {
                assert!(mode.lambda.abs() >= 2.0);
            }
        }
        assert_eq!(
            s.counts.in_band + s.counts.above_band + s.counts.below_band,
            m.ell()
        );
    }
}

#[test]
fn first_components_match_oracle() {
    let mut r = rng(32);
    for _ in 0..20 {
        let m = random_qut(&mut r, 40..=40, false);
        let s = solve(&m, false);
        let (_, vecs) = oracle(&m, true);
        for (o, v) in s.eigvec_first.iter().zip(vecs.unwrap()) {
            assert!(*o >= 0.0);
            assert!((o * o - v[0] * v[0]).abs() < 1e-9);
        }
    }
}

#[test]
fn full_vectors_match_the_two_edge_closed_form() {
    let (x, y, ell) = (0.7, 1.3, 30);
    let m = two_edge(ell, x, y).unwrap();
    let nq = normalize(&m).unwrap();
    let bp = BoundaryPolynomials::build(&nq).unwrap();
    let s = solve(&m, false);
    for (mode, &o1) in s.modes.iter().zip(&s.eigvec_first) {
        let Some(k) = mode.k() else { continue };
        let v = eigvec_full(&bp, &nq, mode, o1);
        for nu in 2..ell {
            let nf = nu as f64;
            let want = ((nf * k).sin() - x * ((nf - 1.0) * k).sin()
                + (1.0 - y * y) * ((nf - 2.0) * k).sin())
                / (y * k.sin())
                * o1;
            assert!((v[nu - 1] - want).abs() < 1e-9);
        }
    }
}

#[test]
fn dos_integral_counts_levels_between_the_band_edges() {
    // ∫ρ dk = [Θ(π) − Θ(0)]/π, one more than the number of in-band roots
    for m in [
        QutMatrix::uniform(100, 0.0, 1.0).unwrap(),
        two_edge(300, 2.0, 1.0).unwrap(),
        two_edge(300, 0.5, 1.0).unwrap(),
        deep_edge(301, 0.8, 1.6).unwrap(),
    ] {
        let bp = polys(&m);
        let integral = trapezoid(&dos_curve(&bp, 20_001).unwrap());
        let s = solve(&m, false);
        assert!(
            (integral - (s.counts.in_band as f64 + 1.0)).abs() < 0.5,
            "{integral} vs {}",
            s.counts.in_band
        );
    }
}

#[test]
fn normalized_and_original_spectra_agree() {
    let mut r = rng(33);
    for _ in 0..10 {
        let m = random_qut(&mut r, 12..=12, true);
        let nq = normalize(&m).unwrap();
        let (orig, _) = oracle(&m, false);
        let (norm, _) = oracle(nq.matrix(), false);
        for (a, b) in orig.iter().zip(&norm) {
            assert!(
                (a - (nq.shift() + nq.scale() * b)).abs()
                    <= 1e-12 * nq.scale().max(1.0) * a.abs().max(1.0)
            );
        }
        let s = solve(&m, false);
        assert!(max_abs_diff(&s.eigenvalues, &orig) <= 1e-10 * orig[0].abs().max(1.0));
    }
}

#[test]
fn negative_boundary_couplings_keep_vector_signs() {
    let m =
        QutMatrix::from_edges(20, 0.5, -1.5, &[1.0, 2.0], &[-0.7, 0.9], &[-1.0], &[-2.0]).unwrap();
    let s = solve(&m, true);
    let (vals, vecs) = oracle(&m, true);
    assert!(max_abs_diff(&s.eigenvalues, &vals) < 1e-12);
    let t = DenseTridiag::from(&m);
    for (v, lambda) in s.vectors.as_ref().unwrap().iter().zip(&s.eigenvalues) {
        let tv = t.apply(v);
        let r = tv
            .iter()
            .zip(v)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0, f64::max);
        assert!(r < 1e-10);
    }
    for (a, b) in s.vectors.unwrap().iter().zip(vecs.unwrap()) {
        assert!(max_dev_up_to_sign(a, &b) < 1e-9);
    }
}

#[test]
fn round_trip_residuals_through_the_determinant() {
    let m = deep_edge(60, 1.7, 0.4).unwrap();
    let s = solve(&m, false);
    let t = DenseTridiag::from(&m);
    for &lambda in &s.eigenvalues {
        let delta = 1e-8 * lambda.abs().max(1.0);
        let lo = char_poly_eval(&t, lambda - delta).signum();
        let hi = char_poly_eval(&t, lambda + delta).signum();
        assert!(lo * hi <= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wavenumbers_strictly_increase(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_qut(&mut r, 8..=120, false);
        let s = solve(&m, false);
        let ks: Vec<(f64, i64)> = s.modes.iter().filter_map(|m| match m.branch {
            Branch::InBand { k, j } => Some((k, j)),
            _ => None,
        }).collect();
        // modes are in descending λ, so ascending k
        prop_assert_eq!(ks.len(), s.counts.in_band);
        for w in ks.windows(2) {
            prop_assert!(w[1].0 > w[0].0);
            prop_assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn paige_identity(seed in any::<u64>(), mu_frac in 0.0f64..1.0, nu_frac in 0.0f64..1.0) {
        let mut r = rng(seed);
        let m = random_qut(&mut r, 8..=60, false);
        let nq = normalize(&m).unwrap();
        let q = nq.matrix();
        let ell = q.ell();
        let bp = BoundaryPolynomials::build(&nq).unwrap();
        let s = diagonalize_normalized(&nq, SolveOptions { want_vectors: true, ..Default::default() }).unwrap();
        let t = DenseTridiag::from(q);
        let (mut mu, mut nu) = (1 + (mu_frac * ell as f64) as usize, 1 + (nu_frac * ell as f64) as usize);
        mu = mu.min(ell);
        nu = nu.min(ell);
        if mu > nu { std::mem::swap(&mut mu, &mut nu); }
        let vecs = s.vectors.unwrap();
        for (mode, v) in s.modes.iter().zip(&vecs) {
            let xi = mode.lambda / 2.0;
            if (1.0 - xi * xi).abs() < 1e-6 { continue; }
            let dchi = bp.char_poly_derivative(xi);
            let lhs = dchi * v[mu - 1] * v[nu - 1];
            let prod: f64 = (mu..nu).map(|i| q.b(i)).product();
            let rhs = sub_det(&t, 1, mu - 1, mode.lambda) * prod * sub_det(&t, nu + 1, ell, mode.lambda);
            let scale = rhs.abs().max(dchi.abs() / ell as f64);
            prop_assert!((lhs - rhs).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn mirror_parity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_mirror(&mut r, 8..=100);
        let s = solve(&m, true);
        let ell = m.ell();
        for (rank, v) in s.vectors.unwrap().iter().enumerate() {
            let sign = if rank % 2 == 0 { 1.0 } else { -1.0 };
            for mu in 0..ell {
                prop_assert!((v[ell - 1 - mu] - sign * v[mu]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn oracle_equivalence(seed in any::<u64>(), bulk in any::<bool>()) {
        let mut r = rng(seed);
        let m = random_qut(&mut r, 8..=120, bulk);
        let s = solve(&m, true);
        let (vals, vecs) = oracle(&m, true);
        for (a, b) in s.eigenvalues.iter().zip(&vals) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        for (a, b) in s.vectors.as_ref().unwrap().iter().zip(vecs.unwrap()) {
            prop_assert!(max_dev_up_to_sign(a, &b) <= 1e-8);
        }
        prop_assert!(s.orthogonality_residual().unwrap() <= 1e-9);
    }
}
