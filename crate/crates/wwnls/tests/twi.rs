use proptest::prelude::*;
use wwnls::kernels::q_total;
use wwnls::resonance::{k1_of_b, stability};
use wwnls::twi::*;
use wwnls::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn extracted(b: f64, ell: i32) -> TWICoeffs {
    twi_coeffs(2.0, k1_of_b(2.0, b).unwrap(), b, ell).unwrap()
}

fn dist(a: &TWIState, b: &TWISample) -> f64 {
    (a.a0 - b.a0).norm().max((a.a1 - b.a1).norm()).max((a.a2 - b.a2).norm())
}

#[test]
fn triad_sums_to_zero() {
    for b in [0.01, 0.1, 0.2] {
        for ell in [1, -1] {
            let t = extracted(b, ell).triad.unwrap();
            assert_eq!(t[0] + t[1] + t[2], 0.0);
        }
    }
    assert!(matches!(twi_coeffs(2.0, 4.3, 0.1, 0), Err(TwiError::BadEll(0))));
}

#[test]
fn coefficients_match_closed_form() {
    let b = 0.1;
    let k0 = 2.0;
    let k1 = k1_of_b(k0, b).unwrap();
    let co = extracted(b, 1);
    assert!(co.warning.is_none());
    // b̂₁₁(k, l, m) is the u₋₁ self-interaction at (k, m)
    let want = [
        q_total(-1, -1, -k0, k1 - k0, b).unwrap(),
        q_total(-1, -1, k1, k1 - k0, b).unwrap(),
        q_total(-1, -1, k0 - k1, -k1, b).unwrap(),
    ];
    for (got, w) in [co.c0, co.c1, co.c2].iter().zip(want) {
        assert!((got - w).norm() <= 1e-10 * w.norm(), "{got} vs {w}");
    }
}

#[test]
fn off_resonance_warns() {
    let co = twi_coeffs(2.0, 5.0, 0.1, 1).unwrap();
    assert!(co.warning.is_some());
    assert!(co.resonance_defect > 1e-8);
}

#[test]
fn reflection_conjugates() {
    for b in [0.01, 0.05, 0.1, 0.2] {
        let p = extracted(b, 1);
        let m = extracted(b, -1);
        for (x, y) in [(p.c0, m.c0), (p.c1, m.c1), (p.c2, m.c2)] {
            assert!((x - y.conj()).norm() <= 1e-12 * (1.0 + x.norm()));
        }
    }
}

#[test]
fn sign_matches_stability() {
    for b in [0.005, 0.01, 0.05, 0.1, 0.2] {
        let co = extracted(b, 1);
        let s = stability(2.0, b).unwrap();
        let r = co.ratio().unwrap();
        assert!((r - s.ratio.unwrap()).abs() <= 1e-8 * r.abs(), "b = {b}");
        assert_eq!(co.nls_subspace_stable().unwrap(), s.stable);
    }
}

#[test]
fn fixed_points() {
    let co = extracted(0.1, 1);
    let s0 = TWIState::new(c(0.7, -0.2), C64::default(), C64::default());
    let t = integrate(&s0, &co, 1e-2, 5.0, 10).unwrap();
    for x in &t.samples {
        assert_eq!((x.a0, x.a1, x.a2), (s0.a0, C64::default(), C64::default()));
        assert_eq!(x.e, Some(0.0));
    }
}

#[test]
fn energy_conserved_and_nonnegative() {
    let co = extracted(0.1, 1);
    let s0 = TWIState::new(c(1.0, 0.0), c(0.1, 0.05), c(-0.08, 0.1));
    let dt = 1e-3;
    let t = integrate(&s0, &co, dt, 50.0, 1).unwrap();
    assert!(!t.blown_up);
    let e0 = conserved_e(&s0, &co).unwrap();
    assert!(e0 > 0.0);
    let es: Vec<f64> = t.samples.iter().map(|x| x.e.unwrap()).collect();
    for &e in &es {
        assert!(e >= 0.0);
        assert!((e - e0).abs() <= 1e-8 * e0);
    }
    for w in es.windows(3) {
        assert!(((w[2] - w[0]) / (2.0 * dt)).abs() <= 1e-7);
    }
}

#[test]
fn rk4_fourth_order() {
    let co = extracted(0.1, 1);
    let s0 = TWIState::new(c(1.0, 0.0), c(0.5, 0.2), c(0.3, -0.4));
    let t_end = 1.0;
    let reference = *integrate(&s0, &co, 1e-4, t_end, 1000).unwrap().last();
    let err = |dt: f64| {
        let x = integrate(&s0, &co, dt, t_end, 1000).unwrap();
        let l = x.last();
        (l.a0 - reference.a0).norm() + (l.a1 - reference.a1).norm() + (l.a2 - reference.a2).norm()
    };
    let ratio = err(0.02) / err(0.01);
    assert!((13.0..=19.0).contains(&ratio), "{ratio}");
}

#[test]
fn time_reversal() {
    let co = extracted(0.05, 1);
    let s0 = TWIState::new(c(1.0, 0.1), c(0.2, 0.0), c(0.0, 0.3));
    let fwd = integrate(&s0, &co, 1e-3, 10.0, 1000).unwrap();
    let l = fwd.last();
    let mid = TWIState { a0: l.a0, a1: l.a1, a2: l.a2, tau: l.tau };
    let back = integrate(&mid, &co, 1e-3, 0.0, 1000).unwrap();
    assert!(back.last().tau.abs() < 1e-9);
    assert!(dist(&s0, back.last()) <= 1e-8);
}

#[test]
fn invariant_subspaces() {
    let co = extracted(0.1, 1);
    let zero = C64::default();
    for s0 in [
        TWIState::new(c(1.0, 0.0), zero, zero),
        TWIState::new(zero, c(1.0, 0.3), zero),
        TWIState::new(zero, zero, c(-0.5, 1.0)),
    ] {
        let t = integrate(&s0, &co, 1e-2, 10.0, 1).unwrap();
        for x in &t.samples {
            for (a, b) in [(s0.a0, x.a0), (s0.a1, x.a1), (s0.a2, x.a2)] {
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn unstable_synthetic_grows() {
    // c₁/c₂ = 1 > 0
    let co = TWICoeffs::synthetic(c(0.0, 1.0), c(0.0, -1.0), c(0.0, -1.0));
    assert!(!co.nls_subspace_stable().unwrap());
    let g = growth_experiment(&co, 1e-4, None).unwrap();
    assert!(g.amplification >= 10.0, "{g:?}");
    assert!((g.fitted_rate - g.predicted_rate).abs() <= 0.2 * g.predicted_rate, "{g:?}");
}

#[test]
fn stable_extracted_stays_small() {
    for b in [0.01, 0.1, 0.2] {
        let g = growth_experiment(&extracted(b, 1), 1e-4, Some(50.0)).unwrap();
        assert_eq!(g.predicted_rate, 0.0);
        assert!(g.amplification < 10.0, "b = {b}: {g:?}");
    }
}

#[test]
fn bad_inputs() {
    let co = TWICoeffs::synthetic(c(0.0, 1.0), c(0.0, 1.0), C64::default());
    assert!(matches!(co.ratio(), Err(TwiError::ZeroC2)));
    let s0 = TWIState::new(c(1.0, 0.0), c(0.1, 0.0), c(0.1, 0.0));
    assert!(integrate(&s0, &co, 0.0, 1.0, 1).is_err());
    assert!(integrate(&s0, &co, f64::NAN, 1.0, 1).is_err());
}

#[test]
fn blow_up_is_flagged() {
    let co = TWICoeffs::synthetic(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
    let s0 = TWIState::new(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
    let t = integrate(&s0, &co, 1e-3, 100.0, 1).unwrap();
    assert!(t.blown_up);
    assert!(t.last().tau < 100.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_derivative_vanishes(a in prop::array::uniform6(-1.0f64..1.0), b in prop::sample::select(vec![0.01, 0.1, 0.2])) {
        // dE/dτ = 2Re(conj A₁ ∂A₁) − 2r Re(conj A₂ ∂A₂) = 0 for the exact flow
        let co = extracted(b, 1);
        let st = [c(a[0], a[1]), c(a[2], a[3]), c(a[4], a[5])];
        let d = rhs(&st, &co);
        let r = co.ratio().unwrap();
        let de = 2.0 * (st[1].conj() * d[1]).re - 2.0 * r * (st[2].conj() * d[2]).re;
        let scale = co.c1.norm() * 6.0;
        prop_assert!(de.abs() <= 1e-12 * scale, "{}", de);
    }
}
