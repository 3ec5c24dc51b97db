use proptest::prelude::*;
use wwnls::dispersion::{omega, omega_derivs};
use wwnls::resonance::*;

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Independent sign-change count of `r̂` on a fine grid over `(0, k_max]`.
fn sign_changes(k0: f64, b: f64, k_max: f64, h: f64) -> usize {
    let n = (k_max / h) as usize;
    let g = |k: f64| r_hat(k, b, k0) / (k - k0);
    let mut last = g(h * 0.5);
    let mut count = 0;
    for i in 1..=n {
        let k = h * (i as f64 + 0.5);
        let v = g(k);
        if (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count + 1
}

#[test]
fn r_hat_basics() {
    for b in [0.0, 0.1, 0.3, 2.0] {
        assert_eq!(r_hat(2.0, b, 2.0), 0.0);
    }
    let w = omega(2.0, 0.0);
    assert!((w - 1.38854).abs() < 1e-5);
    // for b = 0 the tail is √k − √(k−2) − ω(2) up to e^{-2k}
    let tail = |k: f64| k.sqrt() - (k - 2.0).sqrt() - w;
    assert!((r_hat(40.0, 0.0, 2.0) - tail(40.0)).abs() < 1e-10);
    let gaps: Vec<f64> = [40.0, 1e4, 1e8].iter().map(|&k| (r_hat(k, 0.0, 2.0) + w).abs()).collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]));
    assert!(gaps[2] < 2e-4);
}

#[test]
fn r_general_examples() {
    for b in [0.0, 0.1, 0.5] {
        assert_eq!(r_general(-1, -1, 2.0, 2.0, 0.0, b).norm(), 0.0);
        assert_eq!(r_general(1, -1, 0.0, 2.0, -2.0, b).norm(), 0.0);
    }
    let v = r_general(1, 1, 1.0, 1.0, 1.0, 0.0);
    assert_eq!(v.re, 0.0);
    assert!((v.im - omega(1.0, 0.0)).abs() < 1e-15);
}

#[test]
fn zeros_by_regime() {
    let r = find_zeros(2.0, 1.0 / 3.0, 60.0).unwrap();
    assert_eq!(r.zeros, vec![2.0]);
    assert_eq!(r.classification, Classification::OnlyK0);

    let r = find_zeros(2.0, 0.2, 60.0).unwrap();
    assert_eq!(r.zeros.len(), 2);
    let k1 = r.k1.unwrap();
    assert!(k1 > 2.0);
    assert!(r_hat(k1, 0.2, 2.0).abs() < 1e-9);
    assert_eq!(r.classification, Classification::TwoZeros);

    let r = find_zeros(2.0, 0.0, 120.0).unwrap();
    assert_eq!(r.zeros, vec![2.0]);
}

#[test]
fn tail_not_settled() {
    // k₁(0.005) ≈ 46 lies beyond k_max = 20
    assert!(matches!(find_zeros(2.0, 0.005, 20.0), Err(ResonanceError::TailNotSettled { .. })));
    assert!(find_zeros(2.0, 0.1, 1.5).is_err());
}

#[test]
fn zero_finder_grid_robust() {
    for b in [0.005, 0.1, 0.2, 0.23, 1.0 / 4.25] {
        let a = find_zeros_with(2.0, b, 60.0, &ScanOptions { step: 0.01, ..Default::default() }).unwrap();
        let c = find_zeros_with(2.0, b, 60.0, &ScanOptions { step: 0.005, ..Default::default() }).unwrap();
        assert_eq!(a.zeros.len(), c.zeros.len(), "b = {b}");
        for (x, y) in a.zeros.iter().zip(&c.zeros) {
            assert!((x - y).abs() <= 1e-9, "b = {b}: {x} vs {y}");
        }
    }
}

#[test]
fn critical_bonds_at_two() {
    let c = critical_bonds(2.0).unwrap();
    assert!((c.b1 - 0.2396825654).abs() < 1e-6, "b1 = {}", c.b1);
    assert!((c.b0 - 0.2240838469).abs() < 1e-6, "b0 = {}", c.b0);
    let mid = 0.5 * (c.b0 + c.b1);
    assert!(sign_changes(2.0, mid, 60.0, 1e-3) >= 3);
    assert!(find_zeros(2.0, mid, 60.0).unwrap().positive_zero_count() >= 2);
}

#[test]
fn critical_bonds_ordered() {
    for k0 in [0.5, 1.0, 2.0, 5.0] {
        let c = critical_bonds(k0).unwrap();
        assert!(0.0 < c.b0 && c.b0 < c.b1 && c.b1 < 1.0 / 3.0, "k0 = {k0}: {c:?}");
    }
}

#[test]
fn zero_counts_match_sign_scan() {
    // below b0, between b0 and b1, above b1
    for (b, n) in [(0.2, 2), (1.0 / 4.25, 3), (0.28, 1), (0.01, 2)] {
        let r = find_zeros(2.0, b, default_k_max(2.0, b)).unwrap();
        assert_eq!(r.positive_zero_count(), n, "b = {b}");
        assert_eq!(sign_changes(2.0, b, default_k_max(2.0, b), 1e-3), n, "b = {b}");
    }
}

#[test]
fn k1_asymptote_and_monotonicity() {
    let k1 = k1_of_b(2.0, 1.0 / 200.0).unwrap();
    let s = k1 * (1.0 / 200.0) * 9.0 * 2.0 / (4.0 * 2.0f64.tanh());
    assert!((0.85..=1.15).contains(&s), "{s}");

    let ks: Vec<f64> = [0.01, 0.05, 0.1, 0.2].iter().map(|&b| k1_of_b(2.0, b).unwrap()).collect();
    assert!(ks.windows(2).all(|w| w[0] > w[1]), "{ks:?}");

    let k = k1_of_b(2.0, 0.1).unwrap();
    assert!(r_hat(k, 0.1, 2.0).abs() < 1e-9);
    // independent bracket on [3, 10]
    let oracle = bisect(|x| r_hat(x, 0.1, 2.0), 3.0, 10.0);
    assert!((k - oracle).abs() < 1e-9);
}

#[test]
fn k1_domain() {
    assert!(matches!(k1_of_b(2.0, 0.0), Err(ResonanceError::OutsideDomain { .. })));
    assert!(matches!(k1_of_b(2.0, 0.23), Err(ResonanceError::OutsideDomain { .. })));
}

#[test]
fn inflection() {
    let p = inflection_points(0.1).unwrap();
    assert!(omega_derivs(p.k3, 0.1)[2].abs() < 1e-9);
    assert!(omega_derivs(p.k4, 0.1)[3].abs() < 1e-9);
    let k3s: Vec<f64> = [0.05, 0.1, 0.2, 0.3].iter().map(|&b| inflection_points(b).unwrap().k3).collect();
    assert!(k3s.windows(2).all(|w| w[0] > w[1]), "{k3s:?}");
    for b in [0.01, 0.05, 0.1, 0.2, 0.3, 0.33] {
        let p = inflection_points(b).unwrap();
        assert!(p.k4 > p.k3);
    }
    assert!(inflection_points(1.0 / 3.0).is_err());
    assert!(inflection_points(0.5).is_err());
}

#[test]
fn nonresonance() {
    assert!(nonresonance_check(2.0, 0.0, 6, 1e-6).ok);
    assert!(nonresonance_check(2.0, 10.0, 6, 1e-6).ok);
    // b where ω''(2, b) = 0
    let b = bisect(|b| omega_derivs(2.0, b)[2], 0.0, 1.0 / 3.0);
    let r = nonresonance_check(2.0, b, 6, 1e-6);
    assert!(!r.ok);
    assert!(r.reasons.iter().any(|s| s.starts_with("nrb3")));
}

#[test]
fn stability_examples() {
    let s = stability(2.0, 0.5).unwrap();
    assert!(s.stable && s.resonances.is_empty() && s.ratio.is_none());

    let s = stability(2.0, 1.0 / 200.0).unwrap();
    assert!(s.stable);
    assert!(s.resonances[0].0 > 2.0);

    for b in [0.01, 0.05, 0.1] {
        let s = stability(2.0, b).unwrap();
        assert!(s.characterization_agrees, "b = {b}: {s:?}");
    }
}

#[test]
fn stability_ratio_values() {
    for (b, ratio) in [(0.005, -1.11306), (0.05, -2.10794), (0.1, -3.45506), (0.2, -11.2728)] {
        let k1 = k1_of_b(2.0, b).unwrap();
        let r = stability_ratio(2.0, k1, b).unwrap();
        assert!((r - ratio).abs() < 1e-4 * ratio.abs(), "b = {b}: {r}");
    }
}

proptest! {
    #[test]
    fn mirror_symmetry(kappa in 0.0f64..30.0, b in 0.0f64..1.0, k0 in 0.2f64..6.0) {
        let a = r_hat(0.5 * k0 + kappa, b, k0);
        let c = r_hat(0.5 * k0 - kappa, b, k0);
        prop_assert!((a - c).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn r_general_imaginary(j1 in prop::sample::select(vec![-1, 1]), j2 in prop::sample::select(vec![-1, 1]),
                           k in -10.0f64..10.0, l in -10.0f64..10.0, b in 0.0f64..1.0) {
        let v = r_general(j1, j2, k, l, k - l, b);
        prop_assert_eq!(v.re, 0.0);
    }

    #[test]
    fn no_extra_zeros_for_plus_branches(k in -20.0f64..20.0, b in 0.0f64..1.0) {
        // r̂_{1,-1}(k, k0, k - k0) vanishes only at k = 0
        prop_assume!(k.abs() > 1e-3);
        prop_assert!(r_general(1, -1, k, 2.0, k - 2.0, b).norm() > 0.0);
    }
}
