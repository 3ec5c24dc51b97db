use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wwnls::dispersion::{omega, sigma};
use wwnls::kernels::{pair_symbol, KernelParams, KernelTable};
use wwnls::nls::SplitStep;
use wwnls::spectral_core::{Grid1D, SpectralField};
use wwnls::wwsim::*;
use wwnls::C64;

fn small_config(nonlinear: bool) -> SimConfig {
    SimConfig {
        eps: 0.1,
        k0: 2.0,
        b: 0.0,
        n: 128,
        length: 16.0 * PI,
        dt: 0.01,
        t_end: 1.0,
        integrator: Integrator::Ifrk4,
        dealias: true,
        corrections: false,
        nonlinear,
    }
}

/// Consistent small data: `u±2 = ∂²u±1` from random low modes.
fn random_state(g: &Grid1D, seed: u64, amp: f64) -> SimState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.n_points();
    let mut u: [Vec<C64>; 4] = std::array::from_fn(|_| vec![C64::default(); n]);
    for c in 0..2 {
        for j in 1..=20i64 {
            let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp / j as f64;
            u[c][g.index_of_mode(j).unwrap()] = v;
            u[c][g.index_of_mode(-j).unwrap()] = v.conj();
        }
    }
    let ks = g.wavenumbers();
    for c in 0..2 {
        u[c + 2] = u[c].iter().zip(&ks).map(|(v, k)| -v * k * k).collect();
    }
    SimState { u: u.map(|c| SpectralField::from_coeffs(c, true)), t: 0.0 }
}

fn dist(g: &Grid1D, a: &SimState, b: &SimState) -> f64 {
    let d: [SpectralField; 4] = std::array::from_fn(|c| a.u[c].sub(&b.u[c]));
    error_norm(g, &d)
}

#[test]
fn config_validation() {
    let mut c = small_config(true);
    assert!(c.validate().is_ok());
    c.dt = 0.0;
    assert!(matches!(Model::new(c.clone()), Err(SimError::BadConfig { field: "dt", .. })));
    c.dt = 0.01;
    c.n = 100;
    assert!(c.validate().is_err());
    c.n = 128;
    c.length = 17.0;
    assert!(matches!(c.validate(), Err(SimError::BadConfig { field: "k0", .. })));
}

#[test]
fn zero_state_zero_rhs() {
    let m = Model::new(small_config(true)).unwrap();
    let z = SimState::zeros(128);
    for f in m.rhs(&z).unwrap() {
        assert_eq!(f.max_abs(), 0.0);
    }
}

#[test]
fn single_carrier_mode() {
    let cfg = SimConfig { n: 64, length: 2.0 * PI, b: 0.1, ..small_config(true) };
    let m = Model::new(cfg).unwrap();
    let g = m.grid().clone();
    let mut s = SimState::zeros(64);
    s.u[0] = SpectralField::from_fn(&g, |x| (2.0 * x).cos());
    let out = m.rhs(&s).unwrap();
    let e1 = [C64::new(1.0, 0.0), C64::default(), C64::default(), C64::default()];
    // B(u,u) at 2k₀ for u = ½(e^{ik₀α} + c.c.) is ⅛ of the symmetric pair symbol
    let want = pair_symbol(2.0, e1, 2.0, e1, 0.1);
    let (ip, im) = (g.index_of_mode(4).unwrap(), g.index_of_mode(-4).unwrap());
    for c in 0..4 {
        let co = out[c].coeffs();
        assert_eq!(co[0], C64::default());
        assert!((co[ip] - want[c] / 8.0).norm() <= 1e-13 * (1.0 + want[c].norm()), "c={c}");
        assert!((co[im] - (want[c] / 8.0).conj()).norm() <= 1e-13 * (1.0 + want[c].norm()));
        for (i, v) in co.iter().enumerate() {
            if i != ip && i != im {
                assert!(v.norm() <= 1e-14, "c={c} mode {}: {v}", g.mode(i));
            }
        }
    }
}

#[test]
fn linear_exactness() {
    let m = Model::new(SimConfig { dt: 0.05, ..small_config(false) }).unwrap();
    let g = m.grid().clone();
    let s0 = random_state(&g, 5, 1.0);
    let s = m.run(&s0, 10.0, |_, _| {}).unwrap();
    assert!((s.t - 10.0).abs() < 1e-12);
    let ks = g.wavenumbers();
    for c in 0..4 {
        let sign = if c % 2 == 0 { -1.0 } else { 1.0 };
        for ((a, b), &k) in s0.u[c].coeffs().iter().zip(s.u[c].coeffs()).zip(&ks) {
            let want = a * C64::from_polar(1.0, sign * omega(k, 0.0) * 10.0);
            assert!((b - want).norm() <= 1e-10, "c={c} k={k}");
        }
    }
}

#[test]
fn mode_zero_of_nonlinearity_vanishes() {
    let m = Model::new(small_config(true)).unwrap();
    let g = m.grid().clone();
    let mut s = random_state(&g, 6, 0.05);
    for _ in 0..50 {
        for f in m.rhs(&s).unwrap() {
            assert_eq!(f.coeffs()[0], C64::default());
        }
        s = m.step(&s, 0.01);
    }
}

#[test]
fn reality_preserved_over_many_steps() {
    let m = Model::new(small_config(true)).unwrap();
    let g = m.grid().clone();
    let s0 = random_state(&g, 7, 0.02);
    let s = m.run(&s0, 100.0, |_, _| {}).unwrap();
    for f in &s.u {
        let im = f.values(&g).iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        assert!(im <= 1e-11, "{im}");
        assert!(f.hermitian_defect() <= 1e-11);
    }
}

#[test]
fn dt_self_convergence() {
    let (m, p) = PacketSpec::new(2.0, 0.0, 0.1).model_and_packet(0.2, true).unwrap();
    let s0 = m.packet_state(&p, 0.0).unwrap();
    let run = |dt: f64| {
        let steps = (4.0 / dt).round() as usize;
        (0..steps).fold(s0.clone(), |s, _| m.step(&s, dt))
    };
    let reference = run(0.0125);
    let (a, b) = (dist(m.grid(), &run(0.1), &reference), dist(m.grid(), &run(0.05), &reference));
    let order = (a / b).log2();
    assert!((order - 4.0).abs() <= 0.3, "{a} {b} order {order}");
}

#[test]
fn quadratic_scaling() {
    let m = Model::new(small_config(true)).unwrap();
    let g = m.grid().clone();
    let s = random_state(&g, 8, 0.1);
    let a = 2.5;
    let sa = SimState { u: s.u.clone().map(|f| f.scaled(C64::new(a, 0.0))), t: 0.0 };
    let (r1, r2) = (m.rhs(&s).unwrap(), m.rhs(&sa).unwrap());
    for (x, y) in r1.iter().zip(&r2) {
        assert!(x.scaled(C64::new(a * a, 0.0)).sub(y).max_abs() <= 1e-12 * (1.0 + y.max_abs()));
    }
}

#[test]
fn residual_of_zero_packet_vanishes() {
    let (m, p) = PacketSpec::new(2.0, 0.0, 0.0).model_and_packet(0.2, true).unwrap();
    assert_eq!(residual(&m, &p, 0.0).unwrap(), [0.0; 4]);
}

#[test]
fn residual_orders() {
    for amp in [0.1, 0.5] {
        let scan = residual_scan(&PacketSpec::new(2.0, 0.0, amp), &[0.2, 0.1, 0.05]).unwrap();
        assert!((scan.order_leading - 1.5).abs() <= 0.3, "amp {amp}: {scan:?}");
        assert!(scan.order_corrected >= 2.5, "amp {amp}: {scan:?}");
    }
}

fn l2_size(m: &Model, s: &SimState) -> f64 {
    s.u.iter().map(|f| f.l2_norm_sq(m.grid())).sum::<f64>().sqrt()
}

fn defect(m: &Model, s: &SimState) -> f64 {
    let [a, b] = consistency_residual(m, s);
    a.hypot(b)
}

#[test]
fn consistency_defect_scaling() {
    assert_eq!(consistency_residual(&Model::new(small_config(true)).unwrap(), &SimState::zeros(128)), [0.0; 2]);
    let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&eps| {
            let (m, p) = PacketSpec::new(2.0, 0.0, 0.5).model_and_packet(eps, true).unwrap();
            let s = m.packet_state(&p, 0.0).unwrap();
            (eps, defect(&m, &s) / l2_size(&m, &s))
        })
        .collect();
    let order = (pts[0].1 / pts[2].1).ln() / (pts[0].0 / pts[2].0).ln();
    assert!((1.7..=2.3).contains(&order), "{pts:?} {order}");
}

#[test]
fn consistency_defect_bounded_in_time() {
    for eps in [0.2, 0.1] {
        let (m, p) = PacketSpec::new(2.0, 0.0, 0.1).model_and_packet(eps, true).unwrap();
        let s0 = m.packet_state(&p, 0.0).unwrap();
        let d0 = defect(&m, &s0);
        let mut worst: f64 = 0.0;
        m.run(&s0, 1.0 / eps, |_, s| worst = worst.max(defect(&m, s))).unwrap();
        assert!(worst <= 3.0 * d0, "eps {eps}: {d0} -> {worst}");
    }
}

#[test]
fn diag_transform_examples() {
    let g = Grid1D::new(32, 2.0 * PI).unwrap();
    let b = 0.2;
    let cos = SpectralField::from_fn(&g, f64::cos);
    let zero = SpectralField::zeros(32, true);
    let u = diag_transform(&g, b, &[cos.clone(), zero.clone(), zero.clone(), zero.clone()], Direction::Forward);
    let half_sigma = 0.5 * sigma(1.0, b);
    assert!(u[0].sub(&cos.scaled(C64::new(half_sigma, 0.0))).max_abs() <= 1e-15);
    assert!(u[1].add(&cos.scaled(C64::new(half_sigma, 0.0))).max_abs() <= 1e-15);
    let u = diag_transform(&g, b, &[zero.clone(), cos.clone(), zero.clone(), zero], Direction::Forward);
    for c in 0..2 {
        assert!(u[c].sub(&cos.scaled(C64::new(0.5, 0.0))).max_abs() <= 1e-15);
    }
}

#[test]
fn energy_diagnostic_zero_at_packet() {
    let (m, p) = PacketSpec::new(2.0, 0.1, 0.1).model_and_packet(0.2, true).unwrap();
    let kt = KernelTable::new(KernelParams::new(2.0, 0.1, 0.2).unwrap(), m.grid());
    let s = m.packet_state(&p, 0.0).unwrap();
    let d = energy_diagnostic(&m, &s, &p, &kt, 2).unwrap();
    assert_eq!((d.value, d.plain), (0.0, 0.0));
}

/// Diagnostic along the comparison run on `t ∈ [0, 1/ε]`: `(value, plain)` pairs.
fn energy_series(eps: f64) -> Vec<(f64, f64)> {
    let (m, p) = PacketSpec::new(2.0, 0.0, 0.1).model_and_packet(eps, true).unwrap();
    let kt = KernelTable::new(KernelParams::new(2.0, 0.0, eps).unwrap(), m.grid());
    let dt = m.config.dt;
    let steps = (1.0 / (eps * dt)).round() as usize;
    let split = SplitStep::new(&p.envelope.grid, &p.nls, eps * eps * dt);
    let mut env = p.envelope.clone();
    let mut s = m.packet_state(&p, 0.0).unwrap();
    let mut out = Vec::new();
    for i in 1..=steps {
        s = m.step(&s, dt);
        split.step(&env.grid, &mut env.values);
        env.tau += eps * eps * dt;
        if i % (steps / 8) == 0 {
            let d = energy_diagnostic(&m, &s, &p.with_envelope(env.clone()), &kt, 2).unwrap();
            out.push((d.value, d.plain));
        }
    }
    out
}

#[test]
fn energy_diagnostic_equivalent_and_uniform() {
    let a = energy_series(0.2);
    let b = energy_series(0.1);
    let c_equiv = a.iter().chain(&b).map(|&(v, p)| (v / p).max(p / v)).fold(1.0, f64::max);
    assert!(a.iter().chain(&b).all(|&(v, _)| v > 0.0));
    assert!(c_equiv <= 2.0, "{c_equiv}");
    // the scaled error stays O(1) as ε decreases
    let sup = |s: &[(f64, f64)]| s.iter().map(|x| x.0).fold(0.0, f64::max);
    assert!(sup(&b) <= 2.0 * sup(&a), "{} {}", sup(&a), sup(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn diag_round_trip(seed in any::<u64>(), b in 0.0f64..1.0) {
        let g = Grid1D::new(64, 10.0).unwrap();
        let s = random_state(&g, seed, 1.0);
        let back = diag_transform(&g, b, &diag_transform(&g, b, &s.u, Direction::Forward), Direction::Inverse);
        for (x, y) in back.iter().zip(&s.u) {
            prop_assert!(x.sub(y).max_abs() <= 1e-12 * (1.0 + y.max_abs()));
        }
    }
}
