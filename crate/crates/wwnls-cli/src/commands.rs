use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use wwnls::dispersion::{omega_derivs, sigma};
use wwnls::kernels::{n_hat, q_total, KernelError, KernelParams};
use wwnls::nls::{self, EnvelopeField, NLSCoeffs, NlsError};
use wwnls::resonance::{self, r_hat, ResonanceError};
use wwnls::spectral_core::{Grid1D, SpectralField};
use wwnls::twi::{self, TWICoeffs, TWIState, TwiError};
use wwnls::wavepacket::WavePacket;
use wwnls::wwsim::{
    self, consistency_residual, error_norm, gaussian_envelope, ErrorScanOptions, Horizon, Model, PacketSpec,
    SimConfig, SimError, SimState,
};

use crate::io::{merge, persist, Format};
use crate::*;

/// Reference Bond numbers at `k₀ = 2`, from b > b₁ down to b = 0, including both critical values.
pub const PANEL_B: [f64; 9] =
    [1.0 / 3.0, 1.0 / 3.5, 1.0 / 4.15, 0.2396825654, 1.0 / 4.25, 0.2240838469, 1.0 / 5.0, 1.0 / 200.0, 0.0];

/// Maps library errors onto the exit-code classes.
trait Classify {
    fn is_config(&self) -> bool;
}

impl Classify for ResonanceError {
    fn is_config(&self) -> bool {
        matches!(self, ResonanceError::BadInput(_) | ResonanceError::OutsideDomain { .. })
    }
}

impl Classify for KernelError {
    fn is_config(&self) -> bool {
        match self {
            KernelError::BadRequest(_) => true,
            KernelError::Resonance(e) => e.is_config(),
            _ => false,
        }
    }
}

impl Classify for TwiError {
    fn is_config(&self) -> bool {
        matches!(self, TwiError::BadEll(_) | TwiError::BadStep(_))
    }
}

impl Classify for NlsError {
    fn is_config(&self) -> bool {
        matches!(self, NlsError::BadInput(_))
    }
}

impl Classify for SimError {
    fn is_config(&self) -> bool {
        match self {
            SimError::BadConfig { .. } => true,
            SimError::Nls(e) => e.is_config(),
            SimError::Kernel(e) => e.is_config(),
            _ => false,
        }
    }
}

fn lift<E: Classify + std::fmt::Display>(e: E) -> CliError {
    if e.is_config() {
        CliError::Config(e.to_string())
    } else {
        CliError::Numeric(e.to_string())
    }
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required --{flag}")))
}

fn check(ok: bool, flag: &str, v: impl std::fmt::Display, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("--{flag} = {v}: {what}")))
    }
}

fn check_k0(k0: f64) -> Result<(), CliError> {
    check(k0.is_finite() && k0 > 0.0, "k0", k0, "must be positive")
}

fn check_b(b: f64) -> Result<(), CliError> {
    check(b.is_finite() && b >= 0.0, "b", b, "must be nonnegative")
}

fn check_eps(eps: f64) -> Result<(), CliError> {
    check(eps > 0.0 && eps < 1.0, "eps", eps, "must lie in (0,1)")
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let h = if n > 1 { (b - a) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| a + i as f64 * h)
}

/// Writes a numeric table as CSV, or as a JSON array of row objects.
fn table(ctx: &Ctx, stem: &str, header: &[&str], rows: Vec<Vec<f64>>) -> Result<(), CliError> {
    match ctx.out.format {
        Format::Json => {
            let v: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| header.iter().zip(r).map(|(h, x)| (h.to_string(), json!(x))).collect())
                .collect();
            ctx.out.json(&format!("{stem}.json"), &v)
        }
        _ => ctx.out.csv(&format!("{stem}.csv"), header, rows),
    }
}

fn finish<T: Serialize>(ctx: &Ctx, command: &str, params: &T, t0: Instant, extra: serde_json::Value) -> Result<(), CliError> {
    persist(&ctx.out, command, params, t0.elapsed().as_secs_f64(), extra)
}

fn plot_panels(ctx: &Ctx, k0: f64) -> Result<(), CliError> {
    for (i, &b) in PANEL_B.iter().enumerate() {
        let rows = linspace(0.0, 10.0, 1001).map(|k| vec![k, r_hat(k, b, k0)]).collect::<Vec<_>>();
        ctx.out.csv(&format!("resonance_panel{}.csv", i + 1), &["k", "r_hat"], rows)?;
    }
    Ok(())
}

pub fn dispersion(ctx: &Ctx, a: &DispersionArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let b = a.b.unwrap_or(0.0);
    check_b(b)?;
    let (k_min, k_max, n) = (a.k_min.unwrap_or(0.0), a.k_max.unwrap_or(10.0), a.n.unwrap_or(201));
    check(k_max >= k_min, "k-max", k_max, "must not be below --k-min")?;
    check(n >= 1, "n", n, "must be at least 1")?;
    let rows = linspace(k_min, k_max, n)
        .map(|k| {
            let [w, d1, d2, d3] = omega_derivs(k, b);
            vec![k, w, d1, d2, d3, sigma(k, b)]
        })
        .collect();
    table(ctx, "dispersion", &["k", "omega", "d1", "d2", "d3", "sigma"], rows)?;
    finish(ctx, "dispersion", &a, t0, json!({}))
}

pub fn resonance_scan(ctx: &Ctx, a: &ScanArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let k0 = required(a.k0, "k0")?;
    check_k0(k0)?;
    let bs = a.b.clone().unwrap_or_else(|| PANEL_B.to_vec());
    for &b in &bs {
        check_b(b)?;
    }
    let k_max = a.k_max.unwrap_or(60.0);
    let step = a.plot_step.unwrap_or(0.01);
    check(step > 0.0, "plot-step", step, "must be positive")?;
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for (i, &b) in bs.iter().enumerate() {
        let r = resonance::find_zeros(k0, b, k_max).map_err(lift)?;
        summary.push(vec![b, r.zeros.len() as f64, r.double_zeros.len() as f64, r.k1.unwrap_or(f64::NAN)]);
        let n = ((k_max / step).round() as usize).max(1);
        let curve = (0..=n).map(|j| {
            let k = j as f64 * k_max / n as f64;
            vec![k, r_hat(k, b, k0)]
        });
        ctx.out.csv(&format!("r_hat_{:02}.csv", i + 1), &["k", "r_hat"], curve)?;
        reports.push(r);
    }
    table(ctx, "zeros", &["b", "zeros", "double_zeros", "k1"], summary)?;
    ctx.out.json("resonance.json", &reports)?;
    if ctx.emit_plot_data {
        plot_panels(ctx, k0)?;
    }
    finish(ctx, "resonance scan", &a, t0, json!({}))
}

pub fn resonance_critical(ctx: &Ctx, a: &CriticalArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let k0 = required(a.k0, "k0")?;
    check_k0(k0)?;
    let cb = resonance::critical_bonds(k0).map_err(lift)?;
    println!("b0={:.10} b1={:.10}", cb.b0, cb.b1);
    ctx.out.json("critical.json", &cb)?;
    if ctx.emit_plot_data {
        plot_panels(ctx, k0)?;
    }
    finish(ctx, "resonance critical", &a, t0, json!({}))
}

pub fn resonance_stability(ctx: &Ctx, a: &StabilityArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let k0 = required(a.k0, "k0")?;
    check_k0(k0)?;
    let bs = a.b.clone().unwrap_or_else(|| vec![0.005, 0.05, 0.1, 0.2]);
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &b in &bs {
        check_b(b)?;
        let r = resonance::stability(k0, b).map_err(lift)?;
        for &(k1, ratio) in &r.resonances {
            rows.push(vec![b, k1, ratio, f64::from(u8::from(ratio < 0.0))]);
        }
        reports.push(r);
    }
    table(ctx, "stability", &["b", "k1", "ratio", "stable"], rows)?;
    ctx.out.json("stability.json", &reports)?;
    if ctx.emit_plot_data {
        plot_panels(ctx, k0)?;
    }
    finish(ctx, "resonance stability", &a, t0, json!({}))
}

const BLOCKS: [(i32, i32); 8] = [(-1, -1), (-1, 1), (1, -1), (1, 1), (-2, -2), (-2, 2), (2, -2), (2, 2)];

pub fn kernels_dump(ctx: &Ctx, a: &KernelsArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let k0 = required(a.k0, "k0")?;
    check_k0(k0)?;
    let b = a.b.unwrap_or(0.0);
    check_b(b)?;
    let eps = a.eps.unwrap_or(0.1);
    check_eps(eps)?;
    let (k_min, k_max) = (a.k_min.unwrap_or(-10.0), a.k_max.unwrap_or(10.0));
    check(k_max > k_min, "k-max", k_max, "must exceed --k-min")?;
    let n = a.n.unwrap_or(401);
    let seed = a.seed.unwrap_or(0);
    let p = KernelParams::new(k0, b, eps).map_err(lift)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q_rows = Vec::new();
    for _ in 0..a.random.unwrap_or(64) {
        let k: f64 = rng.gen_range(k_min..k_max);
        let m: f64 = rng.gen_range(k_min..k_max);
        for (j1, j2) in BLOCKS {
            let q = match q_total(j1, j2, k, m, b) {
                Ok(q) => q,
                Err(KernelError::Singular(_)) => C64::new(f64::NAN, f64::NAN),
                Err(e) => return Err(lift(e)),
            };
            q_rows.push(vec![j1 as f64, j2 as f64, k, m, q.re, q.im]);
        }
    }
    table(ctx, "q_hat", &["j1", "j2", "k", "m", "re", "im"], q_rows)?;

    let mut n_rows = Vec::new();
    let mut singular = 0usize;
    for k in linspace(k_min, k_max, n) {
        for (j1, j2) in BLOCKS {
            for ell in [-1, 1] {
                for j in 1..=j1.unsigned_abs() {
                    let v = match n_hat(j1, j2, ell, j, k, &p) {
                        Ok(v) => v,
                        Err(KernelError::NonRemovable { .. }) => {
                            singular += 1;
                            C64::new(f64::NAN, f64::NAN)
                        }
                        Err(e) => return Err(lift(e)),
                    };
                    n_rows.push(vec![j1 as f64, j2 as f64, ell as f64, j as f64, k, v.re, v.im]);
                }
            }
        }
    }
    table(ctx, "n_hat", &["j1", "j2", "ell", "j", "k", "re", "im"], n_rows)?;
    ctx.out.json("kernel_params.json", &p)?;
    finish(ctx, "kernels dump", &a, t0, json!({ "nonremovable_samples": singular }))
}

pub fn twi_run(ctx: &Ctx, a: &TwiArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let coeffs = match &a.synthetic {
        Some(s) => {
            check(s.len() == 3, "synthetic", format!("{s:?}"), "expects three values")?;
            let i = |x: f64| C64::new(0.0, x);
            TWICoeffs::synthetic(i(s[0]), i(s[1]), i(s[2]))
        }
        None => {
            let k0 = required(a.k0, "k0")?;
            check_k0(k0)?;
            let b = a.b.unwrap_or(0.1);
            check_b(b)?;
            let k1 = resonance::k1_of_b(k0, b).map_err(lift)?;
            twi::twi_coeffs(k0, k1, b, a.ell.unwrap_or(1)).map_err(lift)?
        }
    };
    let amps = a.amplitudes.clone().unwrap_or_else(|| vec![1.0, 0.01, 0.01]);
    check(amps.len() == 3, "amplitudes", format!("{amps:?}"), "expects three values")?;
    let s0 = TWIState::new(C64::new(amps[0], 0.0), C64::new(amps[1], 0.0), C64::new(amps[2], 0.0));
    let dt = a.dt.unwrap_or_else(|| twi::default_dt(&s0, &coeffs));
    let t_end = a.t_end.unwrap_or(50.0);
    let traj = twi::integrate(&s0, &coeffs, dt, t_end, a.stride.unwrap_or(100)).map_err(lift)?;
    let rows = traj
        .samples
        .iter()
        .map(|s| vec![s.tau, s.a0.norm(), s.a1.norm(), s.a2.norm(), s.e.unwrap_or(f64::NAN)])
        .collect();
    table(ctx, "twi", &["tau", "abs_a0", "abs_a1", "abs_a2", "e"], rows)?;
    let e0 = traj.samples[0].e;
    let drift = e0.and_then(|e0| traj.last().e.map(|e| (e - e0).abs()));
    let ratio = coeffs.ratio().ok();
    let metrics = json!({
        "coefficients": coeffs,
        "ratio": ratio,
        "nls_subspace_stable": coeffs.nls_subspace_stable().ok(),
        "blown_up": traj.blown_up,
        "e_drift": drift,
        "dt": dt,
    });
    ctx.out.json("metrics.json", &metrics)?;
    finish(ctx, "twi run", &a, t0, json!({}))
}

fn write_complex_snapshots(
    ctx: &Ctx,
    stem: &str,
    header: &[&str],
    x: &[f64],
    snaps: &[(f64, Vec<Vec<C64>>)],
    real_only: bool,
) -> Result<(), CliError> {
    match ctx.out.format {
        Format::Binary => {
            let recs: Vec<&[C64]> = snaps.iter().flat_map(|(_, f)| f.iter().map(Vec::as_slice)).collect();
            ctx.out.binary(&format!("{stem}.bin"), &recs)
        }
        _ => {
            let mut rows = Vec::new();
            for (t, fields) in snaps {
                for (i, &xi) in x.iter().enumerate() {
                    let mut r = vec![*t, xi];
                    for f in fields {
                        r.push(f[i].re);
                        if !real_only {
                            r.push(f[i].im);
                        }
                    }
                    rows.push(r);
                }
            }
            table(ctx, stem, header, rows)
        }
    }
}

pub fn nls_run(ctx: &Ctx, a: &NlsArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let coeffs = match (a.half_omega2, a.nu) {
        (Some(h), Some(nu)) => NLSCoeffs::user(h, nu),
        (None, None) => {
            let k0 = required(a.k0, "k0")?;
            check_k0(k0)?;
            let b = a.b.unwrap_or(0.0);
            check_b(b)?;
            nls::nls_coefficients(k0, b).map_err(lift)?
        }
        _ => return Err(CliError::Config("--nu and --half-omega2 must be given together".into())),
    };
    let n = a.n.unwrap_or(512);
    let len = a.length.unwrap_or(40.0);
    let grid = Grid1D::new(n, len).map_err(|e| CliError::Config(e.to_string()))?;
    let (amp, width) = (a.amplitude.unwrap_or(1.0), a.width.unwrap_or(2.0));
    let c = 0.5 * len;
    let a0 = EnvelopeField::from_fn(grid.clone(), |x| C64::new(amp * (-((x - c) / width).powi(2)).exp(), 0.0));
    let snaps = nls::solve(&a0, &coeffs, a.dtau.unwrap_or(1e-3), a.tau_end.unwrap_or(1.0), a.stride.unwrap_or(100))
        .map_err(lift)?;
    let mass0 = a0.mass();
    let mass_drift = snaps.iter().map(|s| (s.mass() - mass0).abs()).fold(0.0, f64::max);
    let x = grid.nodes();
    let data: Vec<(f64, Vec<Vec<C64>>)> = snaps.iter().map(|s| (s.tau, vec![s.values.clone()])).collect();
    write_complex_snapshots(ctx, "nls", &["tau", "xi", "re", "im"], &x, &data, false)?;
    ctx.out.json("metrics.json", &json!({ "coefficients": coeffs, "mass": mass0, "mass_drift": mass_drift }))?;
    finish(ctx, "nls run", &a, t0, json!({}))
}

const FIELD_HEADER: [&str; 6] = ["t", "alpha", "u_m1", "u_p1", "u_m2", "u_p2"];

fn field_values(grid: &Grid1D, u: &[SpectralField; 4]) -> Vec<Vec<C64>> {
    u.iter().map(|f| f.values(grid)).collect()
}

/// Builds the packet on the carrier grid of `SimConfig::for_packet`.
fn packet_setup(
    k0: f64,
    b: f64,
    eps: f64,
    amp: f64,
    width: f64,
    corrections: bool,
    tweak: impl FnOnce(&mut SimConfig),
) -> Result<(Model, WavePacket), CliError> {
    let mut cfg = SimConfig::for_packet(k0, b, eps);
    cfg.corrections = corrections;
    tweak(&mut cfg);
    let model = Model::new(cfg).map_err(lift)?;
    let env = gaussian_envelope(eps, model.grid(), 256, amp, width).map_err(lift)?;
    let nls = nls::nls_coefficients(k0, b).map_err(lift)?;
    let packet = WavePacket::new(model.params(), eps, env, nls, corrections).map_err(|e| lift(SimError::from(e)))?;
    Ok((model, packet))
}

pub fn wavepacket_build(ctx: &Ctx, a: &PacketArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let k0 = required(a.k0, "k0")?;
    check_k0(k0)?;
    let (b, eps) = (a.b.unwrap_or(0.0), a.eps.unwrap_or(0.1));
    check_b(b)?;
    check_eps(eps)?;
    let corr = a.corrections.unwrap_or(true);
    let (model, mut packet) =
        packet_setup(k0, b, eps, a.amplitude.unwrap_or(0.5), a.width.unwrap_or(2.0), corr, |_| {})?;
    if let Some(d) = a.truncate {
        check(d > 0.0, "truncate", d, "must be positive")?;
        packet = packet.fourier_truncate(d);
    }
    let t = a.t.unwrap_or(0.0);
    let u = packet.build(model.backend(), t).map_err(|e| lift(SimError::from(e)))?;
    let grid = model.grid();
    write_complex_snapshots(ctx, "wavepacket", &FIELD_HEADER, &grid.nodes(), &[(t, field_values(grid, &u))], true)?;
    let norms: Vec<f64> = u.iter().map(|f| f.l2_norm(grid)).collect();
    ctx.out.json(
        "metrics.json",
        &json!({
            "n": grid.n_points(),
            "length": grid.length(),
            "l2_norms": norms,
            "modulation": packet.modulation,
            "nls": packet.nls,
        }),
    )?;
    finish(ctx, "wavepacket build", &a, t0, json!({}))
}

pub fn sim_run(ctx: &Ctx, a: &SimArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let k0 = required(a.k0, "k0")?;
    check_k0(k0)?;
    let (b, eps) = (a.b.unwrap_or(0.0), a.eps.unwrap_or(0.1));
    check_b(b)?;
    check_eps(eps)?;
    let dt = a.dt.unwrap_or(0.05);
    let t_end = a.t_end.unwrap_or(1.0);
    let dealias = a.dealias.unwrap_or(true);
    let (model, packet) = packet_setup(
        k0,
        b,
        eps,
        a.amplitude.unwrap_or(0.1),
        a.width.unwrap_or(2.0),
        a.corrections.unwrap_or(true),
        |c| {
            c.dt = dt;
            c.t_end = t_end;
            c.dealias = dealias;
        },
    )?;
    let grid = model.grid().clone();
    let s0 = model.packet_state(&packet, 0.0).map_err(lift)?;
    let every = a.snapshot_every.unwrap_or(usize::MAX).max(1);
    let mut snaps = vec![(0.0, field_values(&grid, &s0.u))];
    let mut steps = 0usize;
    let end = model
        .run(&s0, t_end, |i, s: &SimState| {
            steps = i;
            if i % every == 0 {
                snaps.push((s.t, field_values(&grid, &s.u)));
            }
        })
        .map_err(lift)?;
    if snaps.last().map(|s| s.0) != Some(end.t) {
        snaps.push((end.t, field_values(&grid, &end.u)));
    }
    write_complex_snapshots(ctx, "snapshots", &FIELD_HEADER, &grid.nodes(), &snaps, true)?;

    let tau = eps * eps * end.t;
    let env = nls::solve(&packet.envelope, &packet.nls, 1e-3_f64.min(tau.max(1e-12)), tau, usize::MAX)
        .map_err(lift)?;
    let env = env.last().cloned().expect("solve returns the initial state");
    let approx = packet.with_envelope(env).build(model.backend(), end.t).map_err(|e| lift(SimError::from(e)))?;
    let diff: [SpectralField; 4] = std::array::from_fn(|c| end.u[c].sub(&approx[c]));
    let metrics = json!({
        "t_end": end.t,
        "steps": steps,
        "n": grid.n_points(),
        "length": grid.length(),
        "l2_norms": end.u.iter().map(|f| f.l2_norm(&grid)).collect::<Vec<_>>(),
        "solution_norm": error_norm(&grid, &end.u),
        "approximation_error": error_norm(&grid, &diff),
        "approximation_error_l2": diff.iter().map(|f| f.l2_norm_sq(&grid)).sum::<f64>().sqrt(),
        "consistency_residual": consistency_residual(&model, &end),
        "hermitian_defect": end.u.iter().map(SpectralField::hermitian_defect).fold(0.0, f64::max),
    });
    ctx.out.json("metrics.json", &metrics)?;
    finish(ctx, "sim run", &a, t0, json!({}))
}

pub fn error_scan(ctx: &Ctx, a: &ErrorScanArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let k0 = required(a.k0, "k0")?;
    check_k0(k0)?;
    let bs = a.b.clone().unwrap_or_else(|| vec![0.0, 0.01, 0.05]);
    let eps = a.eps.clone().unwrap_or_else(|| vec![0.15, 0.10, 0.07]);
    bs.iter().try_for_each(|&b| check_b(b))?;
    eps.iter().try_for_each(|&e| check_eps(e))?;
    let mut opts = ErrorScanOptions::new(k0, 0.0);
    opts.tau0 = a.tau0.unwrap_or(opts.tau0);
    opts.dt = a.dt.unwrap_or(opts.dt);
    opts.packet.amplitude = a.amplitude.unwrap_or(opts.packet.amplitude);
    opts.horizon = match a.horizon.as_deref() {
        None | Some("eps2") => Horizon::Tau0OverEps2,
        Some("eps") => Horizon::Tau0OverEps,
        Some(h) => return Err(CliError::Config(format!("--horizon = {h}: expected eps or eps2"))),
    };
    check(opts.dt > 0.0, "dt", opts.dt, "must be positive")?;
    let scan = wwsim::error_scan(&opts, &bs, &eps).map_err(lift)?;
    let rows = scan
        .runs
        .iter()
        .map(|r| {
            vec![r.b, r.eps, r.n as f64, r.steps as f64, r.t_end, r.error, r.solution_norm, f64::from(u8::from(r.flagged))]
        })
        .collect();
    table(ctx, "error_scan", &["b", "eps", "n", "steps", "t_end", "error", "solution_norm", "flagged"], rows)?;
    ctx.out.json("metrics.json", &scan)?;
    finish(ctx, "sim error-scan", &a, t0, json!({}))
}

pub fn residual_scan(ctx: &Ctx, a: &ResidualScanArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let a = merge(a, ctx.config.as_deref())?;
    let k0 = required(a.k0, "k0")?;
    check_k0(k0)?;
    let b = a.b.unwrap_or(0.0);
    check_b(b)?;
    let eps = a.eps.clone().unwrap_or_else(|| vec![0.2, 0.1, 0.05]);
    eps.iter().try_for_each(|&e| check_eps(e))?;
    let spec = PacketSpec::new(k0, b, a.amplitude.unwrap_or(0.1));
    let scan = wwsim::residual_scan(&spec, &eps).map_err(lift)?;
    let rows = scan
        .rows
        .iter()
        .map(|r| {
            let [a, b, c, d] = r.components;
            vec![r.eps, f64::from(u8::from(r.corrections)), a, b, c, d, r.total]
        })
        .collect();
    table(ctx, "residual_scan", &["eps", "corrections", "r_m1", "r_p1", "r_m2", "r_p2", "total"], rows)?;
    ctx.out.json("metrics.json", &scan)?;
    finish(ctx, "sim residual-scan", &a, t0, json!({}))
}
