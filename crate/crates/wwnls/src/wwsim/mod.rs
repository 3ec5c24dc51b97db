//! Pseudo-spectral integration of the quadratic-truncated diagonalized
//! system, residuals of the modulated approximation, and the scan harnesses.

pub mod system;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::ModelParams;
use crate::kernels::{rho_hat, theta_inv_hat, KernelError, KernelTable};
use crate::nls::{nls_coefficients, EnvelopeField, NlsError, SplitStep};
use crate::spectral_core::{Grid1D, SpectralError, SpectralField, C64};
use crate::twi::slope;
use crate::wavepacket::{carrier_grid, PacketError, WavePacket};
use system::{linear_symbol, quadratic_terms, Backend, GridBackend, Sym};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid config field `{field}`: {msg}")]
    BadConfig { field: &'static str, msg: String },
    #[error("non-finite state at step {0}")]
    NotFinite(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Nls(#[from] NlsError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn bad(field: &'static str, msg: impl Into<String>) -> SimError {
    SimError::BadConfig { field, msg: msg.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Ifrk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub eps: f64,
    pub k0: f64,
    pub b: f64,
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub dealias: bool,
    pub corrections: bool,
    /// `false` integrates the linear part only.
    pub nonlinear: bool,
}

impl SimConfig {
    /// Carrier grid from [`carrier_grid`] with `Δα ≤ π/12`.
    pub fn for_packet(k0: f64, b: f64, eps: f64) -> Self {
        let g = carrier_grid(k0, eps, std::f64::consts::PI / 12.0);
        Self {
            eps,
            k0,
            b,
            n: g.n_points(),
            length: g.length(),
            dt: 0.05,
            t_end: 1.0,
            integrator: Integrator::Ifrk4,
            dealias: true,
            corrections: true,
            nonlinear: true,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let pos = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 { Ok(()) } else { Err(bad(field, format!("must be positive, got {v}"))) }
        };
        pos("dt", self.dt)?;
        pos("length", self.length)?;
        pos("k0", self.k0)?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(bad("eps", format!("must lie in (0,1), got {}", self.eps)));
        }
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(bad("b", format!("must be nonnegative, got {}", self.b)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(bad("t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(bad("n", format!("must be a power of two >= 4, got {}", self.n)));
        }
        let j = self.k0 * self.length / (2.0 * std::f64::consts::PI);
        if (j - j.round()).abs() > 1e-9 * j.max(1.0) {
            return Err(bad("k0", format!("k0·L/2π = {j} is not an integer")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    /// `(u₋₁, u₁, u₋₂, u₂)`.
    pub u: [SpectralField; 4],
    pub t: f64,
}

impl SimState {
    pub fn zeros(n: usize) -> Self {
        Self { u: std::array::from_fn(|_| SpectralField::zeros(n, true)), t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|f| f.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }
}

/// A configured model: grid, symbol tables and integrating factors.
pub struct Model {
    pub config: SimConfig,
    backend: GridBackend,
    lambda: [Vec<C64>; 4],
}

impl Model {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let grid = Grid1D::new(config.n, config.length)?;
        let ks = grid.wavenumbers();
        let ny = grid.nyquist_index();
        let lambda = std::array::from_fn(|c| {
            let mut v: Vec<C64> = ks.iter().map(|&k| linear_symbol(c, k, config.b)).collect();
            v[ny] = C64::new(0.0, 0.0);
            v
        });
        let backend = GridBackend::new(grid, config.b, config.dealias);
        Ok(Self { config, backend, lambda })
    }

    pub fn grid(&self) -> &Grid1D {
        self.backend.grid()
    }

    pub fn backend(&self) -> &GridBackend {
        &self.backend
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.config.k0, self.config.b).expect("validated")
    }

    fn nonlinear_raw(&self, u: &[Vec<C64>; 4]) -> [Vec<C64>; 4] {
        if !self.config.nonlinear {
            return std::array::from_fn(|_| vec![C64::new(0.0, 0.0); u[0].len()]);
        }
        let mut out = quadratic_terms(&self.backend, u);
        for f in out.iter_mut() {
            crate::spectral_core::hermitian_project(f);
        }
        out
    }

    /// Quadratic part of the right-hand side; the linear part `∓iω` is
    /// handled by the integrating factor.
    pub fn rhs(&self, s: &SimState) -> Result<[SpectralField; 4], SimError> {
        let u = s.u.clone().map(|f| f.into_coeffs());
        let out = self.nonlinear_raw(&u);
        if out.iter().any(|f| f.iter().any(|c| !(c.re.is_finite() && c.im.is_finite()))) {
            return Err(SimError::NotFinite(0));
        }
        Ok(out.map(|c| SpectralField::from_coeffs(c, true)))
    }

    /// Linear plus quadratic right-hand side.
    pub fn full_rhs(&self, s: &SimState) -> Result<[SpectralField; 4], SimError> {
        let nl = self.rhs(s)?;
        Ok(std::array::from_fn(|c| {
            let lin: Vec<C64> = s.u[c].coeffs().iter().zip(&self.lambda[c]).map(|(a, l)| a * l).collect();
            nl[c].add(&SpectralField::from_coeffs(lin, true))
        }))
    }

    /// One Lawson integrating-factor RK4 step.
    pub fn step(&self, s: &SimState, dt: f64) -> SimState {
        let eh: [Vec<C64>; 4] = std::array::from_fn(|c| self.lambda[c].iter().map(|l| (l * 0.5 * dt).exp()).collect());
        let u: [Vec<C64>; 4] = s.u.clone().map(|f| f.into_coeffs());
        let comb = |a: &[Vec<C64>; 4], f: &dyn Fn(usize, usize) -> C64| -> [Vec<C64>; 4] {
            std::array::from_fn(|c| (0..a[c].len()).map(|i| f(c, i)).collect())
        };
        let k1 = self.nonlinear_raw(&u);
        let a2 = comb(&u, &|c, i| eh[c][i] * (u[c][i] + 0.5 * dt * k1[c][i]));
        let k2 = self.nonlinear_raw(&a2);
        let a3 = comb(&u, &|c, i| eh[c][i] * u[c][i] + 0.5 * dt * k2[c][i]);
        let k3 = self.nonlinear_raw(&a3);
        let a4 = comb(&u, &|c, i| eh[c][i] * eh[c][i] * u[c][i] + dt * eh[c][i] * k3[c][i]);
        let k4 = self.nonlinear_raw(&a4);
        let new = comb(&u, &|c, i| {
            let (h, f) = (eh[c][i], eh[c][i] * eh[c][i]);
            f * u[c][i] + dt / 6.0 * (f * k1[c][i] + 2.0 * h * (k2[c][i] + k3[c][i]) + k4[c][i])
        });
        SimState { u: new.map(|c| SpectralField::from_coeffs(c, true)), t: s.t + dt }
    }

    /// Integrates to `t_end` with steps of at most `config.dt`, calling
    /// `observe` after every step.
    pub fn run(
        &self,
        s0: &SimState,
        t_end: f64,
        mut observe: impl FnMut(usize, &SimState),
    ) -> Result<SimState, SimError> {
        let span = t_end - s0.t;
        if span < 0.0 {
            return Err(bad("t_end", "before the initial time"));
        }
        let n = (span / self.config.dt).ceil() as usize;
        let dt = if n == 0 { 0.0 } else { span / n as f64 };
        let mut s = s0.clone();
        for i in 1..=n {
            s = self.step(&s, dt);
            if !s.is_finite() {
                return Err(SimError::NotFinite(i));
            }
            observe(i, &s);
        }
        Ok(s)
    }

    /// Initial data `εΨ(·, 0)` from a packet.
    pub fn packet_state(&self, packet: &WavePacket, t: f64) -> Result<SimState, SimError> {
        Ok(SimState { u: packet.build(&self.backend, t)?, t })
    }
}

/// L² norms per component of `rhs(εΨ) − ∂t(εΨ)` at time `t`.
pub fn residual(model: &Model, packet: &WavePacket, t: f64) -> Result<[f64; 4], SimError> {
    let (u, du) = packet.build_with_dt(model.backend(), t)?;
    let r = model.full_rhs(&SimState { u, t })?;
    Ok(std::array::from_fn(|c| r[c].sub(&du[c]).l2_norm(model.grid())))
}

/// Norms of the two consistency defects
/// `∂⁻¹σ⁻¹(u₋₂−u₂) − σ⁻¹∂(u₋₁−u₁)` and
/// `(u₋₂+u₂) − ∂²(u₋₁+u₁) + ∂(K₀(u₋₁+u₁)·σ⁻¹∂²(u₋₁−u₁))`.
pub fn consistency_residual(model: &Model, s: &SimState) -> [f64; 2] {
    let be = model.backend();
    let u: [Vec<C64>; 4] = s.u.clone().map(|f| f.into_coeffs());
    let d1 = be.sub(&u[0], &u[1]);
    let s1 = be.add(&u[0], &u[1]);
    let d2 = be.sub(&u[2], &u[3]);
    let s2 = be.add(&u[2], &u[3]);
    let a = be.apply(Sym::Dinv, &be.apply(Sym::SigmaInv, &d2));
    let b = be.apply(Sym::SigmaInv, &be.apply(Sym::Dx, &d1));
    let theta = be.sub(&a, &b);
    let dd1 = be.apply(Sym::Dx, &be.apply(Sym::Dx, &d1));
    let quad = be.apply(Sym::Dx, &be.mul(&be.apply(Sym::K0, &s1), &be.apply(Sym::SigmaInv, &dd1)));
    let delta = be.add(&be.sub(&s2, &be.apply(Sym::Dx, &be.apply(Sym::Dx, &s1))), &quad);
    let g = model.grid();
    [
        SpectralField::from_coeffs(theta, true).l2_norm(g),
        SpectralField::from_coeffs(delta, true).l2_norm(g),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `(y, v, κ, δ_αα) → (u₋₁, u₁, u₋₂, u₂)`
    Forward,
    Inverse,
}

/// `u∓₁ = ½(±σy + v)`, `u∓₂ = ½(±σκ + δ_αα)` and its inverse.
pub fn diag_transform(grid: &Grid1D, b: f64, f: &[SpectralField; 4], dir: Direction) -> [SpectralField; 4] {
    let ks = grid.wavenumbers();
    let sig: Vec<f64> = ks.iter().map(|&k| crate::dispersion::sigma(k, b)).collect();
    let mul = |v: &SpectralField, w: &dyn Fn(usize) -> f64| {
        let c = v.coeffs().iter().enumerate().map(|(i, c)| c * w(i)).collect();
        SpectralField::from_coeffs(c, v.is_real())
    };
    let half = C64::new(0.5, 0.0);
    match dir {
        Direction::Forward => {
            let sy = mul(&f[0], &|i| sig[i]);
            let sk = mul(&f[2], &|i| sig[i]);
            [
                sy.add(&f[1]).scaled(half),
                f[1].sub(&sy).scaled(half),
                sk.add(&f[3]).scaled(half),
                f[3].sub(&sk).scaled(half),
            ]
        }
        Direction::Inverse => [
            mul(&f[0].sub(&f[1]), &|i| 1.0 / sig[i]),
            f[0].add(&f[1]),
            mul(&f[2].sub(&f[3]), &|i| 1.0 / sig[i]),
            f[2].add(&f[3]),
        ],
    }
}

/// Error norm: L² on `u±1`, `H²` on `u±2`.
pub fn error_norm(grid: &Grid1D, d: &[SpectralField; 4]) -> f64 {
    let a = d[0].l2_norm_sq(grid) + d[1].l2_norm_sq(grid);
    let b = d[2].sobolev_norm(grid, 2.0).powi(2) + d[3].sobolev_norm(grid, 2.0).powi(2);
    (a + b).sqrt()
}

/// `E_{2,l}` for the scaled error `R = ε^{-5/2} ϑ⁻¹(u − εΨ)` of the `u±2`
/// block, with the normal-form correction built from `ψ_c = AE + c.c.`.
pub fn energy_diagnostic(
    model: &Model,
    s: &SimState,
    packet: &WavePacket,
    kernels: &KernelTable,
    l: u32,
) -> Result<EnergyDiagnostic, SimError> {
    let grid = model.grid();
    let be = model.backend();
    let p = kernels.params();
    let eps = packet.eps;
    let approx = packet.build(be, s.t)?;
    let ks = grid.wavenumbers();
    let ny = grid.nyquist_index();
    let scale = eps.powf(-2.5);
    let r: Vec<Vec<C64>> = [2usize, 3]
        .iter()
        .map(|&c| {
            s.u[c]
                .coeffs()
                .iter()
                .zip(approx[c].coeffs())
                .zip(&ks)
                .map(|((a, b), &k)| (a - b) * scale * theta_inv_hat(k, p.eps, p.delta0))
                .collect()
        })
        .collect();

    // ψ_c split into its positive (ℓ = 1) and negative (ℓ = −1) frequency parts
    let lead = packet.with_envelope(packet.envelope.clone());
    let lead = WavePacket { corrections: false, ..lead };
    let psi = lead.build(be, s.t)?[0].scaled(C64::new(1.0 / eps, 0.0));
    let phi: [Vec<C64>; 2] = std::array::from_fn(|i| {
        let c: Vec<C64> = psi
            .coeffs()
            .iter()
            .zip(&ks)
            .map(|(c, &k)| if (k > 0.0) == (i == 0) && k != 0.0 { *c } else { C64::new(0.0, 0.0) })
            .collect();
        grid.inverse(&c)
    });

    let dl = |c: &[C64]| -> Vec<C64> {
        c.iter()
            .enumerate()
            .map(|(i, v)| if i == ny && l % 2 == 1 { C64::new(0.0, 0.0) } else { v * C64::new(0.0, ks[i]).powu(l) })
            .collect()
    };
    let inner = |f: &[C64], w: &[f64], g: &[C64]| -> f64 {
        grid.length() * f.iter().zip(w).zip(g).map(|((a, w), b)| (a.conj() * b).re * w).sum::<f64>()
    };

    let mut quad = 0.0;
    let mut corr = 0.0;
    for (a, j1) in [-2i32, 2].into_iter().enumerate() {
        let rho: Vec<f64> = ks.iter().map(|&k| rho_hat(j1, l, k, p)).collect::<Result<_, _>>()?;
        let dr = dl(&r[a]);
        quad += 0.5 * inner(&dr, &rho, &dr);
        let mut nf = vec![C64::new(0.0, 0.0); grid.n_points()];
        for (b_idx, j2) in [-2i32, 2].into_iter().enumerate() {
            let rv = grid.inverse(&r[b_idx]);
            let rinv: Vec<C64> = r[b_idx].iter().zip(&ks).map(|(c, &k)| c * crate::spectral_core::inv_ik(k)).collect();
            let riv = grid.inverse(&rinv);
            for (pi, ell) in [1i32, -1].into_iter().enumerate() {
                let prod = |g: &[C64]| grid.forward(&phi[pi].iter().zip(g).map(|(a, b)| a * b).collect::<Vec<_>>());
                let f1 = prod(&rv);
                let f2 = prod(&riv);
                let n1 = kernels.get(j1, j2, ell, 1)?;
                let n2 = kernels.get(j1, j2, ell, 2)?;
                for i in 0..nf.len() {
                    nf[i] += n1[i] * f1[i] + n2[i] * f2[i];
                }
            }
        }
        corr += eps * inner(&dr, &rho, &dl(&nf));
    }
    let plain: f64 = r.iter().map(|c| 0.5 * inner(&dl(c), &vec![1.0; c.len()], &dl(c))).sum();
    Ok(EnergyDiagnostic { l, value: quad + corr, quadratic: quad, correction: corr, plain })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyDiagnostic {
    pub l: u32,
    pub value: f64,
    /// `ρ`-weighted part.
    pub quadratic: f64,
    /// `ε`-sized normal-form part.
    pub correction: f64,
    /// Unweighted `½‖∂^l R‖²`.
    pub plain: f64,
}

/// Gaussian envelope `amp·exp(−((ξ − ξ_c)/width)²)` centred in the domain.
pub fn gaussian_envelope(eps: f64, carrier: &Grid1D, n_xi: usize, amp: f64, width: f64) -> Result<EnvelopeField, SimError> {
    let len = eps * carrier.length();
    let g = Grid1D::new(n_xi, len)?;
    let c = 0.5 * len;
    Ok(EnvelopeField::from_fn(g, |x| C64::new(amp * (-((x - c) / width).powi(2)).exp(), 0.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub k0: f64,
    pub b: f64,
    pub amplitude: f64,
    pub width: f64,
    pub n_xi: usize,
    pub dx_max: f64,
}

impl PacketSpec {
    pub fn new(k0: f64, b: f64, amplitude: f64) -> Self {
        Self { k0, b, amplitude, width: 2.0, n_xi: 256, dx_max: std::f64::consts::PI / 12.0 }
    }

    pub fn model_and_packet(&self, eps: f64, corrections: bool) -> Result<(Model, WavePacket), SimError> {
        let mut cfg = SimConfig::for_packet(self.k0, self.b, eps);
        let g = carrier_grid(self.k0, eps, self.dx_max);
        cfg.n = g.n_points();
        cfg.length = g.length();
        cfg.corrections = corrections;
        let model = Model::new(cfg)?;
        let env = gaussian_envelope(eps, model.grid(), self.n_xi, self.amplitude, self.width)?;
        let nls = nls_coefficients(self.k0, self.b)?;
        let packet = WavePacket::new(model.params(), eps, env, nls, corrections)?;
        Ok((model, packet))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub eps: f64,
    pub corrections: bool,
    pub components: [f64; 4],
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualScan {
    pub rows: Vec<ResidualRow>,
    pub order_leading: f64,
    pub order_corrected: f64,
}

/// Residual at `t = 0` for each `ε`, with and without second-order terms,
/// and the fitted orders of the total L² residual.
pub fn residual_scan(spec: &PacketSpec, eps_list: &[f64]) -> Result<ResidualScan, SimError> {
    let jobs: Vec<(f64, bool)> = [false, true].iter().flat_map(|&c| eps_list.iter().map(move |&e| (e, c))).collect();
    let rows: Vec<ResidualRow> = jobs
        .par_iter()
        .map(|&(eps, corr)| {
            let (model, packet) = spec.model_and_packet(eps, corr)?;
            let components = residual(&model, &packet, 0.0)?;
            let total = components.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(ResidualRow { eps, corrections: corr, components, total })
        })
        .collect::<Result<_, SimError>>()?;
    let order = |corr: bool| {
        let pts: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.corrections == corr).map(|r| (r.eps.ln(), r.total.ln())).collect();
        slope(&pts)
    };
    Ok(ResidualScan { order_leading: order(false), order_corrected: order(true), rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Tau0OverEps,
    Tau0OverEps2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorScanOptions {
    pub packet: PacketSpec,
    pub tau0: f64,
    pub horizon: Horizon,
    pub dt: f64,
    /// Number of comparison times along the run.
    pub samples: usize,
}

impl ErrorScanOptions {
    pub fn new(k0: f64, b: f64) -> Self {
        Self { packet: PacketSpec::new(k0, b, 0.1), tau0: 0.5, horizon: Horizon::Tau0OverEps2, dt: 0.05, samples: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRun {
    pub b: f64,
    pub eps: f64,
    pub n: usize,
    pub steps: usize,
    pub t_end: f64,
    /// `sup_t ‖u(t) − εΨ(t)‖` over the sampled times.
    pub error: f64,
    pub solution_norm: f64,
    /// Error exceeded the solution size.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorScan {
    pub runs: Vec<ErrorRun>,
    /// `(b, fitted order)` sorted by `b`.
    pub slopes: Vec<(f64, f64)>,
}

/// One approximation-error run: the simulator from `εΨ(0)` against the
/// packet driven by the NLS envelope.
pub fn error_run(opts: &ErrorScanOptions, eps: f64) -> Result<ErrorRun, SimError> {
    let (model, packet) = opts.packet.model_and_packet(eps, true)?;
    let t_end = match opts.horizon {
        Horizon::Tau0OverEps => opts.tau0 / eps,
        Horizon::Tau0OverEps2 => opts.tau0 / (eps * eps),
    };
    let steps = (t_end / opts.dt).ceil() as usize;
    let dt = t_end / steps as f64;
    let stride = (steps / opts.samples.max(1)).max(1);
    let split = SplitStep::new(&packet.envelope.grid, &packet.nls, eps * eps * dt);
    let mut env = packet.envelope.clone();
    let mut s = model.packet_state(&packet, 0.0)?;
    let mut error: f64 = 0.0;
    let mut sol: f64 = 0.0;
    for i in 1..=steps {
        s = model.step(&s, dt);
        split.step(&env.grid, &mut env.values);
        env.tau += eps * eps * dt;
        if !s.is_finite() {
            return Err(SimError::NotFinite(i));
        }
        if i % stride == 0 || i == steps {
            let approx = packet.with_envelope(env.clone()).build(model.backend(), s.t)?;
            let d: [SpectralField; 4] = std::array::from_fn(|c| s.u[c].sub(&approx[c]));
            error = error.max(error_norm(model.grid(), &d));
            sol = sol.max(error_norm(model.grid(), &s.u));
        }
    }
    Ok(ErrorRun {
        b: opts.packet.b,
        eps,
        n: model.grid().n_points(),
        steps,
        t_end,
        error,
        solution_norm: sol,
        flagged: !(error < sol),
    })
}

/// Runs every `(b, ε)` pair in parallel; results are sorted by `(b, ε)`.
pub fn error_scan(opts: &ErrorScanOptions, bs: &[f64], eps_list: &[f64]) -> Result<ErrorScan, SimError> {
    let jobs: Vec<(f64, f64)> = bs.iter().flat_map(|&b| eps_list.iter().map(move |&e| (b, e))).collect();
    let mut runs: Vec<ErrorRun> = jobs
        .par_iter()
        .map(|&(b, eps)| {
            let mut o = opts.clone();
            o.packet.b = b;
            error_run(&o, eps)
        })
        .collect::<Result<_, SimError>>()?;
    runs.sort_by(|a, b| a.b.total_cmp(&b.b).then(a.eps.total_cmp(&b.eps)));
    let mut slopes = Vec::new();
    let mut bs_sorted: Vec<f64> = bs.to_vec();
    bs_sorted.sort_by(f64::total_cmp);
    bs_sorted.dedup();
    for b in bs_sorted {
        let pts: Vec<(f64, f64)> = runs.iter().filter(|r| r.b == b).map(|r| (r.eps.ln(), r.error.ln())).collect();
        slopes.push((b, slope(&pts)));
    }
    Ok(ErrorScan { runs, slopes })
}
