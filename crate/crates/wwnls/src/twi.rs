//! Three-wave interaction system for a resonant triad `(−ℓk₀, ℓk₁, −ℓ(k₁−k₀))`:
//!
//! ```text
//! ∂τ A₀ = c₀ conj(A₁A₂),  ∂τ A₁ = c₁ conj(A₀A₂),  ∂τ A₂ = c₂ conj(A₀A₁)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::b11;
use crate::resonance::r_hat;
use crate::spectral_core::C64;

/// Amplitudes above this magnitude end an integration.
pub const BLOW_UP: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwiError {
    #[error("ell must be ±1, got {0}")]
    BadEll(i32),
    #[error("c2 vanishes; the conserved quantity is undefined")]
    ZeroC2,
    #[error("invalid step: {0}")]
    BadStep(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TWIState {
    pub a0: C64,
    pub a1: C64,
    pub a2: C64,
    pub tau: f64,
}

impl TWIState {
    pub fn new(a0: C64, a1: C64, a2: C64) -> Self {
        Self { a0, a1, a2, tau: 0.0 }
    }

    pub fn max_abs(&self) -> f64 {
        self.a0.norm().max(self.a1.norm()).max(self.a2.norm())
    }

    fn axpy(&self, h: f64, d: &[C64; 3]) -> [C64; 3] {
        [self.a0 + d[0] * h, self.a1 + d[1] * h, self.a2 + d[2] * h]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TWICoeffs {
    pub c0: C64,
    pub c1: C64,
    pub c2: C64,
    /// Triad wavenumbers `(k₀ℓ, k₁ℓ, k₂ℓ)`; empty for synthetic coefficients.
    pub triad: Option<[f64; 3]>,
    /// `|r̂(k₁)|` at the supplied pair.
    pub resonance_defect: f64,
    pub warning: Option<String>,
}

impl TWICoeffs {
    pub fn synthetic(c0: C64, c1: C64, c2: C64) -> Self {
        Self { c0, c1, c2, triad: None, resonance_defect: 0.0, warning: None }
    }

    /// `c₁/c₂`; real for extracted coefficients, so only the real part is kept.
    pub fn ratio(&self) -> Result<f64, TwiError> {
        if self.c2.norm() == 0.0 {
            return Err(TwiError::ZeroC2);
        }
        Ok((self.c1 / self.c2).re)
    }

    /// The NLS subspace `A₁ = A₂ = 0` is stable iff `c₁/c₂ < 0`.
    pub fn nls_subspace_stable(&self) -> Result<bool, TwiError> {
        Ok(self.ratio()? < 0.0)
    }

    /// Linear growth rate of perturbations of `(A₀, 0, 0)` with `|A₀| = a0`.
    pub fn growth_rate(&self, a0: f64) -> f64 {
        let p = (self.c1 * self.c2.conj()).re;
        if p > 0.0 { a0 * p.sqrt() } else { 0.0 }
    }

    fn max_abs(&self) -> f64 {
        self.c0.norm().max(self.c1.norm()).max(self.c2.norm())
    }
}

/// Coefficients by exact two-mode extraction at the triad points.
pub fn twi_coeffs(k0: f64, k1: f64, b: f64, ell: i32) -> Result<TWICoeffs, TwiError> {
    if ell != 1 && ell != -1 {
        return Err(TwiError::BadEll(ell));
    }
    let l = ell as f64;
    let bh = |k: f64, p: f64, m: f64| b11(k, p, m, b);
    let c0 = bh(-l * k0, -l * k1, l * (k1 - k0));
    let c1 = bh(l * k1, l * k0, l * (k1 - k0));
    let c2 = bh(l * (k0 - k1), l * k0, -l * k1);
    let defect = r_hat(k1, b, k0).abs();
    let warning = (defect > 1e-8).then(|| format!("triad not resonant: |r̂(k1)| = {defect:.3e}"));
    Ok(TWICoeffs {
        c0,
        c1,
        c2,
        triad: Some([-l * k0, l * k1, -l * (k1 - k0)]),
        resonance_defect: defect,
        warning,
    })
}

pub fn rhs(a: &[C64; 3], c: &TWICoeffs) -> [C64; 3] {
    [c.c0 * (a[1] * a[2]).conj(), c.c1 * (a[0] * a[2]).conj(), c.c2 * (a[0] * a[1]).conj()]
}

/// `E = |A₁|² − (c₁/c₂)|A₂|²`.
pub fn conserved_e(s: &TWIState, c: &TWICoeffs) -> Result<f64, TwiError> {
    Ok(s.a1.norm_sqr() - c.ratio()? * s.a2.norm_sqr())
}

/// `10⁻³/(max|c|·max|A₀|)`.
pub fn default_dt(s: &TWIState, c: &TWICoeffs) -> f64 {
    let scale = c.max_abs() * s.max_abs();
    if scale > 0.0 { 1e-3 / scale } else { 1e-3 }
}

pub fn rk4_step(s: &TWIState, c: &TWICoeffs, dt: f64) -> TWIState {
    let a = [s.a0, s.a1, s.a2];
    let k1 = rhs(&a, c);
    let k2 = rhs(&s.axpy(0.5 * dt, &k1), c);
    let k3 = rhs(&s.axpy(0.5 * dt, &k2), c);
    let k4 = rhs(&s.axpy(dt, &k3), c);
    let n: [C64; 3] = std::array::from_fn(|i| a[i] + (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) * (dt / 6.0));
    TWIState { a0: n[0], a1: n[1], a2: n[2], tau: s.tau + dt }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TWISample {
    pub tau: f64,
    pub a0: C64,
    pub a1: C64,
    pub a2: C64,
    pub e: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TWISample>,
    pub blown_up: bool,
}

impl Trajectory {
    pub fn last(&self) -> &TWISample {
        self.samples.last().expect("trajectory has the initial sample")
    }
}

fn sample(s: &TWIState, c: &TWICoeffs) -> TWISample {
    TWISample { tau: s.tau, a0: s.a0, a1: s.a1, a2: s.a2, e: conserved_e(s, c).ok() }
}

/// Classical RK4 from `state.tau` to `t_end` (backwards when `t_end < tau`),
/// recording every `stride`-th step.
pub fn integrate(
    state: &TWIState,
    c: &TWICoeffs,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory, TwiError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(TwiError::BadStep(format!("dt = {dt}")));
    }
    let span = t_end - state.tau;
    let n = (span.abs() / dt).round() as usize;
    let h = if n == 0 { 0.0 } else { span / n as f64 };
    let stride = stride.max(1);
    let mut s = *state;
    let mut out = vec![sample(&s, c)];
    for i in 1..=n {
        s = rk4_step(&s, c, h);
        if !(s.max_abs() <= BLOW_UP) {
            out.push(sample(&s, c));
            return Ok(Trajectory { samples: out, blown_up: true });
        }
        if i % stride == 0 || i == n {
            out.push(sample(&s, c));
        }
    }
    Ok(Trajectory { samples: out, blown_up: false })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Predicted linear rate `√(Re c₁ conj c₂)`, 0 when stable.
    pub predicted_rate: f64,
    /// Least-squares slope of `log|A₁|`.
    pub fitted_rate: f64,
    /// `max_τ (|A₁|+|A₂|) / (|A₁|+|A₂|)(0)`.
    pub amplification: f64,
    pub t_end: f64,
}

/// Perturbs `A₀ = 1` by `A₁ = A₂ = δ` and integrates for `t_end`; for unstable
/// coefficients `t_end` defaults to `log(10)/rate` plus one e-fold.
pub fn growth_experiment(c: &TWICoeffs, delta: f64, t_end: Option<f64>) -> Result<GrowthReport, TwiError> {
    let s0 = TWIState::new(C64::new(1.0, 0.0), C64::new(delta, 0.0), C64::new(delta, 0.0));
    let rate = c.growth_rate(1.0);
    let t_end = t_end.unwrap_or(if rate > 0.0 { (10f64.ln() + 1.0) / rate } else { 50.0 });
    let dt = default_dt(&s0, c).min(t_end / 1000.0);
    let traj = integrate(&s0, c, dt, t_end, 1)?;
    let p0 = s0.a1.norm() + s0.a2.norm();
    let amplification =
        traj.samples.iter().map(|x| x.a1.norm() + x.a2.norm()).fold(0.0, f64::max) / p0;
    // fit over the first e-fold window of the prediction (or the whole run)
    let window = if rate > 0.0 { t_end.min(1.0 / rate + 10f64.ln() / rate) } else { t_end };
    let pts: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|x| x.tau <= window && x.a1.norm() > 0.0)
        .map(|x| (x.tau, x.a1.norm().ln()))
        .collect();
    Ok(GrowthReport { predicted_rate: rate, fitted_rate: slope(&pts), amplification, t_end })
}

pub(crate) fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
