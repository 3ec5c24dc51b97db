//! Modulation coefficients and a split-step solver for
//! `∂τA = i·h·∂ξ²A + i·ν·|A|²A` with `h = ∂²ω(k₀)/2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{omega, omega_derivs, ModelParams};
use crate::kernels::{pair_flux, pair_symbol};
use crate::spectral_core::{Grid1D, SpectralError, C64};

/// Denominators below this are treated as resonant.
pub const NONRESONANCE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NlsError {
    #[error("nonresonance condition 2om violated: −2ω₀ {sign} ω(2k₀) = {value:.3e}")]
    SecondHarmonic { sign: char, value: f64 },
    #[error("group velocity c_g = {cg} coincides with ±∂kω(0) = {w1}")]
    GroupVelocity { cg: f64, w1: f64 },
    #[error("NaN in envelope at step {0}")]
    NotFinite(usize),
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    UserSupplied,
    QuadraticTruncatedDerivation,
}

/// Second-order amplitudes of the ansatz, indexed by the target component
/// `p ∈ {−1, +1}` as `[p = −1, p = +1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationCoeffs {
    /// Coefficient of `A²E²` in `u_p`.
    pub c2: [C64; 2],
    /// Coefficient of `|A|²` in `u_p`.
    pub c0: [f64; 2],
    /// `−2ω₀ − p·ω(2k₀)`; the `E²` balance divides by `i` times this.
    pub denom2: [f64; 2],
    /// `−p·∂kω(0) − c_g`.
    pub denom0: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NLSCoeffs {
    pub half_omega2: f64,
    pub nu: f64,
    pub provenance: Provenance,
    /// Imaginary part discarded from the derived `ν` (zero up to round-off).
    pub nu_imag_defect: f64,
}

impl NLSCoeffs {
    pub fn user(half_omega2: f64, nu: f64) -> Self {
        Self { half_omega2, nu, provenance: Provenance::UserSupplied, nu_imag_defect: 0.0 }
    }

    /// `ν/h > 0`.
    pub fn focusing(&self) -> bool {
        self.nu * self.half_omega2 > 0.0
    }
}

fn unit(c: usize, v: C64) -> [C64; 4] {
    let mut u = [C64::new(0.0, 0.0); 4];
    u[c] = v;
    u
}

const ONE: C64 = C64::new(1.0, 0.0);

/// `[p = −1, p = +1] → component index`.
const TARGET: [usize; 2] = [0, 1];

/// `E²` and `E⁰` amplitudes generated by the carrier `A·e^{ik₀α}` in `u₋₁`.
pub fn modulation_coeffs(params: &ModelParams) -> Result<ModulationCoeffs, NlsError> {
    let (k0, b) = (params.k0, params.b);
    let w0 = params.omega0;
    let w2k = omega(2.0 * k0, b);
    let w1_zero = omega_derivs(0.0, b)[1];
    let mut out = ModulationCoeffs {
        c2: [C64::new(0.0, 0.0); 2],
        c0: [0.0; 2],
        denom2: [0.0; 2],
        denom0: [0.0; 2],
    };
    let carrier = unit(0, ONE);
    for (i, p) in [-1.0f64, 1.0].into_iter().enumerate() {
        let d2 = -2.0 * w0 - p * w2k;
        if d2.abs() < NONRESONANCE_TOL {
            return Err(NlsError::SecondHarmonic { sign: if p < 0.0 { '+' } else { '−' }, value: d2 });
        }
        let d0 = -p * w1_zero - params.cg;
        if d0.abs() < NONRESONANCE_TOL {
            return Err(NlsError::GroupVelocity { cg: params.cg, w1: w1_zero });
        }
        // u_p at 2k₀: (½T − i·d2·C) = 0 after the phase balance
        let t = pair_symbol(k0, carrier, k0, carrier, b)[TARGET[i]];
        out.c2[i] = 0.5 * t / C64::new(0.0, d2);
        // u_p at 0: ∂ξ(d0·C − G|A|²) = 0 at order ε³
        let g = pair_flux(k0, carrier, -k0, carrier, b)[TARGET[i]];
        out.c0[i] = g.re / d0;
        out.denom2[i] = d2;
        out.denom0[i] = d0;
    }
    Ok(out)
}

/// `h` from the dispersion relation and `ν` of the quadratic-truncated model,
/// obtained by eliminating the second-order amplitudes in the `ε³E` balance.
pub fn nls_coefficients(k0: f64, b: f64) -> Result<NLSCoeffs, NlsError> {
    let params = ModelParams::new(k0, b).map_err(|e| NlsError::BadInput(e.to_string()))?;
    let mc = modulation_coeffs(&params)?;
    let carrier = unit(0, ONE);
    let mut inu = C64::new(0.0, 0.0);
    for i in 0..2 {
        let mean = unit(TARGET[i], C64::new(mc.c0[i], 0.0));
        let harm = unit(TARGET[i], mc.c2[i]);
        inu += pair_symbol(k0, carrier, 0.0, mean, b)[0];
        inu += pair_symbol(-k0, carrier, 2.0 * k0, harm, b)[0];
    }
    let nu = inu / C64::new(0.0, 1.0);
    Ok(NLSCoeffs {
        half_omega2: 0.5 * params.omega2,
        nu: nu.re,
        provenance: Provenance::QuadraticTruncatedDerivation,
        nu_imag_defect: nu.im,
    })
}

/// Envelope samples on a periodic `ξ` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeField {
    pub grid: Grid1D,
    pub values: Vec<C64>,
    pub tau: f64,
}

impl EnvelopeField {
    pub fn new(grid: Grid1D, values: Vec<C64>, tau: f64) -> Result<Self, NlsError> {
        if values.len() != grid.n_points() {
            return Err(NlsError::BadInput(format!(
                "{} samples on a grid of {}",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values, tau })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self { grid, values, tau: 0.0 }
    }

    /// `∫|A|² dξ`.
    pub fn mass(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn l2_distance(&self, other: &Self) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        (self.grid.spacing() * s).sqrt()
    }
}

/// Strang splitting: half linear step, full nonlinear phase, half linear step.
pub struct SplitStep {
    half_linear: Vec<C64>,
    nu: f64,
    dtau: f64,
}

impl SplitStep {
    pub fn new(grid: &Grid1D, coeffs: &NLSCoeffs, dtau: f64) -> Self {
        let h = coeffs.half_omega2;
        let half_linear = grid
            .wavenumbers()
            .into_iter()
            .map(|k| C64::from_polar(1.0, -h * k * k * 0.5 * dtau))
            .collect();
        Self { half_linear, nu: coeffs.nu, dtau }
    }

    pub fn step(&self, grid: &Grid1D, a: &mut [C64]) {
        self.linear(grid, a);
        for v in a.iter_mut() {
            *v *= C64::from_polar(1.0, self.nu * v.norm_sqr() * self.dtau);
        }
        self.linear(grid, a);
    }

    fn linear(&self, grid: &Grid1D, a: &mut [C64]) {
        grid.forward_in_place(a);
        for (c, m) in a.iter_mut().zip(&self.half_linear) {
            *c *= m;
        }
        grid.inverse_in_place(a);
    }
}

/// Integrates to `tau_end`, storing every `stride`-th state (and the last).
pub fn solve(
    a0: &EnvelopeField,
    coeffs: &NLSCoeffs,
    dtau: f64,
    tau_end: f64,
    stride: usize,
) -> Result<Vec<EnvelopeField>, NlsError> {
    if !(dtau.is_finite() && dtau > 0.0) {
        return Err(NlsError::BadInput(format!("dtau = {dtau}")));
    }
    let span = tau_end - a0.tau;
    if span < 0.0 {
        return Err(NlsError::BadInput(format!("tau_end {tau_end} before start {}", a0.tau)));
    }
    let n = (span / dtau).round().max(if span > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if n == 0 { 0.0 } else { span / n as f64 };
    let stepper = SplitStep::new(&a0.grid, coeffs, h);
    let stride = stride.max(1);
    let mut a = a0.values.clone();
    let mut out = vec![a0.clone()];
    for i in 1..=n {
        stepper.step(&a0.grid, &mut a);
        if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(NlsError::NotFinite(i));
        }
        if i % stride == 0 || i == n {
            out.push(EnvelopeField { grid: a0.grid.clone(), values: a.clone(), tau: a0.tau + i as f64 * h });
        }
    }
    Ok(out)
}

/// Bright soliton `η·sech(η·√(ν/2h)·ξ)·e^{iνη²τ/2}`, centred at `xi_c`;
/// requires `ν/h > 0`.
pub fn soliton(coeffs: &NLSCoeffs, eta: f64, xi: f64, xi_c: f64, tau: f64) -> Option<C64> {
    if !coeffs.focusing() {
        return None;
    }
    let kappa = (coeffs.nu / (2.0 * coeffs.half_omega2)).sqrt();
    let amp = eta / (eta * kappa * (xi - xi_c)).cosh();
    Some(C64::from_polar(amp, 0.5 * coeffs.nu * eta * eta * tau))
}
