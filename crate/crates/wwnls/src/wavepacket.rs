//! The modulated approximation `εΨ` on the carrier grid.
//!
//! ```text
//! u₋₁ = ε(A E + c.c.) + ε²(C₂A²E² + c.c. + C₀|A|²)     E = e^{i(k₀α − ω₀t)}
//! u₁  =                  ε²(C₂'A²E² + c.c. + C₀'|A|²)
//! ```
//!
//! `u±2` follow from the consistency relations, including their quadratic
//! part generated by the leading term. `A` is evaluated at
//! `ξ = ε(α − c_g t)` by zero-padding its `ξ`-spectrum onto the `α` grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::ModelParams;
use crate::nls::{modulation_coeffs, EnvelopeField, ModulationCoeffs, NLSCoeffs, NlsError};
use crate::spectral_core::{Grid1D, SpectralField, C64};
use crate::wwsim::system::{Backend, GridBackend, Sym};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PacketError {
    #[error("envelope grid (length {env_len}, {env_n} points) does not nest in carrier grid (length {len}, {n} points) at eps = {eps}")]
    Nesting { env_len: f64, env_n: usize, len: f64, n: usize, eps: f64 },
    #[error("carrier k0 = {k0} is not a grid wavenumber")]
    OffGrid { k0: f64 },
    #[error(transparent)]
    Nls(#[from] NlsError),
}

/// Second-order amplitudes for `p = −1, +1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corrections {
    /// `C₂[p]·A²`
    pub a_m2: [Vec<C64>; 2],
    /// `C₀[p]·|A|²`
    pub a_m0: [Vec<f64>; 2],
}

pub fn second_order_corrections(a: &[C64], mc: &ModulationCoeffs) -> Corrections {
    let sq: Vec<C64> = a.iter().map(|v| v * v).collect();
    let m: Vec<f64> = a.iter().map(|v| v.norm_sqr()).collect();
    Corrections {
        a_m2: std::array::from_fn(|i| sq.iter().map(|v| mc.c2[i] * v).collect()),
        a_m0: std::array::from_fn(|i| m.iter().map(|v| mc.c0[i] * v).collect()),
    }
}

#[derive(Clone, Debug)]
pub struct WavePacket {
    pub eps: f64,
    pub params: ModelParams,
    pub modulation: ModulationCoeffs,
    pub nls: NLSCoeffs,
    /// `A(ξ, τ)` on a periodic grid of length `ε·L`.
    pub envelope: EnvelopeField,
    pub corrections: bool,
    /// Half-width `δ₀` of the retained bands around `ℓk₀`, `|ℓ| ≤ 2`.
    pub truncation: Option<f64>,
}

impl WavePacket {
    pub fn new(
        params: ModelParams,
        eps: f64,
        envelope: EnvelopeField,
        nls: NLSCoeffs,
        corrections: bool,
    ) -> Result<Self, PacketError> {
        let modulation = modulation_coeffs(&params)?;
        Ok(Self { eps, params, modulation, nls, envelope, corrections, truncation: None })
    }

    pub fn fourier_truncate(&self, delta0: f64) -> Self {
        Self { truncation: Some(delta0), ..self.clone() }
    }

    pub fn with_envelope(&self, envelope: EnvelopeField) -> Self {
        Self { envelope, ..self.clone() }
    }

    /// The four fields `(u₋₁, u₁, u₋₂, u₂)` at time `t`.
    pub fn build(&self, be: &GridBackend, t: f64) -> Result<[SpectralField; 4], PacketError> {
        Ok(self.assemble(be, t, false)?.0)
    }

    /// Fields and their exact time derivatives (chain rule through the
    /// envelope evolution and the carrier phase).
    pub fn build_with_dt(
        &self,
        be: &GridBackend,
        t: f64,
    ) -> Result<([SpectralField; 4], [SpectralField; 4]), PacketError> {
        let (u, du) = self.assemble(be, t, true)?;
        Ok((u, du.expect("derivative requested")))
    }

    /// `A` on the `α` grid, shifted by `c_g t`, as physical values.
    fn envelope_on(&self, grid: &Grid1D, t: f64) -> Result<Vec<C64>, PacketError> {
        let env = &self.envelope;
        let (n, len) = (grid.n_points(), grid.length());
        let (ne, le) = (env.grid.n_points(), env.grid.length());
        if ne > n || (le - self.eps * len).abs() > 1e-9 * len {
            return Err(PacketError::Nesting { env_len: le, env_n: ne, len, n, eps: self.eps });
        }
        let ce = env.grid.forward(&env.values);
        let mut c = vec![C64::new(0.0, 0.0); n];
        for (i, v) in ce.iter().enumerate() {
            if i == env.grid.nyquist_index() {
                continue;
            }
            let j = env.grid.mode(i);
            let idx = grid.index_of_mode(j).expect("mode fits");
            let k = grid.wavenumber(idx);
            c[idx] = v * C64::from_polar(1.0, -k * self.params.cg * t);
        }
        Ok(grid.inverse(&c))
    }

    fn assemble(
        &self,
        be: &GridBackend,
        t: f64,
        with_dt: bool,
    ) -> Result<([SpectralField; 4], Option<[SpectralField; 4]>), PacketError> {
        let grid = be.grid();
        let p = &self.params;
        let k0_mode = p.k0 / grid.dk();
        if (k0_mode - k0_mode.round()).abs() > 1e-9 {
            return Err(PacketError::OffGrid { k0: p.k0 });
        }
        let e = self.eps;
        let n = grid.n_points();
        let a = self.envelope_on(grid, t)?;
        let nodes = grid.nodes();
        let carrier: Vec<C64> = nodes.iter().map(|&x| C64::from_polar(1.0, p.k0 * x - p.omega0 * t)).collect();

        // dA/dt on the α grid: −c_g ∂αA + i h ∂α²A + iε²ν|A|²A
        let da: Vec<C64> = if with_dt {
            let ca = grid.forward(&a);
            let ks = grid.wavenumbers();
            let ny = grid.nyquist_index();
            let lin: Vec<C64> = ca
                .iter()
                .zip(&ks)
                .enumerate()
                .map(|(i, (c, &k))| {
                    if i == ny {
                        return C64::new(0.0, 0.0);
                    }
                    c * (C64::new(0.0, -p.cg * k) - C64::new(0.0, self.nls.half_omega2 * k * k))
                })
                .collect();
            let lin = grid.inverse(&lin);
            a.iter()
                .zip(lin)
                .map(|(v, l)| l + C64::new(0.0, e * e * self.nls.nu * v.norm_sqr()) * v)
                .collect()
        } else {
            Vec::new()
        };

        let zero = || vec![C64::new(0.0, 0.0); n];
        let mut u1 = [zero(), zero()];
        let mut du1 = [zero(), zero()];
        let iw = C64::new(0.0, p.omega0);
        for i in 0..n {
            let ae = a[i] * carrier[i];
            u1[0][i] = e * (ae + ae.conj());
            if with_dt {
                let d = (da[i] - iw * a[i]) * carrier[i];
                du1[0][i] = e * (d + d.conj());
            }
        }
        let lead = grid.forward(&u1[0]);
        let dlead = if with_dt { grid.forward(&du1[0]) } else { Vec::new() };

        if self.corrections {
            let mc = &self.modulation;
            for (c, (uc, duc)) in u1.iter_mut().zip(du1.iter_mut()).enumerate() {
                for i in 0..n {
                    let e2 = carrier[i] * carrier[i];
                    let f2 = mc.c2[c] * a[i] * a[i] * e2;
                    uc[i] += e * e * (f2 + f2.conj() + mc.c0[c] * a[i].norm_sqr());
                    if with_dt {
                        let df2 = mc.c2[c] * (2.0 * a[i] * da[i] - 2.0 * iw * a[i] * a[i]) * e2;
                        let dm = 2.0 * (a[i].conj() * da[i]).re;
                        duc[i] += e * e * (df2 + df2.conj() + mc.c0[c] * dm);
                    }
                }
            }
        }
        let c1 = [grid.forward(&u1[0]), grid.forward(&u1[1])];
        let mut u = consistent_fields(be, &c1[0], &c1[1]);
        let mut du = if with_dt {
            let dc1 = [grid.forward(&du1[0]), grid.forward(&du1[1])];
            Some(consistent_fields(be, &dc1[0], &dc1[1]))
        } else {
            None
        };
        if self.corrections {
            let q = quadratic_consistency(be, &lead, &lead);
            add_pm2(&mut u, &q);
            if let Some(du) = du.as_mut() {
                let q1 = quadratic_consistency(be, &dlead, &lead);
                let q2 = quadratic_consistency(be, &lead, &dlead);
                add_pm2(du, &q1);
                add_pm2(du, &q2);
            }
        }
        if let Some(d0) = self.truncation {
            let keep = band_mask(grid, p.k0, d0);
            truncate(&mut u, &keep);
            if let Some(du) = du.as_mut() {
                truncate(du, &keep);
            }
        }
        let wrap = |v: [Vec<C64>; 4]| v.map(|c| SpectralField::from_coeffs(c, true));
        Ok((wrap(u), du.map(wrap)))
    }
}

/// `u₋₂ = ∂²u₋₁`, `u₂ = ∂²u₁` (linear part of the consistency relations).
fn consistent_fields(be: &GridBackend, um1: &[C64], up1: &[C64]) -> [Vec<C64>; 4] {
    let d2 = |v: &[C64]| be.apply(Sym::Dx, &be.apply(Sym::Dx, &v.to_vec()));
    [um1.to_vec(), up1.to_vec(), d2(um1), d2(up1)]
}

/// Quadratic part of `u₋₂ + u₂` generated by `u₋₁`-only data,
/// `−∂(K₀f · σ⁻¹∂²g)`, split evenly onto `u₋₂` and `u₂`.
fn quadratic_consistency(be: &GridBackend, f: &[C64], g: &[C64]) -> Vec<C64> {
    let k0f = be.apply(Sym::K0, &f.to_vec());
    let d = be.apply(Sym::SigmaInv, &be.apply(Sym::Dx, &be.apply(Sym::Dx, &g.to_vec())));
    be.scale(&be.apply(Sym::Dx, &be.mul(&k0f, &d)), -0.5)
}

fn add_pm2(u: &mut [Vec<C64>; 4], q: &[C64]) {
    for c in [2, 3] {
        for (a, b) in u[c].iter_mut().zip(q) {
            *a += b;
        }
    }
}

/// Keeps `|k − ℓk₀| ≤ δ₀` for `ℓ ∈ {−2, …, 2}`.
pub fn band_mask(grid: &Grid1D, k0: f64, delta0: f64) -> Vec<bool> {
    grid.wavenumbers()
        .into_iter()
        .map(|k| (-2..=2).any(|l| (k - l as f64 * k0).abs() <= delta0 * (1.0 + 1e-12)))
        .collect()
}

fn truncate(u: &mut [Vec<C64>; 4], keep: &[bool]) {
    for f in u.iter_mut() {
        for (c, &k) in f.iter_mut().zip(keep) {
            if !k {
                *c = C64::new(0.0, 0.0);
            }
        }
    }
}

/// Carrier grid for a given `ε`: `L = 2πN_c/k₀` with `N_c = round(40k₀/(2πε))`
/// and the smallest power-of-two `n` with `Δα ≤ dx_max`.
pub fn carrier_grid(k0: f64, eps: f64, dx_max: f64) -> Grid1D {
    let nc = (k0 * 40.0 / (2.0 * std::f64::consts::PI * eps)).round().max(1.0);
    let len = 2.0 * std::f64::consts::PI * nc / k0;
    let n = ((len / dx_max).log2().ceil() as u32).max(4);
    Grid1D::new(1usize << n, len).expect("power of two, positive length")
}
