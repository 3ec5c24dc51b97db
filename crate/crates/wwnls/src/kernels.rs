//! Weights, cut-offs, quadratic symbols and normal-form kernels.
//!
//! The quadratic symbol `q̂_{j₁j₂}(k, k−m, m)` is the coefficient of
//! `e^{ikα}` in equation `j₁` when the carrier enters at `l = k−m` and the
//! perturbation in component `j₂` enters at `m`. The carrier occupies `u₋₁`
//! together with its consistent `u₋₂ = ∂²u₋₁`; a perturbation of `u_{±2}`
//! carries the consistent `u_{±1} = ∂⁻²u_{±2}`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{k0_symbol, omega_derivs, sigma};
use crate::resonance::{self, r_general, ResonanceError};
use crate::spectral_core::{Grid1D, SpectralField, C64};
use crate::wwsim::system::{quadratic_terms, sparse_coeff, Backend, GridBackend, SparseBackend, Sym};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid symbol request: {0}")]
    BadRequest(String),
    #[error("singular symbol: {0}")]
    Singular(String),
    #[error("mode {0} not representable without aliasing")]
    Aliased(i64),
    #[error("non-removable singularity of n̂ at k = {k}")]
    NonRemovable { k: f64 },
    #[error(transparent)]
    Resonance(#[from] ResonanceError),
}

const ZERO: C64 = C64::new(0.0, 0.0);

fn ic(x: f64) -> C64 {
    C64::new(0.0, x)
}

/// `ϑ̂`: 1 for `|k| > δ₀`, linear from `ε` at 0 to 1 at `δ₀`.
pub fn theta_hat(k: f64, eps: f64, delta0: f64) -> f64 {
    let a = k.abs();
    if a > delta0 {
        1.0
    } else {
        eps + (1.0 - eps) * a / delta0
    }
}

pub fn theta_inv_hat(k: f64, eps: f64, delta0: f64) -> f64 {
    1.0 / theta_hat(k, eps, delta0)
}

fn smooth_step(x: f64) -> f64 {
    // 0 for x <= 0, 1 for x >= 1, C^∞ in between
    let phi = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = phi(x);
        a / (a + phi(1.0 - x))
    }
}

/// Even bump: 1 on `|k| <= δ/2`, 0 on `|k| >= δ`.
pub fn xi_hat(k: f64, delta: f64) -> f64 {
    let x = (k.abs() - 0.5 * delta) / (0.5 * delta);
    1.0 - smooth_step(x)
}

/// Values one input contributes to the quadratic terms at wavenumber `q`.
#[derive(Clone, Copy, Debug)]
struct Slot {
    q: f64,
    s: C64,
    y: C64,
    um2: C64,
    up2: C64,
    d2: C64,
    i2: C64,
    j2: C64,
    ed: C64,
    k0: C64,
    sig: f64,
}

impl Slot {
    fn new(q: f64, u: [C64; 4], b: f64) -> Self {
        let si = 1.0 / sigma(q, b);
        let s2 = u[2] + u[3];
        let d2 = (u[2] - u[3]) * si;
        let (i2, j2, ed) = if q == 0.0 {
            (ZERO, ZERO, ZERO)
        } else {
            (-s2 / (q * q), s2 / ic(q), d2 / ic(q))
        };
        Self {
            q,
            s: u[0] + u[1],
            y: (u[0] - u[1]) * si,
            um2: u[2],
            up2: u[3],
            d2,
            i2,
            j2,
            ed,
            k0: k0_symbol(q),
            sig: sigma(q, b),
        }
    }
}

/// Cross coefficient of `e^{i(l+m)α}` in all four equations, computed
/// term by term on symbols. With `flux_only` the `u±1` entries are returned
/// before the outer `∂_α` and the `u±2` entries are zero.
fn cross_symbol(p: &Slot, r: &Slot, b: f64, flux_only: bool) -> [C64; 4] {
    let k = p.q + r.q;
    let ik = ic(k);
    let kk = k0_symbol(k);
    let sk = sigma(k, b);
    let sech2 = {
        let c = k.cosh();
        if c.is_finite() { 1.0 / (c * c) } else { 0.0 }
    };
    let cross = |fa: &dyn Fn(&Slot) -> C64, fb: &dyn Fn(&Slot) -> C64| fa(p) * fb(r) + fa(r) * fb(p);
    // σK₀[K₀, y]g − σ(1+K₀²)(y g)
    let comm = |fy: &dyn Fn(&Slot) -> C64, fg: &dyn Fn(&Slot) -> C64| {
        let yg = cross(fy, fg);
        let y_k0g = cross(fy, &|s: &Slot| s.k0 * fg(s));
        sk * kk * (kk * yg - y_k0g) - sk * sech2 * yg
    };

    let f1 = 0.25 * (cross(&|s| s.k0 * s.s, &|s| s.k0 * s.s) - cross(&|s| s.s, &|s| s.s));
    let g1 = 0.5 * comm(&|s| s.y, &|s| s.s);
    if flux_only {
        return [f1 + g1, f1 - g1, ZERO, ZERO];
    }
    let (f1, g1) = (ik * f1, ik * g1);

    let tb = 0.5 * ik * (sk * cross(&|s| s.i2, &|s| s.d2) - cross(&|s| s.i2, &|s| s.sig * s.d2));
    let tc = 0.5 * ik * cross(&|s| s.k0 * s.ed, &|s| s.d2);
    let td = -0.5 * b * ik * cross(&|s| s.d2, &|s| s.k0 * ic(s.q) * s.d2);
    let te = 0.5 * ik * (cross(&|s| s.k0 * s.j2, &|s| s.k0 * s.j2) - cross(&|s| s.j2, &|s| s.j2));
    let tf = 0.5 * ik * ik * comm(&|s| s.y, &|s| s.j2);
    let tg = 0.5 * ik * comm(&|s| s.ed, &|s| s.j2);
    let ta_m = -ik * cross(&|s| s.i2, &|s| s.um2);
    let ta_p = -ik * cross(&|s| s.i2, &|s| s.up2);

    let common = tc + td + te;
    [f1 + g1, f1 - g1, ta_m - tb + common + tf + tg, ta_p + tb + common - tf - tg]
}

fn eq_index(j: i32) -> Result<usize, KernelError> {
    match j {
        -1 => Ok(0),
        1 => Ok(1),
        -2 => Ok(2),
        2 => Ok(3),
        _ => Err(KernelError::BadRequest(format!("component {j} not in {{±1, ±2}}"))),
    }
}

/// Carrier input at `l`: `u₋₁ = 1`, `u₋₂ = (il)²`.
fn carrier_input(l: f64) -> [C64; 4] {
    [C64::new(1.0, 0.0), ZERO, C64::new(-l * l, 0.0), ZERO]
}

/// Perturbation input at `m` in component `j2` (with its consistent partner).
fn perturbation_input(j2: i32, m: f64) -> Result<[C64; 4], KernelError> {
    let mut u = [ZERO; 4];
    let one = C64::new(1.0, 0.0);
    match j2 {
        -1 | 1 => u[eq_index(j2)?] = one,
        -2 | 2 => {
            if m == 0.0 {
                return Err(KernelError::Singular("perturbation of u±2 at m = 0".into()));
            }
            u[eq_index(j2)?] = one;
            u[eq_index(j2 / 2)?] = C64::new(-1.0 / (m * m), 0.0);
        }
        _ => return Err(KernelError::BadRequest(format!("j2 = {j2}"))),
    }
    Ok(u)
}

fn check_pair(j1: i32, j2: i32) -> Result<(), KernelError> {
    eq_index(j1)?;
    eq_index(j2)?;
    if j1.abs() != j2.abs() {
        return Err(KernelError::BadRequest(format!("j2 = {j2} must be ±j1 for j1 = {j1}")));
    }
    Ok(())
}

/// Full closed-form symbol `q̂_{j₁j₂}(k, k−m, m)`.
pub fn q_total(j1: i32, j2: i32, k: f64, m: f64, b: f64) -> Result<C64, KernelError> {
    check_pair(j1, j2)?;
    let l = k - m;
    if j1.abs() == 2 && l == 0.0 {
        return Err(KernelError::Singular("carrier at l = 0".into()));
    }
    let p = Slot::new(l, carrier_input(l), b);
    let r = Slot::new(m, perturbation_input(j2, m)?, b);
    Ok(cross_symbol(&p, &r, b, false)[eq_index(j1)?])
}

/// Cross coefficient of `e^{i(l+m)α}` in all four equations for inputs
/// `ul·e^{ilα}` and `um·e^{imα}` (components ordered `u₋₁, u₁, u₋₂, u₂`).
pub fn pair_symbol(l: f64, ul: [C64; 4], m: f64, um: [C64; 4], b: f64) -> [C64; 4] {
    cross_symbol(&Slot::new(l, ul, b), &Slot::new(m, um, b), b, false)
}

/// `u₋₁, u₁` entries of [`pair_symbol`] divided by `i(l+m)`; regular at `l+m = 0`.
pub fn pair_flux(l: f64, ul: [C64; 4], m: f64, um: [C64; 4], b: f64) -> [C64; 2] {
    let f = cross_symbol(&Slot::new(l, ul, b), &Slot::new(m, um, b), b, true);
    [f[0], f[1]]
}

/// The displayed symbols `q̂^{|j₁|,μ}` for `μ ≤ 2|j₁|`; `μ = 2|j₁|+1` is the
/// remainder `q̂ − Σ_{μ' ≤ 2|j₁|} q̂^{|j₁|,μ'}`.
pub fn q_symbol(j1: i32, j2: i32, mu: u32, k: f64, m: f64, b: f64) -> Result<C64, KernelError> {
    check_pair(j1, j2)?;
    let top = 2 * j1.unsigned_abs() + 1;
    if mu == 0 || mu > top {
        return Err(KernelError::BadRequest(format!("mu = {mu} outside 1..={top}")));
    }
    if mu == top {
        let mut rest = q_total(j1, j2, k, m, b)?;
        for nu in 1..top {
            rest -= q_symbol(j1, j2, nu, k, m, b)?;
        }
        return Ok(rest);
    }
    let l = k - m;
    let ik = ic(k);
    let d = |a: i32, c: i32| if a == c { 1.0 } else { 0.0 };
    let s1 = j1.signum() as f64;
    let s2 = j2.signum() as f64;
    let si = |q: f64| 1.0 / sigma(q, b);
    Ok(match (j1.abs(), mu) {
        (1, 1) => -d(j1, j2) * ik,
        (1, 2) => d(j1, -j2) * ik * k0_symbol(l) * k0_symbol(m),
        (2, 1) => -d(j1, j2) * ik,
        (2, 2) => -0.5 * s2 * ik * k0_symbol(l) * si(l) * ic(l) * si(m),
        (2, 3) => -0.5 * b * s2 * ik * si(l) * l * l * k0_symbol(m) * si(m) * ic(m),
        (2, 4) => {
            if m == 0.0 {
                return Err(KernelError::Singular("q^{2,4} at m = 0".into()));
            }
            0.5 * s1 * ik * (sigma(k, b) - sigma(l, b)) * si(l) * l * l / (m * m)
        }
        _ => unreachable!(),
    })
}

/// Exact cross coefficient by feeding two exponentials through the generic
/// term list with the sparse backend (any real `l`, `m`).
pub fn sparse_q(j1: i32, j2: i32, k: f64, m: f64, b: f64) -> Result<C64, KernelError> {
    check_pair(j1, j2)?;
    let l = k - m;
    let be = SparseBackend::new(b);
    let pu = carrier_input(l);
    let ru = perturbation_input(j2, m)?;
    let field = |q: f64, c: C64| if c == ZERO { Vec::new() } else { vec![(q, c)] };
    let both: [Vec<(f64, C64)>; 4] =
        std::array::from_fn(|i| be.add(&field(l, pu[i]), &field(m, ru[i])));
    let only_p: [Vec<(f64, C64)>; 4] = std::array::from_fn(|i| field(l, pu[i]));
    let only_r: [Vec<(f64, C64)>; 4] = std::array::from_fn(|i| field(m, ru[i]));
    let e = eq_index(j1)?;
    let nb = quadratic_terms(&be, &both);
    let np = quadratic_terms(&be, &only_p);
    let nr = quadratic_terms(&be, &only_r);
    Ok(sparse_coeff(&nb[e], k) - sparse_coeff(&np[e], k) - sparse_coeff(&nr[e], k))
}

/// `b̂₁₁(k, l, m)` with `k = l + m`: the `u₋₁`–`u₋₁` interaction coefficient.
pub fn b11(k: f64, l: f64, m: f64, b: f64) -> C64 {
    debug_assert!((k - l - m).abs() <= 1e-12 * (1.0 + k.abs()));
    sparse_q(-1, -1, l + m, m, b).expect("u-1 block is regular")
}

/// Bilinear map `(ψ, R) ↦` cross term of equation `j1`, on a grid.
pub fn block_operator(
    be: &GridBackend,
    j1: i32,
    j2: i32,
) -> Result<impl Fn(&SpectralField, &SpectralField) -> SpectralField + '_, KernelError> {
    check_pair(j1, j2)?;
    let e = eq_index(j1)?;
    let ej2 = eq_index(j2)?;
    Ok(move |psi: &SpectralField, r: &SpectralField| {
        let n = psi.len();
        let zero = vec![ZERO; n];
        let p_m1 = psi.coeffs().to_vec();
        let p_m2 = be.apply(Sym::Dx, &be.apply(Sym::Dx, &p_m1));
        let pu = [p_m1, zero.clone(), p_m2, zero.clone()];
        let mut ru: [Vec<C64>; 4] = std::array::from_fn(|_| zero.clone());
        ru[ej2] = r.coeffs().to_vec();
        if j2.abs() == 2 {
            ru[ej2 - 2] = be.apply(Sym::Dinv2, &ru[ej2]);
        }
        let both: [Vec<C64>; 4] = std::array::from_fn(|i| be.add(&pu[i], &ru[i]));
        let nb = quadratic_terms(be, &both);
        let np = quadratic_terms(be, &pu);
        let nr = quadratic_terms(be, &ru);
        let out = be.sub(&be.sub(&nb[e], &np[e]), &nr[e]);
        SpectralField::from_coeffs(out, false)
    })
}

/// Feeds `e^{i l α}` and `e^{i m α}` (grid modes) through a bilinear operator
/// and returns the coefficient of `e^{i(l+m)α}`.
pub fn extract_kernel(
    grid: &Grid1D,
    op: impl Fn(&SpectralField, &SpectralField) -> SpectralField,
    l_mode: i64,
    m_mode: i64,
) -> Result<C64, KernelError> {
    let cut = (grid.n_points() / 3) as i64;
    for j in [l_mode, m_mode, l_mode + m_mode] {
        if j.abs() > cut {
            return Err(KernelError::Aliased(j));
        }
    }
    let fl = SpectralField::mode(grid, l_mode).map_err(|_| KernelError::Aliased(l_mode))?;
    let fm = SpectralField::mode(grid, m_mode).map_err(|_| KernelError::Aliased(m_mode))?;
    let out = op(&fl, &fm);
    let idx = grid.index_of_mode(l_mode + m_mode).ok_or(KernelError::Aliased(l_mode + m_mode))?;
    Ok(out.coeffs()[idx])
}

/// Parameters of the weights and normal-form kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub k0: f64,
    pub b: f64,
    pub eps: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub b0: f64,
    pub b1: f64,
    pub k1: Option<f64>,
}

impl KernelParams {
    pub fn new(k0: f64, b: f64, eps: f64) -> Result<Self, KernelError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(KernelError::BadRequest(format!("eps = {eps} outside (0,1)")));
        }
        let cb = resonance::critical_bonds(k0)?;
        let k1 = if b > 0.0 && b < cb.b0 { Some(resonance::k1_unchecked(k0, b)?) } else { None };
        let delta1 = k1.map_or(0.5, |k1| 0.5 * (1.0 - k0 / (20.0 * (k1 - k0))));
        Ok(Self { k0, b, eps, delta0: delta0(k0, b), delta1, b0: cb.b0, b1: cb.b1, k1 })
    }

    /// `b ∈ (0, b₀)`: the extra resonance `k₁` is active.
    pub fn twi_active(&self) -> bool {
        self.k1.is_some()
    }
}

/// Largest `δ = k₀/20·2^{-j}` for which the sampled lower bounds
/// `|r̂_{±1,−1}| ≥ γ|k|` and `|r̂_{−1,±1}(k,±k₀,k∓k₀)| ≥ γ|k∓k₀|` hold, with
/// `γ = 0.1·min(|1−c_g|, |1+c_g|)`.
pub fn delta0(k0: f64, b: f64) -> f64 {
    let cg = omega_derivs(k0, b)[1];
    let gamma = 0.1 * (1.0 - cg).abs().min((1.0 + cg).abs());
    let ok = |d: f64| {
        let n = 24;
        let pts: Vec<f64> = (-n..=n).map(|i| d * i as f64 / n as f64).collect();
        for &k in &pts {
            if k == 0.0 {
                continue;
            }
            for sgn in [1.0, -1.0] {
                for &s in &pts {
                    let l = sgn * k0 + s;
                    for j1 in [1, -1] {
                        if r_general(j1, -1, k, l, k - l, b).im.abs() < gamma * k.abs() {
                            return false;
                        }
                    }
                }
                for j2 in [1, -1] {
                    let kk = sgn * k0 + k;
                    if r_general(-1, j2, kk, sgn * k0, k, b).im.abs() < gamma * k.abs() {
                        return false;
                    }
                }
            }
        }
        true
    };
    let mut d = k0 / 20.0;
    for _ in 0..40 {
        if ok(d) {
            return d;
        }
        d *= 0.5;
    }
    d
}

/// `ζ̂_{j₁j₂ℓ}(k)`.
pub fn zeta_hat(j1: i32, j2: i32, ell: i32, k: f64, p: &KernelParams) -> f64 {
    match p.k1 {
        Some(k1) if j1 < 0 && j2 < 0 => {
            let w = k1 - p.k0;
            let l = ell as f64;
            1.0 - xi_hat((k - l * k1) / w, p.delta1) - xi_hat((k + l * w) / w, p.delta1)
        }
        _ => 1.0,
    }
}

/// `ρ̂^l_{j₁}(k)`.
pub fn rho_hat(j1: i32, l: u32, k: f64, p: &KernelParams) -> Result<f64, KernelError> {
    let k1 = match p.k1 {
        Some(k1) if j1 < 0 => k1,
        _ => return Ok(1.0),
    };
    let w = k1 - p.k0;
    let mut rho = 1.0;
    for ell in [1, -1] {
        let lf = ell as f64;
        let win = xi_hat((k + lf * w) / w, p.delta1);
        if win == 0.0 {
            continue;
        }
        let num = -q_total(j1, j1, -k + lf * p.k0, -k, p.b)?;
        let den = q_total(j1, j1, k, k - lf * p.k0, p.b)?;
        let ratio = num / den;
        let pw = ((-k + lf * p.k0) / k).powi(2 * l as i32);
        rho += (ratio.re * pw - 1.0) * win;
    }
    Ok(rho)
}

/// Numerator `𝔮^j_{j₁j₂}(k, ℓk₀, k−ℓk₀)`.
fn frak_q(j1: i32, j2: i32, j: u32, k: f64, m: f64, b: f64) -> Result<C64, KernelError> {
    match (j1.abs(), j) {
        (1, 1) => q_total(j1, j2, k, m, b),
        (2, 1) => Ok(q_total(j1, j2, k, m, b)? - q_symbol(j1, j2, 4, k, m, b)?),
        (2, 2) => Ok(ic(m) * q_symbol(j1, j2, 4, k, m, b)?),
        _ => Err(KernelError::BadRequest(format!("n̂^{j} undefined for |j1| = {}", j1.abs()))),
    }
}

fn n_hat_raw(j1: i32, j2: i32, ell: i32, j: u32, k: f64, p: &KernelParams) -> Result<C64, KernelError> {
    let l = ell as f64 * p.k0;
    let m = k - l;
    let weight = theta_hat(m, p.eps, p.delta0) - p.eps * xi_hat(m, p.delta0);
    if weight == 0.0 {
        return Ok(ZERO);
    }
    let zeta = zeta_hat(j1, j2, ell, k, p);
    if zeta == 0.0 {
        return Ok(ZERO);
    }
    let r = r_general(j1, j2, k, l, m, p.b);
    let q = frak_q(j1, j2, j, k, m, p.b)?;
    if r.norm() < 1e-13 {
        return Err(KernelError::NonRemovable { k });
    }
    Ok(q / r * zeta * weight / theta_hat(k, p.eps, p.delta0))
}

/// Normal-form kernel `n̂^j_{j₁j₂ℓ}(k)`.
pub fn n_hat(j1: i32, j2: i32, ell: i32, j: u32, k: f64, p: &KernelParams) -> Result<C64, KernelError> {
    check_pair(j1, j2)?;
    if ell != 1 && ell != -1 {
        return Err(KernelError::BadRequest(format!("ell = {ell}")));
    }
    let l = ell as f64 * p.k0;
    if k != 0.0 || r_general(j1, j2, 0.0, l, -l, p.b).norm() > 1e-13 {
        return n_hat_raw(j1, j2, ell, j, k, p);
    }
    // removable 0/0 at k = 0
    let h = 1e-6 * p.delta0;
    Ok(0.5 * (n_hat_raw(j1, j2, ell, j, h, p)? + n_hat_raw(j1, j2, ell, j, -h, p)?))
}

/// Lazily filled tables of `n̂` on a grid, one per `(j₁, j₂, ℓ, j)`.
pub struct KernelTable {
    params: KernelParams,
    ks: Vec<f64>,
    slots: Vec<OnceLock<Result<Vec<C64>, KernelError>>>,
}

impl KernelTable {
    pub fn new(params: KernelParams, grid: &Grid1D) -> Self {
        Self { params, ks: grid.wavenumbers(), slots: (0..32).map(|_| OnceLock::new()).collect() }
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    fn slot(j1: i32, j2: i32, ell: i32, j: u32) -> usize {
        let a = eq_index(j1).unwrap_or(0);
        let c = usize::from(j2 > 0);
        let e = usize::from(ell > 0);
        let f = (j as usize).saturating_sub(1) & 1;
        ((a * 2 + c) * 2 + e) * 2 + f
    }

    pub fn get(&self, j1: i32, j2: i32, ell: i32, j: u32) -> Result<&[C64], KernelError> {
        check_pair(j1, j2)?;
        let cell = &self.slots[Self::slot(j1, j2, ell, j)];
        let res = cell.get_or_init(|| {
            self.ks.iter().map(|&k| n_hat(j1, j2, ell, j, k, &self.params)).collect()
        });
        res.as_deref().map_err(Clone::clone)
    }
}
