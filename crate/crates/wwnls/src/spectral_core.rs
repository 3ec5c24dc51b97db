//! Periodic-grid Fourier infrastructure.
//!
//! Coefficients are normalized so that `f(x_n) = Σ_j c_j e^{i k_j x_n}`, i.e.
//! `c_j = (1/N) Σ_n f(x_n) e^{-i k_j x_n}`. Storage follows the FFT order:
//! index `i < N/2` holds mode `j = i`, the rest hold `j = i - N`. The Nyquist
//! index `N/2` is mode `-N/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance for the Hermitian symmetry check on real fields.
pub const HERMITIAN_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid size {0} is not a power of two (>= 2)")]
    NotPowerOfTwo(usize),
    #[error("grid length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("symbol is not finite at k = {k}")]
    NonFiniteSymbol { k: f64 },
    #[error("fields live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),
    #[error("mode {0} is not representable on the grid")]
    ModeOutOfRange(i64),
}

/// Uniform periodic grid on `[0, L)`.
#[derive(Clone)]
pub struct Grid1D {
    n: usize,
    length: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self, SpectralError> {
        if n < 2 || !n.is_power_of_two() {
            return Err(SpectralError::NotPowerOfTwo(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SpectralError::BadLength(length));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self { n, length, fwd, inv })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Integer mode number stored at `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        if idx < self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        self.mode(idx) as f64 * self.dk()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Storage index of mode `j`, if `-N/2 <= j < N/2`.
    pub fn index_of_mode(&self, j: i64) -> Option<usize> {
        let h = (self.n / 2) as i64;
        if j >= -h && j < h {
            Some(if j >= 0 { j as usize } else { (j + self.n as i64) as usize })
        } else {
            None
        }
    }

    /// Storage index of the mode `-j`; the Nyquist index maps to itself.
    pub fn mirror_index(&self, idx: usize) -> usize {
        (self.n - idx) % self.n
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|i| i as f64 * h).collect()
    }

    /// Physical samples to coefficients.
    pub fn forward(&self, values: &[C64]) -> Vec<C64> {
        let mut buf = values.to_vec();
        self.fwd.process(&mut buf);
        let s = 1.0 / self.n as f64;
        for c in &mut buf {
            *c *= s;
        }
        buf
    }

    /// Coefficients to physical samples.
    pub fn inverse(&self, coeffs: &[C64]) -> Vec<C64> {
        let mut buf = coeffs.to_vec();
        self.inv.process(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
        let s = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= s;
        }
    }

    pub fn inverse_in_place(&self, buf: &mut [C64]) {
        self.inv.process(buf);
    }

    /// 2/3-rule mask: keeps `|j| <= N/3`.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let cut = (self.n / 3) as i64;
        (0..self.n).map(|i| self.mode(i).abs() <= cut).collect()
    }

    /// Largest wavenumber kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> f64 {
        (self.n / 3) as f64 * self.dk()
    }

    fn check(&self, f: &SpectralField) -> Result<(), SpectralError> {
        if f.len() != self.n {
            Err(SpectralError::GridMismatch(self.n, f.len()))
        } else {
            Ok(())
        }
    }
}

/// Fourier coefficients of a sampled function with a reality flag.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<C64>,
    is_real: bool,
}

impl SpectralField {
    pub fn zeros(n: usize, is_real: bool) -> Self {
        Self { coeffs: vec![C64::new(0.0, 0.0); n], is_real }
    }

    /// Wraps coefficients; a real field gets its Hermitian symmetry enforced.
    pub fn from_coeffs(coeffs: Vec<C64>, is_real: bool) -> Self {
        let mut f = Self { coeffs, is_real };
        if is_real {
            f.symmetrize();
        }
        f
    }

    pub fn from_real_values(grid: &Grid1D, values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_coeffs(grid.forward(&v), true)
    }

    pub fn from_complex_values(grid: &Grid1D, values: &[C64]) -> Self {
        Self { coeffs: grid.forward(values), is_real: false }
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let v: Vec<f64> = grid.nodes().into_iter().map(f).collect();
        Self::from_real_values(grid, &v)
    }

    /// Pure grid mode `e^{i k_j α}`.
    pub fn mode(grid: &Grid1D, j: i64) -> Result<Self, SpectralError> {
        let idx = grid.index_of_mode(j).ok_or(SpectralError::ModeOutOfRange(j))?;
        let mut f = Self::zeros(grid.n_points(), false);
        f.coeffs[idx] = C64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// Mutable access; the caller is responsible for the reality flag.
    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn set_real(&mut self, is_real: bool) {
        self.is_real = is_real;
        if is_real {
            self.symmetrize();
        }
    }

    pub fn values(&self, grid: &Grid1D) -> Vec<C64> {
        grid.inverse(&self.coeffs)
    }

    pub fn real_values(&self, grid: &Grid1D) -> Vec<f64> {
        self.values(grid).into_iter().map(|z| z.re).collect()
    }

    /// Largest `|c(-k) - conj(c(k))|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.coeffs.len();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut d: f64 = 0.0;
        for i in 0..n {
            let j = (n - i) % n;
            d = d.max((self.coeffs[j] - self.coeffs[i].conj()).norm());
        }
        d / scale
    }

    /// Projects onto Hermitian-symmetric coefficients.
    pub fn symmetrize(&mut self) {
        hermitian_project(&mut self.coeffs);
    }

    pub fn scaled(&self, s: C64) -> Self {
        let real = self.is_real && s.im == 0.0;
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect(), is_real: real }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            is_real: self.is_real && other.is_real,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            is_real: self.is_real && other.is_real,
        }
    }

    /// `∫|f|² dα` by Parseval.
    pub fn l2_norm_sq(&self, grid: &Grid1D) -> f64 {
        grid.length() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self, grid: &Grid1D) -> f64 {
        self.l2_norm_sq(grid).sqrt()
    }

    /// Spectral Sobolev norm with weight `(1+k²)^s`.
    pub fn sobolev_norm(&self, grid: &Grid1D, s: f64) -> f64 {
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = grid.wavenumber(i);
                (1.0 + k * k).powf(s) * c.norm_sqr()
            })
            .sum();
        (grid.length() * sum).sqrt()
    }

    /// `∫ f g dα` for real fields, via Parseval.
    pub fn inner_real(&self, other: &Self, grid: &Grid1D) -> f64 {
        let s: f64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a.conj() * b).re).sum();
        grid.length() * s
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Averages each coefficient with the conjugate of its mirror; Nyquist made real.
pub fn hermitian_project(c: &mut [C64]) {
    let n = c.len();
    if n == 0 {
        return;
    }
    c[0].im = 0.0;
    for i in 1..n / 2 {
        let j = n - i;
        let a = 0.5 * (c[i] + c[j].conj());
        c[i] = a;
        c[j] = a.conj();
    }
    if n % 2 == 0 {
        c[n / 2].im = 0.0;
    }
}

/// Multiplies coefficient `k` by `symbol(k)`.
///
/// A real field stays real iff the symbol is Hermitian on the grid. The
/// Nyquist mode of a real field is then scaled by `Re symbol(k_N)`, so odd
/// symbols such as `ik` annihilate it.
pub fn apply_multiplier(
    grid: &Grid1D,
    symbol: impl Fn(f64) -> C64,
    f: &SpectralField,
) -> Result<SpectralField, SpectralError> {
    grid.check(f)?;
    let ks = grid.wavenumbers();
    let vals: Vec<C64> = ks.iter().map(|&k| symbol(k)).collect();
    for (k, v) in ks.iter().zip(&vals) {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(SpectralError::NonFiniteSymbol { k: *k });
        }
    }
    let hermitian = f.is_real()
        && ks.iter().zip(&vals).all(|(&k, v)| {
            let w = symbol(-k);
            (w - v.conj()).norm() <= 1e-14 * (1.0 + v.norm())
        });
    let mut out: Vec<C64> = f.coeffs().iter().zip(&vals).map(|(c, v)| c * v).collect();
    if hermitian {
        let ny = grid.nyquist_index();
        out[ny] = f.coeffs()[ny] * vals[ny].re;
        Ok(SpectralField::from_coeffs(out, true))
    } else {
        Ok(SpectralField::from_coeffs(out, false))
    }
}

pub fn derivative(grid: &Grid1D, f: &SpectralField) -> SpectralField {
    apply_multiplier(grid, |k| C64::new(0.0, k), f).expect("ik is finite")
}

/// `∂_α⁻¹` with symbol `1/(ik)` and zero mean output.
pub fn antiderivative(grid: &Grid1D, f: &SpectralField) -> SpectralField {
    apply_multiplier(grid, inv_ik, f).expect("1/(ik) is finite off k=0")
}

/// `∂_α⁻²` with symbol `-1/k²` and zero mean output.
pub fn antiderivative2(grid: &Grid1D, f: &SpectralField) -> SpectralField {
    apply_multiplier(grid, |k| if k == 0.0 { C64::new(0.0, 0.0) } else { C64::new(-1.0 / (k * k), 0.0) }, f)
        .expect("finite")
}

pub(crate) fn inv_ik(k: f64) -> C64 {
    if k == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        C64::new(0.0, -1.0 / k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Band {
    Low,
    High,
}

/// `P_{0,α}` (low: `|k| <= cut`) or `P_{α,∞}` (high: `|k| > cut`).
pub fn project(grid: &Grid1D, f: &SpectralField, cut: f64, band: Band) -> SpectralField {
    let keep = |k: f64| match band {
        Band::Low => k.abs() <= cut,
        Band::High => k.abs() > cut,
    };
    let out: Vec<C64> = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, &c)| if keep(grid.wavenumber(i)) { c } else { C64::new(0.0, 0.0) })
        .collect();
    SpectralField::from_coeffs(out, f.is_real())
}

/// Pointwise product in physical space, optionally 2/3-dealiased.
pub fn product(
    grid: &Grid1D,
    f: &SpectralField,
    g: &SpectralField,
    dealias: bool,
) -> Result<SpectralField, SpectralError> {
    grid.check(f)?;
    grid.check(g)?;
    let fv = grid.inverse(f.coeffs());
    let gv = grid.inverse(g.coeffs());
    let mut h: Vec<C64> = fv.iter().zip(&gv).map(|(a, b)| a * b).collect();
    grid.forward_in_place(&mut h);
    if dealias {
        for (c, keep) in h.iter_mut().zip(grid.dealias_mask()) {
            if !keep {
                *c = C64::new(0.0, 0.0);
            }
        }
    }
    Ok(SpectralField::from_coeffs(h, f.is_real() && g.is_real()))
}

/// `[M, g] f = M(g f) - g M(f)` with dealiased products.
pub fn commutator_apply(
    grid: &Grid1D,
    symbol: impl Fn(f64) -> C64 + Copy,
    g: &SpectralField,
    f: &SpectralField,
) -> Result<SpectralField, SpectralError> {
    if g.len() != f.len() {
        return Err(SpectralError::GridMismatch(g.len(), f.len()));
    }
    let gf = product(grid, g, f, true)?;
    let m_gf = apply_multiplier(grid, symbol, &gf)?;
    let mf = apply_multiplier(grid, symbol, f)?;
    let g_mf = product(grid, g, &mf, true)?;
    Ok(m_gf.sub(&g_mf))
}
