//! Dispersion relation `ω(k,b) = sgn(k)·sqrt((k+bk³)·tanh k)` and the related
//! symbols `σ`, `σ⁻¹`, `K̂₀`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral_core::C64;

/// Below this `|k|` the Taylor series of `ω` replaces the closed form.
const SERIES_CUTOFF: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("derivative order {0} not in {{1,2,3}}")]
    BadOrder(u32),
    #[error("invalid model parameters: {0}")]
    BadParams(String),
}

pub fn omega(k: f64, b: f64) -> f64 {
    let a = k.abs();
    if a == 0.0 {
        return 0.0;
    }
    k.signum() * ((a + b * a * a * a) * a.tanh()).sqrt()
}

/// `ω` and its first three derivatives at `k`.
pub fn omega_derivs(k: f64, b: f64) -> [f64; 4] {
    let a = k.abs();
    let s = if k < 0.0 { -1.0 } else { 1.0 };
    let [w, w1, w2, w3] = if a < SERIES_CUTOFF { series_derivs(a, b) } else { closed_derivs(a, b) };
    // ω odd, ω' even, ω'' odd, ω''' even
    [s * w, w1, s * w2, w3]
}

fn series_derivs(k: f64, b: f64) -> [f64; 4] {
    // ω = k + (a/2)k³ + (c/2 - a²/8)k⁵ with g = k²(1 + a k² + c k⁴)
    let a = b - 1.0 / 3.0;
    let c = 2.0 / 15.0 - b / 3.0;
    let c3 = 0.5 * a;
    let c5 = 0.5 * c - a * a / 8.0;
    let k2 = k * k;
    [
        k * (1.0 + c3 * k2 + c5 * k2 * k2),
        1.0 + 3.0 * c3 * k2 + 5.0 * c5 * k2 * k2,
        6.0 * c3 * k + 20.0 * c5 * k2 * k,
        6.0 * c3 + 60.0 * c5 * k2,
    ]
}

fn closed_derivs(k: f64, b: f64) -> [f64; 4] {
    let t = k.tanh();
    let ch = k.cosh();
    let s = if ch.is_finite() { 1.0 / (ch * ch) } else { 0.0 };
    let t2 = -2.0 * t * s;
    let t3 = -2.0 * s * s + 4.0 * t * t * s;
    let p = k + b * k * k * k;
    let p1 = 1.0 + 3.0 * b * k * k;
    let p2 = 6.0 * b * k;
    let p3 = 6.0 * b;
    let g = p * t;
    let g1 = p1 * t + p * s;
    let g2 = p2 * t + 2.0 * p1 * s + p * t2;
    let g3 = p3 * t + 3.0 * p2 * s + 3.0 * p1 * t2 + p * t3;
    let w = g.sqrt();
    let w1 = g1 / (2.0 * w);
    let w2 = (g2 - 2.0 * w1 * w1) / (2.0 * w);
    let w3 = (g3 - 6.0 * w1 * w2) / (2.0 * w);
    [w, w1, w2, w3]
}

pub fn omega_deriv(k: f64, b: f64, order: u32) -> Result<f64, DispersionError> {
    match order {
        1..=3 => Ok(omega_derivs(k, b)[order as usize]),
        _ => Err(DispersionError::BadOrder(order)),
    }
}

/// `∂_b ω(k,b)`.
pub fn omega_db(k: f64, b: f64) -> f64 {
    let a = k.abs();
    if a == 0.0 {
        return 0.0;
    }
    let w = omega(a, b);
    k.signum() * a * a * a * a.tanh() / (2.0 * w)
}

pub fn sigma(k: f64, b: f64) -> f64 {
    let a = k.abs();
    if a == 0.0 {
        return 1.0;
    }
    ((a + b * a * a * a) / a.tanh()).sqrt()
}

pub fn sigma_inv(k: f64, b: f64) -> f64 {
    1.0 / sigma(k, b)
}

/// Symbol of `K₀`.
pub fn k0_symbol(k: f64) -> C64 {
    C64::new(0.0, -k.tanh())
}

/// Carrier parameters with derived constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub k0: f64,
    pub b: f64,
    pub omega0: f64,
    pub cg: f64,
    pub omega2: f64,
}

impl ModelParams {
    pub fn new(k0: f64, b: f64) -> Result<Self, DispersionError> {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(DispersionError::BadParams(format!("k0 must be positive, got {k0}")));
        }
        if !(b.is_finite() && b >= 0.0) {
            return Err(DispersionError::BadParams(format!("b must be nonnegative, got {b}")));
        }
        let [w, w1, w2, _] = omega_derivs(k0, b);
        Ok(Self { k0, b, omega0: w, cg: w1, omega2: w2 })
    }
}
