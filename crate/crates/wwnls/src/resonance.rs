//! Zeros of the resonance function `r̂(k,b) = ω(k) − ω(k−k₀) − ω(k₀)` and the
//! resonance geometry built on them.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{omega, omega_db, omega_derivs};
use crate::kernels;
use crate::spectral_core::C64;

/// Bisection tolerance for zeros in `k`.
pub const ZERO_TOL: f64 = 1e-10;
/// Tolerance for the critical Bond numbers.
pub const BOND_TOL: f64 = 1e-8;
/// `|r̂|` (or `|∂_k r̂|` at `k₀`) below which a double zero is reported.
pub const TANGENCY_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonanceError {
    #[error("k_max = {k_max} too small: tail not settled (r̂ = {r}, ∂r̂ = {dr})")]
    TailNotSettled { k_max: f64, r: f64, dr: f64 },
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("b = {b} outside (0, b0 = {b0})")]
    OutsideDomain { b: f64, b0: f64 },
    #[error("bracketing failed: {0}")]
    Bracketing(String),
    #[error("no {0} for b >= 1/3")]
    NoInflection(&'static str),
    #[error("kernel evaluation failed: {0}")]
    Kernel(String),
}

pub fn r_hat(k: f64, b: f64, k0: f64) -> f64 {
    omega(k, b) - omega(k - k0, b) - omega(k0, b)
}

pub fn dr_hat(k: f64, b: f64, k0: f64) -> f64 {
    omega_derivs(k, b)[1] - omega_derivs(k - k0, b)[1]
}

fn d2r_hat(k: f64, b: f64, k0: f64) -> f64 {
    omega_derivs(k, b)[2] - omega_derivs(k - k0, b)[2]
}

fn dr_hat_db(k: f64, b: f64, k0: f64) -> f64 {
    omega_db(k, b) - omega_db(k - k0, b) - omega_db(k0, b)
}

/// `r̂_{j₁j₂}(k,l,m) = i(sgn j₁·ω(k) + ω(l) − sgn j₂·ω(m))`.
pub fn r_general(j1: i32, j2: i32, k: f64, l: f64, m: f64, b: f64) -> C64 {
    let s1 = j1.signum() as f64;
    let s2 = j2.signum() as f64;
    C64::new(0.0, s1 * omega(k, b) + omega(l, b) - s2 * omega(m, b))
}

/// `r̂(k)/(k−k₀)`, smooth through `k₀` where it equals `∂_k r̂(k₀)`.
fn reduced(k: f64, b: f64, k0: f64) -> f64 {
    let d = k - k0;
    if d.abs() < 1e-6 {
        dr_hat(k0, b, k0) + 0.5 * d2r_hat(k0, b, k0) * d
    } else {
        r_hat(k, b, k0) / d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    OnlyK0,
    TwoZeros,
    ExtraZeroPair,
    Tangency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub k0: f64,
    pub b: f64,
    pub k_max: f64,
    /// Zeros on `[k₀/2, k_max]`, ascending; always contains `k₀`.
    pub zeros: Vec<f64>,
    pub double_zeros: Vec<f64>,
    pub classification: Classification,
    pub k1: Option<f64>,
}

impl ResonanceReport {
    pub fn extra_zeros(&self) -> Vec<f64> {
        self.zeros.iter().copied().filter(|&z| z != self.k0).collect()
    }

    /// Distinct zeros on `(0, ∞)` including mirror images `k₀ − z`.
    pub fn positive_zero_count(&self) -> usize {
        let half = 0.5 * self.k0;
        self.zeros
            .iter()
            .map(|&z| if z == self.k0 || z > self.k0 || (z - half).abs() < 1e-9 { 1 } else { 2 })
            .sum()
    }
}

/// Default scan end: covers the growth `k₁ ~ 4 tanh(k₀)/(9k₀b)`.
pub fn default_k_max(k0: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return 40.0_f64.max(4.0 * k0);
    }
    (40.0 * (1.0_f64).max(4.0 / (9.0 * k0 * b))).max(4.0 * k0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub step: f64,
    pub tangency_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { step: 0.01, tangency_tol: TANGENCY_TOL }
    }
}

fn bisect(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn find_zeros(k0: f64, b: f64, k_max: f64) -> Result<ResonanceReport, ResonanceError> {
    find_zeros_with(k0, b, k_max, &ScanOptions::default())
}

pub fn find_zeros_with(
    k0: f64,
    b: f64,
    k_max: f64,
    opts: &ScanOptions,
) -> Result<ResonanceReport, ResonanceError> {
    if !(k0 > 0.0 && b >= 0.0 && k0.is_finite() && b.is_finite()) {
        return Err(ResonanceError::BadInput(format!("k0={k0}, b={b}")));
    }
    if !(k_max > k0) {
        return Err(ResonanceError::BadInput(format!("k_max={k_max} must exceed k0={k0}")));
    }
    let r_end = r_hat(k_max, b, k0);
    let dr_end = dr_hat(k_max, b, k0);
    let settled = if b > 0.0 { r_end > 0.0 && dr_end > 0.0 } else { r_end < 0.0 && dr_end <= 0.0 };
    if !settled {
        return Err(ResonanceError::TailNotSettled { k_max, r: r_end, dr: dr_end });
    }

    let half = 0.5 * k0;
    let n = ((k_max - half) / opts.step).ceil().max(2.0) as usize;
    let h = (k_max - half) / n as f64;
    let ks: Vec<f64> = (0..=n).map(|i| half + i as f64 * h).collect();
    let rho: Vec<f64> = ks.iter().map(|&k| reduced(k, b, k0)).collect();
    let f = |k: f64| reduced(k, b, k0);

    let mut zeros = vec![k0];
    let mut doubles = Vec::new();

    // transversal zeros of r̂/(k−k₀)
    for i in 0..n {
        let (a, c) = (rho[i], rho[i + 1]);
        if a == 0.0 && i > 0 {
            zeros.push(ks[i]);
        } else if a != 0.0 && c != 0.0 && (a > 0.0) != (c > 0.0) {
            zeros.push(bisect(f, ks[i], ks[i + 1], ZERO_TOL));
        }
    }

    // interior extrema of r̂/(k−k₀) without a sign change: close pairs or tangencies
    for i in 1..n {
        let (a, m, c) = (rho[i - 1], rho[i], rho[i + 1]);
        let same = (a > 0.0) == (m > 0.0) && (m > 0.0) == (c > 0.0);
        if !(same && m.abs() <= a.abs() && m.abs() <= c.abs()) {
            continue;
        }
        let fd = |k: f64| {
            let e = 1e-6 * (1.0 + k.abs());
            (f(k + e) - f(k - e)) / (2.0 * e)
        };
        let (lo, hi) = (ks[i - 1], ks[i + 1]);
        if (fd(lo) > 0.0) == (fd(hi) > 0.0) {
            continue;
        }
        let ke = bisect(fd, lo, hi, 1e-12);
        let re = f(ke);
        if (re > 0.0) != (m > 0.0) {
            zeros.push(bisect(f, lo, ke, ZERO_TOL));
            zeros.push(bisect(f, ke, hi, ZERO_TOL));
        } else if r_hat(ke, b, k0).abs() < opts.tangency_tol && (ke - k0).abs() > 1e-6 {
            zeros.push(ke);
            doubles.push(ke);
        }
    }

    // double zero at k₀ (∂_k r̂(k₀) = 0) and symmetric tangency at k₀/2
    if dr_hat(k0, b, k0).abs() < opts.tangency_tol {
        doubles.push(k0);
    }
    if r_hat(half, b, k0).abs() < opts.tangency_tol {
        zeros.push(half);
        doubles.push(half);
    }

    zeros.retain(|&z| z == k0 || (z - k0).abs() >= 1e-9);
    zeros.sort_by(f64::total_cmp);
    zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    doubles.sort_by(f64::total_cmp);
    doubles.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let extras: Vec<f64> = zeros.iter().copied().filter(|&z| z != k0).collect();
    let classification = if !doubles.is_empty() {
        Classification::Tangency
    } else if extras.is_empty() {
        Classification::OnlyK0
    } else if extras.iter().any(|&z| z < k0) {
        Classification::ExtraZeroPair
    } else {
        Classification::TwoZeros
    };
    let k1 = extras.iter().copied().filter(|&z| z > k0).fold(None, |acc: Option<f64>, z| {
        Some(acc.map_or(z, |a| a.max(z)))
    });
    Ok(ResonanceReport { k0, b, k_max, zeros, double_zeros: doubles, classification, k1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalBonds {
    pub k0: f64,
    pub b0: f64,
    pub b1: f64,
}

/// How the extra zeros rearrange at a transition.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Fold {
    /// An extra zero passes through `k₀` (double zero at `k₀`).
    AtK0,
    /// A mirror pair is born/annihilated at `k₀/2`.
    AtHalf,
    /// Two zeros merge at an interior point.
    Interior(f64),
}

fn scan_extras(k0: f64, b: f64) -> Result<Vec<f64>, ResonanceError> {
    let k_max = default_k_max(k0, b);
    let opts = ScanOptions { step: 0.01f64.min(k0 / 50.0), tangency_tol: 0.0 };
    Ok(find_zeros_with(k0, b, k_max, &opts)?.extra_zeros())
}

fn only_k1(k0: f64, extras: &[f64]) -> bool {
    extras.len() == 1 && extras[0] > k0
}

fn locate_fold(k0: f64, extras: &[f64]) -> Fold {
    let half = 0.5 * k0;
    let mut best = (f64::INFINITY, Fold::AtK0);
    for &z in extras {
        let d = (z - k0).abs();
        if d < best.0 {
            best = (d, Fold::AtK0);
        }
        if z < k0 {
            let d = 2.0 * (z - half);
            if d < best.0 {
                best = (d, Fold::AtHalf);
            }
        }
    }
    for w in extras.windows(2) {
        let d = w[1] - w[0];
        if d < best.0 {
            best = (d, Fold::Interior(0.5 * (w[0] + w[1])));
        }
    }
    best.1
}

fn newton_1d(f: impl Fn(f64) -> f64, mut x: f64) -> Option<f64> {
    for _ in 0..60 {
        let fx = f(x);
        let h = 1e-7 * (1.0 + x.abs());
        let d = (f(x + h) - f(x - h)) / (2.0 * h);
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let dx = fx / d;
        x -= dx;
        if dx.abs() < 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    Some(x)
}

/// Newton on `(r̂, ∂_k r̂) = 0` in `(k, b)`.
fn newton_fold(k0: f64, mut k: f64, mut b: f64) -> Option<(f64, f64)> {
    for _ in 0..60 {
        let f1 = r_hat(k, b, k0);
        let f2 = dr_hat(k, b, k0);
        let hb = 1e-7 * (1.0 + b.abs());
        let a11 = f2;
        let a12 = dr_hat_db(k, b, k0);
        let a21 = d2r_hat(k, b, k0);
        let a22 = (dr_hat(k, b + hb, k0) - dr_hat(k, b - hb, k0)) / (2.0 * hb);
        let det = a11 * a22 - a12 * a21;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dk = (f1 * a22 - f2 * a12) / det;
        let db = (a11 * f2 - a21 * f1) / det;
        k -= dk;
        b -= db;
        if dk.abs() < 1e-14 * (1.0 + k.abs()) && db.abs() < 1e-15 {
            break;
        }
    }
    Some((k, b))
}

/// Refines a transition bracketed by `[lo, hi]`; `extras_rich` are the extra
/// zeros at whichever end has more of them.
fn refine(k0: f64, lo: f64, hi: f64, extras_rich: &[f64]) -> Result<f64, ResonanceError> {
    let mid = 0.5 * (lo + hi);
    let b = match locate_fold(k0, extras_rich) {
        Fold::AtK0 => newton_1d(|b| dr_hat(k0, b, k0), mid),
        Fold::AtHalf => newton_1d(|b| r_hat(0.5 * k0, b, k0), mid),
        Fold::Interior(k) => newton_fold(k0, k, mid).map(|(_, b)| b),
    }
    .ok_or_else(|| ResonanceError::Bracketing(format!("Newton failed near b={mid}")))?;
    let slack = 1e-5 + (hi - lo);
    if !(b > lo - slack && b < hi + slack) {
        return Err(ResonanceError::Bracketing(format!(
            "Newton left the bracket [{lo}, {hi}]: b={b}"
        )));
    }
    Ok(b)
}

/// Bisects a predicate change between `lo` (pred true) and `hi` (pred false).
fn bisect_pred(
    mut lo: f64,
    mut hi: f64,
    pred: impl Fn(f64) -> Result<bool, ResonanceError>,
    width: f64,
) -> Result<(f64, f64), ResonanceError> {
    while hi - lo > width {
        let m = 0.5 * (lo + hi);
        if pred(m)? {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok((lo, hi))
}

fn cache() -> &'static Mutex<HashMap<u64, CriticalBonds>> {
    static C: OnceLock<Mutex<HashMap<u64, CriticalBonds>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Critical Bond numbers: `b₀` ends the range `(0,b₀)` where `k₁ > k₀` is the
/// only extra zero, `b₁` starts the range `(b₁,∞)` without extra zeros.
pub fn critical_bonds(k0: f64) -> Result<CriticalBonds, ResonanceError> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(ResonanceError::BadInput(format!("k0={k0}")));
    }
    if let Some(c) = cache().lock().unwrap().get(&k0.to_bits()) {
        return Ok(*c);
    }
    let c = compute_critical_bonds(k0)?;
    cache().lock().unwrap().insert(k0.to_bits(), c);
    Ok(c)
}

fn compute_critical_bonds(k0: f64) -> Result<CriticalBonds, ResonanceError> {
    const B_TOP: f64 = 1.0 / 3.0;
    const STEPS: usize = 160;
    let b_lo = 2e-3;
    let bs: Vec<f64> = (0..=STEPS).map(|i| b_lo + (B_TOP - b_lo) * i as f64 / STEPS as f64).collect();
    let mut trace = Vec::with_capacity(bs.len());
    for &b in &bs {
        trace.push(scan_extras(k0, b)?);
    }
    if !only_k1(k0, &trace[0]) {
        return Err(ResonanceError::Bracketing(format!(
            "expected a single zero k1 > k0 at b={b_lo}, found {:?}",
            trace[0]
        )));
    }
    if !trace[STEPS].is_empty() {
        return Err(ResonanceError::Bracketing(format!("extra zeros persist at b=1/3: {:?}", trace[STEPS])));
    }
    let i0 = trace.iter().position(|e| !only_k1(k0, e)).expect("last entry fails");
    let i1 = trace.iter().rposition(|e| !e.is_empty()).expect("first entry has k1");

    let width = 1e-7;
    let (lo0, hi0) = bisect_pred(bs[i0 - 1], bs[i0], |b| Ok(only_k1(k0, &scan_extras(k0, b)?)), width)?;
    let (e_lo, e_hi) = (scan_extras(k0, lo0)?, scan_extras(k0, hi0)?);
    let rich0 = if e_hi.len() > e_lo.len() { e_hi } else { e_lo };
    let b0 = refine(k0, lo0, hi0, &rich0)?;

    let (lo1, hi1) = bisect_pred(bs[i1], bs[i1 + 1], |b| Ok(!scan_extras(k0, b)?.is_empty()), width)?;
    let b1 = refine(k0, lo1, hi1, &scan_extras(k0, lo1)?)?;

    if !(0.0 < b0 && b0 < b1 && b1 < B_TOP) {
        return Err(ResonanceError::Bracketing(format!("inconsistent b0={b0}, b1={b1}")));
    }
    Ok(CriticalBonds { k0, b0, b1 })
}

/// `k₁(b)`: the zero of `r̂` beyond `k₀`, without the domain check.
pub fn k1_unchecked(k0: f64, b: f64) -> Result<f64, ResonanceError> {
    if !(b > 0.0) {
        return Err(ResonanceError::BadInput(format!("b={b} must be positive")));
    }
    let f = |k: f64| r_hat(k, b, k0);
    let mut left = 2.0 * k0;
    if f(left) >= 0.0 {
        left = k0 + 1e-6 * k0;
        if f(left) >= 0.0 {
            return Err(ResonanceError::Bracketing(format!("r̂ not negative right of k0 for b={b}")));
        }
    }
    let tilde = 4.0 * k0.tanh() / (9.0 * k0 * b);
    let mut right = (2.0 * k0).max(tilde);
    let mut guard = 0;
    while f(right) <= 0.0 {
        right *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(ResonanceError::Bracketing(format!("no sign change up to k={right}")));
        }
    }
    if right <= left {
        right = 2.0 * k0;
    }
    Ok(bisect(f, left, right, ZERO_TOL))
}

/// `k₁(b)` for `b ∈ (0, b₀(k₀))`.
pub fn k1_of_b(k0: f64, b: f64) -> Result<f64, ResonanceError> {
    let c = critical_bonds(k0)?;
    if !(b > 0.0 && b < c.b0) {
        return Err(ResonanceError::OutsideDomain { b, b0: c.b0 });
    }
    k1_unchecked(k0, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inflection {
    pub k3: f64,
    pub k4: f64,
}

/// `k₃`: zero of `∂²_kω`; `k₄ > k₃`: zero of `∂³_kω`.
pub fn inflection_points(b: f64) -> Result<Inflection, ResonanceError> {
    if b >= 1.0 / 3.0 {
        return Err(ResonanceError::NoInflection("k3"));
    }
    if !(b > 0.0) {
        return Err(ResonanceError::BadInput(format!("b={b} must lie in (0,1/3)")));
    }
    let w2 = |k: f64| omega_derivs(k, b)[2];
    let w3 = |k: f64| omega_derivs(k, b)[3];
    let mut hi = 1.0;
    while w2(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(ResonanceError::Bracketing("k3".into()));
        }
    }
    let k3 = bisect(w2, 1e-6, hi, 1e-13);
    let mut hi4 = 2.0 * k3;
    while w3(hi4) >= 0.0 {
        hi4 *= 2.0;
        if hi4 > 1e12 {
            return Err(ResonanceError::Bracketing("k4".into()));
        }
    }
    let k4 = bisect(w3, k3, hi4, 1e-13);
    Ok(Inflection { k3, k4 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonresonanceReport {
    pub ok: bool,
    pub reasons: Vec<String>,
}

/// Checks `∂_kω(0) ≠ ∂_kω(k₀)`, `ω''(k₀) ≠ 0` and `±ω(mk₀) ≠ mω(k₀)` for
/// `2 ≤ m < M`, each with margin `tol`.
pub fn nonresonance_check(k0: f64, b: f64, m_max: u32, tol: f64) -> NonresonanceReport {
    let mut reasons = Vec::new();
    let [w0, w1, w2, _] = omega_derivs(k0, b);
    if (w1 - 1.0).abs() < tol {
        reasons.push(format!("nrb1: group velocity {w1} equals dω/dk(0)=1"));
    }
    if w2.abs() < tol {
        reasons.push(format!("nrb3: d²ω/dk²(k0) = {w2}"));
    }
    for m in 2..m_max {
        let wm = omega(m as f64 * k0, b);
        let target = m as f64 * w0;
        if (wm - target).abs() < tol || (wm + target).abs() < tol {
            reasons.push(format!("nrb4: ω({m}k0) = {wm} vs {m}ω(k0) = {target}"));
        }
    }
    NonresonanceReport { ok: reasons.is_empty(), reasons }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub k0: f64,
    pub b: f64,
    pub stable: bool,
    /// Ratio at the primary non-trivial resonance, if any.
    pub ratio: Option<f64>,
    /// `(k₁, ratio)` for every non-trivial resonance on `[k₀/2, ∞)`.
    pub resonances: Vec<(f64, f64)>,
    pub characterization_agrees: bool,
}

/// `b̂₁₁(k₁,k₀,k₁−k₀) / b̂₁₁(−k₁+k₀,k₀,−k₁)`.
pub fn stability_ratio(k0: f64, k1: f64, b: f64) -> Result<f64, ResonanceError> {
    let num = kernels::b11(k1, k0, k1 - k0, b);
    let den = kernels::b11(k0 - k1, k0, -k1, b);
    if den.norm() < 1e-300 {
        return Err(ResonanceError::Kernel(format!("zero denominator at k1={k1}")));
    }
    let r = num / den;
    if r.im.abs() > 1e-8 * (1.0 + r.re.abs()) {
        return Err(ResonanceError::Kernel(format!("ratio not real: {r}")));
    }
    Ok(r.re)
}

pub fn stability(k0: f64, b: f64) -> Result<StabilityReport, ResonanceError> {
    let report = find_zeros(k0, b, default_k_max(k0, b))?;
    let mut resonances = Vec::new();
    let mut ratio_stable = true;
    let mut max_stable = true;
    for z in report.extra_zeros() {
        if (z - 0.5 * k0).abs() < 1e-9 {
            continue;
        }
        let r = stability_ratio(k0, z, b)?;
        resonances.push((z, r));
        ratio_stable &= r < 0.0;
        max_stable &= k0 < z.max(k0 - z);
    }
    let ratio = report.k1.and_then(|k1| resonances.iter().find(|(z, _)| *z == k1).map(|p| p.1));
    let ratio = ratio.or_else(|| resonances.first().map(|p| p.1));
    Ok(StabilityReport {
        k0,
        b,
        stable: ratio_stable,
        ratio,
        resonances,
        characterization_agrees: ratio_stable == max_stable,
    })
}
