//! The quadratic-truncated diagonalized system, written once against a small
//! backend trait so that the same term list drives both the pseudo-spectral
//! simulator and exact sparse-mode kernel extraction.

use crate::dispersion::{k0_symbol, omega, sigma};
use crate::spectral_core::{Grid1D, C64};

/// Fourier multipliers appearing in the evolution equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sym {
    Dx,
    Dinv,
    Dinv2,
    K0,
    Sigma,
    SigmaInv,
    /// `1 + K̂₀² = sech²`
    OnePlusK0Sq,
}

impl Sym {
    pub const ALL: [Sym; 7] =
        [Sym::Dx, Sym::Dinv, Sym::Dinv2, Sym::K0, Sym::Sigma, Sym::SigmaInv, Sym::OnePlusK0Sq];

    pub fn eval(self, k: f64, b: f64) -> C64 {
        let zero = C64::new(0.0, 0.0);
        match self {
            Sym::Dx => C64::new(0.0, k),
            Sym::Dinv => {
                if k == 0.0 {
                    zero
                } else {
                    C64::new(0.0, -1.0 / k)
                }
            }
            Sym::Dinv2 => {
                if k == 0.0 {
                    zero
                } else {
                    C64::new(-1.0 / (k * k), 0.0)
                }
            }
            Sym::K0 => k0_symbol(k),
            Sym::Sigma => C64::new(sigma(k, b), 0.0),
            Sym::SigmaInv => C64::new(1.0 / sigma(k, b), 0.0),
            Sym::OnePlusK0Sq => {
                let c = k.cosh();
                C64::new(if c.is_finite() { 1.0 / (c * c) } else { 0.0 }, 0.0)
            }
        }
    }
}

/// Field arithmetic needed by [`quadratic_terms`].
pub trait Backend {
    type Field: Clone;
    fn apply(&self, s: Sym, f: &Self::Field) -> Self::Field;
    fn mul(&self, f: &Self::Field, g: &Self::Field) -> Self::Field;
    fn add(&self, f: &Self::Field, g: &Self::Field) -> Self::Field;
    fn sub(&self, f: &Self::Field, g: &Self::Field) -> Self::Field;
    fn scale(&self, f: &Self::Field, c: f64) -> Self::Field;
    fn bond(&self) -> f64;
}

/// `σK₀[K₀, y]g − σ(1+K₀²)(y g)`, the commutator block shared by several terms.
fn comm_block<B: Backend>(be: &B, y: &B::Field, g: &B::Field) -> B::Field {
    let yg = be.mul(y, g);
    let k0g = be.apply(Sym::K0, g);
    let comm = be.sub(&be.apply(Sym::K0, &yg), &be.mul(y, &k0g));
    let a = be.apply(Sym::Sigma, &be.apply(Sym::K0, &comm));
    let c = be.apply(Sym::Sigma, &be.apply(Sym::OnePlusK0Sq, &yg));
    be.sub(&a, &c)
}

/// Quadratic nonlinearity of `(u₋₁, u₁, u₋₂, u₂)`; linear parts and the
/// dropped remainder terms are not included.
pub fn quadratic_terms<B: Backend>(be: &B, u: &[B::Field; 4]) -> [B::Field; 4] {
    let [um1, up1, um2, up2] = u;
    let b = be.bond();

    // u±1 block
    let s = be.add(um1, up1);
    let y = be.apply(Sym::SigmaInv, &be.sub(um1, up1));
    let k0s = be.apply(Sym::K0, &s);
    let f1 = be.scale(&be.apply(Sym::Dx, &be.sub(&be.mul(&k0s, &k0s), &be.mul(&s, &s))), 0.25);
    let g1 = be.scale(&be.apply(Sym::Dx, &comm_block(be, &y, &s)), 0.5);

    // u±2 block
    let s2 = be.add(um2, up2);
    let d2 = be.apply(Sym::SigmaInv, &be.sub(um2, up2));
    let i2 = be.apply(Sym::Dinv2, &s2);
    let j2 = be.apply(Sym::Dinv, &s2);
    let ed = be.apply(Sym::Dinv, &d2);

    // ½∂([σ, ∂⁻²S₂] σ⁻¹D)
    let tb = {
        let i2d2 = be.mul(&i2, &d2);
        let comm = be.sub(&be.apply(Sym::Sigma, &i2d2), &be.mul(&i2, &be.apply(Sym::Sigma, &d2)));
        be.scale(&be.apply(Sym::Dx, &comm), 0.5)
    };
    let tc = be.scale(&be.apply(Sym::Dx, &be.mul(&be.apply(Sym::K0, &ed), &d2)), 0.5);
    let td = {
        let k0dd = be.apply(Sym::K0, &be.apply(Sym::Dx, &d2));
        be.scale(&be.apply(Sym::Dx, &be.mul(&d2, &k0dd)), -0.5 * b)
    };
    let te = {
        let k0j = be.apply(Sym::K0, &j2);
        be.scale(&be.apply(Sym::Dx, &be.sub(&be.mul(&k0j, &k0j), &be.mul(&j2, &j2))), 0.5)
    };
    let tf = be.scale(&be.apply(Sym::Dx, &be.apply(Sym::Dx, &comm_block(be, &y, &j2))), 0.5);
    let tg = be.scale(&be.apply(Sym::Dx, &comm_block(be, &ed, &j2)), 0.5);
    let ta_m = be.scale(&be.apply(Sym::Dx, &be.mul(&i2, um2)), -1.0);
    let ta_p = be.scale(&be.apply(Sym::Dx, &be.mul(&i2, up2)), -1.0);

    let common = be.add(&be.add(&tc, &td), &te);
    let fg = be.add(&tf, &tg);
    let n_m2 = be.add(&be.add(&be.sub(&ta_m, &tb), &common), &fg);
    let n_p2 = be.sub(&be.add(&be.add(&ta_p, &tb), &common), &fg);

    [be.add(&f1, &g1), be.sub(&f1, &g1), n_m2, n_p2]
}

/// Linear symbol of component `c` (0..4 for `u₋₁, u₁, u₋₂, u₂`): `∓iω(k)`.
pub fn linear_symbol(c: usize, k: f64, b: f64) -> C64 {
    let w = omega(k, b);
    if c % 2 == 0 {
        C64::new(0.0, -w)
    } else {
        C64::new(0.0, w)
    }
}

/// Dense pseudo-spectral backend on a periodic grid with 2/3 dealiasing.
pub struct GridBackend {
    grid: Grid1D,
    b: f64,
    tables: Vec<Vec<C64>>,
    mask: Vec<bool>,
    dealias: bool,
}

impl GridBackend {
    pub fn new(grid: Grid1D, b: f64, dealias: bool) -> Self {
        let ks = grid.wavenumbers();
        let ny = grid.nyquist_index();
        let tables = Sym::ALL
            .iter()
            .map(|s| {
                let mut t: Vec<C64> = ks.iter().map(|&k| s.eval(k, b)).collect();
                // Real fields keep a real Nyquist coefficient.
                t[ny] = C64::new(t[ny].re, 0.0);
                t
            })
            .collect();
        let mask = grid.dealias_mask();
        Self { grid, b, tables, mask, dealias }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn table(&self, s: Sym) -> &[C64] {
        &self.tables[s as usize]
    }
}

impl Backend for GridBackend {
    type Field = Vec<C64>;

    fn apply(&self, s: Sym, f: &Vec<C64>) -> Vec<C64> {
        f.iter().zip(self.table(s)).map(|(a, b)| a * b).collect()
    }

    fn mul(&self, f: &Vec<C64>, g: &Vec<C64>) -> Vec<C64> {
        let mut fv = f.clone();
        let mut gv = g.clone();
        self.grid.inverse_in_place(&mut fv);
        self.grid.inverse_in_place(&mut gv);
        for (a, b) in fv.iter_mut().zip(&gv) {
            *a *= b;
        }
        self.grid.forward_in_place(&mut fv);
        if self.dealias {
            for (c, &keep) in fv.iter_mut().zip(&self.mask) {
                if !keep {
                    *c = C64::new(0.0, 0.0);
                }
            }
        }
        fv
    }

    fn add(&self, f: &Vec<C64>, g: &Vec<C64>) -> Vec<C64> {
        f.iter().zip(g).map(|(a, b)| a + b).collect()
    }

    fn sub(&self, f: &Vec<C64>, g: &Vec<C64>) -> Vec<C64> {
        f.iter().zip(g).map(|(a, b)| a - b).collect()
    }

    fn scale(&self, f: &Vec<C64>, c: f64) -> Vec<C64> {
        f.iter().map(|a| a * c).collect()
    }

    fn bond(&self) -> f64 {
        self.b
    }
}

/// A finite sum `Σ c_k e^{ikα}` with arbitrary real `k`, sorted by `k`.
pub type SparseField = Vec<(f64, C64)>;

/// Exact arithmetic on finite exponential sums; no grid, no aliasing.
pub struct SparseBackend {
    b: f64,
}

impl SparseBackend {
    pub fn new(b: f64) -> Self {
        Self { b }
    }

    fn merge(mut terms: Vec<(f64, C64)>) -> SparseField {
        terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: SparseField = Vec::with_capacity(terms.len());
        for (k, c) in terms {
            match out.last_mut() {
                Some((k0, c0)) if (k - *k0).abs() <= 1e-12 * (1.0 + k.abs()) => *c0 += c,
                _ => out.push((k, c)),
            }
        }
        out
    }
}

/// Coefficient of `e^{ikα}` in a sparse field.
pub fn sparse_coeff(f: &SparseField, k: f64) -> C64 {
    f.iter()
        .filter(|(q, _)| (q - k).abs() <= 1e-12 * (1.0 + k.abs()))
        .map(|(_, c)| *c)
        .sum()
}

impl Backend for SparseBackend {
    type Field = SparseField;

    fn apply(&self, s: Sym, f: &SparseField) -> SparseField {
        f.iter().map(|&(k, c)| (k, c * s.eval(k, self.b))).collect()
    }

    fn mul(&self, f: &SparseField, g: &SparseField) -> SparseField {
        let mut t = Vec::with_capacity(f.len() * g.len());
        for &(k, a) in f {
            for &(q, c) in g {
                t.push((k + q, a * c));
            }
        }
        Self::merge(t)
    }

    fn add(&self, f: &SparseField, g: &SparseField) -> SparseField {
        Self::merge(f.iter().chain(g.iter()).copied().collect())
    }

    fn sub(&self, f: &SparseField, g: &SparseField) -> SparseField {
        Self::merge(f.iter().copied().chain(g.iter().map(|&(k, c)| (k, -c))).collect())
    }

    fn scale(&self, f: &SparseField, c: f64) -> SparseField {
        f.iter().map(|&(k, a)| (k, a * c)).collect()
    }

    fn bond(&self) -> f64 {
        self.b
    }
}
