//! Rational (Malmquist–Takenaka) basis on the real line.
//!
//! `ρ_k(x) = (πℓ)^{-1/2} (1 + ix/ℓ)^k / (1 − ix/ℓ)^{k+1}`, `k ∈ ℤ`, is an orthonormal basis of
//! `L²(ℝ)`; the `k ≥ 0` half spans the Hardy space. Under `x = ℓ tan(θ/2)` a function
//! `f = Σ a_k ρ_k` corresponds to the Fourier series `F(θ) = Σ a_k e^{ikθ} = √(πℓ)(1 − ix/ℓ) f(x)`,
//! so multiplication by a bounded `q` is the Laurent operator with symbol `q(ℓ tan(θ/2))` and the
//! Cauchy–Szegő projection is exact truncation to `k ≥ 0`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

/// Diagonal entry of `−i∂` at index `k`.
pub fn d_diag(k: i64, scale: f64) -> f64 {
    (2 * k + 1) as f64 / (2.0 * scale)
}

/// Coupling of `−i∂` between indices `k` and `k + 1` (symmetric).
pub fn d_off(k: i64, scale: f64) -> f64 {
    (k + 1) as f64 / (2.0 * scale)
}

/// Eigen-decomposition of `−i∂` compressed to the first `m` Hardy modes.
///
/// The compression is real symmetric and positive; its spectral calculus supplies every
/// frequency-domain operation (Sobolev weights, tail projections, dispersive propagators).
#[derive(Debug)]
pub struct LineBasis {
    pub m: usize,
    pub scale: f64,
    pub evals: Vec<f64>,
    pub evecs: DMatrix<f64>,
}

impl LineBasis {
    fn new(m: usize, scale: f64) -> Self {
        let mut d = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            d[(k, k)] = d_diag(k as i64, scale);
            if k + 1 < m {
                let o = d_off(k as i64, scale);
                d[(k, k + 1)] = o;
                d[(k + 1, k)] = o;
            }
        }
        let eig = SymmetricEigen::new(d);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let evals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let evecs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
        Self { m, scale, evals, evecs }
    }

    /// Coefficients of `a` in the eigenbasis: `Vᵀa`.
    pub fn project(&self, a: &[C64]) -> Vec<C64> {
        let m = self.m;
        let mut out = vec![C64::new(0.0, 0.0); m];
        for (c, o) in out.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for r in 0..m.min(a.len()) {
                s += a[r] * self.evecs[(r, c)];
            }
            *o = s;
        }
        out
    }

    /// `V diag(g(λ)) Vᵀ a`.
    pub fn apply(&self, a: &[C64], g: impl Fn(f64) -> C64) -> Vec<C64> {
        let p = self.project(a);
        let m = self.m;
        let w: Vec<C64> = p.iter().zip(&self.evals).map(|(c, &l)| c * g(l)).collect();
        let mut out = vec![C64::new(0.0, 0.0); m];
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for c in 0..m {
                s += w[c] * self.evecs[(r, c)];
            }
            *o = s;
        }
        out
    }

    /// Dense matrix of `g(−i∂)` on the Hardy block.
    pub fn function_matrix(&self, g: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let m = self.m;
        let gv: Vec<C64> = self.evals.iter().map(|&l| g(l)).collect();
        DMatrix::from_fn(m, m, |r, c| {
            let mut s = C64::new(0.0, 0.0);
            for (i, gi) in gv.iter().enumerate() {
                s += gi * (self.evecs[(r, i)] * self.evecs[(c, i)]);
            }
            s
        })
    }
}

/// Shared, memoized eigen-decomposition for `(m, scale)`.
pub fn basis(m: usize, scale: f64) -> Arc<LineBasis> {
    type Cache = Mutex<HashMap<(usize, u64), Arc<LineBasis>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (m, scale.to_bits());
    if let Some(b) = cache.lock().expect("line basis cache poisoned").get(&key) {
        return b.clone();
    }
    let b = Arc::new(LineBasis::new(m, scale));
    cache
        .lock()
        .expect("line basis cache poisoned")
        .entry(key)
        .or_insert(b)
        .clone()
}

/// `(−i∂ a)_k` on an index window `k ∈ [lo, lo + a.len())`, coefficients outside treated as zero.
pub fn apply_d(a: &[C64], lo: i64, scale: f64) -> Vec<C64> {
    let len = a.len();
    let mut out = vec![C64::new(0.0, 0.0); len];
    for i in 0..len {
        let k = lo + i as i64;
        let mut s = a[i] * d_diag(k, scale);
        if i + 1 < len {
            s += a[i + 1] * d_off(k, scale);
        }
        if i > 0 {
            s += a[i - 1] * d_off(k - 1, scale);
        }
        out[i] = s;
    }
    out
}

/// Multiplication by `x` on a Hardy coefficient vector (the generator of left translations in
/// frequency): `(Xa)_k = −iℓ [a_k + 2 Σ_{j>k} (−1)^{j−k} a_j]`. Upper triangular.
pub fn x_hardy(a: &[C64], scale: f64) -> Vec<C64> {
    let len = a.len();
    let mut out = vec![C64::new(0.0, 0.0); len];
    // alternating suffix sum s_k = Σ_{j>k} (−1)^{j−k} a_j  satisfies  s_k = −(a_{k+1} + s_{k+1})
    let mut s = C64::new(0.0, 0.0);
    for k in (0..len).rev() {
        out[k] = C64::new(0.0, -scale) * (a[k] + 2.0 * s);
        s = -(a[k] + s);
    }
    out
}

/// Dense matrix of [`x_hardy`] on `m` modes.
pub fn x_matrix(m: usize, scale: f64) -> DMatrix<C64> {
    DMatrix::from_fn(m, m, |k, j| {
        if j < k {
            C64::new(0.0, 0.0)
        } else if j == k {
            C64::new(0.0, -scale)
        } else {
            let sign = if (j - k) % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(0.0, -2.0 * scale * sign)
        }
    })
}

/// Multiplication by `x` on a full coefficient vector in increasing index order.
///
/// `xf ∈ L²` requires `F(π) = Σ(−1)^k a_k = 0`; the two one-sided recurrences then agree and
/// their average is returned (it is the principal-value choice otherwise).
pub fn x_full(a: &[C64], scale: f64) -> Vec<C64> {
    let len = a.len();
    // from +∞: G_k = −i[a_k + 2 Σ_{j>k} (−1)^{j−k} a_j]
    let mut plus = vec![C64::new(0.0, 0.0); len];
    let mut s = C64::new(0.0, 0.0);
    for i in (0..len).rev() {
        plus[i] = C64::new(0.0, -1.0) * (a[i] + 2.0 * s);
        s = -(a[i] + s);
    }
    // from −∞: G_k = i[a_k + 2 Σ_{j<k} (−1)^{k−j} a_j]
    let mut minus = vec![C64::new(0.0, 0.0); len];
    let mut s = C64::new(0.0, 0.0);
    for i in 0..len {
        minus[i] = C64::new(0.0, 1.0) * (a[i] + 2.0 * s);
        s = -(a[i] + s);
    }
    plus.iter()
        .zip(&minus)
        .map(|(p, m)| (p + m) * (0.5 * scale))
        .collect()
}

/// `F(π) = Σ (−1)^k a_k` over an index window starting at `lo`.
pub fn value_at_infinity(a: &[C64], lo: i64) -> C64 {
    a.iter()
        .enumerate()
        .map(|(i, c)| if (lo + i as i64).rem_euclid(2) == 0 { *c } else { -c })
        .sum()
}

/// `ρ_k(z)` summed against Hardy coefficients, for `Im z > 0` (Horner in `u = (1+iz/ℓ)/(1−iz/ℓ)`).
pub fn eval_hardy(a: &[C64], z: C64, scale: f64) -> C64 {
    let i = C64::new(0.0, 1.0);
    let zs = z / scale;
    let den = C64::new(1.0, 0.0) - i * zs;
    let u = (C64::new(1.0, 0.0) + i * zs) / den;
    let mut acc = C64::new(0.0, 0.0);
    for c in a.iter().rev() {
        acc = acc * u + c;
    }
    acc / ((std::f64::consts::PI * scale).sqrt() * den)
}
