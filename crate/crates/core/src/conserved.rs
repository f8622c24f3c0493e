//! Conserved quantities: the generating function `β(κ) = ⟨q₊, (L+κ)⁻¹q₊⟩`, the polynomial
//! Hamiltonians, `H_κ`, functional gradients and Poisson brackets, the Bock–Kruskal transform,
//! the perturbation determinant `α(κ)`, and scaling/Galilei covariance.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::check::Check;
use crate::error::{Error, Result};
use crate::explicit_virial;
use crate::lax_gauge::{dot, GaugeData, LaxOperator};
use crate::spectral::{Field, Geometry, HardyField, RealField};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `β(κ)` with its gauge.
pub fn beta_with_gauge(l: &LaxOperator, kappa: f64) -> Result<(f64, GaugeData)> {
    let g = l.gauge(kappa)?;
    let b = l.q_plus().inner(&g.m).re;
    Ok((b, g))
}

/// `β(κ; q)`.
pub fn beta(l: &LaxOperator, kappa: f64) -> Result<f64> {
    Ok(beta_with_gauge(l, kappa)?.0)
}

/// `β(κ; q)` with the default truncation.
pub fn beta_of(q: &RealField, kappa: f64) -> Result<f64> {
    beta(&LaxOperator::from_potential(q)?, kappa)
}

/// `∫ q m` by quadrature — the middle form of `β`.
pub fn beta_quadrature(l: &LaxOperator, gauge: &GaugeData) -> C64 {
    l.potential().integrate_product(&gauge.m.to_field())
}

/// `[β, ∂β, …, ∂^order β]` from resolvent powers: `∂^j β = (−1)^j j! ⟨q₊, R^{j+1} q₊⟩`.
pub fn beta_derivatives(l: &LaxOperator, kappa: f64, order: usize) -> Result<Vec<f64>> {
    let w = l.geometry().weight();
    let (b, g) = beta_with_gauge(l, kappa)?;
    let mut out = vec![b];
    if order == 0 {
        return Ok(out);
    }
    // powers R^j q₊ for j = 1, 2, … ; ⟨q₊, R^{a+b} q₊⟩ = ⟨R^a q₊, R^b q₊⟩
    let mut pows = vec![g.m.coeffs().to_vec()];
    let need = order.div_ceil(2) + 1;
    while pows.len() < need {
        let next = l.resolvent(kappa, pows.last().unwrap())?;
        pows.push(next);
    }
    let mut fact = 1.0;
    for j in 1..=order {
        fact *= j as f64;
        // ⟨q₊, R^{j+1}q₊⟩ = ⟨R^a q₊, R^c q₊⟩ with a + c = j + 1
        let a = j.div_ceil(2);
        let c = j + 1 - a;
        let v = dot(&pows[a - 1], &pows[c - 1]).re * w;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * fact * v);
    }
    Ok(out)
}

/// Sampled `β(κ)` over an ascending grid.
#[derive(Clone, Debug, Serialize)]
pub struct BetaCurve {
    pub kappas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Hash of the potential's coefficients.
    pub fingerprint: u64,
}

/// Coefficient fingerprint (FNV-1a over the bit patterns).
pub fn fingerprint(q: &Field) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for c in q.coeffs() {
        for b in c.re.to_bits().to_le_bytes().into_iter().chain(c.im.to_bits().to_le_bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

/// `β` over `kappas` (sorted ascending).
pub fn beta_curve(l: &LaxOperator, kappas: &[f64]) -> Result<BetaCurve> {
    let mut ks = kappas.to_vec();
    ks.sort_by(f64::total_cmp);
    let betas = ks.iter().map(|&k| beta(l, k)).collect::<Result<Vec<_>>>()?;
    Ok(BetaCurve { kappas: ks, betas, fingerprint: fingerprint(l.potential()) })
}

/// `⟨q₊, F(L) q₊⟩` from the eigen-decomposition of the truncated Lax matrix.
pub fn spectral_functional(l: &LaxOperator, f: impl Fn(f64) -> f64) -> f64 {
    let eig = SymmetricEigen::new(l.matrix().matrix);
    let qp = DVector::from_column_slice(l.q_plus().coeffs());
    let proj = eig.eigenvectors.adjoint() * qp;
    let s: f64 = eig.eigenvalues.iter().zip(proj.iter()).map(|(&e, p)| f(e) * p.norm_sqr()).sum();
    s * l.geometry().weight()
}

/// Momentum, energy, next Hamiltonian and mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct HamiltonianValue {
    pub p: f64,
    pub h_bo: f64,
    pub h2: f64,
    pub mean: f64,
}

/// `∫ Π fᵢ` computed alias-free on a four-times finer grid.
pub(crate) fn integrate_pointwise(fields: &[&Field]) -> f64 {
    let n = fields[0].geometry().n() * 4;
    let vals: Vec<Vec<C64>> = fields.iter().map(|f| f.resample(n).values()).collect();
    let prod: Vec<C64> = (0..n).map(|j| vals.iter().map(|v| v[j]).product()).collect();
    Field::from_values(fields[0].geometry().with_n(n), &prod).integral().re
}

/// `P = ∫½q²`, `H_BO = ∫½qHq′ − ⅓q³`, `H₂ = ∫½q′² − ¾q²Hq′ + ¼q⁴`, and `∫q`.
pub fn polynomial_hamiltonians(q: &RealField) -> HamiltonianValue {
    let f = q.as_field();
    let dq = q.deriv();
    let hdq = dq.hilbert();
    let p = 0.5 * q.dot(q);
    let h_bo = 0.5 * q.dot(&hdq) - integrate_pointwise(&[f, f, f]) / 3.0;
    let h2 = 0.5 * dq.dot(&dq) - 0.75 * integrate_pointwise(&[f, f, hdq.as_field()])
        + 0.25 * integrate_pointwise(&[f, f, f, f]);
    HamiltonianValue { p, h_bo, h2, mean: q.mean() }
}

/// Least-squares fit of `β` in inverse powers of κ.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionFit {
    pub p: f64,
    pub h_bo: f64,
    pub h2: f64,
    /// Raw coefficients of `κ⁻¹, …, κ⁻⁵`.
    pub coeffs: Vec<f64>,
    /// Root-mean-square residual relative to the largest `|β|`.
    pub residual: f64,
    pub condition: f64,
}

/// Fits `β(κ) ≈ Σ_{j=1}^{5} b_j κ^{−j}` and maps `b₁…b₃` to `(P, H_BO, H₂)`.
///
/// On a periodic geometry of period `Λ` the average `μ = ∫q/Λ` enters:
/// `b₁ = P + ½Λμ²`, `b₂ = −(H_BO − μP − Λμ³/6)`, `b₃ = H₂ − μH_BO + μ²P − Λμ⁴/12`.
pub fn beta_expansion_fit(kappas: &[f64], betas: &[f64], average: f64, period: f64) -> Result<ExpansionFit> {
    const TERMS: usize = 5;
    if kappas.len() < 6 || kappas.len() != betas.len() {
        return Err(Error::IllConditioned(format!("need at least 6 points, got {}", kappas.len())));
    }
    let kmin = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    // columns scaled by kmin^j so the design is O(1)
    let a = DMatrix::from_fn(kappas.len(), TERMS, |i, j| (kmin / kappas[i]).powi(j as i32 + 1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = smax / smin;
    if !(condition < 1e12) {
        return Err(Error::IllConditioned(format!("kappa grid too narrow (condition {condition:.3e})")));
    }
    let b = DVector::from_column_slice(betas);
    let x = svd.solve(&b, 1e-14).map_err(|e| Error::IllConditioned(e.to_string()))?;
    let coeffs: Vec<f64> = (0..TERMS).map(|j| x[j] * kmin.powi(j as i32 + 1)).collect();
    let r = &a * &x - &b;
    let scale = betas.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let residual = (r.norm_squared() / betas.len() as f64).sqrt() / scale;
    let (mu, w) = if average == 0.0 { (0.0, 0.0) } else { (average, period) };
    let p = coeffs[0] - 0.5 * w * mu * mu;
    let h_bo = -coeffs[1] + mu * p + w * mu.powi(3) / 6.0;
    let h2 = coeffs[2] + mu * h_bo - mu * mu * p + w * mu.powi(4) / 12.0;
    Ok(ExpansionFit { p, h_bo, h2, coeffs, residual, condition })
}

/// Fits the expansion of `β` over `kappas` for the operator's potential.
pub fn beta_expansion_check(l: &LaxOperator, kappas: &[f64]) -> Result<ExpansionFit> {
    let betas = kappas.iter().map(|&k| beta(l, k)).collect::<Result<Vec<_>>>()?;
    beta_expansion_fit(kappas, &betas, l.average(), l.geometry().period())
}

/// `H_κ = κP − κ²β` on the line; on periodic geometries of period `Λ`, with `μ = ∫q/Λ`,
/// `[κ + μ]P − κ²β + ½κΛμ² + ⅙Λμ³`.
pub fn h_kappa(l: &LaxOperator, kappa: f64) -> Result<f64> {
    let b = beta(l, kappa)?;
    let p = 0.5 * l.potential().dot(l.potential());
    Ok(h_kappa_from(l.geometry(), kappa, b, p, l.average()))
}

pub(crate) fn h_kappa_from(geom: Geometry, kappa: f64, beta: f64, p: f64, mu: f64) -> f64 {
    if geom.is_periodic() {
        let w = geom.period();
        (kappa + mu) * p - kappa * kappa * beta + w * (0.5 * kappa * mu * mu + mu.powi(3) / 6.0)
    } else {
        kappa * p - kappa * kappa * beta
    }
}

/// Functionals with analytic gradients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Functional {
    Beta(f64),
    P,
    Hbo,
    Hk(f64),
    CofP,
    CofE,
    CofBeta(f64),
    VofP,
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::Beta(k) => format!("beta({k})"),
            Functional::P => "P".into(),
            Functional::Hbo => "H_BO".into(),
            Functional::Hk(k) => format!("H_kappa({k})"),
            Functional::CofP => "CofP".into(),
            Functional::CofE => "CofE".into(),
            Functional::CofBeta(k) => format!("Cofbeta({k})"),
            Functional::VofP => "VofP".into(),
        }
    }

    /// Value at the operator's potential.
    pub fn value(&self, l: &LaxOperator) -> Result<f64> {
        let q = l.potential();
        Ok(match *self {
            Functional::Beta(k) => beta(l, k)?,
            Functional::P => 0.5 * q.dot(q),
            Functional::Hbo => polynomial_hamiltonians(q).h_bo,
            Functional::Hk(k) => h_kappa(l, k)?,
            Functional::CofP => explicit_virial::cof_p(l)?,
            Functional::CofE => explicit_virial::cof_e(l)?,
            Functional::CofBeta(k) => explicit_virial::cof_beta(l, k)?,
            Functional::VofP => explicit_virial::vof_p(l)?,
        })
    }

    /// `δF/δq`.
    pub fn gradient(&self, l: &LaxOperator) -> Result<RealField> {
        let q = l.potential();
        Ok(match *self {
            Functional::Beta(k) => beta_gradient(&l.gauge(k)?, l.geometry()),
            Functional::P => q.clone(),
            Functional::Hbo => q.deriv().hilbert().sub(&q.mul(q)?),
            Functional::Hk(k) => {
                let db = beta_gradient(&l.gauge(k)?, l.geometry());
                if l.geometry().is_periodic() {
                    let mu = l.average();
                    let p = 0.5 * q.dot(q);
                    // constant part of the gradient: P/Λ + κμ + ½μ²
                    let c = p / l.geometry().period() + k * mu + 0.5 * mu * mu;
                    q.scale(k + mu).axpy(-k * k, &db).add(&RealField::constant(l.geometry(), c)?)
                } else {
                    q.scale(k).axpy(-k * k, &db)
                }
            }
            Functional::CofP | Functional::CofE | Functional::CofBeta(_) | Functional::VofP => {
                explicit_virial::centroid_gradient(l, *self)?
            }
        })
    }
}

/// `δβ/δq = m + m̄ + |m|²` as a real field.
pub fn beta_gradient(gauge: &GaugeData, geom: Geometry) -> RealField {
    let m = gauge.m.to_field();
    debug_assert_eq!(m.geometry(), geom);
    let mm = m.conj().mul_raw(&m);
    RealField::from_field(&(&m.scale_re(2.0) + &mm))
}

/// `{F, G} = ∫ (δF/δq)(δG/δq)′`.
pub fn poisson_bracket(l: &LaxOperator, f: Functional, g: Functional) -> Result<f64> {
    if f == g {
        return Ok(0.0);
    }
    let df = f.gradient(l)?;
    let dg = g.gradient(l)?;
    Ok(bracket_of_gradients(&df, &dg))
}

/// `∫ a b′` for real gradients.
pub fn bracket_of_gradients(a: &RealField, b: &RealField) -> f64 {
    a.dot(&b.deriv())
}

/// Bock–Kruskal transform and its diagnostics.
#[derive(Clone, Debug)]
pub struct BockKruskal {
    pub w: RealField,
    /// `‖2q − (w+κ)⁻¹H(w′) − H(w′/(w+κ)) − 2κw/(w+κ)‖₂ / ‖q‖₂`; on periodic geometries the
    /// constant `κ·2κ∫Re m/(w+κ)` is added back.
    pub residual: f64,
    pub min_kappa_plus_w: f64,
    /// `∫w` and `2β − κ∂β/∂κ + 2∫q`.
    pub integral: (f64, f64),
}

/// `w = κ(|m|² + m + m̄)` and the residual of its defining equation.
pub fn bock_kruskal(l: &LaxOperator, kappa: f64) -> Result<BockKruskal> {
    let g = l.gauge(kappa)?;
    let geom = l.geometry();
    let w = beta_gradient(&g, geom).scale(kappa);
    let wv = w.real_values();
    let min_kappa_plus_w = wv.iter().fold(f64::INFINITY, |m, v| m.min(v + kappa));
    if !(min_kappa_plus_w > 0.0) {
        return Err(Error::Numerical(format!("kappa + w changes sign (min {min_kappa_plus_w:.3e})")));
    }
    let dw = w.deriv();
    let hdw = dw.hilbert().real_values();
    let dwv = dw.real_values();
    let ratio = RealField::from_values(geom, &dwv.iter().zip(&wv).map(|(d, w)| d / (w + kappa)).collect::<Vec<_>>());
    let hratio = ratio.hilbert().real_values();
    let qv = l.potential().real_values();
    // periodic geometries: the two-parameter identity leaves the constant 2κ∫Re m, which enters
    // divided by |1+m|² = 1 + w/κ
    let c = if geom.is_periodic() { 2.0 * kappa * g.m.to_field().integral().re } else { 0.0 };
    let resid: Vec<f64> = (0..qv.len())
        .map(|j| {
            let den = wv[j] + kappa;
            2.0 * qv[j] - hdw[j] / den - hratio[j] - 2.0 * kappa * wv[j] / den + kappa * c / den
        })
        .collect();
    let rf = RealField::from_values(geom, &resid);
    let qn = l.potential().l2_norm();
    let residual = if qn == 0.0 { rf.l2_norm() } else { rf.l2_norm() / qn };
    let d = beta_derivatives(l, kappa, 1)?;
    let mean = l.potential().mean();
    let integral = (w.mean(), 2.0 * d[0] - kappa * d[1] + 2.0 * mean);
    Ok(BockKruskal { w, residual, min_kappa_plus_w, integral })
}

/// Wiener–Hopf factor `μ = exp(C₊ log(1 + w/κ)) − 1`, so that `1 + w/κ = |1 + μ|²`.
pub fn wiener_hopf(w: &RealField, kappa: f64, modes: usize) -> Result<HardyField> {
    let geom = w.geometry();
    let logv: Vec<f64> = w.real_values().iter().map(|v| (1.0 + v / kappa).ln()).collect();
    if logv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("1 + w/kappa is not positive".into()));
    }
    let lf = RealField::from_values(geom, &logv);
    let mut lp = lf.as_field().cplus();
    if geom.is_periodic() {
        // the zero mode is split evenly between the two factors
        let s = geom.slot(0).unwrap();
        lp.coeffs_mut()[s] *= 0.5;
    }
    let mu = lp.map_values(|z| z.exp() - 1.0);
    Ok(mu.hardy(modes))
}

/// The two evaluations of the perturbation determinant.
#[derive(Clone, Debug, Serialize)]
pub struct AlphaReport {
    pub kappa: f64,
    pub series: f64,
    pub beta_sum: f64,
    pub difference: f64,
    /// Number of trace terms summed.
    pub terms: usize,
}

/// `Σ_{ℓ≥2} (1/ℓ) tr (R₀C₊q)^ℓ` with the truncation tail of the `ℓ = 2` term added analytically
/// on periodic geometries.
pub fn alpha_series(l: &LaxOperator, kappa: f64) -> Result<(f64, usize)> {
    l.ensure_admissible(kappa)?;
    let m = l.modes();
    let t = l.matrix();
    // A = R₀ C₊q  with C₊q = D − L
    let mut tq = -t.matrix;
    let geom = l.geometry();
    for k in 0..m {
        match geom {
            Geometry::Line { scale, .. } => {
                tq[(k, k)] += crate::spectral::line::d_diag(k as i64, scale);
                if k + 1 < m {
                    let o = crate::spectral::line::d_off(k as i64, scale);
                    tq[(k, k + 1)] += o;
                    tq[(k + 1, k)] += o;
                }
            }
            _ => tq[(k, k)] += geom.frequency(k as i64),
        }
    }
    let mut a = DMatrix::<C64>::zeros(m, m);
    for c in 0..m {
        let col: Vec<C64> = (0..m).map(|r| tq[(r, c)]).collect();
        let rc = l.free_resolvent(kappa, &col);
        for r in 0..m {
            a[(r, c)] = rc[r];
        }
    }
    let mut p = a.clone();
    let mut sum = 0.0;
    let mut terms = 0;
    for ell in 2..2000 {
        p = &p * &a;
        let tr = p.trace().re / ell as f64;
        sum += tr;
        terms += 1;
        if tr.abs() < 1e-14 * sum.abs().max(1e-300) || tr.abs() < 1e-300 {
            break;
        }
        if ell > 3 && !tr.is_finite() {
            return Err(Error::Numerical(format!("trace series non-contractive at kappa = {kappa}")));
        }
    }
    if geom.is_periodic() {
        sum += 0.5 * second_trace_tail(l, kappa);
    }
    Ok((sum, terms))
}

/// `Σ |q̂(ξ_j − ξ_k)|² / ((κ+ξ_j)(κ+ξ_k))` over pairs with `max(j, k) ≥ M`.
fn second_trace_tail(l: &LaxOperator, kappa: f64) -> f64 {
    let geom = l.geometry();
    let m = l.modes() as i64;
    let q = l.potential();
    let h = 2.0 * PI / geom.period();
    let mut tail = 0.0;
    for s in 0..geom.n() {
        let d = geom.index(s);
        let c2 = q.coeffs()[s].norm_sqr();
        if c2 == 0.0 {
            continue;
        }
        if d == 0 {
            tail += c2 * inverse_square_tail(kappa, h, m);
        } else {
            // pairs (k+|d|, k) with k ≥ M − |d|: Σ 1/((κ+hk)(κ+h(k+|d|))) telescopes
            let ad = d.abs();
            let k0 = (m - ad).max(0);
            let s: f64 = (k0..k0 + ad).map(|k| 1.0 / (kappa + h * k as f64)).sum();
            tail += c2 * s / (h * ad as f64);
        }
    }
    tail
}

/// `Σ_{k≥K} (κ + hk)^{-2}` by Euler–Maclaurin.
fn inverse_square_tail(kappa: f64, h: f64, k0: i64) -> f64 {
    let a = kappa + h * k0 as f64;
    1.0 / (h * a) + 0.5 / (a * a) + h / (6.0 * a.powi(3)) - h.powi(3) / (30.0 * a.powi(5))
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    // Golub–Welsch on the Jacobi matrix of the Legendre recurrence
    let j = DMatrix::from_fn(n, n, |r, c| {
        if r.abs_diff(c) == 1 {
            let k = r.max(c) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v = eig.eigenvectors[(0, i)];
            (0.5 * (x + 1.0), v * v)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `∫_{κ₀}^∞ β(s)/s ds = ∫_0^{1/κ₀} β(1/u)/u du` by Gauss–Legendre in `u`.
fn beta_tail_integral(l: &LaxOperator, k0: f64, nodes: usize) -> Result<f64> {
    let umax = 1.0 / k0;
    let mut s = 0.0;
    for (x, w) in gauss_legendre(nodes) {
        let u = x * umax;
        s += w * umax * beta(l, 1.0 / u)? / u;
    }
    Ok(s)
}

/// `Σ_{j≥0} β(κ+ξ_j)/(κ+ξ_j)` on periodic geometries, `(1/2π)∫₀^∞ β(κ+ξ)/(κ+ξ) dξ` on the line.
pub fn alpha_beta_sum(l: &LaxOperator, kappa: f64) -> Result<f64> {
    match l.geometry() {
        Geometry::Line { .. } => Ok(beta_tail_integral(l, kappa, 48)? / (2.0 * PI)),
        geom => {
            const DIRECT: usize = 64;
            let h = 2.0 * PI / geom.period();
            let mut s = 0.0;
            for j in 0..DIRECT {
                let k = kappa + h * j as f64;
                s += beta(l, k)? / k;
            }
            // Euler–Maclaurin for the remainder: ∫ + ½g − g′/12
            let kj = kappa + h * DIRECT as f64;
            let d = beta_derivatives(l, kj, 1)?;
            let g = d[0] / kj;
            let dg = h * (d[1] / kj - d[0] / (kj * kj));
            let integral = beta_tail_integral(l, kj, 48)? / h;
            Ok(s + integral + 0.5 * g - dg / 12.0)
        }
    }
}

/// Both evaluations of `α(κ)`.
pub fn perturbation_determinant_alpha(l: &LaxOperator, kappa: f64) -> Result<AlphaReport> {
    let (series, terms) = alpha_series(l, kappa)?;
    let beta_sum = alpha_beta_sum(l, kappa)?;
    Ok(AlphaReport { kappa, series, beta_sum, difference: series - beta_sum, terms })
}

/// Symmetries acting on `β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    /// `q ↦ λq(λx)` on the box or the line.
    Scale(f64),
    /// `q ↦ q + c` on the circle.
    Galilei(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct CovarianceRow {
    pub kappa: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Checks `β(λκ; q_λ) = β(κ; q)` or the Galilei law over `kappas`.
pub fn symmetry_covariance(q: &RealField, transform: Transform, kappas: &[f64]) -> Result<Vec<CovarianceRow>> {
    let geom = q.geometry();
    let l = LaxOperator::from_potential(q)?;
    let rows = match transform {
        Transform::Scale(lambda) => {
            if !geom.models_line() {
                return Err(Error::WrongGeometry { expected: "box or line", got: geom.to_string() });
            }
            let ql = LaxOperator::from_potential(&q.rescale(lambda)?)?;
            kappas
                .iter()
                .map(|&k| Ok((k, beta(&ql, lambda * k)?, beta(&l, k)?)))
                .collect::<Result<Vec<_>>>()?
        }
        Transform::Galilei(c) => {
            if geom != Geometry::circle(geom.n()) {
                return Err(Error::WrongGeometry { expected: "circle", got: geom.to_string() });
            }
            let shifted = q.add(&RealField::constant(geom, c)?);
            let ls = LaxOperator::from_potential(&shifted)?;
            let mu = q.mean();
            kappas
                .iter()
                .map(|&k| {
                    let lhs = beta(&ls, k)? + mu + c;
                    let rhs = k * k / ((k - c) * (k - c)) * (beta(&l, k - c)? + mu) + c * k / (k - c);
                    Ok((k, lhs, rhs))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(rows
        .into_iter()
        .map(|(kappa, lhs, rhs)| CovarianceRow { kappa, lhs, rhs, rel_err: rel_err(lhs, rhs) })
        .collect())
}

pub(crate) fn rel_err(lhs: f64, rhs: f64) -> f64 {
    let d = (lhs - rhs).abs();
    let s = lhs.abs().max(rhs.abs());
    if s == 0.0 {
        0.0
    } else {
        d / s
    }
}

/// Left side of the two-parameter gauge identity, as a field:
/// `H(mn̄+m+n̄)′ + i(m+1)n̄′ − im′(n̄+1) − 2q(m+1)(n̄+1) + i(κ−ϰ)H(mn̄+m+n̄) + (κ+ϰ)(mn̄+m+n̄)`.
///
/// It vanishes on the line and equals the constant `ϰ∫m + κ∫n̄` on the circle.
pub fn gauge_identity_lhs(l: &LaxOperator, gm: &GaugeData, gn: &GaugeData) -> Field {
    let n2 = l.geometry().n() * 2;
    let m = gm.m.to_field().resample(n2);
    let nb = gn.m.to_field().resample(n2).conj();
    let q = l.potential().as_field().resample(n2);
    let (k, vk) = (gm.kappa, gn.kappa);
    let mn = m.mul_raw(&nb);
    let s = &(&mn + &m) + &nb;
    let lhs = s.deriv().hilbert();
    let t1 = m.deriv();
    let t2 = nb.deriv();
    // (m+1)n̄′ and m′(n̄+1) expanded so the constant never needs representing on the line
    let a = &m.mul_raw(&t2) + &t2;
    let b = &t1.mul_raw(&nb) + &t1;
    let qmn = &(&q.mul_raw(&mn) + &q.mul_raw(&m)) + &(&q.mul_raw(&nb) + &q);
    let out = &(&(&lhs + &a.scale(I)) - &b.scale(I)) - &qmn.scale_re(2.0);
    let out = &(&out + &s.hilbert().scale(I * (k - vk))) + &s.scale_re(k + vk);
    out.resample(l.geometry().n())
}

/// `‖C₊(f·conj(Lg) − ḡ·Lf) − iC₊(fḡ)′ − f[1−C₋](q₊ḡ)‖` on the Hardy modes, with the norm of the
/// left side as scale.
pub fn lax_identity_residual(l: &LaxOperator, f: &[C64], g: &[C64]) -> (f64, f64) {
    let m = l.modes();
    let n2 = l.geometry().n() * 2;
    let up = |a: &[C64]| l.embed(a).resample(n2);
    let (ff, gf) = (up(f), up(g));
    let (lf, lg) = (up(&l.apply(f)), up(&l.apply(g)));
    let lhs = (&ff.mul_raw(&lg.conj()) - &gf.conj().mul_raw(&lf)).cplus();
    let fg = ff.mul_raw(&gf.conj());
    let qp = l.potential().as_field().resample(n2).cplus();
    let t = qp.mul_raw(&gf.conj());
    let one_minus = &t - &t.cminus();
    let rhs = &fg.cplus().deriv().scale(I) + &ff.mul_raw(&one_minus);
    let geom = lhs.geometry();
    let (mut d, mut s) = (0.0, 0.0);
    for k in 0..m as i64 {
        let slot = geom.slot(k).unwrap();
        d += (lhs.coeffs()[slot] - rhs.coeffs()[slot]).norm_sqr();
        s += lhs.coeffs()[slot].norm_sqr();
    }
    (d.sqrt(), s.sqrt())
}

/// Algebraic identities among `m = m(κ)`, `n = m(ϰ)` and `β`, as checks.
///
/// Every geometry: `∫m̄n = −(β(κ)−β(ϰ))/(κ−ϰ)`, the Lax identity for the pair `(m, n)`, the
/// two-parameter gauge identity, and Poisson commutativity of `β(κ)` with `β(ϰ)` and `P`.
/// Periodic geometries add `κ∫m = β + ∫q`, `⟨1, R(κ)1⟩ = Λ/κ + (β + ∫q)/κ²` and
/// `κ∫(m + m̄ + |m|²) = 2β − κβ′ + 2∫q`.
pub fn identity_suite(l: &LaxOperator, kappa: f64, varkappa: f64) -> Result<Vec<Check>> {
    let geom = l.geometry();
    let params = format!("kappa={kappa},varkappa={varkappa}");
    let w = geom.weight();
    let gm = l.gauge(kappa)?;
    let gn = l.gauge(varkappa)?;
    let d = beta_derivatives(l, kappa, 1)?;
    let (bk, dbk) = (d[0], d[1]);
    let bv = beta(l, varkappa)?;
    let mut out = Vec::new();

    let mbar_n = dot(gm.m.coeffs(), gn.m.coeffs()) * w;
    let quotient = -(bk - bv) / (kappa - varkappa);
    out.push(Check::new("beta2.re", params.clone(), mbar_n.re, quotient));
    out.push(Check::residual("beta2.im", params.clone(), mbar_n.im.abs(), quotient.abs()));

    let (res, scale) = lax_identity_residual(l, gm.m.coeffs(), gn.m.coeffs());
    out.push(Check::residual("lax_identity", params.clone(), res, scale));

    let lhs = gauge_identity_lhs(l, &gm, &gn);
    let lscale = lhs.l2_norm().max(gm.m.norm() * gn.m.norm() * (kappa + varkappa));
    if geom.is_periodic() {
        let s0 = geom.slot(0).unwrap();
        let c0 = lhs.coeffs()[s0];
        let mut rest = lhs.clone();
        rest.coeffs_mut()[s0] = C64::new(0.0, 0.0);
        out.push(Check::residual("gauge_identity.constancy", params.clone(), rest.l2_norm(), lscale));
        let int_m = gm.m.to_field().integral();
        let int_n = gn.m.to_field().integral();
        let expect = varkappa * int_m + kappa * int_n.conj();
        out.push(Check::new("gauge_identity.constant", params.clone(), c0.re, expect.re));
        out.push(Check::residual("gauge_identity.imag", params.clone(), c0.im.abs() + expect.im.abs(), expect.re.abs()));

        let mean = l.potential().mean();
        out.push(Check::new("beta3", params.clone(), kappa * int_m.re, bk + mean));
        out.push(Check::residual("beta3.imag", params.clone(), int_m.im.abs() * kappa, (bk + mean).abs()));
        let mut one = vec![C64::new(0.0, 0.0); l.modes()];
        one[0] = C64::new(1.0, 0.0);
        let r1 = l.resolvent(kappa, &one)?;
        let lhs4 = dot(&one, &r1).re * w;
        let rhs4 = geom.period() / kappa + (bk + mean) / (kappa * kappa);
        out.push(Check::new("beta4", params.clone(), lhs4, rhs4));
        let dbeta = beta_gradient(&gm, geom);
        out.push(Check::new("betaX", params.clone(), kappa * dbeta.mean(), 2.0 * bk - kappa * dbk + 2.0 * mean));
    } else {
        out.push(Check::residual("gauge_identity", params.clone(), lhs.l2_norm(), lscale));
    }

    let db_k = Functional::Beta(kappa).gradient(l)?;
    let db_v = Functional::Beta(varkappa).gradient(l)?;
    let q = l.potential();
    let bscale = db_k.l2_norm() * db_v.deriv().l2_norm();
    out.push(Check::residual("bracket.beta_beta", params.clone(), bracket_of_gradients(&db_k, &db_v).abs(), bscale));
    let pscale = q.l2_norm() * db_v.deriv().l2_norm();
    out.push(Check::residual("bracket.p_beta", params, bracket_of_gradients(q, &db_v).abs(), pscale));
    Ok(out)
}

#[cfg(test)]
mod tests;
