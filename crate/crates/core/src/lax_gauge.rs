//! Lax operator `L = −i∂ − C₊(q·)` on the Hardy space, its resolvent, the gauge
//! `m(κ) = (L+κ)⁻¹q₊`, and the companion operators of the Lax pairs.
//!
//! Hardy vectors are the first `M` nonnegative modes of the geometry. `L` acts as
//! `D − T_q`, where `D` is `−i∂` (diagonal in Fourier, tridiagonal in the rational basis) and
//! `T_q` is the Toeplitz compression of multiplication by `q`. The matrix-free action goes
//! through the grid and is alias-exact for `M ≤ n/2` when `q` lies in the dealiased band.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{line, Field, Geometry, HardyField, RealField};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Relative residual at which the conjugate-gradient solve stops.
pub const SOLVE_TOL: f64 = 1e-13;
const MAX_CG_ITERS: usize = 2000;

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Truncated Lax operator for a fixed potential.
#[derive(Clone, Debug)]
pub struct LaxOperator {
    geom: Geometry,
    m: usize,
    q: RealField,
    qvals: Vec<C64>,
    symbol: Vec<C64>,
}

/// Contraction proxy of `C₊qR₀(κ)` and the smallest κ making it `< ½`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Admissibility {
    pub kappa_min: f64,
    pub proxy: f64,
}

/// The gauge `m = (L+κ)⁻¹q₊` with solve diagnostics.
#[derive(Clone, Debug)]
pub struct GaugeData {
    pub kappa: f64,
    pub m: HardyField,
    /// `‖(L+κ)m − q₊‖₂ / ‖q₊‖₂`.
    pub residual: f64,
    /// Asymptotic ratio of successive Neumann-series terms.
    pub series_ratio: f64,
}

/// Lax-pair companion operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Peter {
    /// Companion of the Benjamin–Ono flow.
    Bo,
    /// Companion of the regularized `H_κ` flow.
    Hk(f64),
    /// Companion of the `β(κ)` flow.
    Beta(f64),
}

/// Outcome of a resolvent solve.
#[derive(Clone, Debug)]
pub struct Solve {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
}

impl LaxOperator {
    /// Lax operator on `m` Hardy modes; `q` is projected onto the dealiased band.
    pub fn new(q: &RealField, m: usize) -> Result<Self> {
        let geom = q.geometry();
        let limit = geom.n() / 2;
        if m == 0 || m > limit {
            return Err(Error::TooManyModes { requested: m, limit });
        }
        let q = q.dealias();
        let qvals = q.values();
        let symbol = geom.analyze(&qvals);
        Ok(Self { geom, m, q, qvals, symbol })
    }

    /// Lax operator on the default `n/3` modes.
    pub fn from_potential(q: &RealField) -> Result<Self> {
        Self::new(q, q.geometry().dealias_band())
    }

    pub fn geometry(&self) -> Geometry {
        self.geom
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn potential(&self) -> &RealField {
        &self.q
    }

    /// Physical grid values of `q`.
    pub fn potential_values(&self) -> &[C64] {
        &self.qvals
    }

    /// `C₊q` on the Hardy modes.
    pub fn q_plus(&self) -> HardyField {
        self.q.plus(self.m)
    }

    /// `∫q` over one period (zero on the line, where it plays no role in the operator conventions).
    pub fn mean(&self) -> f64 {
        if self.geom.is_periodic() {
            self.q.mean()
        } else {
            0.0
        }
    }

    /// Average `∫q / period` on periodic geometries, zero on the line.
    pub fn average(&self) -> f64 {
        if self.geom.is_periodic() {
            self.q.mean() / self.geom.period()
        } else {
            0.0
        }
    }

    fn toeplitz_coeff(&self, d: i64) -> C64 {
        self.geom.slot(d).map_or(ZERO, |s| self.symbol[s])
    }

    /// `D a` with `D = −i∂`.
    pub fn free(&self, a: &[C64]) -> Vec<C64> {
        match self.geom {
            Geometry::Line { scale, .. } => line::apply_d(a, 0, scale),
            _ => a.iter().enumerate().map(|(k, x)| x * self.geom.frequency(k as i64)).collect(),
        }
    }

    /// `C₊(q f)` truncated to the Hardy modes.
    pub fn toeplitz(&self, a: &[C64]) -> Vec<C64> {
        self.toeplitz_with(&self.qvals, a)
    }

    /// `C₊(h f)` for an arbitrary bounded `h` given by grid values.
    pub fn toeplitz_with(&self, hvals: &[C64], a: &[C64]) -> Vec<C64> {
        let mut f = Field::zeros(self.geom);
        f.coeffs_mut()[..a.len()].copy_from_slice(a);
        let g = f.mul_values(hvals);
        g.coeffs()[..a.len()].to_vec()
    }

    /// `L a`.
    pub fn apply(&self, a: &[C64]) -> Vec<C64> {
        let d = self.free(a);
        let t = self.toeplitz(a);
        d.iter().zip(&t).map(|(x, y)| x - y).collect()
    }

    /// `(L + κ) a`.
    pub fn apply_shifted(&self, kappa: f64, a: &[C64]) -> Vec<C64> {
        self.apply(a).iter().zip(a).map(|(l, x)| l + x * kappa).collect()
    }

    /// `(D + κ)⁻¹ b` — diagonal division or a tridiagonal (Thomas) solve.
    pub fn free_resolvent(&self, kappa: f64, b: &[C64]) -> Vec<C64> {
        match self.geom {
            Geometry::Line { scale, .. } => {
                let n = b.len();
                let mut c = vec![0.0; n];
                let mut d = vec![ZERO; n];
                let mut denom = line::d_diag(0, scale) + kappa;
                c[0] = if n > 1 { line::d_off(0, scale) / denom } else { 0.0 };
                d[0] = b[0] / denom;
                for k in 1..n {
                    let sub = line::d_off(k as i64 - 1, scale);
                    denom = line::d_diag(k as i64, scale) + kappa - sub * c[k - 1];
                    if k + 1 < n {
                        c[k] = line::d_off(k as i64, scale) / denom;
                    }
                    d[k] = (b[k] - d[k - 1] * sub) / denom;
                }
                for k in (0..n.saturating_sub(1)).rev() {
                    let next = d[k + 1];
                    d[k] -= next * c[k];
                }
                d
            }
            _ => b.iter().enumerate().map(|(k, x)| x / (self.geom.frequency(k as i64) + kappa)).collect(),
        }
    }

    /// Solves `(L + κ) x = b` by preconditioned conjugate gradients, falling back to dense LU.
    pub fn solve(&self, kappa: f64, b: &[C64]) -> Result<Solve> {
        let bn = norm(b);
        if bn == 0.0 {
            return Ok(Solve { x: vec![ZERO; b.len()], iterations: 0, residual: 0.0 });
        }
        let mut x = self.free_resolvent(kappa, b);
        let ax = self.apply_shifted(kappa, &x);
        let mut r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut z = self.free_resolvent(kappa, &r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z).re;
        for it in 0..MAX_CG_ITERS {
            let rn = norm(&r);
            if rn <= SOLVE_TOL * bn {
                return Ok(Solve { x, iterations: it, residual: rn / bn });
            }
            let ap = self.apply_shifted(kappa, &p);
            let pap = dot(&p, &ap).re;
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            x.iter_mut().zip(&p).for_each(|(x, p)| *x += p * alpha);
            r.iter_mut().zip(&ap).for_each(|(r, a)| *r -= a * alpha);
            z = self.free_resolvent(kappa, &r);
            let rz_new = dot(&r, &z).re;
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + *p * beta);
        }
        log::debug!("conjugate gradients stalled at kappa = {kappa}; using dense LU");
        self.solve_dense(kappa, b)
    }

    /// Dense LU solve of `(L + κ) x = b`.
    pub fn solve_dense(&self, kappa: f64, b: &[C64]) -> Result<Solve> {
        let mut a = self.matrix().matrix;
        for k in 0..self.m {
            a[(k, k)] += kappa;
        }
        let lu = a.clone().lu();
        let x = lu.solve(&DVector::from_column_slice(b));
        let nearest = || {
            let e = SymmetricEigen::new(a.clone()).eigenvalues;
            e.iter().copied().fold(f64::INFINITY, |m, v| if v.abs() < m.abs() { v } else { m })
        };
        let Some(x) = x else {
            return Err(Error::Singular { kappa, nearest: nearest() });
        };
        let x: Vec<C64> = x.iter().copied().collect();
        let ax = self.apply_shifted(kappa, &x);
        let res = norm(&ax.iter().zip(b).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(b).max(1e-300);
        if !res.is_finite() || res > 1e-6 {
            return Err(Error::Singular { kappa, nearest: nearest() });
        }
        Ok(Solve { x, iterations: 0, residual: res })
    }

    /// `R(κ) b = (L + κ)⁻¹ b`.
    pub fn resolvent(&self, kappa: f64, b: &[C64]) -> Result<Vec<C64>> {
        Ok(self.solve(kappa, b)?.x)
    }

    /// Dense Hermitian matrix of `L`.
    pub fn matrix(&self) -> LaxMatrix {
        let m = self.m;
        let mut a = DMatrix::<C64>::zeros(m, m);
        for j in 0..m {
            for k in 0..m {
                a[(j, k)] = -self.toeplitz_coeff(j as i64 - k as i64);
            }
        }
        match self.geom {
            Geometry::Line { scale, .. } => {
                for k in 0..m {
                    a[(k, k)] += line::d_diag(k as i64, scale);
                    if k + 1 < m {
                        let o = line::d_off(k as i64, scale);
                        a[(k, k + 1)] += o;
                        a[(k + 1, k)] += o;
                    }
                }
            }
            _ => {
                for k in 0..m {
                    a[(k, k)] += self.geom.frequency(k as i64);
                }
            }
        }
        LaxMatrix { geom: self.geom, matrix: a }
    }

    /// Contraction proxy of `C₊qR₀(κ)`.
    ///
    /// Periodic geometries use the Schur bound `max_j Σ_k |q̂(ξ_j − ξ_k)|/(ξ_k + κ)`; the rational
    /// basis, where `R₀` is not diagonal, uses the spectral radius of `R₀(κ)C₊q` by power iteration.
    pub fn admissibility_proxy(&self, kappa: f64) -> f64 {
        if kappa <= 0.0 {
            return f64::INFINITY;
        }
        match self.geom {
            Geometry::Line { .. } => self.spectral_radius_proxy(kappa),
            _ => {
                let m = self.m as i64;
                let absc: Vec<f64> = (-(m - 1)..m).map(|d| self.toeplitz_coeff(d).norm()).collect();
                (0..m)
                    .map(|j| {
                        (0..m)
                            .map(|k| absc[(j - k + m - 1) as usize] / (self.geom.frequency(k) + kappa))
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    fn spectral_radius_proxy(&self, kappa: f64) -> f64 {
        // B = (D+κ)⁻¹T is self-adjoint for ⟨u, v⟩_A = ⟨u, (D+κ)v⟩; iterate and read |λ|max from
        // the two-step growth, which is insensitive to ± pairs
        let m = self.m;
        let mut x: Vec<C64> = (0..m).map(|k| C64::new(1.0 / (1.0 + k as f64), 0.0)).collect();
        let anorm = |v: &[C64]| {
            let mut dv = self.free(v);
            dv.iter_mut().zip(v).for_each(|(d, v)| *d += v * kappa);
            dot(v, &dv).re.max(0.0).sqrt()
        };
        let step = |v: &[C64]| self.free_resolvent(kappa, &self.toeplitz(v));
        let mut est = 0.0;
        for _ in 0..60 {
            let n0 = anorm(&x);
            if n0 == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= n0);
            let y = step(&x);
            let w = step(&y);
            let new = anorm(&w).sqrt();
            if (new - est).abs() <= 1e-6 * new {
                return new;
            }
            est = new;
            x = w;
        }
        est
    }

    /// Smallest κ with proxy below `½`, found by bisection in `log κ`.
    pub fn admissibility(&self) -> Admissibility {
        let p = |k: f64| self.admissibility_proxy(k);
        let mut hi = 1.0;
        while p(hi) >= 0.5 {
            hi *= 2.0;
            if hi > 1e12 {
                return Admissibility { kappa_min: f64::INFINITY, proxy: p(hi) };
            }
        }
        let mut lo = hi * 0.5;
        while p(lo) < 0.5 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-10 {
                return Admissibility { kappa_min: 0.0, proxy: p(hi) };
            }
        }
        while hi / lo > 1.0 + 1e-9 {
            let mid = (lo * hi).sqrt();
            if p(mid) < 0.5 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Admissibility { kappa_min: hi, proxy: p(hi) }
    }

    /// Refuses κ below the admissibility threshold.
    pub fn ensure_admissible(&self, kappa: f64) -> Result<()> {
        if !(kappa > 0.0) || self.admissibility_proxy(kappa) >= 0.5 {
            return Err(Error::Inadmissible { kappa, kappa_min: self.admissibility().kappa_min });
        }
        Ok(())
    }

    /// `m(κ) = (L+κ)⁻¹q₊` by direct solve, after the admissibility check.
    pub fn gauge(&self, kappa: f64) -> Result<GaugeData> {
        self.ensure_admissible(kappa)?;
        self.gauge_unchecked(kappa)
    }

    /// As [`Self::gauge`] without the admissibility check (the solve still detects singularity).
    pub fn gauge_unchecked(&self, kappa: f64) -> Result<GaugeData> {
        let qp = self.q_plus();
        let sol = self.solve(kappa, qp.coeffs())?;
        let res = {
            let r = self.apply_shifted(kappa, &sol.x);
            let d: Vec<C64> = r.iter().zip(qp.coeffs()).map(|(a, b)| a - b).collect();
            norm(&d) / norm(qp.coeffs()).max(1e-300)
        };
        Ok(GaugeData {
            kappa,
            m: HardyField::new(self.geom, sol.x)?,
            residual: if norm(qp.coeffs()) == 0.0 { 0.0 } else { res },
            series_ratio: self.series_ratio(kappa),
        })
    }

    /// Asymptotic ratio of Neumann terms `R₀(T R₀)^ℓ q₊`.
    pub fn series_ratio(&self, kappa: f64) -> f64 {
        let mut t = self.free_resolvent(kappa, self.q_plus().coeffs());
        let mut ratio = 0.0;
        for _ in 0..12 {
            let n0 = norm(&t);
            if n0 == 0.0 {
                return 0.0;
            }
            let next = self.free_resolvent(kappa, &self.toeplitz(&t));
            ratio = norm(&next) / n0;
            t = next;
        }
        ratio
    }

    /// Neumann series `R₀ Σ (C₊qR₀)^ℓ b`, summed until terms drop below `tol` relative.
    pub fn resolvent_series(&self, kappa: f64, b: &[C64], tol: f64) -> Result<Vec<C64>> {
        let mut term = self.free_resolvent(kappa, b);
        let mut sum = term.clone();
        let mut last = norm(&term);
        for _ in 0..10_000 {
            let next = self.free_resolvent(kappa, &self.toeplitz(&term));
            let nn = norm(&next);
            sum.iter_mut().zip(&next).for_each(|(s, t)| *s += t);
            if nn <= tol * norm(&sum) {
                return Ok(sum);
            }
            if nn > last && nn > 1e3 * norm(b) {
                return Err(Error::Numerical(format!("Neumann series diverges at kappa = {kappa}")));
            }
            last = nn;
            term = next;
        }
        Err(Error::Numerical(format!("Neumann series did not converge at kappa = {kappa}")))
    }

    /// Neumann-series evaluation of the gauge.
    pub fn gauge_series(&self, kappa: f64) -> Result<HardyField> {
        let x = self.resolvent_series(kappa, self.q_plus().coeffs(), 1e-15)?;
        HardyField::new(self.geom, x)
    }

    /// Derivative of the gauge in direction `g`: `R(κ)C₊[(m+1)g]`.
    pub fn gauge_derivative(&self, gauge: &GaugeData, g: &RealField) -> Result<HardyField> {
        let mg = self.embed(gauge.m.coeffs()).mul_raw(g.as_field());
        let rhs: Vec<C64> = (0..self.m).map(|k| mg.coeffs()[k] + g.coeffs()[k]).collect();
        HardyField::new(self.geom, self.resolvent(gauge.kappa, &rhs)?)
    }

    /// Hardy product `(m+1)f`, truncated.
    pub fn mul_plus_one(&self, m: &[C64], f: &[C64]) -> Vec<C64> {
        let prod = self.hardy_product(m, f);
        prod.iter().zip(f).map(|(p, f)| p + f).collect()
    }

    /// `C₊(a·b)` for Hardy vectors, truncated.
    pub fn hardy_product(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let fa = self.embed(a);
        let fb = self.embed(b);
        fa.mul_raw(&fb).coeffs()[..self.m].to_vec()
    }

    /// `C₊(conj(a)·b)` for Hardy vectors, truncated.
    pub fn hardy_conj_product(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let fa = self.embed(a).conj();
        let fb = self.embed(b);
        fa.mul_raw(&fb).coeffs()[..self.m].to_vec()
    }

    /// Hardy vector as a full field.
    pub fn embed(&self, a: &[C64]) -> Field {
        let mut f = Field::zeros(self.geom);
        f.coeffs_mut()[..a.len()].copy_from_slice(a);
        f
    }

    /// `(m+1)C₊[(m̄+1)f]`.
    pub fn gauge_sandwich(&self, m: &[C64], f: &[C64]) -> Vec<C64> {
        let inner: Vec<C64> = self.hardy_conj_product(m, f).iter().zip(f).map(|(a, b)| a + b).collect();
        self.mul_plus_one(m, &inner)
    }

    /// Applies a Lax-pair companion to a Hardy vector.
    pub fn apply_peter(&self, which: Peter, f: &[C64]) -> Result<Vec<C64>> {
        match which {
            Peter::Bo => Ok(self.peter_bo(f)),
            Peter::Hk(kappa) => {
                let g = self.gauge(kappa)?;
                let r = self.resolvent(kappa, f)?;
                let s = self.gauge_sandwich(g.m.coeffs(), f);
                let d = self.derivative(f);
                let k2 = kappa * kappa;
                let lead = k2 * self.resolvent_lead(&g);
                let drift = kappa + self.average();
                Ok((0..f.len()).map(|k| I * lead * r[k] - I * k2 * s[k] + d[k] * drift).collect())
            }
            Peter::Beta(kappa) => {
                let g = self.gauge(kappa)?;
                let r = self.resolvent(kappa, f)?;
                let s = self.gauge_sandwich(g.m.coeffs(), f);
                let lead = self.resolvent_lead(&g);
                Ok((0..f.len()).map(|k| -I * lead * r[k] + I * s[k]).collect())
            }
        }
    }

    /// Coefficient of `R(κ)` in the κ-companions: `κ` on the line, `κ + (β + ∫q)/period` on
    /// periodic geometries.
    fn resolvent_lead(&self, g: &GaugeData) -> f64 {
        if self.geom.is_periodic() {
            let beta = dot(self.q_plus().coeffs(), g.m.coeffs()).re * self.geom.weight();
            g.kappa + (beta + self.mean()) / self.geom.period()
        } else {
            g.kappa
        }
    }

    /// `f′` on Hardy vectors.
    pub fn derivative(&self, f: &[C64]) -> Vec<C64> {
        self.free(f).iter().map(|x| I * x).collect()
    }

    /// `−if″ − 2(C₊(qf))′ + 2q₊′f`.
    fn peter_bo(&self, f: &[C64]) -> Vec<C64> {
        let d1 = self.derivative(f);
        let d2 = self.derivative(&d1);
        let qf = self.toeplitz(f);
        let dqf = self.derivative(&qf);
        let dqp = self.derivative(self.q_plus().coeffs());
        let p = self.hardy_product(&dqp, f);
        (0..f.len()).map(|k| -I * d2[k] - 2.0 * dqf[k] + 2.0 * p[k]).collect()
    }

    /// `k` lowest eigenpairs.
    pub fn eigen_spectrum(&self, k: usize) -> Vec<(f64, DVector<C64>)> {
        self.matrix().eigen_spectrum(k)
    }
}

/// Dense truncated Lax matrix.
#[derive(Clone, Debug)]
pub struct LaxMatrix {
    pub geom: Geometry,
    pub matrix: DMatrix<C64>,
}

impl LaxMatrix {
    /// `max |L − L*|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The `k` lowest eigenpairs, ascending, each eigenvector normalized with its first
    /// non-negligible component real and positive.
    pub fn eigen_spectrum(&self, k: usize) -> Vec<(f64, DVector<C64>)> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .into_iter()
            .take(k)
            .map(|i| {
                let mut v = eig.eigenvectors.column(i).into_owned();
                let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if let Some(p) = v.iter().find(|z| z.norm() > 1e-8 * scale) {
                    let phase = p.conj() / p.norm();
                    v *= phase;
                }
                (eig.eigenvalues[i], v)
            })
            .collect()
    }

    /// Row-major `[[re, im], …]` dump.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.matrix.nrows())
            .map(|r| (0..self.matrix.ncols()).map(|c| [self.matrix[(r, c)].re, self.matrix[(r, c)].im]).collect())
            .collect();
        serde_json::json!({ "geometry": self.geom, "rows": rows })
    }
}

/// `m(κ, q)` with default truncation.
pub fn gauge_m(q: &RealField, kappa: f64) -> Result<GaugeData> {
    LaxOperator::from_potential(q)?.gauge(kappa)
}
