//! Discretization layer.
//!
//! Three geometries share one representation — `n` complex coefficients in natural FFT order
//! (`k = 0, 1, …, n/2−1, −n/2, …, −1`) together with a uniform angular grid
//! `φ_j = φ₀ + 2πj/n` on which `Σ_k a_k e^{ikφ_j}` is evaluated by FFT:
//!
//! * [`Geometry::Circle`]: `𝕋 = ℝ/ℤ`, `f = Σ f̂(ξ) e^{iξx}`, `ξ ∈ 2πℤ`, `f̂(ξ) = ∫₀¹ e^{−iξx} f`.
//! * [`Geometry::Box`]: the same on a centered period-`Λ` box, `ξ ∈ (2π/Λ)ℤ`.
//! * [`Geometry::Line`]: the rational basis of [`line`], exact on `ℝ`.
//!
//! In every geometry multiplication by a bounded function is the Laurent (Toeplitz) operator
//! of its samples on the angular grid, and the Hardy space is spanned by `k ≥ 0`.

pub mod fft;
pub mod line;

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Spatial geometry and resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    /// Period-1 circle with `n` grid points.
    Circle { n: usize },
    /// Centered periodic box `[−Λ/2, Λ/2)` with `n` grid points.
    Box { length: f64, n: usize },
    /// Real line in the rational basis with length scale `ℓ` and `n` coefficients.
    Line { scale: f64, n: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    n: usize,
}

impl Serialize for Geometry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match *self {
            Geometry::Circle { n } => GeometryRepr { kind: "circle".into(), length: Some(1.0), scale: None, n },
            Geometry::Box { length, n } => GeometryRepr { kind: "box".into(), length: Some(length), scale: None, n },
            Geometry::Line { scale, n } => GeometryRepr { kind: "line".into(), length: None, scale: Some(scale), n },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Geometry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GeometryRepr::deserialize(d)?;
        let g = match r.kind.as_str() {
            "circle" => Geometry::Circle { n: r.n },
            "box" => Geometry::Box { length: r.length.unwrap_or(50.0), n: r.n },
            "line" => Geometry::Line { scale: r.scale.unwrap_or(1.0), n: r.n },
            other => return Err(serde::de::Error::custom(format!("unknown geometry kind {other:?}"))),
        };
        g.validate().map_err(serde::de::Error::custom)?;
        Ok(g)
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Circle { n } => write!(f, "circle(n={n})"),
            Geometry::Box { length, n } => write!(f, "box(L={length},n={n})"),
            Geometry::Line { scale, n } => write!(f, "line(scale={scale},n={n})"),
        }
    }
}

impl Geometry {
    pub fn circle(n: usize) -> Self {
        Geometry::Circle { n }
    }

    pub fn periodic_box(length: f64, n: usize) -> Self {
        Geometry::Box { length, n }
    }

    pub fn line(scale: f64, n: usize) -> Self {
        Geometry::Line { scale, n }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGeometry(format!("n = {n} must be a power of two ≥ 8")));
        }
        match *self {
            Geometry::Box { length, .. } if !(length > 0.0 && length.is_finite()) => {
                Err(Error::InvalidGeometry(format!("box length {length} must be positive")))
            }
            Geometry::Line { scale, .. } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::InvalidGeometry(format!("line scale {scale} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Geometry::Circle { n } | Geometry::Box { n, .. } | Geometry::Line { n, .. } => n,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Geometry::Circle { .. } => "circle",
            Geometry::Box { .. } => "box",
            Geometry::Line { .. } => "line",
        }
    }

    /// Periodic geometries carry the circle conventions (zero mode in both projections).
    pub fn is_periodic(&self) -> bool {
        !matches!(self, Geometry::Line { .. })
    }

    /// Whether this geometry models the real line (box or rational basis).
    pub fn models_line(&self) -> bool {
        !matches!(self, Geometry::Circle { .. })
    }

    /// Period of a periodic geometry.
    pub fn period(&self) -> f64 {
        match *self {
            Geometry::Circle { .. } => 1.0,
            Geometry::Box { length, .. } => length,
            Geometry::Line { .. } => f64::INFINITY,
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Geometry::Line { scale, .. } => scale,
            _ => 1.0,
        }
    }

    /// Same geometry with a different resolution.
    pub fn with_n(&self, n: usize) -> Self {
        match *self {
            Geometry::Circle { .. } => Geometry::Circle { n },
            Geometry::Box { length, .. } => Geometry::Box { length, n },
            Geometry::Line { scale, .. } => Geometry::Line { scale, n },
        }
    }

    /// Signed mode index stored in slot `s`.
    pub fn index(&self, s: usize) -> i64 {
        let n = self.n();
        if s < n / 2 {
            s as i64
        } else {
            s as i64 - n as i64
        }
    }

    /// Slot of mode `k`, if representable.
    pub fn slot(&self, k: i64) -> Option<usize> {
        let h = (self.n() / 2) as i64;
        if k >= -h && k < h {
            Some(k.rem_euclid(self.n() as i64) as usize)
        } else {
            None
        }
    }

    /// Frequency of mode `k` on periodic geometries (`2πk/period`).
    pub fn frequency(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.period()
    }

    /// Weight `w` with `∫|f|² = w Σ|a_k|²`.
    pub fn weight(&self) -> f64 {
        match *self {
            Geometry::Line { .. } => 1.0,
            _ => self.period(),
        }
    }

    /// Number of modes kept by the 2/3 rule on each side.
    pub fn dealias_band(&self) -> usize {
        self.n() / 3
    }

    /// Whether mode `k` survives dealiasing.
    pub fn keeps(&self, k: i64) -> bool {
        let b = self.dealias_band() as i64;
        match self {
            Geometry::Line { .. } => k >= -b && k < b,
            _ => k.abs() <= b,
        }
    }

    /// Conjugate partner: `conj(f)` has coefficient `conj(a_k)` at `partner(k)`.
    pub fn partner(&self, k: i64) -> i64 {
        match self {
            Geometry::Line { .. } => -k - 1,
            _ => -k,
        }
    }

    fn phase0(&self) -> f64 {
        let n = self.n() as f64;
        match self {
            Geometry::Circle { .. } => 0.0,
            Geometry::Box { .. } => -PI,
            Geometry::Line { .. } => -PI + PI / n,
        }
    }

    /// Angular grid `φ_j`.
    pub fn angles(&self) -> Vec<f64> {
        let n = self.n();
        let p0 = self.phase0();
        (0..n).map(|j| p0 + 2.0 * PI * j as f64 / n as f64).collect()
    }

    /// Physical grid points `x_j`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.n() as f64;
        match *self {
            Geometry::Circle { .. } => (0..self.n()).map(|j| j as f64 / n).collect(),
            Geometry::Box { length, .. } => (0..self.n()).map(|j| -0.5 * length + length * j as f64 / n).collect(),
            Geometry::Line { scale, .. } => self.angles().iter().map(|t| scale * (0.5 * t).tan()).collect(),
        }
    }

    /// Factor `w_j` with `f(x_j) = w_j Σ a_k e^{ikφ_j}` (identically one on periodic geometries).
    pub fn kernel(&self) -> Option<Vec<C64>> {
        match *self {
            Geometry::Line { scale, .. } => {
                let c = 1.0 / (2.0 * (PI * scale).sqrt());
                Some(self.angles().iter().map(|&t| (C64::new(1.0, 0.0) + C64::cis(t)) * c).collect())
            }
            _ => None,
        }
    }

    /// `Σ_k a_k e^{ikφ_j}` for all `j`.
    pub fn synthesize(&self, coeffs: &[C64]) -> Vec<C64> {
        let p0 = self.phase0();
        let mut buf: Vec<C64> = coeffs
            .iter()
            .enumerate()
            .map(|(s, c)| if p0 == 0.0 { *c } else { c * C64::cis(self.index(s) as f64 * p0) })
            .collect();
        fft::inverse(&mut buf);
        buf
    }

    /// Inverse of [`Self::synthesize`].
    pub fn analyze(&self, vals: &[C64]) -> Vec<C64> {
        let n = self.n();
        let p0 = self.phase0();
        let mut buf = vals.to_vec();
        fft::forward(&mut buf);
        let inv = 1.0 / n as f64;
        for (s, c) in buf.iter_mut().enumerate() {
            *c *= inv;
            if p0 != 0.0 {
                *c *= C64::cis(-(self.index(s) as f64) * p0);
            }
        }
        buf
    }

    pub fn check_same(&self, other: &Geometry) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(self.to_string(), other.to_string()))
        }
    }
}

/// Regularity exponent σ and weight κ of the norm `Σ (|ξ|+κ)^{2σ} |f̂(ξ)|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub sigma: f64,
    pub kappa: f64,
}

impl NormSpec {
    pub fn new(sigma: f64, kappa: f64) -> Result<Self> {
        if !(kappa >= 1.0) {
            return Err(Error::Config(format!("norm weight kappa = {kappa} must be ≥ 1")));
        }
        Ok(Self { sigma, kappa })
    }
}

/// A complex function in the chosen discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    geom: Geometry,
    coeffs: Vec<C64>,
}

impl Field {
    pub fn zeros(geom: Geometry) -> Self {
        Self { geom, coeffs: vec![ZERO; geom.n()] }
    }

    pub fn from_coeffs(geom: Geometry, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != geom.n() {
            return Err(Error::InvalidGeometry(format!(
                "{} coefficients for {geom}",
                coeffs.len()
            )));
        }
        Ok(Self { geom, coeffs })
    }

    /// Samples `f(x_j)` on the physical grid and transforms.
    pub fn from_fn(geom: Geometry, f: impl Fn(f64) -> C64) -> Self {
        let vals: Vec<C64> = geom.grid().into_iter().map(f).collect();
        Self::from_values(geom, &vals)
    }

    /// Transforms grid values `f(x_j)`.
    pub fn from_values(geom: Geometry, vals: &[C64]) -> Self {
        let coeffs = match geom.kernel() {
            Some(w) => geom.analyze(&vals.iter().zip(&w).map(|(v, w)| v / w).collect::<Vec<_>>()),
            None => geom.analyze(vals),
        };
        Self { geom, coeffs }
    }

    /// Single Fourier mode `e^{iξ_k x}` on a periodic geometry, or `ρ_k` on the line.
    pub fn mode(geom: Geometry, k: i64, amplitude: C64) -> Self {
        let mut f = Self::zeros(geom);
        if let Some(s) = geom.slot(k) {
            f.coeffs[s] = amplitude;
        }
        f
    }

    pub fn geometry(&self) -> Geometry {
        self.geom
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// Coefficient of mode `k` (zero if not representable).
    pub fn coeff(&self, k: i64) -> C64 {
        self.geom.slot(k).map_or(ZERO, |s| self.coeffs[s])
    }

    /// Values `F_j = Σ a_k e^{ikφ_j}` on the angular grid.
    pub fn angular_values(&self) -> Vec<C64> {
        self.geom.synthesize(&self.coeffs)
    }

    /// Values `f(x_j)` on the physical grid.
    pub fn values(&self) -> Vec<C64> {
        let mut v = self.angular_values();
        if let Some(w) = self.geom.kernel() {
            v.iter_mut().zip(&w).for_each(|(v, w)| *v *= w);
        }
        v
    }

    pub fn conj(&self) -> Self {
        let mut out = Self::zeros(self.geom);
        for s in 0..self.coeffs.len() {
            let k = self.geom.index(s);
            // the periodic Nyquist mode is its own partner on the grid
            let t = self.geom.slot(self.geom.partner(k)).unwrap_or(s);
            out.coeffs[t] = self.coeffs[s].conj();
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { geom: self.geom, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        Self { geom: self.geom, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn axpy(&self, c: C64, other: &Field) -> Self {
        debug_assert_eq!(self.geom, other.geom);
        Self {
            geom: self.geom,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + c * b).collect(),
        }
    }

    /// Same function at resolution `n` (zero-padding or truncating the mode range).
    pub fn resample(&self, n: usize) -> Self {
        let geom = self.geom.with_n(n);
        let mut out = Self::zeros(geom);
        for s in 0..self.coeffs.len() {
            if let Some(t) = geom.slot(self.geom.index(s)) {
                out.coeffs[t] = self.coeffs[s];
            }
        }
        out
    }

    /// Zero every mode outside the 2/3 band.
    pub fn dealias(mut self) -> Self {
        for s in 0..self.coeffs.len() {
            if !self.geom.keeps(self.geom.index(s)) {
                self.coeffs[s] = ZERO;
            }
        }
        self
    }

    /// Pointwise product, 2/3-rule truncated.
    pub fn mul(&self, other: &Field) -> Result<Self> {
        self.geom.check_same(&other.geom)?;
        Ok(self.mul_raw(other).dealias())
    }

    /// Pointwise product without truncation (aliased modes remain).
    pub fn mul_raw(&self, other: &Field) -> Self {
        let a = self.angular_values();
        let b = other.angular_values();
        let mut p: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        if let Some(w) = self.geom.kernel() {
            p.iter_mut().zip(&w).for_each(|(v, w)| *v *= w);
        }
        Self { geom: self.geom, coeffs: self.geom.analyze(&p) }
    }

    /// Multiplication by a bounded function given by its physical grid values.
    pub fn mul_values(&self, h: &[C64]) -> Self {
        let a = self.angular_values();
        let p: Vec<C64> = a.iter().zip(h).map(|(x, y)| x * y).collect();
        Self { geom: self.geom, coeffs: self.geom.analyze(&p) }
    }

    /// Applies a pointwise map to grid values.
    pub fn map_values(&self, f: impl Fn(C64) -> C64) -> Self {
        let v: Vec<C64> = self.values().into_iter().map(f).collect();
        Self::from_values(self.geom, &v)
    }

    /// `f′`.
    pub fn deriv(&self) -> Self {
        match self.geom {
            Geometry::Line { scale, n } => {
                // natural order → increasing index, apply −i∂, multiply by i
                let h = n / 2;
                let ordered: Vec<C64> = (0..n).map(|i| self.coeffs[(i + h) % n]).collect();
                let d = line::apply_d(&ordered, -(h as i64), scale);
                let mut out = Self::zeros(self.geom);
                for i in 0..n {
                    out.coeffs[(i + h) % n] = I * d[i];
                }
                out
            }
            _ => self.apply_symbol(|xi| I * xi),
        }
    }

    /// Fourier multiplier `s(ξ)` applied mode by mode (odd symbols vanish at the Nyquist slot).
    ///
    /// On the line the frequency variable is realized by the spectral calculus of `−i∂` on each
    /// half: the Hardy block sees `ξ = λ > 0`, its mirror sees `ξ = −λ`.
    pub fn apply_symbol(&self, s: impl Fn(f64) -> C64) -> Self {
        let mut out = Self::zeros(self.geom);
        match self.geom {
            Geometry::Line { scale, n } => {
                let h = n / 2;
                let b = line::basis(h, scale);
                let pos: Vec<C64> = (0..h).map(|k| self.coeffs[k]).collect();
                let neg: Vec<C64> = (0..h).map(|j| self.coeffs[n - 1 - j]).collect();
                let p = b.apply(&pos, &s);
                let q = b.apply(&neg, |l| s(-l));
                for k in 0..h {
                    out.coeffs[k] = p[k];
                    out.coeffs[n - 1 - k] = q[k];
                }
            }
            _ => {
                let n = self.geom.n();
                for sl in 0..n {
                    let k = self.geom.index(sl);
                    let xi = self.geom.frequency(k);
                    let m = if k == -((n / 2) as i64) { 0.5 * (s(xi) + s(-xi)) } else { s(xi) };
                    out.coeffs[sl] = self.coeffs[sl] * m;
                }
            }
        }
        out
    }

    /// `Hf`, symbol `−i sgn ξ` with `sgn 0 = 0`.
    pub fn hilbert(&self) -> Self {
        match self.geom {
            Geometry::Line { n, .. } => {
                let mut out = self.clone();
                for s in 0..n {
                    out.coeffs[s] *= if self.geom.index(s) >= 0 { -I } else { I };
                }
                out
            }
            _ => self.apply_symbol(|xi| if xi > 0.0 { -I } else if xi < 0.0 { I } else { ZERO }),
        }
    }

    /// `C₊f` (`sign = +1`) or `C₋f` (`sign = −1`); the periodic zero mode belongs to both.
    pub fn cauchy_szego(&self, sign: i32) -> Self {
        let mut out = self.clone();
        let line = !self.geom.is_periodic();
        let nyq = -((self.geom.n() / 2) as i64);
        for s in 0..self.coeffs.len() {
            let k = self.geom.index(s);
            let keep = if line {
                if sign > 0 { k >= 0 } else { k < 0 }
            } else if k == 0 {
                true
            } else if k == nyq {
                false
            } else if sign > 0 {
                k > 0
            } else {
                k < 0
            };
            if !keep {
                out.coeffs[s] = ZERO;
            }
        }
        out
    }

    pub fn cplus(&self) -> Self {
        self.cauchy_szego(1)
    }

    pub fn cminus(&self) -> Self {
        self.cauchy_szego(-1)
    }

    /// First `m` nonnegative modes.
    pub fn hardy(&self, m: usize) -> HardyField {
        HardyField {
            geom: self.geom,
            coeffs: (0..m.min(self.geom.n() / 2)).map(|k| self.coeffs[k]).collect(),
        }
    }

    /// `∫ f dx` (over one period, or over ℝ for functions decaying faster than `1/|x|`).
    pub fn integral(&self) -> C64 {
        match self.geom {
            Geometry::Line { scale, n } => {
                let mut pos = ZERO;
                let mut neg = ZERO;
                for s in 0..n {
                    let k = self.geom.index(s);
                    let sg = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    if k >= 0 {
                        pos += self.coeffs[s] * sg;
                    } else {
                        neg += self.coeffs[s] * sg;
                    }
                }
                (pos - neg) * (PI * scale).sqrt()
            }
            _ => self.coeffs[0] * self.geom.weight(),
        }
    }

    /// `⟨f, g⟩ = ∫ conj(f) g`.
    pub fn inner(&self, other: &Field) -> C64 {
        let s: C64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum();
        s * self.geom.weight()
    }

    /// `∫ f g`.
    pub fn integrate_product(&self, other: &Field) -> C64 {
        self.conj().inner(other)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `(Σ (|ξ|+κ)^{2σ}|f̂|²)^{1/2}` with the geometry's weight.
    pub fn sobolev_norm(&self, spec: NormSpec) -> f64 {
        self.weighted_mass(spec, |_| true).sqrt()
    }

    /// Weighted mass at frequencies `|ξ| ≥ cutoff`.
    pub fn tail_mass(&self, spec: NormSpec, cutoff: f64) -> f64 {
        self.weighted_mass(spec, |xi| xi.abs() >= cutoff)
    }

    fn weighted_mass(&self, spec: NormSpec, sel: impl Fn(f64) -> bool) -> f64 {
        let wt = |xi: f64| if sel(xi) { (xi.abs() + spec.kappa).powf(2.0 * spec.sigma) } else { 0.0 };
        match self.geom {
            Geometry::Line { scale, n } => {
                let h = n / 2;
                let b = line::basis(h, scale);
                let pos: Vec<C64> = (0..h).map(|k| self.coeffs[k]).collect();
                let neg: Vec<C64> = (0..h).map(|j| self.coeffs[n - 1 - j]).collect();
                let p = b.project(&pos);
                let q = b.project(&neg);
                b.evals
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| wt(l) * p[i].norm_sqr() + wt(-l) * q[i].norm_sqr())
                    .sum()
            }
            _ => {
                let w = self.geom.weight();
                (0..self.coeffs.len())
                    .map(|s| wt(self.geom.frequency(self.geom.index(s))) * self.coeffs[s].norm_sqr())
                    .sum::<f64>()
                    * w
            }
        }
    }

    /// `x f` (box: grid multiplication by the centered coordinate; line: exact recurrence).
    pub fn mul_x(&self) -> Self {
        match self.geom {
            Geometry::Line { scale, n } => {
                let h = n / 2;
                let ordered: Vec<C64> = (0..n).map(|i| self.coeffs[(i + h) % n]).collect();
                let g = line::x_full(&ordered, scale);
                let mut out = Self::zeros(self.geom);
                for i in 0..n {
                    out.coeffs[(i + h) % n] = g[i];
                }
                out
            }
            _ => {
                let x = self.geom.grid();
                let v: Vec<C64> = self.values().iter().zip(&x).map(|(v, x)| v * x).collect();
                Self::from_values(self.geom, &v)
            }
        }
    }

    /// Largest `|f|` over the outer 10% of a box, relative to the peak.
    pub fn boundary_amplitude(&self) -> Option<f64> {
        match self.geom {
            Geometry::Box { length, .. } => {
                let x = self.geom.grid();
                let v = self.values();
                let peak = v.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let edge = v
                    .iter()
                    .zip(&x)
                    .filter(|(_, x)| x.abs() >= 0.4 * length)
                    .map(|(v, _)| v.norm())
                    .fold(0.0, f64::max);
                Some(if peak > 0.0 { edge / peak } else { 0.0 })
            }
            _ => None,
        }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let c = self.conj();
        let scale = self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max).max(1e-300);
        self.coeffs.iter().zip(&c.coeffs).all(|(a, b)| (a - b).norm() <= tol * scale)
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.axpy(C64::new(1.0, 0.0), rhs)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.axpy(C64::new(-1.0, 0.0), rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale_re(-1.0)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scale_re(rhs)
    }
}

/// A real-valued field.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField(Field);

impl std::ops::Deref for RealField {
    type Target = Field;
    fn deref(&self) -> &Field {
        &self.0
    }
}

impl RealField {
    /// Real part of an arbitrary field.
    pub fn from_field(f: &Field) -> Self {
        let c = f.conj();
        RealField(f.axpy(C64::new(1.0, 0.0), &c).scale_re(0.5))
    }

    pub fn zeros(geom: Geometry) -> Self {
        RealField(Field::zeros(geom))
    }

    pub fn from_fn(geom: Geometry, f: impl Fn(f64) -> f64) -> Self {
        Self::from_field(&Field::from_fn(geom, |x| C64::new(f(x), 0.0)))
    }

    pub fn from_values(geom: Geometry, vals: &[f64]) -> Self {
        let v: Vec<C64> = vals.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_field(&Field::from_values(geom, &v))
    }

    pub fn from_coeffs(geom: Geometry, coeffs: Vec<C64>) -> Result<Self> {
        Ok(Self::from_field(&Field::from_coeffs(geom, coeffs)?))
    }

    /// Constant `c`; periodic geometries only.
    pub fn constant(geom: Geometry, c: f64) -> Result<Self> {
        if !geom.is_periodic() {
            return Err(Error::WrongGeometry { expected: "periodic", got: geom.to_string() });
        }
        Ok(RealField(Field::mode(geom, 0, C64::new(c, 0.0))))
    }

    pub fn as_field(&self) -> &Field {
        &self.0
    }

    pub fn into_field(self) -> Field {
        self.0
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.0.values().iter().map(|v| v.re).collect()
    }

    pub fn add(&self, other: &RealField) -> Self {
        RealField(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &RealField) -> Self {
        RealField(&self.0 - &other.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        RealField(self.0.scale_re(c))
    }

    pub fn axpy(&self, c: f64, other: &RealField) -> Self {
        RealField(self.0.axpy(C64::new(c, 0.0), &other.0))
    }

    pub fn deriv(&self) -> Self {
        RealField(self.0.deriv())
    }

    pub fn hilbert(&self) -> Self {
        RealField(self.0.hilbert())
    }

    pub fn dealias(&self) -> Self {
        RealField(self.0.clone().dealias())
    }

    /// Dealiased product.
    pub fn mul(&self, other: &RealField) -> Result<Self> {
        Ok(Self::from_field(&self.0.mul(&other.0)?))
    }

    pub fn mean(&self) -> f64 {
        self.0.integral().re
    }

    /// `∫ f g` for real fields.
    pub fn dot(&self, other: &RealField) -> f64 {
        self.0.inner(&other.0).re
    }

    /// `x f` as a real field.
    pub fn mul_x(&self) -> Self {
        Self::from_field(&self.0.mul_x())
    }

    /// Applies a symbol with `s(−ξ) = conj s(ξ)`, which preserves reality.
    pub fn apply_symbol(&self, s: impl Fn(f64) -> C64) -> Self {
        Self::from_field(&self.0.apply_symbol(s))
    }

    /// `C₊f`.
    pub fn plus(&self, m: usize) -> HardyField {
        self.0.hardy(m)
    }

    /// `λ f(λx)`, represented exactly by shrinking the box length or line scale by `λ`.
    pub fn rescale(&self, lambda: f64) -> Result<Self> {
        let geom = match self.0.geom {
            Geometry::Box { length, n } => Geometry::Box { length: length / lambda, n },
            Geometry::Line { scale, n } => Geometry::Line { scale: scale / lambda, n },
            g => return Err(Error::WrongGeometry { expected: "box or line", got: g.to_string() }),
        };
        // Fourier coefficients carry over unchanged; ρ_k(λx) = λ^{-1/2} ρ_k at the new scale
        let c = match self.0.geom {
            Geometry::Line { .. } => lambda.sqrt(),
            _ => lambda,
        };
        Ok(RealField(Field { geom, coeffs: self.0.coeffs.iter().map(|a| a * c).collect() }))
    }
}

/// A Hardy-space function: nonnegative modes `k = 0, …, M−1` only.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyField {
    geom: Geometry,
    coeffs: Vec<C64>,
}

impl HardyField {
    pub fn new(geom: Geometry, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() > geom.n() / 2 {
            return Err(Error::TooManyModes { requested: coeffs.len(), limit: geom.n() / 2 });
        }
        Ok(Self { geom, coeffs })
    }

    pub fn zeros(geom: Geometry, m: usize) -> Self {
        Self { geom, coeffs: vec![ZERO; m.min(geom.n() / 2)] }
    }

    pub fn geometry(&self) -> Geometry {
        self.geom
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Embeds into a full field (negative modes zero).
    pub fn to_field(&self) -> Field {
        let mut f = Field::zeros(self.geom);
        f.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        f
    }

    pub fn inner(&self, other: &HardyField) -> C64 {
        let s: C64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum();
        s * self.geom.weight()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { geom: self.geom, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn axpy(&self, c: C64, other: &HardyField) -> Self {
        Self {
            geom: self.geom,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + c * b).collect(),
        }
    }

    /// Truncates or zero-pads to `m` modes.
    pub fn resized(&self, m: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(m.min(self.geom.n() / 2), ZERO);
        Self { geom: self.geom, coeffs: c }
    }

    /// Analytic continuation `f(z)`, `Im z > 0`.
    pub fn eval(&self, z: C64) -> C64 {
        match self.geom {
            Geometry::Line { scale, .. } => line::eval_hardy(&self.coeffs, z, scale),
            _ => self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * (I * self.geom.frequency(k as i64) * z).exp())
                .sum(),
        }
    }

    /// Sup norm on the physical grid.
    pub fn max_abs(&self) -> f64 {
        self.to_field().max_abs()
    }
}

/// Dealiased product by direct convolution of periodic coefficient vectors.
#[cfg(test)]
pub(crate) fn direct_convolution(geom: Geometry, a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = geom.n();
    let mut out = vec![ZERO; n];
    for i in 0..n {
        for j in 0..n {
            let k = geom.index(i) + geom.index(j);
            if let Some(s) = geom.slot(k) {
                if geom.keeps(k) {
                    out[s] += a[i] * b[j];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
