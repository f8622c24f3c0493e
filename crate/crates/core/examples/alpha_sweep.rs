//! Perturbation-determinant `α(κ)`: series against the `β` integral over an amplitude sweep.

use std::f64::consts::PI;

use bolab::conserved::perturbation_determinant_alpha;
use bolab::lax_gauge::LaxOperator;
use bolab::spectral::{Geometry, RealField};

fn main() -> bolab::Result<()> {
    let geom = Geometry::circle(64);
    let mut last: Option<f64> = None;
    for a in [0.025, 0.05, 0.1, 0.2, 0.4] {
        let q = RealField::from_fn(geom, |x| a * (2.0 * PI * x).cos());
        let r = perturbation_determinant_alpha(&LaxOperator::from_potential(&q)?, 3.0)?;
        let ratio = last.map(|d| format!("{:.3}", r.difference / d)).unwrap_or_default();
        println!("a = {a:<6} series {:+.12e} β-integral {:+.12e} difference {:+.3e} {ratio}", r.series, r.beta_sum, r.difference);
        last = Some(r.difference);
    }
    Ok(())
}
