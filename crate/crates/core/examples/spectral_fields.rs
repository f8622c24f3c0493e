//! Fields on the three geometries: Hilbert transform, Cauchy–Szegő projection, Sobolev norms.

use bolab::spectral::{Geometry, NormSpec, RealField};

fn main() -> bolab::Result<()> {
    for geom in [Geometry::circle(64), Geometry::periodic_box(20.0, 1024), Geometry::line(1.0, 128)] {
        let q = RealField::from_fn(geom, |x| (-(x - 0.5) * (x - 0.5) * 64.0).exp());
        let hh = q.hilbert().hilbert();
        let qp = q.plus(geom.n() / 3);
        println!(
            "{geom}: ∫q = {:.6}, ‖H²q + q + mean‖ = {:.2e}, ‖q‖_H¹ = {:.4}, q₊(0.5+0.1i) = {:.4}",
            q.mean(),
            hh.add(&q).sub(&RealField::from_fn(geom, |_| if geom.is_periodic() { q.mean() / geom.period() } else { 0.0 })).as_field().l2_norm(),
            q.sobolev_norm(NormSpec::new(1.0, 1.0)?),
            qp.eval(num_complex::Complex64::new(0.5, 0.1)),
        );
    }
    Ok(())
}
