//! Centroid functionals, their virial brackets and the quadratic-in-time law along the `β` flow.

use bolab::cli::soliton;
use bolab::explicit_virial::{centroids, cofp_speed_check, virial_checks, vofp_time_law};
use bolab::lax_gauge::LaxOperator;
use bolab::spectral::Geometry;

fn main() -> bolab::Result<()> {
    let q = soliton(Geometry::line(1.0, 256), 1.0, 0.3)?;
    let l = LaxOperator::from_potential(&q)?;
    println!("{:?}", centroids(&l, Some(20.0))?);
    for c in virial_checks(&l, 8.0, 20.0)? {
        println!("{:<26} lhs {:+.8} rhs {:+.8} rel {:.1e}", c.id, c.lhs, c.rhs, c.rel_err);
    }
    let speed = cofp_speed_check(&q, 8.0, 0.05, 1e-3)?;
    println!("CofP speed {:+.8} vs κβ′ {:+.8}", speed.lhs, speed.rhs);
    let law = vofp_time_law(&q, 8.0, 1.0, 1e-3, 10)?;
    println!("VofP fit {:?}\n     predicted {:?}", law.fit, law.predicted);
    Ok(())
}
