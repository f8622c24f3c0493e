//! Covariance of `β` under scaling (line) and Galilean boosts (circle).

use bolab::cli::{initial_datum, soliton};
use bolab::conserved::{symmetry_covariance, Transform};
use bolab::spectral::Geometry;

fn main() -> bolab::Result<()> {
    let line = soliton(Geometry::line(1.0, 256), 1.0, 0.0)?;
    for r in symmetry_covariance(&line, Transform::Scale(2.0), &[4.0, 8.0])? {
        println!("scale λ=2, κ = {}: {:.12} vs {:.12}", r.kappa, r.lhs, r.rhs);
    }
    let circ = initial_datum("random amp=0.2,modes=6", Geometry::circle(128), 7)?;
    for r in symmetry_covariance(&circ, Transform::Galilei(0.3), &[4.0, 8.0])? {
        println!("Galilei c=0.3, κ = {}: {:.12} vs {:.12}", r.kappa, r.lhs, r.rhs);
    }
    Ok(())
}
