//! The identity suite on a random periodic potential: gauge identities and Poisson brackets.

use bolab::cli::initial_datum;
use bolab::conserved::identity_suite;
use bolab::lax_gauge::LaxOperator;
use bolab::spectral::Geometry;

fn main() -> bolab::Result<()> {
    let q = initial_datum("random amp=0.05,modes=12", Geometry::circle(256), 2024)?;
    let l = LaxOperator::from_potential(&q)?;
    for c in identity_suite(&l, 12.0, 20.0)? {
        println!("{:<28} {:<24} lhs {:>+.6e} rhs {:>+.6e} rel {:.1e}", c.id, c.params, c.lhs, c.rhs, c.rel_err);
    }
    Ok(())
}
