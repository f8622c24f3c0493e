//! Lax operator of a one-soliton: its bound state at −c/2 and the gauge `m = (L+κ)⁻¹q₊`.

use bolab::cli::soliton;
use bolab::lax_gauge::LaxOperator;
use bolab::spectral::Geometry;

fn main() -> bolab::Result<()> {
    for c in [0.5, 1.0, 2.0] {
        let l = LaxOperator::from_potential(&soliton(Geometry::line(1.0 / c, 256), c, 0.0)?)?;
        let spec = l.eigen_spectrum(2);
        let g = l.gauge(4.0)?;
        println!(
            "c = {c}: lowest eigenvalues {:.6}, {:.6}; κ_min = {:.4}; gauge residual {:.1e}",
            spec[0].0,
            spec[1].0,
            l.admissibility().kappa_min,
            g.residual
        );
    }
    Ok(())
}
