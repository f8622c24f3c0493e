//! `β(κ)` with its κ-derivatives, and the large-κ fit recovering `P`, `H_BO` and `H₂`.

use std::f64::consts::PI;

use bolab::cli::soliton;
use bolab::conserved::{beta_derivatives, beta_expansion_check, h_kappa, polynomial_hamiltonians};
use bolab::lax_gauge::LaxOperator;
use bolab::spectral::Geometry;

fn main() -> bolab::Result<()> {
    let q = soliton(Geometry::line(1.0, 256), 1.0, 0.0)?;
    let l = LaxOperator::from_potential(&q)?;
    println!("{:>8} {:>12} {:>12} {:>12} {:>12}", "kappa", "beta", "exact", "dbeta", "H_kappa");
    for kappa in [2.0, 4.0, 8.0, 16.0, 32.0] {
        let d = beta_derivatives(&l, kappa, 1)?;
        println!("{kappa:>8} {:>12.8} {:>12.8} {:>12.8} {:>12.8}", d[0], PI / (kappa - 0.5), d[1], h_kappa(&l, kappa)?);
    }
    let kappas: Vec<f64> = (0..12).map(|j| 20.0 * 1.25f64.powi(j)).collect();
    let fit = beta_expansion_check(&l, &kappas)?;
    let h = polynomial_hamiltonians(&q);
    println!("fit P = {:.8} ({:.8}), H_BO = {:.8} ({:.8}), H2 = {:.6} ({:.6})", fit.p, h.p, fit.h_bo, h.h_bo, fit.h2, h.h2);
    Ok(())
}
