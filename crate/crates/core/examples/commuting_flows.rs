//! `e^{tJ∇H_BO}` against `e^{tJ∇(H_BO−H_κ)} e^{tJ∇H_κ}`: error across κ and its dt-convergence.

use bolab::cli::soliton;
use bolab::flows::commuting_flows_study;
use bolab::spectral::Geometry;

fn main() -> bolab::Result<()> {
    let q = soliton(Geometry::periodic_box(50.0, 512), 1.0, 0.0)?;
    let study = commuting_flows_study(&q, &[8.0, 16.0, 32.0], 0.5, &[4e-3, 2e-3, 1e-3])?;
    for r in &study.rows {
        println!("κ = {:>4}, dt = {:.0e}: L² {:.2e}, H⁻² {:.2e}", r.kappa, r.dt, r.l2, r.h_minus2);
    }
    println!("monotone in κ: {}; observed orders {:?}", study.monotone_in_kappa, study.orders);
    Ok(())
}
