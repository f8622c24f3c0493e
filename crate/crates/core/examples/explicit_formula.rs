//! Explicit formula for `q₊(t, z)`: soliton translation and a Gaussian under the `β(κ)` flow.

use bolab::cli::soliton;
use bolab::explicit_virial::{gerard_vs_flow, GerardSystem, PhiSpec};
use bolab::lax_gauge::LaxOperator;
use bolab::spectral::{Geometry, RealField};
use num_complex::Complex64 as C64;

fn main() -> bolab::Result<()> {
    let geom = Geometry::line(1.0, 256);
    let l = LaxOperator::from_potential(&soliton(geom, 1.0, 0.0)?)?;
    let sys = GerardSystem::new(&l, &PhiSpec::bo())?;
    let z = C64::new(0.3, 0.5);
    for t in [0.0, 0.7, 2.0] {
        println!("t = {t}: formula {:.10}, translated {:.10}", sys.evaluate(t, z)?, l.q_plus().eval(z - t));
    }
    let gauss = RealField::from_fn(geom, |x| 0.3 * (-x * x).exp());
    let points = [C64::new(0.0, 0.5), C64::new(1.0, 1.0), C64::new(-1.0, 0.3)];
    for c in gerard_vs_flow(&gauss, &PhiSpec::beta(8.0), 1.0, &points, 1e-2)? {
        println!("{} {}: formula {:.3e} vs stepped, rel err {:.1e}", c.id, c.params, c.abs_err, c.rel_err);
    }
    Ok(())
}
