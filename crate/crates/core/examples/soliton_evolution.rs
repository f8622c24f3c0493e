//! Benjamin–Ono evolution of a periodized soliton with conservation monitors.

use bolab::cli::soliton;
use bolab::flows::{evolve, Flow, FlowSpec};
use bolab::spectral::Geometry;

fn main() -> bolab::Result<()> {
    let q = soliton(Geometry::periodic_box(50.0, 512), 1.0, 0.0)?;
    let traj = evolve(&q, &FlowSpec::new(Flow::Bo, 1e-3, 2.0).with_stride(250).with_monitors(&[8.0, 16.0]))?;
    for s in &traj.samples {
        let m = &s.monitor;
        let peak = s.q.real_values().iter().cloned().fold(f64::MIN, f64::max);
        println!("t = {:.2}: P = {:.10}, H_BO = {:.10}, β(8) = {:.10}, peak {peak:.6}", m.t, m.p, m.h_bo, m.beta["8"]);
    }
    for (k, d) in traj.drifts() {
        println!("drift {k}: {d:.2e}");
    }
    Ok(())
}
