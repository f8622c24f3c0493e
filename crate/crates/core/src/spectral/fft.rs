use std::cell::RefCell;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized forward DFT: `b_k = Σ_j a_j e^{-2πijk/n}`.
pub fn forward(buf: &mut [C64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// In-place unnormalized inverse DFT: `a_j = Σ_k b_k e^{2πijk/n}`.
pub fn inverse(buf: &mut [C64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
}
