//! A single numerical comparison, shared by the verification suites and the reports.

use serde::Serialize;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub id: String,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl Check {
    pub fn new(id: impl Into<String>, params: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs());
        let rel_err = if scale == 0.0 { 0.0 } else { abs_err / scale };
        Self { id: id.into(), params: params.into(), lhs, rhs, abs_err, rel_err }
    }

    /// A residual that should vanish, measured against `scale`.
    pub fn residual(id: impl Into<String>, params: impl Into<String>, residual: f64, scale: f64) -> Self {
        let rel_err = if scale == 0.0 { residual } else { residual / scale };
        Self { id: id.into(), params: params.into(), lhs: residual, rhs: 0.0, abs_err: residual, rel_err }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.rel_err <= tol
    }
}
