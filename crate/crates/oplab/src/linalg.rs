//! Small dense solves for Newton systems.
//!
//! Dimensions here are tiny (d ≤ 10 in practice), so a partial-pivoting LU
//! from nalgebra is plenty; what matters is a consistent, scale-relative
//! singularity test so that degenerate Hessians surface as structured errors
//! instead of NaN iterates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative determinant floor: H counts as singular when
/// |det H| ≤ SINGULARITY_RTOL · ‖H‖_∞^d.
pub const SINGULARITY_RTOL: f64 = 1e-14;

/// Solves H·Δ = g for Δ with H given row-major (d×d).
///
/// `at` is the parameter point the system came from; it is echoed in the
/// singular-Hessian error so callers can report where Newton broke down.
pub fn solve_linear(h: &[f64], g: &[f64], dim: usize, at: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(h.len(), dim * dim, "Hessian shape mismatch");
    assert_eq!(g.len(), dim, "gradient shape mismatch");

    if dim == 1 {
        // The d-dim path below works here too, but the scalar case is hot
        // (every 1-D Newton step) and clearer inline. Scale-relative testing
        // is vacuous for a 1×1 system, so only an exact zero (or an overflow
        // in the quotient) counts as singular; a merely tiny curvature gives
        // a huge step that the iteration drivers' divergence guard handles.
        let step = g[0] / h[0];
        if h[0] == 0.0 || !step.is_finite() {
            return Err(Error::SingularHessian { at: at.to_vec() });
        }
        return Ok(vec![step]);
    }

    let m = DMatrix::from_row_slice(dim, dim, h);
    let scale = m
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let lu = m.lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() <= SINGULARITY_RTOL * scale.powi(dim as i32) {
        return Err(Error::SingularHessian { at: at.to_vec() });
    }
    let rhs = DVector::from_column_slice(g);
    match lu.solve(&rhs) {
        Some(sol) => Ok(sol.iter().copied().collect()),
        None => Err(Error::SingularHessian { at: at.to_vec() }),
    }
}
