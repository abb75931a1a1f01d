//! Central finite-difference gradient oracle.
//!
//! Verification utility used by the test suites: it evaluates a scalar loss
//! as a black box under parameter perturbations, independent of the reverse
//! sweep it is checking.

use crate::autodiff::Parameter;

/// Central difference step in f64; small enough for 1e-4/1e-5 relative
/// targets, large enough to stay above rounding noise on O(1) losses.
pub const FD_STEP: f64 = 1e-6;

/// Result of one gradient comparison.
#[derive(Debug, Clone, Copy)]
pub struct GradMismatch {
    pub param: usize,
    pub element: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    let diff = (a - b).abs();
    if diff <= 1e-8 {
        0.0
    } else {
        diff / scale
    }
}

/// Compares stored gradients against central finite differences of `loss_fn`
/// over every element of every parameter. Returns the worst mismatch above
/// `tol`, or `None` if all gradients agree.
pub fn check_gradients(
    params: &mut [Parameter],
    tol: f64,
    mut loss_fn: impl FnMut(&[Parameter]) -> f64,
) -> Option<GradMismatch> {
    let mut worst: Option<GradMismatch> = None;
    for pi in 0..params.len() {
        for ei in 0..params[pi].value.numel() {
            let orig = params[pi].value.data()[ei];
            params[pi].value.data_mut()[ei] = orig + FD_STEP;
            let plus = loss_fn(params);
            params[pi].value.data_mut()[ei] = orig - FD_STEP;
            let minus = loss_fn(params);
            params[pi].value.data_mut()[ei] = orig;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let analytic = params[pi].gradient.data()[ei];
            let err = rel_err(analytic, numeric);
            if err > tol && worst.map_or(true, |w| err > w.rel_err) {
                worst = Some(GradMismatch {
                    param: pi,
                    element: ei,
                    analytic,
                    numeric,
                    rel_err: err,
                });
            }
        }
    }
    worst
}
