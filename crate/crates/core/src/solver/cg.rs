use alloc::vec;

use crate::volume::dot;

/// Outcome of a [`cg_solve`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    /// Set when a search direction had non-positive curvature.
    pub breakdown: bool,
}

/// Conjugate gradients on `A x = b`, starting from the contents of `x`.
///
/// `apply(p, out)` must write `A p` into `out`. Stops after `max_iter`
/// iterations or once `||r|| <= rel_tol * ||b||`.
pub fn cg_solve(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    max_iter: usize,
    rel_tol: f64,
) -> CgReport {
    let n = b.len();
    assert_eq!(x.len(), n, "cg_solve: x and b lengths differ");
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];

    apply(x, &mut ap);
    for ((ri, &bi), &ai) in r.iter_mut().zip(b).zip(&ap) {
        *ri = bi - ai;
    }
    let mut rr = dot(&r, &r);
    let initial = libm::sqrt(rr);
    let target = rel_tol * libm::sqrt(dot(b, b));
    let mut report = CgReport {
        iterations: 0,
        initial_residual: initial,
        final_residual: initial,
        breakdown: false,
    };
    if initial <= target || rr == 0.0 {
        return report;
    }

    let mut p = r.clone();
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) || !curvature.is_finite() {
            report.breakdown = true;
            break;
        }
        let step = rr / curvature;
        for ((xi, ri), (&pi, &ai)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += step * pi;
            *ri -= step * ai;
        }
        let rr_next = dot(&r, &r);
        report.iterations = it;
        report.final_residual = libm::sqrt(rr_next);
        if report.final_residual <= target || rr_next == 0.0 {
            break;
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    report
}
