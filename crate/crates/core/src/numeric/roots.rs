//! Bracketing scalar solvers: golden-section extremum search and bisection.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo:e}, f(hi) = {f_hi:e})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("function not finite at x = {x}")]
    NotFinite { x: f64 },
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximizes a unimodal `f` on `[lo, hi]`. Returns `(x, f(x))` with the bracket
/// shrunk below `x_tol`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= x_tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimizes a unimodal `f` on `[lo, hi]`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> (f64, f64) {
    let (x, fx) = golden_section_max(|x| -f(x), lo, hi, x_tol);
    (x, -fx)
}

/// Bisection for a root of `f` in `[lo, hi]`, stopping once the bracket width
/// is below `rel_tol * |x|`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64, RootError> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if !f_lo.is_finite() {
        return Err(RootError::NotFinite { x: lo });
    }
    if !f_hi.is_finite() {
        return Err(RootError::NotFinite { x: hi });
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(RootError::NoSignChange { lo, hi, f_lo, f_hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol * mid.abs() || mid == lo || mid == hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if !f_mid.is_finite() {
            return Err(RootError::NotFinite { x: mid });
        }
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
