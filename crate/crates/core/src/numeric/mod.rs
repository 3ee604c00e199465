//! Small numerical kernels shared by the physics modules.
//!
//! Everything here is deterministic and allocation-light so it can run in
//! `no_std` builds.

pub mod lm;
pub mod quad;
pub mod roots;

/// `sin(x)/x` with the removable singularity handled by a Taylor series.
#[inline]
pub fn sinc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        libm::sin(x) / x
    }
}

/// Logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> alloc::vec::Vec<f64> {
    let (a, b) = (libm::log(lo), libm::log(hi));
    match n {
        0 => alloc::vec::Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    lo
                } else if i == n - 1 {
                    hi
                } else {
                    libm::exp(a + (b - a) * i as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    }
}

/// Linearly spaced points from `lo` to `hi` inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> alloc::vec::Vec<f64> {
    match n {
        0 => alloc::vec::Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

pub(crate) fn is_strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_is_continuous_across_series_threshold() {
        let x = 0.99e-4;
        assert!((sinc(x) - libm::sin(x) / x).abs() < 1e-15);
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn grids_hit_endpoints_exactly() {
        let g = log_space(0.1, 10.0, 7);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[6], 10.0);
        assert!(is_strictly_increasing(&g));
        let l = lin_space(1.0, 2.0, 5);
        assert_eq!(l, [1.0, 1.25, 1.5, 1.75, 2.0]);
    }
}
