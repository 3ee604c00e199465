//! Globally adaptive Gauss-Kronrod (7/15) quadrature over a set of panels.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadError {
    #[error("evaluation budget exhausted (value {value:e}, error estimate {abs_error:e})")]
    BudgetExhausted { value: f64, abs_error: f64 },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod rule on `[a, b]`; returns (value, |K - G|).
pub fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { x: center });
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, &x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { x: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { x: x2 });
        }
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the panels
/// delimited by `breaks` and bisecting the worst panel until the summed error
/// estimate meets `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
    max_evals: usize,
) -> Result<Integral, QuadError> {
    let mut heap = BinaryHeap::with_capacity(breaks.len());
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0usize;
    for w in breaks.windows(2) {
        let (v, e) = kronrod15(&mut f, w[0], w[1])?;
        evaluations += 15;
        value += v;
        error += e;
        heap.push(Segment { a: w[0], b: w[1], value: v, error: e });
    }
    loop {
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(Integral { value, abs_error: error, evaluations });
        }
        if evaluations >= max_evals {
            return Err(QuadError::BudgetExhausted { value, abs_error: error });
        }
        let Some(worst) = heap.pop() else {
            return Ok(Integral { value, abs_error: error, evaluations });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel cannot be split further in floating point.
            return Err(QuadError::BudgetExhausted { value, abs_error: error });
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid)?;
        let (v2, e2) = kronrod15(&mut f, mid, worst.b)?;
        evaluations += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        if heap.len() % 4096 == 0 {
            // Re-sum to keep the running totals free of drift.
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
}
