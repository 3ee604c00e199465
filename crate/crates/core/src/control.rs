//! Dynamical-decoupling sequences as ±1 modulation functions and their
//! spectral filter functions.
//!
//! A CPMG sequence with `N` π-pulses over total time `t` flips the sign of the
//! probe-environment coupling at `t(2j-1)/(2N)`, `j = 1..N`. The filter
//! function is `F_t(ω) = |f̃(ω)|² / 2π` with `f̃(ω) = ∫₀ᵗ f(t') e^{iωt'} dt'`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::numeric::quad::{integrate, QuadError, Tolerance};
use crate::numeric::sinc;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SequenceError {
    #[error("invalid control sequence: {0}")]
    InvalidSequence(&'static str),
    #[error("harmonic {0} carries no CPMG filter weight (only odd harmonics do)")]
    EvenHarmonic(u32),
    #[error("operation requires a CPMG sequence")]
    NotCpmg,
    #[error("oracle grid too coarse: need at least {required} points, got {got}")]
    GridTooCoarse { required: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SequenceKind {
    /// Free induction decay: no pulses.
    Fid,
    /// Carr-Purcell-Meiboom-Gill: equidistant π-pulses.
    Cpmg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSequence {
    kind: SequenceKind,
    n_pulses: u32,
    total_time: f64,
}

impl ControlSequence {
    pub fn new(kind: SequenceKind, n_pulses: u32, total_time: f64) -> Result<Self, SequenceError> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(SequenceError::InvalidSequence("total_time must be positive and finite"));
        }
        match kind {
            SequenceKind::Fid if n_pulses != 0 => Err(SequenceError::InvalidSequence("FID has no pulses")),
            SequenceKind::Cpmg if n_pulses == 0 => {
                Err(SequenceError::InvalidSequence("CPMG needs at least one pulse"))
            }
            _ => Ok(Self { kind, n_pulses, total_time }),
        }
    }

    pub fn fid(total_time: f64) -> Result<Self, SequenceError> {
        Self::new(SequenceKind::Fid, 0, total_time)
    }

    pub fn cpmg(n_pulses: u32, total_time: f64) -> Result<Self, SequenceError> {
        Self::new(SequenceKind::Cpmg, n_pulses, total_time)
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn n_pulses(&self) -> u32 {
        self.n_pulses
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// Same pulse pattern stretched to a new total time.
    pub fn with_total_time(&self, total_time: f64) -> Result<Self, SequenceError> {
        Self::new(self.kind, self.n_pulses, total_time)
    }

    /// `ω_ctrl = πN/t`; `None` for FID.
    pub fn control_frequency(&self) -> Option<f64> {
        match self.kind {
            SequenceKind::Fid => None,
            SequenceKind::Cpmg => Some(PI * f64::from(self.n_pulses) / self.total_time),
        }
    }

    /// Longest stretch of free evolution between sign flips.
    pub fn inter_pulse_delay(&self) -> f64 {
        match self.kind {
            SequenceKind::Fid => self.total_time,
            SequenceKind::Cpmg if self.n_pulses == 1 => self.total_time / 2.0,
            SequenceKind::Cpmg => self.total_time / f64::from(self.n_pulses),
        }
    }

    pub fn modulation(&self) -> ModulationProfile {
        build_modulation(self)
    }

    pub fn filter(&self, omega: f64) -> f64 {
        match self.kind {
            SequenceKind::Cpmg => cpmg_filter_product(self.n_pulses, self.total_time, omega).unwrap_or_else(|| self.modulation().filter(omega)),
            SequenceKind::Fid => self.modulation().filter(omega),
        }
    }
}

/// CPMG filter from the product form
/// `8 a² sin⁴(ωt/4N) / (π ω² cos²(ωt/2N))`, with `a = sin(ωt/2)` for even
/// `N` and `cos(ωt/2)` for odd `N`. O(1) per call.
///
/// `None` near `ω = 0` and near the removable zeros of the denominator,
/// where the segment sum should be used instead.
pub fn cpmg_filter_product(n_pulses: u32, total_time: f64, omega: f64) -> Option<f64> {
    let x = omega * total_time;
    let n = f64::from(n_pulses);
    let c = libm::cos(x / (2.0 * n));
    if x.abs() < 1e-2 || c.abs() < 0.05 || n_pulses == 0 {
        return None;
    }
    let a = if n_pulses.is_multiple_of(2) { libm::sin(x / 2.0) } else { libm::cos(x / 2.0) };
    let s = libm::sin(x / (4.0 * n));
    let s2 = s * s;
    Some(8.0 * a * a * s2 * s2 / (PI * omega * omega * c * c))
}

/// Piecewise-constant ±1 modulation starting at +1.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationProfile {
    switch_times: Vec<f64>,
    total_time: f64,
}

/// A maximal interval on which the modulation is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub sign: f64,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

impl ModulationProfile {
    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn initial_sign(&self) -> f64 {
        1.0
    }

    /// `f(t')` on `[0, t)`; the value at a switch time is the value after it.
    pub fn sign_at(&self, time: f64) -> f64 {
        let flips = self.switch_times.partition_point(|&s| s <= time);
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.switch_times.len();
        (0..=n).map(move |i| {
            let start = if i == 0 { 0.0 } else { self.switch_times[i - 1] };
            let end = if i == n { self.total_time } else { self.switch_times[i] };
            Segment { start, end, sign: if i % 2 == 0 { 1.0 } else { -1.0 } }
        })
    }

    /// `f̃(ω)` as a sum of per-segment closed forms. Each segment contributes
    /// `s·e^{iω m}·L·sinc(ωL/2)` (midpoint `m`, length `L`), which equals
    /// `s(e^{iωb} - e^{iωa})/(iω)` and stays exact as `ω → 0`.
    pub fn fourier(&self, omega: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut last_step = f64::NAN;
        let mut step_phasor = Complex64::new(1.0, 0.0);
        let mut phasor = Complex64::new(0.0, 0.0);
        let mut last_mid = 0.0;
        for (i, seg) in self.segments().enumerate() {
            let mid = 0.5 * (seg.start + seg.end);
            // Phasors advance by recurrence when consecutive midpoints are
            // equally spaced, which is the case for CPMG interior segments.
            if i == 0 {
                phasor = Complex64::cis(omega * mid);
            } else {
                let step = mid - last_mid;
                if (step - last_step).abs() > 1e-15 * self.total_time || last_step.is_nan() {
                    step_phasor = Complex64::cis(omega * step);
                    last_step = step;
                    phasor = Complex64::cis(omega * mid);
                } else {
                    phasor *= step_phasor;
                }
            }
            last_mid = mid;
            let len = seg.len();
            acc += phasor * (seg.sign * len * sinc(0.5 * omega * len));
        }
        acc
    }

    /// `F_t(ω) = |f̃(ω)|² / 2π`.
    pub fn filter(&self, omega: f64) -> f64 {
        self.fourier(omega).norm_sqr() / (2.0 * PI)
    }

    /// Sum of squared jump heights of `f` on the extended line (counting the
    /// switch-on at 0 and switch-off at `t`); sets the mean `ω⁻²` tail of `F`.
    pub fn jump_energy(&self) -> f64 {
        2.0 + 4.0 * self.switch_times.len() as f64
    }
}

pub fn build_modulation(seq: &ControlSequence) -> ModulationProfile {
    let t = seq.total_time;
    let switch_times = match seq.kind {
        SequenceKind::Fid => Vec::new(),
        SequenceKind::Cpmg => {
            let n = f64::from(seq.n_pulses);
            (1..=seq.n_pulses).map(|j| t * (2.0 * f64::from(j) - 1.0) / (2.0 * n)).collect()
        }
    };
    ModulationProfile { switch_times, total_time: t }
}

/// Closed-form filter function of `seq` at angular frequency `omega` (ms⁻¹).
pub fn filter_function(seq: &ControlSequence, omega: f64) -> f64 {
    seq.modulation().filter(omega)
}

/// `∫ F_t(ω) dω` over the whole line: adaptive quadrature on `|ω| < W`
/// plus the envelope tail `E/(πW)`. Equals `t` by Parseval.
pub fn filter_weight(seq: &ControlSequence, cutoff: f64, rel_tol: f64) -> Result<f64, QuadError> {
    let profile = seq.modulation();
    let width = PI / seq.total_time;
    let panels = libm::ceil(cutoff / width).max(1.0) as usize;
    let breaks: Vec<f64> = (0..=panels).map(|k| k as f64 * width).collect();
    let top = breaks[panels];
    let body = integrate(|w| 2.0 * profile.filter(w), &breaks, Tolerance::relative(rel_tol), 64 * 15 * panels + 100_000)?;
    Ok(body.value + profile.jump_energy() / (PI * top))
}

/// Minimum grid size accepted by [`filter_oracle`].
pub fn oracle_min_grid(seq: &ControlSequence, omega: f64) -> usize {
    let n = 1e4 * (1.0 + omega.abs() * seq.total_time / PI);
    libm::ceil(n) as usize
}

/// Filter function by composite Simpson integration of `f(t') e^{iωt'}`.
///
/// The grid is distributed over the constant segments so that no Simpson
/// cell straddles a sign flip.
pub fn filter_oracle(seq: &ControlSequence, omega: f64, n_grid: usize) -> Result<f64, SequenceError> {
    let required = oracle_min_grid(seq, omega);
    if n_grid < required {
        return Err(SequenceError::GridTooCoarse { required, got: n_grid });
    }
    let profile = seq.modulation();
    let t = seq.total_time;
    let mut re = 0.0;
    let mut im = 0.0;
    for seg in profile.segments() {
        let share = libm::ceil(n_grid as f64 * seg.len() / t) as usize;
        let cells = (share.max(2) + 1) & !1;
        let h = seg.len() / cells as f64;
        let mut sre = 0.0;
        let mut sim = 0.0;
        for k in 0..=cells {
            let w = if k == 0 || k == cells {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let x = seg.start + h * k as f64;
            sre += w * libm::cos(omega * x);
            sim += w * libm::sin(omega * x);
        }
        re += seg.sign * sre * h / 3.0;
        im += seg.sign * sim * h / 3.0;
    }
    Ok((re * re + im * im) / (2.0 * PI))
}

/// Delta-comb weight `8t/(π²k²)` of CPMG harmonic `k` (odd).
pub fn nf_harmonic_weight(seq: &ControlSequence, k: u32) -> Result<f64, SequenceError> {
    if seq.kind != SequenceKind::Cpmg {
        return Err(SequenceError::NotCpmg);
    }
    if k.is_multiple_of(2) {
        return Err(SequenceError::EvenHarmonic(k));
    }
    let k = f64::from(k);
    Ok(8.0 * seq.total_time / (PI * PI * k * k))
}
