//! SDOF absolute-acceleration response and shock response spectra.
//!
//! The oscillator is discretised with the ramp-invariant recursion
//! (Smallwood form), which is exact for base motion that is linear between
//! samples:
//!
//! ```text
//! y[n] = b0·x[n] + b1·x[n−1] + b2·x[n−2] + a1·y[n−1] + a2·y[n−2]
//! ```

use std::f64::consts::PI;

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{check_increasing, DampedHarmonic, SdofParams, SpectrumKind, SrsCurve, TimeSeries};

/// Q = 10.
pub const DEFAULT_DAMPING: f64 = 0.05;

pub const DEFAULT_POINTS_PER_OCTAVE: u32 = 12;

/// Free-decay tail length in time constants: 5/(ξ·2π·f) seconds.
pub const TAIL_TIME_CONSTANTS: f64 = 5.0;

/// Below this many samples per natural period `sdof_response` warns.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
struct Recursion {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Recursion {
    fn new(p: &SdofParams, dt: f64) -> Self {
        let e = (-p.damping_ratio() * p.omega() * dt).exp();
        let k = p.damped_omega() * dt;
        let c = e * k.cos();
        let sp = e * k.sin() / k;
        Recursion {
            b0: 1.0 - sp,
            b1: 2.0 * (sp - c),
            b2: e * e - sp,
            a1: 2.0 * c,
            a2: -e * e,
        }
    }

    /// Runs over `x` followed by `tail` zero samples, from rest, handing each
    /// output to `sink`.
    fn run(&self, x: &[f64], tail: usize, mut sink: impl FnMut(f64)) {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        let inputs = x.iter().copied().chain(std::iter::repeat_n(0.0, tail));
        for x0 in inputs {
            let y0 = self.b0 * x0 + self.b1 * x1 + self.b2 * x2 + self.a1 * y1 + self.a2 * y2;
            sink(y0);
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
        }
    }
}

/// Absolute acceleration of the oscillator mass under base acceleration
/// `base`, starting from rest.
pub fn sdof_response(base: &TimeSeries, p: &SdofParams) -> Result<TimeSeries> {
    if base.sample_rate() < MIN_SAMPLES_PER_PERIOD * p.natural_frequency() {
        warn!(
            "{} Hz oscillator sampled at {} Hz (< {MIN_SAMPLES_PER_PERIOD} samples per period)",
            p.natural_frequency(),
            base.sample_rate()
        );
    }
    let mut out = Vec::with_capacity(base.len());
    Recursion::new(p, base.dt()).run(base.samples(), 0, |y| out.push(y));
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("oscillator response is not finite".into()));
    }
    base.with_samples(out)
}

/// Number of free-decay samples appended after a record for an oscillator at
/// `freq` Hz.
pub fn tail_samples(freq: f64, damping: f64, sample_rate: f64) -> usize {
    (TAIL_TIME_CONSTANTS / (damping * 2.0 * PI * freq) * sample_rate).ceil() as usize
}

/// Shock response spectrum of `x` at each grid frequency.
///
/// Each oscillator sees the record followed by a free-decay tail so residual
/// peaks are captured. Grid points are evaluated in parallel; the result does
/// not depend on evaluation order.
pub fn compute_srs(x: &TimeSeries, grid: &[f64], damping: f64, kind: SpectrumKind) -> Result<SrsCurve> {
    if grid.is_empty() {
        return Err(Error::domain("SRS grid is empty"));
    }
    check_increasing(grid, "SRS grid")?;
    if grid[0] <= 0.0 {
        return Err(Error::domain("SRS grid frequencies must be positive"));
    }
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::domain(format!("damping ratio must lie in (0, 1), got {damping}")));
    }
    let amplitudes = grid
        .par_iter()
        .map(|&f| {
            let p = SdofParams::new(f, damping)?;
            let tail = tail_samples(f, damping, x.sample_rate());
            let (mut hi, mut lo) = (0.0f64, 0.0f64);
            Recursion::new(&p, x.dt()).run(x.samples(), tail, |y| {
                hi = hi.max(y);
                lo = lo.min(y);
            });
            let amp = match kind {
                SpectrumKind::AbsoluteMax => hi.max(-lo),
                SpectrumKind::PositiveMax => hi,
                SpectrumKind::NegativeMax => -lo,
            };
            if amp.is_finite() {
                Ok(amp)
            } else {
                Err(Error::Numeric(format!("SRS at {f} Hz is not finite")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    SrsCurve::new(kind, damping, grid.to_vec(), amplitudes)
}

/// Base record, oscillator and excitation peak used to evaluate the dynamic
/// amplification ratio. The oscillator sits at 1 Hz; the excitation
/// A₀e^{−ξ̄ω̄t}sin ω̄t (A₀ = 1) has ω̄ = β·ω.
#[derive(Debug, Clone)]
pub struct AmplificationSetup {
    pub base: TimeSeries,
    pub oscillator: SdofParams,
    pub excitation_peak: f64,
}

const AMPLIFICATION_SAMPLES_PER_PERIOD: f64 = 200.0;
const AMPLIFICATION_MAX_SAMPLES: usize = 20_000_000;

impl AmplificationSetup {
    pub fn new(beta: f64, damping: f64, excitation_damping: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("frequency ratio must be positive, got {beta}")));
        }
        if !(excitation_damping >= 0.0 && excitation_damping.is_finite()) {
            return Err(Error::domain("excitation damping must be non-negative"));
        }
        let oscillator = SdofParams::new(1.0, damping)?;
        let excitation = DampedHarmonic::new(1.0, beta, excitation_damping, 0.0)?;
        let omega_bar = excitation.omega();

        // 20 excitation periods or until the envelope is below 1e-4·A₀,
        // whichever is longer; an undamped excitation runs until the
        // oscillator transient has decayed.
        let envelope = if excitation_damping > 0.0 {
            (1e4f64).ln() / (excitation_damping * omega_bar)
        } else {
            10.0 / (damping * oscillator.omega())
        };
        let window = (20.0 / beta).max(envelope)
            + TAIL_TIME_CONSTANTS / (damping * oscillator.omega());
        let fs = AMPLIFICATION_SAMPLES_PER_PERIOD * beta.max(1.0);
        let len = ((window * fs).ceil() as usize + 1).min(AMPLIFICATION_MAX_SAMPLES);
        let base = TimeSeries::from_fn(fs, len, |t| excitation.value_at(t))?;
        Ok(AmplificationSetup {
            base,
            oscillator,
            excitation_peak: excitation.peak(),
        })
    }
}

/// Ratio of peak oscillator acceleration to peak excitation acceleration for
/// damped harmonic base excitation at frequency ratio β = ω̄/ω.
pub fn dynamic_amplification(beta: f64, damping: f64, excitation_damping: f64) -> Result<f64> {
    let setup = AmplificationSetup::new(beta, damping, excitation_damping)?;
    let response = sdof_response(&setup.base, &setup.oscillator)?;
    Ok(response.peak_abs() / setup.excitation_peak)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::octave_grid;

    fn damped_sine(fs: f64, len: usize, a0: f64, f: f64, z: f64) -> TimeSeries {
        let h = DampedHarmonic::new(a0, f, z, 0.0).unwrap();
        TimeSeries::from_fn(fs, len, |t| h.value_at(t)).unwrap()
    }

    #[test]
    fn zero_base_gives_zero_response() {
        let x = TimeSeries::zeros(10_000.0, 100).unwrap();
        let p = SdofParams::new(100.0, 0.05).unwrap();
        assert!(sdof_response(&x, &p).unwrap().samples().iter().all(|v| *v == 0.0));
        let grid = octave_grid(10.0, 1000.0, 3).unwrap();
        let s = compute_srs(&x, &grid, 0.05, SpectrumKind::AbsoluteMax).unwrap();
        assert!(s.amplitudes().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn quasi_static_response_follows_base() {
        // β = 0.05
        let fnat = 1000.0;
        let fs = 100_000.0;
        let x = TimeSeries::from_fn(fs, 40_000, |t| (2.0 * PI * fnat / 20.0 * t).sin()).unwrap();
        let y = sdof_response(&x, &SdofParams::new(fnat, 0.05).unwrap()).unwrap();
        let steady = y.samples()[20_000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((steady - 1.0).abs() < 0.05, "{steady}");
    }

    #[test]
    fn srs_is_homogeneous() {
        let x = damped_sine(50_000.0, 5000, 10.0, 800.0, 0.03);
        let x2 = x.scaled(2.0).unwrap();
        let grid = octave_grid(50.0, 5000.0, 6).unwrap();
        let a = compute_srs(&x, &grid, 0.05, SpectrumKind::AbsoluteMax).unwrap();
        let b = compute_srs(&x2, &grid, 0.05, SpectrumKind::AbsoluteMax).unwrap();
        for (u, v) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((2.0 * u - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn platform_tracks_signal_peak() {
        let fs = 200_000.0;
        let x = damped_sine(fs, 20_000, 100.0, 1000.0, 0.05);
        let peak = x.peak_abs();
        let s = compute_srs(&x, &[10_000.0, 40_000.0], 0.05, SpectrumKind::AbsoluteMax).unwrap();
        // the onset slope leaves a transient of order β·A₀ in the oscillator
        assert!((s.amplitudes()[0] / peak - 1.0).abs() < 0.05, "{} vs {peak}", s.amplitudes()[0]);
        assert!((s.amplitudes()[1] / peak - 1.0).abs() < 0.02, "{} vs {peak}", s.amplitudes()[1]);
    }

    #[test]
    fn absolute_is_max_of_signed_spectra() {
        let x = damped_sine(20_000.0, 3000, 5.0, 300.0, 0.08);
        let grid = octave_grid(20.0, 4000.0, 4).unwrap();
        let abs = compute_srs(&x, &grid, 0.05, SpectrumKind::AbsoluteMax).unwrap();
        let pos = compute_srs(&x, &grid, 0.05, SpectrumKind::PositiveMax).unwrap();
        let neg = compute_srs(&x, &grid, 0.05, SpectrumKind::NegativeMax).unwrap();
        for i in 0..grid.len() {
            let (a, p, n) = (abs.amplitudes()[i], pos.amplitudes()[i], neg.amplitudes()[i]);
            assert!(a >= p && a >= n);
            assert!(a == p || a == n);
        }
    }

    #[test]
    fn empty_or_bad_grid_rejected() {
        let x = TimeSeries::zeros(1000.0, 10).unwrap();
        assert!(matches!(compute_srs(&x, &[], 0.05, SpectrumKind::AbsoluteMax), Err(Error::Domain(_))));
        assert!(compute_srs(&x, &[10.0, 5.0], 0.05, SpectrumKind::AbsoluteMax).is_err());
        assert!(compute_srs(&x, &[10.0], 1.5, SpectrumKind::AbsoluteMax).is_err());
    }

    #[test]
    fn amplification_limits() {
        let low = dynamic_amplification(0.05, 0.05, 0.05).unwrap();
        assert!((low - 1.0).abs() <= 0.05, "{low}");
        let high = dynamic_amplification(20.0, 0.05, 0.05).unwrap();
        assert!(high <= 0.1, "{high}");
    }
}
