//! Domain types shared by every stage of the pipeline, plus the small numeric
//! helpers (dB ratios, log-log interpolation, octave grids) they rely on.
//!
//! All values are immutable once constructed. Accelerations are in m/s² and
//! frequencies in Hz throughout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled acceleration-time history.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    sample_rate: f64,
    start_time: f64,
    samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(sample_rate: f64, start_time: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::domain(format!(
                "sample rate must be positive and finite, got {sample_rate}"
            )));
        }
        if !start_time.is_finite() {
            return Err(Error::domain("start time must be finite"));
        }
        if samples.len() < 2 {
            return Err(Error::Data(format!(
                "a time series needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("sample {i} is not finite")));
        }
        Ok(TimeSeries {
            sample_rate,
            start_time,
            samples,
        })
    }

    /// An all-zero record of `len` samples starting at t = 0.
    pub fn zeros(sample_rate: f64, len: usize) -> Result<Self> {
        Self::new(sample_rate, 0.0, vec![0.0; len])
    }

    /// Samples `f(t)` at t = k/fs for k in 0..len.
    pub fn from_fn(sample_rate: f64, len: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = (0..len).map(|k| f(k as f64 / sample_rate)).collect();
        Self::new(sample_rate, 0.0, samples)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// (len − 1) / sample_rate.
    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 / self.sample_rate
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.start_time + index as f64 / self.sample_rate
    }

    /// max |x(t)| over the record.
    pub fn peak_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the first sample attaining `peak_abs`.
    pub fn peak_index(&self) -> usize {
        let peak = self.peak_abs();
        self.samples
            .iter()
            .position(|v| v.abs() == peak)
            .unwrap_or(0)
    }

    /// Same rate and start time, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.sample_rate, self.start_time, samples)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.with_samples(self.samples.iter().map(|v| v * factor).collect())
    }

    /// Sample-wise sum; both records must share rate, start and length.
    pub fn add(&self, other: &TimeSeries) -> Result<Self> {
        self.check_aligned(other)?;
        self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Sample-wise difference `self − other`.
    pub fn sub(&self, other: &TimeSeries) -> Result<Self> {
        self.check_aligned(other)?;
        self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    fn check_aligned(&self, other: &TimeSeries) -> Result<()> {
        if self.sample_rate != other.sample_rate || self.samples.len() != other.samples.len() {
            return Err(Error::Contract(format!(
                "records differ: {} Hz x {} vs {} Hz x {}",
                self.sample_rate,
                self.samples.len(),
                other.sample_rate,
                other.samples.len()
            )));
        }
        Ok(())
    }
}

/// Single-degree-of-freedom oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdofParams {
    natural_frequency: f64,
    damping_ratio: f64,
}

impl SdofParams {
    pub fn new(natural_frequency: f64, damping_ratio: f64) -> Result<Self> {
        if !(natural_frequency.is_finite() && natural_frequency > 0.0) {
            return Err(Error::domain(format!(
                "natural frequency must be positive, got {natural_frequency}"
            )));
        }
        if !(damping_ratio > 0.0 && damping_ratio < 1.0) {
            return Err(Error::domain(format!(
                "damping ratio must lie in (0, 1), got {damping_ratio}"
            )));
        }
        Ok(SdofParams {
            natural_frequency,
            damping_ratio,
        })
    }

    /// Natural frequency in Hz.
    pub fn natural_frequency(&self) -> f64 {
        self.natural_frequency
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping_ratio
    }

    /// Circular natural frequency ω, rad/s.
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.natural_frequency
    }

    /// Damped circular frequency ω_D = ω√(1 − ξ²), rad/s.
    pub fn damped_omega(&self) -> f64 {
        self.omega() * (1.0 - self.damping_ratio * self.damping_ratio).sqrt()
    }

    /// Damped natural frequency in Hz.
    pub fn damped_frequency(&self) -> f64 {
        self.damped_omega() / (2.0 * PI)
    }
}

/// Which extreme of the oscillator response an SRS records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    #[default]
    AbsoluteMax,
    PositiveMax,
    NegativeMax,
}

impl SpectrumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumKind::AbsoluteMax => "absolute-max",
            SpectrumKind::PositiveMax => "positive-max",
            SpectrumKind::NegativeMax => "negative-max",
        }
    }
}

impl std::str::FromStr for SpectrumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute-max" | "abs" => Ok(SpectrumKind::AbsoluteMax),
            "positive-max" | "pos" => Ok(SpectrumKind::PositiveMax),
            "negative-max" | "neg" => Ok(SpectrumKind::NegativeMax),
            other => Err(Error::domain(format!("unknown spectrum kind `{other}`"))),
        }
    }
}

/// A shock response spectrum: amplitude against oscillator frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SrsCurve {
    kind: SpectrumKind,
    damping_ratio: f64,
    frequencies: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl SrsCurve {
    pub fn new(
        kind: SpectrumKind,
        damping_ratio: f64,
        frequencies: Vec<f64>,
        amplitudes: Vec<f64>,
    ) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::domain("an SRS curve needs at least one point"));
        }
        if frequencies.len() != amplitudes.len() {
            return Err(Error::Contract(format!(
                "{} frequencies but {} amplitudes",
                frequencies.len(),
                amplitudes.len()
            )));
        }
        check_increasing(&frequencies, "SRS frequencies")?;
        if let Some(a) = amplitudes.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::Data(format!(
                "SRS amplitudes must be finite and non-negative, got {a}"
            )));
        }
        Ok(SrsCurve {
            kind,
            damping_ratio,
            frequencies,
            amplitudes,
        })
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping_ratio
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn min_frequency(&self) -> f64 {
        self.frequencies[0]
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies[self.frequencies.len() - 1]
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.frequencies
            .iter()
            .copied()
            .zip(self.amplitudes.iter().copied())
    }

    /// Amplitude at `freq`, see [`interpolate_curve`].
    pub fn at(&self, freq: f64) -> Result<f64> {
        interpolate_curve(self, freq)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.with_amplitudes(self.amplitudes.iter().map(|a| a * factor).collect())
    }

    /// Same grid and metadata, new amplitudes.
    pub fn with_amplitudes(&self, amplitudes: Vec<f64>) -> Result<Self> {
        Self::new(
            self.kind,
            self.damping_ratio,
            self.frequencies.clone(),
            amplitudes,
        )
    }

    /// Points with `lo <= f <= hi`, or `None` if none qualify.
    pub fn window(&self, lo: f64, hi: f64) -> Option<Self> {
        let (f, a): (Vec<f64>, Vec<f64>) = self.points().filter(|(f, _)| *f >= lo && *f <= hi).unzip();
        if f.is_empty() {
            None
        } else {
            Some(SrsCurve {
                kind: self.kind,
                damping_ratio: self.damping_ratio,
                frequencies: f,
                amplitudes: a,
            })
        }
    }
}

/// Platform amplitude read from one LPSRS curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    /// A^i, m/s².
    pub amplitude: f64,
    /// (max − min) / median over the platform window.
    pub spread: f64,
    /// False when `spread` exceeds the flatness tolerance.
    pub flat: bool,
}

/// SRS of one band-decomposed signal A_i(t).
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpectrum {
    /// Lower band edge, Hz (0 for the first band).
    pub lower: f64,
    /// Upper band edge, Hz.
    pub upper: f64,
    /// A_if over frequency.
    pub curve: SrsCurve,
    /// A_i = max |A_i(t)|.
    pub peak: f64,
}

/// Overlaid low-pass SRS curves with their platforms and band spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct LpsrsSet {
    cutoffs: Vec<f64>,
    curves: Vec<SrsCurve>,
    platforms: Vec<Platform>,
    bands: Vec<BandSpectrum>,
}

/// Curves must reach this multiple of their cutoff to show the platform.
pub const PLATFORM_ONSET_FACTOR: f64 = 5.0;

impl LpsrsSet {
    pub fn new(
        cutoffs: Vec<f64>,
        curves: Vec<SrsCurve>,
        platforms: Vec<Platform>,
        bands: Vec<BandSpectrum>,
    ) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::domain("an LPSRS needs at least one cutoff"));
        }
        check_increasing(&cutoffs, "cutoffs")?;
        if curves.len() != cutoffs.len() || platforms.len() != cutoffs.len() {
            return Err(Error::Contract(format!(
                "{} cutoffs, {} curves, {} platforms",
                cutoffs.len(),
                curves.len(),
                platforms.len()
            )));
        }
        if !bands.is_empty() && bands.len() != cutoffs.len() {
            return Err(Error::Contract(format!(
                "{} cutoffs but {} band spectra",
                cutoffs.len(),
                bands.len()
            )));
        }
        for (fc, curve) in cutoffs.iter().zip(&curves) {
            // small slack for grids stored at 9 significant digits
            if curve.max_frequency() < PLATFORM_ONSET_FACTOR * fc * (1.0 - 1e-8) {
                return Err(Error::Range {
                    what: format!("curve for cutoff {fc} Hz"),
                    freq: PLATFORM_ONSET_FACTOR * fc,
                    min: curve.min_frequency(),
                    max: curve.max_frequency(),
                });
            }
        }
        Ok(LpsrsSet {
            cutoffs,
            curves,
            platforms,
            bands,
        })
    }

    pub fn cutoffs(&self) -> &[f64] {
        &self.cutoffs
    }

    pub fn curves(&self) -> &[SrsCurve] {
        &self.curves
    }

    pub fn platforms(&self) -> &[Platform] {
        &self.platforms
    }

    /// Platform amplitudes A^i in cutoff order.
    pub fn platform_amplitudes(&self) -> Vec<f64> {
        self.platforms.iter().map(|p| p.amplitude).collect()
    }

    /// Band spectra A_if; empty when the set was assembled without them.
    pub fn bands(&self) -> &[BandSpectrum] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cutoffs.is_empty()
    }

    pub fn damping_ratio(&self) -> f64 {
        self.curves[0].damping_ratio()
    }
}

/// One row of a modal table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub order: u32,
    /// f_n, Hz.
    pub natural_frequency: f64,
    /// P_n.
    pub participation: f64,
    /// φ_n at the response point.
    pub mode_shape: f64,
    /// kg.
    pub effective_mass: f64,
}

impl Mode {
    /// P_n·φ_n, the mode's gain from base excitation to the response point.
    pub fn gain(&self) -> f64 {
        self.participation * self.mode_shape
    }
}

/// Modes of the equipment structure, ordered by natural frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTable {
    modes: Vec<Mode>,
}

impl ModalTable {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::domain("modal table is empty"));
        }
        for m in &modes {
            if !(m.natural_frequency.is_finite() && m.natural_frequency > 0.0) {
                return Err(Error::Data(format!(
                    "mode {}: natural frequency must be positive",
                    m.order
                )));
            }
            if !(m.participation.is_finite() && m.mode_shape.is_finite()) {
                return Err(Error::Data(format!("mode {}: non-finite gain", m.order)));
            }
            if !(m.effective_mass >= 0.0) {
                return Err(Error::Data(format!(
                    "mode {}: effective mass must be non-negative",
                    m.order
                )));
            }
        }
        let freqs: Vec<f64> = modes.iter().map(|m| m.natural_frequency).collect();
        check_increasing(&freqs, "modal natural frequencies")?;
        Ok(ModalTable { modes })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn total_effective_mass(&self) -> f64 {
        self.modes.iter().map(|m| m.effective_mass).sum()
    }

    /// Table restricted to the modes selected by `keep`.
    pub fn filtered(&self, keep: impl Fn(&Mode) -> bool) -> Result<Self> {
        Self::new(self.modes.iter().copied().filter(|m| keep(m)).collect())
    }
}

/// A_0 e^{−ξ̄ω̄(t−t₀)} sin ω̄(t−t₀) for t ≥ t₀, zero before.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampedHarmonic {
    pub amplitude: f64,
    pub frequency: f64,
    pub damping_ratio: f64,
    pub onset_time: f64,
}

impl DampedHarmonic {
    pub fn new(amplitude: f64, frequency: f64, damping_ratio: f64, onset_time: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::domain(format!(
                "amplitude must be non-negative, got {amplitude}"
            )));
        }
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::domain(format!(
                "frequency must be positive, got {frequency}"
            )));
        }
        if !(damping_ratio.is_finite() && damping_ratio >= 0.0) {
            return Err(Error::domain(format!(
                "damping ratio must be non-negative, got {damping_ratio}"
            )));
        }
        if !onset_time.is_finite() {
            return Err(Error::domain("onset time must be finite"));
        }
        Ok(DampedHarmonic {
            amplitude,
            frequency,
            damping_ratio,
            onset_time,
        })
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let tau = t - self.onset_time;
        if tau < 0.0 {
            return 0.0;
        }
        let w = self.omega();
        self.amplitude * (-self.damping_ratio * w * tau).exp() * (w * tau).sin()
    }

    /// max over t of |value_at(t)|, attained at ω̄τ = atan(1/ξ̄).
    pub fn peak(&self) -> f64 {
        if self.damping_ratio == 0.0 {
            return self.amplitude;
        }
        let phase = (1.0 / self.damping_ratio).atan();
        self.amplitude * (-self.damping_ratio * phase).exp() * phase.sin()
    }
}

/// 20·log10(x / y).
pub fn db_ratio(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::domain(format!(
            "dB ratio needs positive finite amplitudes, got ({x}, {y})"
        )));
    }
    Ok(20.0 * (x / y).log10())
}

/// Log-log linear interpolation of an SRS curve; exact at grid points and
/// never extrapolates.
///
/// Segments touching a zero amplitude fall back to linear interpolation in
/// log-frequency, since log(0) is undefined.
pub fn interpolate_curve(curve: &SrsCurve, freq: f64) -> Result<f64> {
    interp_loglog(curve.frequencies(), curve.amplitudes(), freq, "interpolation")
}

pub(crate) fn interp_loglog(fs: &[f64], amps: &[f64], freq: f64, what: &str) -> Result<f64> {
    let (lo, hi) = (fs[0], fs[fs.len() - 1]);
    if !(freq >= lo && freq <= hi) {
        return Err(Error::Range {
            what: what.into(),
            freq,
            min: lo,
            max: hi,
        });
    }
    // index of first grid point >= freq
    let j = fs.partition_point(|&f| f < freq);
    if fs[j] == freq {
        return Ok(amps[j]);
    }
    let (f0, f1, a0, a1) = (fs[j - 1], fs[j], amps[j - 1], amps[j]);
    if a0 == a1 {
        return Ok(a0);
    }
    let u = (freq / f0).ln() / (f1 / f0).ln();
    if a0 > 0.0 && a1 > 0.0 {
        Ok((a0.ln() + u * (a1 / a0).ln()).exp())
    } else {
        Ok(a0 + u * (a1 - a0))
    }
}

/// Geometric grid f_min·2^(k/ppo), k = 0..=K, with the last point ≥ f_max.
pub fn octave_grid(f_min: f64, f_max: f64, points_per_octave: u32) -> Result<Vec<f64>> {
    if !(f_min > 0.0 && f_min < f_max && f_max.is_finite()) {
        return Err(Error::domain(format!(
            "octave grid needs 0 < f_min < f_max, got ({f_min}, {f_max})"
        )));
    }
    if points_per_octave == 0 {
        return Err(Error::domain("points per octave must be at least 1"));
    }
    let ppo = points_per_octave as f64;
    let steps = ((f_max / f_min).log2() * ppo - 1e-9).ceil() as i32;
    Ok((0..=steps)
        .map(|k| f_min * 2f64.powf(k as f64 / ppo))
        .collect())
}

pub(crate) fn check_increasing(values: &[f64], what: &str) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("{what}: entry {i} is not finite")));
    }
    if let Some(w) = values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Data(format!(
            "{what} must be strictly increasing (entries {} and {})",
            w,
            w + 1
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> SrsCurve {
        SrsCurve::new(SpectrumKind::AbsoluteMax, 0.05, vec![100.0, 200.0], vec![10.0, 20.0]).unwrap()
    }

    #[test]
    fn db_ratio_examples() {
        let r = db_ratio(10420.0, 10265.0).unwrap();
        assert_eq!(format!("{r:.2}"), "0.13");
        assert_eq!(db_ratio(7.0, 7.0).unwrap(), 0.0);
        assert!((db_ratio(2.0, 1.0).unwrap() - 6.0206).abs() < 1e-4);
        assert!(db_ratio(0.0, 1.0).is_err());
        assert!(db_ratio(1.0, -1.0).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let c = two_point();
        assert_eq!(interpolate_curve(&c, 100.0).unwrap(), 10.0);
        assert_eq!(interpolate_curve(&c, 200.0).unwrap(), 20.0);
        let mid = interpolate_curve(&c, 141.42).unwrap();
        assert!((mid - 14.142).abs() < 1e-3, "{mid}");
        assert!(matches!(interpolate_curve(&c, 50.0), Err(Error::Range { .. })));
        assert!(matches!(interpolate_curve(&c, 200.1), Err(Error::Range { .. })));
    }

    #[test]
    fn interpolation_through_zero_is_linear_in_log_f() {
        let c = SrsCurve::new(SpectrumKind::AbsoluteMax, 0.05, vec![100.0, 400.0], vec![0.0, 8.0]).unwrap();
        assert!((c.at(200.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn octave_grid_examples() {
        assert_eq!(octave_grid(1000.0, 4000.0, 1).unwrap(), vec![1000.0, 2000.0, 4000.0]);
        let g = octave_grid(1000.0, 2000.0, 2).unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[1] - 1414.2136).abs() < 1e-3);
        assert_eq!(g[2], 2000.0);
        assert!(octave_grid(4000.0, 1000.0, 1).is_err());
        assert!(octave_grid(1000.0, 4000.0, 0).is_err());
        // last point covers f_max
        let g = octave_grid(100.0, 1000.0, 12).unwrap();
        assert!(*g.last().unwrap() >= 1000.0);
        assert!(g[g.len() - 2] < 1000.0);
    }

    #[test]
    fn sdof_damped_frequency_below_natural() {
        let p = SdofParams::new(1000.0, 0.05).unwrap();
        assert!(p.damped_omega() < p.omega());
        assert!((p.damped_frequency() - 1000.0 * (1.0f64 - 0.0025).sqrt()).abs() < 1e-9);
        assert!(SdofParams::new(1000.0, 0.0).is_err());
        assert!(SdofParams::new(1000.0, 1.0).is_err());
        assert!(SdofParams::new(-1.0, 0.05).is_err());
    }

    #[test]
    fn time_series_invariants() {
        assert!(TimeSeries::new(0.0, 0.0, vec![0.0, 0.0]).is_err());
        assert!(TimeSeries::new(100.0, 0.0, vec![0.0]).is_err());
        assert!(TimeSeries::new(100.0, 0.0, vec![0.0, f64::NAN]).is_err());
        let x = TimeSeries::new(100.0, 0.5, vec![0.0, -3.0, 2.0]).unwrap();
        assert_eq!(x.duration(), 0.02);
        assert_eq!(x.peak_abs(), 3.0);
        assert_eq!(x.peak_index(), 1);
        assert_eq!(x.time_at(2), 0.52);
    }

    #[test]
    fn srs_curve_rejects_bad_points() {
        let k = SpectrumKind::AbsoluteMax;
        assert!(SrsCurve::new(k, 0.05, vec![], vec![]).is_err());
        assert!(SrsCurve::new(k, 0.05, vec![2.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(SrsCurve::new(k, 0.05, vec![1.0, 2.0], vec![1.0, -1.0]).is_err());
        assert!(SrsCurve::new(k, 0.05, vec![1.0, 2.0], vec![1.0]).is_err());
    }

    #[test]
    fn modal_table_order_and_mass() {
        let m = |order, f| Mode {
            order,
            natural_frequency: f,
            participation: 0.1,
            mode_shape: 2.0,
            effective_mass: 1e-3,
        };
        assert!(ModalTable::new(vec![m(1, 200.0), m(2, 100.0)]).is_err());
        let mut bad = m(1, 100.0);
        bad.effective_mass = -1.0;
        assert!(ModalTable::new(vec![bad]).is_err());
        let t = ModalTable::new(vec![m(1, 100.0), m(2, 200.0)]).unwrap();
        assert!((t.modes()[0].gain() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn damped_harmonic_peak_matches_scan() {
        let h = DampedHarmonic::new(100.0, 1000.0, 0.05, 0.0).unwrap();
        let scan = (0..200_000)
            .map(|k| h.value_at(k as f64 * 1e-8).abs())
            .fold(0.0, f64::max);
        assert!((h.peak() - scan).abs() < 1e-6 * h.peak());
        assert_eq!(h.value_at(-1e-3), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn db_ratio_antisymmetric(a in 1e-6f64..1e9, b in 1e-6f64..1e9) {
                let ab = db_ratio(a, b).unwrap();
                let ba = db_ratio(b, a).unwrap();
                prop_assert!((ab + ba).abs() <= 1e-12 * (1.0 + ab.abs()));
            }

            #[test]
            fn interpolation_exact_at_grid(amps in prop::collection::vec(0.0f64..1e6, 2..20)) {
                let freqs: Vec<f64> = (0..amps.len()).map(|k| 10.0 * 1.3f64.powi(k as i32)).collect();
                let c = SrsCurve::new(SpectrumKind::AbsoluteMax, 0.05, freqs.clone(), amps.clone()).unwrap();
                for (f, a) in freqs.iter().zip(&amps) {
                    prop_assert_eq!(c.at(*f).unwrap(), *a);
                }
            }

            #[test]
            fn whole_octaves_double(n in 1u32..12, f0 in 1.0f64..1e4) {
                let g = octave_grid(f0, f0 * 2f64.powi(n as i32), 1).unwrap();
                prop_assert_eq!(g.len(), n as usize + 1);
                for w in g.windows(2) {
                    prop_assert!((w[1] / w[0] - 2.0).abs() < 1e-12);
                }
            }
        }
    }
}
