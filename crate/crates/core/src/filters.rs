//! Linear-phase FIR filters (Hamming-windowed sinc), zero-phase application
//! by integer group-delay compensation, and decimation under the 40× rule.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// Half-length factor: N = 2·ceil(TAP_FACTOR·fs/f_edge) + 1.
///
/// Gives a Hamming transition band of about 0.33·f_edge centred on the edge,
/// so the passband holds to 0.8·f_edge and the stopband starts before 1.5·f_edge.
pub const TAP_FACTOR: f64 = 5.0;

/// Default ratio between sample rate and cutoff frequency.
pub const DEFAULT_RATE_RATIO: f64 = 40.0;

/// Above this many multiply-adds, convolution goes through the FFT.
const DIRECT_CONV_LIMIT: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterBand {
    LowPass { cutoff: f64 },
    BandPass { low: f64, high: f64 },
}

/// Symmetric FIR filter designed for a specific sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    band: FilterBand,
    sample_rate: f64,
}

impl FirFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn band(&self) -> FilterBand {
        self.band
    }

    pub fn design_sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Design cutoffs: one for a low-pass, two for a band-pass.
    pub fn design_cutoffs(&self) -> Vec<f64> {
        match self.band {
            FilterBand::LowPass { cutoff } => vec![cutoff],
            FilterBand::BandPass { low, high } => vec![low, high],
        }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Group delay in samples, (N − 1)/2.
    pub fn delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// |H(f)| of the taps at frequency `freq` (Hz).
    pub fn magnitude_at(&self, freq: f64) -> f64 {
        let m = self.delay() as f64;
        let w = 2.0 * PI * freq / self.sample_rate;
        // symmetric taps: H(e^{jw}) = e^{-jwM} Σ h[k] cos(w(k − M))
        self.taps
            .iter()
            .enumerate()
            .map(|(k, h)| h * (w * (k as f64 - m)).cos())
            .sum::<f64>()
            .abs()
    }

    pub fn gain_db_at(&self, freq: f64) -> f64 {
        20.0 * self.magnitude_at(freq).max(1e-300).log10()
    }
}

fn hamming(n: usize) -> Vec<f64> {
    let denom = (n - 1) as f64;
    let mut w: Vec<f64> = (0..n)
        .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / denom).cos())
        .collect();
    for k in 0..n / 2 {
        w[n - 1 - k] = w[k];
    }
    w
}

fn tap_count(sample_rate: f64, edge: f64) -> usize {
    2 * (TAP_FACTOR * sample_rate / edge).ceil() as usize + 1
}

/// Windowed sinc low-pass of length `n`, normalised to unit DC gain.
fn windowed_sinc(cutoff: f64, sample_rate: f64, n: usize) -> Vec<f64> {
    let m = (n - 1) / 2;
    let wc = 2.0 * cutoff / sample_rate;
    let window = hamming(n);
    let mut taps = vec![0.0; n];
    // computed on one half and mirrored so the taps are exactly symmetric
    for k in 0..=m {
        let x = (m - k) as f64;
        let s = if k == m { wc } else { (PI * wc * x).sin() / (PI * x) };
        taps[k] = window[k] * s;
        taps[n - 1 - k] = taps[k];
    }
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|h| h / sum).collect()
}

/// Hamming-windowed sinc low-pass with unit DC gain and odd length.
///
/// The response is checked after design: ≥ −0.1 dB at 0.8·cutoff and
/// ≤ −40 dB at 1.5·cutoff (when that lies below Nyquist).
pub fn design_lowpass(cutoff: f64, sample_rate: f64) -> Result<FirFilter> {
    if !(cutoff > 0.0 && sample_rate.is_finite() && cutoff < sample_rate / 2.0) {
        return Err(Error::domain(format!(
            "low-pass cutoff {cutoff} Hz must lie in (0, {}) Hz",
            sample_rate / 2.0
        )));
    }
    let n = tap_count(sample_rate, cutoff);
    let filt = FirFilter {
        taps: windowed_sinc(cutoff, sample_rate, n),
        band: FilterBand::LowPass { cutoff },
        sample_rate,
    };
    let pass = filt.gain_db_at(0.8 * cutoff);
    if pass < -0.1 {
        return Err(Error::Numeric(format!(
            "low-pass {cutoff} Hz: {pass:.3} dB at 0.8 x cutoff"
        )));
    }
    if 1.5 * cutoff < sample_rate / 2.0 {
        let stop = filt.gain_db_at(1.5 * cutoff);
        if stop > -40.0 {
            return Err(Error::Numeric(format!(
                "low-pass {cutoff} Hz: {stop:.1} dB at 1.5 x cutoff"
            )));
        }
    }
    Ok(filt)
}

/// Band-pass formed as the difference of two unit-gain windowed sincs sharing
/// the tap count of the lower edge, so the taps sum to zero.
pub fn design_bandpass(low: f64, high: f64, sample_rate: f64) -> Result<FirFilter> {
    if !(low > 0.0 && low < high && sample_rate.is_finite() && high < sample_rate / 2.0) {
        return Err(Error::domain(format!(
            "band-pass ({low}, {high}) Hz must satisfy 0 < low < high < {} Hz",
            sample_rate / 2.0
        )));
    }
    let n = tap_count(sample_rate, low);
    let upper = windowed_sinc(high, sample_rate, n);
    let lower = windowed_sinc(low, sample_rate, n);
    let filt = FirFilter {
        taps: upper.iter().zip(&lower).map(|(u, l)| u - l).collect(),
        band: FilterBand::BandPass { low, high },
        sample_rate,
    };
    let centre = filt.gain_db_at((low * high).sqrt());
    if centre < -0.5 {
        return Err(Error::Numeric(format!(
            "band-pass ({low}, {high}) Hz: {centre:.3} dB at band centre"
        )));
    }
    let mut stops = vec![low / 1.5];
    if 1.5 * high < sample_rate / 2.0 {
        stops.push(1.5 * high);
    }
    for f in stops {
        let g = filt.gain_db_at(f);
        if g > -40.0 {
            return Err(Error::Numeric(format!(
                "band-pass ({low}, {high}) Hz: {g:.1} dB at {f} Hz"
            )));
        }
    }
    Ok(filt)
}

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Filters `x` and advances the output by the group delay so that features
/// stay aligned with the input. Samples outside the record are zero; the
/// output has the input's length and rate.
pub fn apply_compensated(x: &TimeSeries, filt: &FirFilter) -> Result<TimeSeries> {
    if !same_rate(x.sample_rate(), filt.sample_rate) {
        return Err(Error::Contract(format!(
            "filter designed for {} Hz applied to a {} Hz record",
            filt.sample_rate,
            x.sample_rate()
        )));
    }
    let y = convolve_centred(x.samples(), &filt.taps);
    x.with_samples(y)
}

/// y[n] = Σ_k h[k]·x[n + M − k] with M = (len(h) − 1)/2 and zero padding.
pub(crate) fn convolve_centred(x: &[f64], h: &[f64]) -> Vec<f64> {
    let m = (h.len() - 1) / 2;
    if x.len().saturating_mul(h.len()) <= DIRECT_CONV_LIMIT {
        return (0..x.len())
            .map(|n| {
                let c = n + m;
                // k ranges where 0 <= c − k < x.len()
                let k_lo = (c + 1).saturating_sub(x.len());
                let k_hi = c.min(h.len() - 1);
                (k_lo..=k_hi).map(|k| h[k] * x[c - k]).sum()
            })
            .collect();
    }
    let full = fft_convolve(x, h);
    full[m..m + x.len()].to_vec()
}

fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    let out_len = x.len() + h.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let to_buf = |v: &[f64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        for (b, s) in buf.iter_mut().zip(v) {
            b.re = *s;
        }
        buf
    };
    let mut a = to_buf(x);
    let mut b = to_buf(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Compensated low-pass at `cutoff` designed for the record's own rate.
pub fn lowpass(x: &TimeSeries, cutoff: f64) -> Result<TimeSeries> {
    apply_compensated(x, &design_lowpass(cutoff, x.sample_rate())?)
}

/// Compensated band-pass (low, high) designed for the record's own rate.
pub fn bandpass(x: &TimeSeries, low: f64, high: f64) -> Result<TimeSeries> {
    apply_compensated(x, &design_bandpass(low, high, x.sample_rate())?)
}

/// Integer decimation factor honouring `rate ≥ ratio·cutoff`.
pub fn decimation_factor(sample_rate: f64, cutoff: f64, ratio: f64) -> Result<usize> {
    if !(cutoff > 0.0 && ratio > 0.0) {
        return Err(Error::domain(format!(
            "cutoff and ratio must be positive, got {cutoff}, {ratio}"
        )));
    }
    let q = sample_rate / (ratio * cutoff);
    if q < 1.0 - 1e-9 {
        return Err(Error::InsufficientRate {
            sample_rate,
            cutoff,
            ratio,
        });
    }
    Ok(((q + 1e-9).floor() as usize).max(1))
}

/// Keeps every `factor`-th sample, starting with the first.
pub fn decimate(x: &TimeSeries, factor: usize) -> Result<TimeSeries> {
    if factor == 0 {
        return Err(Error::domain("decimation factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(x.clone());
    }
    let samples: Vec<f64> = x.samples().iter().step_by(factor).copied().collect();
    TimeSeries::new(x.sample_rate() / factor as f64, x.start_time(), samples)
}

/// Anti-alias low-pass at `cutoff`, then integer decimation down to a rate
/// no lower than `ratio·cutoff`.
pub fn resample_for_cutoff(x: &TimeSeries, cutoff: f64, ratio: f64) -> Result<TimeSeries> {
    let factor = decimation_factor(x.sample_rate(), cutoff, ratio)?;
    let filtered = lowpass(x, cutoff)?;
    decimate(&filtered, factor)
}
