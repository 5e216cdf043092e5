//! Low-pass-filter-based SRS: one SRS per cutoff, platform extraction, band
//! amplitudes and the superposition check.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{decimate, decimation_factor, design_lowpass, lowpass, bandpass, DEFAULT_RATE_RATIO};
use crate::model::{
    check_increasing, db_ratio, octave_grid, BandSpectrum, LpsrsSet, Platform, SpectrumKind, SrsCurve, TimeSeries,
    PLATFORM_ONSET_FACTOR,
};
use crate::srs::{compute_srs, DEFAULT_DAMPING, DEFAULT_POINTS_PER_OCTAVE};

/// Each curve is computed up to this multiple of its cutoff.
pub const CURVE_EXTENT_FACTOR: f64 = 8.0;

/// Relative spread above which a platform window is reported as not flat.
pub const PLATFORM_FLATNESS_TOLERANCE: f64 = 0.10;

/// Settings for [`build_lpsrs`] and [`check_superposition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpsrsConfig {
    pub damping: f64,
    pub points_per_octave: u32,
    /// Lowest analysis frequency, Hz. Lowered to cutoff/8 for very low cutoffs.
    pub f_min: f64,
    /// Sample rate kept at or above `rate_ratio × cutoff` after decimation.
    pub rate_ratio: f64,
}

impl Default for LpsrsConfig {
    fn default() -> Self {
        LpsrsConfig {
            damping: DEFAULT_DAMPING,
            points_per_octave: DEFAULT_POINTS_PER_OCTAVE,
            f_min: 100.0,
            rate_ratio: DEFAULT_RATE_RATIO,
        }
    }
}

impl LpsrsConfig {
    fn grid_start(&self, lowest_cutoff: f64) -> f64 {
        self.f_min.min(lowest_cutoff / CURVE_EXTENT_FACTOR)
    }

    /// Analysis grid for the curve at `cutoff` in a set whose lowest cutoff
    /// is `lowest_cutoff`. All curves of a set share their leading points.
    pub fn curve_grid(&self, lowest_cutoff: f64, cutoff: f64) -> Result<Vec<f64>> {
        octave_grid(
            self.grid_start(lowest_cutoff),
            CURVE_EXTENT_FACTOR * cutoff,
            self.points_per_octave,
        )
    }
}

/// How band signals A_i(t) are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandMode {
    /// A_i(t) = A^i(t) − A^{i−1}(t) from compensated low-pass outputs.
    Difference,
    /// Band-pass (f_{i−1/2}, f_{i+1/2}); the first band is the low-pass.
    BandPass,
}

impl std::str::FromStr for BandMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "difference" => Ok(BandMode::Difference),
            "bandpass" | "band-pass" => Ok(BandMode::BandPass),
            _ => Err(Error::domain(format!("unknown band mode `{s}`"))),
        }
    }
}

fn check_cutoffs(x: &TimeSeries, cutoffs: &[f64]) -> Result<()> {
    if cutoffs.is_empty() {
        return Err(Error::domain("no cutoff frequencies given"));
    }
    check_increasing(cutoffs, "cutoffs")?;
    if cutoffs[0] <= 0.0 {
        return Err(Error::domain("cutoff frequencies must be positive"));
    }
    let top = cutoffs[cutoffs.len() - 1];
    if top >= x.sample_rate() / 2.0 {
        return Err(Error::domain(format!(
            "cutoff {top} Hz is not below Nyquist ({} Hz)",
            x.sample_rate() / 2.0
        )));
    }
    Ok(())
}

fn at_cutoff<T>(cutoff: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::AtCutoff {
        cutoff,
        source: Box::new(e),
    })
}

/// `x` preceded by zeros covering the pre-ringing of the longest filter.
/// Records are taken to start from rest, so the filtered signals must be
/// allowed to rise before the first recorded sample instead of starting with
/// a step.
fn with_lead_in(x: &TimeSeries, cutoffs: &[f64]) -> Result<TimeSeries> {
    let pad = at_cutoff(cutoffs[0], design_lowpass(cutoffs[0], x.sample_rate()))?.delay();
    let mut samples = vec![0.0; pad + x.len()];
    samples[pad..].copy_from_slice(x.samples());
    TimeSeries::new(x.sample_rate(), x.start_time() - pad as f64 * x.dt(), samples)
}

/// Low-passes `x` at every cutoff at its own rate.
fn lowpass_all(x: &TimeSeries, cutoffs: &[f64]) -> Result<Vec<TimeSeries>> {
    cutoffs
        .par_iter()
        .map(|&fc| at_cutoff(fc, lowpass(x, fc)))
        .collect()
}

fn differences(lowpassed: &[TimeSeries]) -> Result<Vec<TimeSeries>> {
    lowpassed
        .iter()
        .enumerate()
        .map(|(i, lp)| if i == 0 { Ok(lp.clone()) } else { lp.sub(&lowpassed[i - 1]) })
        .collect()
}

/// Builds the LPSRS of `x`: for every cutoff the record is low-passed
/// (anti-alias filter and cutoff filter are the same), decimated so the rate
/// stays at or above `rate_ratio × cutoff`, and its SRS is computed up to
/// 8 × cutoff. Band signals are formed by differencing the low-passed records
/// and their SRS are kept on a common grid for prediction.
///
/// The record is taken to start from rest: filter pre-ringing before its
/// first sample is kept.
pub fn build_lpsrs(x: &TimeSeries, cutoffs: &[f64], config: &LpsrsConfig) -> Result<LpsrsSet> {
    check_cutoffs(x, cutoffs)?;
    for &fc in cutoffs {
        at_cutoff(fc, decimation_factor(x.sample_rate(), fc, config.rate_ratio))?;
        at_cutoff(fc, design_lowpass(fc, x.sample_rate()).map(|_| ()))?;
    }
    build_padded(&with_lead_in(x, cutoffs)?, cutoffs, config)
}

fn build_padded(x: &TimeSeries, cutoffs: &[f64], config: &LpsrsConfig) -> Result<LpsrsSet> {
    let lowpassed = lowpass_all(x, cutoffs)?;
    let kind = SpectrumKind::AbsoluteMax;

    let per_cutoff = cutoffs
        .par_iter()
        .zip(&lowpassed)
        .map(|(&fc, lp)| {
            at_cutoff(fc, (|| {
                let q = decimation_factor(x.sample_rate(), fc, config.rate_ratio)?;
                let reduced = decimate(lp, q)?;
                let grid = config.curve_grid(cutoffs[0], fc)?;
                let curve = compute_srs(&reduced, &grid, config.damping, kind)?;
                let platform = extract_platform(&curve, fc)?;
                Ok((curve, platform))
            })())
        })
        .collect::<Result<Vec<_>>>()?;
    let (curves, platforms): (Vec<SrsCurve>, Vec<Platform>) = per_cutoff.into_iter().unzip();

    let band_signals = differences(&lowpassed)?;
    let top = cutoffs[cutoffs.len() - 1];
    let band_grid = config.curve_grid(cutoffs[0], top)?;
    let bands = band_signals
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let curve = compute_srs(b, &band_grid, config.damping, kind)?;
            Ok(BandSpectrum {
                lower: if i == 0 { 0.0 } else { cutoffs[i - 1] },
                upper: cutoffs[i],
                curve,
                peak: b.peak_abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    LpsrsSet::new(cutoffs.to_vec(), curves, platforms, bands)
}

/// Platform amplitude A^i of a curve low-passed at `cutoff`: the median of
/// its amplitudes at frequencies from 5 × cutoff to the end of the curve.
pub fn extract_platform(curve: &SrsCurve, cutoff: f64) -> Result<Platform> {
    let start = PLATFORM_ONSET_FACTOR * cutoff;
    let window = curve
        .window(start * (1.0 - 1e-8), f64::INFINITY)
        .filter(|_| curve.max_frequency() >= start * (1.0 - 1e-8))
        .ok_or_else(|| Error::Range {
            what: format!("platform window for cutoff {cutoff} Hz"),
            freq: start,
            min: curve.min_frequency(),
            max: curve.max_frequency(),
        })?;
    let mut amps = window.amplitudes().to_vec();
    amps.sort_by(|a, b| a.total_cmp(b));
    let n = amps.len();
    let median = if n % 2 == 1 {
        amps[n / 2]
    } else {
        0.5 * (amps[n / 2 - 1] + amps[n / 2])
    };
    let spread = if median > 0.0 {
        (amps[n - 1] - amps[0]) / median
    } else {
        0.0
    };
    let flat = spread <= PLATFORM_FLATNESS_TOLERANCE;
    if !flat {
        warn!(
            "platform above {start} Hz for cutoff {cutoff} Hz is not flat (spread {:.1}%)",
            100.0 * spread
        );
    }
    Ok(Platform {
        amplitude: median,
        spread,
        flat,
    })
}

/// Band amplitudes from platform differences, A_1 = A^1 and
/// A_i = A^i − A^{i−1}. Negative differences are clamped to zero.
pub fn band_amplitudes(lpsrs: &LpsrsSet) -> Vec<f64> {
    let p = lpsrs.platform_amplitudes();
    (0..p.len())
        .map(|i| {
            let d = if i == 0 { p[0] } else { p[i] - p[i - 1] };
            if d < 0.0 {
                warn!(
                    "band {} ({} Hz): platform difference {d} is negative, clamped to 0",
                    i + 1,
                    lpsrs.cutoffs()[i]
                );
                0.0
            } else {
                d
            }
        })
        .collect()
}

/// Band signals A_i(t), all at the record's own rate. The first band runs
/// from 0 Hz to the first cutoff.
pub fn band_decompose(x: &TimeSeries, cutoffs: &[f64], mode: BandMode) -> Result<Vec<TimeSeries>> {
    check_cutoffs(x, cutoffs)?;
    match mode {
        BandMode::Difference => differences(&lowpass_all(x, cutoffs)?),
        BandMode::BandPass => (0..cutoffs.len())
            .into_par_iter()
            .map(|i| {
                let r = if i == 0 {
                    lowpass(x, cutoffs[0])
                } else {
                    bandpass(x, cutoffs[i - 1], cutoffs[i])
                };
                at_cutoff(cutoffs[i], r)
            })
            .collect(),
    }
}

/// One band of a [`SuperpositionReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCheck {
    pub band: usize,
    pub lower_hz: f64,
    pub upper_hz: f64,
    /// max |A_i(t)| of the band signal.
    pub band_peak: f64,
    /// A^i − A^{i−1} from the LPSRS platforms, clamped at zero.
    pub platform_difference: f64,
    /// 20·log10(band_peak / platform_difference); absent when either is zero.
    pub ratio_db: Option<f64>,
    /// Time of max |A_i(t)|, s.
    pub peak_time: f64,
    /// The band peaks too far from the overall peak.
    pub desynchronized: bool,
}

/// Comparison of Σ max|A_i(t)| against max|A(t)| and of band peaks against
/// platform differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionReport {
    pub band_mode: BandMode,
    /// max |A(t)| after low-pass at the top cutoff.
    pub peak: f64,
    /// Time of `peak`, s.
    pub peak_time: f64,
    pub band_peak_sum: f64,
    /// 20·log10(Σ A_i / A); absent when either is zero.
    pub total_db: Option<f64>,
    pub bands: Vec<BandCheck>,
    pub desynchronized: bool,
    pub platforms: Vec<f64>,
}

/// Bands below this fraction of the largest band peak are not checked for
/// synchronisation.
const SIGNIFICANT_BAND_FRACTION: f64 = 0.1;

/// Tests Σ max|A_i(t)| ≈ max|A(t)| on `x`.
///
/// A band is flagged as desynchronised when it is significant and its peak
/// lies more than one period of its lower edge (two periods of the first
/// cutoff for the first band) away from the peak of the whole record.
pub fn check_superposition(
    x: &TimeSeries,
    cutoffs: &[f64],
    mode: BandMode,
    config: &LpsrsConfig,
) -> Result<SuperpositionReport> {
    let lpsrs = build_lpsrs(x, cutoffs, config)?;
    let x = &with_lead_in(x, cutoffs)?;
    let diffs = band_amplitudes(&lpsrs);
    let top = cutoffs[cutoffs.len() - 1];
    let whole = lowpass(x, top)?;
    let (peak, peak_time) = (whole.peak_abs(), whole.time_at(whole.peak_index()));
    let signals = band_decompose(x, cutoffs, mode)?;
    let largest = signals.iter().map(|s| s.peak_abs()).fold(0.0, f64::max);

    let ratio = |a: f64, b: f64| if a > 0.0 && b > 0.0 { db_ratio(a, b).ok() } else { None };
    let bands: Vec<BandCheck> = signals
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let band_peak = s.peak_abs();
            let t = s.time_at(s.peak_index());
            let window = if i == 0 { 2.0 / cutoffs[0] } else { 1.0 / cutoffs[i - 1] };
            let significant = largest > 0.0 && band_peak >= SIGNIFICANT_BAND_FRACTION * largest;
            BandCheck {
                band: i + 1,
                lower_hz: if i == 0 { 0.0 } else { cutoffs[i - 1] },
                upper_hz: cutoffs[i],
                band_peak,
                platform_difference: diffs[i],
                ratio_db: ratio(band_peak, diffs[i]),
                peak_time: t,
                desynchronized: significant && (t - peak_time).abs() > window,
            }
        })
        .collect();
    let band_peak_sum: f64 = bands.iter().map(|b| b.band_peak).sum();
    Ok(SuperpositionReport {
        band_mode: mode,
        peak,
        peak_time,
        band_peak_sum,
        total_db: ratio(band_peak_sum, peak),
        desynchronized: bands.iter().any(|b| b.desynchronized),
        bands,
        platforms: lpsrs.platform_amplitudes(),
    })
}

/// Octave cutoffs (powers of two, Hz) for `x`: from the lowest octave whose
/// low-passed peak exceeds 1% of max|x| up to the largest power of two that
/// honours the rate ratio.
pub fn default_cutoffs(x: &TimeSeries, rate_ratio: f64) -> Result<Vec<f64>> {
    let fs = x.sample_rate();
    let mut k = (fs / rate_ratio).log2().floor() as i32;
    if 2f64.powi(k) >= fs / 2.0 {
        k -= 1;
    }
    let top = 2f64.powi(k);
    if !(top >= 1.0) {
        return Err(Error::domain(format!("sample rate {fs} Hz is too low for octave cutoffs")));
    }
    let floor = 0.01 * x.peak_abs();
    // a filter longer than the record is pointless
    let lowest_useful = 10.0 * fs / x.len() as f64;
    let mut cutoffs = vec![top];
    let mut fc = top / 2.0;
    while fc >= lowest_useful.max(1.0) {
        if lowpass(x, fc)?.peak_abs() <= floor {
            break;
        }
        cutoffs.push(fc);
        fc /= 2.0;
    }
    cutoffs.reverse();
    Ok(cutoffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DampedHarmonic;
    use crate::oracles::synth_shock;

    fn flat_curve(level: f64, f_max: f64) -> SrsCurve {
        let g = octave_grid(100.0, f_max, 12).unwrap();
        let n = g.len();
        SrsCurve::new(SpectrumKind::AbsoluteMax, 0.05, g, vec![level; n]).unwrap()
    }

    #[test]
    fn platform_of_constant_tail() {
        let p = extract_platform(&flat_curve(42.0, 8000.0), 1000.0).unwrap();
        assert_eq!(p.amplitude, 42.0);
        assert!(p.flat);
        assert_eq!(p.spread, 0.0);
    }

    #[test]
    fn platform_needs_five_times_cutoff() {
        let c = flat_curve(1.0, 3000.0);
        assert!(matches!(extract_platform(&c, 1000.0), Err(Error::Range { .. })));
    }

    #[test]
    fn ripple_is_flagged() {
        let g = octave_grid(100.0, 8000.0, 12).unwrap();
        let a: Vec<f64> = g.iter().map(|f| if *f > 6000.0 { 2.0 } else { 1.0 }).collect();
        let c = SrsCurve::new(SpectrumKind::AbsoluteMax, 0.05, g, a).unwrap();
        assert!(!extract_platform(&c, 1000.0).unwrap().flat);
    }

    fn set_with_platforms(p: &[f64]) -> LpsrsSet {
        let cutoffs: Vec<f64> = (0..p.len()).map(|i| 1000.0 * 2f64.powi(i as i32)).collect();
        let curves = cutoffs.iter().zip(p).map(|(fc, a)| flat_curve(*a, 8.0 * fc)).collect();
        let platforms = p.iter().map(|a| Platform { amplitude: *a, spread: 0.0, flat: true }).collect();
        LpsrsSet::new(cutoffs, curves, platforms, vec![]).unwrap()
    }

    #[test]
    fn band_amplitude_examples() {
        let s = set_with_platforms(&[100.0, 300.0, 600.0]);
        assert_eq!(band_amplitudes(&s), vec![100.0, 200.0, 300.0]);
        let s = set_with_platforms(&[100.0, 90.0, 150.0]);
        assert_eq!(band_amplitudes(&s), vec![100.0, 0.0, 60.0]);
    }

    #[test]
    fn zero_signal_gives_zero_lpsrs() {
        let x = TimeSeries::zeros(163_840.0, 4096).unwrap();
        let s = build_lpsrs(&x, &[1024.0, 2048.0, 4096.0], &LpsrsConfig::default()).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.platform_amplitudes().iter().all(|a| *a == 0.0));
        assert!(s.curves().iter().all(|c| c.amplitudes().iter().all(|a| *a == 0.0)));
        for b in band_decompose(&x, &[1024.0, 2048.0], BandMode::BandPass).unwrap() {
            assert_eq!(b.peak_abs(), 0.0);
        }
    }

    #[test]
    fn energy_lands_in_its_band() {
        let fs = 163_840.0;
        let h = DampedHarmonic::new(100.0, 3000.0, 0.05, 0.002).unwrap();
        let x = synth_shock(&[h], fs, 0.05).unwrap();
        let s = build_lpsrs(&x, &[2048.0, 4096.0], &LpsrsConfig::default()).unwrap();
        let p = s.platform_amplitudes();
        // the abrupt onset spreads content below 2 kHz; the low-passed peaks
        // are about 26.6 and 79.7 m/s²
        assert!(p[0] < 0.4 * p[1], "{p:?}");
        for (fc, a) in [(2048.0, p[0]), (4096.0, p[1])] {
            let direct = lowpass(&x, fc).unwrap().peak_abs();
            assert!((a / direct - 1.0).abs() < 0.05, "{fc}: {a} vs {direct}");
        }
    }

    #[test]
    fn abrupt_record_start_is_not_a_step() {
        // strong high-frequency burst from the first sample; its low-passed
        // version rings up before t = 0
        let fs = 327_680.0;
        let h = DampedHarmonic::new(1000.0, 6000.0, 0.05, 0.0).unwrap();
        let x = synth_shock(&[h], fs, 0.03).unwrap();
        let s = build_lpsrs(&x, &[1024.0], &LpsrsConfig::default()).unwrap();
        let padded = with_lead_in(&x, &[1024.0]).unwrap();
        assert!(padded.start_time() < 0.0);
        assert_eq!(&padded.samples()[padded.len() - x.len()..], x.samples());
        let direct = lowpass(&padded, 1024.0).unwrap().peak_abs();
        let a = s.platforms()[0].amplitude;
        assert!((a / direct - 1.0).abs() < 0.05, "{a} vs {direct}");
    }

    #[test]
    fn insufficient_rate_names_cutoff() {
        let x = TimeSeries::zeros(100_000.0, 1000).unwrap();
        let e = build_lpsrs(&x, &[1024.0, 4096.0], &LpsrsConfig::default()).unwrap_err();
        match e {
            Error::AtCutoff { cutoff, source } => {
                assert_eq!(cutoff, 4096.0);
                assert!(matches!(*source, Error::InsufficientRate { .. }));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn band_mode_parses() {
        assert_eq!("difference".parse::<BandMode>().unwrap(), BandMode::Difference);
        assert_eq!("bandpass".parse::<BandMode>().unwrap(), BandMode::BandPass);
        assert!("x".parse::<BandMode>().is_err());
    }

    #[test]
    fn default_cutoffs_cover_content() {
        let fs = 163_840.0;
        let comps = [
            DampedHarmonic::new(10.0, 700.0, 0.05, 0.0).unwrap(),
            DampedHarmonic::new(10.0, 3000.0, 0.05, 0.0).unwrap(),
        ];
        let x = synth_shock(&comps, fs, 0.1).unwrap();
        let c = default_cutoffs(&x, 40.0).unwrap();
        assert_eq!(*c.last().unwrap(), 4096.0);
        assert!(c[0] <= 512.0, "{c:?}");
        assert!(c.windows(2).all(|w| w[1] == 2.0 * w[0]));
    }
}
