//! Component-interface prediction from an equipment-interface LPSRS and modal
//! data, and the ECSS rule-of-thumb transmissibility corridor.
//!
//! Per band i the component amplitude is a_i = Σ_n |P_n φ_n A_in|, where A_in
//! is the band-i equipment SRS at f_n. The band SRS is scaled by a_i / A_i and
//! the bands are summed.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_increasing, interp_loglog, interpolate_curve, BandSpectrum, LpsrsSet, ModalTable, Platform, SrsCurve, PLATFORM_ONSET_FACTOR,
};

/// Upper edge of the region where the ECSS corridor follows the sine FRF.
pub const ECSS_FRF_LIMIT_HZ: f64 = 2000.0;

/// Transmissibility assumed between 2 kHz and the transition frequency (6 dB).
pub const ECSS_CORRIDOR_TF: f64 = 2.0;

/// Where a sine transmissibility came from; sets the ECSS upper factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrfSource {
    Test,
    Fem,
}

impl std::str::FromStr for FrfSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test" => Ok(FrfSource::Test),
            "fem" => Ok(FrfSource::Fem),
            _ => Err(Error::domain(format!("unknown FRF source `{s}` (test|fem)"))),
        }
    }
}

/// Sine-sweep transmissibility magnitude against frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrfCurve {
    frequencies: Vec<f64>,
    magnitudes: Vec<f64>,
    source: FrfSource,
}

impl FrfCurve {
    pub fn new(frequencies: Vec<f64>, magnitudes: Vec<f64>, source: FrfSource) -> Result<Self> {
        if frequencies.is_empty() || frequencies.len() != magnitudes.len() {
            return Err(Error::Contract(format!(
                "FRF needs matching non-empty columns, got {} and {}",
                frequencies.len(),
                magnitudes.len()
            )));
        }
        check_increasing(&frequencies, "FRF frequencies")?;
        if frequencies[0] <= 0.0 {
            return Err(Error::domain("FRF frequencies must be positive"));
        }
        if let Some(m) = magnitudes.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::Data(format!("FRF magnitudes must be finite and non-negative, got {m}")));
        }
        Ok(FrfCurve {
            frequencies,
            magnitudes,
            source,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn source(&self) -> FrfSource {
        self.source
    }

    /// Log-log interpolated magnitude; no extrapolation.
    pub fn at(&self, freq: f64) -> Result<f64> {
        interp_loglog(&self.frequencies, &self.magnitudes, freq, "FRF")
    }
}

/// ECSS shock transmissibility corridor.
///
/// Below 2 kHz the bounds follow the sine FRF; from 2 kHz to the transition
/// frequency both bounds equal 2; beyond the transition nothing is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissibilityBounds {
    frf: FrfCurve,
    transition: f64,
}

impl TransmissibilityBounds {
    pub fn transition_frequency(&self) -> f64 {
        self.transition
    }

    pub fn source(&self) -> FrfSource {
        self.frf.source
    }

    /// (lower, upper) at `freq`, or `None` beyond the transition frequency.
    pub fn at(&self, freq: f64) -> Result<Option<(f64, f64)>> {
        if freq > self.transition {
            return Ok(None);
        }
        if freq >= ECSS_FRF_LIMIT_HZ {
            return Ok(Some((ECSS_CORRIDOR_TF, ECSS_CORRIDOR_TF)));
        }
        let frf = self.frf.at(freq)?;
        let upper = match self.frf.source {
            FrfSource::Test => (2.0 * frf).sqrt(),
            FrfSource::Fem => 2.0 * frf.sqrt(),
        };
        Ok(Some((frf.sqrt(), upper)))
    }

    /// Bounds sampled at the FRF points below 2 kHz, at 2 kHz and at the
    /// transition frequency: (frequency, lower, upper).
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        self.frf
            .frequencies
            .iter()
            .copied()
            .filter(|f| *f < ECSS_FRF_LIMIT_HZ)
            .chain([ECSS_FRF_LIMIT_HZ, self.transition])
            .filter_map(|f| self.at(f).ok().flatten().map(|(lo, hi)| (f, lo, hi)))
            .collect()
    }
}

/// Builds the ECSS corridor from a sine FRF.
pub fn ecss_tf_bounds(frf: &FrfCurve, f_transition: f64) -> Result<TransmissibilityBounds> {
    if !(f_transition > ECSS_FRF_LIMIT_HZ && f_transition.is_finite()) {
        return Err(Error::domain(format!(
            "transition frequency must exceed {ECSS_FRF_LIMIT_HZ} Hz, got {f_transition}"
        )));
    }
    let (lo, hi) = (frf.frequencies[0], frf.frequencies[frf.frequencies.len() - 1]);
    if lo >= ECSS_FRF_LIMIT_HZ || hi < ECSS_FRF_LIMIT_HZ {
        return Err(Error::Coverage(format!(
            "FRF spans [{lo}, {hi}] Hz but must cover up to {ECSS_FRF_LIMIT_HZ} Hz"
        )));
    }
    Ok(TransmissibilityBounds {
        frf: frf.clone(),
        transition: f_transition,
    })
}

/// Component SRS bracket from the ECSS corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct EcssPrediction {
    pub lower: SrsCurve,
    pub upper: SrsCurve,
}

/// Multiplies the equipment SRS by the corridor on the SRS grid, truncated
/// at the transition frequency.
pub fn ecss_predict_srs(srs_eq: &SrsCurve, bounds: &TransmissibilityBounds) -> Result<EcssPrediction> {
    let mut f = Vec::new();
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for (freq, a) in srs_eq.points() {
        if let Some((l, u)) = bounds.at(freq)? {
            f.push(freq);
            lo.push(a * l);
            hi.push(a * u);
        }
    }
    if f.is_empty() {
        return Err(Error::Coverage(format!(
            "SRS starts at {} Hz, above the transition frequency {} Hz",
            srs_eq.min_frequency(),
            bounds.transition
        )));
    }
    let make = |a| SrsCurve::new(srs_eq.kind(), srs_eq.damping_ratio(), f.clone(), a);
    Ok(EcssPrediction {
        lower: make(lo)?,
        upper: make(hi)?,
    })
}

/// How modal contributions are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combiner {
    AbsSum,
    Srss,
}

impl std::str::FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs-sum" => Ok(Combiner::AbsSum),
            "srss" => Ok(Combiner::Srss),
            _ => Err(Error::domain(format!("unknown combiner `{s}` (abs-sum|srss)"))),
        }
    }
}

/// Modal upper bound of the response-point peak: Σ_n |P_n φ_n A_n| (or the
/// square root of the sum of squares) with A_n read from `srs_eq` at f_n.
pub fn upper_bound_abssum(srs_eq: &SrsCurve, modal: &ModalTable, combiner: Combiner) -> Result<f64> {
    let terms = modal
        .modes()
        .iter()
        .map(|m| {
            interpolate_curve(srs_eq, m.natural_frequency)
                .map(|a| m.gain() * a)
                .map_err(|_| Error::Range {
                    what: format!("mode {}", m.order),
                    freq: m.natural_frequency,
                    min: srs_eq.min_frequency(),
                    max: srs_eq.max_frequency(),
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(match combiner {
        Combiner::AbsSum => terms.iter().map(|t| t.abs()).sum(),
        Combiner::Srss => terms.iter().map(|t| t * t).sum::<f64>().sqrt(),
    })
}

fn band(lpsrs: &LpsrsSet, i: usize) -> Result<&BandSpectrum> {
    if lpsrs.bands().is_empty() {
        return Err(Error::Contract("the LPSRS carries no band spectra".into()));
    }
    lpsrs
        .bands()
        .get(i)
        .ok_or_else(|| Error::domain(format!("band index {i} out of range (0..{})", lpsrs.len())))
}

/// Per-mode contributions |P_n φ_n A_in| to band `i`, in modal order. Modes
/// outside the band curve's range contribute nothing.
pub fn band_contributions(lpsrs: &LpsrsSet, modal: &ModalTable, i: usize) -> Result<Vec<f64>> {
    let b = band(lpsrs, i)?;
    Ok(modal
        .modes()
        .iter()
        .map(|m| match b.curve.at(m.natural_frequency) {
            Ok(a) => (m.gain() * a).abs(),
            Err(_) => {
                warn!(
                    "mode {} at {} Hz is outside band {} SRS range [{}, {}] Hz; skipped",
                    m.order,
                    m.natural_frequency,
                    i + 1,
                    b.curve.min_frequency(),
                    b.curve.max_frequency()
                );
                0.0
            }
        })
        .collect())
}

/// a_i = Σ_n |P_n φ_n A_in| for band `i` (0-based).
pub fn predict_band_amplitude(lpsrs: &LpsrsSet, modal: &ModalTable, i: usize) -> Result<f64> {
    Ok(band_contributions(lpsrs, modal, i)?.iter().sum())
}

/// a_if = (a_i / A_i)·A_if on `grid`, where A_i is the band signal peak.
pub fn predict_band_srs(lpsrs: &LpsrsSet, modal: &ModalTable, i: usize, grid: &[f64]) -> Result<SrsCurve> {
    let a_i = predict_band_amplitude(lpsrs, modal, i)?;
    band_srs_from_amplitude(band(lpsrs, i)?, i, a_i, grid)
}

fn band_srs_from_amplitude(b: &BandSpectrum, i: usize, a_i: f64, grid: &[f64]) -> Result<SrsCurve> {
    let kind = b.curve.kind();
    let xi = b.curve.damping_ratio();
    if b.peak == 0.0 {
        if a_i > 0.0 {
            return Err(Error::Inconsistency {
                band: i + 1,
                predicted: a_i,
            });
        }
        return SrsCurve::new(kind, xi, grid.to_vec(), vec![0.0; grid.len()]);
    }
    let scale = a_i / b.peak;
    let amps = grid
        .iter()
        .map(|&f| Ok(scale * b.curve.at(f)?))
        .collect::<Result<Vec<f64>>>()?;
    SrsCurve::new(kind, xi, grid.to_vec(), amps)
}

/// Predicted component-interface environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPrediction {
    /// a_f = Σ_i a_if.
    pub srs: SrsCurve,
    /// Cumulative predictions: curve j = Σ_{i≤j} a_if, platform a^j = Σ_{i≤j} a_i.
    pub lpsrs: LpsrsSet,
    /// a_i per band.
    pub band_amplitudes: Vec<f64>,
}

/// Predicts the component SRS and LPSRS on `grid`, which must reach
/// 5 × the top cutoff so every predicted curve shows its platform.
pub fn predict_component(lpsrs: &LpsrsSet, modal: &ModalTable, grid: &[f64]) -> Result<ComponentPrediction> {
    if grid.is_empty() {
        return Err(Error::domain("prediction grid is empty"));
    }
    let n = lpsrs.len();
    let amps = (0..n)
        .map(|i| predict_band_amplitude(lpsrs, modal, i))
        .collect::<Result<Vec<f64>>>()?;
    let band_curves = (0..n)
        .map(|i| band_srs_from_amplitude(band(lpsrs, i)?, i, amps[i], grid))
        .collect::<Result<Vec<SrsCurve>>>()?;

    let mut running = vec![0.0; grid.len()];
    let mut level = 0.0;
    let (mut curves, mut platforms) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (i, c) in band_curves.iter().enumerate() {
        for (r, a) in running.iter_mut().zip(c.amplitudes()) {
            *r += a;
        }
        level += amps[i];
        let curve = c.with_amplitudes(running.clone())?;
        platforms.push(platform_for(&curve, lpsrs.cutoffs()[i], level));
        curves.push(curve);
    }
    let bands = lpsrs
        .bands()
        .iter()
        .zip(band_curves)
        .zip(&amps)
        .map(|((b, curve), a)| BandSpectrum {
            lower: b.lower,
            upper: b.upper,
            curve,
            peak: *a,
        })
        .collect();
    let srs = curves[n - 1].clone();
    Ok(ComponentPrediction {
        srs,
        lpsrs: LpsrsSet::new(lpsrs.cutoffs().to_vec(), curves, platforms, bands)?,
        band_amplitudes: amps,
    })
}

fn platform_for(curve: &SrsCurve, cutoff: f64, amplitude: f64) -> Platform {
    let spread = curve
        .window(PLATFORM_ONSET_FACTOR * cutoff * (1.0 - 1e-8), f64::INFINITY)
        .map(|w| {
            let (lo, hi) = w
                .amplitudes()
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(l, h), a| (l.min(*a), h.max(*a)));
            if amplitude > 0.0 {
                (hi - lo) / amplitude
            } else {
                0.0
            }
        })
        .unwrap_or(0.0);
    Platform {
        amplitude,
        spread,
        flat: spread <= crate::lpsrs::PLATFORM_FLATNESS_TOLERANCE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{octave_grid, Mode, SpectrumKind};

    fn curve(f: Vec<f64>, a: Vec<f64>) -> SrsCurve {
        SrsCurve::new(SpectrumKind::AbsoluteMax, 0.05, f, a).unwrap()
    }

    fn mode(order: u32, f: f64, p: f64, phi: f64) -> Mode {
        Mode {
            order,
            natural_frequency: f,
            participation: p,
            mode_shape: phi,
            effective_mass: 0.0,
        }
    }

    fn flat(level: f64) -> SrsCurve {
        curve(vec![50.0, 100_000.0], vec![level, level])
    }

    #[test]
    fn upper_bound_examples() {
        let m = ModalTable::new(vec![mode(1, 100.0, 1.0, 1.0)]).unwrap();
        assert_eq!(upper_bound_abssum(&flat(100.0), &m, Combiner::AbsSum).unwrap(), 100.0);

        let srs = curve(vec![100.0, 200.0], vec![100.0, 200.0]);
        let m = ModalTable::new(vec![mode(1, 100.0, 0.5, 2.0), mode(2, 200.0, 0.25, -1.0)]).unwrap();
        assert!((upper_bound_abssum(&srs, &m, Combiner::AbsSum).unwrap() - 150.0).abs() < 1e-12);
        let s = upper_bound_abssum(&srs, &m, Combiner::Srss).unwrap();
        assert!((s - 12_500f64.sqrt()).abs() < 1e-9);

        let m = ModalTable::new(vec![mode(1, 103.0, -0.1170, -13.44)]).unwrap();
        let a = upper_bound_abssum(&flat(100.0), &m, Combiner::AbsSum).unwrap();
        assert!((a - 157.248).abs() < 1e-9);
    }

    #[test]
    fn upper_bound_names_out_of_range_mode() {
        let m = ModalTable::new(vec![mode(7, 10.0, 1.0, 1.0)]).unwrap();
        match upper_bound_abssum(&flat(1.0), &m, Combiner::AbsSum) {
            Err(Error::Range { what, .. }) => assert_eq!(what, "mode 7"),
            other => panic!("{other:?}"),
        }
    }

    fn frf(level: f64, source: FrfSource) -> FrfCurve {
        FrfCurve::new(vec![20.0, 500.0, 5000.0], vec![level; 3], source).unwrap()
    }

    #[test]
    fn ecss_bound_examples() {
        let b = ecss_tf_bounds(&frf(4.0, FrfSource::Test), 10_000.0).unwrap();
        let (lo, hi) = b.at(500.0).unwrap().unwrap();
        assert_eq!(lo, 2.0);
        assert!((hi - 8f64.sqrt()).abs() < 1e-12);
        let b = ecss_tf_bounds(&frf(4.0, FrfSource::Fem), 10_000.0).unwrap();
        assert_eq!(b.at(500.0).unwrap().unwrap(), (2.0, 4.0));
        for f in [2000.0, 3000.0, 10_000.0] {
            assert_eq!(b.at(f).unwrap().unwrap(), (2.0, 2.0));
        }
        assert_eq!(b.at(10_001.0).unwrap(), None);
        assert!(b.at(10.0).is_err());
    }

    #[test]
    fn ecss_bound_errors() {
        assert!(matches!(ecss_tf_bounds(&frf(1.0, FrfSource::Test), 2000.0), Err(Error::Domain(_))));
        let short = FrfCurve::new(vec![20.0, 1000.0], vec![1.0, 1.0], FrfSource::Test).unwrap();
        assert!(matches!(ecss_tf_bounds(&short, 5000.0), Err(Error::Coverage(_))));
        let high = FrfCurve::new(vec![2500.0, 5000.0], vec![1.0, 1.0], FrfSource::Test).unwrap();
        assert!(matches!(ecss_tf_bounds(&high, 6000.0), Err(Error::Coverage(_))));
    }

    #[test]
    fn ecss_prediction_scales_and_truncates() {
        let g = octave_grid(100.0, 20_000.0, 3).unwrap();
        let n = g.len();
        let srs = curve(g, vec![10.0; n]);
        let b = ecss_tf_bounds(&frf(1.0, FrfSource::Test), 8000.0).unwrap();
        let p = ecss_predict_srs(&srs, &b).unwrap();
        assert!(p.upper.max_frequency() <= 8000.0);
        for ((f, lo), hi) in p.lower.points().zip(p.upper.amplitudes()) {
            assert!(lo <= *hi);
            if f < 2000.0 {
                assert!((lo - 10.0).abs() < 1e-12);
            } else {
                assert_eq!(lo, 20.0);
            }
        }
        let pts = b.points();
        assert_eq!(pts.last().unwrap().0, 8000.0);
    }

    #[test]
    fn parse_enums() {
        assert_eq!("abs-sum".parse::<Combiner>().unwrap(), Combiner::AbsSum);
        assert_eq!("srss".parse::<Combiner>().unwrap(), Combiner::Srss);
        assert_eq!("fem".parse::<FrfSource>().unwrap(), FrfSource::Fem);
        assert!("x".parse::<FrfSource>().is_err());
    }

    fn single_band_set(peak: f64, level: f64) -> LpsrsSet {
        let g = octave_grid(100.0, 8000.0, 6).unwrap();
        let n = g.len();
        let c = curve(g, vec![level; n]);
        let p = Platform { amplitude: level, spread: 0.0, flat: true };
        let b = BandSpectrum { lower: 0.0, upper: 1000.0, curve: c.clone(), peak };
        LpsrsSet::new(vec![1000.0], vec![c], vec![p], vec![b]).unwrap()
    }

    #[test]
    fn band_prediction_examples() {
        let m = ModalTable::new(vec![mode(1, 500.0, 1.0, 2.0)]).unwrap();
        let s = single_band_set(100.0, 100.0);
        assert!((predict_band_amplitude(&s, &m, 0).unwrap() - 200.0).abs() < 1e-9);
        let z = single_band_set(0.0, 0.0);
        assert_eq!(predict_band_amplitude(&z, &m, 0).unwrap(), 0.0);
        assert!(predict_band_amplitude(&s, &m, 1).is_err());

        // a_i = 200, A_i = 100, A_if = 150
        let s = single_band_set(100.0, 150.0);
        let m = ModalTable::new(vec![mode(1, 500.0, 1.0, 200.0 / 150.0)]).unwrap();
        let c = predict_band_srs(&s, &m, 0, &[1000.0]).unwrap();
        assert!((c.amplitudes()[0] - 300.0).abs() < 1e-9);
    }

    #[test]
    fn zero_band_with_prediction_is_inconsistent() {
        let m = ModalTable::new(vec![mode(1, 500.0, 1.0, 2.0)]).unwrap();
        let s = single_band_set(0.0, 5.0);
        assert!(matches!(predict_band_srs(&s, &m, 0, &[1000.0]), Err(Error::Inconsistency { band: 1, .. })));
    }

    #[test]
    fn out_of_range_modes_are_skipped() {
        let s = single_band_set(100.0, 100.0);
        let m = ModalTable::new(vec![mode(1, 500.0, 1.0, 1.0), mode(2, 50_000.0, 1.0, 1.0)]).unwrap();
        assert!((predict_band_amplitude(&s, &m, 0).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn unit_gain_reproduces_equipment() {
        let s = single_band_set(100.0, 100.0);
        let m = ModalTable::new(vec![mode(1, 500.0, 1.0, 1.0)]).unwrap();
        let g = octave_grid(100.0, 8000.0, 6).unwrap();
        let p = predict_component(&s, &m, &g).unwrap();
        assert_eq!(p.srs.amplitudes(), s.bands()[0].curve.amplitudes());
        assert_eq!(p.lpsrs.platform_amplitudes(), vec![100.0]);
    }
}
