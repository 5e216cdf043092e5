//! Closed-form and brute-force references: rectangular-pulse SDOF solutions,
//! direct Duhamel quadrature, damped-harmonic shock synthesis and a
//! time-domain modal superposition that stands in for a structural model.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DampedHarmonic, ModalTable, SdofParams, SpectrumKind, SrsCurve, TimeSeries};
use crate::srs::{sdof_response, tail_samples};
use crate::transmissibility::{FrfCurve, FrfSource};

/// Displacement and acceleration of a force-driven SDOF at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseResponse {
    /// u, m.
    pub displacement: f64,
    /// ü, m/s².
    pub acceleration: f64,
}

fn check_pulse(p0: f64, stiffness: f64, t1: f64, t: f64) -> Result<()> {
    if !(p0 >= 0.0 && stiffness > 0.0 && t1 > 0.0 && t >= 0.0) {
        return Err(Error::domain(format!(
            "rectangular pulse needs p0 >= 0, k > 0, t1 > 0, t >= 0; got ({p0}, {stiffness}, {t1}, {t})"
        )));
    }
    Ok(())
}

/// Response of an SDOF (stiffness `stiffness`, oscillator `p`) at rest to a
/// rectangular force pulse of height `p0` lasting `t1` seconds, at time `t`.
///
/// Forced phase for 0 ≤ t ≤ t1, free vibration after. The forced-phase
/// acceleration carries the sign that makes it the second derivative of the
/// forced-phase displacement.
pub fn rect_pulse_response(p0: f64, stiffness: f64, p: &SdofParams, t1: f64, t: f64) -> Result<PulseResponse> {
    check_pulse(p0, stiffness, t1, t)?;
    let xi = p.damping_ratio();
    let w = p.omega();
    let wd = p.damped_omega();
    let s = (1.0 - xi * xi).sqrt();
    let k = stiffness;
    let decay = (-t * xi * w).exp();
    let (ct, st) = ((t * wd).cos(), (t * wd).sin());

    if t <= t1 {
        let u = p0 / k * (1.0 - decay * (ct + xi / s * st));
        let bracket = xi * xi * s * w * w * ct - 2.0 * xi * xi * w * wd * ct - s * wd * wd * ct
            + xi.powi(3) * w * w * st
            + 2.0 * xi * s * w * wd * st
            - xi * wd * wd * st;
        let a = -(1.0 / (k * s)) * decay * p0 * bracket;
        return Ok(PulseResponse {
            displacement: u,
            acceleration: a,
        });
    }

    let g = (t1 * xi * w).exp();
    let (cd, sd) = (((t - t1) * wd).cos(), ((t - t1) * wd).sin());
    let u = 1.0 / (k * wd * s)
        * decay
        * p0
        * (-s * wd * ct + g * s * wd * cd - xi * wd * st + g * xi * s * w * sd);
    let bracket = -xi * xi * s * w * w * wd * ct + 2.0 * xi * xi * w * wd * wd * ct + s * wd.powi(3) * ct
        - g * xi * xi * s * w * w * wd * cd
        - g * s * wd.powi(3) * cd
        - xi.powi(3) * w * w * wd * st
        - 2.0 * xi * s * w * wd * wd * st
        + xi * wd.powi(3) * st
        + g * xi.powi(3) * s * w.powi(3) * sd
        + g * xi * s * w * wd * wd * sd;
    let a = 1.0 / (k * s * wd) * decay * p0 * bracket;
    Ok(PulseResponse {
        displacement: u,
        acceleration: a,
    })
}

/// Low-damping simplification of the pulse acceleration (ω_D ≈ ω, ξ² ≈ 0).
pub fn rect_pulse_response_lowdamp(p0: f64, stiffness: f64, p: &SdofParams, t1: f64, t: f64) -> Result<f64> {
    check_pulse(p0, stiffness, t1, t)?;
    let xi = p.damping_ratio();
    if xi > 0.05 {
        warn!("low-damping pulse formula used at damping ratio {xi} (> 0.05)");
    }
    let w = p.omega();
    let term = |tau: f64| (-xi * w * tau).exp() * (w * tau).cos();
    let scale = p0 * w * w / stiffness;
    if t <= t1 {
        Ok(scale * term(t))
    } else {
        Ok(scale * (term(t) - term(t - t1)))
    }
}

/// Absolute acceleration of an SDOF under base acceleration, by trapezoid
/// quadrature of the Duhamel convolution
///
/// ```text
/// z̈(t) = (1/ω_D) ∫₀ᵗ x(τ) e^{−ξω(t−τ)} [(ω_D² − ξ²ω²) sin ω_D(t−τ) + 2ξωω_D cos ω_D(t−τ)] dτ
/// ```
///
/// O(n·m) where m is the number of nonzero input samples.
pub fn duhamel_response(base: &TimeSeries, p: &SdofParams) -> Result<TimeSeries> {
    let x = base.samples();
    let n = x.len();
    let dt = base.dt();
    let (xi, w, wd) = (p.damping_ratio(), p.omega(), p.damped_omega());
    let kernel: Vec<f64> = (0..n)
        .map(|m| {
            let s = m as f64 * dt;
            (-xi * w * s).exp() * ((wd * wd - xi * xi * w * w) * (wd * s).sin() + 2.0 * xi * w * wd * (wd * s).cos())
                / wd
        })
        .collect();
    let support: Vec<usize> = (0..n).filter(|&j| x[j] != 0.0).collect();
    let y: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let end = support.partition_point(|&j| j <= i);
            let sum: f64 = support[..end].iter().map(|&j| x[j] * kernel[i - j]).sum();
            dt * (sum - 0.5 * x[0] * kernel[i] - 0.5 * x[i] * kernel[0])
        })
        .collect();
    base.with_samples(y)
}

/// Absolute-max SRS computed with [`duhamel_response`] over the record plus
/// the same free-decay tail the recursive engine uses.
pub fn duhamel_srs(x: &TimeSeries, grid: &[f64], damping: f64) -> Result<SrsCurve> {
    let amps = grid
        .iter()
        .map(|&f| {
            let p = SdofParams::new(f, damping)?;
            let mut padded = x.samples().to_vec();
            padded.resize(x.len() + tail_samples(f, damping, x.sample_rate()), 0.0);
            let base = x.with_samples(padded)?;
            Ok(duhamel_response(&base, &p)?.peak_abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    SrsCurve::new(SpectrumKind::AbsoluteMax, damping, grid.to_vec(), amps)
}

/// Sum of damped harmonics sampled at `sample_rate` over [0, duration].
pub fn synth_shock(components: &[DampedHarmonic], sample_rate: f64, duration: f64) -> Result<TimeSeries> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::domain(format!("duration must be positive, got {duration}")));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::domain(format!("sample rate must be positive, got {sample_rate}")));
    }
    for c in components {
        if sample_rate <= 4.0 * c.frequency {
            return Err(Error::Aliasing {
                freq: c.frequency,
                min_rate: 4.0 * c.frequency,
                sample_rate,
            });
        }
    }
    let len = (duration * sample_rate).floor() as usize + 1;
    TimeSeries::from_fn(sample_rate, len.max(2), |t| {
        components.iter().map(|c| c.value_at(t)).sum()
    })
}

/// Component-interface acceleration a(t) = Σ_n P_n φ_n ẑ̈_n(t), where ẑ̈_n is
/// the absolute acceleration of an oscillator at f_n (damping `damping`)
/// driven by `base`.
pub fn modal_interface_response(base: &TimeSeries, modal: &ModalTable, damping: f64) -> Result<TimeSeries> {
    let responses = modal
        .modes()
        .par_iter()
        .map(|m| {
            let p = SdofParams::new(m.natural_frequency, damping)?;
            Ok((m.gain(), sdof_response(base, &p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![0.0; base.len()];
    for (gain, r) in &responses {
        for (o, v) in out.iter_mut().zip(r.samples()) {
            *o += gain * v;
        }
    }
    base.with_samples(out)
}

/// Steady-state sine transmissibility |a/A| of the modal responder at `freq`.
pub fn modal_sine_transmissibility(modal: &ModalTable, damping: f64, freq: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for m in modal.modes() {
        let b = freq / m.natural_frequency;
        // (1 + 2iξβ) / (1 − β² + 2iξβ)
        let (nr, ni) = (1.0, 2.0 * damping * b);
        let (dr, di) = (1.0 - b * b, 2.0 * damping * b);
        let den = dr * dr + di * di;
        re += m.gain() * (nr * dr + ni * di) / den;
        im += m.gain() * (ni * dr - nr * di) / den;
    }
    re.hypot(im)
}

/// Sine-sweep FRF of the modal responder sampled on `grid`.
pub fn modal_frf(modal: &ModalTable, damping: f64, grid: &[f64], source: FrfSource) -> Result<FrfCurve> {
    let mags = grid
        .iter()
        .map(|&f| modal_sine_transmissibility(modal, damping, f))
        .collect();
    FrfCurve::new(grid.to_vec(), mags, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;
    use std::f64::consts::PI;

    fn osc(f: f64, xi: f64) -> SdofParams {
        SdofParams::new(f, xi).unwrap()
    }

    #[test]
    fn pulse_starts_at_rest() {
        let r = rect_pulse_response(2.0, 5.0, &osc(500.0, 0.02), 1e-3, 0.0).unwrap();
        assert_eq!(r.displacement, 0.0);
        let p = osc(500.0, 0.02);
        assert!((r.acceleration - 2.0 * p.omega().powi(2) / 5.0).abs() < 1e-9 * r.acceleration);
    }

    #[test]
    fn pulse_approaches_undamped_step() {
        let p = osc(200.0, 1e-9);
        for k in 0..50 {
            let t = k as f64 * 1e-4;
            let u = rect_pulse_response(3.0, 2.0, &p, 1.0, t).unwrap().displacement;
            let expected = 1.5 * (1.0 - (p.omega() * t).cos());
            assert!((u - expected).abs() < 1e-6, "t={t}: {u} vs {expected}");
        }
    }

    #[test]
    fn pulse_phases_meet_at_t1() {
        let p = osc(500.0, 0.02);
        let (p0, k, t1) = (1.0, 1e4, 1.3e-3);
        let forced = rect_pulse_response(p0, k, &p, t1, t1).unwrap();
        let free = rect_pulse_response(p0, k, &p, t1, t1 * (1.0 + 1e-13)).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
        assert!(rel(forced.displacement, free.displacement) < 1e-9);
        // the force drops by p0, so the acceleration drops by p0/m
        let jump = free.acceleration - forced.acceleration;
        let expected = -p0 * p.omega().powi(2) / k;
        assert!(rel(jump, expected) < 1e-9, "{jump} vs {expected}");
    }

    #[test]
    fn lowdamp_examples() {
        let p = osc(500.0, 0.01);
        let a0 = rect_pulse_response_lowdamp(1.0, 1.0, &p, 1e-3, 0.0).unwrap();
        assert!((a0 - p.omega().powi(2)).abs() < 1e-9 * a0);
        // vanishing pulse
        let t1 = 1e-12;
        let a = rect_pulse_response_lowdamp(1.0, 1.0, &p, t1, 2e-3).unwrap();
        assert!(a.abs() < 1e-6 * a0);
    }

    #[test]
    fn duhamel_zero_base() {
        let x = TimeSeries::zeros(1000.0, 50).unwrap();
        let y = duhamel_response(&x, &osc(10.0, 0.05)).unwrap();
        assert!(y.samples().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn duhamel_matches_recursion_on_damped_harmonic() {
        let fs = 200_000.0;
        let h = DampedHarmonic::new(50.0, 700.0, 0.05, 0.0).unwrap();
        let x = TimeSeries::from_fn(fs, 8000, |t| h.value_at(t)).unwrap();
        for f in [300.0, 700.0, 2000.0] {
            let p = osc(f, 0.05);
            let a = duhamel_response(&x, &p).unwrap().peak_abs();
            let b = sdof_response(&x, &p).unwrap().peak_abs();
            assert!((a / b - 1.0).abs() < 0.01, "{f} Hz: {a} vs {b}");
        }
    }

    #[test]
    fn impulse_response_envelope_decays_at_xi_omega() {
        let (fs, f, xi) = (50_000.0, 500.0, 0.03);
        let mut s = vec![0.0; 20_000];
        s[1] = 1.0;
        let x = TimeSeries::new(fs, 0.0, s).unwrap();
        let y = duhamel_response(&x, &osc(f, xi)).unwrap();
        let v = y.samples();
        // log of local maxima of |y| against time
        let pts: Vec<(f64, f64)> = (1..v.len() - 1)
            .filter(|&i| v[i].abs() > v[i - 1].abs() && v[i].abs() >= v[i + 1].abs() && v[i].abs() > 0.0)
            .map(|i| (i as f64 / fs, v[i].abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let (mt, ml) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let slope = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
        let expected = -xi * 2.0 * PI * f;
        assert!((slope / expected - 1.0).abs() < 0.02, "{slope} vs {expected}");
    }

    #[test]
    fn synth_examples() {
        let x = synth_shock(&[], 1000.0, 0.1).unwrap();
        assert!(x.samples().iter().all(|v| *v == 0.0));
        assert_eq!(x.len(), 101);

        let fs = 100_000.0;
        let h = DampedHarmonic::new(7.0, 1000.0, 0.0, 0.0).unwrap();
        let x = synth_shock(&[h], fs, 0.01).unwrap();
        // one sample of phase quantisation: 1 − cos(π f/fs)
        let q = 1.0 - (PI * 1000.0 / fs).cos();
        assert!(x.peak_abs() <= 7.0 && x.peak_abs() >= 7.0 * (1.0 - q));

        let h = DampedHarmonic::new(7.0, 1000.0, 0.05, 0.0).unwrap();
        let x = synth_shock(&[h], 10_000_000.0, 0.003).unwrap();
        assert!((x.peak_abs() - h.peak()).abs() < 1e-6 * h.peak());
        assert!(x.peak_index() as f64 / 1e7 < 0.3e-3);

        assert!(matches!(synth_shock(&[h], 3000.0, 0.01), Err(Error::Aliasing { .. })));
        assert!(synth_shock(&[h], 30_000.0, 0.0).is_err());
    }

    #[test]
    fn synth_onset_is_respected() {
        let h = DampedHarmonic::new(1.0, 100.0, 0.0, 0.005).unwrap();
        let x = synth_shock(&[h], 10_000.0, 0.01).unwrap();
        assert!(x.samples()[..50].iter().all(|v| *v == 0.0));
        assert!(x.samples()[60] != 0.0);
    }

    fn one_mode(f: f64, p: f64, phi: f64) -> ModalTable {
        ModalTable::new(vec![Mode {
            order: 1,
            natural_frequency: f,
            participation: p,
            mode_shape: phi,
            effective_mass: 1e-3,
        }])
        .unwrap()
    }

    #[test]
    fn modal_zero_base() {
        let x = TimeSeries::zeros(10_000.0, 100).unwrap();
        let y = modal_interface_response(&x, &one_mode(100.0, 0.3, 2.0), 0.05).unwrap();
        assert!(y.samples().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn modal_resonance_amplification() {
        let (f, xi, fs) = (200.0, 0.05, 20_000.0);
        let modal = one_mode(f, -0.4, 2.5);
        let x = TimeSeries::from_fn(fs, 60_000, |t| (2.0 * PI * f * t).sin()).unwrap();
        let y = modal_interface_response(&x, &modal, xi).unwrap();
        let steady = y.samples()[40_000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let expected = 1.0 * (0.4f64 * 2.5) / (2.0 * xi);
        assert!((steady / expected - 1.0).abs() < 0.1, "{steady} vs {expected}");
        let analytic = modal_sine_transmissibility(&modal, xi, f);
        assert!((steady / analytic - 1.0).abs() < 0.01);
    }

    #[test]
    fn sine_transmissibility_is_gain_sum_at_dc() {
        let m = ModalTable::new(vec![
            Mode { order: 1, natural_frequency: 100.0, participation: 0.5, mode_shape: 2.0, effective_mass: 0.0 },
            Mode { order: 2, natural_frequency: 900.0, participation: 0.5, mode_shape: -0.4, effective_mass: 0.0 },
        ])
        .unwrap();
        assert!((modal_sine_transmissibility(&m, 0.05, 1e-6) - 0.8).abs() < 1e-9);
    }
}
