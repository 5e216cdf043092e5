//! Shock response spectra of sampled acceleration records, low-pass-filter
//! based SRS (LPSRS) decompositions, and prediction of the shock environment
//! at a component interface from equipment-interface data and modal data.
//!
//! ```no_run
//! use lpsrs::{build_lpsrs, band_amplitudes, synth_shock, DampedHarmonic, LpsrsConfig};
//!
//! let shock = synth_shock(&[DampedHarmonic::new(500.0, 3000.0, 0.05, 0.0)?], 1_310_720.0, 0.05)?;
//! let set = build_lpsrs(&shock, &[1024.0, 2048.0, 4096.0, 8192.0], &LpsrsConfig::default())?;
//! println!("{:?}", band_amplitudes(&set));
//! # Ok::<(), lpsrs::Error>(())
//! ```

pub mod error;
pub mod filters;
pub mod io;
pub mod lpsrs;
pub mod model;
pub mod oracles;
pub mod srs;
pub mod transmissibility;

pub use error::{Error, Result};
pub use filters::{
    apply_compensated, bandpass, decimate, decimation_factor, design_bandpass, design_lowpass, lowpass,
    resample_for_cutoff, FilterBand, FirFilter,
};
pub use lpsrs::{
    band_amplitudes, band_decompose, build_lpsrs, check_superposition, default_cutoffs, extract_platform, BandCheck,
    BandMode, LpsrsConfig, SuperpositionReport,
};
pub use model::{
    db_ratio, interpolate_curve, octave_grid, BandSpectrum, DampedHarmonic, LpsrsSet, ModalTable, Mode, Platform,
    SdofParams, SpectrumKind, SrsCurve, TimeSeries,
};
pub use oracles::{
    duhamel_response, duhamel_srs, modal_frf, modal_interface_response, modal_sine_transmissibility,
    rect_pulse_response, rect_pulse_response_lowdamp, synth_shock, PulseResponse,
};
pub use srs::{compute_srs, dynamic_amplification, sdof_response};
pub use transmissibility::{
    ecss_predict_srs, ecss_tf_bounds, predict_band_amplitude, predict_band_srs, predict_component,
    upper_bound_abssum, Combiner, ComponentPrediction, EcssPrediction, FrfCurve, FrfSource, TransmissibilityBounds,
};
