//! Closed-loop simulator and solver for two-dimensional angle-of-arrival
//! synthesis with a four-channel radar target simulator (RTS).
//!
//! Four RTS front ends in a square formation echo the chirps of an FMCW MIMO
//! radar. Weighting the four coherent echoes steers the radar's detected
//! angle of arrival anywhere between the front ends. The crate provides:
//!
//! * the attenuation solver that turns a requested (azimuth, elevation) into
//!   the four channel weights, plus its independent numerical verifier
//!   ([`solver`]),
//! * beat-signal synthesis and range processing for the full simulated chain
//!   ([`signal`]),
//! * direct beamforming, the closed-form channel response and angle
//!   estimation ([`beam`]),
//! * pairwise phase-coherency calibration ([`calib`]),
//! * the angle-grid measurement campaign with CSV/JSON emission
//!   ([`experiment`]).

pub mod beam;
pub mod calib;
pub mod config;
pub mod cube_io;
pub mod error;
pub mod experiment;
pub mod signal;
pub mod solver;

pub use beam::{
    beamform_at, beamform_direct, channel_common_phase, channel_response_closed_form,
    estimate_angle, g_az, g_el, write_spectrum_csv, AngleEstimate, BeamGrid, BeamSpectrum,
    GridSpec,
};
pub use calib::{
    apply_calibration, build_calibration, compensate_baseline_phases, measure_channel_phases,
    phase_wrap_period, run_sweep, write_sweep_csv, CalibrationSweep, CalibrationTable,
    SweepConfig,
};
pub use config::{
    reduce_layout, validate_scenario, wavelength, Diagnostic, FrontEndLayout, RadarConfig,
    ReducedLayout, RtsChannel, RtsConfig, ScenarioConfig, Severity, SPEED_OF_LIGHT,
};
pub use error::{Error, Result};
pub use experiment::{
    run_grid, summarize, write_manifest, write_runs_csv, write_summary_csv, ErrorSummary,
    GridRunConfig, GridRunResult, ImperfectionConfig, LayoutMode, SolverMode,
};
pub use signal::{
    chirp_phase, element_position, extract_peak_bin, range_dft, range_dft_windowed,
    return_delay, synthesize_cube, synthesize_cube_with_noise, ChannelSnapshot, RangeSpectrum,
    SampleCube, Window,
};
pub use solver::{
    coherency_check, dg_az, dg_el, predict_peak, solve_attenuations, superimposed_value,
    AttenuationSet, TargetAngle,
};
