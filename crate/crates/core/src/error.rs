//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate front-end layout: {0}")]
    DegenerateLayout(String),

    #[error("time {t_s} s lies outside the chirp interval [0, {period_s} s]")]
    OutsideChirp { t_s: f64, period_s: f64 },

    #[error("antenna index out of range: {0}")]
    IndexOutOfRange(String),

    #[error(
        "unsupported range: total delay {delay_s:.3e} s exceeds the limit {limit_s:.3e} s \
         ({reason})"
    )]
    UnsupportedRange {
        delay_s: f64,
        limit_s: f64,
        reason: &'static str,
    },

    #[error("no detection: spectrum carries no energy")]
    NoDetection,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("closed-form response requires zero horizontal TX and vertical RX spacing")]
    ClosedFormConstraint,

    #[error("no attenuation solution for {axis} = {angle_deg} deg: {reason}")]
    UnsolvableAngle {
        axis: &'static str,
        angle_deg: f64,
        reason: &'static str,
    },

    #[error("flat spectrum: all channel attenuations are zero")]
    FlatSpectrum,

    #[error("front ends {0} and {1} do not share a layout axis")]
    DiagonalPair(usize, usize),

    #[error("calibration sweeps do not connect channels {0:?} to channel 0")]
    IncompleteCalibration(Vec<usize>),

    #[error("empty result: no runs to summarize")]
    EmptyResult,

    #[error("sample cube file: {0}")]
    CubeFormat(String),

    #[error("scenario file: {0}")]
    ScenarioFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
