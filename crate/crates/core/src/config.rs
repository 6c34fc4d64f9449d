//! Scenario configuration: radar waveform and antenna array parameters, RTS
//! channel settings and front-end layout, plus validation and file I/O.
//!
//! Angles are degrees in every external interface (scenario files, CSV, CLI);
//! trigonometry happens in radians inside the math routines. All lengths are
//! meters, times are seconds, frequencies are hertz.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s. Fixed, never configurable.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space wavelength for a carrier frequency.
pub fn wavelength(carrier_frequency_hz: f64) -> Result<f64> {
    if !carrier_frequency_hz.is_finite() || carrier_frequency_hz <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "carrier frequency must be positive, got {carrier_frequency_hz}"
        )));
    }
    Ok(SPEED_OF_LIGHT / carrier_frequency_hz)
}

/// FMCW waveform and MIMO array description of the radar under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub chirp_period_s: f64,
    pub num_samples: usize,
    pub num_tx: usize,
    pub num_rx: usize,
    /// ADC sample rate. Defaults to `num_samples / chirp_period_s` so the
    /// capture spans exactly one chirp.
    pub sample_rate_hz: f64,
    /// Horizontal TX element spacing. Zero for the one-dimensional TX
    /// distribution assumed by the closed-form channel response.
    pub tx_spacing_y_m: f64,
    /// Horizontal RX element spacing.
    pub rx_spacing_y_m: f64,
    /// Vertical TX element spacing.
    pub tx_spacing_z_m: f64,
    /// Vertical RX element spacing. Zero for the one-dimensional RX
    /// distribution assumed by the closed-form channel response.
    pub rx_spacing_z_m: f64,
}

impl RadarConfig {
    /// 77 GHz, 1 GHz bandwidth, 3 TX x 4 RX reference radar with the default
    /// quarter-wavelength element spacings (RX horizontal, TX vertical).
    pub fn reference() -> Self {
        let num_samples = 1024;
        let chirp_period_s = 50e-6;
        let lambda = SPEED_OF_LIGHT / 77e9;
        RadarConfig {
            carrier_frequency_hz: 77e9,
            bandwidth_hz: 1e9,
            chirp_period_s,
            num_samples,
            num_tx: 3,
            num_rx: 4,
            sample_rate_hz: num_samples as f64 / chirp_period_s,
            tx_spacing_y_m: 0.0,
            rx_spacing_y_m: lambda / 4.0,
            tx_spacing_z_m: lambda / 4.0,
            rx_spacing_z_m: 0.0,
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// Wavelength the angle processing operates at: the chirp sweeps from the
    /// carrier up by the bandwidth, so the per-element beat phases correspond
    /// to the sweep center frequency. Beamforming with the plain carrier
    /// wavelength would scale every detected sine by `1 + B/(2 f_c)`.
    pub fn angle_wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_frequency_hz + self.bandwidth_hz / 2.0)
    }

    /// True when the array is one-dimensional per axis (no horizontal TX and
    /// no vertical RX spread), the regime in which the closed-form channel
    /// response is exact in its own terms.
    pub fn closed_form_compatible(&self) -> bool {
        self.tx_spacing_y_m == 0.0 && self.rx_spacing_z_m == 0.0
    }
}

/// One RTS transceiver channel: amplitude weight, artificial delay and an
/// additional phase offset modelling hardware incoherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtsChannel {
    pub attenuation: f64,
    pub delay_s: f64,
    #[serde(default)]
    pub phase_offset_rad: f64,
}

impl RtsChannel {
    pub fn new(attenuation: f64, delay_s: f64) -> Self {
        RtsChannel {
            attenuation,
            delay_s,
            phase_offset_rad: 0.0,
        }
    }
}

/// RTS back-end settings shared by all four channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtsConfig {
    pub intermediate_frequency_hz: f64,
    pub channels: [RtsChannel; 4],
}

/// Angular position of one front end as seen from the radar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontEndPosition {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

/// The four RTS front ends in their square formation.
///
/// Index convention: q=0 bottom-left, q=1 bottom-right, q=2 top-left,
/// q=3 top-right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEndLayout {
    /// Distance between the radar and the front ends.
    pub range_m: f64,
    pub front_ends: [FrontEndPosition; 4],
}

impl FrontEndLayout {
    /// Perfectly symmetric square at +-5 deg azimuth, +-8 deg elevation.
    pub fn ideal_square(range_m: f64) -> Self {
        FrontEndLayout {
            range_m,
            front_ends: [
                FrontEndPosition {
                    azimuth_deg: -5.0,
                    elevation_deg: -8.0,
                },
                FrontEndPosition {
                    azimuth_deg: 5.0,
                    elevation_deg: -8.0,
                },
                FrontEndPosition {
                    azimuth_deg: -5.0,
                    elevation_deg: 8.0,
                },
                FrontEndPosition {
                    azimuth_deg: 5.0,
                    elevation_deg: 8.0,
                },
            ],
        }
    }

    /// The measured bench positions of the reference setup (imperfect square).
    pub fn measured_bench(range_m: f64) -> Self {
        FrontEndLayout {
            range_m,
            front_ends: [
                FrontEndPosition {
                    azimuth_deg: -5.4,
                    elevation_deg: -8.8,
                },
                FrontEndPosition {
                    azimuth_deg: 4.5,
                    elevation_deg: -7.7,
                },
                FrontEndPosition {
                    azimuth_deg: -3.4,
                    elevation_deg: 8.4,
                },
                FrontEndPosition {
                    azimuth_deg: 3.8,
                    elevation_deg: 9.9,
                },
            ],
        }
    }

    /// Mirror every front end about its pair mean, flipping the sign of the
    /// alignment residuals while keeping the reduced layout unchanged.
    pub fn negated_residuals(&self) -> Self {
        let f = &self.front_ends;
        let mirror = |a: f64, b: f64| (a + b) / 2.0 + ((a + b) / 2.0 - a);
        let mut out = self.clone();
        // azimuth pairs are (0,2) left and (1,3) right; elevation pairs are
        // (0,1) bottom and (2,3) top
        out.front_ends[0].azimuth_deg = mirror(f[0].azimuth_deg, f[2].azimuth_deg);
        out.front_ends[2].azimuth_deg = mirror(f[2].azimuth_deg, f[0].azimuth_deg);
        out.front_ends[1].azimuth_deg = mirror(f[1].azimuth_deg, f[3].azimuth_deg);
        out.front_ends[3].azimuth_deg = mirror(f[3].azimuth_deg, f[1].azimuth_deg);
        out.front_ends[0].elevation_deg = mirror(f[0].elevation_deg, f[1].elevation_deg);
        out.front_ends[1].elevation_deg = mirror(f[1].elevation_deg, f[0].elevation_deg);
        out.front_ends[2].elevation_deg = mirror(f[2].elevation_deg, f[3].elevation_deg);
        out.front_ends[3].elevation_deg = mirror(f[3].elevation_deg, f[2].elevation_deg);
        out
    }
}

/// Left/right/bottom/top reduction of an imperfect layout, with the pair
/// residuals surfaced as a misalignment diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedLayout {
    pub theta_left_deg: f64,
    pub theta_right_deg: f64,
    pub psi_bottom_deg: f64,
    pub psi_top_deg: f64,
    /// `[|az0 - az2|, |az1 - az3|, |el0 - el1|, |el2 - el3|]`
    pub residuals_deg: [f64; 4],
}

impl ReducedLayout {
    pub fn contains_deg(&self, azimuth_deg: f64, elevation_deg: f64) -> bool {
        azimuth_deg >= self.theta_left_deg
            && azimuth_deg <= self.theta_right_deg
            && elevation_deg >= self.psi_bottom_deg
            && elevation_deg <= self.psi_top_deg
    }

    pub fn center_deg(&self) -> (f64, f64) {
        (
            (self.theta_left_deg + self.theta_right_deg) / 2.0,
            (self.psi_bottom_deg + self.psi_top_deg) / 2.0,
        )
    }
}

/// Reduce the four front-end positions to left/right azimuth and bottom/top
/// elevation angles via pair means.
pub fn reduce_layout(layout: &FrontEndLayout) -> Result<ReducedLayout> {
    let f = &layout.front_ends;
    let theta_left_deg = (f[0].azimuth_deg + f[2].azimuth_deg) / 2.0;
    let theta_right_deg = (f[1].azimuth_deg + f[3].azimuth_deg) / 2.0;
    let psi_bottom_deg = (f[0].elevation_deg + f[1].elevation_deg) / 2.0;
    let psi_top_deg = (f[2].elevation_deg + f[3].elevation_deg) / 2.0;
    if theta_left_deg >= theta_right_deg {
        return Err(Error::DegenerateLayout(format!(
            "left azimuth {theta_left_deg} deg is not below right azimuth {theta_right_deg} deg"
        )));
    }
    if psi_bottom_deg >= psi_top_deg {
        return Err(Error::DegenerateLayout(format!(
            "bottom elevation {psi_bottom_deg} deg is not below top elevation {psi_top_deg} deg"
        )));
    }
    Ok(ReducedLayout {
        theta_left_deg,
        theta_right_deg,
        psi_bottom_deg,
        psi_top_deg,
        residuals_deg: [
            (f[0].azimuth_deg - f[2].azimuth_deg).abs(),
            (f[1].azimuth_deg - f[3].azimuth_deg).abs(),
            (f[0].elevation_deg - f[1].elevation_deg).abs(),
            (f[2].elevation_deg - f[3].elevation_deg).abs(),
        ],
    })
}

/// The single source of truth for a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub radar: RadarConfig,
    pub rts: RtsConfig,
    pub layout: FrontEndLayout,
}

impl ScenarioConfig {
    /// The reference bench scenario: 77 GHz / 1 GHz FMCW radar with 3 TX and
    /// 4 RX elements, 500 MHz RTS intermediate frequency, front ends at 1 m
    /// on the measured (imperfect) square.
    pub fn reference() -> Self {
        ScenarioConfig {
            radar: RadarConfig::reference(),
            rts: RtsConfig {
                intermediate_frequency_hz: 500e6,
                channels: [RtsChannel::new(1.0, 30e-9); 4],
            },
            layout: FrontEndLayout::measured_bench(1.0),
        }
    }

    /// Reference scenario on the perfectly symmetric square layout.
    pub fn ideal_square() -> Self {
        let mut s = Self::reference();
        s.layout = FrontEndLayout::ideal_square(1.0);
        s
    }

    pub fn wavelength_m(&self) -> f64 {
        self.radar.wavelength_m()
    }

    /// SHA-256 over the canonical JSON serialization, hex encoded.
    pub fn sha256(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario is always serializable");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| Error::ScenarioFormat(e.to_string()))?;
        raw.resolve()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario is always serializable")
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

// --- scenario file parsing -------------------------------------------------

#[derive(Deserialize)]
struct RawRadar {
    carrier_frequency_hz: f64,
    bandwidth_hz: f64,
    chirp_period_s: f64,
    num_samples: usize,
    num_tx: usize,
    num_rx: usize,
    sample_rate_hz: Option<f64>,
    tx_spacing_y_m: Option<f64>,
    rx_spacing_y_m: Option<f64>,
    tx_spacing_z_m: Option<f64>,
    rx_spacing_z_m: Option<f64>,
}

#[derive(Deserialize)]
struct RawScenario {
    radar: RawRadar,
    rts: RtsConfig,
    layout: FrontEndLayout,
}

impl RawScenario {
    fn resolve(self) -> Result<ScenarioConfig> {
        let r = self.radar;
        let lambda = wavelength(r.carrier_frequency_hz)?;
        if r.chirp_period_s <= 0.0 {
            return Err(Error::ScenarioFormat(format!(
                "chirp_period_s must be positive, got {}",
                r.chirp_period_s
            )));
        }
        let radar = RadarConfig {
            carrier_frequency_hz: r.carrier_frequency_hz,
            bandwidth_hz: r.bandwidth_hz,
            chirp_period_s: r.chirp_period_s,
            num_samples: r.num_samples,
            num_tx: r.num_tx,
            num_rx: r.num_rx,
            sample_rate_hz: r
                .sample_rate_hz
                .unwrap_or(r.num_samples as f64 / r.chirp_period_s),
            tx_spacing_y_m: r.tx_spacing_y_m.unwrap_or(0.0),
            rx_spacing_y_m: r.rx_spacing_y_m.unwrap_or(lambda / 4.0),
            tx_spacing_z_m: r.tx_spacing_z_m.unwrap_or(lambda / 4.0),
            rx_spacing_z_m: r.rx_spacing_z_m.unwrap_or(0.0),
        };
        Ok(ScenarioConfig {
            radar,
            rts: self.rts,
            layout: self.layout,
        })
    }
}

// --- validation --------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Warning,
    Error,
}

/// One validation finding; `field` names the offending configuration entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
    pub severity: Severity,
}

impl Diagnostic {
    fn error(field: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            field: field.to_string(),
            message: message.into(),
            severity: Severity::Error,
        }
    }

    fn warning(field: &str, message: impl Into<String>) -> Self {
        Diagnostic {
            field: field.to_string(),
            message: message.into(),
            severity: Severity::Warning,
        }
    }
}

/// Check every type invariant of a scenario; returns one diagnostic per
/// violation instead of failing on the first. `closed_form_requested` adds
/// the spacing constraints of the closed-form channel response as warnings.
pub fn validate_scenario(config: &ScenarioConfig, closed_form_requested: bool) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let r = &config.radar;
    if !(r.carrier_frequency_hz > 0.0) {
        out.push(Diagnostic::error(
            "radar.carrier_frequency_hz",
            "must be positive",
        ));
    }
    if !(r.bandwidth_hz > 0.0) {
        out.push(Diagnostic::error("radar.bandwidth_hz", "must be positive"));
    }
    if !(r.chirp_period_s > 0.0) {
        out.push(Diagnostic::error("radar.chirp_period_s", "must be positive"));
    }
    if r.num_samples < 2 {
        out.push(Diagnostic::error("radar.num_samples", "must be at least 2"));
    }
    if r.num_tx < 1 {
        out.push(Diagnostic::error("radar.num_tx", "must be at least 1"));
    }
    if r.num_rx < 1 {
        out.push(Diagnostic::error("radar.num_rx", "must be at least 1"));
    }
    if !(r.sample_rate_hz > 0.0) {
        out.push(Diagnostic::error("radar.sample_rate_hz", "must be positive"));
    } else if r.chirp_period_s > 0.0 && r.num_samples >= 2 {
        let capture = (r.num_samples - 1) as f64 / r.sample_rate_hz;
        if capture > r.chirp_period_s {
            out.push(Diagnostic::error(
                "radar.sample_rate_hz",
                format!(
                    "capture window {capture:.3e} s exceeds the chirp period {:.3e} s",
                    r.chirp_period_s
                ),
            ));
        }
    }
    for (name, v) in [
        ("radar.tx_spacing_y_m", r.tx_spacing_y_m),
        ("radar.rx_spacing_y_m", r.rx_spacing_y_m),
        ("radar.tx_spacing_z_m", r.tx_spacing_z_m),
        ("radar.rx_spacing_z_m", r.rx_spacing_z_m),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            out.push(Diagnostic::error(name, "must be finite and non-negative"));
        }
    }
    if closed_form_requested {
        if r.tx_spacing_y_m != 0.0 {
            out.push(Diagnostic::warning(
                "radar.tx_spacing_y_m",
                "closed-form channel response assumes zero horizontal TX spacing",
            ));
        }
        if r.rx_spacing_z_m != 0.0 {
            out.push(Diagnostic::warning(
                "radar.rx_spacing_z_m",
                "closed-form channel response assumes zero vertical RX spacing",
            ));
        }
    }
    if !(config.rts.intermediate_frequency_hz > 0.0) {
        out.push(Diagnostic::error(
            "rts.intermediate_frequency_hz",
            "must be positive",
        ));
    }
    for (q, ch) in config.rts.channels.iter().enumerate() {
        if !(ch.attenuation >= 0.0) {
            out.push(Diagnostic::error(
                &format!("rts.channels[{q}].attenuation"),
                "must be non-negative",
            ));
        }
        if !(ch.delay_s >= 0.0) {
            out.push(Diagnostic::error(
                &format!("rts.channels[{q}].delay_s"),
                "must be non-negative",
            ));
        }
    }
    if !(config.layout.range_m > 0.0) {
        out.push(Diagnostic::error("layout.range_m", "must be positive"));
    }
    for (q, fe) in config.layout.front_ends.iter().enumerate() {
        if fe.azimuth_deg <= -90.0 || fe.azimuth_deg >= 90.0 {
            out.push(Diagnostic::error(
                &format!("layout.front_ends[{q}].azimuth_deg"),
                "must lie strictly inside (-90, 90) deg",
            ));
        }
        if fe.elevation_deg <= -90.0 || fe.elevation_deg >= 90.0 {
            out.push(Diagnostic::error(
                &format!("layout.front_ends[{q}].elevation_deg"),
                "must lie strictly inside (-90, 90) deg",
            ));
        }
    }
    if let Err(e) = reduce_layout(&config.layout) {
        out.push(Diagnostic::error("layout.front_ends", e.to_string()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn wavelength_at_77ghz() {
        let lambda = wavelength(77e9).unwrap();
        assert_abs_diff_eq!(lambda, 3.8934e-3, epsilon = 5e-8);
    }

    #[test]
    fn wavelength_identity_case() {
        assert_eq!(wavelength(SPEED_OF_LIGHT).unwrap(), 1.0);
    }

    #[test]
    fn wavelength_inverse_proportionality() {
        let a = wavelength(38.5e9).unwrap();
        let b = wavelength(77e9).unwrap();
        assert_abs_diff_eq!(a, 2.0 * b, epsilon = 1e-18);
    }

    #[test]
    fn wavelength_rejects_nonpositive_frequency() {
        assert!(wavelength(0.0).is_err());
        assert!(wavelength(-1.0).is_err());
    }

    #[test]
    fn reduce_ideal_square_is_exact() {
        let red = reduce_layout(&FrontEndLayout::ideal_square(1.0)).unwrap();
        assert_eq!(red.theta_left_deg, -5.0);
        assert_eq!(red.theta_right_deg, 5.0);
        assert_eq!(red.psi_bottom_deg, -8.0);
        assert_eq!(red.psi_top_deg, 8.0);
        assert_eq!(red.residuals_deg, [0.0; 4]);
    }

    #[test]
    fn reduce_measured_bench_layout() {
        let red = reduce_layout(&FrontEndLayout::measured_bench(1.0)).unwrap();
        assert_abs_diff_eq!(red.theta_left_deg, -4.4, epsilon = 1e-12);
        assert_abs_diff_eq!(red.theta_right_deg, 4.15, epsilon = 1e-12);
        assert_abs_diff_eq!(red.psi_bottom_deg, -8.25, epsilon = 1e-12);
        assert_abs_diff_eq!(red.psi_top_deg, 9.15, epsilon = 1e-12);
        let expected = [2.0, 0.7, 1.1, 1.5];
        for (got, want) in red.residuals_deg.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn reduce_rejects_collapsed_square() {
        let mut layout = FrontEndLayout::ideal_square(1.0);
        // pull the right column onto the left one
        layout.front_ends[1].azimuth_deg = layout.front_ends[0].azimuth_deg;
        layout.front_ends[3].azimuth_deg = layout.front_ends[2].azimuth_deg;
        assert!(matches!(
            reduce_layout(&layout),
            Err(Error::DegenerateLayout(_))
        ));
    }

    #[test]
    fn negated_residuals_keeps_reduction_and_flips_offsets() {
        let layout = FrontEndLayout::measured_bench(1.0);
        let flipped = layout.negated_residuals();
        let a = reduce_layout(&layout).unwrap();
        let b = reduce_layout(&flipped).unwrap();
        assert_abs_diff_eq!(a.theta_left_deg, b.theta_left_deg, epsilon = 1e-12);
        assert_abs_diff_eq!(a.psi_top_deg, b.psi_top_deg, epsilon = 1e-12);
        // residual magnitudes preserved, offsets mirrored
        for (x, y) in a.residuals_deg.iter().zip(b.residuals_deg) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        let d0 = layout.front_ends[0].azimuth_deg - a.theta_left_deg;
        let d0f = flipped.front_ends[0].azimuth_deg - b.theta_left_deg;
        assert_abs_diff_eq!(d0, -d0f, epsilon = 1e-12);
    }

    #[test]
    fn validate_reference_scenario_is_clean() {
        let diags = validate_scenario(&ScenarioConfig::reference(), true);
        assert!(diags.is_empty(), "unexpected diagnostics: {diags:?}");
    }

    #[test]
    fn validate_flags_zero_rx_count() {
        let mut s = ScenarioConfig::reference();
        s.radar.num_rx = 0;
        let diags = validate_scenario(&s, false);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].field, "radar.num_rx");
        assert_eq!(diags[0].severity, Severity::Error);
    }

    #[test]
    fn validate_warns_on_closed_form_spacing_violation() {
        let mut s = ScenarioConfig::reference();
        s.radar.rx_spacing_z_m = 1e-3;
        assert!(validate_scenario(&s, false).is_empty());
        let diags = validate_scenario(&s, true);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
        assert_eq!(diags[0].field, "radar.rx_spacing_z_m");
    }

    #[test]
    fn validate_is_pure() {
        let mut s = ScenarioConfig::reference();
        s.radar.num_tx = 0;
        s.rts.channels[2].attenuation = -1.0;
        let a = validate_scenario(&s, true);
        let b = validate_scenario(&s, true);
        assert_eq!(a, b);
    }

    #[test]
    fn scenario_toml_roundtrip_with_defaults() {
        let text = r#"
            [radar]
            carrier_frequency_hz = 77e9
            bandwidth_hz = 1e9
            chirp_period_s = 50e-6
            num_samples = 1024
            num_tx = 3
            num_rx = 4

            [rts]
            intermediate_frequency_hz = 500e6
            channels = [
                { attenuation = 1.0, delay_s = 30e-9 },
                { attenuation = 1.0, delay_s = 30e-9 },
                { attenuation = 1.0, delay_s = 30e-9 },
                { attenuation = 1.0, delay_s = 30e-9 },
            ]

            [layout]
            range_m = 1.0
            front_ends = [
                { azimuth_deg = -5.4, elevation_deg = -8.8 },
                { azimuth_deg = 4.5, elevation_deg = -7.7 },
                { azimuth_deg = -3.4, elevation_deg = 8.4 },
                { azimuth_deg = 3.8, elevation_deg = 9.9 },
            ]
        "#;
        let parsed = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(parsed, ScenarioConfig::reference());
        // spacings resolved to the quarter-wavelength defaults
        assert_abs_diff_eq!(parsed.radar.rx_spacing_y_m, 3.8934e-3 / 4.0, epsilon = 1e-8);
        assert_eq!(parsed.radar.tx_spacing_y_m, 0.0);
    }

    #[test]
    fn scenario_hash_is_stable_and_sensitive() {
        let a = ScenarioConfig::reference();
        let mut b = a.clone();
        assert_eq!(a.sha256(), b.sha256());
        b.rts.channels[0].delay_s += 1e-12;
        assert_ne!(a.sha256(), b.sha256());
    }

    proptest! {
        #[test]
        fn wavelength_strictly_decreasing(f1 in 1e6f64..1e12, factor in 1.0001f64..10.0) {
            let w1 = wavelength(f1).unwrap();
            let w2 = wavelength(f1 * factor).unwrap();
            prop_assert!(w2 < w1);
        }

        #[test]
        fn symmetric_layouts_reduce_exactly(
            az in 0.5f64..20.0,
            el in 0.5f64..20.0,
            range in 0.1f64..10.0,
        ) {
            let mut layout = FrontEndLayout::ideal_square(range);
            for fe in &mut layout.front_ends {
                fe.azimuth_deg = fe.azimuth_deg.signum() * az;
                fe.elevation_deg = fe.elevation_deg.signum() * el;
            }
            let red = reduce_layout(&layout).unwrap();
            prop_assert_eq!(red.theta_left_deg, -az);
            prop_assert_eq!(red.theta_right_deg, az);
            prop_assert_eq!(red.psi_bottom_deg, -el);
            prop_assert_eq!(red.psi_top_deg, el);
            prop_assert_eq!(red.residuals_deg, [0.0; 4]);
        }
    }
}
