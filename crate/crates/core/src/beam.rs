//! Direct MIMO beamforming over an angle grid, the closed-form single-channel
//! response, and peak-based angle estimation.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io::Write;

use crate::config::{RadarConfig, ScenarioConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::solver::TargetAngle;

/// Normalized sinc, `sin(pi x) / (pi x)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Uniform one-dimensional grid description, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl GridSpec {
    pub fn new(start_deg: f64, stop_deg: f64, step_deg: f64) -> Self {
        GridSpec {
            start_deg,
            stop_deg,
            step_deg,
        }
    }

    fn values(&self) -> Result<Vec<f64>> {
        if !(self.step_deg > 0.0) || self.stop_deg <= self.start_deg {
            return Err(Error::InvalidConfig(format!(
                "grid [{}, {}] deg with step {} deg is not strictly increasing",
                self.start_deg, self.stop_deg, self.step_deg
            )));
        }
        let n = ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize + 1;
        Ok((0..n)
            .map(|i| self.start_deg + i as f64 * self.step_deg)
            .collect())
    }
}

/// Whether grid points are spaced uniformly in angle or in its sine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridSpacing {
    AngleUniform,
    SinUniform,
}

/// Evaluation grid of a [`BeamSpectrum`]; both axes strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGrid {
    pub azimuths_deg: Vec<f64>,
    pub elevations_deg: Vec<f64>,
    pub spacing: GridSpacing,
}

impl BeamGrid {
    pub fn angle_uniform(az: GridSpec, el: GridSpec) -> Result<Self> {
        Ok(BeamGrid {
            azimuths_deg: az.values()?,
            elevations_deg: el.values()?,
            spacing: GridSpacing::AngleUniform,
        })
    }

    /// Grid bounds in degrees, points uniform in the sine of the angle.
    pub fn sin_uniform(az: GridSpec, el: GridSpec) -> Result<Self> {
        let to_sin = |spec: GridSpec| -> Result<Vec<f64>> {
            let n = GridSpec::values(&spec)?.len();
            let s0 = spec.start_deg.to_radians().sin();
            let s1 = spec.stop_deg.to_radians().sin();
            Ok((0..n)
                .map(|i| {
                    let s = s0 + (s1 - s0) * i as f64 / (n - 1) as f64;
                    s.asin().to_degrees()
                })
                .collect())
        };
        Ok(BeamGrid {
            azimuths_deg: to_sin(az)?,
            elevations_deg: to_sin(el)?,
            spacing: GridSpacing::SinUniform,
        })
    }

    /// The default evaluation region: 0.05 deg spacing over [-15, 15] deg in
    /// both axes, uniform in angle.
    pub fn default_region() -> Self {
        Self::angle_uniform(
            GridSpec::new(-15.0, 15.0, 0.05),
            GridSpec::new(-15.0, 15.0, 0.05),
        )
        .expect("static grid is valid")
    }
}

/// Complex beamforming output over an azimuth x elevation grid.
#[derive(Debug, Clone)]
pub struct BeamSpectrum {
    /// Indexed `[azimuth][elevation]`.
    pub values: Array2<Complex64>,
    pub grid: BeamGrid,
}

/// Detected angle of arrival with the peak magnitude; optionally annotated
/// with the set point it was steered to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleEstimate {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub peak_magnitude: f64,
    /// Peak sat on the grid boundary; no interpolation was applied there.
    pub on_boundary: bool,
    pub set_point: Option<TargetAngle>,
    pub azimuth_error_deg: Option<f64>,
    pub elevation_error_deg: Option<f64>,
}

impl AngleEstimate {
    /// Annotate the estimate with its set point; errors are estimate minus
    /// set point.
    pub fn versus(mut self, set_point: TargetAngle) -> Self {
        self.azimuth_error_deg = Some(self.azimuth_deg - set_point.azimuth_deg);
        self.elevation_error_deg = Some(self.elevation_deg - set_point.elevation_deg);
        self.set_point = Some(set_point);
        self
    }
}

/// Steering phase for a virtual element at `(y, z)` toward `(azimuth,
/// elevation)`: the beamforming kernel is `exp(-j 2 pi (y sin(az) cos(el)
/// + z sin(el)) / lambda)`.
#[inline]
fn steering_exponent(y: f64, z: f64, sin_az_cos_el: f64, sin_el: f64, lambda: f64) -> f64 {
    -TAU * (y * sin_az_cos_el + z * sin_el) / lambda
}

fn check_dims(x_r: &Array2<Complex64>, radar: &RadarConfig) -> Result<()> {
    if x_r.dim() != (radar.num_tx, radar.num_rx) {
        return Err(Error::DimensionMismatch(format!(
            "channel matrix is {:?}, radar expects ({}, {})",
            x_r.dim(),
            radar.num_tx,
            radar.num_rx
        )));
    }
    Ok(())
}

/// Beamformed value at a single direction.
pub fn beamform_at(
    x_r: &Array2<Complex64>,
    radar: &RadarConfig,
    azimuth_deg: f64,
    elevation_deg: f64,
) -> Result<Complex64> {
    check_dims(x_r, radar)?;
    let lambda = radar.angle_wavelength_m();
    let el = elevation_deg.to_radians();
    let u = azimuth_deg.to_radians().sin() * el.cos();
    let v = el.sin();
    let mut acc = Complex64::new(0.0, 0.0);
    for n_tx in 0..radar.num_tx {
        let yt = radar.tx_spacing_y_m * n_tx as f64;
        let zt = radar.tx_spacing_z_m * n_tx as f64;
        for n_rx in 0..radar.num_rx {
            let y = yt + radar.rx_spacing_y_m * n_rx as f64;
            let z = zt + radar.rx_spacing_z_m * n_rx as f64;
            acc += x_r[[n_tx, n_rx]]
                * Complex64::from_polar(1.0, steering_exponent(y, z, u, v, lambda));
        }
    }
    Ok(acc)
}

/// Direct beamforming sum of the per-channel range-bin values over a grid.
pub fn beamform_direct(
    x_r: &Array2<Complex64>,
    radar: &RadarConfig,
    grid: &BeamGrid,
) -> Result<BeamSpectrum> {
    check_dims(x_r, radar)?;
    let lambda = radar.angle_wavelength_m();
    let n_az = grid.azimuths_deg.len();
    let n_el = grid.elevations_deg.len();
    let sin_az: Vec<f64> = grid
        .azimuths_deg
        .iter()
        .map(|a| a.to_radians().sin())
        .collect();
    let sincos_el: Vec<(f64, f64)> = grid
        .elevations_deg
        .iter()
        .map(|e| {
            let r = e.to_radians();
            (r.sin(), r.cos())
        })
        .collect();

    // the TX/RX factorization of the element position turns the 12-element
    // sum into two short phasor products per grid point
    let mut values = Array2::<Complex64>::zeros((n_az, n_el));
    let mut tx_ph = vec![Complex64::new(0.0, 0.0); radar.num_tx];
    let mut rx_ph = vec![Complex64::new(0.0, 0.0); radar.num_rx];
    for (ia, sa) in sin_az.iter().enumerate() {
        for (ie, (se, ce)) in sincos_el.iter().enumerate() {
            let u = sa * ce;
            for (n, ph) in tx_ph.iter_mut().enumerate() {
                let y = radar.tx_spacing_y_m * n as f64;
                let z = radar.tx_spacing_z_m * n as f64;
                *ph = Complex64::from_polar(1.0, steering_exponent(y, z, u, *se, lambda));
            }
            for (n, ph) in rx_ph.iter_mut().enumerate() {
                let y = radar.rx_spacing_y_m * n as f64;
                let z = radar.rx_spacing_z_m * n as f64;
                *ph = Complex64::from_polar(1.0, steering_exponent(y, z, u, *se, lambda));
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (n_tx, tp) in tx_ph.iter().enumerate() {
                let mut row = Complex64::new(0.0, 0.0);
                for (n_rx, rp) in rx_ph.iter().enumerate() {
                    row += x_r[[n_tx, n_rx]] * rp;
                }
                acc += row * tp;
            }
            values[[ia, ie]] = acc;
        }
    }
    Ok(BeamSpectrum {
        values,
        grid: grid.clone(),
    })
}

/// Azimuth pattern factor of a front end at `theta`, evaluated at `alpha`.
pub fn g_az(alpha_deg: f64, theta_deg: f64, radar: &RadarConfig) -> f64 {
    let lambda = radar.angle_wavelength_m();
    sinc(
        radar.num_rx as f64 * radar.rx_spacing_y_m / lambda
            * (theta_deg.to_radians().sin() - alpha_deg.to_radians().sin()),
    )
}

/// Elevation pattern factor of a front end at `psi`, evaluated at `beta`.
pub fn g_el(beta_deg: f64, psi_deg: f64, radar: &RadarConfig) -> f64 {
    let lambda = radar.angle_wavelength_m();
    sinc(
        radar.num_tx as f64 * radar.tx_spacing_z_m / lambda
            * (psi_deg.to_radians().sin() - beta_deg.to_radians().sin()),
    )
}

/// The common (angle-independent) phase of channel `q` after range processing
/// and beamforming, in the small-angle model: carrier and sweep phase over the
/// round trip, IF and sweep phase over the RTS delay, the array mid-phase
/// terms, plus the channel's hardware phase offset.
pub fn channel_common_phase(q: usize, scenario: &ScenarioConfig) -> Result<f64> {
    let ch = scenario
        .rts
        .channels
        .get(q)
        .ok_or_else(|| Error::IndexOutOfRange(format!("channel {q}")))?;
    let fe = scenario.layout.front_ends[q];
    let r = &scenario.radar;
    let lambda = r.angle_wavelength_m();
    let round_trip = 2.0 * scenario.layout.range_m / SPEED_OF_LIGHT;
    Ok(TAU
        * ((r.carrier_frequency_hz + r.bandwidth_hz / 2.0) * round_trip
            + (scenario.rts.intermediate_frequency_hz + r.bandwidth_hz / 2.0) * ch.delay_s
            + fe.azimuth_deg.to_radians().sin() * r.rx_spacing_y_m / (2.0 * lambda)
                * (r.num_rx as f64 - 1.0)
            + fe.elevation_deg.to_radians().sin() * r.tx_spacing_z_m / (2.0 * lambda)
                * (r.num_tx as f64 - 1.0))
        + ch.phase_offset_rad)
}

/// Closed-form beamformed response of a single channel: amplitude
/// `a_q N_s N_tx N_rx` scaled by the two sinc pattern factors, with the
/// common channel phase. Only valid for one-dimensional TX/RX distributions.
pub fn channel_response_closed_form(
    azimuth_deg: f64,
    elevation_deg: f64,
    q: usize,
    a_q: f64,
    scenario: &ScenarioConfig,
) -> Result<Complex64> {
    let r = &scenario.radar;
    if !r.closed_form_compatible() {
        return Err(Error::ClosedFormConstraint);
    }
    let fe = scenario
        .layout
        .front_ends
        .get(q)
        .ok_or_else(|| Error::IndexOutOfRange(format!("front end {q}")))?;
    let gain = a_q
        * r.num_samples as f64
        * r.num_tx as f64
        * r.num_rx as f64
        * g_el(elevation_deg, fe.elevation_deg, r)
        * g_az(azimuth_deg, fe.azimuth_deg, r);
    let phase = channel_common_phase(q, scenario)?;
    Ok(Complex64::from_polar(1.0, phase) * gain)
}

/// Locate the spectrum peak: grid argmax of the magnitude refined by a
/// separable three-point quadratic fit on the log magnitude per axis. A peak
/// on the grid boundary is returned unrefined with `on_boundary` set.
pub fn estimate_angle(spectrum: &BeamSpectrum) -> Result<AngleEstimate> {
    let mags = spectrum.values.map(|v| v.norm());
    let (n_az, n_el) = mags.dim();
    let mut best = (0usize, 0usize);
    let mut best_mag = 0.0f64;
    for ia in 0..n_az {
        for ie in 0..n_el {
            if mags[[ia, ie]] > best_mag {
                best_mag = mags[[ia, ie]];
                best = (ia, ie);
            }
        }
    }
    if best_mag == 0.0 {
        return Err(Error::NoDetection);
    }
    let (ia, ie) = best;
    let on_boundary = ia == 0 || ia == n_az - 1 || ie == 0 || ie == n_el - 1;
    let mut azimuth_deg = spectrum.grid.azimuths_deg[ia];
    let mut elevation_deg = spectrum.grid.elevations_deg[ie];
    if !on_boundary {
        azimuth_deg += quadratic_offset(
            mags[[ia - 1, ie]],
            mags[[ia, ie]],
            mags[[ia + 1, ie]],
        ) * (spectrum.grid.azimuths_deg[ia + 1] - spectrum.grid.azimuths_deg[ia]);
        elevation_deg += quadratic_offset(
            mags[[ia, ie - 1]],
            mags[[ia, ie]],
            mags[[ia, ie + 1]],
        ) * (spectrum.grid.elevations_deg[ie + 1] - spectrum.grid.elevations_deg[ie]);
    }
    Ok(AngleEstimate {
        azimuth_deg,
        elevation_deg,
        peak_magnitude: best_mag,
        on_boundary,
        set_point: None,
        azimuth_error_deg: None,
        elevation_error_deg: None,
    })
}

/// Sub-cell offset in `[-0.5, 0.5]` from a three-point log-magnitude parabola.
fn quadratic_offset(left: f64, center: f64, right: f64) -> f64 {
    if left <= 0.0 || right <= 0.0 || center <= 0.0 {
        return 0.0;
    }
    let (l, c, r) = (left.ln(), center.ln(), right.ln());
    let denom = l - 2.0 * c + r;
    if denom.abs() < 1e-300 || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
}

/// Export a spectrum as `az,el,re,im,mag_db` rows (azimuth-major order).
pub fn write_spectrum_csv(spectrum: &BeamSpectrum, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "az,el,re,im,mag_db")?;
    for (ia, az) in spectrum.grid.azimuths_deg.iter().enumerate() {
        for (ie, el) in spectrum.grid.elevations_deg.iter().enumerate() {
            let v = spectrum.values[[ia, ie]];
            let mag_db = if v.norm() > 0.0 {
                20.0 * v.norm().log10()
            } else {
                -300.0
            };
            writeln!(w, "{az},{el},{},{},{mag_db}", v.re, v.im)?;
        }
    }
    Ok(())
}
