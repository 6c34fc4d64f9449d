//! Beat-signal synthesis and range processing.
//!
//! The synthesis models one FMCW chirp per run: every active RTS channel
//! receives the radar transmit signal, delays it at the RTS intermediate
//! frequency and re-transmits it, and the radar mixes the superposition of
//! all returns with its own transmit chirp. The resulting beat samples are
//! collected per virtual channel into a [`SampleCube`] and processed with a
//! DFT over the sample axis.

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use crate::config::{FrontEndLayout, RadarConfig, ScenarioConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Complex beat samples indexed `[n_tx][n_rx][sample]`.
#[derive(Debug, Clone)]
pub struct SampleCube {
    pub data: Array3<Complex64>,
    pub sample_rate_hz: f64,
    pub scenario: ScenarioConfig,
}

impl SampleCube {
    /// Wrap raw data, enforcing the dimension and finiteness invariants.
    pub fn new(data: Array3<Complex64>, sample_rate_hz: f64, scenario: ScenarioConfig) -> Result<Self> {
        let want = (
            scenario.radar.num_tx,
            scenario.radar.num_rx,
            scenario.radar.num_samples,
        );
        if data.dim() != want {
            return Err(Error::DimensionMismatch(format!(
                "cube is {:?}, scenario expects {:?}",
                data.dim(),
                want
            )));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::DimensionMismatch(
                "cube contains non-finite samples".into(),
            ));
        }
        Ok(SampleCube {
            data,
            sample_rate_hz,
            scenario,
        })
    }
}

/// Range-DFT output, same channel indexing as the cube, DFT bins on the last
/// axis (length `num_samples`, no zero padding).
#[derive(Debug, Clone)]
pub struct RangeSpectrum {
    pub bins: Array3<Complex64>,
    pub bin_resolution_hz: f64,
}

/// The detected range bin and the complex value of every virtual channel
/// at that bin.
#[derive(Debug, Clone)]
pub struct ChannelSnapshot {
    pub bin: usize,
    pub values: Array2<Complex64>,
}

/// Window applied along the sample axis before the DFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// The default; keeps the `N_s` peak factor of an on-bin tone.
    Rectangular,
    Hann,
    Hamming,
}

/// Instantaneous transmit phase of the chirp at time `t` within one period.
pub fn chirp_phase(t_s: f64, radar: &RadarConfig) -> Result<f64> {
    if !(0.0..=radar.chirp_period_s).contains(&t_s) {
        return Err(Error::OutsideChirp {
            t_s,
            period_s: radar.chirp_period_s,
        });
    }
    Ok(chirp_phase_quadratic(t_s, radar))
}

/// The chirp phase quadratic without the domain check. The beat model applies
/// it for `t - tau < 0` as well, which is the steady-state single-tone
/// convention (delays are guarded to a small fraction of the chirp).
#[inline]
fn chirp_phase_quadratic(t_s: f64, radar: &RadarConfig) -> f64 {
    TAU * (radar.carrier_frequency_hz * t_s
        + radar.bandwidth_hz / (2.0 * radar.chirp_period_s) * t_s * t_s)
}

/// Horizontal/vertical offset of the virtual element formed by TX element
/// `n_tx` and RX element `n_rx`.
pub fn element_position(n_tx: usize, n_rx: usize, radar: &RadarConfig) -> Result<(f64, f64)> {
    if n_tx >= radar.num_tx {
        return Err(Error::IndexOutOfRange(format!(
            "n_tx = {n_tx}, radar has {} TX elements",
            radar.num_tx
        )));
    }
    if n_rx >= radar.num_rx {
        return Err(Error::IndexOutOfRange(format!(
            "n_rx = {n_rx}, radar has {} RX elements",
            radar.num_rx
        )));
    }
    let y = radar.tx_spacing_y_m * n_tx as f64 + radar.rx_spacing_y_m * n_rx as f64;
    let z = radar.tx_spacing_z_m * n_tx as f64 + radar.rx_spacing_z_m * n_rx as f64;
    Ok((y, z))
}

/// Return-path delay from front end `q` to the virtual element at `(y, z)`,
/// under the planar-wavefront model.
pub fn return_delay(q: usize, y_m: f64, z_m: f64, layout: &FrontEndLayout) -> Result<f64> {
    let fe = layout
        .front_ends
        .get(q)
        .ok_or_else(|| Error::IndexOutOfRange(format!("front end {q}, layout has 4")))?;
    let theta = fe.azimuth_deg.to_radians();
    let psi = fe.elevation_deg.to_radians();
    Ok((layout.range_m + y_m * theta.sin() * psi.cos() + z_m * psi.sin()) / SPEED_OF_LIGHT)
}

/// Per-channel guard: total delay must keep the beat tone inside half the
/// sample rate and well inside the chirp.
fn check_delay(tau_s: f64, radar: &RadarConfig) -> Result<()> {
    let half_period = radar.chirp_period_s / 2.0;
    if tau_s > half_period {
        return Err(Error::UnsupportedRange {
            delay_s: tau_s,
            limit_s: half_period,
            reason: "delay exceeds half the chirp period",
        });
    }
    let beat_hz = radar.bandwidth_hz * tau_s / radar.chirp_period_s;
    let nyquist = radar.sample_rate_hz / 2.0;
    if beat_hz > nyquist {
        return Err(Error::UnsupportedRange {
            delay_s: tau_s,
            limit_s: nyquist * radar.chirp_period_s / radar.bandwidth_hz,
            reason: "beat frequency would alias",
        });
    }
    Ok(())
}

/// Synthesize the beat-signal cube for every active channel of a scenario.
///
/// Per channel the mixed beat phase is the exact chirp phase difference over
/// the total delay `tau = tau_tx + tau_rx + tau_rts`, minus the carrier phase
/// the RTS local oscillator removes while the signal is delayed at the
/// intermediate frequency. The transmit leg is taken from the array phase
/// center.
pub fn synthesize_cube(scenario: &ScenarioConfig) -> Result<SampleCube> {
    let radar = &scenario.radar;
    let layout = &scenario.layout;
    let f_rts = scenario.rts.intermediate_frequency_hz;
    let n_s = radar.num_samples;
    let ts = 1.0 / radar.sample_rate_hz;
    let tau_tx = layout.range_m / SPEED_OF_LIGHT;

    let mut data = Array3::<Complex64>::zeros((radar.num_tx, radar.num_rx, n_s));
    for (q, ch) in scenario.rts.channels.iter().enumerate() {
        if ch.attenuation == 0.0 {
            continue;
        }
        // phase advance the IF delay line contributes instead of the carrier
        let if_term = -TAU * (radar.carrier_frequency_hz - f_rts) * ch.delay_s;
        for n_tx in 0..radar.num_tx {
            for n_rx in 0..radar.num_rx {
                let (y, z) = element_position(n_tx, n_rx, radar)?;
                let tau = tau_tx + return_delay(q, y, z, layout)? + ch.delay_s;
                check_delay(tau, radar)?;
                // chirp_phase(t) - chirp_phase(t - tau), expanded exactly
                let base = TAU
                    * (radar.carrier_frequency_hz * tau
                        - radar.bandwidth_hz * tau * tau / (2.0 * radar.chirp_period_s))
                    + if_term
                    + ch.phase_offset_rad;
                let slope = TAU * radar.bandwidth_hz * tau / radar.chirp_period_s;
                let mut lane = data.slice_mut(ndarray::s![n_tx, n_rx, ..]);
                for (k, v) in lane.iter_mut().enumerate() {
                    let phase = base + slope * (k as f64 * ts);
                    *v += Complex64::from_polar(ch.attenuation, phase);
                }
            }
        }
    }
    SampleCube::new(data, radar.sample_rate_hz, scenario.clone())
}

/// [`synthesize_cube`] plus complex white Gaussian noise at the given SNR
/// (relative to the mean signal power of the noise-free cube). Simulation
/// plumbing for robustness experiments, not part of the signal model.
pub fn synthesize_cube_with_noise(
    scenario: &ScenarioConfig,
    snr_db: f64,
    seed: u64,
) -> Result<SampleCube> {
    let mut cube = synthesize_cube(scenario)?;
    let mean_power =
        cube.data.iter().map(|v| v.norm_sqr()).sum::<f64>() / cube.data.len() as f64;
    if mean_power == 0.0 {
        return Ok(cube);
    }
    let sigma = (mean_power * 10f64.powf(-snr_db / 10.0) / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in cube.data.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *v += Complex64::new(re * sigma, im * sigma);
    }
    Ok(cube)
}

/// Unwindowed DFT over the sample axis of every virtual channel.
pub fn range_dft(cube: &SampleCube) -> RangeSpectrum {
    range_dft_windowed(cube, Window::Rectangular)
}

pub fn range_dft_windowed(cube: &SampleCube, window: Window) -> RangeSpectrum {
    let n_s = cube.data.dim().2;
    let mut bins = cube.data.clone();
    match window {
        Window::Rectangular => {}
        Window::Hann | Window::Hamming => {
            let (a, b) = match window {
                Window::Hann => (0.5, 0.5),
                _ => (0.54, 0.46),
            };
            let w: Vec<f64> = (0..n_s)
                .map(|k| a - b * (TAU * k as f64 / (n_s as f64 - 1.0)).cos())
                .collect();
            for mut lane in bins.rows_mut() {
                for (v, wk) in lane.iter_mut().zip(&w) {
                    *v *= *wk;
                }
            }
        }
    }
    let fft = FftPlanner::new().plan_fft_forward(n_s);
    for mut lane in bins.lanes_mut(Axis(2)) {
        fft.process(lane.as_slice_mut().expect("sample axis is contiguous"));
    }
    RangeSpectrum {
        bins,
        bin_resolution_hz: cube.sample_rate_hz / n_s as f64,
    }
}

/// Pick the range bin with the largest non-coherent power sum over all
/// virtual channels and return every channel's complex value there.
pub fn extract_peak_bin(spectrum: &RangeSpectrum) -> Result<ChannelSnapshot> {
    let (n_tx, n_rx, n_s) = spectrum.bins.dim();
    let mut best_bin = 0usize;
    let mut best_power = 0.0f64;
    for bin in 0..n_s {
        let p: f64 = spectrum
            .bins
            .slice(ndarray::s![.., .., bin])
            .iter()
            .map(|v| v.norm_sqr())
            .sum();
        if p > best_power {
            best_power = p;
            best_bin = bin;
        }
    }
    if best_power == 0.0 {
        return Err(Error::NoDetection);
    }
    let mut values = Array2::<Complex64>::zeros((n_tx, n_rx));
    for n_tx_i in 0..n_tx {
        for n_rx_i in 0..n_rx {
            values[[n_tx_i, n_rx_i]] = spectrum.bins[[n_tx_i, n_rx_i, best_bin]];
        }
    }
    Ok(ChannelSnapshot {
        bin: best_bin,
        values,
    })
}
