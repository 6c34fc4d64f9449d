//! Pairwise phase-coherency calibration.
//!
//! Two front ends are active at a time; an artificial delay offset on one of
//! them is swept while the angle error of the superimposed target against the
//! pair midpoint is monitored. The offset minimizing the error aligns the two
//! channels' post-processing phases; chaining pairs extends the alignment to
//! all four channels.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;

use crate::beam::{beamform_at, beamform_direct, estimate_angle, BeamGrid, GridSpec};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::signal::{extract_peak_bin, range_dft, synthesize_cube};
use crate::solver::coherency_check;

/// Which layout axis a calibration pair shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairAxis {
    /// Same row: the azimuth error is monitored.
    Horizontal,
    /// Same column: the elevation error is monitored.
    Vertical,
}

/// Axis shared by two front ends, per the fixed index convention
/// (0 bottom-left, 1 bottom-right, 2 top-left, 3 top-right).
pub fn pair_axis(a: usize, b: usize) -> Result<PairAxis> {
    let p = [a.min(b), a.max(b)];
    if p[0] == p[1] || p[1] > 3 {
        return Err(Error::DiagonalPair(a, b));
    }
    match (p[0], p[1]) {
        (0, 1) | (2, 3) => Ok(PairAxis::Horizontal),
        (0, 2) | (1, 3) => Ok(PairAxis::Vertical),
        _ => Err(Error::DiagonalPair(a, b)),
    }
}

/// One wrap period of the delay-to-phase mapping: offsetting the RTS delay by
/// `1 / (f_rts + B/2)` rotates the detected phase by a full turn.
pub fn phase_wrap_period(scenario: &ScenarioConfig) -> f64 {
    1.0 / (scenario.rts.intermediate_frequency_hz + scenario.radar.bandwidth_hz / 2.0)
}

/// Delay-offset sweep settings. The default covers one full wrap period in
/// both directions with 201 points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub half_span_s: f64,
    pub steps: usize,
}

impl SweepConfig {
    pub fn default_for(scenario: &ScenarioConfig) -> Self {
        SweepConfig {
            half_span_s: phase_wrap_period(scenario),
            steps: 201,
        }
    }
}

/// Result of one pairwise sweep.
#[derive(Debug, Clone)]
pub struct CalibrationSweep {
    /// `(reference, swept)` channel indices.
    pub pair: (usize, usize),
    pub axis: PairAxis,
    pub offsets_s: Vec<f64>,
    /// Signed angle error of the superimposed peak against the pair midpoint
    /// at each offset.
    pub angle_errors_deg: Vec<f64>,
    pub peak_magnitudes: Vec<f64>,
    pub chosen_offset_s: f64,
    /// The sweep walked the swept channel's beat tone across a range bin.
    pub bin_migration: bool,
}

/// Per-channel delay offsets that align the channel phases; channel 0 is the
/// reference. All offsets are non-negative after a global shift.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub offsets_s: [f64; 4],
    /// Largest wrapped pairwise deviation of the probed channel phases after
    /// applying the table.
    pub residual_rad: f64,
}

/// Scenario copy with the calibration offsets added onto the channel delays.
pub fn apply_calibration(scenario: &ScenarioConfig, table: &CalibrationTable) -> ScenarioConfig {
    let mut out = scenario.clone();
    for (ch, off) in out.rts.channels.iter_mut().zip(table.offsets_s) {
        ch.delay_s += off;
    }
    out
}

/// Reference probe direction: the center of the front-end rectangle.
pub fn probe_direction(scenario: &ScenarioConfig) -> (f64, f64) {
    match crate::config::reduce_layout(&scenario.layout) {
        Ok(red) => red.center_deg(),
        Err(_) => (0.0, 0.0),
    }
}

/// Phase of one channel at the probe direction, measured through the full
/// chain (synthesis, range DFT, peak extraction, beamforming) with only that
/// channel active. A zero-attenuation channel is probed at unit amplitude.
pub fn measure_channel_phase(
    scenario: &ScenarioConfig,
    q: usize,
    azimuth_deg: f64,
    elevation_deg: f64,
) -> Result<f64> {
    if q > 3 {
        return Err(Error::IndexOutOfRange(format!("channel {q}")));
    }
    let mut probe = scenario.clone();
    for (i, ch) in probe.rts.channels.iter_mut().enumerate() {
        if i == q {
            if ch.attenuation == 0.0 {
                ch.attenuation = 1.0;
            }
        } else {
            ch.attenuation = 0.0;
        }
    }
    let cube = synthesize_cube(&probe)?;
    let snap = extract_peak_bin(&range_dft(&cube))?;
    Ok(beamform_at(&snap.values, &probe.radar, azimuth_deg, elevation_deg)?.arg())
}

/// All four channel phases at the probe direction.
pub fn measure_channel_phases(
    scenario: &ScenarioConfig,
    azimuth_deg: f64,
    elevation_deg: f64,
) -> Result<[f64; 4]> {
    let mut phases = [0.0f64; 4];
    for (q, p) in phases.iter_mut().enumerate() {
        *p = measure_channel_phase(scenario, q, azimuth_deg, elevation_deg)?;
    }
    Ok(phases)
}

/// Measured channel phases relative to channel 0 with the hardware phase
/// offsets zeroed out: the deterministic (geometry and delay induced) part of
/// the inter-channel incoherence.
pub fn baseline_phase_deltas(scenario: &ScenarioConfig) -> Result<[f64; 4]> {
    let mut clean = scenario.clone();
    for ch in &mut clean.rts.channels {
        ch.phase_offset_rad = 0.0;
    }
    let (az, el) = probe_direction(&clean);
    let phases = measure_channel_phases(&clean, az, el)?;
    Ok([
        0.0,
        phases[1] - phases[0],
        phases[2] - phases[0],
        phases[3] - phases[0],
    ])
}

/// Scenario copy whose deterministic inter-channel phase differences are
/// compensated through the channel phase offsets (delays untouched, so range
/// bins stay aligned). Hidden hardware offsets present in the scenario are
/// left in place.
pub fn compensate_baseline_phases(scenario: &ScenarioConfig) -> Result<ScenarioConfig> {
    let deltas = baseline_phase_deltas(scenario)?;
    let mut out = scenario.clone();
    for (ch, d) in out.rts.channels.iter_mut().zip(deltas) {
        ch.phase_offset_rad -= d;
    }
    Ok(out)
}

fn nominal_bin(scenario: &ScenarioConfig, delay_s: f64) -> i64 {
    let r = &scenario.radar;
    let tau = 2.0 * scenario.layout.range_m / crate::config::SPEED_OF_LIGHT + delay_s;
    let beat = r.bandwidth_hz * tau / r.chirp_period_s;
    (beat / (r.sample_rate_hz / r.num_samples as f64)).round() as i64
}

/// Sweep the delay of channel `pair.1` against fixed `pair.0` and record the
/// angle error of the superimposed peak versus the pair midpoint.
///
/// The chosen offset is the error-magnitude argmin; ties within 1e-4 deg are
/// broken by the larger peak magnitude, then by the smaller absolute offset.
pub fn run_sweep(
    scenario: &ScenarioConfig,
    pair: (usize, usize),
    sweep: &SweepConfig,
) -> Result<CalibrationSweep> {
    let (q_ref, q_swept) = pair;
    let axis = pair_axis(q_ref, q_swept)?;
    if sweep.steps < 2 {
        return Err(Error::InvalidConfig("sweep needs at least 2 steps".into()));
    }
    let base_delay = scenario.rts.channels[q_swept].delay_s;
    if base_delay - sweep.half_span_s < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sweep span {:.3e} s would drive channel {q_swept}'s delay negative",
            sweep.half_span_s
        )));
    }

    let mut pair_scenario = scenario.clone();
    for (i, ch) in pair_scenario.rts.channels.iter_mut().enumerate() {
        if i != q_ref && i != q_swept {
            ch.attenuation = 0.0;
        }
    }

    let fe_a = scenario.layout.front_ends[q_ref];
    let fe_b = scenario.layout.front_ends[q_swept];
    let midpoint = match axis {
        PairAxis::Horizontal => (fe_a.azimuth_deg + fe_b.azimuth_deg) / 2.0,
        PairAxis::Vertical => (fe_a.elevation_deg + fe_b.elevation_deg) / 2.0,
    };
    let az_lo = fe_a.azimuth_deg.min(fe_b.azimuth_deg) - 3.0;
    let az_hi = fe_a.azimuth_deg.max(fe_b.azimuth_deg) + 3.0;
    let el_lo = fe_a.elevation_deg.min(fe_b.elevation_deg) - 3.0;
    let el_hi = fe_a.elevation_deg.max(fe_b.elevation_deg) + 3.0;
    let grid = BeamGrid::angle_uniform(
        GridSpec::new(az_lo, az_hi, 0.05),
        GridSpec::new(el_lo, el_hi, 0.05),
    )?;

    let n = sweep.steps;
    let mut offsets_s = Vec::with_capacity(n);
    let mut angle_errors_deg = Vec::with_capacity(n);
    let mut peak_magnitudes = Vec::with_capacity(n);
    for i in 0..n {
        let offset = -sweep.half_span_s
            + 2.0 * sweep.half_span_s * i as f64 / (n - 1) as f64;
        let mut step_scenario = pair_scenario.clone();
        step_scenario.rts.channels[q_swept].delay_s = base_delay + offset;
        let cube = synthesize_cube(&step_scenario)?;
        let snap = extract_peak_bin(&range_dft(&cube))?;
        let spectrum = beamform_direct(&snap.values, &step_scenario.radar, &grid)?;
        let est = estimate_angle(&spectrum)?;
        let monitored = match axis {
            PairAxis::Horizontal => est.azimuth_deg,
            PairAxis::Vertical => est.elevation_deg,
        };
        offsets_s.push(offset);
        angle_errors_deg.push(monitored - midpoint);
        peak_magnitudes.push(est.peak_magnitude);
    }

    let mut best = 0usize;
    for i in 1..n {
        let (e_i, e_b) = (angle_errors_deg[i].abs(), angle_errors_deg[best].abs());
        if e_i < e_b - 1e-4 {
            best = i;
        } else if (e_i - e_b).abs() <= 1e-4 {
            let better_magnitude = peak_magnitudes[i] > peak_magnitudes[best];
            let same_magnitude = peak_magnitudes[i] == peak_magnitudes[best];
            if better_magnitude
                || (same_magnitude && offsets_s[i].abs() < offsets_s[best].abs())
            {
                best = i;
            }
        }
    }

    let bin0 = nominal_bin(scenario, base_delay);
    let bin_migration = nominal_bin(scenario, base_delay - sweep.half_span_s) != bin0
        || nominal_bin(scenario, base_delay + sweep.half_span_s) != bin0;

    let chosen_offset_s = offsets_s[best];
    Ok(CalibrationSweep {
        pair,
        axis,
        offsets_s,
        angle_errors_deg,
        peak_magnitudes,
        chosen_offset_s,
        bin_migration,
    })
}

/// Chain the pairwise sweep results into per-channel delay offsets relative
/// to channel 0, wrap them into one phase period and shift them non-negative.
/// The residual coherency after applying the table is measured through the
/// probe chain and reported.
pub fn build_calibration(
    scenario: &ScenarioConfig,
    sweeps: &[CalibrationSweep],
) -> Result<CalibrationTable> {
    let period = phase_wrap_period(scenario);
    let mut offsets = [f64::NAN; 4];
    offsets[0] = 0.0;
    // breadth-first composition over the signed pair edges
    let mut frontier = vec![0usize];
    while let Some(q) = frontier.pop() {
        for sweep in sweeps {
            let (a, b) = sweep.pair;
            if a == q && offsets[b].is_nan() {
                offsets[b] = offsets[a] + sweep.chosen_offset_s;
                frontier.push(b);
            } else if b == q && offsets[a].is_nan() {
                offsets[a] = offsets[b] - sweep.chosen_offset_s;
                frontier.push(a);
            }
        }
    }
    let missing: Vec<usize> = (0..4).filter(|q| offsets[*q].is_nan()).collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteCalibration(missing));
    }
    // wrap to the nearest equivalent offset, then shift non-negative
    for o in &mut offsets {
        *o = (*o + period / 2.0).rem_euclid(period) - period / 2.0;
    }
    let min = offsets.iter().cloned().fold(f64::INFINITY, f64::min);
    for o in &mut offsets {
        *o -= min;
    }
    let mut table = CalibrationTable {
        offsets_s: offsets,
        residual_rad: f64::NAN,
    };
    let calibrated = apply_calibration(scenario, &table);
    let (az, el) = probe_direction(&calibrated);
    table.residual_rad = coherency_check(&measure_channel_phases(&calibrated, az, el)?);
    Ok(table)
}

/// CSV export of a sweep curve: `offset_s,angle_error_deg` rows.
pub fn write_sweep_csv(sweep: &CalibrationSweep, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "offset_s,angle_error_deg")?;
    for (o, e) in sweep.offsets_s.iter().zip(&sweep.angle_errors_deg) {
        writeln!(w, "{o},{e}")?;
    }
    Ok(())
}

/// Analytic compensating offset for a phase difference `delta_phi` on the
/// swept channel: the delay that rotates the channel phase by `-delta_phi`,
/// wrapped into `(-period/2, period/2]`. Test and planning helper; the sweep
/// itself measures this empirically.
pub fn compensating_offset(scenario: &ScenarioConfig, delta_phi_rad: f64) -> f64 {
    let f_eff = scenario.rts.intermediate_frequency_hz + scenario.radar.bandwidth_hz / 2.0;
    let period = phase_wrap_period(scenario);
    let raw = -delta_phi_rad / (TAU * f_eff);
    (raw + period / 2.0).rem_euclid(period) - period / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{RtsChannel, ScenarioConfig, SPEED_OF_LIGHT};

    /// Narrowband calibration scenario: one wrap period is a small fraction
    /// of a range bin, so delay sweeps move phase without walking the beat
    /// across bins. Base delays land the tone exactly on a bin.
    pub(crate) fn narrowband_scenario() -> ScenarioConfig {
        let mut s = ScenarioConfig::reference();
        s.radar.bandwidth_hz = 20e6;
        let tau_c = 2.0 * s.layout.range_m / SPEED_OF_LIGHT;
        let delay = 8.0 / s.radar.bandwidth_hz - tau_c;
        s.rts.channels = [RtsChannel::new(1.0, delay); 4];
        // mild amplitude asymmetry keeps the pair error metric sharp
        for (q, ch) in s.rts.channels.iter_mut().enumerate() {
            ch.attenuation = [1.0, 0.93, 0.88, 0.96][q];
        }
        s
    }

    fn wrapped_distance(a: f64, b: f64, period: f64) -> f64 {
        let d = (a - b).rem_euclid(period);
        d.min(period - d)
    }

    #[test]
    fn pair_axis_follows_the_square_convention() {
        assert_eq!(pair_axis(0, 1).unwrap(), PairAxis::Horizontal);
        assert_eq!(pair_axis(3, 2).unwrap(), PairAxis::Horizontal);
        assert_eq!(pair_axis(0, 2).unwrap(), PairAxis::Vertical);
        assert_eq!(pair_axis(1, 3).unwrap(), PairAxis::Vertical);
        assert!(matches!(pair_axis(0, 3), Err(Error::DiagonalPair(0, 3))));
        assert!(matches!(pair_axis(1, 2), Err(Error::DiagonalPair(1, 2))));
        assert!(pair_axis(1, 1).is_err());
        assert!(pair_axis(0, 4).is_err());
    }

    #[test]
    fn wrap_period_matches_the_if_plus_half_bandwidth() {
        let s = ScenarioConfig::reference();
        let expected = 1.0 / (500e6 + 0.5e9);
        assert!((phase_wrap_period(&s) - expected).abs() < 1e-18);
    }

    #[test]
    fn coherent_pair_chooses_a_near_zero_offset() {
        // pre-align the deterministic phase differences through delay
        // trims, then sweep: the error minimum must sit at zero offset
        // (modulo the wrap period) within one step
        let base = narrowband_scenario();
        let deltas = baseline_phase_deltas(&base).unwrap();
        let mut coherent = base.clone();
        for (q, ch) in coherent.rts.channels.iter_mut().enumerate() {
            ch.delay_s += compensating_offset(&base, deltas[q]);
        }
        let period = phase_wrap_period(&coherent);
        let sweep_cfg = SweepConfig {
            half_span_s: period / 2.0,
            steps: 101,
        };
        let sweep = run_sweep(&coherent, (0, 1), &sweep_cfg).unwrap();
        let step = period / (sweep_cfg.steps - 1) as f64;
        assert!(!sweep.bin_migration);
        assert!(
            wrapped_distance(sweep.chosen_offset_s, 0.0, period) <= 1.5 * step,
            "chosen offset {:.4e} s is not near zero (step {:.4e} s)",
            sweep.chosen_offset_s,
            step
        );
    }

    #[test]
    fn hidden_phase_offset_is_recovered_by_the_sweep() {
        let base = narrowband_scenario();
        let deltas = baseline_phase_deltas(&base).unwrap();
        let mut coherent = base.clone();
        for (q, ch) in coherent.rts.channels.iter_mut().enumerate() {
            ch.delay_s += compensating_offset(&base, deltas[q]);
        }
        let hidden = 2.3f64;
        let mut defect = coherent.clone();
        defect.rts.channels[1].phase_offset_rad += hidden;
        let period = phase_wrap_period(&defect);
        let sweep_cfg = SweepConfig {
            half_span_s: period / 2.0,
            steps: 201,
        };
        let sweep = run_sweep(&defect, (0, 1), &sweep_cfg).unwrap();
        let expected = compensating_offset(&defect, hidden);
        let step = period / (sweep_cfg.steps - 1) as f64;
        assert!(
            wrapped_distance(sweep.chosen_offset_s, expected, period) <= 2.0 * step,
            "chosen {:.4e} s vs analytic {:.4e} s",
            sweep.chosen_offset_s,
            expected
        );
    }

    #[test]
    fn two_period_sweep_shows_minima_one_period_apart() {
        let base = narrowband_scenario();
        let period = phase_wrap_period(&base);
        let sweep_cfg = SweepConfig {
            half_span_s: period,
            steps: 201,
        };
        let sweep = run_sweep(&base, (0, 1), &sweep_cfg).unwrap();
        assert!(!sweep.bin_migration);
        let step = 2.0 * period / (sweep_cfg.steps - 1) as f64;
        // global minimum, then the best point at least half a period away
        let abs_err: Vec<f64> = sweep.angle_errors_deg.iter().map(|e| e.abs()).collect();
        let first = (0..abs_err.len())
            .min_by(|a, b| abs_err[*a].total_cmp(&abs_err[*b]))
            .unwrap();
        let second = (0..abs_err.len())
            .filter(|i| (sweep.offsets_s[*i] - sweep.offsets_s[first]).abs() > period / 2.0)
            .min_by(|a, b| abs_err[*a].total_cmp(&abs_err[*b]))
            .unwrap();
        let spacing = (sweep.offsets_s[first] - sweep.offsets_s[second]).abs();
        assert!(
            (spacing - period).abs() <= 2.0 * step,
            "minima spacing {spacing:.4e} s vs period {period:.4e} s"
        );
    }

    #[test]
    fn wideband_default_sweep_flags_bin_migration() {
        let s = ScenarioConfig::reference();
        let sweep_cfg = SweepConfig {
            half_span_s: phase_wrap_period(&s),
            steps: 5,
        };
        let sweep = run_sweep(&s, (0, 1), &sweep_cfg).unwrap();
        assert!(sweep.bin_migration);
    }

    #[test]
    fn calibration_requires_a_connected_pair_graph() {
        let base = narrowband_scenario();
        let sweep_cfg = SweepConfig {
            half_span_s: phase_wrap_period(&base) / 2.0,
            steps: 21,
        };
        let only = run_sweep(&base, (0, 1), &sweep_cfg).unwrap();
        match build_calibration(&base, &[only]) {
            Err(Error::IncompleteCalibration(missing)) => assert_eq!(missing, vec![2, 3]),
            other => panic!("expected incomplete calibration, got {other:?}"),
        }
    }

    #[test]
    fn pre_aligned_channels_build_a_near_identity_table() {
        let base = narrowband_scenario();
        let deltas = baseline_phase_deltas(&base).unwrap();
        let mut coherent = base.clone();
        for (q, ch) in coherent.rts.channels.iter_mut().enumerate() {
            ch.delay_s += compensating_offset(&base, deltas[q]);
        }
        let period = phase_wrap_period(&coherent);
        let sweep_cfg = SweepConfig {
            half_span_s: period / 2.0,
            steps: 101,
        };
        let sweeps = [
            run_sweep(&coherent, (0, 1), &sweep_cfg).unwrap(),
            run_sweep(&coherent, (0, 2), &sweep_cfg).unwrap(),
            run_sweep(&coherent, (2, 3), &sweep_cfg).unwrap(),
        ];
        let table = build_calibration(&coherent, &sweeps).unwrap();
        let quantum = period / (sweep_cfg.steps - 1) as f64;
        for off in table.offsets_s {
            assert!(off >= 0.0);
            assert!(
                off <= 4.0 * quantum || (period - off) <= 4.0 * quantum,
                "offset {off:.4e} s is not near identity (quantum {quantum:.4e} s)"
            );
        }
        // residual coherency stays within a few sweep quanta of RF phase
        let f_eff = 1.0 / period;
        assert!(table.residual_rad <= 4.0 * TAU * f_eff * quantum);
    }

    #[test]
    fn sweep_rejects_offsets_that_reach_negative_delay() {
        let mut s = narrowband_scenario();
        s.rts.channels[1].delay_s = 0.1e-9;
        let sweep_cfg = SweepConfig {
            half_span_s: 1e-9,
            steps: 11,
        };
        assert!(matches!(
            run_sweep(&s, (0, 1), &sweep_cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn sweep_csv_round_trips_the_curve_shape() {
        let base = narrowband_scenario();
        let sweep_cfg = SweepConfig {
            half_span_s: phase_wrap_period(&base) / 2.0,
            steps: 11,
        };
        let sweep = run_sweep(&base, (0, 1), &sweep_cfg).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&sweep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "offset_s,angle_error_deg");
        assert_eq!(lines.len(), 12);
    }
}
