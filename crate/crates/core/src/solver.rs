//! Channel attenuation solver for superimposed targets.
//!
//! The superimposed response of the four front ends factors into an azimuth
//! and an elevation term, so steering the combined peak reduces to two
//! independent one-dimensional problems: choose the left/right (bottom/top)
//! weights so the derivative of the weighted pattern sum vanishes at the
//! requested angle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::beam::{g_az, g_el};
use crate::config::{RadarConfig, ReducedLayout};
use crate::error::{Error, Result};

/// Requested angle of arrival of the superimposed target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetAngle {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl TargetAngle {
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Self {
        TargetAngle {
            azimuth_deg,
            elevation_deg,
        }
    }
}

/// Solved channel weights: separable left/right and bottom/top factors,
/// normalized so each axis has a unit maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuationSet {
    pub a_left: f64,
    pub a_right: f64,
    pub a_bottom: f64,
    pub a_top: f64,
    /// Target was outside the front-end rectangle; the returned weights can
    /// be negative, which is a phase inversion rather than a pure
    /// attenuation and is not realizable on amplitude-only hardware.
    pub extrapolated: bool,
}

impl AttenuationSet {
    /// Per-channel amplitudes in layout order (bottom-left, bottom-right,
    /// top-left, top-right): the products of the axis factors.
    pub fn per_channel(&self) -> [f64; 4] {
        [
            self.a_bottom * self.a_left,
            self.a_bottom * self.a_right,
            self.a_top * self.a_left,
            self.a_top * self.a_right,
        ]
    }

    pub fn is_zero(&self) -> bool {
        self.per_channel().iter().all(|a| *a == 0.0)
    }
}

/// Derivative of the azimuth pattern factor with respect to the azimuth
/// angle (radians), evaluated at `alpha` for a front end at `theta`.
///
/// The closed form has a removable singularity where `sin(theta) =
/// sin(alpha)`; a series expansion takes over near it and returns the exact
/// limit 0 at the peak.
pub fn dg_az(alpha_deg: f64, theta_deg: f64, radar: &RadarConfig) -> f64 {
    let c = radar.num_rx as f64 * radar.rx_spacing_y_m / radar.angle_wavelength_m();
    pattern_derivative(alpha_deg, theta_deg, c)
}

/// Elevation counterpart of [`dg_az`].
pub fn dg_el(beta_deg: f64, psi_deg: f64, radar: &RadarConfig) -> f64 {
    let c = radar.num_tx as f64 * radar.tx_spacing_z_m / radar.angle_wavelength_m();
    pattern_derivative(beta_deg, psi_deg, c)
}

fn pattern_derivative(angle_deg: f64, center_deg: f64, aperture_wavelengths: f64) -> f64 {
    let alpha = angle_deg.to_radians();
    let s = center_deg.to_radians().sin() - alpha.sin();
    let k = PI * aperture_wavelengths;
    // below this the direct expression loses precision to cancellation; the
    // two-term series is exact to ~1e-9 relative there
    if s.abs() < 1e-4 {
        let ks = k * s;
        alpha.cos() * (k * k * s / 3.0 - ks * ks * ks * k / 30.0)
    } else {
        alpha.cos() * ((k * s).sin() / (k * s * s) - (k * s).cos() / s)
    }
}

/// Solve one separable axis: weights `(w_lo, w_hi)` with
/// `w_lo dg(target, lo) + w_hi dg(target, hi) = 0`, normalized to a unit
/// maximum with the dominant weight positive.
fn solve_axis(
    target_deg: f64,
    lo_deg: f64,
    hi_deg: f64,
    dg: impl Fn(f64, f64) -> f64,
    axis: &'static str,
) -> Result<(f64, f64)> {
    let d_lo = dg(target_deg, lo_deg);
    let d_hi = dg(target_deg, hi_deg);
    let same_sin = |a: f64, b: f64| (a.to_radians().sin() - b.to_radians().sin()).abs() < 1e-9;
    const TINY: f64 = 1e-12;
    if d_lo.abs() < TINY && d_hi.abs() < TINY {
        // both derivatives vanish: only meaningful when the target sits on a
        // front end, where the answer is the one-hot set
        if same_sin(target_deg, lo_deg) {
            return Ok((1.0, 0.0));
        }
        if same_sin(target_deg, hi_deg) {
            return Ok((0.0, 1.0));
        }
        return Err(Error::UnsolvableAngle {
            axis,
            angle_deg: target_deg,
            reason: "both pattern derivatives vanish away from the front ends",
        });
    }
    // a vanishing derivative away from its own front end is a sidelobe
    // extremum; the resulting one-hot set would not peak at the target
    if d_lo.abs() < TINY && !same_sin(target_deg, lo_deg) {
        return Err(Error::UnsolvableAngle {
            axis,
            angle_deg: target_deg,
            reason: "pattern derivative of the lower front end vanishes off-peak",
        });
    }
    if d_hi.abs() < TINY && !same_sin(target_deg, hi_deg) {
        return Err(Error::UnsolvableAngle {
            axis,
            angle_deg: target_deg,
            reason: "pattern derivative of the upper front end vanishes off-peak",
        });
    }
    let (mut w_lo, mut w_hi) = (d_hi, -d_lo);
    // divide by the (signed) dominant weight: unit maximum, dominant positive
    let scale = if w_lo.abs() >= w_hi.abs() { w_lo } else { w_hi };
    w_lo /= scale;
    w_hi /= scale;
    // normalize -0.0 so exact one-hot results compare cleanly
    Ok((w_lo + 0.0, w_hi + 0.0))
}

/// Compute the four channel attenuations that place the superimposed peak at
/// `target`. Targets outside the front-end rectangle are solved anyway and
/// flagged as extrapolated.
pub fn solve_attenuations(
    target: &TargetAngle,
    layout: &ReducedLayout,
    radar: &RadarConfig,
) -> Result<AttenuationSet> {
    let (a_left, a_right) = solve_axis(
        target.azimuth_deg,
        layout.theta_left_deg,
        layout.theta_right_deg,
        |a, t| dg_az(a, t, radar),
        "azimuth",
    )?;
    let (a_bottom, a_top) = solve_axis(
        target.elevation_deg,
        layout.psi_bottom_deg,
        layout.psi_top_deg,
        |b, p| dg_el(b, p, radar),
        "elevation",
    )?;
    Ok(AttenuationSet {
        a_left,
        a_right,
        a_bottom,
        a_top,
        extrapolated: !layout.contains_deg(target.azimuth_deg, target.elevation_deg),
    })
}

/// Superimposed response of all four channels at `(alpha, beta)` under the
/// phase-coherency assumption (common phase set to zero): the separable
/// product of the weighted azimuth and elevation pattern sums, scaled by
/// `N_s N_tx N_rx`.
pub fn superimposed_value(
    alpha_deg: f64,
    beta_deg: f64,
    attens: &AttenuationSet,
    layout: &ReducedLayout,
    radar: &RadarConfig,
) -> Complex64 {
    let az = attens.a_left * g_az(alpha_deg, layout.theta_left_deg, radar)
        + attens.a_right * g_az(alpha_deg, layout.theta_right_deg, radar);
    let el = attens.a_bottom * g_el(beta_deg, layout.psi_bottom_deg, radar)
        + attens.a_top * g_el(beta_deg, layout.psi_top_deg, radar);
    let scale = (radar.num_samples * radar.num_tx * radar.num_rx) as f64;
    Complex64::new(scale * az * el, 0.0)
}

/// Numerically locate the peak of the superimposed response: per axis, a
/// coarse 0.1 deg scan followed by golden-section refinement to 1e-4 deg.
/// Serves as the independent check of [`solve_attenuations`].
pub fn predict_peak(
    attens: &AttenuationSet,
    layout: &ReducedLayout,
    radar: &RadarConfig,
) -> Result<TargetAngle> {
    if attens.is_zero() {
        return Err(Error::FlatSpectrum);
    }
    let az_profile = |a: f64| {
        (attens.a_left * g_az(a, layout.theta_left_deg, radar)
            + attens.a_right * g_az(a, layout.theta_right_deg, radar))
        .abs()
    };
    let el_profile = |b: f64| {
        (attens.a_bottom * g_el(b, layout.psi_bottom_deg, radar)
            + attens.a_top * g_el(b, layout.psi_top_deg, radar))
        .abs()
    };
    let azimuth_deg = maximize(
        &az_profile,
        (layout.theta_left_deg - 25.0).max(-89.0),
        (layout.theta_right_deg + 25.0).min(89.0),
    );
    let elevation_deg = maximize(
        &el_profile,
        (layout.psi_bottom_deg - 25.0).max(-89.0),
        (layout.psi_top_deg + 25.0).min(89.0),
    );
    Ok(TargetAngle {
        azimuth_deg,
        elevation_deg,
    })
}

/// Coarse grid scan at 0.1 deg plus golden-section refinement to 1e-4 deg.
fn maximize(f: &impl Fn(f64) -> f64, lo_deg: f64, hi_deg: f64) -> f64 {
    const COARSE_STEP: f64 = 0.1;
    const TOL: f64 = 1e-4;
    let n = ((hi_deg - lo_deg) / COARSE_STEP).ceil() as usize + 1;
    let mut best_x = lo_deg;
    let mut best_v = f(lo_deg);
    for i in 1..n {
        let x = (lo_deg + i as f64 * COARSE_STEP).min(hi_deg);
        let v = f(x);
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    let mut a = (best_x - COARSE_STEP).max(lo_deg);
    let mut b = (best_x + COARSE_STEP).min(hi_deg);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > TOL {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    (a + b) / 2.0
}

/// Largest wrapped pairwise difference among the four channel phases; zero
/// means the channels are coherent.
pub fn coherency_check(channel_phases_rad: &[f64; 4]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = channel_phases_rad[i] - channel_phases_rad[j];
            worst = worst.max(d.sin().atan2(d.cos()).abs());
        }
    }
    worst
}
