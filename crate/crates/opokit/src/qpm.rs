//! Quasi-phase-matched second-harmonic tuning curves for single-pass and
//! retro-reflected (double-pass) pumping.
//!
//! With the pump reflected back through the crystal, the forward and
//! backward second-harmonic fields add with an extra phase `theta`, and
//! the total intensity as a function of the normalized phase mismatch
//! `u = dk L` is
//!
//! ```text
//! I(u, theta) = (2 A L)^2 sinc^2(u/2) cos^2(u/2 + theta)
//! ```
//!
//! At `theta = 0` this collapses to `(2AL)^2 sinc^2(u)` (the two passes
//! act like a crystal of twice the length); at `theta = 90 deg` it is
//! `(2AL)^2 ((1 - cos u)/u)^2`, whose best peak is about 0.525 of the
//! in-phase one. The shape of the curve — specifically the ratio of the
//! two largest peaks — encodes `theta`, which is how the phase is
//! estimated from a temperature scan.

use crate::error::{Error, Result};
use crate::numeric::{bisect_root, scan_local_maxima, Peak};

/// Scan window for peak searches, in units of `dk L`.
const SCAN_HALF_WIDTH: f64 = 4.0 * std::f64::consts::PI;
/// Grid resolution of the peak search (refined by golden section).
const SCAN_POINTS: usize = 20_001;

/// Crystal and beam parameters for quasi-phase-matched SHG.
#[derive(Debug, Clone, PartialEq)]
pub struct QpmConfig {
    /// Crystal length (m).
    pub crystal_length: f64,
    /// Poling period (m).
    pub poling_period: f64,
    /// Fundamental wavelength (m).
    pub fundamental_wavelength: f64,
    /// Second-harmonic wavelength (m); must equal half the fundamental.
    pub second_harmonic_wavelength: f64,
    /// Refractive index at the fundamental.
    pub refractive_index_fundamental: f64,
    /// Refractive index at the second harmonic.
    pub refractive_index_second_harmonic: f64,
    /// Phase between forward and backward second-harmonic fields (rad),
    /// normalized to [0, pi).
    pub double_pass_phase: f64,
    /// Field amplitude per unit length (arbitrary units); observable
    /// ratios do not depend on it.
    pub amplitude_constant: f64,
}

impl QpmConfig {
    /// 5 mm crystal driven at 1550 nm with a 75 deg double-pass phase.
    /// Poling period and indices are placeholders for `delta_kq` users;
    /// every tuning-curve observable is a function of `dk L` alone.
    pub fn reference_design() -> Self {
        QpmConfig {
            crystal_length: 5.0e-3,
            poling_period: 24.7e-6,
            fundamental_wavelength: 1550e-9,
            second_harmonic_wavelength: 775e-9,
            refractive_index_fundamental: 1.816,
            refractive_index_second_harmonic: 1.816,
            double_pass_phase: 75.0_f64.to_radians(),
            amplitude_constant: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("crystal_length", self.crystal_length),
            ("poling_period", self.poling_period),
            ("fundamental_wavelength", self.fundamental_wavelength),
            ("second_harmonic_wavelength", self.second_harmonic_wavelength),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("qpm {name} must be > 0 (got {v})")));
            }
        }
        let lf = self.fundamental_wavelength;
        let l2 = self.second_harmonic_wavelength;
        if ((l2 - lf / 2.0) / lf).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "second_harmonic_wavelength {l2} is not half the fundamental {lf}"
            )));
        }
        let th = self.double_pass_phase;
        if !(0.0..std::f64::consts::PI).contains(&th) {
            return Err(Error::validation(format!(
                "double_pass_phase must lie in [0, pi) — use normalize_phase (got {th})"
            )));
        }
        Ok(())
    }
}

/// Fold a phase into `[0, pi)`; the tuning curve is pi-periodic in theta.
pub fn normalize_phase(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut t = theta % pi;
    if t < 0.0 {
        t += pi;
    }
    t
}

/// A cavity-enhanced SHG conversion measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShgMeasurement {
    /// Measured conversion efficiency (1/W).
    pub conversion_efficiency: f64,
    /// Output coupler power transmittance.
    pub output_coupler_transmittance: f64,
    /// Output coupler power reflectance; must equal `1 - T`.
    pub output_coupler_reflectance: f64,
}

impl ShgMeasurement {
    pub fn new(conversion_efficiency: f64, transmittance: f64, reflectance: f64) -> Result<Self> {
        if !(conversion_efficiency > 0.0) {
            return Err(Error::validation(format!(
                "conversion_efficiency must be > 0 (got {conversion_efficiency})"
            )));
        }
        if (reflectance - (1.0 - transmittance)).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "reflectance {reflectance} and transmittance {transmittance} do not sum to 1"
            )));
        }
        Ok(ShgMeasurement {
            conversion_efficiency,
            output_coupler_transmittance: transmittance,
            output_coupler_reflectance: reflectance,
        })
    }
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Quasi-phase mismatch `2 pi (n_2f/lambda_2f - 2 n_f/lambda_f - 1/Lambda)`
/// in 1/m; zero at perfect quasi-phase matching.
pub fn delta_kq(config: &QpmConfig) -> Result<f64> {
    config.validate()?;
    Ok(2.0 * std::f64::consts::PI
        * (config.refractive_index_second_harmonic / config.second_harmonic_wavelength
            - 2.0 * config.refractive_index_fundamental / config.fundamental_wavelength
            - 1.0 / config.poling_period))
}

/// Single-pass second-harmonic field `A L sinc(dkL/2)` (arbitrary units).
pub fn shg_single_pass_field(config: &QpmConfig, dkl: f64) -> f64 {
    config.amplitude_constant * config.crystal_length * sinc(dkl / 2.0)
}

/// Double-pass second-harmonic intensity
/// `(2 A L)^2 sinc^2(dkL/2) cos^2(dkL/2 + theta)` (arbitrary units).
pub fn shg_double_pass_intensity(config: &QpmConfig, dkl: f64) -> f64 {
    let amp = 2.0 * config.amplitude_constant * config.crystal_length;
    amp * amp * double_pass_tuning_curve(dkl, config.double_pass_phase)
}

/// Normalized double-pass tuning curve `sinc^2(u/2) cos^2(u/2 + theta)`,
/// i.e. the intensity in units of its `theta = 0`, `u = 0` peak.
pub fn double_pass_tuning_curve(u: f64, theta: f64) -> f64 {
    let s = sinc(u / 2.0);
    let c = (u / 2.0 + theta).cos();
    s * s * c * c
}

/// Global maximum of the normalized tuning curve over the scan window.
pub fn double_pass_peak(theta: f64) -> Peak {
    let peaks = scan_local_maxima(
        |u| double_pass_tuning_curve(u, theta),
        -SCAN_HALF_WIDTH,
        SCAN_HALF_WIDTH,
        SCAN_POINTS,
    );
    peaks[0]
}

/// Best achievable double-pass peak at phase `theta` relative to the
/// in-phase (`theta = 0`) peak.
pub fn double_pass_penalty(theta: f64) -> f64 {
    double_pass_peak(theta).value / double_pass_peak(0.0).value
}

/// Penalty of the worst-case double-pass phase (90 deg): the quadrature
/// curve's best peak relative to the in-phase one, about 0.525.
pub fn worst_case_penalty() -> f64 {
    double_pass_penalty(std::f64::consts::FRAC_PI_2)
}

/// Ratio of the second-largest to the largest peak of the double-pass
/// tuning curve, the observable from which `theta` is estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakRatio {
    pub ratio: f64,
    /// Set when the two peaks are equal (theta = 90 deg), where the
    /// ratio saturates at 1 and no longer determines theta uniquely.
    pub degenerate: bool,
}

/// Scan the tuning curve at phase `theta` (rad, in `[0, pi)`) and return
/// the second-largest/largest peak ratio.
pub fn peak_ratio(theta: f64) -> Result<PeakRatio> {
    if !(0.0..std::f64::consts::PI).contains(&theta) {
        return Err(Error::validation(format!(
            "theta must lie in [0, pi) (got {theta})"
        )));
    }
    let peaks = scan_local_maxima(
        |u| double_pass_tuning_curve(u, theta),
        -SCAN_HALF_WIDTH,
        SCAN_HALF_WIDTH,
        SCAN_POINTS,
    );
    if peaks.len() < 2 {
        return Err(Error::numerical(
            "tuning-curve scan found fewer than two peaks".to_string(),
        ));
    }
    let ratio = peaks[1].value / peaks[0].value;
    let degenerate = 1.0 - ratio < 1e-9;
    Ok(PeakRatio {
        ratio: if degenerate { 1.0 } else { ratio },
        degenerate,
    })
}

/// Invert `peak_ratio`: find `theta` in `(0, 90 deg]` whose peak ratio
/// equals the measured one. The observable cannot distinguish `theta`
/// from `180 deg - theta`, so the lower branch is reported.
pub fn estimate_theta(measured_ratio: f64) -> Result<f64> {
    let floor = peak_ratio(0.0)?.ratio;
    if !measured_ratio.is_finite() || measured_ratio <= floor || measured_ratio > 1.0 {
        return Err(Error::validation(format!(
            "peak ratio {measured_ratio} outside the achievable range ({floor:.6}, 1]"
        )));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    if measured_ratio == 1.0 {
        return Ok(half_pi);
    }
    // peak_ratio is continuous and increasing on [0, pi/2]
    let theta = bisect_root(
        |t| peak_ratio(t).expect("theta within range").ratio - measured_ratio,
        0.0,
        half_pi,
        1e-6,
    );
    Ok(theta)
}

/// Resonant build-up factor `T^2 / (1 - sqrt(R))^4` relating the
/// cavity-enhanced conversion efficiency to its single-shot value.
pub fn cavity_enhancement_factor(transmittance: f64, reflectance: f64) -> Result<f64> {
    if !(transmittance > 0.0 && transmittance <= 1.0) {
        return Err(Error::validation(format!(
            "transmittance must lie in (0, 1] (got {transmittance})"
        )));
    }
    if !(0.0..1.0).contains(&reflectance) {
        return Err(Error::validation(format!(
            "reflectance must lie in [0, 1) (got {reflectance})"
        )));
    }
    let denom = (1.0 - reflectance.sqrt()).powi(4);
    Ok(transmittance * transmittance / denom)
}

/// Nonlinear conversion coefficient of the bare double pass, obtained by
/// dividing the cavity-enhanced conversion efficiency by the resonant
/// build-up factor (1/W).
pub fn extract_enl(meas: &ShgMeasurement) -> Result<f64> {
    let enh = cavity_enhancement_factor(
        meas.output_coupler_transmittance,
        meas.output_coupler_reflectance,
    )?;
    Ok(meas.conversion_efficiency / enh)
}
