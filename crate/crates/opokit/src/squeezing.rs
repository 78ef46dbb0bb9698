//! Below-threshold squeezed/anti-squeezed noise spectra of an optical
//! parametric oscillator, with the associated threshold, escape
//! efficiency, and loss-budget arithmetic.
//!
//! The variance of the two quadratures relative to shot noise (= 1) is
//!
//! ```text
//! V±(f) = 1 ± (1 - eta) (T / (T + L)) 4 sqrt(xi)
//!             / ((1 ∓ sqrt(xi))^2 + (f / f_HWHM)^2)
//! ```
//!
//! with `xi = pump_power / P_th` the normalized pump, `T` the output
//! coupler transmittance, `L` the intra-cavity loss, `eta` the total
//! detection loss and `f_HWHM` the cavity half width. Without detection
//! loss and intra-cavity loss the product `V+ V-` is exactly 1 at every
//! frequency; any loss pulls both variances toward shot noise, so the
//! product can only grow.

use crate::error::{Error, Result};
use crate::trace::{NoiseTrace, PowerReference, TraceMetadata};

/// Which quadrature of the squeezed vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Squeezed,
    Anti,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Squeezed => "squeezed",
            Branch::Anti => "anti",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squeezed" => Ok(Branch::Squeezed),
            "anti" => Ok(Branch::Anti),
            other => Err(Error::validation(format!(
                "unknown branch '{other}' (expected 'squeezed' or 'anti')"
            ))),
        }
    }
}

/// Everything the variance model needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezerParams {
    /// Output coupler power transmittance T.
    pub output_coupler_transmittance: f64,
    /// Intra-cavity power loss L per round trip.
    pub intra_cavity_loss: f64,
    /// Total detection loss eta (propagation, mode mismatch, photodiode,
    /// circuit noise), as a fraction.
    pub total_detection_loss: f64,
    /// Pump power before the cavity (W).
    pub pump_power: f64,
    /// Oscillation threshold power (W).
    pub threshold_power: f64,
    /// Cavity half width at half maximum (Hz).
    pub cavity_half_width: f64,
}

impl SqueezerParams {
    /// Reference operating point: T = 10%, L = 0.38%, eta = 7%,
    /// 360 mW pump, 1.7 W threshold, 92 MHz half width.
    pub fn reference_design() -> Self {
        SqueezerParams {
            output_coupler_transmittance: 0.10,
            intra_cavity_loss: 0.0038,
            total_detection_loss: 0.07,
            pump_power: 0.36,
            threshold_power: 1.7,
            cavity_half_width: 92e6,
        }
    }

    /// Normalized pump power `xi = pump / threshold`.
    pub fn xi(&self) -> f64 {
        self.pump_power / self.threshold_power
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.output_coupler_transmittance;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::validation(format!(
                "output_coupler_transmittance must lie in (0, 1) (got {t})"
            )));
        }
        if !(0.0..1.0).contains(&self.intra_cavity_loss) {
            return Err(Error::validation(format!(
                "intra_cavity_loss must lie in [0, 1) (got {})",
                self.intra_cavity_loss
            )));
        }
        if !(0.0..1.0).contains(&self.total_detection_loss) {
            return Err(Error::validation(format!(
                "total_detection_loss must lie in [0, 1) (got {})",
                self.total_detection_loss
            )));
        }
        if !(self.threshold_power > 0.0) {
            return Err(Error::validation(format!(
                "threshold_power must be > 0 (got {})",
                self.threshold_power
            )));
        }
        if !(self.cavity_half_width > 0.0) {
            return Err(Error::validation(format!(
                "cavity_half_width must be > 0 (got {})",
                self.cavity_half_width
            )));
        }
        if self.pump_power < 0.0 {
            return Err(Error::validation(format!(
                "pump_power must be >= 0 (got {})",
                self.pump_power
            )));
        }
        let xi = self.xi();
        if xi >= 1.0 {
            return Err(Error::validation(format!(
                "pump power {} W is at or above the {} W threshold (xi = {xi:.3}); \
                 the below-threshold model does not apply",
                self.pump_power, self.threshold_power
            )));
        }
        Ok(())
    }
}

/// Quadrature variance `V±(f)` relative to shot noise (linear scale).
pub fn variance(params: &SqueezerParams, frequency: f64, branch: Branch) -> Result<f64> {
    params.validate()?;
    if frequency < 0.0 {
        return Err(Error::validation(format!(
            "frequency must be >= 0 (got {frequency})"
        )));
    }
    let s = params.xi().sqrt();
    let coupling = (1.0 - params.total_detection_loss)
        * escape_efficiency(params.output_coupler_transmittance, params.intra_cavity_loss)?;
    let phi2 = (frequency / params.cavity_half_width).powi(2);
    // cancellation-free forms (numerators sum positive terms only):
    //   V- = (d+ + 4s(1-C)) / d-        V+ = (d+ + 4Cs) / d+
    // with d± = (1∓s)^2 + phi^2. In the lossless case (C = 1) the
    // branches are exact reciprocals, so V+ V- = 1 to rounding.
    let d_plus = (1.0 - s).powi(2) + phi2;
    let d_minus = (1.0 + s).powi(2) + phi2;
    let v = match branch {
        Branch::Squeezed => (d_plus + 4.0 * s * (1.0 - coupling)) / d_minus,
        Branch::Anti => (d_plus + 4.0 * s * coupling) / d_plus,
    };
    Ok(v)
}

/// Oscillation threshold `(T + L)^2 / (4 E_NL)` in watts.
pub fn threshold_power(transmittance: f64, loss: f64, e_nl: f64) -> Result<f64> {
    if !(e_nl > 0.0) {
        return Err(Error::validation(format!(
            "nonlinear conversion coefficient must be > 0 (got {e_nl})"
        )));
    }
    let tl = transmittance + loss;
    Ok(tl * tl / (4.0 * e_nl))
}

/// Fraction of the intracavity field that leaves through the output
/// coupler rather than being dissipated: `T / (T + L)`.
pub fn escape_efficiency(transmittance: f64, loss: f64) -> Result<f64> {
    let tl = transmittance + loss;
    if !(tl > 0.0) {
        return Err(Error::validation(format!(
            "T + L must be > 0 (got {tl})"
        )));
    }
    Ok(transmittance / tl)
}

/// Named loss components composing the total detection loss.
///
/// Components are kept in insertion order; composition is multiplicative
/// over the corresponding efficiencies.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossBudget {
    pub components: Vec<(String, f64)>,
}

impl LossBudget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, fraction: f64) -> Self {
        self.components.push((name.into(), fraction));
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, frac) in &self.components {
            if !(0.0..1.0).contains(frac) {
                return Err(Error::validation(format!(
                    "loss component '{name}' must lie in [0, 1) (got {frac})"
                )));
            }
        }
        Ok(())
    }

    /// Total loss `1 - prod(1 - l_i)` from independent components.
    pub fn compose(&self) -> Result<f64> {
        self.validate()?;
        let efficiency: f64 = self.components.iter().map(|(_, l)| 1.0 - l).product();
        Ok(1.0 - efficiency)
    }
}

/// Electronic noise floor expressed as an equivalent optical loss:
/// a clearance of `c` dB between shot noise and circuit noise acts like
/// a vacuum admixture of `10^(-c/10)`.
pub fn equivalent_loss_from_clearance(clearance_db: f64) -> Result<f64> {
    if !(clearance_db > 0.0) {
        return Err(Error::validation(format!(
            "clearance must be > 0 dB (got {clearance_db})"
        )));
    }
    Ok(10f64.powf(-clearance_db / 10.0))
}

/// `10 log10(v)`; errors on non-positive input.
pub fn to_db(v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::validation(format!(
            "dB conversion needs a positive linear value (got {v})"
        )));
    }
    Ok(10.0 * v.log10())
}

/// Inverse of `to_db`.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Evaluate the model on a frequency grid and return the squeezed and
/// anti-squeezed traces in dB relative to shot noise.
pub fn predict_spectrum(
    params: &SqueezerParams,
    frequencies: &[f64],
) -> Result<(NoiseTrace, NoiseTrace)> {
    params.validate()?;
    let metadata = TraceMetadata {
        pump_power_w: Some(params.pump_power),
        ..TraceMetadata::default()
    };
    let mut squeezed = Vec::with_capacity(frequencies.len());
    let mut anti = Vec::with_capacity(frequencies.len());
    for &f in frequencies {
        squeezed.push((f, to_db(variance(params, f, Branch::Squeezed)?)?));
        anti.push((f, to_db(variance(params, f, Branch::Anti)?)?));
    }
    Ok((
        NoiseTrace::new("squeezed (model)", squeezed, PowerReference::RelativeToShot, metadata)?,
        NoiseTrace::new("anti-squeezed (model)", anti, PowerReference::RelativeToShot, metadata)?,
    ))
}
