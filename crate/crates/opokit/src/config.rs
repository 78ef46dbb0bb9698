//! Flat key=value configuration with mandatory SI unit suffixes.
//!
//! One `section.key = value` per line, `#` comments. Dimensioned values
//! must carry a unit (`5 mm`, `92 MHz`, `360 mW`, `75 deg`, `2.24 /W`);
//! bare numbers are accepted only for dimensionless quantities. Unknown
//! keys are errors, so typos never pass silently. Parsing starts from
//! the reference design and applies overrides, then validates every
//! section against its module invariants.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::cavity::{plano_concave_waist, CavitySpec, GaussianBeam};
use crate::error::{Error, Result};
use crate::qpm::QpmConfig;
use crate::squeezing::{LossBudget, SqueezerParams};
use crate::waveguide::WaveguideSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct QpmSection {
    pub config: QpmConfig,
    /// Measured cavity-enhanced SHG conversion efficiency (1/W).
    pub shg_conversion_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingSection {
    pub params: SqueezerParams,
    pub loss_budget: LossBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideSection {
    pub spec: WaveguideSpec,
    pub sweep_min_um: f64,
    pub sweep_max_um: f64,
    pub sweep_step_um: f64,
    /// Source waist override (m); when absent the cavity's resonant
    /// waist is used.
    pub source_waist: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolkitConfig {
    pub cavity: CavitySpec,
    pub qpm: QpmSection,
    pub squeezing: SqueezingSection,
    pub waveguide: WaveguideSection,
}

impl ToolkitConfig {
    /// The built-in reference design (same values as the shipped
    /// `paper.cfg`).
    pub fn reference_design() -> Self {
        ToolkitConfig {
            cavity: CavitySpec::reference_design(),
            qpm: QpmSection {
                config: QpmConfig::reference_design(),
                shg_conversion_efficiency: 2.24,
            },
            squeezing: SqueezingSection {
                params: SqueezerParams::reference_design(),
                loss_budget: LossBudget::new()
                    .with("propagation", 0.03)
                    .with("mode_mismatch", 0.02)
                    .with("photodiode", 0.01)
                    .with("circuit_equivalent", 0.01),
            },
            waveguide: WaveguideSection {
                spec: WaveguideSpec::reference_design(),
                sweep_min_um: 40.0,
                sweep_max_um: 90.0,
                sweep_step_um: 2.0,
                source_waist: None,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity.validate()?;
        self.qpm.config.validate()?;
        if !(self.qpm.shg_conversion_efficiency > 0.0) {
            return Err(Error::validation(format!(
                "qpm.shg_conversion_efficiency must be > 0 (got {})",
                self.qpm.shg_conversion_efficiency
            )));
        }
        self.squeezing.params.validate()?;
        self.squeezing.loss_budget.validate()?;
        self.waveguide.spec.validate()?;
        let w = &self.waveguide;
        if !(w.sweep_min_um > 0.0 && w.sweep_max_um > w.sweep_min_um && w.sweep_step_um > 0.0) {
            return Err(Error::validation(format!(
                "waveguide sweep range invalid: min {} um, max {} um, step {} um",
                w.sweep_min_um, w.sweep_max_um, w.sweep_step_um
            )));
        }
        if let Some(wv) = w.source_waist {
            if !(wv > 0.0) {
                return Err(Error::validation(format!(
                    "waveguide.source_waist must be > 0 (got {wv})"
                )));
            }
        }
        Ok(())
    }

    /// The beam launched at the waveguide facet: the explicit
    /// `waveguide.source_waist` if set, otherwise the cavity's resonant
    /// waist (flat phase on the output coupler).
    pub fn source_beam(&self) -> Result<GaussianBeam> {
        match self.waveguide.source_waist {
            Some(w0) => GaussianBeam::new(w0, 0.0, self.waveguide.spec.wavelength),
            None => plano_concave_waist(&self.cavity),
        }
    }

    /// Core sizes of the configured sweep (um, ascending).
    pub fn sweep_sizes_um(&self) -> Vec<f64> {
        let w = &self.waveguide;
        let mut sizes = Vec::new();
        let mut s = w.sweep_min_um;
        let mut k = 0u32;
        while s <= w.sweep_max_um + 1e-9 {
            sizes.push(s);
            k += 1;
            s = w.sweep_min_um + f64::from(k) * w.sweep_step_um;
        }
        sizes
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text, &path.display().to_string())
    }

    /// Parse overrides on top of the reference design.
    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Self::reference_design();
        // the reference budget is replaced, not extended, as soon as the
        // file names any loss component
        let mut budget_cleared = false;
        let mut seen: BTreeSet<String> = BTreeSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let perr =
                |msg: String| Error::Parse { path: origin.to_string(), line: lineno, msg };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected 'key = value', found '{line}'")))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(perr(format!("duplicate key '{key}'")));
            }
            if let Some(name) = key.strip_prefix("squeezing.loss.") {
                if name.is_empty() {
                    return Err(perr("empty loss component name".to_string()));
                }
                if !budget_cleared {
                    cfg.squeezing.loss_budget = LossBudget::new();
                    budget_cleared = true;
                }
                let frac = parse_quantity(value, Dimension::Bare).map_err(&perr)?;
                cfg.squeezing.loss_budget =
                    std::mem::take(&mut cfg.squeezing.loss_budget).with(name, frac);
                continue;
            }
            apply_key(&mut cfg, key, value).map_err(|e| match e {
                KeyError::Unknown => perr(format!("unknown key '{key}'")),
                KeyError::Value(msg) => perr(format!("{key}: {msg}")),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialization in base SI units; parsing it back yields
    /// identical values.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let c = &self.cavity;
        let _ = writeln!(out, "cavity.mirror_curvature_radius = {:?} m", c.mirror_curvature_radius);
        let _ = writeln!(out, "cavity.air_gap = {:?} m", c.air_gap);
        let _ = writeln!(out, "cavity.crystal_length = {:?} m", c.crystal_length);
        let _ = writeln!(out, "cavity.crystal_refractive_index = {:?}", c.crystal_refractive_index);
        let _ = writeln!(out, "cavity.output_coupler_transmittance = {:?}", c.output_coupler_transmittance);
        let _ = writeln!(out, "cavity.intra_cavity_loss = {:?}", c.intra_cavity_loss);
        let _ = writeln!(out, "cavity.wavelength = {:?} m", c.wavelength);
        let q = &self.qpm.config;
        let _ = writeln!(out, "qpm.crystal_length = {:?} m", q.crystal_length);
        let _ = writeln!(out, "qpm.poling_period = {:?} m", q.poling_period);
        let _ = writeln!(out, "qpm.fundamental_wavelength = {:?} m", q.fundamental_wavelength);
        let _ = writeln!(out, "qpm.second_harmonic_wavelength = {:?} m", q.second_harmonic_wavelength);
        let _ = writeln!(out, "qpm.refractive_index_fundamental = {:?}", q.refractive_index_fundamental);
        let _ = writeln!(out, "qpm.refractive_index_second_harmonic = {:?}", q.refractive_index_second_harmonic);
        let _ = writeln!(out, "qpm.double_pass_phase = {:?} rad", q.double_pass_phase);
        let _ = writeln!(out, "qpm.amplitude_constant = {:?}", q.amplitude_constant);
        let _ = writeln!(out, "qpm.shg_conversion_efficiency = {:?} /W", self.qpm.shg_conversion_efficiency);
        let s = &self.squeezing.params;
        let _ = writeln!(out, "squeezing.output_coupler_transmittance = {:?}", s.output_coupler_transmittance);
        let _ = writeln!(out, "squeezing.intra_cavity_loss = {:?}", s.intra_cavity_loss);
        let _ = writeln!(out, "squeezing.total_detection_loss = {:?}", s.total_detection_loss);
        let _ = writeln!(out, "squeezing.pump_power = {:?} W", s.pump_power);
        let _ = writeln!(out, "squeezing.threshold_power = {:?} W", s.threshold_power);
        let _ = writeln!(out, "squeezing.cavity_half_width = {:?} Hz", s.cavity_half_width);
        for (name, frac) in &self.squeezing.loss_budget.components {
            let _ = writeln!(out, "squeezing.loss.{name} = {frac:?}");
        }
        let w = &self.waveguide;
        let _ = writeln!(out, "waveguide.core_size = {:?} um", w.spec.core_size_um);
        let _ = writeln!(out, "waveguide.relative_index_difference = {:?}", w.spec.relative_index_difference);
        let _ = writeln!(out, "waveguide.cladding_index = {:?}", w.spec.cladding_index);
        let _ = writeln!(out, "waveguide.wavelength = {:?} m", w.spec.wavelength);
        let _ = writeln!(out, "waveguide.grid_spacing = {:?} um", w.spec.grid_spacing_um);
        let _ = writeln!(out, "waveguide.domain_padding = {:?} um", w.spec.domain_padding_um);
        let _ = writeln!(out, "waveguide.sweep_min = {:?} um", w.sweep_min_um);
        let _ = writeln!(out, "waveguide.sweep_max = {:?} um", w.sweep_max_um);
        let _ = writeln!(out, "waveguide.sweep_step = {:?} um", w.sweep_step_um);
        if let Some(wv) = w.source_waist {
            let _ = writeln!(out, "waveguide.source_waist = {wv:?} m");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Length,
    Frequency,
    Power,
    Angle,
    InversePower,
    Bare,
}

impl Dimension {
    fn describe(self) -> &'static str {
        match self {
            Dimension::Length => "a length with unit (m, mm, um, nm)",
            Dimension::Frequency => "a frequency with unit (Hz, kHz, MHz, GHz)",
            Dimension::Power => "a power with unit (W, mW, uW)",
            Dimension::Angle => "an angle with unit (deg, rad)",
            Dimension::InversePower => "an inverse power with unit (/W)",
            Dimension::Bare => "a bare dimensionless number",
        }
    }

    fn factor(self, unit: &str) -> Option<f64> {
        match (self, unit) {
            (Dimension::Length, "m") => Some(1.0),
            (Dimension::Length, "mm") => Some(1e-3),
            (Dimension::Length, "um" | "µm") => Some(1e-6),
            (Dimension::Length, "nm") => Some(1e-9),
            (Dimension::Frequency, "Hz") => Some(1.0),
            (Dimension::Frequency, "kHz") => Some(1e3),
            (Dimension::Frequency, "MHz") => Some(1e6),
            (Dimension::Frequency, "GHz") => Some(1e9),
            (Dimension::Power, "W") => Some(1.0),
            (Dimension::Power, "mW") => Some(1e-3),
            (Dimension::Power, "uW" | "µW") => Some(1e-6),
            (Dimension::Angle, "rad") => Some(1.0),
            (Dimension::Angle, "deg") => Some(std::f64::consts::PI / 180.0),
            (Dimension::InversePower, "/W" | "1/W") => Some(1.0),
            _ => None,
        }
    }
}

/// Split `"5 mm"` / `"5mm"` / `"2.24 /W"` into number and unit. The
/// longest leading substring that parses as f64 is the number.
fn split_quantity(s: &str) -> Option<(f64, &str)> {
    let s = s.trim();
    for split in (1..=s.len()).rev() {
        if !s.is_char_boundary(split) {
            continue;
        }
        if let Ok(num) = s[..split].trim().parse::<f64>() {
            return Some((num, s[split..].trim()));
        }
    }
    None
}

fn parse_quantity(s: &str, dim: Dimension) -> std::result::Result<f64, String> {
    let (num, unit) = split_quantity(s)
        .ok_or_else(|| format!("cannot parse '{s}' as {}", dim.describe()))?;
    if dim == Dimension::Bare {
        if unit.is_empty() {
            return Ok(num);
        }
        return Err(format!(
            "unexpected unit '{unit}' on a dimensionless value '{s}'"
        ));
    }
    if unit.is_empty() {
        return Err(format!(
            "missing unit on '{s}': expected {}",
            dim.describe()
        ));
    }
    let factor = dim
        .factor(unit)
        .ok_or_else(|| format!("unit '{unit}' is not {}", dim.describe()))?;
    Ok(num * factor)
}

enum KeyError {
    Unknown,
    Value(String),
}

fn apply_key(cfg: &mut ToolkitConfig, key: &str, value: &str) -> std::result::Result<(), KeyError> {
    use Dimension::*;
    let set = |dim: Dimension, slot: &mut f64| -> std::result::Result<(), KeyError> {
        *slot = parse_quantity(value, dim).map_err(KeyError::Value)?;
        Ok(())
    };
    match key {
        "cavity.mirror_curvature_radius" => set(Length, &mut cfg.cavity.mirror_curvature_radius),
        "cavity.air_gap" => set(Length, &mut cfg.cavity.air_gap),
        "cavity.crystal_length" => set(Length, &mut cfg.cavity.crystal_length),
        "cavity.crystal_refractive_index" => set(Bare, &mut cfg.cavity.crystal_refractive_index),
        "cavity.output_coupler_transmittance" => {
            set(Bare, &mut cfg.cavity.output_coupler_transmittance)
        }
        "cavity.intra_cavity_loss" => set(Bare, &mut cfg.cavity.intra_cavity_loss),
        "cavity.wavelength" => set(Length, &mut cfg.cavity.wavelength),
        "qpm.crystal_length" => set(Length, &mut cfg.qpm.config.crystal_length),
        "qpm.poling_period" => set(Length, &mut cfg.qpm.config.poling_period),
        "qpm.fundamental_wavelength" => set(Length, &mut cfg.qpm.config.fundamental_wavelength),
        "qpm.second_harmonic_wavelength" => {
            set(Length, &mut cfg.qpm.config.second_harmonic_wavelength)
        }
        "qpm.refractive_index_fundamental" => {
            set(Bare, &mut cfg.qpm.config.refractive_index_fundamental)
        }
        "qpm.refractive_index_second_harmonic" => {
            set(Bare, &mut cfg.qpm.config.refractive_index_second_harmonic)
        }
        "qpm.double_pass_phase" => set(Angle, &mut cfg.qpm.config.double_pass_phase),
        "qpm.amplitude_constant" => set(Bare, &mut cfg.qpm.config.amplitude_constant),
        "qpm.shg_conversion_efficiency" => {
            set(InversePower, &mut cfg.qpm.shg_conversion_efficiency)
        }
        "squeezing.output_coupler_transmittance" => {
            set(Bare, &mut cfg.squeezing.params.output_coupler_transmittance)
        }
        "squeezing.intra_cavity_loss" => set(Bare, &mut cfg.squeezing.params.intra_cavity_loss),
        "squeezing.total_detection_loss" => {
            set(Bare, &mut cfg.squeezing.params.total_detection_loss)
        }
        "squeezing.pump_power" => set(Power, &mut cfg.squeezing.params.pump_power),
        "squeezing.threshold_power" => set(Power, &mut cfg.squeezing.params.threshold_power),
        "squeezing.cavity_half_width" => {
            set(Frequency, &mut cfg.squeezing.params.cavity_half_width)
        }
        "waveguide.core_size" => scaled_um(value, &mut cfg.waveguide.spec.core_size_um),
        "waveguide.relative_index_difference" => {
            set(Bare, &mut cfg.waveguide.spec.relative_index_difference)
        }
        "waveguide.cladding_index" => set(Bare, &mut cfg.waveguide.spec.cladding_index),
        "waveguide.wavelength" => set(Length, &mut cfg.waveguide.spec.wavelength),
        "waveguide.grid_spacing" => scaled_um(value, &mut cfg.waveguide.spec.grid_spacing_um),
        "waveguide.domain_padding" => scaled_um(value, &mut cfg.waveguide.spec.domain_padding_um),
        "waveguide.sweep_min" => scaled_um(value, &mut cfg.waveguide.sweep_min_um),
        "waveguide.sweep_max" => scaled_um(value, &mut cfg.waveguide.sweep_max_um),
        "waveguide.sweep_step" => scaled_um(value, &mut cfg.waveguide.sweep_step_um),
        "waveguide.source_waist" => {
            let v = parse_quantity(value, Length).map_err(KeyError::Value)?;
            cfg.waveguide.source_waist = Some(v);
            Ok(())
        }
        _ => Err(KeyError::Unknown),
    }
}

/// Parse a length directly into micrometers, so `um` values round-trip
/// without a detour through meters.
fn scaled_um(value: &str, slot: &mut f64) -> std::result::Result<(), KeyError> {
    let (num, unit) = split_quantity(value).ok_or_else(|| {
        KeyError::Value(format!(
            "cannot parse '{value}' as {}",
            Dimension::Length.describe()
        ))
    })?;
    let factor = match unit {
        "m" => 1e6,
        "mm" => 1e3,
        "um" | "µm" => 1.0,
        "nm" => 1e-3,
        "" => {
            return Err(KeyError::Value(format!(
                "missing unit on '{value}': expected {}",
                Dimension::Length.describe()
            )))
        }
        other => {
            return Err(KeyError::Value(format!(
                "unit '{other}' is not {}",
                Dimension::Length.describe()
            )))
        }
    };
    *slot = num * factor;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_design_is_valid() {
        ToolkitConfig::reference_design().validate().unwrap();
    }

    #[test]
    fn parse_overrides_and_units() {
        let cfg = ToolkitConfig::parse_str(
            "# comment\n\
             cavity.air_gap = 2.5 mm\n\
             squeezing.pump_power = 229 mW\n\
             squeezing.cavity_half_width = 0.092 GHz\n\
             qpm.double_pass_phase = 75 deg\n\
             waveguide.core_size = 63 um\n",
            "mem",
        )
        .unwrap();
        assert_relative_eq!(cfg.cavity.air_gap, 2.5e-3, max_relative = 1e-12);
        assert_relative_eq!(cfg.squeezing.params.pump_power, 0.229, max_relative = 1e-12);
        assert_relative_eq!(
            cfg.squeezing.params.cavity_half_width,
            92e6,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cfg.qpm.config.double_pass_phase,
            75.0_f64.to_radians(),
            max_relative = 1e-12
        );
        assert_relative_eq!(cfg.waveguide.spec.core_size_um, 63.0, max_relative = 1e-12);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ToolkitConfig::parse_str("cavity.air_gapp = 2 mm\n", "mem").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown key"), "{msg}");
        assert!(msg.contains("mem:1"), "{msg}");
    }

    #[test]
    fn bare_number_rejected_for_length() {
        let err = ToolkitConfig::parse_str("cavity.air_gap = 0.002\n", "mem").unwrap_err();
        assert!(err.to_string().contains("missing unit"), "{err}");
    }

    #[test]
    fn unit_rejected_for_dimensionless() {
        let err =
            ToolkitConfig::parse_str("cavity.intra_cavity_loss = 0.38 mW\n", "mem").unwrap_err();
        assert!(err.to_string().contains("unexpected unit"), "{err}");
    }

    #[test]
    fn wrong_unit_family_rejected() {
        let err = ToolkitConfig::parse_str("cavity.air_gap = 2 MHz\n", "mem").unwrap_err();
        assert!(err.to_string().contains("not a length"), "{err}");
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = ToolkitConfig::parse_str(
            "cavity.air_gap = 2 mm\ncavity.air_gap = 3 mm\n",
            "mem",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn loss_budget_replaced_by_overrides() {
        let cfg = ToolkitConfig::parse_str(
            "squeezing.loss.fiber = 0.05\nsqueezing.loss.detector = 0.02\n",
            "mem",
        )
        .unwrap();
        assert_eq!(cfg.squeezing.loss_budget.components.len(), 2);
        assert_eq!(cfg.squeezing.loss_budget.components[0].0, "fiber");
    }

    #[test]
    fn values_validated_at_load() {
        // pump above threshold fails the squeezing invariants
        let err = ToolkitConfig::parse_str("squeezing.pump_power = 2 W\n", "mem").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ToolkitConfig::parse_str(
            "cavity.air_gap = 2.345 mm\n\
             qpm.double_pass_phase = 74.5 deg\n\
             squeezing.pump_power = 359.5 mW\n\
             waveguide.source_waist = 22.7 um\n",
            "mem",
        )
        .unwrap();
        let text = cfg.to_config_string();
        let back = ToolkitConfig::parse_str(&text, "mem2").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sweep_sizes_inclusive() {
        let cfg = ToolkitConfig::reference_design();
        let sizes = cfg.sweep_sizes_um();
        assert_eq!(sizes.first(), Some(&40.0));
        assert_eq!(sizes.last(), Some(&90.0));
        assert_eq!(sizes.len(), 26);
    }

    #[test]
    fn source_beam_defaults_to_cavity_waist() {
        let cfg = ToolkitConfig::reference_design();
        let beam = cfg.source_beam().unwrap();
        assert_relative_eq!(beam.waist_radius, 23.114e-6, max_relative = 1e-4);
        let cfg =
            ToolkitConfig::parse_str("waveguide.source_waist = 25 um\n", "mem").unwrap();
        assert_relative_eq!(
            cfg.source_beam().unwrap().waist_radius,
            25e-6,
            max_relative = 1e-12
        );
    }
}
