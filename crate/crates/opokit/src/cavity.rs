//! Gaussian-beam and Fabry-Pérot cavity figures of merit for a
//! plano-concave cavity built from a curved mirror and a flat-faced
//! nonlinear crystal: round-trip optical length, free spectral range,
//! finesse, linewidth, resonant waist, and mode overlap.
//!
//! Two finesse conventions coexist in the lab and in the literature.
//! `cavity_finesse` evaluates the Airy-lineshape finesse
//! `F = pi sqrt(r) / (1 - r)` with the round-trip amplitude factor
//! `r = sqrt((1-T)(1-L))`; `finesse_small_loss_approx` evaluates the
//! small-loss estimate `2 pi / (T + L)` that design notes usually quote.
//! At T = 10% the two differ by about 5%, so both are exposed and the
//! reporting layer prints them side by side.

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Geometry and mirror parameters of a plano-concave squeezer cavity.
///
/// All lengths are in meters. `output_coupler_transmittance` and
/// `intra_cavity_loss` are power fractions per round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct CavitySpec {
    /// Curvature radius of the spherical mirror (m).
    pub mirror_curvature_radius: f64,
    /// Air gap between the spherical mirror and the crystal face (m).
    pub air_gap: f64,
    /// Physical crystal length (m).
    pub crystal_length: f64,
    /// Refractive index of the crystal at the resonant wavelength.
    pub crystal_refractive_index: f64,
    /// Power transmittance T of the output coupler, in (0, 1).
    pub output_coupler_transmittance: f64,
    /// Lumped intra-cavity power loss per round trip, in [0, 1).
    pub intra_cavity_loss: f64,
    /// Resonant wavelength (m).
    pub wavelength: f64,
}

impl CavitySpec {
    /// The 1550 nm semi-monolithic reference design: 5 mm curvature
    /// radius, 2 mm air gap, 5 mm PPKTP crystal (n = 1.816), 10% output
    /// coupler, 0.38% round-trip loss.
    pub fn reference_design() -> Self {
        CavitySpec {
            mirror_curvature_radius: 5.0e-3,
            air_gap: 2.0e-3,
            crystal_length: 5.0e-3,
            crystal_refractive_index: 1.816,
            output_coupler_transmittance: 0.10,
            intra_cavity_loss: 0.0038,
            wavelength: 1550e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mirror_curvature_radius", self.mirror_curvature_radius),
            ("air_gap", self.air_gap),
            ("crystal_length", self.crystal_length),
            ("wavelength", self.wavelength),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(format!(
                    "cavity {name} must be > 0 (got {v})"
                )));
            }
        }
        if !(self.crystal_refractive_index >= 1.0) {
            return Err(Error::validation(format!(
                "crystal_refractive_index must be >= 1 (got {})",
                self.crystal_refractive_index
            )));
        }
        let t = self.output_coupler_transmittance;
        let l = self.intra_cavity_loss;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::validation(format!(
                "output_coupler_transmittance must lie in (0, 1) (got {t})"
            )));
        }
        if !(0.0..1.0).contains(&l) {
            return Err(Error::validation(format!(
                "intra_cavity_loss must lie in [0, 1) (got {l})"
            )));
        }
        if t + l >= 1.0 {
            return Err(Error::validation(format!(
                "output coupling plus loss must stay below 1 (T + L = {})",
                t + l
            )));
        }
        Ok(())
    }

    /// Reduced cavity length `air_gap + crystal_length / n`: the
    /// equivalent free-space length that governs the transverse mode.
    pub fn reduced_length(&self) -> f64 {
        self.air_gap + self.crystal_length / self.crystal_refractive_index
    }
}

/// A TEM00 beam characterized by its waist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBeam {
    /// 1/e^2 intensity radius at the waist (m).
    pub waist_radius: f64,
    /// Waist location along the propagation axis (m).
    pub waist_position: f64,
    /// Wavelength (m).
    pub wavelength: f64,
}

impl GaussianBeam {
    pub fn new(waist_radius: f64, waist_position: f64, wavelength: f64) -> Result<Self> {
        if !(waist_radius > 0.0) || !waist_radius.is_finite() {
            return Err(Error::validation(format!(
                "waist_radius must be > 0 (got {waist_radius})"
            )));
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::validation(format!(
                "wavelength must be > 0 (got {wavelength})"
            )));
        }
        Ok(GaussianBeam {
            waist_radius,
            waist_position,
            wavelength,
        })
    }
}

/// Round-trip optical length `2 (air_gap + n * crystal_length)`.
pub fn round_trip_optical_length(spec: &CavitySpec) -> Result<f64> {
    spec.validate()?;
    Ok(2.0 * (spec.air_gap + spec.crystal_length * spec.crystal_refractive_index))
}

/// Free spectral range `c / L_rt` (Hz).
pub fn cavity_fsr(spec: &CavitySpec) -> Result<f64> {
    Ok(SPEED_OF_LIGHT / round_trip_optical_length(spec)?)
}

fn round_trip_amplitude(spec: &CavitySpec) -> f64 {
    ((1.0 - spec.output_coupler_transmittance) * (1.0 - spec.intra_cavity_loss)).sqrt()
}

/// Airy-lineshape finesse `pi sqrt(r) / (1 - r)` with round-trip
/// amplitude factor `r = sqrt((1-T)(1-L))`.
pub fn cavity_finesse(spec: &CavitySpec) -> Result<f64> {
    spec.validate()?;
    let r = round_trip_amplitude(spec);
    if r >= 1.0 {
        return Err(Error::numerical(
            "lossless cavity: finesse diverges (round-trip amplitude factor >= 1)".to_string(),
        ));
    }
    Ok(std::f64::consts::PI * r.sqrt() / (1.0 - r))
}

/// Small-loss finesse estimate `2 pi / (T + L)`.
///
/// This is the convention commonly quoted in design tables. It exceeds
/// the Airy value by roughly `(T + L)/2` in relative terms, noticeable
/// for strongly coupled cavities.
pub fn finesse_small_loss_approx(spec: &CavitySpec) -> Result<f64> {
    spec.validate()?;
    let tl = spec.output_coupler_transmittance + spec.intra_cavity_loss;
    if tl <= 0.0 {
        return Err(Error::numerical(
            "lossless cavity: finesse diverges".to_string(),
        ));
    }
    Ok(2.0 * std::f64::consts::PI / tl)
}

/// FWHM linewidth `FSR / finesse` (Hz), using the Airy finesse.
pub fn cavity_linewidth_fwhm(spec: &CavitySpec) -> Result<f64> {
    Ok(cavity_fsr(spec)? / cavity_finesse(spec)?)
}

/// FWHM linewidth `FSR / finesse` (Hz), using the small-loss finesse.
pub fn linewidth_fwhm_small_loss_approx(spec: &CavitySpec) -> Result<f64> {
    Ok(cavity_fsr(spec)? / finesse_small_loss_approx(spec)?)
}

/// Waist of the resonant TEM00 mode of a plano-concave cavity.
///
/// The waist sits on the flat (crystal output) face;
/// `w0^2 = (lambda/pi) sqrt(L_eff (R_c - L_eff))` with the reduced
/// length `L_eff = air_gap + crystal_length / n`. The returned beam has
/// its waist position at 0 (the flat face).
pub fn plano_concave_waist(spec: &CavitySpec) -> Result<GaussianBeam> {
    spec.validate()?;
    let l_eff = spec.reduced_length();
    let rc = spec.mirror_curvature_radius;
    if l_eff >= rc {
        return Err(Error::validation(format!(
            "unstable cavity: reduced length {:.4} mm is not below the mirror curvature radius {:.4} mm",
            l_eff * 1e3,
            rc * 1e3
        )));
    }
    let w0_sq = spec.wavelength / std::f64::consts::PI * (l_eff * (rc - l_eff)).sqrt();
    GaussianBeam::new(w0_sq.sqrt(), 0.0, spec.wavelength)
}

/// Power overlap of two co-axial Gaussian beams with waists in the same
/// plane: `(2 w_a w_b / (w_a^2 + w_b^2))^2`.
pub fn gaussian_overlap(a: &GaussianBeam, b: &GaussianBeam) -> f64 {
    let (wa, wb) = (a.waist_radius, b.waist_radius);
    let x = 2.0 * wa * wb / (wa * wa + wb * wb);
    x * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_round_trip_is_22_16_mm() {
        let spec = CavitySpec::reference_design();
        let l = round_trip_optical_length(&spec).unwrap();
        assert_relative_eq!(l, 22.16e-3, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_lengths_rejected() {
        let mut spec = CavitySpec::reference_design();
        spec.air_gap = 0.0;
        spec.crystal_length = 0.0;
        assert!(round_trip_optical_length(&spec).is_err());
    }

    #[test]
    fn unit_index_reduces_to_geometric_length() {
        let mut spec = CavitySpec::reference_design();
        spec.air_gap = 11e-3;
        spec.crystal_length = 0.001e-3;
        spec.crystal_refractive_index = 1.0;
        let l = round_trip_optical_length(&spec).unwrap();
        assert_relative_eq!(l, 22.002e-3, max_relative = 1e-12);
    }

    #[test]
    fn fsr_of_reference_design() {
        let spec = CavitySpec::reference_design();
        // c / 22.16 mm = 13.53 GHz
        assert_relative_eq!(cavity_fsr(&spec).unwrap(), 1.3528540523e10, max_relative = 1e-9);
    }

    #[test]
    fn fsr_one_light_second_round_trip() {
        let mut spec = CavitySpec::reference_design();
        spec.crystal_refractive_index = 1.0;
        spec.crystal_length = 1e-6;
        spec.air_gap = SPEED_OF_LIGHT / 2.0 - 1e-6;
        assert_relative_eq!(cavity_fsr(&spec).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn fsr_of_22_mm() {
        let mut spec = CavitySpec::reference_design();
        spec.crystal_refractive_index = 1.0;
        spec.air_gap = 0.011 - spec.crystal_length;
        assert_relative_eq!(cavity_fsr(&spec).unwrap(), 1.3626929909e10, max_relative = 1e-9);
    }

    #[test]
    fn finesse_conventions_on_reference_design() {
        let spec = CavitySpec::reference_design();
        // Airy value; the small-loss estimate is ~5% higher and matches
        // the quoted design value 61.
        assert_relative_eq!(cavity_finesse(&spec).unwrap(), 57.548, max_relative = 1e-4);
        assert_relative_eq!(
            finesse_small_loss_approx(&spec).unwrap(),
            60.532,
            max_relative = 1e-4
        );
    }

    #[test]
    fn vanishing_coupling_is_rejected() {
        let mut spec = CavitySpec::reference_design();
        spec.output_coupler_transmittance = 0.0;
        spec.intra_cavity_loss = 0.0;
        assert!(cavity_finesse(&spec).is_err());
    }

    /// Brute-force oracle: locate the FWHM of the Airy intensity
    /// profile 1/((1-r)^2 + 4 r sin^2(d/2)) by scanning the detuning.
    fn airy_scan_finesse(r: f64) -> f64 {
        let n = 4_000_001usize;
        let half_peak = 0.5 / ((1.0 - r) * (1.0 - r));
        let mut lo = f64::NAN;
        let mut hi = f64::NAN;
        let mut prev_above = false;
        for i in 0..n {
            let d = -std::f64::consts::PI
                + 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
            let y = 1.0 / ((1.0 - r).powi(2) + 4.0 * r * (d / 2.0).sin().powi(2));
            let above = y >= half_peak;
            if above && !prev_above {
                lo = d;
            }
            if !above && prev_above {
                hi = d;
            }
            prev_above = above;
        }
        2.0 * std::f64::consts::PI / (hi - lo)
    }

    #[test]
    fn closed_form_matches_airy_scan_within_one_percent() {
        let spec = CavitySpec::reference_design();
        let f = cavity_finesse(&spec).unwrap();
        let r = ((1.0 - spec.output_coupler_transmittance) * (1.0 - spec.intra_cavity_loss)).sqrt();
        let f_scan = airy_scan_finesse(r);
        assert!(
            (f - f_scan).abs() / f_scan < 0.01,
            "closed form {f} vs scan {f_scan}"
        );
    }

    #[test]
    fn closed_form_matches_airy_scan_for_random_specs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut spec = CavitySpec::reference_design();
            spec.output_coupler_transmittance = rng.random_range(0.005..0.25);
            spec.intra_cavity_loss = rng.random_range(0.0..0.05);
            let f = cavity_finesse(&spec).unwrap();
            let r = round_trip_amplitude(&spec);
            let f_scan = airy_scan_finesse(r);
            assert!(
                (f - f_scan).abs() / f_scan < 0.01,
                "T={} L={}: closed {f} scan {f_scan}",
                spec.output_coupler_transmittance,
                spec.intra_cavity_loss
            );
        }
    }

    #[test]
    fn linewidth_of_reference_design() {
        let spec = CavitySpec::reference_design();
        // FSR / F_airy and FSR / F_small_loss
        assert_relative_eq!(
            cavity_linewidth_fwhm(&spec).unwrap(),
            235.08e6,
            max_relative = 1e-4
        );
        assert_relative_eq!(
            linewidth_fwhm_small_loss_approx(&spec).unwrap(),
            223.50e6,
            max_relative = 1e-4
        );
    }

    #[test]
    fn linewidth_scales_inversely_with_round_trip() {
        // halving L_rt doubles the FWHM at fixed mirror parameters
        let spec = CavitySpec::reference_design();
        let mut half = spec.clone();
        half.air_gap /= 2.0;
        half.crystal_length /= 2.0;
        let ratio =
            cavity_linewidth_fwhm(&half).unwrap() / cavity_linewidth_fwhm(&spec).unwrap();
        assert_relative_eq!(ratio, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn finesse_decreases_with_coupling_and_loss() {
        let base = CavitySpec::reference_design();
        let f0 = cavity_finesse(&base).unwrap();
        for k in 1..=10 {
            let mut spec = base.clone();
            spec.output_coupler_transmittance = 0.10 + 0.02 * k as f64;
            assert!(cavity_finesse(&spec).unwrap() < f0);
            let mut spec = base.clone();
            spec.intra_cavity_loss = 0.0038 + 0.01 * k as f64;
            assert!(cavity_finesse(&spec).unwrap() < f0);
        }
    }

    #[test]
    fn fsr_times_round_trip_is_c() {
        let spec = CavitySpec::reference_design();
        let prod = cavity_fsr(&spec).unwrap() * round_trip_optical_length(&spec).unwrap();
        assert_relative_eq!(prod, SPEED_OF_LIGHT, max_relative = 1e-15);
    }

    #[test]
    fn reference_waist_is_23_microns() {
        let spec = CavitySpec::reference_design();
        let beam = plano_concave_waist(&spec).unwrap();
        assert_relative_eq!(spec.reduced_length(), 4.753304e-3, max_relative = 1e-6);
        assert_relative_eq!(beam.waist_radius, 23.114e-6, max_relative = 1e-4);
        assert_eq!(beam.waist_position, 0.0);
    }

    #[test]
    fn confocal_like_waist_closed_form() {
        // L_eff = R_c/2 maximizes sqrt(L (R - L)): w0^2 = lambda R_c / (2 pi)
        let mut spec = CavitySpec::reference_design();
        spec.crystal_refractive_index = 1.0;
        spec.crystal_length = 0.5e-3;
        spec.air_gap = 2.0e-3;
        let beam = plano_concave_waist(&spec).unwrap();
        let expect = (spec.wavelength * spec.mirror_curvature_radius
            / (2.0 * std::f64::consts::PI))
            .sqrt();
        assert_relative_eq!(beam.waist_radius, expect, max_relative = 1e-12);
    }

    #[test]
    fn unstable_cavity_is_an_error() {
        let mut spec = CavitySpec::reference_design();
        spec.air_gap = 5.0e-3;
        assert!(plano_concave_waist(&spec).is_err());
    }

    #[test]
    fn waist_symmetric_under_length_reflection() {
        let spec = CavitySpec::reference_design();
        let l_eff = spec.reduced_length();
        let rc = spec.mirror_curvature_radius;
        let mut mirrored = spec.clone();
        mirrored.crystal_refractive_index = 1.0;
        mirrored.crystal_length = 1e-9;
        mirrored.air_gap = rc - l_eff - 1e-9;
        let w1 = plano_concave_waist(&spec).unwrap().waist_radius;
        let w2 = plano_concave_waist(&mirrored).unwrap().waist_radius;
        assert_relative_eq!(w1, w2, max_relative = 1e-9);
    }

    #[test]
    fn overlap_examples() {
        let b = |w: f64| GaussianBeam::new(w, 0.0, 1550e-9).unwrap();
        assert_eq!(gaussian_overlap(&b(23e-6), &b(23e-6)), 1.0);
        assert_relative_eq!(gaussian_overlap(&b(2.0), &b(1.0)), 0.64, max_relative = 1e-12);
        assert_relative_eq!(
            gaussian_overlap(&b(23e-6), &b(25e-6)),
            0.9930796,
            max_relative = 1e-6
        );
    }

    #[test]
    fn overlap_bounds_and_symmetry() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let wa = rng.random_range(1e-6..100e-6);
            let wb = rng.random_range(1e-6..100e-6);
            let a = GaussianBeam::new(wa, 0.0, 1550e-9).unwrap();
            let b = GaussianBeam::new(wb, 0.0, 1550e-9).unwrap();
            let o = gaussian_overlap(&a, &b);
            assert!(o > 0.0 && o <= 1.0);
            assert_eq!(o, gaussian_overlap(&b, &a));
            if (wa - wb).abs() > 1e-12 {
                assert!(o < 1.0);
            }
        }
    }
}
