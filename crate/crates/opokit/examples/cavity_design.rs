//! Figures of merit for a plano-concave squeezer cavity, and how they
//! move when the output coupling changes.

use opokit::cavity::{
    cavity_finesse, cavity_fsr, cavity_linewidth_fwhm, finesse_small_loss_approx,
    gaussian_overlap, plano_concave_waist, round_trip_optical_length, CavitySpec, GaussianBeam,
};

fn main() -> opokit::Result<()> {
    let spec = CavitySpec::reference_design();

    println!("reference design");
    println!("  round-trip optical length  {:.4} mm", round_trip_optical_length(&spec)? * 1e3);
    println!("  free spectral range        {:.4} GHz", cavity_fsr(&spec)? / 1e9);
    println!("  finesse (Airy)             {:.3}", cavity_finesse(&spec)?);
    println!("  finesse (2pi/(T+L))        {:.3}", finesse_small_loss_approx(&spec)?);
    println!("  linewidth FWHM             {:.2} MHz", cavity_linewidth_fwhm(&spec)? / 1e6);

    let waist = plano_concave_waist(&spec)?;
    println!("  resonant waist             {:.3} um on the flat crystal face", waist.waist_radius * 1e6);

    // mode matching against a slightly mismatched collimator
    let lo = GaussianBeam::new(25e-6, 0.0, spec.wavelength)?;
    println!("  overlap with a 25 um beam  {:.4}", gaussian_overlap(&waist, &lo));

    // trade-off: stronger coupling broadens the line
    println!("\ncoupling trade-off (L = 0.38%):");
    for t in [0.05, 0.10, 0.15, 0.20] {
        let s = CavitySpec {
            output_coupler_transmittance: t,
            ..spec.clone()
        };
        println!(
            "  T = {:>4.0}%  finesse {:>6.2}  FWHM {:>7.2} MHz",
            t * 100.0,
            cavity_finesse(&s)?,
            cavity_linewidth_fwhm(&s)? / 1e6
        );
    }
    Ok(())
}
