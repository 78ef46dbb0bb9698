//! Coupling the cavity output into a square silica waveguide: solve the
//! fundamental mode, scan the core size, and write the mode profile.
//!
//! The full-resolution scan of the reference study takes a minute; this
//! example uses a 1 um grid and a coarser size step to finish quickly.

use opokit::cavity::{plano_concave_waist, CavitySpec};
use opokit::plot::{emit_plot, AxesSpec, PlotSeries};
use opokit::waveguide::{
    overlap_efficiency, solve_fundamental_mode, sweep_core_size, WaveguideSpec,
};

fn main() -> opokit::Result<()> {
    // the cavity waist is the source: flat phase on the output coupler
    let source = plano_concave_waist(&CavitySpec::reference_design())?;
    println!("source: w0 = {:.2} um Gaussian", source.waist_radius * 1e6);

    let template = WaveguideSpec {
        grid_spacing_um: 1.0,
        ..WaveguideSpec::reference_design()
    };

    let mode = solve_fundamental_mode(&template)?;
    println!(
        "63 um core: n_eff = {:.6}, coupling = {:.4}",
        mode.n_eff.unwrap(),
        overlap_efficiency(&mode, &source)?
    );

    let sizes: Vec<f64> = (0..14).map(|i| 40.0 + 4.0 * i as f64).collect();
    let sweep = sweep_core_size(&template, &sizes, &source)?;
    for p in &sweep.points {
        if let Some(eta) = p.efficiency {
            println!("  core {:>4.0} um: coupling {eta:.4}", p.core_size_um);
        }
    }
    if let Some((size, eta)) = sweep.maximum {
        println!("best coupling {eta:.4} at a {size:.1} um core");
    }

    std::fs::create_dir_all("examples_out")?;
    sweep.write_csv("examples_out/coupling_sweep.csv")?;
    emit_plot(
        &[PlotSeries::from_sweep(&sweep)],
        "examples_out/coupling_sweep.svg",
        &AxesSpec {
            title: "coupling vs core size".into(),
            x_label: "core size (um)".into(),
            y_label: "coupling efficiency".into(),
            log_x: false,
        },
    )?;
    mode.write_grid_file("examples_out/mode_63um.txt")?;
    println!("\nwrote examples_out/coupling_sweep.svg, .csv and mode_63um.txt");
    Ok(())
}
