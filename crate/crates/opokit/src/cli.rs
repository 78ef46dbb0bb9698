//! Command-line interface. The binary is a thin front end: every
//! subcommand parses flags, loads the config, and calls library
//! functions.
//!
//! Exit codes: 0 on success, 1 on validation/input errors (including
//! usage errors), 2 on numerical failures.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::config::ToolkitConfig;
use crate::error::Result;
use crate::fit::{self, FitConfig, FitParams, FixedParams};
use crate::plot::{emit_plot, AxesSpec, PlotSeries};
use crate::qpm::{self, ShgMeasurement};
use crate::report;
use crate::squeezing::{self, Branch};
use crate::trace;
use crate::waveguide;

#[derive(Parser)]
#[command(
    name = "opokit",
    about = "Design and analysis toolkit for cavity-based squeezed-light sources",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cavity figures of merit: round trip, FSR, finesse, linewidth, waist
    Cavity {
        /// Config file (defaults to the built-in reference design)
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Tuning curves, double-pass penalties, theta estimation and E_NL
    Qpm {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Estimate theta (deg) from a measured peak ratio
        #[arg(long)]
        ratio: Option<f64>,
        /// Directory for the tuning-curve SVG/CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Squeezing/anti-squeezing predictions and oscillation threshold
    Squeeze {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Pump power override (mW)
        #[arg(long, value_name = "MW")]
        pump_mw: Option<f64>,
        /// Evaluation frequencies (MHz); defaults to 2 and 100
        #[arg(long, value_name = "MHZ")]
        freq_mhz: Vec<f64>,
        /// Directory for the model spectrum SVG/CSVs
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit (P_th, f_HWHM) to an observation CSV
    Fit {
        /// Observation CSV (pump_power_w,frequency_hz,branch,level_db,uncertainty_db)
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Free the detection loss as a third parameter
        #[arg(long)]
        free_eta: bool,
        /// Fit in linear variance instead of dB
        #[arg(long)]
        linear: bool,
        /// Initial threshold guess (W); defaults to the config value
        #[arg(long, value_name = "W")]
        guess_pth: Option<f64>,
        /// Initial half-width guess (MHz); defaults to the config value
        #[arg(long, value_name = "MHZ")]
        guess_fhwhm_mhz: Option<f64>,
    },
    /// Solve the waveguide mode or sweep coupling vs core size
    Waveguide {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Core size override (um)
        #[arg(long, value_name = "UM")]
        core_um: Option<f64>,
        /// Run the core-size sweep from the config range
        #[arg(long)]
        sweep: bool,
        /// Directory for mode-grid / sweep files
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every subsystem and write the combined pass/fail report
    Report {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for report.txt and artifacts
        #[arg(long, default_value = "report_out")]
        out: PathBuf,
    },
    /// Normalize a signal trace to a shot-noise trace (both CSV)
    Normalize {
        /// Signal trace CSV
        #[arg(long)]
        signal: PathBuf,
        /// Shot-noise trace CSV on the same frequency grid
        #[arg(long)]
        shot: PathBuf,
        /// Output CSV (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Entry point used by both the binary and the tests; takes the
/// arguments after the program name and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("opokit"))
        .chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<ToolkitConfig> {
    match path {
        Some(p) => ToolkitConfig::load(p),
        None => Ok(ToolkitConfig::reference_design()),
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Cavity { config } => {
            let cfg = load_config(&config)?;
            print!("{}", report::cavity_summary(&cfg.cavity)?);
            Ok(())
        }
        Command::Qpm { config, ratio, out } => run_qpm(&load_config(&config)?, ratio, out),
        Command::Squeeze {
            config,
            pump_mw,
            freq_mhz,
            out,
        } => run_squeeze(&load_config(&config)?, pump_mw, &freq_mhz, out),
        Command::Fit {
            csv,
            config,
            free_eta,
            linear,
            guess_pth,
            guess_fhwhm_mhz,
        } => run_fit(
            &load_config(&config)?,
            &csv,
            free_eta,
            linear,
            guess_pth,
            guess_fhwhm_mhz,
        ),
        Command::Waveguide {
            config,
            core_um,
            sweep,
            out,
        } => run_waveguide(&load_config(&config)?, core_um, sweep, out),
        Command::Report { config, out } => {
            let cfg = load_config(&config)?;
            let output = report::run_report(&cfg, Some(&out))?;
            print!("{}", output.text);
            println!("\nartifacts written to {}", out.display());
            Ok(())
        }
        Command::Normalize { signal, shot, out } => {
            let sig = trace::parse_trace_csv(&signal)?;
            let sn = trace::parse_trace_csv(&shot)?;
            let normalized = trace::normalize_to_shot(&sig, &sn)?;
            match out {
                Some(p) => normalized.write_csv(p)?,
                None => print!("{}", normalized.to_csv_string()),
            }
            Ok(())
        }
    }
}

fn run_qpm(cfg: &ToolkitConfig, ratio: Option<f64>, out: Option<PathBuf>) -> Result<()> {
    let theta = cfg.qpm.config.double_pass_phase;
    let t = cfg.cavity.output_coupler_transmittance;
    let meas = ShgMeasurement::new(cfg.qpm.shg_conversion_efficiency, t, 1.0 - t)?;
    println!(
        "cavity enhancement factor    {:.2}",
        qpm::cavity_enhancement_factor(t, 1.0 - t)?
    );
    println!("E_NL (double pass)           {:.4e} /W", qpm::extract_enl(&meas)?);
    let worst = qpm::double_pass_peak(std::f64::consts::FRAC_PI_2);
    println!(
        "worst-case penalty (90 deg)  {:.5} at dkL = {:.5}",
        qpm::worst_case_penalty(),
        worst.x
    );
    println!(
        "penalty at {:.1} deg          {:.4}",
        theta.to_degrees(),
        qpm::double_pass_penalty(theta)
    );
    let pr = qpm::peak_ratio(theta)?;
    println!(
        "peak ratio at {:.1} deg       {:.5}{}",
        theta.to_degrees(),
        pr.ratio,
        if pr.degenerate { " (degenerate)" } else { "" }
    );
    if let Some(r) = ratio {
        println!(
            "theta for peak ratio {r:.4}   {:.2} deg",
            qpm::estimate_theta(r)?.to_degrees()
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        let grid: Vec<f64> = (0..=800)
            .map(|i| -4.0 * std::f64::consts::PI + i as f64 * (8.0 * std::f64::consts::PI / 800.0))
            .collect();
        let curve = |th: f64, label: String| {
            PlotSeries::new(
                label,
                grid.iter()
                    .map(|&u| (u, qpm::double_pass_tuning_curve(u, th)))
                    .collect(),
            )
        };
        emit_plot(
            &[
                curve(0.0, "theta = 0".to_string()),
                curve(theta, format!("theta = {:.0} deg", theta.to_degrees())),
                curve(std::f64::consts::FRAC_PI_2, "theta = 90 deg".to_string()),
            ],
            dir.join("tuning_curve.svg"),
            &AxesSpec {
                title: "double-pass SHG tuning curve".to_string(),
                x_label: "dk L".to_string(),
                y_label: "intensity / (2AL)^2".to_string(),
                log_x: false,
            },
        )?;
        println!("tuning curve written to {}", dir.join("tuning_curve.svg").display());
    }
    Ok(())
}

fn run_squeeze(
    cfg: &ToolkitConfig,
    pump_mw: Option<f64>,
    freq_mhz: &[f64],
    out: Option<PathBuf>,
) -> Result<()> {
    let mut params = cfg.squeezing.params;
    if let Some(mw) = pump_mw {
        params.pump_power = mw * 1e-3;
    }
    params.validate()?;
    let t = params.output_coupler_transmittance;
    let meas = ShgMeasurement::new(
        cfg.qpm.shg_conversion_efficiency,
        cfg.cavity.output_coupler_transmittance,
        1.0 - cfg.cavity.output_coupler_transmittance,
    )?;
    let enl = qpm::extract_enl(&meas)?;
    println!(
        "threshold (T+L)^2/4E_NL      {:.4} W (configured: {:.4} W)",
        squeezing::threshold_power(t, params.intra_cavity_loss, enl)?,
        params.threshold_power
    );
    println!(
        "pump {:.1} mW -> xi = {:.4}",
        params.pump_power * 1e3,
        params.xi()
    );
    let freqs: Vec<f64> = if freq_mhz.is_empty() {
        vec![2.0, 100.0]
    } else {
        freq_mhz.to_vec()
    };
    for f_mhz in &freqs {
        let f = f_mhz * 1e6;
        let vs = squeezing::to_db(squeezing::variance(&params, f, Branch::Squeezed)?)?;
        let va = squeezing::to_db(squeezing::variance(&params, f, Branch::Anti)?)?;
        println!("f = {f_mhz:.3} MHz: squeezed {vs:+.3} dB, anti {va:+.3} dB");
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        let grid: Vec<f64> = (0..61)
            .map(|i| 1e6 * (300f64).powf(f64::from(i) / 60.0))
            .collect();
        let (s, a) = squeezing::predict_spectrum(&params, &grid)?;
        s.write_csv(dir.join("spectrum_squeezed.csv"))?;
        a.write_csv(dir.join("spectrum_anti.csv"))?;
        emit_plot(
            &[PlotSeries::from_trace(&s), PlotSeries::from_trace(&a)],
            dir.join("spectrum.svg"),
            &AxesSpec {
                title: format!("model noise spectrum at {:.0} mW pump", params.pump_power * 1e3),
                x_label: "frequency (Hz)".to_string(),
                y_label: "noise relative to shot (dB)".to_string(),
                log_x: true,
            },
        )?;
        println!("spectrum written to {}", dir.display());
    }
    Ok(())
}

fn run_fit(
    cfg: &ToolkitConfig,
    csv: &PathBuf,
    free_eta: bool,
    linear: bool,
    guess_pth: Option<f64>,
    guess_fhwhm_mhz: Option<f64>,
) -> Result<()> {
    let observations = fit::parse_observations_csv(csv)?;
    let sq = &cfg.squeezing.params;
    let fixed = FixedParams {
        output_coupler_transmittance: sq.output_coupler_transmittance,
        intra_cavity_loss: sq.intra_cavity_loss,
        total_detection_loss: if free_eta {
            None
        } else {
            Some(sq.total_detection_loss)
        },
    };
    let max_pump = observations
        .iter()
        .map(|o| o.pump_power)
        .fold(0.0f64, f64::max);
    let default_pth = if sq.threshold_power > max_pump {
        sq.threshold_power
    } else {
        2.0 * max_pump
    };
    let guess = FitParams {
        threshold_power: guess_pth.unwrap_or(default_pth),
        cavity_half_width: guess_fhwhm_mhz.map_or(sq.cavity_half_width, |m| m * 1e6),
        detection_loss: if free_eta { Some(sq.total_detection_loss) } else { None },
    };
    let config = FitConfig {
        linear_residuals: linear,
        ..FitConfig::default()
    };
    let result = fit::fit_squeezing(&observations, &fixed, &guess, &config)?;
    println!("observations = {}", observations.len());
    println!("converged = {}", result.converged);
    println!("iterations = {}", result.iterations);
    println!("threshold_power_w = {:.6}", result.threshold_power);
    println!(
        "threshold_power_stderr_w = {:.6}",
        result.standard_errors.threshold_power
    );
    println!("cavity_half_width_hz = {:.3}", result.cavity_half_width);
    println!(
        "cavity_half_width_stderr_hz = {:.3}",
        result.standard_errors.cavity_half_width
    );
    if let Some(eta) = result.detection_loss {
        println!("detection_loss = {eta:.6}");
        println!(
            "detection_loss_stderr = {:.6}",
            result.standard_errors.detection_loss.unwrap_or(f64::NAN)
        );
    }
    println!("residual_norm = {:.6}", result.residual_norm);
    Ok(())
}

fn run_waveguide(
    cfg: &ToolkitConfig,
    core_um: Option<f64>,
    sweep: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let source = cfg.source_beam()?;
    println!("source waist = {:.4} um (flat phase)", source.waist_radius * 1e6);
    if sweep {
        let sizes = cfg.sweep_sizes_um();
        let result = waveguide::sweep_core_size(&cfg.waveguide.spec, &sizes, &source)?;
        for p in &result.points {
            match (p.efficiency, &p.error) {
                (Some(eta), _) => println!("core {:>6.1} um: coupling {eta:.5}", p.core_size_um),
                (None, Some(err)) => println!("core {:>6.1} um: failed ({err})", p.core_size_um),
                _ => {}
            }
        }
        if let Some((size, eta)) = result.maximum {
            println!("maximum coupling {eta:.5} at {size:.2} um");
        }
        if let Some(dir) = out {
            std::fs::create_dir_all(&dir)?;
            result.write_csv(dir.join("coupling_sweep.csv"))?;
            emit_plot(
                &[PlotSeries::from_sweep(&result)],
                dir.join("coupling_sweep_plot.svg"),
                &AxesSpec {
                    title: format!(
                        "coupling of a w0 = {:.1} um Gaussian vs core size",
                        source.waist_radius * 1e6
                    ),
                    x_label: "core size (um)".to_string(),
                    y_label: "coupling efficiency".to_string(),
                    log_x: false,
                },
            )?;
            println!("sweep files written to {}", dir.display());
        }
    } else {
        let spec = waveguide::WaveguideSpec {
            core_size_um: core_um.unwrap_or(cfg.waveguide.spec.core_size_um),
            ..cfg.waveguide.spec
        };
        let mode = waveguide::solve_fundamental_mode(&spec)?;
        println!("core size = {:.2} um", spec.core_size_um);
        println!("n_eff = {:.6}", mode.n_eff.unwrap_or(f64::NAN));
        println!(
            "coupling to source = {:.5}",
            waveguide::overlap_efficiency(&mode, &source)?
        );
        println!("boundary/peak = {:.2e}", mode.boundary_peak_ratio());
        if let Some(dir) = out {
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!("mode_{:.0}um.txt", spec.core_size_um));
            mode.write_grid_file(&path)?;
            println!("mode field written to {}", path.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_arguments_is_usage_error() {
        let code = run(Vec::<String>::new());
        assert_eq!(code, 1);
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run(["frobnicate"]), 1);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["--help"]), 0);
    }

    #[test]
    fn cavity_runs_with_builtin_defaults() {
        assert_eq!(run(["cavity"]), 0);
    }

    #[test]
    fn squeeze_with_flags() {
        assert_eq!(run(["squeeze", "--pump-mw", "360", "--freq-mhz", "2"]), 0);
    }

    #[test]
    fn missing_config_file_is_validation_exit() {
        assert_eq!(run(["cavity", "--config", "/nonexistent/nope.cfg"]), 1);
    }
}
