//! End-to-end checks of the `opokit` binary: exit codes, printed
//! figures, and the file formats the subcommands emit.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_opokit")
}

fn paper_cfg() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../paper.cfg")
        .canonicalize()
        .unwrap()
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn opokit")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("opokit_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "stderr was: {text}");
}

#[test]
fn unknown_flag_exits_1() {
    let out = run(&["cavity", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cavity_prints_reference_figures() {
    let cfg = paper_cfg();
    let out = run(&["cavity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("23.11"), "waist missing: {text}");
    assert!(text.contains("60.53"), "finesse missing: {text}");
    assert!(text.contains("223.4") || text.contains("223.5"), "linewidth missing: {text}");
}

#[test]
fn squeeze_prints_model_levels() {
    let out = run(&["squeeze", "--pump-mw", "360", "--freq-mhz", "2", "--freq-mhz", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("-6.446"), "2 MHz squeezing missing: {text}");
    assert!(text.contains("+8.22"), "2 MHz anti-squeezing missing: {text}");
    assert!(text.contains("-2.990"), "100 MHz squeezing missing: {text}");
}

#[test]
fn squeeze_rejects_pump_above_threshold() {
    let out = run(&["squeeze", "--pump-mw", "2000"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn qpm_prints_penalty_and_theta() {
    let out = run(&["qpm", "--ratio", "0.6372"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0.52506"), "penalty missing: {text}");
    assert!(text.contains("75.0") || text.contains("74.9"), "theta missing: {text}");
}

#[test]
fn fit_runs_on_csv_and_recovers_reference_values() {
    use opokit::fit;
    use opokit::squeezing::SqueezerParams;

    let dir = tmpdir("fit");
    let freqs: Vec<f64> = (0..9).map(|i| 1e6 * (300f64).powf(i as f64 / 8.0)).collect();
    let obs = fit::synth_dataset(
        &SqueezerParams::reference_design(),
        &[0.090, 0.139, 0.229, 0.360],
        &freqs,
        0.05,
        12,
    )
    .unwrap();
    let csv = dir.join("obs.csv");
    std::fs::write(&csv, fit::observations_to_csv(&obs)).unwrap();

    let out = run(&[
        "fit",
        "--csv",
        csv.to_str().unwrap(),
        "--guess-pth",
        "1.2",
        "--guess-fhwhm-mhz",
        "60",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("converged = true"), "{text}");
    let pth: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("threshold_power_w = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((pth - 1.7).abs() < 0.1, "fitted threshold {pth}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fit_with_malformed_csv_exits_1() {
    let dir = tmpdir("fitbad");
    let csv = dir.join("bad.csv");
    std::fs::write(&csv, "pump_power_w,frequency_hz,branch,level_db,uncertainty_db\nx,y,z,w,v\n")
        .unwrap();
    let out = run(&["fit", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn waveguide_numerical_failure_exits_2() {
    // near-cutoff guide on a tight domain: no contained guided mode
    let dir = tmpdir("wgfail");
    let cfg = dir.join("weak.cfg");
    std::fs::write(
        &cfg,
        "waveguide.core_size = 12 um\n\
         waveguide.relative_index_difference = 0.0001\n\
         waveguide.grid_spacing = 0.5 um\n\
         waveguide.domain_padding = 12 um\n",
    )
    .unwrap();
    let out = run(&["waveguide", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn waveguide_solve_writes_mode_grid_file() {
    let dir = tmpdir("wgmode");
    let cfg = dir.join("small.cfg");
    // a small, quick guide
    std::fs::write(
        &cfg,
        "waveguide.core_size = 20 um\n\
         waveguide.grid_spacing = 1 um\n\
         waveguide.domain_padding = 20 um\n\
         waveguide.source_waist = 8 um\n",
    )
    .unwrap();
    let out = run(&[
        "waveguide",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mode = opokit::waveguide::ModeField::read_grid_file(dir.join("mode_20um.txt")).unwrap();
    assert_eq!(mode.nx, 59);
    assert!(mode.n_eff.unwrap() > 1.444);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn normalize_subtracts_shot_noise() {
    let dir = tmpdir("norm");
    let shot = dir.join("shot.csv");
    let sig = dir.join("sig.csv");
    std::fs::write(&shot, "frequency_hz,power_db\n1e6,-63.0\n2e6,-62.5\n").unwrap();
    std::fs::write(&sig, "frequency_hz,power_db\n1e6,-69.2\n2e6,-68.7\n").unwrap();
    let out = run(&[
        "normalize",
        "--signal",
        sig.to_str().unwrap(),
        "--shot",
        shot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("-6.2"), "{text}");
    assert!(text.contains("relative_to_shot"), "{text}");

    // mismatched grids are refused
    let other = dir.join("other.csv");
    std::fs::write(&other, "frequency_hz,power_db\n1e6,-69.2\n3e6,-68.7\n").unwrap();
    let out = run(&[
        "normalize",
        "--signal",
        other.to_str().unwrap(),
        "--shot",
        shot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn squeeze_emitted_csvs_reparse_losslessly() {
    let dir = tmpdir("sqout");
    let out = run(&["squeeze", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for name in ["spectrum_squeezed.csv", "spectrum_anti.csv"] {
        let path = dir.join(name);
        let trace = opokit::trace::parse_trace_csv(&path).unwrap();
        assert_eq!(trace.points.len(), 61);
        // write/parse once more: values identical
        let again = opokit::trace::parse_trace_str(&trace.to_csv_string(), "mem").unwrap();
        for (a, b) in trace.points.iter().zip(&again.points) {
            assert!((a.1 - b.1).abs() < 1e-9);
            assert_eq!(a.0, b.0);
        }
    }
    assert!(dir.join("spectrum.svg").exists());
    assert!(dir.join("spectrum.csv").exists());
    std::fs::remove_dir_all(&dir).ok();
}
