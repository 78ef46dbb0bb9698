//! Acceptance suite: every reference figure the toolkit must reproduce,
//! at its stated tolerance, one criterion per test. Each test prints a
//! PASS/FAIL line (visible with `--nocapture`) and asserts.

use opokit::cavity::{self, CavitySpec, GaussianBeam};
use opokit::config::ToolkitConfig;
use opokit::fit::{self, FitConfig, FitParams, FixedParams};
use opokit::qpm::{self, ShgMeasurement};
use opokit::report::tolerances as tol;
use opokit::squeezing::{self, Branch, SqueezerParams};
use opokit::waveguide::{self, WaveguideSpec};

fn paper_cfg_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../paper.cfg")
        .canonicalize()
        .expect("paper.cfg at the repository root")
}

fn check(criterion: &str, name: &str, value: f64, (target, tolerance): (f64, f64)) {
    let ok = (value - target).abs() <= tolerance;
    println!(
        "ACCEPTANCE {criterion} {name}: {} (value {value:.6}, target {target:.6} +/- {tolerance:.6})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "{criterion} {name}: {value} outside {target} +/- {tolerance}"
    );
}

#[test]
fn criterion_01_cavity_figures_of_merit() {
    let spec = CavitySpec::reference_design();
    check(
        "1",
        "round trip (mm)",
        cavity::round_trip_optical_length(&spec).unwrap() * 1e3,
        tol::ROUND_TRIP_MM,
    );
    check(
        "1",
        "finesse",
        cavity::finesse_small_loss_approx(&spec).unwrap(),
        tol::FINESSE,
    );
    check(
        "1",
        "linewidth (MHz)",
        cavity::linewidth_fwhm_small_loss_approx(&spec).unwrap() / 1e6,
        tol::LINEWIDTH_MHZ,
    );
    // the exact Airy linewidth also lands inside the quoted band
    check(
        "1",
        "linewidth, Airy (MHz)",
        cavity::cavity_linewidth_fwhm(&spec).unwrap() / 1e6,
        tol::LINEWIDTH_MHZ,
    );
}

#[test]
fn criterion_02_resonant_waist() {
    let spec = CavitySpec::reference_design();
    let beam = cavity::plano_concave_waist(&spec).unwrap();
    check("2", "waist (um)", beam.waist_radius * 1e6, tol::WAIST_UM);
}

#[test]
fn criterion_03_enhancement_and_enl() {
    let enh = qpm::cavity_enhancement_factor(0.1, 0.9).unwrap();
    check("3", "enhancement", enh, tol::ENHANCEMENT);
    let meas = ShgMeasurement::new(2.24, 0.1, 0.9).unwrap();
    check("3", "E_NL (1/W)", qpm::extract_enl(&meas).unwrap(), tol::ENL_PER_W);
}

#[test]
fn criterion_04_threshold() {
    let meas = ShgMeasurement::new(2.24, 0.1, 0.9).unwrap();
    let enl = qpm::extract_enl(&meas).unwrap();
    check(
        "4",
        "threshold (W)",
        squeezing::threshold_power(0.10, 0.0038, enl).unwrap(),
        tol::THRESHOLD_W,
    );
    check(
        "4",
        "threshold, phase-optimized (W)",
        squeezing::threshold_power(0.10, 0.0038, enl / 0.64).unwrap(),
        tol::THRESHOLD_OPTIMIZED_W,
    );
}

#[test]
fn criterion_05_worst_case_penalty() {
    check("5", "penalty", qpm::worst_case_penalty(), tol::WORST_CASE_PENALTY);
    let peak = qpm::double_pass_peak(std::f64::consts::FRAC_PI_2);
    let u = peak.x.abs();
    check(
        "5",
        "maximizer stationarity |tan(u/2) - u|",
        ((u / 2.0).tan() - u).abs(),
        tol::PENALTY_MAXIMIZER_RESIDUAL,
    );
}

#[test]
fn criterion_06_model_vs_measured_levels() {
    let p = SqueezerParams::reference_design();
    let level = |f: f64, b: Branch| {
        squeezing::to_db(squeezing::variance(&p, f, b).unwrap()).unwrap()
    };
    check(
        "6",
        "squeezing at 2 MHz (dB)",
        level(2e6, Branch::Squeezed),
        tol::SQUEEZED_2MHZ_DB,
    );
    check(
        "6",
        "squeezing at 100 MHz (dB)",
        level(100e6, Branch::Squeezed),
        tol::SQUEEZED_100MHZ_DB,
    );
    check(
        "6",
        "anti-squeezing at 2 MHz (dB)",
        level(2e6, Branch::Anti),
        tol::ANTI_2MHZ_DB,
    );
}

#[test]
fn criterion_07_fit_round_trip() {
    let truth = SqueezerParams::reference_design();
    let powers = [0.090, 0.139, 0.229, 0.360];
    let freqs: Vec<f64> = (0..13)
        .map(|i| 1e6 * (300f64).powf(i as f64 / 12.0))
        .collect();
    let fixed = FixedParams::reference_design();
    let guess = FitParams {
        threshold_power: 1.2,
        cavity_half_width: 60e6,
        detection_loss: None,
    };

    // noiseless data: exact recovery
    let obs = fit::synth_dataset(&truth, &powers, &freqs, 0.0, 0).unwrap();
    let clean = fit::fit_squeezing(&obs, &fixed, &guess, &FitConfig::default()).unwrap();
    check(
        "7",
        "noiseless threshold recovery (rel)",
        (clean.threshold_power - 1.7).abs() / 1.7,
        tol::FIT_RECOVERY_REL,
    );
    check(
        "7",
        "noiseless half-width recovery (rel)",
        (clean.cavity_half_width - 92e6).abs() / 92e6,
        tol::FIT_RECOVERY_REL,
    );

    // 0.1 dB noise: 100 seeds, both parameters within 3 standard errors
    let mut hits = 0u32;
    for seed in 0..100u64 {
        let noisy = fit::synth_dataset(&truth, &powers, &freqs, 0.1, seed).unwrap();
        let fitres = fit::fit_squeezing(&noisy, &fixed, &guess, &FitConfig::default()).unwrap();
        let ok_p =
            (fitres.threshold_power - 1.7).abs() <= 3.0 * fitres.standard_errors.threshold_power;
        let ok_f = (fitres.cavity_half_width - 92e6).abs()
            <= 3.0 * fitres.standard_errors.cavity_half_width;
        if ok_p && ok_f {
            hits += 1;
        }
    }
    let ok = hits >= 95;
    println!(
        "ACCEPTANCE 7 Monte-Carlo 3-sigma coverage: {} ({hits}/100 seeds)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "only {hits}/100 seeds recovered within 3 standard errors");
}

#[test]
fn criterion_08_waveguide_coupling() {
    let template = WaveguideSpec::reference_design();
    let source = GaussianBeam::new(23e-6, 0.0, 1550e-9).unwrap();
    let sizes: Vec<f64> = (0..26).map(|i| 40.0 + 2.0 * i as f64).collect();
    let sweep = waveguide::sweep_core_size(&template, &sizes, &source).unwrap();
    assert!(sweep.points.iter().all(|p| p.efficiency.is_some()));
    let (best_size, best_eta) = sweep.maximum.unwrap();
    check("8", "peak coupling", best_eta, tol::PEAK_COUPLING);
    check("8", "optimal core (um)", best_size, tol::OPTIMAL_CORE_UM);

    // unimodal over the tested range: the discrete derivative changes
    // sign exactly once
    let etas: Vec<f64> = sweep.points.iter().map(|p| p.efficiency.unwrap()).collect();
    let signs: Vec<bool> = etas.windows(2).map(|w| w[1] > w[0]).collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    println!(
        "ACCEPTANCE 8 unimodal sweep: {} ({changes} sign change)",
        if changes == 1 { "PASS" } else { "FAIL" }
    );
    assert_eq!(changes, 1);

    // grid halving at the 63 um core moves the coupling by < 0.2 pp and
    // n_eff by < 1e-5
    let mode_h = waveguide::solve_fundamental_mode(&template).unwrap();
    let eta_h = waveguide::overlap_efficiency(&mode_h, &source).unwrap();
    let fine = WaveguideSpec {
        grid_spacing_um: template.grid_spacing_um / 2.0,
        ..template
    };
    let mode_h2 = waveguide::solve_fundamental_mode(&fine).unwrap();
    let eta_h2 = waveguide::overlap_efficiency(&mode_h2, &source).unwrap();
    check(
        "8",
        "grid-halving coupling shift (pp)",
        (eta_h - eta_h2).abs() * 100.0,
        (0.0, 0.2),
    );
    check(
        "8",
        "grid-halving n_eff shift",
        (mode_h.n_eff.unwrap() - mode_h2.n_eff.unwrap()).abs(),
        (0.0, 1e-5),
    );
}

#[test]
fn criterion_09_property_suites() {
    use rand::{Rng, SeedableRng};

    // minimum-uncertainty product: exactly 1 without loss
    let mut worst_lossless = 0.0f64;
    for i in 0..100 {
        let xi = i as f64 / 100.0;
        let p = SqueezerParams {
            total_detection_loss: 0.0,
            intra_cavity_loss: 0.0,
            pump_power: xi * 1.7,
            ..SqueezerParams::reference_design()
        };
        for &f in &[0.0, 1e6, 50e6, 92e6, 1e9] {
            let prod = squeezing::variance(&p, f, Branch::Squeezed).unwrap()
                * squeezing::variance(&p, f, Branch::Anti).unwrap();
            worst_lossless = worst_lossless.max((prod - 1.0).abs());
        }
    }
    check("9", "lossless V+V- deviation", worst_lossless, (0.0, 1e-12));

    // with loss the product never dips below 1
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut worst_lossy = f64::INFINITY;
    for _ in 0..10_000 {
        let p = SqueezerParams {
            output_coupler_transmittance: rng.random_range(0.01..0.5),
            intra_cavity_loss: rng.random_range(0.0..0.3),
            total_detection_loss: rng.random_range(0.0..0.95),
            pump_power: rng.random_range(0.0..0.9999),
            threshold_power: 1.0,
            cavity_half_width: rng.random_range(1e6..1e9),
        };
        let f = rng.random_range(0.0..2e9);
        let prod = squeezing::variance(&p, f, Branch::Squeezed).unwrap()
            * squeezing::variance(&p, f, Branch::Anti).unwrap();
        worst_lossy = worst_lossy.min(prod);
    }
    let ok = worst_lossy >= 1.0 - 1e-12;
    println!(
        "ACCEPTANCE 9 lossy V+V- >= 1: {} (min product {worst_lossy})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);

    // tuning-curve identities on a dense grid
    let mut worst_inphase = 0.0f64;
    let mut worst_quadrature = 0.0f64;
    let n = 40_001;
    for i in 0..n {
        let u = -4.0 * std::f64::consts::PI
            + 8.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64;
        let s = qpm::sinc(u);
        worst_inphase =
            worst_inphase.max((qpm::double_pass_tuning_curve(u, 0.0) - s * s).abs());
        let q = qpm::double_pass_tuning_curve(u, std::f64::consts::FRAC_PI_2);
        if u.abs() > 1e-9 {
            let r = ((1.0 - u.cos()) / u).powi(2);
            worst_quadrature = worst_quadrature.max((q - r).abs());
        } else {
            worst_quadrature = worst_quadrature.max(q);
        }
    }
    check("9", "in-phase identity deviation", worst_inphase, (0.0, 1e-12));
    check("9", "quadrature identity deviation", worst_quadrature, (0.0, 1e-12));

    // eigen-solver self-consistency on the reference guide
    let spec = WaveguideSpec::reference_design();
    let mode = waveguide::solve_fundamental_mode(&spec).unwrap();
    check(
        "9",
        "eigen residual",
        waveguide::eigen_residual(&spec, &mode).unwrap(),
        (0.0, 1e-8),
    );

    // overlap efficiencies stay inside [0, 1]
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let w1 = rng.random_range(3e-6..60e-6);
        let w2 = rng.random_range(3e-6..60e-6);
        let b1 = GaussianBeam::new(w1, 0.0, 1550e-9).unwrap();
        let b2 = GaussianBeam::new(w2, 0.0, 1550e-9).unwrap();
        let g1 = waveguide::gaussian_field(120, 120, 1.5, &b1);
        let g2 = waveguide::gaussian_field(120, 120, 1.5, &b2);
        let o = waveguide::field_overlap(&g1, &g2).unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&o), "overlap {o} out of bounds");
    }
    let o = waveguide::overlap_efficiency(
        &mode,
        &GaussianBeam::new(23e-6, 0.0, 1550e-9).unwrap(),
    )
    .unwrap();
    assert!((0.0..=1.0).contains(&o));
    println!("ACCEPTANCE 9 overlap bounds: PASS");
}

#[test]
fn criterion_10_report_determinism() {
    use std::process::Command;

    let bin = env!("CARGO_BIN_EXE_opokit");
    let cfg = paper_cfg_path();
    let base = std::env::temp_dir().join(format!("opokit_determinism_{}", std::process::id()));
    let run = |out: &std::path::Path, threads: &str| {
        let status = Command::new(bin)
            .args(["report", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .expect("report run");
        assert!(
            status.status.success(),
            "report failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
    };
    let out1 = base.join("run1");
    let out2 = base.join("run2");
    let out3 = base.join("run3");
    run(&out1, "1");
    run(&out2, "1");
    run(&out3, "4");

    let mut names: Vec<String> = std::fs::read_dir(&out1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"report.txt".to_string()));
    for name in &names {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        let c = std::fs::read(out3.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert_eq!(a, c, "{name} differs across thread counts");
    }
    println!(
        "ACCEPTANCE 10 determinism: PASS ({} artifacts byte-identical across runs and thread counts)",
        names.len()
    );
    std::fs::remove_dir_all(&base).ok();
}

#[test]
fn report_on_reference_config_passes_all_checks() {
    let cfg = ToolkitConfig::load(paper_cfg_path()).unwrap();
    let report = opokit::report::run_report(&cfg, None).unwrap();
    for c in &report.checks {
        println!(
            "REPORT CHECK {}: {} (value {:.6}, target {:.6} +/- {:.6})",
            c.name,
            if c.passed() { "PASS" } else { "FAIL" },
            c.computed,
            c.target,
            c.tolerance
        );
    }
    assert!(report.all_passed(), "some report checks failed");
}
