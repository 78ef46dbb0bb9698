//! Spectrum-analyzer trace handling: build a raw squeezed trace and a
//! shot-noise trace (as they come off the instrument, in dBm), subtract
//! them, and plot the normalized result.

use opokit::plot::{emit_plot, AxesSpec, PlotSeries};
use opokit::squeezing::{to_db, variance, Branch, SqueezerParams};
use opokit::trace::{normalize_to_shot, NoiseTrace, PowerReference, TraceMetadata};

fn main() -> opokit::Result<()> {
    let params = SqueezerParams::reference_design();
    let metadata = TraceMetadata {
        rbw_hz: Some(1e6),
        vbw_hz: Some(300.0),
        pump_power_w: Some(params.pump_power),
        lo_power_w: Some(3.5e-3),
    };

    // a synthetic instrument with a gently sloped shot-noise floor
    let freqs: Vec<f64> = (0..61).map(|i| 1e6 * (300f64).powf(i as f64 / 60.0)).collect();
    let floor = |f: f64| -63.0 - 3.0 * (f / 300e6);
    let shot = NoiseTrace::new(
        "shot noise",
        freqs.iter().map(|&f| (f, floor(f))).collect(),
        PowerReference::AbsoluteDbm,
        metadata,
    )?;
    let squeezed = NoiseTrace::new(
        "squeezed vacuum",
        freqs
            .iter()
            .map(|&f| {
                let level = to_db(variance(&params, f, Branch::Squeezed)?)?;
                Ok((f, floor(f) + level))
            })
            .collect::<opokit::Result<Vec<_>>>()?,
        PowerReference::AbsoluteDbm,
        metadata,
    )?;

    let normalized = normalize_to_shot(&squeezed, &shot)?;
    let (f0, p0) = normalized.points[0];
    println!("at {:.1} MHz: {p0:.2} dB relative to shot", f0 / 1e6);

    std::fs::create_dir_all("examples_out")?;
    shot.write_csv("examples_out/shot.csv")?;
    squeezed.write_csv("examples_out/squeezed_raw.csv")?;
    normalized.write_csv("examples_out/squeezed_rel_shot.csv")?;
    emit_plot(
        &[PlotSeries::from_trace(&normalized)],
        "examples_out/normalized_trace.svg",
        &AxesSpec {
            title: "squeezed trace after shot-noise normalization".into(),
            x_label: "frequency (Hz)".into(),
            y_label: "dB relative to shot".into(),
            log_x: true,
        },
    )?;
    println!("wrote examples_out/squeezed_rel_shot.csv and normalized_trace.svg");
    println!("(the same operation is available as `opokit normalize --signal ... --shot ...`)");
    Ok(())
}
