//! Squeezed and anti-squeezed noise spectra below threshold, the escape
//! efficiency and loss budget behind them, and the pump-power family of
//! curves.

use opokit::plot::{emit_plot, AxesSpec, PlotSeries};
use opokit::squeezing::{
    equivalent_loss_from_clearance, escape_efficiency, predict_spectrum, threshold_power, to_db,
    variance, Branch, LossBudget, SqueezerParams,
};

fn main() -> opokit::Result<()> {
    let params = SqueezerParams::reference_design();

    println!(
        "threshold from E_NL    {:.3} W",
        threshold_power(0.10, 0.0038, 1.5534e-3)?
    );
    println!("escape efficiency      {:.4}", escape_efficiency(0.10, 0.0038)?);

    let budget = LossBudget::new()
        .with("propagation", 0.03)
        .with("mode_mismatch", 0.02)
        .with("photodiode", 0.01)
        .with("circuit_equivalent", 0.01);
    println!("loss budget total      {:.4}", budget.compose()?);
    println!(
        "14 dB clearance alone would already cost {:.3} equivalent loss",
        equivalent_loss_from_clearance(14.0)?
    );

    println!("\nmodel levels at 360 mW pump:");
    for f in [2e6, 50e6, 100e6, 300e6] {
        println!(
            "  {:>5.0} MHz: {:+.2} dB squeezed, {:+.2} dB anti",
            f / 1e6,
            to_db(variance(&params, f, Branch::Squeezed)?)?,
            to_db(variance(&params, f, Branch::Anti)?)?
        );
    }

    // pump-power family over the measurement band
    let freqs: Vec<f64> = (0..61).map(|i| 1e6 * (300f64).powf(i as f64 / 60.0)).collect();
    let mut series = Vec::new();
    for pump_mw in [90.0, 139.0, 229.0, 360.0] {
        let p = SqueezerParams {
            pump_power: pump_mw * 1e-3,
            ..params
        };
        let (s, a) = predict_spectrum(&p, &freqs)?;
        series.push(PlotSeries::new(
            format!("squeezed, {pump_mw:.0} mW"),
            s.points,
        ));
        series.push(PlotSeries::new(format!("anti, {pump_mw:.0} mW"), a.points));
    }
    std::fs::create_dir_all("examples_out")?;
    emit_plot(
        &series,
        "examples_out/squeezing_spectrum.svg",
        &AxesSpec {
            title: "model noise spectra vs pump power".into(),
            x_label: "frequency (Hz)".into(),
            y_label: "noise relative to shot (dB)".into(),
            log_x: true,
        },
    )?;
    println!("\nspectra written to examples_out/squeezing_spectrum.svg (+ .csv)");
    Ok(())
}
