// Evaluates the analytic turbofan model at a few flight conditions.
//
// Run with `cargo run --example simulate_engine`.

use echoforge::simulator::{atmosphere, sfc};
use echoforge::{FlightPoint, TurbofanModel};

pub fn run_example() -> echoforge::Result<Vec<echoforge::EngineOutputs>> {
    let model = TurbofanModel::default();
    let points = [
        FlightPoint::new(0.0, 0.0, 0.0, 5000.0),
        FlightPoint::new(0.0, 0.0, 0.5, 4000.0),
        FlightPoint::new(10000.0, -35.0, 0.0, 2000.0),
        FlightPoint::new(10000.0, 35.0, 0.58, 5000.0),
    ];
    let outputs = model.simulate_batch(&points)?;
    println!(
        "{:>8}{:>6}{:>6}{:>7} | {:>9}{:>9}{:>9}{:>9}{:>8}",
        "alt", "dts", "mach", "nl", "ShH_N", "Tt", "Fn", "Wf", "SFC"
    );
    for (p, x) in points.iter().zip(&outputs) {
        let a = atmosphere(p.alt, p.dts, p.mach)?;
        println!(
            "{:>8}{:>6}{:>6}{:>7} | {:>9.1}{:>9.1}{:>9.1}{:>9.1}{:>8.4}   (delta_t {:.4})",
            p.alt,
            p.dts,
            p.mach,
            p.nl,
            x.shh_n,
            x.f049_tt,
            x.fn_lbf,
            x.wfuel_pph,
            sfc(x)?,
            a.delta_t
        );
    }

    match model.simulate(&FlightPoint::new(12000.0, 0.0, 0.3, 3000.0)) {
        Err(e) => println!("outside the envelope: {e}"),
        Ok(_) => unreachable!("12000 ft is above the envelope"),
    }
    Ok(outputs)
}

#[allow(dead_code)]
fn main() -> echoforge::Result<()> {
    run_example().map(|_| ())
}
