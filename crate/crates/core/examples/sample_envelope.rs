// Latin hypercube sampling of the flight envelope.
//
// Run with `cargo run --example sample_envelope`.

use echoforge::{Envelope, InputDim};

pub fn run_example() -> echoforge::Result<Vec<echoforge::FlightPoint>> {
    let envelope = Envelope::default();
    for alt in [-2000.0, 4000.0, 10000.0] {
        let (lo, hi) = envelope.mach_bounds(alt)?;
        println!("altitude {alt:>7} ft: Mach in [{lo:.3}, {hi:.3}]");
    }

    let points = envelope.sample_lhs(8, 42)?;
    println!("{:>10}{:>8}{:>8}{:>8}", "alt", "dts", "mach", "nl");
    for p in &points {
        envelope.check(p)?;
        println!("{:>10.1}{:>8.2}{:>8.4}{:>8.1}", p.alt, p.dts, p.mach, p.nl);
    }
    let lowest = InputDim::ALL.map(|d| {
        points
            .iter()
            .map(|p| p.get(d))
            .fold(f64::INFINITY, f64::min)
    });
    println!("per-dimension minima: {lowest:?}");
    Ok(points)
}

#[allow(dead_code)]
fn main() -> echoforge::Result<()> {
    run_example().map(|_| ())
}
