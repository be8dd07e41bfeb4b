//! The contact set estimate of the limit ground state: its size over a
//! range of thresholds and its distance from the attracting streamlines.
//!
//!     cargo run --release --example contact_set -- [1/h] [square|rectangle]

use infground::analysis::{theorem1_check, ContactEstimate};
use infground::geometry::Polygon;
use infground::pipeline::{contact_stage, solve, trace_suite, SeedConfig};

fn main() -> infground::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(32.0);
    let poly = match args.next().as_deref() {
        Some("rectangle") => Polygon::rectangle(2.0, 1.0)?,
        _ => Polygon::unit_square(),
    };
    let solved = solve(&poly, 1.0 / n, &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0])?;
    let stage = contact_stage(&solved, 0.05);
    println!(
        "{}: Λ∞ = {:.4}, examined {} nodes, irregular {}",
        poly.name(),
        solved.ridge.lambda_inf,
        stage.s.examined,
        stage.s.irregular
    );
    for eps in [0.2, 0.1, 0.05, 0.025] {
        let c = ContactEstimate::from_s_field(&stage.s, eps);
        println!(
            "  ε = {eps:<6} nodes {:>5}  measure {:.5}",
            c.nodes.len(),
            c.measure
        );
    }
    let suite = trace_suite(&solved, &SeedConfig::default())?;
    let r = theorem1_check(&stage.contact, &suite.attracting, &solved.ridge);
    println!(
        "  distance to attracting curves and ridge {:.4} (limit {:.4})",
        r.distance, r.threshold
    );
    Ok(())
}
