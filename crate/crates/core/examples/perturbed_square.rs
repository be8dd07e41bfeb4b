//! A slightly perturbed square: its high ridge, the limit ground state and
//! how the contact set follows the corner streamlines.
//!
//!     cargo run --release --example perturbed_square -- [1/h]

use infground::analysis::theorem1_check;
use infground::geometry::Polygon;
use infground::pipeline::{contact_stage, solve, trace_suite, SeedConfig};
use std::path::Path;

fn main() -> infground::Result<()> {
    let n: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(32.0);
    let poly = Polygon::load(
        &Path::new(env!("CARGO_MANIFEST_DIR")).join("polygons/perturbed_square.json"),
    )?;
    let solved = solve(&poly, 1.0 / n, &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0])?;
    let r = &solved.ridge;
    println!(
        "{}: R = {:.5}, Λ∞ = {:.5}, ridge {:?} to {:?}",
        poly.name(),
        r.inradius,
        r.lambda_inf,
        r.endpoints[0],
        r.endpoints[1]
    );
    println!(
        "top rung λ^(1/p) = {:.5}, Richardson gap {:.2e}",
        solved.limit.lambda_root, solved.limit.richardson_gap
    );
    let stage = contact_stage(&solved, 0.05);
    let suite = trace_suite(&solved, &SeedConfig::default())?;
    let t = theorem1_check(&stage.contact, &suite.attracting, r);
    println!(
        "contact nodes {}, distance to structure {:.4} (limit {:.4})",
        t.nodes, t.distance, t.threshold
    );
    Ok(())
}
