//! Attracting streamlines, medians and generic traces of the limit ground
//! state on the unit square, with their first events and arc lengths.
//!
//!     cargo run --release --example streamline_suite -- [1/h]

use infground::geometry::Polygon;
use infground::pipeline::{solve, trace_suite, SeedConfig};
use infground::streamlines::arc_metrics;

fn main() -> infground::Result<()> {
    let n: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(32.0);
    let poly = Polygon::unit_square();
    let solved = solve(&poly, 1.0 / n, &[2.0, 4.0, 8.0, 16.0, 32.0, 64.0])?;
    let suite = trace_suite(&solved, &SeedConfig::default())?;
    for (j, g) in suite.attracting.iter().enumerate() {
        println!(
            "attracting {j}: {} points, length {:.4}, {:?}",
            g.len(),
            g.arc_length,
            g.termination
        );
    }
    for (k, m) in suite.medians.iter().enumerate() {
        println!(
            "median {k}: side max at {:.3}, straightness {:.2e} (limit {:.2e})",
            m.side_max.at, m.straightness, m.threshold
        );
    }
    for (i, t) in suite.generic.iter().enumerate() {
        let e = &t.event;
        let joined = e
            .join
            .map(|(id, _)| format!("joins {id}"))
            .unwrap_or_else(|| "no join".into());
        match arc_metrics(&t.curve, &solved.limit, &poly, e.index, e.detect_index) {
            Ok(am) => println!(
                "generic {i:>2}: {joined}, S Λ∞ = {:.4}, ratio S = {:.4}",
                am.length_lambda, am.ratio_length
            ),
            Err(_) => println!("generic {i:>2}: {joined}"),
        }
    }
    Ok(())
}
