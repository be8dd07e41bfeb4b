//! Continuation in p for the unit square and the 2x1 rectangle.
//!
//!     cargo run --release --example ground_state_ladder -- [1/h]

use infground::eigensolver::{continuation_solve, LadderConfig};
use infground::fields::rasterize;
use infground::geometry::{chebyshev_set, Polygon};
use std::sync::Arc;
use std::time::Instant;

fn main() -> infground::Result<()> {
    let n: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(64.0);
    for poly in [Polygon::unit_square(), Polygon::rectangle(2.0, 1.0)?] {
        let ridge = chebyshev_set(&poly);
        let grid = Arc::new(rasterize(&poly, 1.0 / n)?);
        let t = Instant::now();
        let run = continuation_solve(&poly, grid, &LadderConfig::default())?;
        println!(
            "{} (Λ∞ = {}), {:.1?}",
            poly.name(),
            ridge.lambda_inf,
            t.elapsed()
        );
        for st in &run.states {
            println!(
                "  p = {:>4}  λ_p = {:.6e}  λ_p^(1/p) = {:.5}  iters = {:>3}  residual = {:.1e}",
                st.p,
                st.lambda_p,
                st.lambda_root(),
                st.iterations,
                st.residual
            );
        }
    }
    Ok(())
}
