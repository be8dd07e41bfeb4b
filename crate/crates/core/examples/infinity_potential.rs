//! The infinity-potential on the square and the rectangle: sweeps, the
//! squeeze between cone and distance, convexity of level curves.
//!
//!     cargo run --release --example infinity_potential -- [1/h]

use infground::fields::{rasterize, FieldView};
use infground::geometry::{chebyshev_set, Polygon};
use infground::infinity::{
    level_convexity, sandwich_check, solve_infinity_potential, PotentialConfig,
};
use infground::Vec2;
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
        let sol = solve_infinity_potential(&poly, &ridge, grid, &PotentialConfig::default())?;
        println!(
            "{}: {} sweeps, residual {:.1e}, converged {}, {:.1?}",
            poly.name(),
            sol.sweeps,
            sol.residual,
            sol.converged,
            t.elapsed()
        );
        let (lo, hi) = poly.bounding_box();
        let mid = Vec2::new(0.5 * (lo.x + hi.x), 0.25);
        println!(
            "  U{:?} = {:.5} (dist/R = 0.5)",
            [mid.x, mid.y],
            sol.field.value(mid)?
        );
        let sw = sandwich_check(&sol.field, &poly, &ridge);
        println!(
            "  cone margin {:.2e}, distance margin {:.2e}, tol {:.2e}",
            sw.lower.margin, sw.upper.margin, sw.lower.tol
        );
        for lc in level_convexity(&sol.field, &[0.2, 0.4, 0.6, 0.8]) {
            println!(
                "  level {:.1}: curves {}, sign changes {}, hull defect {:.1e}",
                lc.level, lc.curves, lc.sign_changes, lc.hull_defect
            );
        }
    }
    Ok(())
}
