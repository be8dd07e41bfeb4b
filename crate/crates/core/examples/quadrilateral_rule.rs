//! Streamline quadrilaterals on the square: the gradient on the upper level
//! arc against the lower one, and whether test streamlines join inside.
//!
//!     cargo run --release --example quadrilateral_rule -- [1/h]

use infground::geometry::Polygon;
use infground::pipeline::{quadrilateral_checks, solve, trace_suite, RunConfig};

fn main() -> infground::Result<()> {
    let n: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(64.0);
    let cfg = RunConfig {
        h: 1.0 / n,
        ..RunConfig::default()
    };
    let solved = solve(&Polygon::unit_square(), cfg.h, &cfg.p_ladder)?;
    let suite = trace_suite(&solved, &cfg.seeds)?;
    let r = quadrilateral_checks(&solved, &suite, &cfg);
    println!("verdict {}, worst ratio excess {:.3e}", r.verdict, r.value);
    for q in r.detail["per_quad"].as_array().into_iter().flatten() {
        let r = &q["report"];
        if r.is_null() {
            println!("  {}: {}", q["quad"].as_str().unwrap_or("?"), q["error"]);
        } else {
            println!(
                "  {}: max |∇u| lower {:.4}, upper {:.4}, joins {}, pass {}",
                q["quad"].as_str().unwrap_or("?"),
                r["lower_max"].as_f64().unwrap_or(f64::NAN),
                r["upper_max"].as_f64().unwrap_or(f64::NAN),
                r["interior_joins"],
                r["pass"]
            );
        }
    }
    Ok(())
}
