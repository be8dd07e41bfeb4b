//! Level curves and streamlines of the infinity-potential of a polygon,
//! written as SVG.
//!
//!     cargo run --release --example render_figure -- [out.svg] [1/h]

use infground::geometry::Polygon;
use infground::pipeline::{figure, potential_checks, potential_stage, solve, RunConfig};

fn main() -> infground::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "figure.svg".into());
    let n: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(32.0);
    let cfg = RunConfig {
        h: 1.0 / n,
        ..RunConfig::default()
    };
    let solved = solve(&Polygon::rectangle(2.0, 1.0)?, cfg.h, &cfg.p_ladder)?;
    let mut stage = potential_stage(&solved, &cfg)?;
    potential_checks(&solved, &mut stage, &cfg)?;
    let (svg, r) = figure(&solved, &stage, &cfg);
    std::fs::write(&path, &svg).map_err(|e| infground::Error::Io(e.to_string()))?;
    println!(
        "wrote {path} ({} bytes), figure check {}",
        svg.len(),
        r.verdict
    );
    Ok(())
}
