//! The full pipeline driven by a JSON config, as the `all` subcommand runs
//! it.
//!
//!     cargo run --release --example run_config -- configs/square.json [1/h]

use infground::pipeline::{run_pipeline, RunConfig};
use std::path::PathBuf;

fn main() -> infground::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/square.json".into()));
    let mut cfg = RunConfig::load(&path)?;
    if let Some(n) = args.next().and_then(|s| s.parse::<f64>().ok()) {
        cfg.h = 1.0 / n;
    }
    let out = run_pipeline(&cfg)?;
    for (name, c) in &out.report.checks {
        println!(
            "[{}] {name:<29} {:.4e} / {:.4e}",
            c.verdict, c.value, c.threshold
        );
    }
    println!(
        "{} artifacts under {}",
        out.artifacts.len(),
        cfg.out.display()
    );
    std::process::exit(out.report.exit_code());
}
