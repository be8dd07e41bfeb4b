use clap::{Args, Parser, Subcommand};
use infground::pipeline::{run_stage, PolygonSource, RunConfig, Stage};
use infground::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "infground",
    version,
    about = "Infinity-ground states and streamlines on convex polygons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the p-ladder and check the ground-state bounds.
    Solve(Opts),
    /// Solve for the infinity-potential.
    Potential(Opts),
    /// Trace the streamline suite and check its laws.
    Trace(Opts),
    /// Evaluate every check and write the report.
    Verify(Opts),
    /// Write the figures.
    Render(Opts),
    /// Run the whole pipeline.
    All(Opts),
}

#[derive(Args)]
struct Opts {
    /// JSON run configuration; the flags below override it.
    #[arg(long, env = "INFGROUND_CONFIG")]
    config: Option<PathBuf>,
    /// Polygon file (JSON with `name` and `vertices`).
    #[arg(long, env = "INFGROUND_POLYGON")]
    polygon: Option<PathBuf>,
    /// Grid spacing.
    #[arg(long, env = "INFGROUND_H")]
    h: Option<f64>,
    /// Comma-separated p values starting at 2.
    #[arg(long, env = "INFGROUND_P_LADDER", value_delimiter = ',')]
    p_ladder: Option<Vec<f64>>,
    /// Relative threshold of the contact set estimate.
    #[arg(long, env = "INFGROUND_EPSILON")]
    epsilon: Option<f64>,
    /// Output directory.
    #[arg(long, env = "INFGROUND_OUT")]
    out: Option<PathBuf>,
    /// Comma-separated levels drawn in the figures.
    #[arg(long, env = "INFGROUND_LEVELS", value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    /// Seed for the random quadrilaterals.
    #[arg(long, env = "INFGROUND_SEED")]
    seed: Option<u64>,
}

impl Opts {
    fn config(self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = self.polygon {
            cfg.polygon = PolygonSource::Path(p);
        }
        if let Some(h) = self.h {
            cfg.h = h;
        }
        if let Some(p) = self.p_ladder {
            cfg.p_ladder = p;
        }
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(o) = self.out {
            cfg.out = o;
        }
        if let Some(l) = self.levels {
            cfg.render.levels = l;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::PolygonParse(_)
            | Error::TooFewVertices(_)
            | Error::NonConvex(_)
            | Error::DegenerateEdge(_)
            | Error::InvalidLadder(_)
            | Error::InvalidArgument(_)
            | Error::ResolutionTooCoarse { .. }
            | Error::Io(_)
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (stage, opts) = match cli.command {
        Command::Solve(o) => (Stage::Solve, o),
        Command::Potential(o) => (Stage::Potential, o),
        Command::Trace(o) => (Stage::Trace, o),
        Command::Verify(o) => (Stage::Verify, o),
        Command::Render(o) => (Stage::Render, o),
        Command::All(o) => (Stage::All, o),
    };
    let result = opts.config().and_then(|cfg| run_stage(&cfg, stage));
    match result {
        Ok(out) => {
            for (name, c) in &out.report.checks {
                println!(
                    "{:<30} {:<4} value {:.6e} threshold {:.6e}",
                    name, c.verdict, c.value, c.threshold
                );
            }
            ExitCode::from(out.report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_input_error(&e) { 2 } else { 1 })
        }
    }
}
