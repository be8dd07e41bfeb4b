//! Run configuration, the staged pipeline behind the command line and the
//! evaluation of every report criterion.

use crate::analysis::{
    area_csv, area_zero_trend, assemble_report, capture_check, corner_segment_deviation,
    gauss_check, level_arc_sweep_check, potential_counterpart_suite, quadrilateral_rule_check,
    random_quads, s_field, theorem1_check, ContactEstimate, SField, CRITERIA,
};
use crate::contour::level_curves;
use crate::eigensolver::{
    continuation_solve, convergence_csv, gradient_bound_check, lower_gradient_check, LadderConfig,
    LadderRun,
};
use crate::error::{Error, Result};
use crate::fields::{midpoint_concavity_violations, rasterize, write_dump, GridSpec, ScalarField};
use crate::geometry::{chebyshev_set, HighRidge, Polygon, PolygonFile};
use crate::infinity::{
    extract_ground_limit, level_convexity, residual_infinity_laplacian, sandwich_check,
    solve_infinity_potential, GroundLimit, PotentialConfig, PotentialSolution,
};
use crate::render::{render_svg, RenderOptions};
use crate::report::{CheckResult, Verdict, VerificationReport};
use crate::streamlines::{
    arc_metrics, attracting_streamlines, boundary_seeds, first_event, level_crossing_check,
    manifest_entry, median, speed_profile_checks, stability_check, trace_seeded, Event, Median,
    Seed, StreamClass, Streamline, Termination, TraceConfig, JOIN_TOL_CELLS,
};
use crate::vec2::{signed_area, Vec2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolygonSource {
    Path(PathBuf),
    Inline(PolygonFile),
}

impl PolygonSource {
    pub fn load(&self) -> Result<Polygon> {
        match self {
            PolygonSource::Path(p) => Polygon::load(p),
            PolygonSource::Inline(f) => Polygon::new(&f.name, &f.vertices),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    /// Generic seeds spread evenly along the boundary by arc length.
    pub boundary: usize,
    /// Distance of every side seed from its side, in cells.
    pub offset_cells: f64,
    /// Smallest distance of a boundary seed's foot from a corner, in cells.
    pub corner_clearance_cells: f64,
    /// Offsets of the extra seeds on both sides of each median, in cells.
    pub fan_cells: Vec<f64>,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            boundary: 20,
            offset_cells: 3.0,
            corner_clearance_cells: 12.0,
            fan_cells: vec![1.5, 3.0, 4.5, 6.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub eigen_rtol: f64,
    pub lambda_rtol: f64,
    pub lower_gradient_level: f64,
    pub lower_gradient_min_p: f64,
    pub concavity_min_p: f64,
    pub concavity_pairs: usize,
    pub concavity_tol_cells: f64,
    pub epsilon_sweep: Vec<f64>,
    /// The area trend compares against a grid this many times coarser.
    pub coarse_factor: f64,
    pub min_contact_events: usize,
    pub arc_rtol: f64,
    pub speed_rtol: f64,
    pub speed_stub_cells: f64,
    /// Contact neighborhood skipped by the non-decreasing speed law, in cells.
    pub speed_contact_cells: f64,
    pub gauss_quads: usize,
    pub gauss_exponents: Vec<f64>,
    pub quad_rtol: f64,
    pub crossing_levels: Vec<f64>,
    pub stability_rtol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            eigen_rtol: 0.01,
            lambda_rtol: 0.10,
            lower_gradient_level: 0.5,
            lower_gradient_min_p: 32.0,
            concavity_min_p: 32.0,
            concavity_pairs: 10_000,
            concavity_tol_cells: 5.0,
            epsilon_sweep: vec![0.10, 0.05, 0.025],
            coarse_factor: 2.0,
            min_contact_events: 10,
            arc_rtol: 0.05,
            speed_rtol: 0.05,
            speed_stub_cells: 3.0,
            speed_contact_cells: 1.5,
            gauss_quads: 20,
            gauss_exponents: vec![2.0, 4.0, 8.0],
            quad_rtol: 0.05,
            crossing_levels: vec![0.25, 0.5, 0.75],
            stability_rtol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub polygon: PolygonSource,
    pub h: f64,
    pub p_ladder: Vec<f64>,
    pub epsilon: f64,
    pub seeds: SeedConfig,
    pub out: PathBuf,
    pub render: RenderOptions,
    pub seed: u64,
    pub checks: CheckConfig,
    pub potential: PotentialConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            polygon: PolygonSource::Inline(Polygon::unit_square().to_file()),
            h: 1.0 / 64.0,
            p_ladder: LadderConfig::default().p_list,
            epsilon: 0.05,
            seeds: SeedConfig::default(),
            out: PathBuf::from("out"),
            render: RenderOptions::default(),
            seed: 7,
            checks: CheckConfig::default(),
            potential: PotentialConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parse a JSON config; a relative polygon path is taken relative to the
    /// config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let PolygonSource::Path(p) = &cfg.polygon {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.polygon = PolygonSource::Path(base.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        LadderConfig::with_p_list(self.p_ladder.clone()).validate()?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.checks.epsilon_sweep.is_empty()
            || self.checks.epsilon_sweep.iter().any(|e| !(*e > 0.0))
        {
            return bad("epsilon_sweep must hold positive values".into());
        }
        if !(self.checks.coarse_factor > 1.0) {
            return bad("coarse_factor must exceed 1".into());
        }
        if self.render.levels.iter().any(|c| !c.is_finite()) {
            return bad("render levels must be finite".into());
        }
        if self.seeds.boundary == 0 {
            return bad("at least one boundary seed is needed".into());
        }
        Ok(())
    }
}

/// The command-line stages; `All` runs the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Solve,
    Potential,
    Trace,
    Verify,
    Render,
    All,
}

/// Geometry, grid, ladder and limit.
pub struct Solved {
    pub polygon: Polygon,
    pub ridge: HighRidge,
    pub grid: Arc<GridSpec>,
    pub run: LadderRun,
    pub limit: GroundLimit,
}

pub fn solve(polygon: &Polygon, h: f64, p_ladder: &[f64]) -> Result<Solved> {
    let ridge = chebyshev_set(polygon);
    let grid = Arc::new(rasterize(polygon, h)?);
    let run = continuation_solve(
        polygon,
        grid.clone(),
        &LadderConfig::with_p_list(p_ladder.to_vec()),
    )?;
    let limit = extract_ground_limit(&run.states, &ridge)?;
    Ok(Solved {
        polygon: polygon.clone(),
        ridge,
        grid,
        run,
        limit,
    })
}

/// A streamline with its first event against the attracting curves.
#[derive(Debug, Clone)]
pub struct Traced {
    pub curve: Streamline,
    pub event: Event,
}

/// The streamline suite of `u`.
pub struct Suite {
    pub attracting: Vec<Streamline>,
    pub medians: Vec<Median>,
    /// Median events, side order.
    pub median_events: Vec<Event>,
    /// Traces from the evenly spaced boundary seeds, cut at their event.
    pub generic: Vec<Traced>,
    /// Traces from seeds beside the medians, cut at their event.
    pub fan: Vec<Traced>,
    /// Traces of `v` from the boundary seeds, run to the end.
    pub fictitious: Vec<Streamline>,
}

impl Suite {
    /// Every curve, attracting first, in manifest order.
    pub fn all_curves(&self) -> Vec<&Streamline> {
        self.attracting
            .iter()
            .chain(self.medians.iter().map(|m| &m.streamline))
            .chain(self.generic.iter().map(|t| &t.curve))
            .chain(self.fan.iter().map(|t| &t.curve))
            .collect()
    }

    /// Non-attracting curves with their events.
    pub fn evented(&self) -> Vec<(&Streamline, Event)> {
        self.medians
            .iter()
            .map(|m| &m.streamline)
            .zip(self.median_events.iter().cloned())
            .chain(self.generic.iter().map(|t| (&t.curve, t.event)))
            .chain(self.fan.iter().map(|t| (&t.curve, t.event)))
            .collect()
    }
}

fn side_seed(polygon: &Polygon, k: usize, at: f64, offset: f64) -> Vec2 {
    let (a, b) = polygon.side(k);
    a.lerp(b, at) + polygon.inward_normal(k) * offset
}

fn cut_at_event(s: Streamline, att: &[Streamline], tol: f64) -> Traced {
    let event = first_event(&s, att, tol);
    let curve = match event.join {
        Some((id, p)) => s.truncated(
            event.index,
            Termination::JoinedCurve {
                id,
                point: [p.x, p.y],
            },
        ),
        None => s,
    };
    Traced { curve, event }
}

pub fn trace_suite(solved: &Solved, seeds: &SeedConfig) -> Result<Suite> {
    let Solved {
        polygon,
        ridge,
        limit,
        ..
    } = solved;
    let h = solved.grid.h();
    let cfg = TraceConfig::for_grid(h, ridge.lambda_inf);
    let tol = JOIN_TOL_CELLS * h;
    let attracting = attracting_streamlines(limit, polygon, ridge, &cfg)?;
    let medians: Vec<Median> = (0..polygon.len())
        .into_par_iter()
        .map(|k| median(limit, polygon, ridge, k, &attracting, &cfg))
        .collect::<Result<_>>()?;
    let median_events = medians
        .iter()
        .map(|m| first_event(&m.streamline, &attracting, tol))
        .collect();
    let offset = seeds.offset_cells * h;
    let bseeds = boundary_seeds(
        polygon,
        seeds.boundary,
        offset,
        seeds.corner_clearance_cells * h,
    );
    let generic: Vec<Traced> = bseeds
        .par_iter()
        .map(|&(seed, x)| {
            let s = trace_seeded(&limit.u, ridge, x, &cfg, seed, StreamClass::Generic)?;
            Ok(cut_at_event(s, &attracting, tol))
        })
        .collect::<Result<_>>()?;
    let mut fan_seeds = Vec::new();
    for m in &medians {
        let Seed::Side { side, at } = m.streamline.seed else {
            continue;
        };
        let (a, b) = polygon.side(side);
        let len = a.dist(b);
        for &c in &seeds.fan_cells {
            for sign in [-1.0, 1.0] {
                let t = at + sign * c * h / len;
                if t > 0.0 && t < 1.0 {
                    fan_seeds.push((
                        Seed::Side { side, at: t },
                        side_seed(polygon, side, t, offset),
                    ));
                }
            }
        }
    }
    let fan: Vec<Traced> = fan_seeds
        .par_iter()
        .map(|&(seed, x)| {
            let s = trace_seeded(&limit.u, ridge, x, &cfg, seed, StreamClass::Generic)?;
            Ok(cut_at_event(s, &attracting, tol))
        })
        .collect::<Result<_>>()?;
    let fictitious: Vec<Streamline> = bseeds
        .par_iter()
        .map(|&(seed, x)| trace_seeded(&limit.v, ridge, x, &cfg, seed, StreamClass::Generic))
        .collect::<Result<_>>()?;
    Ok(Suite {
        attracting,
        medians,
        median_events,
        generic,
        fan,
        fictitious,
    })
}

/// The infinity-potential with its own streamlines.
pub struct PotentialStage {
    pub solution: PotentialSolution,
    pub curves: Vec<Streamline>,
    pub generic: Vec<Streamline>,
}

fn check(value: f64, threshold: f64, pass: bool, detail: serde_json::Value) -> CheckResult {
    CheckResult::new(value, threshold, Verdict::from_pass(pass), detail)
}

fn named(name: &str, r: CheckResult) -> (String, CheckResult) {
    (name.to_string(), r)
}

/// Side lengths `(a, b)` when the polygon is a rectangle.
pub fn rectangle_sides(polygon: &Polygon) -> Option<(f64, f64)> {
    if polygon.len() != 4 {
        return None;
    }
    let e = |k: usize| {
        let (a, b) = polygon.side(k);
        b - a
    };
    let scale = polygon.scale().max(1.0);
    let right = (0..4).all(|k| e(k).dot(e((k + 1) % 4)).abs() <= 1e-9 * scale * scale);
    right.then(|| (e(0).norm(), e(1).norm()))
}

/// Criteria evaluated on the ladder alone.
pub fn ladder_checks(solved: &Solved, cfg: &RunConfig) -> Result<Vec<(String, CheckResult)>> {
    let c = &cfg.checks;
    let h = solved.grid.h();
    let states = &solved.run.states;
    let mut out = Vec::new();

    let p2 = solved.run.at(2.0);
    out.push(named(
        "eigenvalue_oracle",
        match (p2, rectangle_sides(&solved.polygon)) {
            (Some(s), Some((a, b))) => {
                let exact = std::f64::consts::PI.powi(2) * (1.0 / (a * a) + 1.0 / (b * b));
                let rel = (s.lambda_p - exact).abs() / exact;
                check(
                    rel,
                    c.eigen_rtol,
                    rel <= c.eigen_rtol,
                    json!({"lambda_2": s.lambda_p, "exact": exact}),
                )
            }
            (Some(s), None) => CheckResult::new(
                s.lambda_p,
                0.0,
                Verdict::Info,
                json!({"lambda_2": s.lambda_p, "note": "no closed form for this polygon"}),
            ),
            (None, _) => check(
                f64::NAN,
                c.eigen_rtol,
                false,
                json!("the p = 2 rung did not solve"),
            ),
        },
    ));

    let lam = solved.ridge.lambda_inf;
    let top = solved.run.top().ok_or(Error::LadderTooShort(0))?;
    let rel = (top.lambda_root() - lam) / lam;
    let roots: Vec<[f64; 2]> = states.iter().map(|s| [s.p, s.lambda_root()]).collect();
    let large: Vec<f64> = states
        .iter()
        .filter(|s| s.p >= 4.0)
        .map(|s| s.lambda_root())
        .collect();
    let trend = if large.windows(2).all(|w| w[1] <= w[0]) {
        "decreasing"
    } else if large.windows(2).all(|w| w[1] >= w[0]) {
        "increasing"
    } else {
        "mixed"
    };
    out.push(named(
        "lambda_inf_limit",
        check(
            rel.abs(),
            c.lambda_rtol,
            rel.abs() <= c.lambda_rtol,
            json!({"p": top.p, "lambda_root": top.lambda_root(), "lambda_inf": lam, "sequence": roots, "trend_from_p4": trend, "failed_rungs": solved.run.failed}),
        ),
    ));

    let bounds: Vec<_> = states
        .iter()
        .map(|s| (s.p, gradient_bound_check(s, &solved.polygon)))
        .collect();
    let worst = bounds
        .iter()
        .map(|b| b.1.margin - b.1.tol)
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(named(
        "gradient_upper_bound",
        check(
            worst,
            0.0,
            bounds.iter().all(|b| b.1.pass) && !states.is_empty(),
            json!(bounds
                .iter()
                .map(|(p, m)| json!({"p": p, "margin": m}))
                .collect::<Vec<_>>()),
        ),
    ));

    let lows: Vec<_> = states
        .iter()
        .filter(|s| s.p >= c.lower_gradient_min_p)
        .map(|s| {
            Ok((
                s.p,
                lower_gradient_check(s, &solved.polygon, c.lower_gradient_level)?,
            ))
        })
        .collect::<Result<_>>()?;
    let worst = lows
        .iter()
        .map(|l| l.1.margin.margin - l.1.margin.tol)
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(named(
        "gradient_lower_bound",
        check(
            worst,
            0.0,
            !lows.is_empty() && lows.iter().all(|l| l.1.margin.pass),
            json!(lows
                .iter()
                .map(|(p, r)| json!({"p": p, "report": r}))
                .collect::<Vec<_>>()),
        ),
    ));

    let conc: Vec<_> = states
        .iter()
        .filter(|s| s.p >= c.concavity_min_p)
        .map(|s| {
            let v = s.log_field();
            (
                s.p,
                midpoint_concavity_violations(
                    &v,
                    c.concavity_pairs,
                    c.concavity_tol_cells * h,
                    cfg.seed,
                ),
            )
        })
        .collect();
    let violations: usize = conc.iter().map(|c| c.1.violations).sum();
    out.push(named(
        "log_concavity",
        check(
            violations as f64,
            0.0,
            !conc.is_empty() && violations == 0,
            json!(conc
                .iter()
                .map(|(p, s)| json!({"p": p, "stats": s}))
                .collect::<Vec<_>>()),
        ),
    ));
    Ok(out)
}

fn sandwich_result(
    u: &ScalarField,
    potential: Option<&ScalarField>,
    solved: &Solved,
) -> CheckResult {
    let su = sandwich_check(u, &solved.polygon, &solved.ridge);
    let sp = potential.map(|p| sandwich_check(p, &solved.polygon, &solved.ridge));
    let worst = |s: &crate::infinity::SandwichReport| s.lower.margin.max(s.upper.margin);
    let value = sp.as_ref().map_or(worst(&su), |p| worst(&su).max(worst(p)));
    check(
        value,
        su.lower.tol,
        su.pass && sp.as_ref().is_none_or(|p| p.pass),
        json!({"u": su, "U": sp}),
    )
}

/// Contact estimates at `ε` and over the sweep, on the solve grid.
pub struct ContactStage {
    pub s: SField,
    pub contact: ContactEstimate,
}

pub fn contact_stage(solved: &Solved, epsilon: f64) -> ContactStage {
    let s = s_field(&solved.limit, &solved.ridge);
    let contact = ContactEstimate::from_s_field(&s, epsilon);
    ContactStage { s, contact }
}

/// Criteria on the `u` streamlines and the contact estimate.
pub fn structure_checks(
    solved: &Solved,
    suite: &Suite,
    contact: &ContactEstimate,
    cfg: &RunConfig,
) -> Result<Vec<(String, CheckResult)>> {
    let c = &cfg.checks;
    let h = solved.grid.h();
    let (polygon, ridge, limit) = (&solved.polygon, &solved.ridge, &solved.limit);
    let mut out = Vec::new();

    let t1 = theorem1_check(contact, &suite.attracting, ridge);
    let seg = corner_segment_deviation(&suite.attracting, polygon, ridge);
    let seg_limit = crate::streamlines::CORNER_SEED_CELLS * h;
    let straight_required = rectangle_sides(polygon).is_some();
    let seg_pass = !straight_required || seg <= seg_limit;
    out.push(named(
        "theorem1_contact_confinement",
        check(
            t1.distance,
            t1.threshold,
            t1.pass && seg_pass,
            json!({"confinement": t1, "corner_segment_deviation": seg, "segment_threshold": seg_limit, "segment_checked": straight_required}),
        ),
    ));

    let sweep = level_arc_sweep_check(&limit.u, contact, &suite.attracting, ridge);
    out.push(named(
        "level_arc_sweep",
        check(sweep.violations as f64, 0.0, sweep.pass, json!(sweep)),
    ));

    let worst = suite
        .medians
        .iter()
        .map(|m| m.straightness)
        .fold(0.0f64, f64::max);
    out.push(named(
        "median_straightness",
        check(
            worst,
            crate::streamlines::MEDIAN_STRAIGHT_CELLS * h,
            suite.medians.iter().all(|m| m.pass),
            json!(suite
                .medians
                .iter()
                .map(|m| json!({"side_max": m.side_max, "straightness": m.straightness, "termination": m.streamline.termination}))
                .collect::<Vec<_>>()),
        ),
    ));

    let evented = suite.evented();
    let mut in_contact = Vec::new();
    let mut joins = Vec::new();
    let mut max_sc = 0usize;
    let mut rows = Vec::new();
    for (s, ev) in &evented {
        let Ok(am) = arc_metrics(s, limit, polygon, ev.index, ev.detect_index) else {
            continue;
        };
        max_sc = max_sc.max(am.sign_changes);
        let inside = contact.contains_cell(ev.point);
        if inside {
            in_contact.push(am.length_lambda);
        }
        if ev.join.is_some() {
            joins.push(am.ratio_length);
        }
        rows.push(json!({
            "seed": s.seed, "event": [ev.point.x, ev.point.y], "join": ev.join.map(|j| j.0),
            "in_contact": inside, "length_lambda": am.length_lambda, "ratio_length": am.ratio_length,
            "sign_changes": am.sign_changes,
        }));
    }
    let dev = |v: &[f64]| v.iter().map(|x| (x - 1.0).abs()).fold(0.0f64, f64::max);
    let (d_len, d_ratio) = (dev(&in_contact), dev(&joins));
    let arc_pass = in_contact.len() >= c.min_contact_events
        && d_len <= c.arc_rtol
        && d_ratio <= c.arc_rtol
        && max_sc == 0
        && rows.len() == evented.len();
    out.push(named(
        "arc_length",
        check(
            d_len.max(d_ratio),
            c.arc_rtol,
            arc_pass,
            json!({"contact_events": in_contact.len(), "required": c.min_contact_events, "length_deviation": d_len,
                   "ratio_deviation": d_ratio, "joins": joins.len(), "max_sign_changes": max_sc, "arcs": rows}),
        ),
    ));

    let stub = c.speed_stub_cells * h;
    let near = |x: Vec2| contact.contains(x, c.speed_contact_cells * h);
    let mut speed_rows = Vec::new();
    let mut speed_pass = true;
    let mut speed_worst = 0.0f64;
    for a in &suite.attracting {
        let r = speed_profile_checks(a, limit, &near, a.len() - 1, true, stub, c.speed_rtol)?;
        speed_pass &= r.pass;
        speed_worst = speed_worst.max(r.u_drop).max(r.v_rise);
        speed_rows.push(json!({"seed": a.seed, "report": r}));
    }
    let mut crossings_pass = true;
    let mut crossing_rows = Vec::new();
    for (s, ev) in &evented {
        let r = speed_profile_checks(s, limit, &near, ev.detect_index, false, stub, c.speed_rtol)?;
        speed_pass &= r.pass;
        speed_worst = speed_worst
            .max(r.u_drop)
            .max(r.v_rise)
            .max(r.variation.unwrap_or(0.0));
        speed_rows.push(json!({"seed": s.seed, "report": r}));
        let lc = level_crossing_check(s, &c.crossing_levels);
        crossings_pass &= lc.pass;
        crossing_rows.push(json!({"seed": s.seed, "counts": lc.counts}));
    }
    out.push(named(
        "speed_laws",
        check(
            speed_worst,
            c.speed_rtol,
            speed_pass && suite.generic.len() >= cfg.seeds.boundary,
            json!({"curves": speed_rows.len(), "per_curve": speed_rows}),
        ),
    ));
    out.push(named(
        "level_crossings",
        check(
            0.0,
            0.0,
            crossings_pass,
            json!({"levels": c.crossing_levels, "per_curve": crossing_rows}),
        ),
    ));

    let mut traces = suite.attracting.clone();
    traces.extend(suite.fictitious.iter().cloned());
    let cap = capture_check(&traces, contact);
    out.push(named(
        "contact_capture",
        check(cap.worst_exit, cap.threshold, cap.pass, json!(cap)),
    ));

    let tcfg = TraceConfig::for_grid(h, ridge.lambda_inf);
    let stab = match suite.generic.first() {
        Some(t) => {
            let x0 = t.curve.start();
            let along = match t.curve.seed {
                Seed::Side { side, .. } => {
                    let (a, b) = polygon.side(side);
                    (b - a).normalized()
                }
                _ => Vec2::new(1.0, 0.0),
            };
            let y0 = x0 + along * (2.0 * h);
            Some(stability_check(
                &limit.v,
                ridge,
                x0,
                y0,
                f64::INFINITY,
                &tcfg,
                c.stability_rtol,
            )?)
        }
        None => None,
    };
    out.push(named(
        "stability",
        CheckResult::new(
            stab.as_ref().map_or(0.0, |s| s.ratio),
            1.0 + c.stability_rtol,
            Verdict::Info,
            json!(stab),
        ),
    ));
    Ok(out)
}

fn by_side(traced: &[Traced], side: usize) -> Vec<(f64, &Traced)> {
    let mut v: Vec<(f64, &Traced)> = traced
        .iter()
        .filter_map(|t| match t.curve.seed {
            Seed::Side { side: k, at } if k == side => Some((at, t)),
            _ => None,
        })
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Five quadrilaterals from the suite: the two neighbors of the median of
/// side 0, the next pair to its left, a neighbor of the median of side 1,
/// and a triangular one between the outermost fan seeds of the side whose
/// median ends nearest an end of `H`.
pub fn quadrilateral_checks(solved: &Solved, suite: &Suite, cfg: &RunConfig) -> CheckResult {
    let h = solved.grid.h();
    let tcfg = TraceConfig::for_grid(h, solved.ridge.lambda_inf);
    let u = &solved.limit.u;
    let tol = cfg.checks.quad_rtol;
    let gap = 8.0 * h;
    let mut rows = Vec::new();
    let mut pass = true;
    let mut worst = 0.0f64;

    let top = |s: &Streamline, ev: &Event| s.values[ev.index.min(s.len() - 1)];
    let mut record = |name: &str, r: Result<crate::analysis::QuadReport>| match r {
        Ok(q) => {
            pass &= q.pass;
            worst = worst.max(q.upper_max / q.lower_max.max(f64::MIN_POSITIVE) - 1.0);
            rows.push(json!({"quad": name, "report": q}));
        }
        Err(e) => {
            pass = false;
            rows.push(json!({"quad": name, "error": e.to_string()}));
        }
    };
    let levels = |a: (&Streamline, &Event), b: (&Streamline, &Event), lo: f64, hi: f64| {
        let c = top(a.0, a.1).min(top(b.0, b.1));
        let floor = 1.5 * a.0.values[0].max(b.0.values[0]);
        ((lo * c).max(floor), hi * c)
    };

    for (side, tag) in [(0usize, "side0"), (1, "side1")] {
        if side >= suite.medians.len() {
            continue;
        }
        let m = &suite.medians[side];
        let mev = &suite.median_events[side];
        let len = {
            let (a, b) = solved.polygon.side(side);
            a.dist(b)
        };
        let Seed::Side { at: m_at, .. } = m.streamline.seed else {
            continue;
        };
        let ordered = by_side(&suite.generic, side);
        let left: Vec<&Traced> = ordered
            .iter()
            .rev()
            .filter(|(at, _)| (m_at - at) * len > gap)
            .map(|p| p.1)
            .collect();
        let right: Vec<&Traced> = ordered
            .iter()
            .filter(|(at, _)| (at - m_at) * len > gap)
            .map(|p| p.1)
            .collect();
        let med = (&m.streamline, mev);
        let mut pairs: Vec<(
            String,
            (&Streamline, &Event),
            (&Streamline, &Event),
            f64,
            f64,
        )> = Vec::new();
        if let Some(l) = left.first() {
            pairs.push((
                format!("{tag}_left_of_median"),
                (&l.curve, &l.event),
                med,
                0.25,
                0.75,
            ));
        }
        if side == 0 {
            if let Some(r) = right.first() {
                pairs.push((
                    format!("{tag}_right_of_median"),
                    med,
                    (&r.curve, &r.event),
                    0.25,
                    0.75,
                ));
            }
            if let (Some(l1), Some(l2)) = (left.first(), left.get(1)) {
                pairs.push((
                    format!("{tag}_left_pair"),
                    (&l2.curve, &l2.event),
                    (&l1.curve, &l1.event),
                    0.3,
                    0.8,
                ));
            }
        }
        if pairs.is_empty() {
            record(
                &format!("{tag}_left_of_median"),
                Err(Error::QuadConstructionFailed(
                    "no seed beside the median".into(),
                )),
            );
        }
        for (name, a, b, lo, hi) in pairs {
            let (cl, cu) = levels(a, b, lo, hi);
            record(
                &name,
                quadrilateral_rule_check(u, &solved.ridge, a.0, b.0, cl, Some(cu), &tcfg, tol),
            );
        }
    }

    let ends = [solved.ridge.endpoints[0], solved.ridge.endpoints[1]];
    let tri_side = (0..suite.median_events.len()).min_by(|&i, &j| {
        let d = |k: usize| {
            ends.iter()
                .map(|e| e.dist(suite.median_events[k].point))
                .fold(f64::INFINITY, f64::min)
        };
        d(i).total_cmp(&d(j))
    });
    let tri = tri_side.and_then(|k| {
        let f = by_side(&suite.fan, k);
        let Seed::Side { at: m_at, .. } = suite.medians[k].streamline.seed else {
            return None;
        };
        let a = f.iter().find(|p| p.0 < m_at)?;
        let b = f.iter().rev().find(|p| p.0 > m_at)?;
        Some((a.1, b.1))
    });
    match tri {
        Some((a, b)) => {
            let apex = top(&a.curve, &a.event).min(top(&b.curve, &b.event));
            let lower = (0.3 * apex).max(1.5 * a.curve.values[0].max(b.curve.values[0]));
            record(
                "triangular",
                quadrilateral_rule_check(
                    u,
                    &solved.ridge,
                    &a.curve,
                    &b.curve,
                    lower,
                    None,
                    &tcfg,
                    tol,
                ),
            );
        }
        None => record(
            "triangular",
            Err(Error::QuadConstructionFailed(
                "no fan pair around a median".into(),
            )),
        ),
    }
    let built = rows.len();
    check(
        worst,
        tol,
        pass && built == 5,
        json!({"quads": built, "required": 5, "per_quad": rows}),
    )
}

pub fn gauss_checks(
    solved: &Solved,
    contact: &ContactEstimate,
    cfg: &RunConfig,
) -> Result<CheckResult> {
    let c = &cfg.checks;
    let quads = random_quads(
        &solved.polygon,
        contact,
        &solved.ridge,
        c.gauss_quads,
        cfg.seed,
    );
    let mut pass = quads.len() == c.gauss_quads;
    let mut worst = f64::NEG_INFINITY;
    let mut rows = Vec::new();
    for q in &quads {
        for &m in &c.gauss_exponents {
            let r = gauss_check(&solved.limit.u, q, m, contact, &solved.ridge)?;
            pass &= r.pass;
            worst = worst.max(r.value / r.tol);
            rows.push(
                json!({"vertices": q.iter().map(|v| [v.x, v.y]).collect::<Vec<_>>(), "report": r}),
            );
        }
    }
    Ok(check(
        worst,
        1.0,
        pass,
        json!({"quads": quads.len(), "required": c.gauss_quads, "value_over_tol_max": worst, "per_quad": rows}),
    ))
}

/// Area trend over the configured sweep, with a second solve on the grid
/// `coarse_factor` times coarser.
pub fn area_trend(
    solved: &Solved,
    fine: &SField,
    cfg: &RunConfig,
) -> Result<(CheckResult, String)> {
    let coarse = solve(
        &solved.polygon,
        cfg.h * cfg.checks.coarse_factor,
        &cfg.p_ladder,
    )?;
    let cs = s_field(&coarse.limit, &coarse.ridge);
    let r = area_zero_trend(&[&cs, fine], &cfg.checks.epsilon_sweep);
    let csv = area_csv(&r);
    let worst = r.rows.iter().map(|x| x.measure).fold(0.0, f64::max);
    Ok((check(worst, 0.0, r.pass, json!(r)), csv))
}

pub fn potential_stage(solved: &Solved, cfg: &RunConfig) -> Result<PotentialStage> {
    let solution = solve_infinity_potential(
        &solved.polygon,
        &solved.ridge,
        solved.grid.clone(),
        &cfg.potential,
    )?;
    Ok(PotentialStage {
        solution,
        curves: Vec::new(),
        generic: Vec::new(),
    })
}

/// The counterpart suite on `U`; fills the stage's curves.
pub fn potential_checks(
    solved: &Solved,
    stage: &mut PotentialStage,
    cfg: &RunConfig,
) -> Result<Vec<(String, CheckResult)>> {
    let h = solved.grid.h();
    let tcfg = TraceConfig::for_grid(h, solved.ridge.lambda_inf);
    let field = &stage.solution.field;
    let (rep, curves) = potential_counterpart_suite(
        field,
        &solved.polygon,
        &solved.ridge,
        Some(&solved.limit.u),
        &tcfg,
    )?;
    let att: Vec<Streamline> = curves
        .iter()
        .filter(|s| s.class == StreamClass::Attracting)
        .cloned()
        .collect();
    let bseeds = boundary_seeds(
        &solved.polygon,
        cfg.seeds.boundary,
        cfg.seeds.offset_cells * h,
        cfg.seeds.corner_clearance_cells * h,
    );
    stage.generic = bseeds
        .par_iter()
        .map(|&(seed, x)| {
            let s = trace_seeded(field, &solved.ridge, x, &tcfg, seed, StreamClass::Generic)?;
            Ok(cut_at_event(s, &att, JOIN_TOL_CELLS * h).curve)
        })
        .collect::<Result<_>>()?;
    stage.curves = curves;
    let mut out = vec![named(
        "potential_counterpart",
        check(
            rep.attracting_deviation.max(
                rep.medians
                    .iter()
                    .map(|m| m.straightness)
                    .fold(0.0, f64::max),
            ),
            rep.threshold,
            rep.pass,
            json!(rep),
        ),
    )];
    let ridge = &solved.ridge;
    let res = residual_infinity_laplacian(field, |x| ridge.distance(x) < 4.0 * h);
    out.push(named(
        "potential_residual",
        CheckResult::new(res.sup, res.threshold, Verdict::Info, json!({"residual": res, "sweeps": stage.solution.sweeps, "converged": stage.solution.converged})),
    ));
    Ok(out)
}

/// Outer-to-inner nesting of the main level curves, measured by enclosed area.
fn nested(field: &ScalarField, levels: &[f64]) -> bool {
    let mut ls = levels.to_vec();
    ls.sort_by(f64::total_cmp);
    let areas: Vec<f64> = ls
        .iter()
        .map(|&c| {
            level_curves(field, c)
                .iter()
                .filter(|p| p.closed)
                .map(|p| signed_area(&p.points).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    areas.windows(2).all(|w| w[1] < w[0])
}

/// The figure of `U`: levels and `U`-streamlines, rendered twice.
pub fn figure(solved: &Solved, stage: &PotentialStage, cfg: &RunConfig) -> (String, CheckResult) {
    let mut curves = stage.curves.clone();
    curves.extend(stage.generic.iter().cloned());
    let field = &stage.solution.field;
    let svg = render_svg(
        Some(field),
        &curves,
        &solved.polygon,
        &solved.ridge,
        &cfg.render,
    );
    let again = render_svg(
        Some(field),
        &curves,
        &solved.polygon,
        &solved.ridge,
        &cfg.render,
    );
    let levels = level_convexity(field, &cfg.render.levels);
    let h = solved.grid.h();
    let convex = levels.iter().all(|l| l.pass && l.hull_defect <= h);
    let nest = nested(field, &cfg.render.levels);
    let n = solved.polygon.len();
    let att = svg.matches("class=\"attracting\"").count();
    let med = svg.matches("class=\"median\"").count();
    let converging = stage.generic.iter().all(|s| {
        matches!(
            s.termination,
            Termination::JoinedCurve { .. } | Termination::ReachedRidge
        )
    });
    let pass = svg == again && convex && nest && att == n && med == n && converging;
    let r = check(
        if svg == again { 0.0 } else { 1.0 },
        0.0,
        pass,
        json!({"deterministic": svg == again, "levels": levels, "nested": nest, "attracting": att, "medians": med,
               "generic_converging": converging, "bytes": svg.len()}),
    );
    (svg, r)
}

/// Writes files under the output directory and keeps the list.
pub struct Artifacts {
    root: PathBuf,
    pub files: Vec<String>,
}

impl Artifacts {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::Io(format!("{}: {e}", root.display())))?;
        Ok(Artifacts {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(d) = p.parent() {
            std::fs::create_dir_all(d)?;
        }
        Ok(p)
    }

    pub fn text(&mut self, rel: &str, body: &str) -> Result<()> {
        std::fs::write(self.path(rel)?, body)?;
        self.files.push(rel.to_string());
        Ok(())
    }

    pub fn field(&mut self, rel: &str, f: &ScalarField) -> Result<()> {
        write_dump(f, &self.path(rel)?)?;
        self.files.push(rel.to_string());
        Ok(())
    }
}

fn write_ladder(a: &mut Artifacts, solved: &Solved) -> Result<()> {
    a.text("convergence.csv", &convergence_csv(&solved.run.states))?;
    for s in &solved.run.states {
        a.field(&format!("fields/u_p{}.txt", s.p), &s.field)?;
    }
    a.field("fields/u.txt", &solved.limit.u)?;
    a.field("fields/v.txt", &solved.limit.v)
}

fn write_suite(a: &mut Artifacts, suite: &Suite, contact: &ContactEstimate) -> Result<()> {
    let mut manifest = Vec::new();
    for (id, s) in suite.all_curves().into_iter().enumerate() {
        let file = format!("streamlines/{id:03}_{}.csv", s.class.as_str());
        a.text(&file, &s.to_csv())?;
        manifest.push(manifest_entry(id, &file, s));
    }
    a.text(
        "streamlines/manifest.json",
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    let mut table = String::from("x,y\n");
    for z in &contact.nodes {
        table.push_str(&format!("{:.10e},{:.10e}\n", z.x, z.y));
    }
    a.text("contact_table.csv", &table)
}

fn provenance(cfg: &RunConfig, polygon: &Polygon, extra: serde_json::Value) -> serde_json::Value {
    let mut cfg_echo = serde_json::to_value(cfg).expect("config serializes");
    cfg_echo["polygon"] = serde_json::to_value(polygon.to_file()).expect("polygon serializes");
    json!({"config": cfg_echo, "h": cfg.h, "p_top": cfg.p_ladder.last(), "rng_seed": cfg.seed, "run": extra})
}

/// Everything a stage produced.
pub struct StageOutput {
    pub report: VerificationReport,
    pub artifacts: Vec<String>,
}

/// Run one stage, writing its artifacts under `cfg.out`. Only `All` and
/// `Verify` assemble the full criterion list; the other stages report the
/// checks they can evaluate.
pub fn run_stage(cfg: &RunConfig, stage: Stage) -> Result<StageOutput> {
    cfg.validate()?;
    let polygon = cfg.polygon.load()?;
    let mut art = Artifacts::new(&cfg.out)?;
    let echo = serde_json::to_string_pretty(&provenance(cfg, &polygon, json!({})))
        .expect("config serializes");
    art.text("effective_config.json", &echo)?;

    let mut results: Vec<(String, CheckResult)> = Vec::new();
    let mut extra = serde_json::Map::new();
    extra.insert("stage".into(), json!(stage));

    if stage == Stage::Potential {
        let ridge = chebyshev_set(&polygon);
        let grid = Arc::new(rasterize(&polygon, cfg.h)?);
        let sol = solve_infinity_potential(&polygon, &ridge, grid, &cfg.potential)?;
        let sw = sandwich_check(&sol.field, &polygon, &ridge);
        results.push(named(
            "sandwich",
            check(
                sw.lower.margin.max(sw.upper.margin),
                sw.lower.tol,
                sw.pass,
                json!({"U": sw}),
            ),
        ));
        let levels = level_convexity(&sol.field, &crate::analysis::COUNTERPART_LEVELS);
        let ok = levels.iter().all(|l| l.pass && l.hull_defect <= cfg.h);
        results.push(named(
            "potential_levels",
            check(0.0, 0.0, ok, json!(levels)),
        ));
        let h = cfg.h;
        let res = residual_infinity_laplacian(&sol.field, |x| ridge.distance(x) < 4.0 * h);
        results.push(named(
            "potential_residual",
            CheckResult::new(res.sup, res.threshold, Verdict::Info, json!(res)),
        ));
        art.field("fields/U.txt", &sol.field)?;
        let mut log = String::from("sweep,change\n");
        for (s, c) in &sol.log {
            log.push_str(&format!("{s},{c:.6e}\n"));
        }
        art.text("potential_log.csv", &log)?;
        return finish(cfg, &polygon, art, results, extra, false);
    }

    let solved = solve(&polygon, cfg.h, &cfg.p_ladder)?;
    extra.insert("lambda_inf".into(), json!(solved.ridge.lambda_inf));
    extra.insert("p_used".into(), json!(solved.limit.p_used));
    extra.insert("richardson_gap".into(), json!(solved.limit.richardson_gap));
    let writes = stage != Stage::Verify;
    if matches!(stage, Stage::Solve | Stage::All) {
        write_ladder(&mut art, &solved)?;
    }
    if matches!(stage, Stage::Solve | Stage::Verify | Stage::All) {
        results.extend(ladder_checks(&solved, cfg)?);
    }
    if stage == Stage::Solve {
        results.push(named(
            "sandwich",
            sandwich_result(&solved.limit.u, None, &solved),
        ));
        return finish(cfg, &polygon, art, results, extra, false);
    }

    let needs_suite = matches!(stage, Stage::Trace | Stage::Verify | Stage::All);
    if needs_suite {
        let cs = contact_stage(&solved, cfg.epsilon);
        let suite = trace_suite(&solved, &cfg.seeds)?;
        extra.insert(
            "seeds".into(),
            json!({"boundary": suite.generic.len(), "fan": suite.fan.len()}),
        );
        extra.insert("contact_nodes".into(), json!(cs.contact.nodes.len()));
        if writes {
            write_suite(&mut art, &suite, &cs.contact)?;
        }
        results.extend(structure_checks(&solved, &suite, &cs.contact, cfg)?);
        if stage != Stage::Trace {
            results.push(named(
                "quadrilateral_rule",
                quadrilateral_checks(&solved, &suite, cfg),
            ));
            results.push(named(
                "gauss_flux",
                gauss_checks(&solved, &cs.contact, cfg)?,
            ));
            let (r, csv) = area_trend(&solved, &cs.s, cfg)?;
            results.push(named("area_zero_trend", r));
            if writes {
                art.text("area_trend.csv", &csv)?;
            }
        }
    }
    if stage == Stage::Trace {
        return finish(cfg, &polygon, art, results, extra, false);
    }

    let mut pstage = potential_stage(&solved, cfg)?;
    results.push(named(
        "sandwich",
        sandwich_result(&solved.limit.u, Some(&pstage.solution.field), &solved),
    ));
    results.extend(potential_checks(&solved, &mut pstage, cfg)?);
    let (svg, fig) = figure(&solved, &pstage, cfg);
    results.push(named("figure_reproduction", fig));
    if writes {
        art.field("fields/U.txt", &pstage.solution.field)?;
        art.text("figure.svg", &svg)?;
        let mut ucurves = Vec::new();
        if stage == Stage::All || stage == Stage::Render {
            let suite = trace_suite(&solved, &cfg.seeds)?;
            ucurves = suite.all_curves().into_iter().cloned().collect();
        }
        let usvg = render_svg(
            Some(&solved.limit.u),
            &ucurves,
            &polygon,
            &solved.ridge,
            &cfg.render,
        );
        art.text("figure_u.svg", &usvg)?;
    }
    if stage == Stage::Render {
        return finish(cfg, &polygon, art, results, extra, false);
    }
    finish(cfg, &polygon, art, results, extra, true)
}

fn finish(
    cfg: &RunConfig,
    polygon: &Polygon,
    mut art: Artifacts,
    results: Vec<(String, CheckResult)>,
    mut extra: serde_json::Map<String, serde_json::Value>,
    full: bool,
) -> Result<StageOutput> {
    let mut files = art.files.clone();
    files.push("report.json".into());
    extra.insert("artifacts".into(), json!(files));
    let prov = provenance(cfg, polygon, serde_json::Value::Object(extra));
    let report = if full {
        assemble_report(prov, results)
    } else {
        let mut r = VerificationReport::new(prov);
        for (k, v) in results {
            r.insert(&k, v);
        }
        r
    };
    art.text("report.json", &report.to_json())?;
    Ok(StageOutput {
        report,
        artifacts: art.files,
    })
}

/// `run_stage(cfg, Stage::All)`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<StageOutput> {
    run_stage(cfg, Stage::All)
}

/// The criterion keys in report order, for printing.
pub fn criteria() -> &'static [&'static str] {
    &CRITERIA
}
