//! Streamlines of `u` and (fictitious) streamlines of `v = log u`: tracing,
//! the attracting streamlines from the corners, the medians from the side
//! maxima of `|∇u|`, and the per-curve laws.

mod laws;

pub use laws::{
    arc_metrics, level_crossing_check, speed_profile_checks, stability_check, ArcMetrics,
    LevelCrossingReport, SpeedProfileReport, StabilityReport,
};

use crate::error::{Error, Result};
use crate::fields::{FieldLabel, FieldView, ScalarField};
use crate::geometry::{corner_bisector, HighRidge, Polygon};
use crate::infinity::GroundLimit;
use crate::vec2::{closest_on_segment, polyline_length, Vec2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Target spatial step.
    pub step: f64,
    /// Stop when the speed drops below this.
    pub speed_floor: f64,
    pub max_steps: usize,
    /// Stop on entering this neighborhood of `H`.
    pub ridge_tol: f64,
    /// Step halvings allowed when stages turn sharply or leave the domain.
    pub max_halvings: u32,
}

impl TraceConfig {
    /// Step `h/2`, speed floor `1e-3 Λ∞`, `10^5` steps, ridge neighborhood `h`.
    pub fn for_grid(h: f64, lambda_inf: f64) -> Self {
        TraceConfig {
            step: 0.5 * h,
            speed_floor: 1e-3 * lambda_inf,
            max_steps: 100_000,
            ridge_tol: h,
            max_halvings: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    ReachedRidge,
    JoinedCurve {
        id: usize,
        point: [f64; 2],
    },
    SpeedFloor,
    MaxSteps,
    /// A stage left the polygon; a defect of the trace.
    LeftDomain,
    /// The field stopped increasing.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seed {
    Corner { corner: usize },
    Side { side: usize, at: f64 },
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamClass {
    Attracting,
    Median,
    Generic,
}

impl StreamClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamClass::Attracting => "attracting",
            StreamClass::Median => "median",
            StreamClass::Generic => "generic",
        }
    }
}

/// A traced curve with its time parameter (`dx/dt = ∇f`), the speed `|∇f|`
/// and the field value at every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Streamline {
    pub points: Vec<Vec2>,
    pub params: Vec<f64>,
    pub speeds: Vec<f64>,
    pub values: Vec<f64>,
    pub field_label: FieldLabel,
    pub seed: Seed,
    pub class: StreamClass,
    pub termination: Termination,
    pub arc_length: f64,
}

impl Streamline {
    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn end(&self) -> Vec2 {
        self.points[self.points.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cut after point `i`, recording the termination.
    pub fn truncated(&self, i: usize, termination: Termination) -> Streamline {
        let n = (i + 1).min(self.points.len());
        let points = self.points[..n].to_vec();
        Streamline {
            arc_length: polyline_length(&points),
            points,
            params: self.params[..n].to_vec(),
            speeds: self.speeds[..n].to_vec(),
            values: self.values[..n].to_vec(),
            termination,
            ..self.clone()
        }
    }

    /// Position at time `t` by linear interpolation; `None` past the end.
    pub fn at_param(&self, t: f64) -> Option<Vec2> {
        if t < self.params[0] || t > self.params[self.params.len() - 1] {
            return None;
        }
        let i = self
            .params
            .partition_point(|&s| s <= t)
            .clamp(1, self.params.len() - 1);
        let (t0, t1) = (self.params[i - 1], self.params[i]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        Some(self.points[i - 1].lerp(self.points[i], w))
    }

    /// Distance from `x` to the curve, with the segment index and the
    /// closest point.
    pub fn distance_to(&self, x: Vec2) -> (f64, usize, Vec2) {
        if self.points.len() == 1 {
            return (x.dist(self.points[0]), 0, self.points[0]);
        }
        let mut best = (f64::INFINITY, 0, self.points[0]);
        for k in 0..self.points.len() - 1 {
            let c = closest_on_segment(x, self.points[k], self.points[k + 1]);
            let d = x.dist(c);
            if d < best.0 {
                best = (d, k, c);
            }
        }
        best
    }

    /// CSV with columns `t,x,y,speed,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y,speed,value\n");
        for i in 0..self.points.len() {
            let _ = writeln!(
                s,
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                self.params[i], self.points[i].x, self.points[i].y, self.speeds[i], self.values[i]
            );
        }
        s
    }
}

fn unit_gradient(field: &ScalarField, x: Vec2) -> Option<(Vec2, f64)> {
    let g = field.gradient(x).ok()?;
    let s = g.norm();
    if s > 0.0 && s.is_finite() {
        Some((g / s, s))
    } else {
        None
    }
}

/// One RK4 step of length `ds` along the unit gradient; `None` if a stage
/// leaves the domain, or turns by more than `max_turn` radians.
fn rk4_step(field: &ScalarField, x: Vec2, k1: Vec2, ds: f64, max_turn: f64) -> Option<Vec2> {
    let (k2, _) = unit_gradient(field, x + k1 * (0.5 * ds))?;
    let (k3, _) = unit_gradient(field, x + k2 * (0.5 * ds))?;
    let (k4, _) = unit_gradient(field, x + k3 * ds)?;
    if k1.dot(k4) < max_turn.cos() {
        return None;
    }
    Some(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (ds / 6.0))
}

/// Integrate `dx/dt = ∇f` from `start` with classical RK4 in arc length
/// (steps of `cfg.step`, halved where the direction turns sharply).
pub fn trace(
    field: &ScalarField,
    ridge: &HighRidge,
    start: Vec2,
    cfg: &TraceConfig,
) -> Result<Streamline> {
    trace_seeded(
        field,
        ridge,
        start,
        cfg,
        Seed::Interior,
        StreamClass::Generic,
    )
}

pub fn trace_seeded(
    field: &ScalarField,
    ridge: &HighRidge,
    start: Vec2,
    cfg: &TraceConfig,
    seed: Seed,
    class: StreamClass,
) -> Result<Streamline> {
    let poly = field.grid().polygon();
    if !poly.contains_strictly(start) {
        return Err(Error::StartOutside(start.x, start.y));
    }
    if ridge.distance(start) <= cfg.ridge_tol {
        return Err(Error::StartOnRidge(start.x, start.y));
    }
    let mut points = vec![start];
    let mut params = vec![0.0];
    let (mut dir, mut speed) = match unit_gradient(field, start) {
        Some(d) => d,
        None => (Vec2::ZERO, 0.0),
    };
    let mut speeds = vec![speed];
    let mut values = vec![field.value(start)?];
    let mut termination = Termination::MaxSteps;
    if speed < cfg.speed_floor {
        termination = Termination::SpeedFloor;
    } else {
        for _ in 0..cfg.max_steps {
            let x = points[points.len() - 1];
            let mut ds = cfg.step;
            let mut next = None;
            for _ in 0..=cfg.max_halvings {
                next = rk4_step(field, x, dir, ds, 0.5);
                if next.is_some() {
                    break;
                }
                ds *= 0.5;
            }
            let y = match next.filter(|&y| poly.contains(y)) {
                Some(y) => y,
                None => {
                    termination = Termination::LeftDomain;
                    break;
                }
            };
            let (d, s) = match unit_gradient(field, y) {
                Some(v) => v,
                None => {
                    termination = Termination::SpeedFloor;
                    break;
                }
            };
            let val = field.value(y)?;
            if val <= values[values.len() - 1] {
                termination = Termination::Stalled;
                break;
            }
            let dt = 0.5 * ds * (1.0 / speed + 1.0 / s);
            points.push(y);
            params.push(params[params.len() - 1] + dt);
            speeds.push(s);
            values.push(val);
            dir = d;
            speed = s;
            if ridge.distance(y) <= cfg.ridge_tol {
                termination = Termination::ReachedRidge;
                break;
            }
            if s < cfg.speed_floor {
                termination = Termination::SpeedFloor;
                break;
            }
        }
    }
    Ok(Streamline {
        arc_length: polyline_length(&points),
        points,
        params,
        speeds,
        values,
        field_label: field.label(),
        seed,
        class,
        termination,
    })
}

/// Seed offset from a corner along its bisector, in units of `h`.
pub const CORNER_SEED_CELLS: f64 = 3.0;

/// The attracting streamline `γ_j`: traced in `v` from `P_j + 3h b_j`, `b_j`
/// the inward bisector.
pub fn attracting_streamline(
    limit: &GroundLimit,
    polygon: &Polygon,
    ridge: &HighRidge,
    j: usize,
    cfg: &TraceConfig,
) -> Result<Streamline> {
    attracting_streamline_in(&limit.v, polygon, ridge, j, cfg)
}

/// The streamline of `field` from the corner seed `P_j + 3h b_j`.
pub fn attracting_streamline_in(
    field: &ScalarField,
    polygon: &Polygon,
    ridge: &HighRidge,
    j: usize,
    cfg: &TraceConfig,
) -> Result<Streamline> {
    let h = field.grid().h();
    let b = corner_bisector(polygon, j)?;
    let start = polygon.vertex(j) + b * (CORNER_SEED_CELLS * h);
    if !polygon.contains_strictly(start) || polygon.signed_distance(start) < 0.5 * h {
        return Err(Error::SeedOutside(j));
    }
    trace_seeded(
        field,
        ridge,
        start,
        cfg,
        Seed::Corner { corner: j },
        StreamClass::Attracting,
    )
}

/// All attracting streamlines, in corner order.
pub fn attracting_streamlines(
    limit: &GroundLimit,
    polygon: &Polygon,
    ridge: &HighRidge,
    cfg: &TraceConfig,
) -> Result<Vec<Streamline>> {
    attracting_streamlines_in(&limit.v, polygon, ridge, cfg)
}

pub fn attracting_streamlines_in(
    field: &ScalarField,
    polygon: &Polygon,
    ridge: &HighRidge,
    cfg: &TraceConfig,
) -> Result<Vec<Streamline>> {
    (0..polygon.len())
        .into_par_iter()
        .map(|j| attracting_streamline_in(field, polygon, ridge, j, cfg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideMax {
    pub side: usize,
    /// `M_k` on the side.
    pub point: Vec2,
    /// Fraction along the side.
    pub at: f64,
    pub speed: f64,
    /// Largest rise after, or drop before, the maximum.
    pub unimodal_defect: f64,
    pub non_unimodal: bool,
    pub samples: Vec<(f64, f64)>,
}

/// Relative width of the top plateau whose midpoint is taken as `M_k`.
pub const SIDE_PLATEAU_RTOL: f64 = 5e-3;
/// Relative tolerance of the unimodality test along a side.
pub const SIDE_UNIMODAL_RTOL: f64 = 2e-2;

/// Sample `|∇f|` on the segment parallel to side `k` at distance `h`
/// inside, with stride `h/2`, and return `M_k`: the midpoint of the top
/// plateau (samples within `SIDE_PLATEAU_RTOL` of the max) containing the
/// argmax. Flags a profile that is not increasing-then-decreasing within
/// `SIDE_UNIMODAL_RTOL`.
pub fn find_side_max(field: &ScalarField, polygon: &Polygon, k: usize) -> Result<SideMax> {
    let n = polygon.len();
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, len: n });
    }
    let h = field.grid().h();
    let (a, b) = polygon.side(k);
    let len = a.dist(b);
    let e = (b - a) / len;
    let nrm = polygon.inward_normal(k);
    let m = ((len / (0.5 * h)).floor() as usize).max(2);
    let mut samples = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let s = i as f64 / m as f64;
        let x = a + e * (s * len) + nrm * h;
        if !polygon.contains_strictly(x) || polygon.signed_distance(x) < 0.5 * h {
            continue;
        }
        samples.push((s, field.gradient(x)?.norm()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "side {k} is too short to sample"
        )));
    }
    let (imax, gmax) =
        samples
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &(_, g))| if g > acc.1 { (i, g) } else { acc },
            );
    let floor = gmax * (1.0 - SIDE_PLATEAU_RTOL);
    let mut lo = imax;
    while lo > 0 && samples[lo - 1].1 >= floor {
        lo -= 1;
    }
    let mut hi = imax;
    while hi + 1 < samples.len() && samples[hi + 1].1 >= floor {
        hi += 1;
    }
    let at = 0.5 * (samples[lo].0 + samples[hi].0);
    let mut defect = 0.0f64;
    for i in 1..samples.len() {
        let step = samples[i].1 - samples[i - 1].1;
        if i <= imax {
            defect = defect.max(-step);
        } else {
            defect = defect.max(step);
        }
    }
    Ok(SideMax {
        side: k,
        point: a + e * (at * len),
        at,
        speed: gmax,
        unimodal_defect: defect,
        non_unimodal: defect > SIDE_UNIMODAL_RTOL * gmax,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Median {
    pub side_max: SideMax,
    pub streamline: Streamline,
    /// Index of the first join or ridge event.
    pub event_index: usize,
    /// Max distance of the arc up to the event from the chord seed-event.
    pub straightness: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Straightness tolerance in units of `h`.
pub const MEDIAN_STRAIGHT_CELLS: f64 = 3.0;

/// The median from `M_k`: traced in `u` from `M_k + 3h n_k`, truncated at its
/// first meeting with one of `others` (or its end), with the largest
/// distance from the chord.
pub fn median(
    limit: &GroundLimit,
    polygon: &Polygon,
    ridge: &HighRidge,
    k: usize,
    others: &[Streamline],
    cfg: &TraceConfig,
) -> Result<Median> {
    median_in(&limit.u, polygon, ridge, k, others, cfg)
}

/// The median of side `k` for any `u`-type field.
pub fn median_in(
    field: &ScalarField,
    polygon: &Polygon,
    ridge: &HighRidge,
    k: usize,
    others: &[Streamline],
    cfg: &TraceConfig,
) -> Result<Median> {
    let h = field.grid().h();
    let side_max = find_side_max(field, polygon, k)?;
    let start = side_max.point + polygon.inward_normal(k) * (CORNER_SEED_CELLS * h);
    let s = trace_seeded(
        field,
        ridge,
        start,
        cfg,
        Seed::Side {
            side: k,
            at: side_max.at,
        },
        StreamClass::Median,
    )?;
    let event = first_event(&s, others, JOIN_TOL_CELLS * h);
    let s = match event.join {
        Some((id, p)) => s.truncated(
            event.index,
            Termination::JoinedCurve {
                id,
                point: [p.x, p.y],
            },
        ),
        None => s,
    };
    let straightness = chord_deviation(&s.points[..=event.index.min(s.len() - 1)]);
    let threshold = MEDIAN_STRAIGHT_CELLS * h;
    Ok(Median {
        side_max,
        event_index: event.index.min(s.len() - 1),
        straightness,
        threshold,
        pass: straightness <= threshold,
        streamline: s,
    })
}

/// Largest distance of the points from the chord joining the first and
/// last point.
pub fn chord_deviation(points: &[Vec2]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let (a, b) = (points[0], points[points.len() - 1]);
    points
        .iter()
        .map(|&x| x.dist(closest_on_segment(x, a, b)))
        .fold(0.0, f64::max)
}

/// Join tolerance in units of `h`.
pub const JOIN_TOL_CELLS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Meet {
    pub point: Vec2,
    pub index_a: usize,
    pub index_b: usize,
    pub param_a: f64,
    pub param_b: f64,
    /// Point of `a` closest to `b` within arc length `3 tol` after the
    /// detection: where the curves actually merge.
    pub junction_index: usize,
    pub junction: Vec2,
    /// `a` separates from `b` on the other side after the meeting.
    pub crossing: bool,
}

/// First point of `a` within `tol` of `b`, after `a` has been farther than
/// `tol` from `b` (a common start is not a meeting). The junction is the
/// closest approach shortly after. `crossing` is set when
/// a later point of `a`, clear of `b` by more than `2 tol` and projecting
/// onto the interior of `b`, lies on the other side.
pub fn join_detection(a: &Streamline, b: &Streamline, tol: f64) -> Option<Meet> {
    if a.is_empty() || b.len() < 2 {
        return None;
    }
    let side = |x: Vec2, k: usize| {
        (b.points[k + 1] - b.points[k])
            .cross(x - b.points[k])
            .signum()
    };
    let mut armed = false;
    let mut last_side = 0.0;
    for i in 0..a.len() {
        let (d, k, c) = b.distance_to(a.points[i]);
        if d > tol {
            armed = true;
            last_side = side(a.points[i], k);
            continue;
        }
        if !armed {
            continue;
        }
        let seg = b.points[k].dist(b.points[k + 1]);
        let w = if seg > 0.0 {
            b.points[k].dist(c) / seg
        } else {
            0.0
        };
        let param_b = b.params[k] + w * (b.params[k + 1] - b.params[k]);
        let mut junction_index = i;
        let mut closest = d;
        let mut walked = 0.0;
        for j in i + 1..a.len() {
            walked += a.points[j - 1].dist(a.points[j]);
            if walked > 3.0 * tol {
                break;
            }
            let dj = b.distance_to(a.points[j]).0;
            if dj < closest {
                closest = dj;
                junction_index = j;
            }
        }
        let mut crossing = false;
        for j in i + 1..a.len() {
            let (dj, kj, cj) = b.distance_to(a.points[j]);
            let interior = cj != b.points[0] && cj != b.points[b.len() - 1];
            if dj > 2.0 * tol && interior && side(a.points[j], kj) != last_side {
                crossing = true;
                break;
            }
        }
        return Some(Meet {
            point: a.points[i],
            index_a: i,
            index_b: k,
            param_a: a.params[i],
            param_b,
            junction_index,
            junction: a.points[junction_index],
            crossing,
        });
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Index on the curve of the first event, at the junction (the last
    /// point if none).
    pub index: usize,
    /// Index where the joined curve first came within the tolerance (equal
    /// to `index` if none).
    pub detect_index: usize,
    pub point: Vec2,
    /// Position in `others` and the meeting point, for a join.
    pub join: Option<(usize, Vec2)>,
    pub crossing: bool,
}

/// First join of `s` with any of `others`; otherwise the end of `s`.
pub fn first_event(s: &Streamline, others: &[Streamline], tol: f64) -> Event {
    let mut best: Option<(usize, Meet)> = None;
    for (id, o) in others.iter().enumerate() {
        if std::ptr::eq(o, s) {
            continue;
        }
        if let Some(m) = join_detection(s, o, tol) {
            if best.is_none_or(|(_, b)| m.index_a < b.index_a) {
                best = Some((id, m));
            }
        }
    }
    match best {
        Some((id, m)) => Event {
            index: m.junction_index,
            detect_index: m.index_a,
            point: m.junction,
            join: Some((id, m.junction)),
            crossing: m.crossing,
        },
        None => Event {
            index: s.len() - 1,
            detect_index: s.len() - 1,
            point: s.end(),
            join: None,
            crossing: false,
        },
    }
}

/// Seeds evenly spaced along the boundary by arc length, at distance
/// `offset` inside, with their foot at least `clearance` from every corner.
pub fn boundary_seeds(
    polygon: &Polygon,
    count: usize,
    offset: f64,
    clearance: f64,
) -> Vec<(Seed, Vec2)> {
    let per = polygon.perimeter();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut s = (i as f64 + 0.5) / count as f64 * per;
        for k in 0..polygon.len() {
            let (a, b) = polygon.side(k);
            let len = a.dist(b);
            if s <= len || k + 1 == polygon.len() {
                let margin = (clearance / len).min(0.5);
                let at = (s / len).clamp(margin, 1.0 - margin);
                let x = a.lerp(b, at) + polygon.inward_normal(k) * offset;
                out.push((Seed::Side { side: k, at }, x));
                break;
            }
            s -= len;
        }
    }
    out
}

/// Manifest entry written next to the CSV dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: usize,
    pub file: String,
    pub class: StreamClass,
    pub field: FieldLabel,
    pub seed: Seed,
    pub start: [f64; 2],
    pub termination: Termination,
    pub arc_length: f64,
    pub points: usize,
}

pub fn manifest_entry(id: usize, file: &str, s: &Streamline) -> ManifestEntry {
    ManifestEntry {
        id,
        file: file.to_string(),
        class: s.class,
        field: s.field_label,
        seed: s.seed,
        start: [s.start().x, s.start().y],
        termination: s.termination,
        arc_length: s.arc_length,
        points: s.len(),
    }
}
