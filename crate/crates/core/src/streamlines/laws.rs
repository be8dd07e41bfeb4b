use super::{trace, Streamline, TraceConfig};
use crate::contour::{curvature_sign_changes, resample};
use crate::error::{Error, Result};
use crate::fields::{FieldView, ScalarField, U_FLOOR};
use crate::geometry::{HighRidge, Polygon};
use crate::infinity::GroundLimit;
use crate::vec2::{polyline_length, Vec2};
use serde::{Deserialize, Serialize};

/// `|∇u|` and `|∇v| = |∇u| / u` along the curve.
fn u_and_v_speeds(s: &Streamline, limit: &GroundLimit) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut us = Vec::with_capacity(s.len());
    let mut vs = Vec::with_capacity(s.len());
    for &x in &s.points {
        let g = limit.u.gradient(x)?.norm();
        let u = limit.u.value(x)?.max(U_FLOOR);
        us.push(g);
        vs.push(g / u);
    }
    Ok((us, vs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfileReport {
    /// Largest drop of `|∇u|` below its running max, off the contact region,
    /// relative to the max speed.
    pub u_drop: f64,
    pub u_nondecreasing: bool,
    /// Largest relative rise of `|∇v|` above its running min.
    pub v_rise: f64,
    pub v_nonincreasing: bool,
    /// `(max - min) / max` of `|∇u|` before the first event; `None` for
    /// attracting curves.
    pub variation: Option<f64>,
    pub constant_before_event: bool,
    pub tol: f64,
    pub pass: bool,
}

/// The three speed laws along one curve, each within relative tolerance
/// `tol`: `|∇u|` non-decreasing off the contact region, `|∇v|`
/// non-increasing along the whole trace, and (non-attracting curves only)
/// `|∇u|` constant up to `event_index`. For non-attracting curves the first
/// law is read up to the event: past it the curve rides an attracting one,
/// across which `∇u` jumps and grid gradients see only the mean. Points
/// within `stub` of the start or of the event are left out of the constancy
/// test.
pub fn speed_profile_checks(
    s: &Streamline,
    limit: &GroundLimit,
    in_contact: &dyn Fn(Vec2) -> bool,
    event_index: usize,
    attracting: bool,
    stub: f64,
    tol: f64,
) -> Result<SpeedProfileReport> {
    let (us, vs) = u_and_v_speeds(s, limit)?;
    let umax = us.iter().cloned().fold(0.0f64, f64::max);
    let mut run_max = f64::NEG_INFINITY;
    let mut u_drop = 0.0f64;
    let last = if attracting {
        s.len() - 1
    } else {
        event_index.min(s.len() - 1)
    };
    for (i, &g) in us.iter().enumerate().take(last + 1) {
        if in_contact(s.points[i]) {
            continue;
        }
        if run_max.is_finite() {
            u_drop = u_drop.max((run_max - g) / umax);
        }
        run_max = run_max.max(g);
    }
    let mut run_min = f64::INFINITY;
    let mut v_rise = 0.0f64;
    for &g in &vs {
        if run_min.is_finite() {
            v_rise = v_rise.max((g - run_min) / run_min);
        }
        run_min = run_min.min(g);
    }
    let variation = if attracting {
        None
    } else {
        let end = event_index.min(s.len() - 1);
        let event = s.points[end];
        let kept: Vec<f64> = (0..=end)
            .filter(|&i| s.points[i].dist(s.start()) >= stub && s.points[i].dist(event) >= stub)
            .map(|i| us[i])
            .collect();
        if kept.is_empty() {
            Some(0.0)
        } else {
            let hi = kept.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = kept.iter().cloned().fold(f64::INFINITY, f64::min);
            Some((hi - lo) / hi)
        }
    };
    let u_ok = u_drop <= tol;
    let v_ok = v_rise <= tol;
    let c_ok = variation.is_none_or(|v| v <= tol);
    Ok(SpeedProfileReport {
        u_drop,
        u_nondecreasing: u_ok,
        v_rise,
        v_nonincreasing: v_ok,
        variation,
        constant_before_event: c_ok,
        tol,
        pass: u_ok && v_ok && c_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCrossingReport {
    pub levels: Vec<f64>,
    pub counts: Vec<usize>,
    pub pass: bool,
}

/// Number of times the field value along the curve crosses each level.
/// Each level strictly between the first and last value must be crossed
/// exactly once; levels outside that range not at all.
pub fn level_crossing_check(s: &Streamline, levels: &[f64]) -> LevelCrossingReport {
    let first = s.values[0];
    let last = s.values[s.values.len() - 1];
    let (lo, hi) = (first.min(last), first.max(last));
    let mut pass = true;
    let counts: Vec<usize> = levels
        .iter()
        .map(|&c| {
            let n = s
                .values
                .windows(2)
                .filter(|w| (w[0] < c && w[1] >= c) || (w[0] > c && w[1] <= c))
                .count();
            let expected = usize::from(c > lo && c <= hi);
            pass &= n == expected;
            n
        })
        .collect();
    LevelCrossingReport {
        levels: levels.to_vec(),
        counts,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub initial: f64,
    pub max_distance: f64,
    /// `max_distance / initial` (0 for identical seeds).
    pub ratio: f64,
    /// Time span compared.
    pub span: f64,
    pub pass: bool,
}

/// Trace from `x0` and `y0` in a `v`-type field and compare positions at
/// equal times up to `t_max`: PASS iff the distance never exceeds
/// `|x0 - y0| (1 + tol)`.
pub fn stability_check(
    field: &ScalarField,
    ridge: &HighRidge,
    x0: Vec2,
    y0: Vec2,
    t_max: f64,
    cfg: &TraceConfig,
    tol: f64,
) -> Result<StabilityReport> {
    let a = trace(field, ridge, x0, cfg)?;
    let b = trace(field, ridge, y0, cfg)?;
    let span = t_max.min(a.params[a.len() - 1]).min(b.params[b.len() - 1]);
    let initial = x0.dist(y0);
    let mut ts: Vec<f64> = a
        .params
        .iter()
        .chain(&b.params)
        .cloned()
        .filter(|&t| t <= span)
        .collect();
    ts.sort_by(f64::total_cmp);
    let mut worst = 0.0f64;
    for t in ts {
        if let (Some(p), Some(q)) = (a.at_param(t), b.at_param(t)) {
            worst = worst.max(p.dist(q));
        }
    }
    Ok(StabilityReport {
        initial,
        max_distance: worst,
        ratio: if initial > 0.0 { worst / initial } else { 0.0 },
        span,
        pass: worst <= initial * (1.0 + tol) + 1e-12,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcMetrics {
    /// Length `S` from the boundary to the event point.
    pub length: f64,
    /// Straight stub from the boundary to the first traced point.
    pub stub: f64,
    /// `length Λ∞`.
    pub length_lambda: f64,
    /// `|∇u(y)| / u(y)` at the point `y` where the join was detected, with
    /// `|∇u(y)|` the rate of increase of `u` along the arc over its last
    /// `2h` before `y`.
    pub ratio: f64,
    /// `ratio` times the length from the boundary to `y`.
    pub ratio_length: f64,
    pub sign_changes: usize,
    pub event: Vec2,
}

/// Length, end ratio and curvature sign changes of the arc from the
/// boundary to point `event_index`; the ratio is read at `ratio_index`
/// (at or before the event). The part between the boundary and the first
/// point is the straight continuation of the initial direction. Gradients
/// are taken one-sided along the arc: grid gradients average across the
/// curve being joined, where `∇u` jumps, and vanish at a point ridge.
pub fn arc_metrics(
    s: &Streamline,
    limit: &GroundLimit,
    polygon: &Polygon,
    event_index: usize,
    ratio_index: usize,
) -> Result<ArcMetrics> {
    if event_index == 0 || event_index >= s.len() || ratio_index == 0 || ratio_index > event_index {
        return Err(Error::NoEvent);
    }
    let h = limit.u.grid().h();
    let pts = &s.points[..=event_index];
    let back = (pts[0] - pts[1]).normalized();
    let stub = polygon.ray_exit(pts[0], back);
    let length = stub + polyline_length(pts);
    let y = pts[ratio_index];
    let uy = limit.u.value(y)?.max(U_FLOOR);
    let mut i = ratio_index;
    let mut walked = 0.0;
    while i > 0 && walked < 2.0 * h {
        walked += pts[i].dist(pts[i - 1]);
        i -= 1;
    }
    let slope = (uy - limit.u.value(pts[i])?) / walked;
    let ratio = slope / uy;
    let lambda = 1.0 / crate::geometry::chebyshev_set(polygon).inradius;
    let rs = resample(pts, 4.0 * h, false);
    Ok(ArcMetrics {
        length,
        stub,
        length_lambda: length * lambda,
        ratio,
        ratio_length: ratio * (stub + polyline_length(&pts[..=ratio_index])),
        sign_changes: curvature_sign_changes(&rs, false, h / length),
        event: pts[event_index],
    })
}
