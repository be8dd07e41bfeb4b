use crate::contour::{level_curves, resample};
use crate::error::{Error, Result};
use crate::fields::{FieldView, ScalarField};
use crate::geometry::HighRidge;
use crate::streamlines::{
    join_detection, trace_seeded, Seed, StreamClass, Streamline, TraceConfig, JOIN_TOL_CELLS,
};
use crate::vec2::{point_polyline_distance, polyline_length, Vec2};
use serde::{Deserialize, Serialize};

/// Width, in cells, at which the two sides of a triangular quad are cut.
pub const APEX_CELLS: f64 = 6.0;

/// First point where the values along `s` reach `c`, interpolated.
pub fn level_crossing(s: &Streamline, c: f64) -> Option<(usize, Vec2)> {
    (1..s.len())
        .find(|&i| s.values[i] >= c && s.values[i - 1] < c)
        .map(|i| {
            let (a, b) = (s.values[i - 1], s.values[i]);
            let w = (c - a) / (b - a);
            (i, s.points[i - 1].lerp(s.points[i], w))
        })
}

/// The arc of the level curve `{u = c}` from `p` to `q`, both within `2h` of
/// the same extracted curve (the shorter way round a closed one).
pub fn level_arc(u: &ScalarField, c: f64, p: Vec2, q: Vec2) -> Result<Vec<Vec2>> {
    let h = u.grid().h();
    let curves = level_curves(u, c);
    let nearest = |pts: &[Vec2], x: Vec2| {
        pts.iter()
            .enumerate()
            .map(|(i, y)| (i, y.dist(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, f64::INFINITY))
    };
    for cv in &curves {
        let (ip, dp) = nearest(&cv.points, p);
        let (iq, dq) = nearest(&cv.points, q);
        if dp > 2.0 * h || dq > 2.0 * h {
            continue;
        }
        let n = cv.points.len();
        let forward: Vec<Vec2> = if ip <= iq {
            cv.points[ip..=iq].to_vec()
        } else {
            cv.points[iq..=ip].iter().rev().cloned().collect()
        };
        let mut path = forward;
        if cv.closed {
            let lin = (ip as isize - iq as isize).unsigned_abs();
            if n - lin < lin {
                let step = if ip <= iq { n - 1 } else { 1 };
                let mut other = vec![cv.points[ip]];
                let mut i = ip;
                while i != iq {
                    i = (i + step) % n;
                    other.push(cv.points[i]);
                }
                path = other;
            }
        }
        let mut arc = vec![p];
        arc.extend(path);
        arc.push(q);
        return Ok(arc);
    }
    Err(Error::QuadConstructionFailed(format!(
        "level {c:.4} does not connect ({:.4}, {:.4}) and ({:.4}, {:.4}) within 2h",
        p.x, p.y, q.x, q.y
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadReport {
    pub lower: f64,
    pub upper: f64,
    pub triangular: bool,
    pub lower_arc_length: f64,
    pub upper_arc_length: f64,
    pub lower_max: f64,
    pub upper_max: f64,
    /// `upper_max <= lower_max (1 + tol)`.
    pub dominated: bool,
    /// Smaller of the largest drop and the largest rise of `|∇u|` along the
    /// upper arc, relative to its max.
    pub upper_monotone_defect: f64,
    pub upper_monotone: bool,
    pub test_curves: usize,
    pub interior_joins: usize,
    pub tol: f64,
    pub pass: bool,
}

fn speeds(u: &ScalarField, arc: &[Vec2], spacing: f64) -> Result<Vec<f64>> {
    resample(arc, spacing, false)
        .into_iter()
        .map(|x| Ok(u.gradient(x)?.norm()))
        .collect()
}

fn monotone_defect(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return 0.0;
    }
    let (mut run_max, mut run_min) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut drop, mut rise) = (0.0f64, 0.0f64);
    for &x in v {
        drop = drop.max(run_max - x);
        rise = rise.max(x - run_min);
        run_max = run_max.max(x);
        run_min = run_min.min(x);
    }
    drop.min(rise) / max
}

/// The quadrilateral bounded by the `u`-streamlines `a` and `b` and the level
/// arcs `{u = lower}` and `{u = upper}` between them. With `upper = None` the
/// quad is triangular: its upper arc is cut where `a` and `b` come within
/// `6h` of each other. Checks that the max of `|∇u|` on the upper arc is at
/// most that on the lower arc, that `|∇u|` is monotone along the upper arc,
/// and that test streamlines seeded on the lower arc do not join each other
/// or `a`, `b` strictly inside; all within relative tolerance `tol`. A
/// triangular quad's upper arc stands in for its apex, so monotonicity is
/// recorded there but not required.
#[allow(clippy::too_many_arguments)]
pub fn quadrilateral_rule_check(
    u: &ScalarField,
    ridge: &HighRidge,
    a: &Streamline,
    b: &Streamline,
    lower: f64,
    upper: Option<f64>,
    cfg: &TraceConfig,
    tol: f64,
) -> Result<QuadReport> {
    let h = u.grid().h();
    let fail = |m: &str| Error::QuadConstructionFailed(m.to_string());
    let upper_level = match upper {
        Some(c) => c,
        None => {
            let i = (0..a.len())
                .find(|&i| b.distance_to(a.points[i]).0 <= APEX_CELLS * h)
                .ok_or_else(|| fail("the sides never come within 6h"))?;
            a.values[i]
        }
    };
    if !(upper_level > lower) {
        return Err(fail("the upper level must exceed the lower"));
    }
    let (ia0, pa0) =
        level_crossing(a, lower).ok_or_else(|| fail("side a misses the lower level"))?;
    let (_, pb0) = level_crossing(b, lower).ok_or_else(|| fail("side b misses the lower level"))?;
    let (ia1, pa1) =
        level_crossing(a, upper_level).ok_or_else(|| fail("side a misses the upper level"))?;
    let (ib1, pb1) =
        level_crossing(b, upper_level).ok_or_else(|| fail("side b misses the upper level"))?;
    let lower_arc = level_arc(u, lower, pa0, pb0)?;
    let upper_arc = if pa1.dist(pb1) <= 2.0 * h {
        vec![pa1, pb1]
    } else {
        level_arc(u, upper_level, pa1, pb1)?
    };
    let lower_len = polyline_length(&lower_arc);
    let upper_len = polyline_length(&upper_arc);
    let ls = speeds(u, &lower_arc, 0.5 * h)?;
    let us = speeds(u, &upper_arc, 0.5 * h)?;
    let lower_max = ls.iter().cloned().fold(0.0f64, f64::max);
    let upper_max = us.iter().cloned().fold(0.0f64, f64::max);
    let defect = monotone_defect(&us);

    let jt = JOIN_TOL_CELLS * h;
    let n = ((lower_len.min(upper_len) / (2.0 * jt)).floor() as usize)
        .saturating_sub(1)
        .clamp(1, 5);
    let dense = resample(&lower_arc, 0.25 * h, false);
    let mut curves: Vec<Streamline> = Vec::new();
    let cut = |s: &Streamline| -> Streamline {
        let end = (0..s.len())
            .find(|&i| s.values[i] >= upper_level)
            .unwrap_or(s.len() - 1);
        s.truncated(end, s.termination)
    };
    for k in 1..=n {
        let target = lower_len * k as f64 / (n + 1) as f64;
        let mut walked = 0.0;
        let mut x = dense[dense.len() - 1];
        for w in dense.windows(2) {
            walked += w[0].dist(w[1]);
            if walked >= target {
                x = w[1];
                break;
            }
        }
        let s = trace_seeded(u, ridge, x, cfg, Seed::Interior, StreamClass::Generic)?;
        curves.push(cut(&s));
    }
    let tests = curves.len();
    let a_seg = a.truncated(ia1, a.termination);
    let b_seg = b.truncated(ib1, b.termination);
    let a_seg = Streamline {
        points: a_seg.points[ia0 - 1..].to_vec(),
        params: a_seg.params[ia0 - 1..].to_vec(),
        speeds: a_seg.speeds[ia0 - 1..].to_vec(),
        values: a_seg.values[ia0 - 1..].to_vec(),
        ..a_seg
    };
    curves.push(a_seg);
    curves.push(b_seg);
    let mut joins = 0;
    for i in 0..tests {
        for j in 0..curves.len() {
            if i == j {
                continue;
            }
            if let Some(m) = join_detection(&curves[i], &curves[j], jt) {
                if point_polyline_distance(m.point, &upper_arc) > jt {
                    joins += 1;
                }
            }
        }
    }
    let dominated = upper_max <= lower_max * (1.0 + tol);
    let monotone = defect <= tol;
    Ok(QuadReport {
        lower,
        upper: upper_level,
        triangular: upper.is_none(),
        lower_arc_length: lower_len,
        upper_arc_length: upper_len,
        lower_max,
        upper_max,
        dominated,
        upper_monotone_defect: defect,
        upper_monotone: monotone,
        test_curves: tests,
        interior_joins: joins,
        tol,
        pass: dominated && joins == 0 && (monotone || upper.is_none()),
    })
}
