use super::confinement::distance_to_structure;
use super::ContactEstimate;
use crate::contour::level_curves;
use crate::fields::{FieldView, ScalarField};
use crate::geometry::HighRidge;
use crate::streamlines::Streamline;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Contact nodes farther than `4h` from `∪γ_j ∪ H`.
    pub off_nodes: usize,
    pub marched_points: usize,
    pub violations: usize,
    /// Largest distance of a marched point from the contact nodes.
    pub worst: f64,
    pub vacuous: bool,
    pub pass: bool,
}

/// For every contact node `z` off the attracting streamlines, march the
/// level curve `{u = u(z)}` from `z` toward the nearest `γ_j` (or `H`); all
/// marched points must lie within `4h` of contact nodes. Passes vacuously
/// when there are no such nodes.
pub fn level_arc_sweep_check(
    u: &ScalarField,
    contact: &ContactEstimate,
    attracting: &[Streamline],
    ridge: &HighRidge,
) -> SweepReport {
    let h = contact.h;
    let reach = 4.0 * h;
    let off: Vec<Vec2> = contact
        .nodes
        .iter()
        .cloned()
        .filter(|&x| distance_to_structure(x, attracting, ridge) > reach)
        .collect();
    let mut report = SweepReport {
        off_nodes: off.len(),
        marched_points: 0,
        violations: 0,
        worst: 0.0,
        vacuous: off.is_empty(),
        pass: true,
    };
    for z in off {
        let Ok(c) = u.value(z) else {
            continue;
        };
        let curves = level_curves(u, c);
        let Some((curve, start)) = curves
            .iter()
            .flat_map(|cv| {
                cv.points
                    .iter()
                    .enumerate()
                    .map(move |(i, p)| (cv, i, p.dist(z)))
            })
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(cv, i, _)| (cv, i))
        else {
            continue;
        };
        let n = curve.points.len();
        let dist = |i: usize| distance_to_structure(curve.points[i], attracting, ridge);
        let step = |i: usize, fwd: bool| -> Option<usize> {
            if fwd {
                if i + 1 < n {
                    Some(i + 1)
                } else if curve.closed {
                    Some(0)
                } else {
                    None
                }
            } else if i > 0 {
                Some(i - 1)
            } else if curve.closed {
                Some(n - 1)
            } else {
                None
            }
        };
        let d0 = dist(start);
        let ahead = step(start, true).map_or(f64::INFINITY, dist);
        let behind = step(start, false).map_or(f64::INFINITY, dist);
        let fwd = ahead <= behind;
        let mut i = start;
        for _ in 0..n {
            let x = curve.points[i];
            report.marched_points += 1;
            let d = contact.distance(x, 4.0 * reach).min(4.0 * reach);
            report.worst = report.worst.max(d);
            if d > reach {
                report.violations += 1;
            }
            if dist(i) <= h || dist(i) > d0 + reach {
                break;
            }
            match step(i, fwd) {
                Some(j) => i = j,
                None => break,
            }
        }
    }
    report.pass = report.violations == 0;
    report
}
