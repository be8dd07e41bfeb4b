use super::{ContactEstimate, SField};
use crate::geometry::{HighRidge, Polygon};
use crate::streamlines::{Streamline, CORNER_SEED_CELLS};
use crate::vec2::{point_segment_distance, Vec2};
use serde::{Deserialize, Serialize};

/// Distance from `x` to `∪γ_j ∪ H`.
pub fn distance_to_structure(x: Vec2, attracting: &[Streamline], ridge: &HighRidge) -> f64 {
    attracting
        .iter()
        .map(|g| g.distance_to(x).0)
        .fold(ridge.distance(x), f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfinementReport {
    /// One-sided Hausdorff distance from the contact nodes to `∪γ_j ∪ H`.
    pub distance: f64,
    pub threshold: f64,
    pub nodes: usize,
    pub worst_at: Option<[f64; 2]>,
    pub pass: bool,
}

/// Contact nodes lie within `4h + 3h` of the attracting streamlines or `H`.
/// An empty contact estimate passes.
pub fn theorem1_check(
    contact: &ContactEstimate,
    attracting: &[Streamline],
    ridge: &HighRidge,
) -> ConfinementReport {
    let threshold = (4.0 + CORNER_SEED_CELLS) * contact.h;
    let mut worst = (0.0f64, None);
    for &x in &contact.nodes {
        let d = distance_to_structure(x, attracting, ridge);
        if d > worst.0 || worst.1.is_none() {
            worst = (d, Some([x.x, x.y]));
        }
    }
    ConfinementReport {
        distance: worst.0,
        threshold,
        nodes: contact.nodes.len(),
        worst_at: worst.1,
        pass: worst.0 <= threshold,
    }
}

/// Largest distance of a point of `γ_j` from the segment joining `P_j` to
/// the nearest point of `H`, over all corners.
pub fn corner_segment_deviation(
    attracting: &[Streamline],
    polygon: &Polygon,
    ridge: &HighRidge,
) -> f64 {
    let mut worst = 0.0f64;
    for (j, g) in attracting.iter().enumerate() {
        let p = polygon.vertex(j);
        let q = ridge.nearest_point(p);
        for &x in &g.points {
            worst = worst.max(point_segment_distance(x, p, q));
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureReport {
    pub traces: usize,
    /// Traces that reached the contact region.
    pub entered: usize,
    /// Largest distance from the contact region after the first entry.
    pub worst_exit: f64,
    pub threshold: f64,
    pub worst_trace: Option<usize>,
    pub pass: bool,
}

/// Once a trace has entered the contact region it stays within `2h` of it.
/// The region is the union of the cells of the contact nodes; distances are
/// measured from node to node less the half diagonal of a cell.
pub fn capture_check(traces: &[Streamline], contact: &ContactEstimate) -> CaptureReport {
    let h = contact.h;
    let threshold = 2.0 * h;
    let half_diag = 0.5 * std::f64::consts::SQRT_2 * h;
    let reach = threshold + half_diag + 4.0 * h;
    let mut entered = 0;
    let mut worst = (0.0f64, None);
    for (id, s) in traces.iter().enumerate() {
        let Some(first) = s.points.iter().position(|&x| contact.contains_cell(x)) else {
            continue;
        };
        entered += 1;
        for &x in &s.points[first..] {
            let d = contact.distance(x, reach).min(reach);
            let exit = (d - half_diag).max(0.0);
            if exit > worst.0 {
                worst = (exit, Some(id));
            }
        }
    }
    CaptureReport {
        traces: traces.len(),
        entered,
        worst_exit: worst.0,
        threshold,
        worst_trace: worst.1,
        pass: worst.0 <= threshold,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRow {
    pub h: f64,
    pub epsilon: f64,
    pub nodes: usize,
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaTrendReport {
    pub rows: Vec<AreaRow>,
    pub monotone_in_epsilon: bool,
    pub monotone_in_h: bool,
    /// Thresholds at which every examined node was admitted.
    pub saturated: Vec<f64>,
    pub pass: bool,
}

/// Contact measure `count h²` for each threshold and each resolution. The
/// measure must not grow as `ε` decreases at fixed `h`, nor as `h`
/// decreases at fixed `ε`, beyond one cell of the coarser grid.
pub fn area_zero_trend(fields: &[&SField], eps_list: &[f64]) -> AreaTrendReport {
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut fs: Vec<&SField> = fields.to_vec();
    fs.sort_by(|a, b| b.grid.h().total_cmp(&a.grid.h()));
    let mut rows = Vec::new();
    let mut saturated = Vec::new();
    for f in &fs {
        for &e in &eps {
            let c = ContactEstimate::from_s_field(f, e);
            if f.examined > 0
                && c.nodes.len() + f.irregular >= f.examined
                && !saturated.contains(&e)
            {
                saturated.push(e);
            }
            rows.push(AreaRow {
                h: f.grid.h(),
                epsilon: e,
                nodes: c.nodes.len(),
                measure: c.measure,
            });
        }
    }
    let n = eps.len();
    let mut in_eps = true;
    for block in rows.chunks(n.max(1)) {
        in_eps &= block.windows(2).all(|w| w[1].measure <= w[0].measure);
    }
    let mut in_h = true;
    for i in 0..n {
        for w in 1..fs.len() {
            let coarse = &rows[(w - 1) * n + i];
            let fine = &rows[w * n + i];
            in_h &= fine.measure <= coarse.measure + coarse.h * coarse.h;
        }
    }
    AreaTrendReport {
        rows,
        monotone_in_epsilon: in_eps,
        monotone_in_h: in_h,
        saturated,
        pass: in_eps && in_h,
    }
}

/// The table as CSV: `h,epsilon,nodes,measure`.
pub fn area_csv(report: &AreaTrendReport) -> String {
    let mut s = String::from("h,epsilon,nodes,measure\n");
    for r in &report.rows {
        s.push_str(&format!(
            "{:.10e},{},{},{:.10e}\n",
            r.h, r.epsilon, r.nodes, r.measure
        ));
    }
    s
}
