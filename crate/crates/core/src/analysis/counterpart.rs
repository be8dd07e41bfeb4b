use super::confinement::{corner_segment_deviation, distance_to_structure};
use crate::error::Result;
use crate::fields::{s_operator_default, FieldView, ScalarField};
use crate::geometry::{HighRidge, Polygon};
use crate::infinity::{compare_u_potential, level_convexity, CompareReport, LevelConvexity};
use crate::streamlines::{
    attracting_streamlines_in, median_in, Streamline, Termination, TraceConfig, CORNER_SEED_CELLS,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Levels whose curves are tested for convexity.
pub const COUNTERPART_LEVELS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterpartMedian {
    pub side: usize,
    pub at: f64,
    pub straightness: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterpartReport {
    /// Largest distance of a corner streamline of `U` from the segment
    /// `P_j`-nearest point of `H`.
    pub attracting_deviation: f64,
    pub attracting_terminations: Vec<Termination>,
    pub attracting_pass: bool,
    pub medians: Vec<CounterpartMedian>,
    pub medians_pass: bool,
    pub levels: Vec<LevelConvexity>,
    pub levels_pass: bool,
    pub threshold: f64,
    /// Nodes where the ring operator of `U` exceeds `|∇U|` by more than 5% of
    /// `Λ∞`: a heuristic stand-in for the contact set (information only).
    pub kink_nodes: usize,
    /// Their largest distance from the corner streamlines of `U` and `H`.
    pub kink_distance: Option<f64>,
    /// `sup |u - U|` (information only).
    pub comparison: Option<CompareReport>,
    pub pass: bool,
}

/// The structural checks rerun on the infinity-potential: corner streamlines
/// to `H`, straight medians, convex level curves. The kink proxy and the
/// comparison with `u` are recorded but not judged.
pub fn potential_counterpart_suite(
    potential: &ScalarField,
    polygon: &Polygon,
    ridge: &HighRidge,
    u: Option<&ScalarField>,
    cfg: &TraceConfig,
) -> Result<(CounterpartReport, Vec<Streamline>)> {
    let g = potential.grid();
    let h = g.h();
    let threshold = CORNER_SEED_CELLS * h;
    let att = attracting_streamlines_in(potential, polygon, ridge, cfg)?;
    let deviation = corner_segment_deviation(&att, polygon, ridge);
    let terminations: Vec<Termination> = att.iter().map(|s| s.termination).collect();
    let attracting_pass = deviation <= threshold
        && terminations
            .iter()
            .all(|t| matches!(t, Termination::ReachedRidge));
    let mut medians = Vec::new();
    let mut curves = att.clone();
    for k in 0..polygon.len() {
        let m = median_in(potential, polygon, ridge, k, &att, cfg)?;
        medians.push(CounterpartMedian {
            side: k,
            at: m.side_max.at,
            straightness: m.straightness,
            pass: m.pass,
        });
        curves.push(m.streamline);
    }
    let medians_pass = medians.iter().all(|m| m.pass);
    let levels = level_convexity(potential, &COUNTERPART_LEVELS);
    let levels_pass = levels.iter().all(|l| l.pass && l.hull_defect <= h);

    let floor = (super::contact::S_DISTANCE_CELLS) * h;
    let kinks: Vec<_> = g
        .interior_nodes()
        .collect::<Vec<_>>()
        .into_par_iter()
        .filter_map(|k| {
            let x = g.node_at(k);
            if polygon.signed_distance(x) < floor || ridge.distance(x) < floor {
                return None;
            }
            let s = s_operator_default(potential, x, h).ok()?;
            let grad = potential.gradient(x).ok()?.norm();
            (s - grad > 0.05 * ridge.lambda_inf).then_some(x)
        })
        .collect();
    let kink_distance = kinks
        .iter()
        .map(|&x| distance_to_structure(x, &att, ridge))
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |a| a.max(d)))
        });
    let comparison = match u {
        Some(u) => Some(compare_u_potential(u, potential)?),
        None => None,
    };
    Ok((
        CounterpartReport {
            attracting_deviation: deviation,
            attracting_terminations: terminations,
            attracting_pass,
            medians,
            medians_pass,
            levels,
            levels_pass,
            threshold,
            kink_nodes: kinks.len(),
            kink_distance,
            comparison,
            pass: attracting_pass && medians_pass && levels_pass,
        },
        curves,
    ))
}
