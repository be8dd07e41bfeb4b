//! The two limit objects: the variational infinity-ground state `u`, taken
//! from the top of the p-ladder, and the infinity-potential `U`, solved
//! directly by a monotone scheme on the ring `Ω \ H`.

mod potential;

pub use potential::{
    midrange_update, residual_infinity_laplacian, solve_infinity_potential, PotentialConfig,
    PotentialSolution, ResidualStats, STENCIL,
};

use crate::contour::{curvature_sign_changes, hull_defect, level_curves, resample};
use crate::eigensolver::GroundState;
use crate::error::{Error, Result};
use crate::fields::{FieldLabel, ScalarField};
use crate::geometry::{HighRidge, Polygon};
use crate::report::MarginReport;
use crate::tol_h;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct GroundLimit {
    /// Label `u`, sup-normalized.
    pub u: ScalarField,
    /// `v = log u`, label `v`.
    pub v: ScalarField,
    pub p_used: f64,
    pub p_prev: f64,
    pub lambda_root: f64,
    /// `max |u_{p_top} - u_{p_prev}|`.
    pub richardson_gap: f64,
}

/// Take the top rung as the limit `u` and record its distance to the rung
/// below.
pub fn extract_ground_limit(states: &[GroundState], ridge: &HighRidge) -> Result<GroundLimit> {
    if states.len() < 2 {
        return Err(Error::LadderTooShort(states.len()));
    }
    let top = &states[states.len() - 1];
    let prev = &states[states.len() - 2];
    if !top.field.grid().same_layout(prev.field.grid()) {
        return Err(Error::GridMismatch);
    }
    let g = top.field.grid();
    let gap = g
        .interior_nodes()
        .map(|k| (top.field.at(k) - prev.field.at(k)).abs())
        .fold(0.0, f64::max);
    let u = top.field.sup_normalized().with_label(FieldLabel::U);
    let v = u.log_field(FieldLabel::V);
    let _ = ridge;
    Ok(GroundLimit {
        u,
        v,
        p_used: top.p,
        p_prev: prev.p,
        lambda_root: top.lambda_root(),
        richardson_gap: gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// Worst violation of `u >= max(0, 1 - Λ∞ |x - x0|)`.
    pub lower: MarginReport,
    /// Worst violation of `u <= Λ∞ dist(x, ∂Ω)`.
    pub upper: MarginReport,
    pub pass: bool,
    pub lower_worst_at: [f64; 2],
    pub upper_worst_at: [f64; 2],
}

/// Squeeze of a field between the cone `1 - Λ∞ |x - x0|` (`x0` the nearest
/// point of `H`) and `Λ∞ dist(x, ∂Ω)`, at every inside node, within
/// `10 h Λ∞`.
pub fn sandwich_check(field: &ScalarField, polygon: &Polygon, ridge: &HighRidge) -> SandwichReport {
    let g = field.grid();
    let l = ridge.lambda_inf;
    let tol = tol_h(g.h(), l);
    let mut lo = (f64::NEG_INFINITY, 0.0, 0.0, [0.0; 2]);
    let mut hi = (f64::NEG_INFINITY, 0.0, 0.0, [0.0; 2]);
    for k in g.interior_nodes() {
        let x = g.node_at(k);
        let u = field.at(k);
        let cone = (1.0 - l * ridge.distance(x)).max(0.0);
        let dist = l * polygon.signed_distance(x);
        if cone - u > lo.0 {
            lo = (cone - u, u, cone, [x.x, x.y]);
        }
        if u - dist > hi.0 {
            hi = (u - dist, u, dist, [x.x, x.y]);
        }
    }
    let lower = MarginReport::lower(lo.1, lo.2, tol);
    let upper = MarginReport::upper(hi.1, hi.2, tol);
    SandwichReport {
        pass: lower.pass && upper.pass,
        lower,
        upper,
        lower_worst_at: lo.3,
        upper_worst_at: hi.3,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub sup_diff: f64,
    pub at: [f64; 2],
    pub mean_abs_diff: f64,
}

/// `max |u - U|` and where it occurs. A measurement only.
pub fn compare_u_potential(u: &ScalarField, potential: &ScalarField) -> Result<CompareReport> {
    if !u.grid().same_layout(potential.grid()) {
        return Err(Error::GridMismatch);
    }
    let g = u.grid();
    let mut best = (0.0f64, [f64::NAN; 2]);
    let mut sum = 0.0;
    let mut n = 0;
    for k in g.interior_nodes() {
        let d = (u.at(k) - potential.at(k)).abs();
        sum += d;
        n += 1;
        if d > best.0 || best.1[0].is_nan() {
            let x = g.node_at(k);
            best = (d, [x.x, x.y]);
        }
    }
    Ok(CompareReport {
        sup_diff: best.0,
        at: best.1,
        mean_abs_diff: if n > 0 { sum / n as f64 } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelConvexity {
    pub level: f64,
    pub curves: usize,
    pub closed: bool,
    pub sign_changes: usize,
    pub hull_defect: f64,
    pub pass: bool,
}

/// Convexity of the level curves `{field = c}`: each must be a single closed
/// curve whose discrete curvature keeps its sign (turns below `h / L`
/// ignored after resampling at `4h`).
pub fn level_convexity(field: &ScalarField, levels: &[f64]) -> Vec<LevelConvexity> {
    let h = field.grid().h();
    levels
        .iter()
        .map(|&c| {
            let curves = level_curves(field, c);
            let main = curves
                .iter()
                .max_by(|a, b| a.length().total_cmp(&b.length()));
            match main {
                None => LevelConvexity {
                    level: c,
                    curves: 0,
                    closed: false,
                    sign_changes: 0,
                    hull_defect: f64::NAN,
                    pass: false,
                },
                Some(cv) => {
                    let len = cv.length();
                    let rs = resample(&cv.points, 4.0 * h, cv.closed);
                    let sc = curvature_sign_changes(&rs, cv.closed, h / len);
                    let hd = hull_defect(&cv.points);
                    LevelConvexity {
                        level: c,
                        curves: curves.len(),
                        closed: cv.closed,
                        sign_changes: sc,
                        hull_defect: hd,
                        pass: curves.len() == 1 && cv.closed && sc == 0,
                    }
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{continuation_solve, LadderConfig};
    use crate::fields::{rasterize, FieldView};
    use crate::geometry::chebyshev_set;
    use crate::vec2::Vec2;
    use std::sync::Arc;

    #[test]
    fn short_ladder_is_rejected() {
        let poly = Polygon::unit_square();
        let ridge = chebyshev_set(&poly);
        let g = Arc::new(rasterize(&poly, 0.125).unwrap());
        let run = continuation_solve(&poly, g, &LadderConfig::with_p_list(vec![2.0])).unwrap();
        assert!(matches!(
            extract_ground_limit(&run.states, &ridge),
            Err(Error::LadderTooShort(1))
        ));
    }

    #[test]
    fn limit_on_a_coarse_square() {
        let poly = Polygon::unit_square();
        let ridge = chebyshev_set(&poly);
        let h = 1.0 / 32.0;
        let g = Arc::new(rasterize(&poly, h).unwrap());
        let run =
            continuation_solve(&poly, g, &LadderConfig::with_p_list(vec![2.0, 8.0, 16.0])).unwrap();
        let lim = extract_ground_limit(&run.states, &ridge).unwrap();
        assert_eq!(lim.u.value(Vec2::new(0.5, 0.5)).unwrap(), 1.0);
        assert!(lim.richardson_gap.is_finite());
        // dihedral symmetry
        let gr = lim.u.grid();
        let n = gr.nx() - 1;
        for k in gr.interior_nodes() {
            let (i, j) = gr.ij(k);
            for (a, b) in [(j, i), (n - i, j), (i, n - j)] {
                assert!((lim.u.at(k) - lim.u.at(gr.index(a, b))).abs() < 5.0 * h);
            }
        }
    }

    #[test]
    fn distance_over_r_is_tight_above() {
        let poly = Polygon::unit_square();
        let ridge = chebyshev_set(&poly);
        let g = Arc::new(rasterize(&poly, 1.0 / 32.0).unwrap());
        let f = ScalarField::from_fn(g, FieldLabel::U, 0.0, |x| {
            poly.signed_distance(x) / ridge.inradius
        });
        let r = sandwich_check(&f, &poly, &ridge);
        assert!(r.pass);
        assert!(r.upper.margin.abs() < 1e-12);
    }

    #[test]
    fn self_comparison_is_zero() {
        let g = Arc::new(rasterize(&Polygon::unit_square(), 0.1).unwrap());
        let f = ScalarField::from_fn(g, FieldLabel::U, 0.0, |x| x.x * x.y);
        assert_eq!(compare_u_potential(&f, &f).unwrap().sup_diff, 0.0);
        let g2 = Arc::new(rasterize(&Polygon::unit_square(), 0.05).unwrap());
        let f2 = ScalarField::from_fn(g2, FieldLabel::U, 0.0, |x| x.x);
        assert_eq!(compare_u_potential(&f, &f2), Err(Error::GridMismatch));
    }
}
