use super::GroundState;
use crate::error::{Error, Result};
use crate::geometry::{chebyshev_set, diameter, Polygon};
use crate::report::MarginReport;
use crate::tol_h;
use serde::{Deserialize, Serialize};

/// Upper gradient bound `|∇u_p| <= (λ_p diam Ω)^{1/(p-1)} max u_p` at every
/// inside node, with tolerance `10 h Λ∞`.
pub fn gradient_bound_check(state: &GroundState, polygon: &Polygon) -> MarginReport {
    let f = &state.field;
    let g = f.grid();
    let grads = f.node_gradients();
    let max_grad = g
        .interior_nodes()
        .map(|k| grads[k].norm())
        .fold(0.0f64, f64::max);
    let bound = (state.lambda_p * diameter(polygon)).powf(1.0 / (state.p - 1.0)) * f.sup();
    let tol = tol_h(g.h(), chebyshev_set(polygon).lambda_inf);
    MarginReport::upper(max_grad, bound, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerGradientReport {
    pub level: f64,
    pub margin: MarginReport,
    /// Inside nodes with `u_p <= c`.
    pub nodes: usize,
    /// The bound is only claimed for large `p`; set when `p < 16`.
    pub low_p: bool,
}

/// Lower bound `|∇v_p| >= log(1/c) / (2 diam Ω)` on `{u_p <= c}`.
pub fn lower_gradient_check(
    state: &GroundState,
    polygon: &Polygon,
    c: f64,
) -> Result<LowerGradientReport> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level must lie in (0, 1), got {c}"
        )));
    }
    let f = &state.field;
    let g = f.grid();
    let grads = f.node_gradients();
    let mut nodes = 0;
    let mut min_rate = f64::INFINITY;
    for k in g.interior_nodes() {
        let u = f.at(k);
        if u <= c {
            nodes += 1;
            min_rate = min_rate.min(grads[k].norm() / u);
        }
    }
    if nodes == 0 {
        return Err(Error::EmptyRegion(c));
    }
    let bound = (1.0 / c).ln() / (2.0 * diameter(polygon));
    let tol = tol_h(g.h(), chebyshev_set(polygon).lambda_inf);
    Ok(LowerGradientReport {
        level: c,
        margin: MarginReport::lower(min_rate, bound, tol),
        nodes,
        low_p: state.p < 16.0,
    })
}

/// Discrete superharmonicity: the five-point Laplacian of `u_p` is at most
/// `tol` at every inside node.
pub fn superharmonicity_check(state: &GroundState, tol: f64) -> MarginReport {
    let f = &state.field;
    let worst = f
        .grid()
        .interior_nodes()
        .map(|k| f.node_laplacian(k))
        .fold(f64::NEG_INFINITY, f64::max);
    MarginReport::upper(worst, 0.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{continuation_solve, LadderConfig};
    use crate::fields::{rasterize, FieldLabel, ScalarField};
    use std::sync::Arc;

    fn square_states() -> Vec<GroundState> {
        let poly = Polygon::unit_square();
        let g = Arc::new(rasterize(&poly, 1.0 / 32.0).unwrap());
        continuation_solve(&poly, g, &LadderConfig::with_p_list(vec![2.0, 8.0, 16.0]))
            .unwrap()
            .states
    }

    #[test]
    fn bounds_hold_on_computed_states() {
        let poly = Polygon::unit_square();
        for st in square_states() {
            let r = gradient_bound_check(&st, &poly);
            assert!(r.pass, "p = {}: {r:?}", st.p);
            let s = superharmonicity_check(&st, tol_h(1.0 / 32.0, 2.0));
            assert!(s.pass, "p = {}: {s:?}", st.p);
        }
        let top = square_states().pop().unwrap();
        let l = lower_gradient_check(&top, &poly, 0.5).unwrap();
        assert!(l.margin.pass && !l.low_p);
    }

    #[test]
    fn spike_violates_the_upper_bound() {
        let poly = Polygon::unit_square();
        let mut st = square_states().pop().unwrap();
        let g = st.field.grid_arc().clone();
        let spike = g.index(10, 20);
        let vals = (0..g.len())
            .map(|k| {
                if k == spike {
                    1.0
                } else {
                    0.3 * st.field.at(k)
                }
            })
            .collect();
        st.field = ScalarField::unchecked(g, vals, 0.0, FieldLabel::Up);
        let r = gradient_bound_check(&st, &poly);
        assert!(!r.pass && r.margin > 0.0);
    }

    #[test]
    fn level_arithmetic() {
        let poly = Polygon::unit_square();
        let st = square_states().pop().unwrap();
        let a = lower_gradient_check(&st, &poly, 0.5).unwrap();
        let b = lower_gradient_check(&st, &poly, 0.25).unwrap();
        assert!((b.margin.bound / a.margin.bound - 2.0).abs() < 1e-12);
        match lower_gradient_check(&st, &poly, 0.999) {
            Err(Error::EmptyRegion(_)) => {}
            Ok(r) => assert!(r.margin.bound < 1e-3),
            Err(e) => panic!("{e}"),
        }
    }
}
