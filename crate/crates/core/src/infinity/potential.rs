use crate::error::{Error, Result};
use crate::fields::{rasterize, FieldLabel, FieldView, GridSpec, ScalarField};
use crate::geometry::{HighRidge, Polygon};
use crate::vec2::{segment_intersection, Vec2};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Sixteen lattice directions; arms end on nodes, lengths `√5 h` to `3h`.
pub const STENCIL: [(i32, i32); 16] = [
    (3, 0),
    (2, 1),
    (2, 2),
    (1, 2),
    (0, 3),
    (-1, 2),
    (-2, 2),
    (-2, 1),
    (-3, 0),
    (-2, -1),
    (-2, -2),
    (-1, -2),
    (0, -3),
    (1, -2),
    (2, -2),
    (2, -1),
];

/// One stencil arm: the value at its end (a node or a datum) and its length.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Arm {
    Node(u32, f64),
    Datum(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialConfig {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Start from the solution on grids `2h, 4h, ...` with at least this
    /// many interior nodes.
    pub min_coarse_nodes: usize,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            tol: 1e-10,
            max_sweeps: 200_000,
            min_coarse_nodes: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PotentialSolution {
    /// Label `U`.
    pub field: ScalarField,
    pub sweeps: usize,
    /// Sup change of the last sweep.
    pub residual: f64,
    pub stencil_radius: f64,
    pub converged: bool,
    /// Nodes held at 1.
    pub constrained: Vec<usize>,
    /// `(sweep, sup change)` every 100 sweeps on the finest grid.
    pub log: Vec<(usize, f64)>,
}

/// Weighted midrange of a stencil: over pairs of arms, the pair maximizing
/// `(u_j - u_k) / (d_j + d_k)` and the value `(d_k u_j + d_j u_k) / (d_j + d_k)`
/// on the segment joining their ends.
pub fn midrange_update(values: &[f64], dists: &[f64]) -> f64 {
    let n = values.len();
    let mut best = f64::NEG_INFINITY;
    let mut out = values[0];
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let s = (values[j] - values[k]) / (dists[j] + dists[k]);
            if s > best {
                best = s;
                out = (dists[k] * values[j] + dists[j] * values[k]) / (dists[j] + dists[k]);
            }
        }
    }
    out
}

fn stencil_arms(
    grid: &GridSpec,
    ridge: Option<&HighRidge>,
    unknown: &[u32],
    k: usize,
    datum: f64,
) -> Vec<Arm> {
    let h = grid.h();
    let poly = grid.polygon();
    let x = grid.node_at(k);
    let (i, j) = grid.ij(k);
    let mut arms = Vec::with_capacity(STENCIL.len() + 2);
    for &(a, b) in &STENCIL {
        let off = Vec2::new(a as f64, b as f64) * h;
        let len = off.norm();
        let dir = off / len;
        let mut end = Arm::Datum(datum, poly.ray_exit(x, dir).min(len));
        let (ni, nj) = (i as isize + a as isize, j as isize + b as isize);
        if grid.inside_ij(ni, nj) {
            end = Arm::Node(unknown[grid.index(ni as usize, nj as usize)], len);
        }
        if let Some(r) = ridge {
            if !r.is_point() {
                if let Some((t, _)) =
                    segment_intersection(x, x + off, r.endpoints[0], r.endpoints[1])
                {
                    let d = t * len;
                    let shorter = match end {
                        Arm::Node(_, l) | Arm::Datum(_, l) => d < l,
                    };
                    if shorter && d > 0.0 {
                        end = Arm::Datum(1.0, d);
                    }
                }
            }
        }
        arms.push(end);
    }
    // direct arms to the nearest data points inside the stencil radius
    let reach = 3.0 * h;
    let db = poly.signed_distance(x);
    if db > 0.0 && db < reach {
        arms.push(Arm::Datum(datum, db));
    }
    if let Some(r) = ridge {
        let dr = r.distance(x);
        if dr > 0.0 && dr < reach {
            arms.push(Arm::Datum(1.0, dr));
        }
    }
    arms
}

/// Nodes held at `U = 1`: those within `h/2` of `H`, or the corners of the
/// cell containing `H` when no node is that close.
fn constraint_nodes(grid: &GridSpec, ridge: &HighRidge) -> Vec<(usize, f64)> {
    let h = grid.h();
    let near: Vec<(usize, f64)> = grid
        .interior_nodes()
        .filter(|&k| ridge.distance(grid.node_at(k)) <= 0.5 * h + 1e-12 * h)
        .map(|k| (k, 1.0))
        .collect();
    if !near.is_empty() {
        return near;
    }
    let c = ridge.midpoint();
    let (i, j, _, _) = grid.locate(c);
    [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
        .iter()
        .map(|&(a, b)| grid.index(a, b))
        .filter(|&k| grid.is_inside(k))
        .map(|k| {
            (
                k,
                (1.0 - ridge.lambda_inf * ridge.distance(grid.node_at(k))).max(0.0),
            )
        })
        .collect()
}

/// Monotone scheme for the infinity-potential: `Δ∞U = 0` off `H`, `U = 1` on
/// `H`, `U = 0` on the boundary.
pub fn solve_infinity_potential(
    polygon: &Polygon,
    ridge: &HighRidge,
    grid: Arc<GridSpec>,
    cfg: &PotentialConfig,
) -> Result<PotentialSolution> {
    if grid.polygon() != polygon {
        return Err(Error::GridMismatch);
    }
    // coarse-to-fine initial guess
    let coarse = rasterize(polygon, 2.0 * grid.h())
        .ok()
        .filter(|g| g.interior_count() >= cfg.min_coarse_nodes);
    let init: Box<dyn Fn(Vec2) -> f64> = match coarse {
        Some(cg) => {
            let sol = solve_infinity_potential(polygon, ridge, Arc::new(cg), cfg)?;
            let f = sol.field;
            Box::new(move |x| f.value(x).unwrap_or(0.0).clamp(0.0, 1.0))
        }
        None => {
            let l = ridge.lambda_inf;
            Box::new(move |x| (l * polygon.signed_distance(x)).clamp(0.0, 1.0))
        }
    };
    let n_in: Vec<usize> = grid.interior_nodes().collect();
    let mut unknown = vec![u32::MAX; grid.len()];
    for (idx, &k) in n_in.iter().enumerate() {
        unknown[k] = idx as u32;
    }
    let mut u: Vec<f64> = n_in.iter().map(|&k| init(grid.node_at(k))).collect();
    let constraints = constraint_nodes(&grid, ridge);
    let mut fixed = vec![false; n_in.len()];
    for &(k, val) in &constraints {
        let id = unknown[k] as usize;
        fixed[id] = true;
        u[id] = val;
    }
    let arms: Vec<Vec<Arm>> = n_in
        .iter()
        .map(|&k| stencil_arms(&grid, Some(ridge), &unknown, k, 0.0))
        .collect();
    let mut vals = [0.0; STENCIL.len() + 2];
    let mut dists = [0.0; STENCIL.len() + 2];
    let mut sweeps = 0;
    let mut change = f64::INFINITY;
    let mut log = Vec::new();
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        change = 0.0f64;
        let forward = sweeps % 2 == 1;
        for step in 0..n_in.len() {
            let id = if forward { step } else { n_in.len() - 1 - step };
            if fixed[id] {
                continue;
            }
            for (a, arm) in arms[id].iter().enumerate() {
                let (v, d) = match *arm {
                    Arm::Node(nb, d) => (u[nb as usize], d),
                    Arm::Datum(v, d) => (v, d),
                };
                vals[a] = v;
                dists[a] = d;
            }
            let n = arms[id].len();
            let new = midrange_update(&vals[..n], &dists[..n]);
            change = change.max((new - u[id]).abs());
            u[id] = new;
        }
        if !change.is_finite() {
            return Err(Error::NonFiniteEncountered(sweeps));
        }
        if sweeps % 100 == 0 {
            log.push((sweeps, change));
        }
        if change < cfg.tol {
            break;
        }
    }
    log.push((sweeps, change));
    let mut values = vec![f64::NAN; grid.len()];
    for (&k, &v) in n_in.iter().zip(&u) {
        values[k] = v;
    }
    let field = ScalarField::new(grid.clone(), values, 0.0, FieldLabel::Potential)?;
    Ok(PotentialSolution {
        field,
        sweeps,
        residual: change,
        stencil_radius: 3.0 * grid.h(),
        converged: change < cfg.tol,
        constrained: constraints.iter().map(|c| c.0).collect(),
        log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub sup: f64,
    pub mean_abs: f64,
    pub nodes: usize,
    pub threshold: f64,
    pub pass: bool,
    /// Node where the sup is attained.
    pub worst_at: Option<[f64; 2]>,
}

/// Midrange deviation `|u(x) - midrange(x)|` of the radius-3h stencil at
/// inside nodes not excluded. PASS iff the sup is below `10 h`.
pub fn residual_infinity_laplacian(
    field: &ScalarField,
    exclude: impl Fn(Vec2) -> bool,
) -> ResidualStats {
    let grid = field.grid();
    let n_in: Vec<usize> = grid.interior_nodes().collect();
    let mut unknown = vec![u32::MAX; grid.len()];
    for (idx, &k) in n_in.iter().enumerate() {
        unknown[k] = idx as u32;
    }
    let mut sup = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0;
    let mut worst_at = None;
    let mut vals = [0.0; STENCIL.len() + 2];
    let mut dists = [0.0; STENCIL.len() + 2];
    for &k in &n_in {
        let x = grid.node_at(k);
        if exclude(x) {
            continue;
        }
        let arms = stencil_arms(grid, None, &unknown, k, field.boundary_value());
        for (a, arm) in arms.iter().enumerate() {
            let (v, d) = match *arm {
                Arm::Node(nb, d) => (field.at(n_in[nb as usize]), d),
                Arm::Datum(v, d) => (v, d),
            };
            vals[a] = v;
            dists[a] = d;
        }
        let r = (field.at(k) - midrange_update(&vals[..arms.len()], &dists[..arms.len()])).abs();
        sum += r;
        count += 1;
        if r > sup {
            sup = r;
            worst_at = Some([x.x, x.y]);
        }
    }
    let threshold = 10.0 * grid.h();
    ResidualStats {
        sup,
        mean_abs: if count > 0 { sum / count as f64 } else { 0.0 },
        nodes: count,
        threshold,
        pass: sup < threshold,
        worst_at,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chebyshev_set;
    use proptest::prelude::*;

    #[test]
    fn midrange_of_equal_arms() {
        assert_eq!(midrange_update(&[0.2, 0.9, 0.5, 0.4], &[1.0; 4]), 0.55);
        // unequal arms: value on the line through the two ends
        let v = midrange_update(&[1.0, 0.0], &[1.0, 3.0]);
        assert!((v - 0.75).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn midrange_is_monotone(vals in prop::collection::vec(0.0f64..1.0, 8),
                                dists in prop::collection::vec(0.1f64..3.0, 8),
                                which in 0usize..8, bump in 0.0f64..0.5) {
            let a = midrange_update(&vals, &dists);
            let mut up = vals.clone();
            up[which] += bump;
            let b = midrange_update(&up, &dists);
            prop_assert!(b >= a - 1e-12);
            prop_assert!(a >= vals.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-12);
            prop_assert!(a <= vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-12);
        }
    }

    fn square_potential(h: f64) -> PotentialSolution {
        let poly = Polygon::unit_square();
        let ridge = chebyshev_set(&poly);
        let g = Arc::new(rasterize(&poly, h).unwrap());
        solve_infinity_potential(&poly, &ridge, g, &PotentialConfig::default()).unwrap()
    }

    #[test]
    fn square_potential_basics() {
        let h = 1.0 / 32.0;
        let sol = square_potential(h);
        assert!(sol.converged);
        assert_eq!(sol.field.value(Vec2::new(0.5, 0.5)).unwrap(), 1.0);
        for k in sol.field.grid().interior_nodes() {
            let v = sol.field.at(k);
            assert!((0.0..=1.0).contains(&v));
        }
        // straight median: U = dist / R
        let m = sol.field.value(Vec2::new(0.5, 0.25)).unwrap();
        assert!((m - 0.5).abs() < 5.0 * h, "{m}");
    }

    #[test]
    fn median_value_at_two_resolutions() {
        let a = square_potential(1.0 / 16.0)
            .field
            .value(Vec2::new(0.5, 0.25))
            .unwrap();
        let b = square_potential(1.0 / 32.0)
            .field
            .value(Vec2::new(0.5, 0.25))
            .unwrap();
        assert!((a - 0.5).abs() < 5.0 / 16.0 && (b - 0.5).abs() < 5.0 / 32.0);
        assert!((a - b).abs() < 5.0 / 32.0);
    }

    #[test]
    fn residuals_of_affine_and_cone_fields() {
        let h = 1.0 / 32.0;
        let g = Arc::new(rasterize(&Polygon::unit_square(), h).unwrap());
        let aff = ScalarField::from_fn(g.clone(), FieldLabel::U, 0.0, |x| {
            0.2 + 0.3 * x.x + 0.1 * x.y
        });
        // affine away from the boundary datum
        let r =
            residual_infinity_laplacian(&aff, |x| x.x < 0.1 || x.x > 0.9 || x.y < 0.1 || x.y > 0.9);
        assert!(r.sup < 1e-12, "{r:?}");
        let c = Vec2::new(0.5, 0.5);
        let cone =
            ScalarField::from_fn(g, FieldLabel::U, 0.0, |x| (1.0 - 2.0 * x.dist(c)).max(0.0));
        let r = residual_infinity_laplacian(&cone, |x| x.dist(c) < 4.0 * h || x.dist(c) > 0.35);
        assert!(r.pass && r.sup < h, "{r:?}");
    }

    #[test]
    fn potential_residual_off_ridge() {
        let h = 1.0 / 32.0;
        let sol = square_potential(h);
        let r = residual_infinity_laplacian(&sol.field, |x| x.dist(Vec2::new(0.5, 0.5)) < 4.0 * h);
        assert!(r.pass, "{r:?}");
    }
}
