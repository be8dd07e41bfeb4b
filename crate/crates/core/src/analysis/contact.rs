use crate::fields::{s_operator_default, GridSpec, S_RADII_CELLS};
use crate::geometry::{diameter, HighRidge, Polygon};
use crate::infinity::GroundLimit;
use crate::vec2::Vec2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Level below which nodes are left out of the contact search:
/// `c0 = exp(-2 diam Λ∞) / 2`, so that `log(1/c0) / (2 diam) > Λ∞`.
pub fn boundary_level(polygon: &Polygon, lambda_inf: f64) -> f64 {
    0.5 * (-2.0 * diameter(polygon) * lambda_inf).exp()
}

/// Contact search keeps this many cells from the boundary: the largest ring
/// stays a cell clear of the cut cells, where the log field is interpolated
/// against its floor datum.
pub const S_DISTANCE_CELLS: f64 = S_RADII_CELLS[0] + 2.0;

/// `S` of `v` at every inside node outside the boundary zone; `None` where
/// it was not evaluated or the radius sequence was not monotone.
#[derive(Debug, Clone)]
pub struct SField {
    pub grid: Arc<GridSpec>,
    pub values: Vec<Option<f64>>,
    pub lambda_inf: f64,
    pub level_floor: f64,
    pub distance_floor: f64,
    /// Nodes examined and nodes where the radius sequence misbehaved.
    pub examined: usize,
    pub irregular: usize,
}

pub fn s_field(limit: &GroundLimit, ridge: &HighRidge) -> SField {
    let grid = limit.v.grid_arc().clone();
    let poly = grid.polygon();
    let h = grid.h();
    let level_floor = boundary_level(poly, ridge.lambda_inf);
    let distance_floor = S_DISTANCE_CELLS * h;
    let res: Vec<(bool, Option<f64>)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !grid.is_inside(k) {
                return (false, None);
            }
            let x = grid.node_at(k);
            if poly.signed_distance(x) < distance_floor || limit.u.at(k) < level_floor {
                return (false, None);
            }
            (true, s_operator_default(&limit.v, x, h).ok())
        })
        .collect();
    let examined = res.iter().filter(|r| r.0).count();
    let irregular = res.iter().filter(|r| r.0 && r.1.is_none()).count();
    SField {
        values: res.into_iter().map(|r| r.1).collect(),
        grid,
        lambda_inf: ridge.lambda_inf,
        level_floor,
        distance_floor,
        examined,
        irregular,
    }
}

/// Nodes where `S ≤ Λ∞ (1 + ε)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactEstimate {
    pub epsilon: f64,
    pub lambda_inf: f64,
    pub h: f64,
    pub nodes: Vec<Vec2>,
    pub node_ids: Vec<usize>,
    /// `count h²`.
    pub measure: f64,
    pub level_floor: f64,
    pub distance_floor: f64,
    pub examined: usize,
    pub irregular: usize,
    /// Set by the confinement check.
    pub hausdorff_to_attracting: Option<f64>,
    #[serde(skip)]
    mask: Vec<bool>,
    #[serde(skip)]
    dims: (usize, usize),
    #[serde(skip)]
    origin: Vec2,
}

impl ContactEstimate {
    pub fn from_s_field(s: &SField, epsilon: f64) -> Self {
        let g = &*s.grid;
        let thr = s.lambda_inf * (1.0 + epsilon);
        let mut mask = vec![false; g.len()];
        let mut nodes = Vec::new();
        let mut node_ids = Vec::new();
        for (k, v) in s.values.iter().enumerate() {
            if let Some(v) = v {
                if *v <= thr {
                    mask[k] = true;
                    nodes.push(g.node_at(k));
                    node_ids.push(k);
                }
            }
        }
        let h = g.h();
        ContactEstimate {
            epsilon,
            lambda_inf: s.lambda_inf,
            h,
            measure: nodes.len() as f64 * h * h,
            nodes,
            node_ids,
            level_floor: s.level_floor,
            distance_floor: s.distance_floor,
            examined: s.examined,
            irregular: s.irregular,
            hausdorff_to_attracting: None,
            mask,
            dims: (g.nx(), g.ny()),
            origin: g.origin(),
        }
    }

    /// A contact estimate made of the given nodes (for synthetic checks).
    pub fn from_nodes(grid: &GridSpec, lambda_inf: f64, epsilon: f64, ids: &[usize]) -> Self {
        let mut mask = vec![false; grid.len()];
        for &k in ids {
            mask[k] = true;
        }
        let h = grid.h();
        ContactEstimate {
            epsilon,
            lambda_inf,
            h,
            measure: ids.len() as f64 * h * h,
            nodes: ids.iter().map(|&k| grid.node_at(k)).collect(),
            node_ids: ids.to_vec(),
            level_floor: 0.0,
            distance_floor: 0.0,
            examined: ids.len(),
            irregular: 0,
            hausdorff_to_attracting: None,
            mask,
            dims: (grid.nx(), grid.ny()),
            origin: grid.origin(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Distance from `x` to the nearest contact node, searched within
    /// `reach`; `INFINITY` if none is that close.
    pub fn distance(&self, x: Vec2, reach: f64) -> f64 {
        let (nx, ny) = self.dims;
        if self.mask.is_empty() {
            return self
                .nodes
                .iter()
                .map(|p| p.dist(x))
                .filter(|&d| d <= reach)
                .fold(f64::INFINITY, f64::min);
        }
        let h = self.h;
        let r = (reach / h).ceil() as isize + 1;
        let ci = ((x.x - self.origin.x) / h).round() as isize;
        let cj = ((x.y - self.origin.y) / h).round() as isize;
        let mut best = f64::INFINITY;
        for j in (cj - r).max(0)..=(cj + r).min(ny as isize - 1) {
            for i in (ci - r).max(0)..=(ci + r).min(nx as isize - 1) {
                let k = j as usize * nx + i as usize;
                if self.mask[k] {
                    let p = Vec2::new(self.origin.x + i as f64 * h, self.origin.y + j as f64 * h);
                    let d = p.dist(x);
                    if d <= reach {
                        best = best.min(d);
                    }
                }
            }
        }
        best
    }

    /// The node nearest to `x` is a contact node: `x` lies in the union of
    /// the cells the measure counts.
    pub fn contains_cell(&self, x: Vec2) -> bool {
        let (nx, ny) = self.dims;
        let i = ((x.x - self.origin.x) / self.h).round();
        let j = ((x.y - self.origin.y) / self.h).round();
        if i < 0.0 || j < 0.0 || i >= nx as f64 || j >= ny as f64 {
            return false;
        }
        self.mask[j as usize * nx + i as usize]
    }

    /// Within `tol` of a contact node.
    pub fn contains(&self, x: Vec2, tol: f64) -> bool {
        self.distance(x, tol).is_finite()
    }
}

/// The contact estimate `{S ≤ Λ∞ (1 + ε)}` for the limit `v`.
pub fn contact_estimate(limit: &GroundLimit, ridge: &HighRidge, epsilon: f64) -> ContactEstimate {
    ContactEstimate::from_s_field(&s_field(limit, ridge), epsilon)
}
