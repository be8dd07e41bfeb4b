use super::grid::GridSpec;
use super::FieldView;
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Floor applied to `u` before taking logarithms.
pub const U_FLOOR: f64 = 1e-12;

/// Which function a field holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldLabel {
    /// A p-ground state `u_p`.
    #[serde(rename = "u_p")]
    Up,
    /// The variational infinity-ground state `u`.
    #[serde(rename = "u")]
    U,
    /// `v = log u`.
    #[serde(rename = "v")]
    V,
    /// `v_p = log u_p`.
    #[serde(rename = "v_p")]
    Vp,
    /// The infinity-potential.
    #[serde(rename = "U")]
    Potential,
}

impl FieldLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldLabel::Up => "u_p",
            FieldLabel::U => "u",
            FieldLabel::V => "v",
            FieldLabel::Vp => "v_p",
            FieldLabel::Potential => "U",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "u_p" => FieldLabel::Up,
            "u" => FieldLabel::U,
            "v" => FieldLabel::V,
            "v_p" => FieldLabel::Vp,
            "U" => FieldLabel::Potential,
            other => return Err(Error::DumpParse(format!("unknown label {other:?}"))),
        })
    }

    pub fn is_log(self) -> bool {
        matches!(self, FieldLabel::V | FieldLabel::Vp)
    }
}

impl fmt::Display for FieldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grid-sampled function on the polygon with a constant Dirichlet datum on
/// the boundary. Values at nodes outside the polygon are NaN.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<GridSpec>,
    values: Vec<f64>,
    boundary_value: f64,
    label: FieldLabel,
    node_grad: OnceLock<Vec<Vec2>>,
}

impl ScalarField {
    /// Wrap node values, checking the label's range invariants. `values` has
    /// one entry per grid node; entries at outside nodes are overwritten
    /// with NaN.
    pub fn new(
        grid: Arc<GridSpec>,
        mut values: Vec<f64>,
        boundary_value: f64,
        label: FieldLabel,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        for (k, v) in values.iter_mut().enumerate() {
            if !grid.is_inside(k) {
                *v = f64::NAN;
                continue;
            }
            if !v.is_finite() {
                return Err(Error::InvalidField(format!("non-finite value at node {k}")));
            }
            let ok = if label.is_log() {
                *v <= 1e-9
            } else {
                (0.0..=1.0 + 1e-9).contains(v)
            };
            if !ok {
                return Err(Error::InvalidField(format!(
                    "value {v} at node {k} out of range for label {label}"
                )));
            }
        }
        Ok(Self::from_parts(grid, values, boundary_value, label))
    }

    /// Like [`ScalarField::new`] but without range checks; used for synthetic
    /// and intermediate fields.
    pub fn unchecked(
        grid: Arc<GridSpec>,
        mut values: Vec<f64>,
        boundary_value: f64,
        label: FieldLabel,
    ) -> Self {
        assert_eq!(values.len(), grid.len());
        for (k, v) in values.iter_mut().enumerate() {
            if !grid.is_inside(k) {
                *v = f64::NAN;
            }
        }
        Self::from_parts(grid, values, boundary_value, label)
    }

    fn from_parts(
        grid: Arc<GridSpec>,
        values: Vec<f64>,
        boundary_value: f64,
        label: FieldLabel,
    ) -> Self {
        ScalarField {
            grid,
            values,
            boundary_value,
            label,
            node_grad: OnceLock::new(),
        }
    }

    /// Sample `f` at the inside nodes (no range checks).
    pub fn from_fn(
        grid: Arc<GridSpec>,
        label: FieldLabel,
        boundary_value: f64,
        f: impl Fn(Vec2) -> f64,
    ) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                if grid.is_inside(k) {
                    f(grid.node_at(k))
                } else {
                    f64::NAN
                }
            })
            .collect();
        Self::from_parts(grid, values, boundary_value, label)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn boundary_value(&self) -> f64 {
        self.boundary_value
    }

    pub fn label(&self) -> FieldLabel {
        self.label
    }

    pub fn with_label(mut self, label: FieldLabel) -> Self {
        self.label = label;
        self
    }

    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Value at node `(i, j)`; the boundary datum for nodes not inside.
    #[inline]
    pub fn node_value_or_datum(&self, i: isize, j: isize) -> f64 {
        if self.grid.inside_ij(i, j) {
            self.values[self.grid.index(i as usize, j as usize)]
        } else {
            self.boundary_value
        }
    }

    pub fn sup(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Inside node where the field is largest.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        let mut bv = f64::NEG_INFINITY;
        for k in self.grid.interior_nodes() {
            if self.values[k] > bv {
                bv = self.values[k];
                best = k;
            }
        }
        best
    }

    /// Sup-normalized copy (`max = 1`).
    pub fn sup_normalized(&self) -> ScalarField {
        let s = self.sup();
        let vals = self.values.iter().map(|v| v / s).collect();
        Self::from_parts(self.grid.clone(), vals, self.boundary_value / s, self.label)
    }

    /// `log(max(u, U_FLOOR))` at every inside node, with datum `log U_FLOOR`.
    pub fn log_field(&self, label: FieldLabel) -> ScalarField {
        let vals = self.values.iter().map(|&u| u.max(U_FLOOR).ln()).collect();
        Self::from_parts(self.grid.clone(), vals, U_FLOOR.ln(), label)
    }

    /// Node gradients: central differences, Shortley-Weller one-sided
    /// differences on arms cut by the boundary.
    pub fn node_gradients(&self) -> &[Vec2] {
        self.node_grad.get_or_init(|| {
            let g = &*self.grid;
            (0..g.len())
                .map(|k| {
                    if !g.is_inside(k) {
                        return Vec2::new(f64::NAN, f64::NAN);
                    }
                    let (i, j) = g.ij(k);
                    let (i, j) = (i as isize, j as isize);
                    let c = g.cuts(k);
                    let u0 = self.values[k];
                    let arm = |di: isize, dj: isize, len: f64| {
                        if len < g.h() {
                            self.boundary_value
                        } else {
                            self.node_value_or_datum(i + di, j + dj)
                        }
                    };
                    let gx = one_d_derivative(u0, arm(-1, 0, c[1]), c[1], arm(1, 0, c[0]), c[0]);
                    let gy = one_d_derivative(u0, arm(0, -1, c[3]), c[3], arm(0, 1, c[2]), c[2]);
                    Vec2::new(gx, gy)
                })
                .collect()
        })
    }

    /// Five-point Laplacian at inside node `k` (Shortley-Weller near the
    /// boundary).
    pub fn node_laplacian(&self, k: usize) -> f64 {
        let g = &*self.grid;
        let (i, j) = g.ij(k);
        let (i, j) = (i as isize, j as isize);
        let c = g.cuts(k);
        let u0 = self.values[k];
        let arm = |di: isize, dj: isize, len: f64| {
            if len < g.h() {
                self.boundary_value
            } else {
                self.node_value_or_datum(i + di, j + dj)
            }
        };
        one_d_second(u0, arm(-1, 0, c[1]), c[1], arm(1, 0, c[0]), c[0])
            + one_d_second(u0, arm(0, -1, c[3]), c[3], arm(0, 1, c[2]), c[2])
    }

    /// Corner values of cell `(i, j)`, ordered `(i,j), (i+1,j), (i,j+1),
    /// (i+1,j+1)`. Outside corners get ghost values extrapolated linearly
    /// from the inside corners through the boundary cut with the datum.
    fn cell_values(&self, i: usize, j: usize) -> Option<[f64; 4]> {
        let g = &*self.grid;
        let ids = [
            g.index(i, j),
            g.index(i + 1, j),
            g.index(i, j + 1),
            g.index(i + 1, j + 1),
        ];
        let mut vals = [0.0; 4];
        let mut any_in = false;
        let mut all_in = true;
        for (v, &k) in vals.iter_mut().zip(&ids) {
            if g.is_inside(k) {
                *v = self.values[k];
                any_in = true;
            } else {
                all_in = false;
            }
        }
        if all_in {
            return Some(vals);
        }
        if !any_in {
            return None;
        }
        let poly = g.polygon();
        for a in 0..4 {
            if g.is_inside(ids[a]) {
                continue;
            }
            let xc = g.node_at(ids[a]);
            let mut sum = 0.0;
            let mut cnt = 0.0;
            for b in 0..4 {
                if !g.is_inside(ids[b]) {
                    continue;
                }
                let xn = g.node_at(ids[b]);
                let d = xc - xn;
                let len = d.norm();
                let tau = (poly.ray_exit(xn, d / len) / len).clamp(1e-3, 1.0);
                let un = self.values[ids[b]];
                sum += un + (self.boundary_value - un) / tau;
                cnt += 1.0;
            }
            vals[a] = sum / cnt;
        }
        Some(vals)
    }

    fn nearest_inside_node(&self, x: Vec2) -> Option<usize> {
        let g = &*self.grid;
        let (ci, cj) = g.nearest_node(x);
        let mut best = None;
        let mut bd = f64::INFINITY;
        for dj in -2isize..=2 {
            for di in -2isize..=2 {
                let (i, j) = (ci as isize + di, cj as isize + dj);
                if g.inside_ij(i, j) {
                    let k = g.index(i as usize, j as usize);
                    let d = g.node_at(k).dist(x);
                    if d < bd {
                        bd = d;
                        best = Some(k);
                    }
                }
            }
        }
        best
    }
}

/// First derivative at 0 from samples at `-a`, `0`, `+b`.
#[inline]
pub(crate) fn one_d_derivative(u0: f64, um: f64, a: f64, up: f64, b: f64) -> f64 {
    (a * a * (up - u0) + b * b * (u0 - um)) / (a * b * (a + b))
}

/// Second derivative at 0 from samples at `-a`, `0`, `+b`.
#[inline]
pub(crate) fn one_d_second(u0: f64, um: f64, a: f64, up: f64, b: f64) -> f64 {
    2.0 * (a * (up - u0) - b * (u0 - um)) / (a * b * (a + b))
}

#[inline]
fn bilinear(v: [f64; 4], s: f64, t: f64) -> f64 {
    (1.0 - s) * (1.0 - t) * v[0] + s * (1.0 - t) * v[1] + (1.0 - s) * t * v[2] + s * t * v[3]
}

impl FieldView for ScalarField {
    fn polygon(&self) -> &Polygon {
        self.grid.polygon()
    }

    /// Bilinear interpolation on the containing cell.
    fn value(&self, x: Vec2) -> Result<f64> {
        let g = &*self.grid;
        if !g.polygon().contains(x) {
            return Err(Error::OutsideDomain(x.x, x.y));
        }
        let (i, j, s, t) = g.locate(x);
        match self.cell_values(i, j) {
            Some(v) => Ok(bilinear(v, s, t)),
            None => {
                // sliver cell without inside corners: blend the nearest node
                // with the datum by boundary distance
                let d = g.polygon().signed_distance(x).max(0.0);
                match self.nearest_inside_node(x) {
                    Some(k) => {
                        let dk = g.boundary_distance_at(k);
                        let w = (d / dk).min(1.0);
                        Ok(self.boundary_value + w * (self.values[k] - self.boundary_value))
                    }
                    None => Ok(self.boundary_value),
                }
            }
        }
    }

    /// Bilinear interpolation of node gradients; outside corners take the
    /// mean gradient of the inside corners.
    fn gradient(&self, x: Vec2) -> Result<Vec2> {
        let g = &*self.grid;
        if !g.polygon().contains(x) {
            return Err(Error::OutsideDomain(x.x, x.y));
        }
        let ng = self.node_gradients();
        let (i, j, s, t) = g.locate(x);
        let ids = [
            g.index(i, j),
            g.index(i + 1, j),
            g.index(i, j + 1),
            g.index(i + 1, j + 1),
        ];
        let mut mean = Vec2::ZERO;
        let mut cnt = 0.0;
        for &k in &ids {
            if g.is_inside(k) {
                mean += ng[k];
                cnt += 1.0;
            }
        }
        if cnt == 0.0 {
            return Ok(match self.nearest_inside_node(x) {
                Some(k) => ng[k],
                None => Vec2::ZERO,
            });
        }
        mean = mean / cnt;
        let c: Vec<Vec2> = ids
            .iter()
            .map(|&k| if g.is_inside(k) { ng[k] } else { mean })
            .collect();
        Ok(Vec2::new(
            bilinear([c[0].x, c[1].x, c[2].x, c[3].x], s, t),
            bilinear([c[0].y, c[1].y, c[2].y, c[3].y], s, t),
        ))
    }
}

/// View of `log u` built on a `u`-type field: values `log max(u, floor)`,
/// gradients `grad u / max(u, floor)`.
#[derive(Debug, Clone, Copy)]
pub struct LogView<'a> {
    pub u: &'a ScalarField,
}

impl<'a> LogView<'a> {
    pub fn new(u: &'a ScalarField) -> Self {
        LogView { u }
    }
}

impl FieldView for LogView<'_> {
    fn polygon(&self) -> &Polygon {
        self.u.grid.polygon()
    }

    fn value(&self, x: Vec2) -> Result<f64> {
        Ok(self.u.value(x)?.max(U_FLOOR).ln())
    }

    fn gradient(&self, x: Vec2) -> Result<Vec2> {
        let u = self.u.value(x)?.max(U_FLOOR);
        Ok(self.u.gradient(x)? / u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::rasterize;

    fn square_grid(h: f64) -> Arc<GridSpec> {
        Arc::new(rasterize(&Polygon::unit_square(), h).unwrap())
    }

    #[test]
    fn affine_fields_are_reproduced() {
        let g = square_grid(0.1);
        let f = ScalarField::from_fn(g, FieldLabel::U, 0.0, |x| 0.3 + 1.7 * x.x - 0.6 * x.y);
        for &(x, y) in &[(0.33, 0.47), (0.5, 0.5), (0.21, 0.79), (0.8, 0.2)] {
            let p = Vec2::new(x, y);
            let exact = 0.3 + 1.7 * x - 0.6 * y;
            assert!((f.value(p).unwrap() - exact).abs() < 1e-12);
            let gr = f.gradient(p).unwrap();
            assert!((gr.x - 1.7).abs() < 1e-10 && (gr.y + 0.6).abs() < 1e-10);
        }
        let c = ScalarField::from_fn(square_grid(0.1), FieldLabel::U, 0.25, |_| 0.25);
        for &(x, y) in &[(0.01, 0.5), (0.5, 0.5), (0.999, 0.999)] {
            assert!((c.value(Vec2::new(x, y)).unwrap() - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_interpolation_error() {
        let h = 0.1;
        let f = ScalarField::from_fn(square_grid(h), FieldLabel::U, 0.0, |x| x.x * x.x);
        let v = f.value(Vec2::new(0.5, 0.5)).unwrap();
        assert!((v - 0.25).abs() <= h * h);
        let v = f.value(Vec2::new(0.55, 0.5)).unwrap();
        assert!((v - 0.3025).abs() <= h * h);
    }

    #[test]
    fn cone_gradient() {
        let h = 1.0 / 64.0;
        let c = Vec2::new(0.5, 0.5);
        let f = ScalarField::from_fn(square_grid(h), FieldLabel::U, 0.0, |x| {
            1.0 - 2.0 * x.dist(c)
        });
        let g = f.gradient(Vec2::new(0.75, 0.5)).unwrap();
        assert!((g.x + 2.0).abs() < 4.0 * h && g.y.abs() < 4.0 * h);
    }

    #[test]
    fn outside_queries_fail() {
        let f = ScalarField::from_fn(square_grid(0.1), FieldLabel::U, 0.0, |_| 0.5);
        assert!(matches!(
            f.value(Vec2::new(1.2, 0.5)),
            Err(Error::OutsideDomain(..))
        ));
        assert!(matches!(
            f.gradient(Vec2::new(-0.1, 0.5)),
            Err(Error::OutsideDomain(..))
        ));
    }

    #[test]
    fn range_invariants() {
        let g = square_grid(0.25);
        assert!(ScalarField::new(g.clone(), vec![0.5; 25], 0.0, FieldLabel::U).is_ok());
        assert!(ScalarField::new(g.clone(), vec![1.5; 25], 0.0, FieldLabel::U).is_err());
        assert!(ScalarField::new(g.clone(), vec![0.5; 25], 0.0, FieldLabel::V).is_err());
        assert!(ScalarField::new(g, vec![-0.5; 25], 0.0, FieldLabel::V).is_ok());
    }

    #[test]
    fn boundary_linear_profile() {
        // u = dist to the side x = 0 near that side: the cut-cell
        // interpolation uses the zero datum on the boundary
        let h = 0.1;
        let g = Arc::new(
            rasterize(
                &Polygon::new("r", &[[-0.05, 0.0], [1.0, 0.0], [1.0, 1.0], [-0.05, 1.0]]).unwrap(),
                h,
            )
            .unwrap(),
        );
        let f = ScalarField::from_fn(g, FieldLabel::U, 0.0, |x| (x.x + 0.05) * 0.5);
        let v = f.value(Vec2::new(-0.04, 0.5)).unwrap();
        assert!((v - 0.005).abs() < 1e-12);
    }
}
