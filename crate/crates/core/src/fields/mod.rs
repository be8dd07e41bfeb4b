//! Grid discretization of the polygon, sampled scalar fields with
//! interpolation and gradients, the discrete S-operator and concavity
//! sampling.

mod dump;
mod grid;
mod ops;
mod scalar;

pub use dump::{dump_text, read_dump, write_dump, FieldDump};
pub use grid::{rasterize, GridSpec, AXES, MIN_INTERIOR_NODES};
pub use ops::{
    midpoint_concavity_violations, ring_decrement, s_operator, s_operator_default, ConcavityStats,
    DEFAULT_RING_SAMPLES, MONOTONE_RTOL, S_RADII_CELLS,
};
pub use scalar::{FieldLabel, LogView, ScalarField, U_FLOOR};

use crate::error::Result;
use crate::geometry::Polygon;
use crate::vec2::Vec2;

/// Anything that can be evaluated and differentiated at points of a polygon.
pub trait FieldView {
    fn polygon(&self) -> &Polygon;
    fn value(&self, x: Vec2) -> Result<f64>;
    fn gradient(&self, x: Vec2) -> Result<Vec2>;
}

/// A closed-form field on a polygon, handy for synthetic checks.
pub struct AnalyticField<F, G> {
    pub polygon: Polygon,
    pub f: F,
    pub grad: G,
}

impl<F, G> AnalyticField<F, G>
where
    F: Fn(Vec2) -> f64,
    G: Fn(Vec2) -> Vec2,
{
    pub fn new(polygon: Polygon, f: F, grad: G) -> Self {
        AnalyticField { polygon, f, grad }
    }
}

impl<F, G> FieldView for AnalyticField<F, G>
where
    F: Fn(Vec2) -> f64,
    G: Fn(Vec2) -> Vec2,
{
    fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    fn value(&self, x: Vec2) -> Result<f64> {
        if !self.polygon.contains(x) {
            return Err(crate::error::Error::OutsideDomain(x.x, x.y));
        }
        Ok((self.f)(x))
    }

    fn gradient(&self, x: Vec2) -> Result<Vec2> {
        if !self.polygon.contains(x) {
            return Err(crate::error::Error::OutsideDomain(x.x, x.y));
        }
        Ok((self.grad)(x))
    }
}
