pub mod analysis;
pub mod contour;
pub mod eigensolver;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod infinity;
pub mod pipeline;
pub mod render;
pub mod report;
pub mod streamlines;
pub mod vec2;

pub use error::{Error, Result};
pub use vec2::Vec2;

/// Grid tolerance `10 h Λ∞` shared by the bound checks.
pub fn tol_h(h: f64, lambda_inf: f64) -> f64 {
    10.0 * h * lambda_inf
}
