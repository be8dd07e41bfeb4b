use super::ContactEstimate;
use crate::error::{Error, Result};
use crate::fields::FieldView;
use crate::geometry::{HighRidge, Polygon};
use crate::vec2::{point_polyline_distance, signed_area, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `∮ |∇f|^{m-2} ⟨∇f, n⟩ ds` over the closed polyline `quad` (outward
/// normal, either orientation), by the trapezoid rule on pieces no longer
/// than `spacing`.
pub fn gauss_integral<F: FieldView + ?Sized>(
    field: &F,
    quad: &[Vec2],
    m: f64,
    spacing: f64,
) -> Result<f64> {
    if quad.len() < 3 {
        return Err(Error::InvalidArgument(
            "a closed polyline needs 3 points".into(),
        ));
    }
    let orient = signed_area(quad).signum();
    let flux = |x: Vec2, n: Vec2| -> Result<f64> {
        let g = field.gradient(x)?;
        let s = g.norm();
        Ok(if s > 0.0 {
            s.powf(m - 2.0) * g.dot(n)
        } else {
            0.0
        })
    };
    let mut total = 0.0;
    for i in 0..quad.len() {
        let a = quad[i];
        let b = quad[(i + 1) % quad.len()];
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        // outward is to the right of a counterclockwise boundary
        let n = -(b - a).perp() / len * orient;
        let pieces = (len / spacing).ceil().max(1.0) as usize;
        let ds = len / pieces as f64;
        let mut prev = flux(a, n)?;
        for k in 1..=pieces {
            let next = flux(a.lerp(b, k as f64 / pieces as f64), n)?;
            total += 0.5 * (prev + next) * ds;
            prev = next;
        }
    }
    Ok(total)
}

fn perimeter(quad: &[Vec2]) -> f64 {
    (0..quad.len())
        .map(|i| quad[i].dist(quad[(i + 1) % quad.len()]))
        .sum()
}

fn point_in(poly: &[Vec2], x: Vec2) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > x.y) != (b.y > x.y) && x.x < a.x + (x.y - a.y) / (b.y - a.y) * (b.x - a.x) {
            inside = !inside;
        }
    }
    inside
}

/// `quad` keeps `clearance` from the contact nodes and from `H` (none may
/// lie inside it either) and `h` from `∂Ω`.
pub fn check_clearance(
    quad: &[Vec2],
    polygon: &Polygon,
    contact: &ContactEstimate,
    ridge: &HighRidge,
    clearance: f64,
) -> Result<()> {
    let h = contact.h;
    let mut closed = quad.to_vec();
    closed.push(quad[0]);
    for i in 0..quad.len() {
        let (a, b) = (quad[i], quad[(i + 1) % quad.len()]);
        let pieces = (a.dist(b) / (0.5 * h)).ceil().max(1.0) as usize;
        for k in 0..=pieces {
            let x = a.lerp(b, k as f64 / pieces as f64);
            if polygon.signed_distance(x) < h {
                return Err(Error::ClearanceViolated(format!(
                    "({:.4}, {:.4}) is within h of the boundary",
                    x.x, x.y
                )));
            }
            if ridge.distance(x) < clearance {
                return Err(Error::ClearanceViolated(format!(
                    "({:.4}, {:.4}) is near the high ridge",
                    x.x, x.y
                )));
            }
        }
    }
    for &z in &contact.nodes {
        if point_in(quad, z) || point_polyline_distance(z, &closed) < clearance {
            return Err(Error::ClearanceViolated(format!(
                "contact node ({:.4}, {:.4})",
                z.x, z.y
            )));
        }
    }
    for z in [ridge.endpoints[0], ridge.endpoints[1], ridge.midpoint()] {
        if point_in(quad, z) {
            return Err(Error::ClearanceViolated(
                "the high ridge lies inside".into(),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussReport {
    pub m: f64,
    pub value: f64,
    /// `10 h perimeter Λ∞^{m-1}`.
    pub tol: f64,
    pub perimeter: f64,
    pub pass: bool,
}

/// The flux of `|∇u|^{m-2} ∇u` out of an admissible quadrilateral is at most
/// `10 h perimeter Λ∞^{m-1}`.
pub fn gauss_check<F: FieldView + ?Sized>(
    field: &F,
    quad: &[Vec2],
    m: f64,
    contact: &ContactEstimate,
    ridge: &HighRidge,
) -> Result<GaussReport> {
    let h = contact.h;
    check_clearance(quad, field.polygon(), contact, ridge, 4.0 * h)?;
    let value = gauss_integral(field, quad, m, 0.5 * h)?;
    let per = perimeter(quad);
    let tol = 10.0 * h * per * ridge.lambda_inf.powf(m - 1.0);
    Ok(GaussReport {
        m,
        value,
        tol,
        perimeter: per,
        pass: value <= tol,
    })
}

/// `count` random quadrilaterals passing `check_clearance` with `4h`:
/// star-shaped around a uniform center, four sorted random angles and
/// radii between `4h` and `R/2`.
pub fn random_quads(
    polygon: &Polygon,
    contact: &ContactEstimate,
    ridge: &HighRidge,
    count: usize,
    seed: u64,
) -> Vec<Vec<Vec2>> {
    let h = contact.h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = polygon.bounding_box();
    let rmax = (0.5 * ridge.inradius).max(8.0 * h);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 10_000 * count.max(1) {
        attempts += 1;
        let c = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if !polygon.contains_strictly(c) {
            continue;
        }
        let mut angles: Vec<f64> = (0..4)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        let quad: Vec<Vec2> = angles
            .iter()
            .map(|&t| c + Vec2::new(t.cos(), t.sin()) * rng.gen_range(4.0 * h..rmax))
            .collect();
        if signed_area(&quad).abs() < 4.0 * h * h {
            continue;
        }
        if check_clearance(&quad, polygon, contact, ridge, 4.0 * h).is_ok() {
            out.push(quad);
        }
    }
    out
}
