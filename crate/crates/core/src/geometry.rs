//! Exact convex-polygon primitives: validation, boundary distance, the set of
//! centers of largest inscribed disks (the high ridge), corner bisectors and
//! the diameter.
//!
//! Polygons are stored counterclockwise. Every side carries its inward unit
//! normal `n_k` and offset `c_k` so that the signed distance of `x` to the
//! side line is `n_k . x - c_k`, positive inside.

use crate::error::{Error, Result};
use crate::vec2::{closest_on_segment, point_segment_distance, signed_area, Vec2};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Relative tolerance used for all exactness checks in this module.
pub const GEOM_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    name: String,
    vertices: Vec<Vec2>,
    normals: Vec<Vec2>,
    offsets: Vec<f64>,
    scale: f64,
}

/// On-disk polygon description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonFile {
    pub name: String,
    pub vertices: Vec<[f64; 2]>,
}

/// Validate a raw vertex list and build a counterclockwise [`Polygon`].
pub fn validate_polygon(name: &str, vertices: &[Vec2]) -> Result<Polygon> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::TooFewVertices(n));
    }
    let scale = vertices
        .iter()
        .flat_map(|v| [v.x.abs(), v.y.abs()])
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for i in 0..n {
        if !vertices[i].is_finite() {
            return Err(Error::DegenerateEdge(i));
        }
        for j in (i + 1)..n {
            if vertices[i].dist(vertices[j]) <= 1e-12 * scale.max(1.0) {
                return Err(Error::DegenerateEdge(j));
            }
        }
    }
    let mut verts = vertices.to_vec();
    if signed_area(&verts) < 0.0 {
        verts.reverse();
    }
    // strict convexity: every turn is a strictly positive left turn and the
    // boundary winds exactly once
    let mut turning = 0.0;
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        let c = verts[(i + 2) % n];
        let e1 = b - a;
        let e2 = c - b;
        let cr = e1.cross(e2);
        if cr <= 1e-12 * e1.norm() * e2.norm() {
            return Err(Error::NonConvex((i + 1) % n));
        }
        turning += cr.atan2(e1.dot(e2));
    }
    if (turning - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
        return Err(Error::NonConvex(0));
    }
    if signed_area(&verts) <= 0.0 {
        return Err(Error::NonConvex(0));
    }
    let mut normals = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        let nrm = (b - a).perp().normalized();
        normals.push(nrm);
        offsets.push(nrm.dot(a));
    }
    Ok(Polygon {
        name: name.to_string(),
        vertices: verts,
        normals,
        offsets,
        scale,
    })
}

impl Polygon {
    pub fn new(name: &str, vertices: &[[f64; 2]]) -> Result<Self> {
        let v: Vec<Vec2> = vertices.iter().map(|&p| Vec2::from(p)).collect();
        validate_polygon(name, &v)
    }

    pub fn unit_square() -> Self {
        Polygon::new("square", &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    /// Axis-aligned rectangle `[0, w] x [0, h]`.
    pub fn rectangle(w: f64, h: f64) -> Result<Self> {
        Polygon::new("rectangle", &[[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])
    }

    /// Regular polygon with `n` corners on the circle of radius `r` about `c`.
    pub fn regular(n: usize, c: Vec2, r: f64) -> Result<Self> {
        let pts: Vec<Vec2> = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                c + Vec2::new(a.cos(), a.sin()) * r
            })
            .collect();
        validate_polygon(&format!("regular{n}"), &pts)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, k: usize) -> Vec2 {
        self.vertices[k % self.vertices.len()]
    }

    /// Side `k` runs from vertex `k` to vertex `k + 1`.
    pub fn side(&self, k: usize) -> (Vec2, Vec2) {
        (self.vertex(k), self.vertex(k + 1))
    }

    pub fn inward_normal(&self, k: usize) -> Vec2 {
        self.normals[k % self.normals.len()]
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                let (a, b) = self.side(k);
                a.dist(b)
            })
            .sum()
    }

    /// Coordinate scale used for absolute tolerances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Minimum over sides of the signed distance to the side line. Positive
    /// inside, zero on the boundary and negative outside; inside the polygon
    /// it equals the distance to the boundary.
    #[inline]
    pub fn signed_distance(&self, x: Vec2) -> f64 {
        let mut d = f64::INFINITY;
        for (n, c) in self.normals.iter().zip(&self.offsets) {
            d = d.min(n.dot(x) - c);
        }
        d
    }

    #[inline]
    pub fn contains(&self, x: Vec2) -> bool {
        self.signed_distance(x) >= -1e-12 * self.scale.max(1.0)
    }

    #[inline]
    pub fn contains_strictly(&self, x: Vec2) -> bool {
        self.signed_distance(x) > 1e-12 * self.scale.max(1.0)
    }

    /// Distance along the ray `x + t dir` (`dir` unit) to the boundary, for
    /// `x` inside the polygon.
    pub fn ray_exit(&self, x: Vec2, dir: Vec2) -> f64 {
        let mut t = f64::INFINITY;
        for (n, c) in self.normals.iter().zip(&self.offsets) {
            let rate = n.dot(dir);
            if rate < 0.0 {
                let s = (n.dot(x) - c) / -rate;
                t = t.min(s.max(0.0));
            }
        }
        t
    }

    /// Nearest point of the boundary to `x`.
    pub fn nearest_boundary_point(&self, x: Vec2) -> Vec2 {
        let mut best = self.vertices[0];
        let mut bd = f64::INFINITY;
        for k in 0..self.len() {
            let (a, b) = self.side(k);
            let q = closest_on_segment(x, a, b);
            let d = q.dist(x);
            if d < bd {
                bd = d;
                best = q;
            }
        }
        best
    }

    /// Area of the intersection of this polygon with a convex polygon
    /// `clip` (Sutherland-Hodgman against each side).
    pub fn intersection_area(&self, clip: &[Vec2]) -> f64 {
        let mut poly: Vec<Vec2> = clip.to_vec();
        for (n, c) in self.normals.iter().zip(&self.offsets) {
            if poly.is_empty() {
                break;
            }
            let mut out = Vec::with_capacity(poly.len() + 2);
            let m = poly.len();
            for i in 0..m {
                let p = poly[i];
                let q = poly[(i + 1) % m];
                let dp = n.dot(p) - c;
                let dq = n.dot(q) - c;
                if dp >= 0.0 {
                    out.push(p);
                }
                if (dp >= 0.0) != (dq >= 0.0) {
                    let t = dp / (dp - dq);
                    out.push(p.lerp(q, t));
                }
            }
            poly = out;
        }
        if poly.len() < 3 {
            0.0
        } else {
            signed_area(&poly).abs()
        }
    }

    pub fn to_file(&self) -> PolygonFile {
        PolygonFile {
            name: self.name.clone(),
            vertices: self.vertices.iter().map(|&v| v.into()).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: PolygonFile =
            serde_json::from_str(text).map_err(|e| Error::PolygonParse(e.to_string()))?;
        Polygon::new(&f.name, &f.vertices)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::PolygonParse(format!("{}: {e}", path.display())))?;
        Polygon::from_json(&text)
    }
}

/// Distance from an interior or boundary point to the boundary: the minimum
/// over sides of the point-to-segment distance.
pub fn boundary_distance(polygon: &Polygon, x: Vec2) -> Result<f64> {
    if !polygon.contains(x) {
        return Err(Error::OutsideDomain(x.x, x.y));
    }
    Ok((0..polygon.len())
        .map(|k| {
            let (a, b) = polygon.side(k);
            point_segment_distance(x, a, b)
        })
        .fold(f64::INFINITY, f64::min))
}

/// The set `H` of points at maximal distance `R` from the boundary,
/// represented by its two endpoints (equal when `H` is a single point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighRidge {
    pub endpoints: [Vec2; 2],
    pub inradius: f64,
    pub lambda_inf: f64,
}

impl HighRidge {
    pub fn is_point(&self) -> bool {
        self.endpoints[0] == self.endpoints[1]
    }

    pub fn length(&self) -> f64 {
        self.endpoints[0].dist(self.endpoints[1])
    }

    pub fn distance(&self, x: Vec2) -> f64 {
        point_segment_distance(x, self.endpoints[0], self.endpoints[1])
    }

    pub fn nearest_point(&self, x: Vec2) -> Vec2 {
        closest_on_segment(x, self.endpoints[0], self.endpoints[1])
    }

    pub fn midpoint(&self) -> Vec2 {
        self.endpoints[0].lerp(self.endpoints[1], 0.5)
    }
}

/// Solve the 3x3 system `a x = b` by Cramer's rule.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d.abs() < 1e-14 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][k] = b[r];
        }
        *o = det(&m) / d;
    }
    Some(out)
}

/// Largest inscribed disks of a convex polygon.
///
/// Every vertex of the optimal face of `max r s.t. n_k . x - c_k >= r` is the
/// point equidistant from three side lines, so enumerating side triples finds
/// all endpoints of `H`; sides parallel to each other are covered by triples
/// that contain both of them.
pub fn chebyshev_set(polygon: &Polygon) -> HighRidge {
    let n = polygon.len();
    let tol = GEOM_RTOL * polygon.scale().max(1.0);
    let mut cands: Vec<(Vec2, f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let rows = [i, j, k].map(|s| {
                    let nn = polygon.normals[s];
                    [nn.x, nn.y, -1.0]
                });
                let rhs = [i, j, k].map(|s| polygon.offsets[s]);
                if let Some(sol) = solve3(rows, rhs) {
                    let x = Vec2::new(sol[0], sol[1]);
                    let r = sol[2];
                    if r > 0.0 && polygon.signed_distance(x) >= r - tol {
                        cands.push((x, polygon.signed_distance(x)));
                    }
                }
            }
        }
    }
    let rmax = cands.iter().map(|c| c.1).fold(0.0f64, f64::max);
    let opt: Vec<Vec2> = cands
        .iter()
        .filter(|c| c.1 >= rmax - tol)
        .map(|c| c.0)
        .collect();
    // the optimal set is a point or a segment: its extreme points are the
    // pair of candidates that are farthest apart
    let mut ends = [opt[0], opt[0]];
    let mut best = 0.0;
    for a in 0..opt.len() {
        for b in (a + 1)..opt.len() {
            let d = opt[a].dist(opt[b]);
            if d > best + tol {
                best = d;
                ends = [opt[a], opt[b]];
            }
        }
    }
    if best <= tol {
        // a single point: average the numerically coincident candidates
        let c = opt.iter().fold(Vec2::ZERO, |s, &p| s + p) / opt.len() as f64;
        ends = [c, c];
    } else if (ends[1].x, ends[1].y) < (ends[0].x, ends[0].y) {
        ends.swap(0, 1);
    }
    HighRidge {
        endpoints: ends,
        inradius: rmax,
        lambda_inf: 1.0 / rmax,
    }
}

/// Inward unit bisector of the interior angle at corner `j`.
pub fn corner_bisector(polygon: &Polygon, j: usize) -> Result<Vec2> {
    let n = polygon.len();
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, len: n });
    }
    let p = polygon.vertex(j);
    let prev = polygon.vertex(j + n - 1);
    let next = polygon.vertex(j + 1);
    Ok(((prev - p).normalized() + (next - p).normalized()).normalized())
}

/// Largest distance between two vertices.
pub fn diameter(polygon: &Polygon) -> f64 {
    let v = polygon.vertices();
    let mut d = 0.0f64;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            d = d.max(v[i].dist(v[j]));
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tri() -> Polygon {
        Polygon::new("tri", &[[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]]).unwrap()
    }

    #[test]
    fn validation_examples() {
        let sq = Polygon::unit_square();
        assert_eq!(sq.len(), 4);
        assert!(matches!(
            Polygon::new("bow", &[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]),
            Err(Error::NonConvex(_))
        ));
        assert!(Polygon::new("t", &[[0.0, 0.0], [2.0, 0.0], [1.0, 2.0]]).is_ok());
        assert!(matches!(
            Polygon::new("two", &[[0.0, 0.0], [1.0, 0.0]]),
            Err(Error::TooFewVertices(2))
        ));
        assert!(matches!(
            Polygon::new("dup", &[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            Err(Error::DegenerateEdge(_))
        ));
        // collinear consecutive vertices are rejected
        assert!(matches!(
            Polygon::new("col", &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]),
            Err(Error::NonConvex(_))
        ));
        // clockwise input is normalized
        let cw = Polygon::new("cw", &[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(cw.area() > 0.0);
    }

    #[test]
    fn boundary_distance_examples() {
        let sq = Polygon::unit_square();
        assert_eq!(boundary_distance(&sq, Vec2::new(0.5, 0.5)).unwrap(), 0.5);
        assert_eq!(boundary_distance(&sq, Vec2::new(0.25, 0.5)).unwrap(), 0.25);
        assert!(matches!(
            boundary_distance(&sq, Vec2::new(1.5, 0.5)),
            Err(Error::OutsideDomain(..))
        ));
        // independent oracle: distances to the three side lines of the
        // 3-4-5 triangle, the hypotenuse being 3x + 4y - 12 = 0
        let p = Vec2::new(1.0, 1.0);
        let oracle = [p.y, p.x, (3.0 * p.x + 4.0 * p.y - 12.0).abs() / 5.0]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(oracle, 1.0);
        assert!((boundary_distance(&tri(), p).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_examples() {
        let h = chebyshev_set(&Polygon::unit_square());
        assert!(h.is_point());
        assert!((h.inradius - 0.5).abs() < 1e-14);
        assert!(h.endpoints[0].dist(Vec2::new(0.5, 0.5)) < 1e-14);
        assert_eq!(h.lambda_inf, 1.0 / h.inradius);

        let h = chebyshev_set(&Polygon::rectangle(2.0, 1.0).unwrap());
        assert!((h.inradius - 0.5).abs() < 1e-14);
        assert!(h.endpoints[0].dist(Vec2::new(0.5, 0.5)) < 1e-12);
        assert!(h.endpoints[1].dist(Vec2::new(1.5, 0.5)) < 1e-12);

        // equilateral triangle of side 2: apothem s / (2 sqrt 3), checked
        // against brute-force grid maximization of the boundary distance
        let s3 = 3f64.sqrt();
        let eq = Polygon::new("eq", &[[0.0, 0.0], [2.0, 0.0], [1.0, s3]]).unwrap();
        let h = chebyshev_set(&eq);
        assert!((h.inradius - 1.0 / s3).abs() < 1e-12);
        let mut brute = 0.0f64;
        let m = 400;
        for i in 0..=m {
            for j in 0..=m {
                let x = Vec2::new(2.0 * i as f64 / m as f64, s3 * j as f64 / m as f64);
                if eq.contains(x) {
                    brute = brute.max(boundary_distance(&eq, x).unwrap());
                }
            }
        }
        assert!((brute - h.inradius).abs() < 1e-2);
        assert!(brute <= h.inradius + 1e-12);
    }

    #[test]
    fn bisector_examples() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let b = corner_bisector(&Polygon::unit_square(), 0).unwrap();
        assert!((b.x - r).abs() < 1e-15 && (b.y - r).abs() < 1e-15);
        let b = corner_bisector(&Polygon::rectangle(2.0, 1.0).unwrap(), 0).unwrap();
        assert!((b.x - r).abs() < 1e-15 && (b.y - r).abs() < 1e-15);
        let b = corner_bisector(&tri(), 0).unwrap();
        assert!((b.x - r).abs() < 1e-15 && (b.y - r).abs() < 1e-15);
        assert!(matches!(
            corner_bisector(&tri(), 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn diameter_examples() {
        assert!((diameter(&Polygon::unit_square()) - 2f64.sqrt()).abs() < 1e-15);
        assert!((diameter(&Polygon::rectangle(2.0, 1.0).unwrap()) - 5f64.sqrt()).abs() < 1e-15);
        let hex = Polygon::regular(6, Vec2::ZERO, 1.0).unwrap();
        assert!((diameter(&hex) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ridge_invariants_on_random_points() {
        let polys = [
            Polygon::unit_square(),
            Polygon::rectangle(2.0, 1.0).unwrap(),
            tri(),
            Polygon::regular(5, Vec2::new(0.3, -0.2), 1.3).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in &polys {
            let h = chebyshev_set(p);
            let r = h.inradius;
            for e in h.endpoints {
                assert!((boundary_distance(p, e).unwrap() - r).abs() <= 1e-10 * r);
            }
            for k in 0..=20 {
                let x = h.endpoints[0].lerp(h.endpoints[1], k as f64 / 20.0);
                assert!((boundary_distance(p, x).unwrap() - r).abs() <= 1e-10 * r);
            }
            let (lo, hi) = p.bounding_box();
            let mut n = 0;
            while n < 1000 {
                let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                if p.contains(x) {
                    assert!(boundary_distance(p, x).unwrap() <= r + 1e-12);
                    n += 1;
                }
            }
        }
    }

    #[test]
    fn clipping_area() {
        let sq = Polygon::unit_square();
        let cell = [
            Vec2::new(0.75, 0.75),
            Vec2::new(1.25, 0.75),
            Vec2::new(1.25, 1.25),
            Vec2::new(0.75, 1.25),
        ];
        assert!((sq.intersection_area(&cell) - 0.0625).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn distance_is_one_lipschitz(ax in 0.0..4.0f64, ay in 0.0..3.0f64, bx in 0.0..4.0f64, by in 0.0..3.0f64) {
            let t = tri();
            let a = Vec2::new(ax, ay);
            let b = Vec2::new(bx, by);
            prop_assume!(t.contains(a) && t.contains(b));
            let da = boundary_distance(&t, a).unwrap();
            let db = boundary_distance(&t, b).unwrap();
            prop_assert!((da - db).abs() <= a.dist(b) + 1e-12);
        }

        #[test]
        fn reversal_gives_same_ridge(n in 3usize..9, r in 0.5..3.0f64, cx in -1.0..1.0f64, stretch in 0.3..1.0f64) {
            let pts: Vec<Vec2> = (0..n).map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.1;
                Vec2::new(cx + r * a.cos(), stretch * r * a.sin())
            }).collect();
            let p = validate_polygon("p", &pts).unwrap();
            let mut rev = pts.clone();
            rev.reverse();
            let q = validate_polygon("q", &rev).unwrap();
            let h1 = chebyshev_set(&p);
            let h2 = chebyshev_set(&q);
            prop_assert!((h1.inradius - h2.inradius).abs() < 1e-12);
            prop_assert!(h1.endpoints[0].dist(h2.endpoints[0]) < 1e-9);
            prop_assert!(h1.endpoints[1].dist(h2.endpoints[1]) < 1e-9);
            prop_assert!(p.contains_strictly(h1.endpoints[0]));
        }
    }
}
