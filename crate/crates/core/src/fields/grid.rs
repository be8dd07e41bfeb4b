use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::vec2::Vec2;

/// Fewest strictly interior nodes a usable grid may have (a 3x3 block).
pub const MIN_INTERIOR_NODES: usize = 9;

/// Axis directions used by the per-node boundary cuts, in this order.
pub const AXES: [Vec2; 4] = [
    Vec2::new(1.0, 0.0),
    Vec2::new(-1.0, 0.0),
    Vec2::new(0.0, 1.0),
    Vec2::new(0.0, -1.0),
];

/// Node-centered axis-aligned grid over the bounding box of a polygon.
///
/// Node `(i, j)` sits at `origin + (i h, j h)`. Nodes strictly inside the
/// polygon carry unknowns; for those, `cuts` holds the arm length to the
/// next sample along `+x, -x, +y, -y`: `h` when the neighbor is an inside
/// node, otherwise the distance to the boundary along that axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    polygon: Polygon,
    origin: Vec2,
    h: f64,
    nx: usize,
    ny: usize,
    inside: Vec<bool>,
    cuts: Vec<[f64; 4]>,
    bdist: Vec<f64>,
}

/// Build the grid of spacing `h` for `polygon`.
pub fn rasterize(polygon: &Polygon, h: f64) -> Result<GridSpec> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "grid spacing must be positive, got {h}"
        )));
    }
    let (lo, hi) = polygon.bounding_box();
    let nx = ((hi.x - lo.x) / h - 1e-9).ceil() as usize + 1;
    let ny = ((hi.y - lo.y) / h - 1e-9).ceil() as usize + 1;
    let n = nx * ny;
    let mut inside = vec![false; n];
    let mut bdist = vec![f64::NAN; n];
    let eps = 1e-9 * h;
    for j in 0..ny {
        for i in 0..nx {
            let x = Vec2::new(lo.x + i as f64 * h, lo.y + j as f64 * h);
            let d = polygon.signed_distance(x);
            if d > eps {
                inside[j * nx + i] = true;
                bdist[j * nx + i] = d;
            }
        }
    }
    let interior = inside.iter().filter(|&&b| b).count();
    if interior < MIN_INTERIOR_NODES {
        return Err(Error::ResolutionTooCoarse {
            interior,
            required: MIN_INTERIOR_NODES,
        });
    }
    let mut cuts = vec![[0.0; 4]; n];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if !inside[k] {
                continue;
            }
            let x = Vec2::new(lo.x + i as f64 * h, lo.y + j as f64 * h);
            let nbrs = [
                (i + 1 < nx).then(|| k + 1),
                (i > 0).then(|| k - 1),
                (j + 1 < ny).then(|| k + nx),
                (j > 0).then(|| k - nx),
            ];
            for (a, nb) in nbrs.iter().enumerate() {
                cuts[k][a] = match nb {
                    Some(m) if inside[*m] => h,
                    _ => polygon.ray_exit(x, AXES[a]).min(h),
                };
            }
        }
    }
    Ok(GridSpec {
        polygon: polygon.clone(),
        origin: lo,
        h,
        nx,
        ny,
        inside,
        cuts,
        bdist,
    })
}

impl GridSpec {
    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        )
    }

    #[inline]
    pub fn node_at(&self, k: usize) -> Vec2 {
        let (i, j) = self.ij(k);
        self.node(i, j)
    }

    #[inline]
    pub fn is_inside(&self, k: usize) -> bool {
        self.inside[k]
    }

    /// Inside test for possibly out-of-range signed indices.
    #[inline]
    pub fn inside_ij(&self, i: isize, j: isize) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.nx
            && (j as usize) < self.ny
            && self.inside[j as usize * self.nx + i as usize]
    }

    pub fn inside_mask(&self) -> &[bool] {
        &self.inside
    }

    pub fn cuts(&self, k: usize) -> [f64; 4] {
        self.cuts[k]
    }

    /// Boundary distance of node `k` (NaN for nodes not strictly inside).
    pub fn boundary_distance_at(&self, k: usize) -> f64 {
        self.bdist[k]
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.inside[k])
    }

    pub fn interior_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Cell `(i, j)` containing `x`, clamped to the grid, and the local
    /// coordinates of `x` in it.
    #[inline]
    pub fn locate(&self, x: Vec2) -> (usize, usize, f64, f64) {
        let fx = (x.x - self.origin.x) / self.h;
        let fy = (x.y - self.origin.y) / self.h;
        let i = (fx.floor().max(0.0) as usize).min(self.nx.saturating_sub(2));
        let j = (fy.floor().max(0.0) as usize).min(self.ny.saturating_sub(2));
        (i, j, fx - i as f64, fy - j as f64)
    }

    /// Nearest grid node to `x` (not necessarily inside).
    pub fn nearest_node(&self, x: Vec2) -> (usize, usize) {
        let i = ((x.x - self.origin.x) / self.h)
            .round()
            .clamp(0.0, (self.nx - 1) as f64);
        let j = ((x.y - self.origin.y) / self.h)
            .round()
            .clamp(0.0, (self.ny - 1) as f64);
        (i as usize, j as usize)
    }

    /// True when both grids have the same geometry and layout.
    pub fn same_layout(&self, other: &GridSpec) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.h == other.h
            && self.origin == other.origin
            && self.inside == other.inside
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary_distance;

    #[test]
    fn square_counts() {
        let g = rasterize(&Polygon::unit_square(), 0.25).unwrap();
        assert_eq!((g.nx(), g.ny()), (5, 5));
        assert_eq!(g.interior_count(), 9);
        assert!(matches!(
            rasterize(&Polygon::unit_square(), 0.5),
            Err(Error::ResolutionTooCoarse { interior: 1, .. })
        ));
        let g = rasterize(&Polygon::unit_square(), 1.0 / 128.0).unwrap();
        assert_eq!(g.interior_count(), 127 * 127);
    }

    #[test]
    fn triangle_mask_and_cuts() {
        let tri = Polygon::new("tri", &[[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]]).unwrap();
        let h = 0.1;
        let g = rasterize(&tri, h).unwrap();
        for k in g.interior_nodes() {
            let x = g.node_at(k);
            assert!(boundary_distance(&tri, x).unwrap() > 0.0);
            for (a, &c) in g.cuts(k).iter().enumerate() {
                assert!(c > 0.0 && c <= h);
                if c < h {
                    // cut point lies on the boundary
                    let y = x + AXES[a] * c;
                    assert!(tri.signed_distance(y).abs() < 1e-10);
                }
            }
        }
    }
}
