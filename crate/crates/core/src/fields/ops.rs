use super::{FieldView, ScalarField};
use crate::error::{Error, Result};
use crate::vec2::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Circle samples used by [`s_operator_default`].
pub const DEFAULT_RING_SAMPLES: usize = 256;

/// Default S-operator radii in units of `h`, largest first.
pub const S_RADII_CELLS: [f64; 4] = [8.0, 6.0, 4.0, 3.0];

/// Relative tolerance for the monotonicity of `S_r` in `r`.
pub const MONOTONE_RTOL: f64 = 1e-3;

/// Largest decrement rate of `field` from `x` to the circle of radius `r`,
/// `-min_k (f(y_k) - f(x)) / r` over `k` equispaced samples `y_k`.
pub fn ring_decrement<F: FieldView + ?Sized>(field: &F, x: Vec2, r: f64, k: usize) -> Result<f64> {
    if k < 64 {
        return Err(Error::InvalidArgument(format!(
            "ring needs at least 64 samples, got {k}"
        )));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ring radius must be positive, got {r}"
        )));
    }
    let poly = field.polygon();
    if poly.signed_distance(x) < r * (1.0 - 1e-12) {
        return Err(Error::BallNotContained { x: x.x, y: x.y, r });
    }
    let f0 = field.value(x)?;
    let mut worst = f64::INFINITY;
    for i in 0..k {
        let th = 2.0 * PI * i as f64 / k as f64;
        let y = x + Vec2::new(th.cos(), th.sin()) * r;
        worst = worst.min(field.value(y)? - f0);
    }
    Ok(-worst / r)
}

/// Limit `r -> 0` of the ring decrement, extrapolated linearly from the
/// given decreasing radii. Fails with `NonMonotoneSequence` when `S_r`
/// grows as `r` shrinks by more than `MONOTONE_RTOL` (relative).
pub fn s_operator<F: FieldView + ?Sized>(
    field: &F,
    x: Vec2,
    radii: &[f64],
    k: usize,
) -> Result<f64> {
    if radii.len() < 2 {
        return Err(Error::InvalidArgument(
            "s_operator needs at least two radii".into(),
        ));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "s_operator radii must be strictly decreasing".into(),
        ));
    }
    let s: Vec<f64> = radii
        .iter()
        .map(|&r| ring_decrement(field, x, r, k))
        .collect::<Result<_>>()?;
    for i in 1..s.len() {
        let jump = s[i] - s[i - 1];
        if jump > MONOTONE_RTOL * s[i - 1].abs().max(1.0) {
            return Err(Error::NonMonotoneSequence { r: radii[i], jump });
        }
    }
    let n = s.len() as f64;
    let mr = radii.iter().sum::<f64>() / n;
    let ms = s.iter().sum::<f64>() / n;
    let sxx: f64 = radii.iter().map(|r| (r - mr) * (r - mr)).sum();
    let sxy: f64 = radii.iter().zip(&s).map(|(r, v)| (r - mr) * (v - ms)).sum();
    let b = sxy / sxx;
    Ok(ms - b * mr)
}

/// [`s_operator`] with radii `{8h, 6h, 4h, 3h}` and 256 circle samples.
pub fn s_operator_default<F: FieldView + ?Sized>(field: &F, x: Vec2, h: f64) -> Result<f64> {
    let radii = S_RADII_CELLS.map(|c| c * h);
    s_operator(field, x, &radii, DEFAULT_RING_SAMPLES)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityStats {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `(f(x) + f(y)) / 2 - f(midpoint)` seen (may be negative).
    pub worst_deficit: f64,
    pub tol: f64,
    pub seed: u64,
}

/// Sample `n_pairs` random pairs of inside nodes whose midpoint is again a
/// grid node and count midpoint concavity violations beyond `tol`.
pub fn midpoint_concavity_violations(
    field: &ScalarField,
    n_pairs: usize,
    tol: f64,
    seed: u64,
) -> ConcavityStats {
    let g = field.grid();
    let nodes: Vec<usize> = g.interior_nodes().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = ConcavityStats {
        pairs: 0,
        violations: 0,
        worst_deficit: f64::NEG_INFINITY,
        tol,
        seed,
    };
    if nodes.len() < 2 {
        return stats;
    }
    let mut attempts = 0usize;
    while stats.pairs < n_pairs && attempts < 100 * n_pairs.max(1) {
        attempts += 1;
        let a = nodes[rng.gen_range(0..nodes.len())];
        let b = nodes[rng.gen_range(0..nodes.len())];
        if a == b {
            continue;
        }
        let (ia, ja) = g.ij(a);
        let (ib, jb) = g.ij(b);
        if (ia + ib) % 2 != 0 || (ja + jb) % 2 != 0 {
            continue;
        }
        let m = g.index((ia + ib) / 2, (ja + jb) / 2);
        if !g.is_inside(m) {
            continue;
        }
        stats.pairs += 1;
        let deficit = 0.5 * (field.at(a) + field.at(b)) - field.at(m);
        stats.worst_deficit = stats.worst_deficit.max(deficit);
        if deficit > tol {
            stats.violations += 1;
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{rasterize, AnalyticField, FieldLabel};
    use crate::geometry::Polygon;
    use std::sync::Arc;

    fn linear(g: Vec2) -> AnalyticField<impl Fn(Vec2) -> f64, impl Fn(Vec2) -> Vec2> {
        AnalyticField::new(Polygon::unit_square(), move |x: Vec2| x.dot(g), move |_| g)
    }

    #[test]
    fn ring_of_linear_field() {
        // slope direction aligned with a sample angle: exact
        let g = Vec2::new(0.0, -1.3);
        let f = linear(g);
        for &r in &[0.05, 0.1, 0.2] {
            let s = ring_decrement(&f, Vec2::new(0.5, 0.5), r, 256).unwrap();
            assert!((s - 1.3).abs() < 1e-8, "{s}");
        }
        // generic direction: within the circle sampling error
        let g = Vec2::new(0.7, -0.4);
        let s = ring_decrement(&linear(g), Vec2::new(0.5, 0.5), 0.1, 256).unwrap();
        let bound = g.norm() * (1.0 - (PI / 256.0).cos());
        assert!(s <= g.norm() + 1e-12 && s >= g.norm() - bound - 1e-12);
    }

    #[test]
    fn ring_of_cone_and_ridge() {
        let c = Vec2::new(0.5, 0.5);
        let cone = AnalyticField::new(
            Polygon::unit_square(),
            move |x: Vec2| -x.dist(c),
            move |x: Vec2| (c - x).normalized(),
        );
        for &r in &[0.05, 0.2, 0.4] {
            assert!((ring_decrement(&cone, c, r, 256).unwrap() - 1.0).abs() < 1e-12);
        }
        let ridge = AnalyticField::new(
            Polygon::unit_square(),
            |x: Vec2| x.x.min(1.0 - x.x),
            |x: Vec2| Vec2::new(if x.x < 0.5 { 1.0 } else { -1.0 }, 0.0),
        );
        let s = s_operator(&ridge, c, &[0.2, 0.1, 0.05], 256).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_must_fit() {
        let f = linear(Vec2::new(1.0, 0.0));
        assert!(matches!(
            ring_decrement(&f, Vec2::new(0.1, 0.5), 0.2, 64),
            Err(Error::BallNotContained { .. })
        ));
        assert!(ring_decrement(&f, Vec2::new(0.5, 0.5), 0.1, 16).is_err());
    }

    #[test]
    fn s_operator_of_linear_field() {
        let g = Vec2::new(2.0, 0.0);
        let s = s_operator(
            &linear(g),
            Vec2::new(0.5, 0.5),
            &[0.08, 0.06, 0.04, 0.03],
            256,
        )
        .unwrap();
        assert!((s - 2.0).abs() < 1e-10);
    }

    #[test]
    fn s_operator_flags_convex_growth() {
        // cusp along a circle: S_r ~ r^{-1/2} grows as r shrinks
        let c = Vec2::new(0.5, 0.5);
        let f = AnalyticField::new(
            Polygon::unit_square(),
            move |x: Vec2| -(x.dist(c) - 0.1).abs().sqrt(),
            |_| Vec2::ZERO,
        );
        let r = s_operator(&f, Vec2::new(0.6, 0.5), &[0.3, 0.2, 0.1, 0.05], 256);
        assert!(matches!(r, Err(Error::NonMonotoneSequence { .. })));
    }

    #[test]
    fn concavity_of_paraboloids() {
        let g = Arc::new(rasterize(&Polygon::unit_square(), 1.0 / 32.0).unwrap());
        let c = Vec2::new(0.5, 0.5);
        let concave = ScalarField::from_fn(g.clone(), FieldLabel::V, 0.0, |x| -x.dist(c).powi(2));
        let st = midpoint_concavity_violations(&concave, 2000, 1e-12, 7);
        assert_eq!(st.pairs, 2000);
        assert_eq!(st.violations, 0);
        let convex = ScalarField::from_fn(g, FieldLabel::V, 0.0, |x| x.dist(c).powi(2));
        let st = midpoint_concavity_violations(&convex, 2000, 1e-6, 7);
        assert!(st.violations as f64 >= 0.99 * st.pairs as f64);
    }

    #[test]
    fn concavity_sampling_is_deterministic() {
        let g = Arc::new(rasterize(&Polygon::unit_square(), 1.0 / 16.0).unwrap());
        let f = ScalarField::from_fn(g, FieldLabel::V, 0.0, |x| (x.x * 7.0).sin() * x.y);
        let a = midpoint_concavity_violations(&f, 500, 0.0, 42);
        let b = midpoint_concavity_violations(&f, 500, 0.0, 42);
        assert_eq!(a, b);
    }
}
