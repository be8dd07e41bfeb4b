use super::banded::BandedSpd;
use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField};
use crate::vec2::Vec2;
use rayon::prelude::*;

/// Sentinel for triangle corners that are not unknowns (value 0).
pub(crate) const OUTSIDE: u32 = u32::MAX;

const CHUNK: usize = 4096;

/// Piecewise-linear discretization of the Rayleigh quotient on a grid.
///
/// Every cell is split along both diagonals in turn and the two P1 energies
/// are averaged, which on a uniform grid reduces to the five-point stencil
/// for `p = 2`. The `L^p` mass uses the lumped node weights
/// `|[x_k - h/2, x_k + h/2]^2 ∩ Ω|`.
#[derive(Debug, Clone)]
pub(crate) struct P1Mesh {
    /// Grid node index of every unknown.
    pub nodes: Vec<usize>,
    pub tri_nodes: Vec<[u32; 3]>,
    pub tri_grads: Vec<[Vec2; 3]>,
    pub tri_weight: Vec<f64>,
    pub mass: Vec<f64>,
    pub bandwidth: usize,
}

fn basis_gradients(p: [Vec2; 3]) -> [Vec2; 3] {
    let d = (p[1] - p[0]).cross(p[2] - p[0]);
    let mut g = [Vec2::ZERO; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let e = p[(i + 2) % 3] - p[(i + 1) % 3];
        *gi = Vec2::new(-e.y, e.x) / d;
    }
    g
}

impl P1Mesh {
    pub fn new(grid: &GridSpec) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let h = grid.h();
        let poly = grid.polygon();
        // order unknowns along the short axis to keep the band narrow
        let column_major = nx >= ny;
        let mut order: Vec<usize> = Vec::with_capacity(grid.interior_count());
        if column_major {
            for i in 0..nx {
                for j in 0..ny {
                    order.push(grid.index(i, j));
                }
            }
        } else {
            order.extend(0..grid.len());
        }
        let mut unknown = vec![OUTSIDE; grid.len()];
        let mut nodes = Vec::new();
        for k in order {
            if grid.is_inside(k) {
                unknown[k] = nodes.len() as u32;
                nodes.push(k);
            }
        }
        let mass = nodes
            .iter()
            .map(|&k| {
                let x = grid.node_at(k);
                let d = poly.signed_distance(x);
                if d >= 0.5 * h * std::f64::consts::SQRT_2 {
                    h * h
                } else {
                    let hh = 0.5 * h;
                    poly.intersection_area(&[
                        x + Vec2::new(-hh, -hh),
                        x + Vec2::new(hh, -hh),
                        x + Vec2::new(hh, hh),
                        x + Vec2::new(-hh, hh),
                    ])
                }
            })
            .collect();
        let mut tri_nodes = Vec::new();
        let mut tri_grads = Vec::new();
        let mut tri_weight = Vec::new();
        let mut bandwidth = 0usize;
        for j in 0..ny.saturating_sub(1) {
            for i in 0..nx.saturating_sub(1) {
                let a = grid.index(i, j);
                let b = grid.index(i + 1, j);
                let c = grid.index(i, j + 1);
                let d = grid.index(i + 1, j + 1);
                for t in [[a, b, d], [a, d, c], [a, b, c], [b, d, c]] {
                    let ids = t.map(|k| unknown[k]);
                    if ids.iter().all(|&u| u == OUTSIDE) {
                        continue;
                    }
                    let pts = t.map(|k| grid.node_at(k));
                    let full = 0.5 * h * h;
                    let area = if pts.iter().all(|&x| poly.signed_distance(x) >= 0.0) {
                        full
                    } else {
                        poly.intersection_area(&pts).min(full)
                    };
                    if area <= 0.0 {
                        continue;
                    }
                    for x in 0..3 {
                        for y in 0..x {
                            if ids[x] != OUTSIDE && ids[y] != OUTSIDE {
                                bandwidth = bandwidth.max(ids[x].abs_diff(ids[y]) as usize);
                            }
                        }
                    }
                    tri_nodes.push(ids);
                    tri_grads.push(basis_gradients(pts));
                    tri_weight.push(0.5 * area);
                }
            }
        }
        P1Mesh {
            nodes,
            tri_nodes,
            tri_grads,
            tri_weight,
            mass,
            bandwidth,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Unknown vector of a field (values at the inside nodes).
    pub fn gather(&self, f: &ScalarField) -> Vec<f64> {
        self.nodes.iter().map(|&k| f.at(k)).collect()
    }

    /// Grid-sized value vector with NaN outside.
    pub fn scatter(&self, u: &[f64], grid_len: usize) -> Vec<f64> {
        let mut out = vec![f64::NAN; grid_len];
        for (&k, &v) in self.nodes.iter().zip(u) {
            out[k] = v;
        }
        out
    }

    #[inline]
    pub fn tri_gradient(&self, t: usize, u: &[f64]) -> Vec2 {
        let mut g = Vec2::ZERO;
        for (&id, &b) in self.tri_nodes[t].iter().zip(&self.tri_grads[t]) {
            if id != OUTSIDE {
                g += b * u[id as usize];
            }
        }
        g
    }

    /// Triangle gradient norms.
    pub fn gradient_norms(&self, u: &[f64]) -> Vec<f64> {
        (0..self.tri_nodes.len())
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(|t| self.tri_gradient(t, u).norm())
            .collect()
    }

    /// `log E(u)` and `log M(u)` for exponent `p`, scaled by the maxima so
    /// that large `p` neither overflows nor underflows.
    pub fn log_energy_mass(&self, u: &[f64], p: f64) -> Result<(f64, f64)> {
        let gn = self.gradient_norms(u);
        let gmax = gn.iter().fold(0.0f64, |a, &b| a.max(b));
        let umax = u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if umax == 0.0 || !umax.is_finite() {
            return Err(Error::ZeroDenominator);
        }
        if gmax == 0.0 {
            return Ok((f64::NEG_INFINITY, 0.0));
        }
        let es = ordered_sum(&gn, |t, g| self.tri_weight[t] * (g / gmax).powf(p));
        let ms = ordered_sum(u, |k, v| self.mass[k] * (v.abs() / umax).powf(p));
        if ms == 0.0 {
            return Err(Error::ZeroDenominator);
        }
        Ok((p * gmax.ln() + es.ln(), p * umax.ln() + ms.ln()))
    }

    pub fn log_quotient(&self, u: &[f64], p: f64) -> Result<f64> {
        let (le, lm) = self.log_energy_mass(u, p)?;
        Ok(le - lm)
    }
}

/// Sum of `f(i, x_i)` with a fixed chunking, so the result does not depend
/// on thread scheduling.
pub(crate) fn ordered_sum(xs: &[f64], f: impl Fn(usize, f64) -> f64 + Sync) -> f64 {
    let parts: Vec<f64> = xs
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            chunk
                .iter()
                .enumerate()
                .map(|(i, &x)| f(c * CHUNK + i, x))
                .sum::<f64>()
        })
        .collect();
    parts.iter().sum()
}

/// Gradient of `log R` and the Hessian of `log E` (without the rank-one
/// term), for the preconditioned descent.
pub(crate) struct Linearization {
    pub grad: Vec<f64>,
    /// Sup norm of the `log M` gradient, used to make the residual relative.
    pub mass_grad_sup: f64,
}

impl P1Mesh {
    /// Fill `hess` with `D^2 E / E` (weights floored at `floor` times their
    /// maximum) and return the gradient of `log E - log M`.
    pub fn linearize(
        &self,
        u: &[f64],
        p: f64,
        floor: f64,
        hess: &mut BandedSpd,
    ) -> Result<Linearization> {
        let nt = self.tri_nodes.len();
        let grads: Vec<Vec2> = (0..nt)
            .into_par_iter()
            .with_min_len(CHUNK)
            .map(|t| self.tri_gradient(t, u))
            .collect();
        let gmax = grads.iter().fold(0.0f64, |a, g| a.max(g.norm()));
        let umax = u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if gmax == 0.0 || umax == 0.0 {
            return Err(Error::ZeroDenominator);
        }
        // a_T p s^{p-2} with s = |g| / gmax
        let wt: Vec<f64> = grads
            .iter()
            .zip(&self.tri_weight)
            .map(|(g, a)| a * p * (g.norm() / gmax).powf(p - 2.0))
            .collect();
        let es: f64 = grads
            .iter()
            .zip(&self.tri_weight)
            .map(|(g, a)| a * (g.norm() / gmax).powf(p))
            .sum();
        let ms: f64 = u
            .iter()
            .zip(&self.mass)
            .map(|(v, m)| m * (v.abs() / umax).powf(p))
            .sum();
        if ms == 0.0 {
            return Err(Error::ZeroDenominator);
        }
        let wmax = wt.iter().fold(0.0f64, |a, &b| a.max(b));
        let n = self.len();
        let mut grad = vec![0.0; n];
        hess.clear();
        let ge = 1.0 / (gmax * es);
        let he = 1.0 / (gmax * gmax * es);
        for t in 0..nt {
            let g = grads[t];
            let gs = g / gmax;
            let ids = self.tri_nodes[t];
            let b = &self.tri_grads[t];
            let w = wt[t];
            for a in 0..3 {
                if ids[a] != OUTSIDE {
                    grad[ids[a] as usize] += w * b[a].dot(gs) * ge;
                }
            }
            let wf = w.max(floor * wmax) * he;
            let gn = g.norm();
            let ghat = if gn > 0.0 { g / gn } else { Vec2::ZERO };
            for a in 0..3 {
                if ids[a] == OUTSIDE {
                    continue;
                }
                for c in 0..=a {
                    if ids[c] == OUTSIDE {
                        continue;
                    }
                    let v = wf * (b[a].dot(b[c]) + (p - 2.0) * b[a].dot(ghat) * b[c].dot(ghat));
                    if a == c {
                        hess.add(ids[a] as usize, ids[a] as usize, v);
                    } else {
                        hess.add(ids[a] as usize, ids[c] as usize, v);
                    }
                }
            }
        }
        let mut msup = 0.0f64;
        for k in 0..n {
            let gm = self.mass[k] * p * (u[k].abs() / umax).powf(p - 1.0) / (umax * ms);
            grad[k] -= gm;
            msup = msup.max(gm.abs());
        }
        Ok(Linearization {
            grad,
            mass_grad_sup: msup,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::rasterize;
    use crate::geometry::Polygon;

    #[test]
    fn basis_gradients_of_reference_triangle() {
        let g = basis_gradients([
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ]);
        assert_eq!(
            g,
            [
                Vec2::new(-1.0, -1.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0)
            ]
        );
    }

    #[test]
    fn weights_cover_the_domain() {
        let tri = Polygon::new("t", &[[0.0, 0.0], [1.0, 0.05], [0.4, 0.8]]).unwrap();
        let g = rasterize(&tri, 1.0 / 40.0).unwrap();
        let m = P1Mesh::new(&g);
        let tw: f64 = m.tri_weight.iter().sum();
        assert!(tw <= tri.area() + 1e-12 && tw > 0.97 * tri.area(), "{tw}");
        let mw: f64 = m.mass.iter().sum();
        assert!(mw <= tri.area() + 1e-12 && mw > 0.8 * tri.area());
    }

    #[test]
    fn band_is_short_axis() {
        let g = rasterize(&Polygon::rectangle(2.0, 1.0).unwrap(), 1.0 / 16.0).unwrap();
        let m = P1Mesh::new(&g);
        assert_eq!(m.bandwidth, 16);
    }
}
