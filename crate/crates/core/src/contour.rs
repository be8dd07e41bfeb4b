//! Marching-squares level curves and small polyline utilities.

use crate::fields::ScalarField;
use crate::vec2::{point_segment_distance, Vec2};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Vec2>,
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let mut l: f64 = self.points.windows(2).map(|w| w[0].dist(w[1])).sum();
        if self.closed && self.points.len() > 1 {
            l += self.points[self.points.len() - 1].dist(self.points[0]);
        }
        l
    }
}

/// Node values with ghosts at outside nodes next to the domain, extrapolated
/// linearly from inside neighbors through the boundary cut where the datum
/// holds. NaN where neither is available.
pub fn ghost_values(field: &ScalarField) -> Vec<f64> {
    let g = field.grid();
    let poly = g.polygon();
    let datum = field.boundary_value();
    let mut out = field.values().to_vec();
    for k in 0..g.len() {
        if g.is_inside(k) {
            continue;
        }
        let (i, j) = g.ij(k);
        let xb = g.node_at(k);
        let mut sum = 0.0;
        let mut cnt = 0.0;
        for (di, dj) in [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ] {
            let (ni, nj) = (i as isize + di, j as isize + dj);
            if !g.inside_ij(ni, nj) {
                continue;
            }
            let n = g.index(ni as usize, nj as usize);
            let xn = g.node_at(n);
            let d = xb - xn;
            let len = d.norm();
            let tau = (poly.ray_exit(xn, d / len) / len).clamp(1e-3, 1.0);
            let un = field.at(n);
            sum += un + (datum - un) / tau;
            cnt += 1.0;
        }
        if cnt > 0.0 {
            out[k] = sum / cnt;
        }
    }
    out
}

/// Level curves `{field = level}` by marching squares on the grid cells,
/// joined into polylines.
pub fn level_curves(field: &ScalarField, level: f64) -> Vec<Polyline> {
    let g = field.grid();
    let vals = ghost_values(field);
    let (nx, ny) = (g.nx(), g.ny());
    // edge ids: horizontal (i,j)-(i+1,j) -> 2k, vertical (i,j)-(i,j+1) -> 2k+1
    let mut point_of: HashMap<usize, Vec2> = HashMap::new();
    let mut segs: Vec<(usize, usize)> = Vec::new();
    let crossing = |ka: usize, kb: usize| -> Vec2 {
        let (a, b) = (vals[ka], vals[kb]);
        let t = ((level - a) / (b - a)).clamp(0.0, 1.0);
        g.node_at(ka).lerp(g.node_at(kb), t)
    };
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let k00 = g.index(i, j);
            let k10 = g.index(i + 1, j);
            let k01 = g.index(i, j + 1);
            let k11 = g.index(i + 1, j + 1);
            let c = [vals[k00], vals[k10], vals[k11], vals[k01]];
            if c.iter().any(|v| v.is_nan()) {
                continue;
            }
            let above: Vec<bool> = c.iter().map(|&v| v >= level).collect();
            let code = (above[0] as u8)
                | (above[1] as u8) << 1
                | (above[2] as u8) << 2
                | (above[3] as u8) << 3;
            if code == 0 || code == 15 {
                continue;
            }
            // edges in cyclic order: bottom, right, top, left
            let edges = [
                (2 * k00, k00, k10),
                (2 * k10 + 1, k10, k11),
                (2 * k01, k01, k11),
                (2 * k00 + 1, k00, k01),
            ];
            let cut: Vec<usize> = (0..4).filter(|&e| above[e] != above[(e + 1) % 4]).collect();
            for &e in &cut {
                let (id, a, b) = edges[e];
                point_of.entry(id).or_insert_with(|| crossing(a, b));
            }
            if cut.len() == 2 {
                segs.push((edges[cut[0]].0, edges[cut[1]].0));
            } else {
                // saddle: decide by the cell average
                let center_above = c.iter().sum::<f64>() / 4.0 >= level;
                let pair = |e1: usize, e2: usize| (edges[e1].0, edges[e2].0);
                if center_above == above[0] {
                    // corner 0's region connects through the center: cut
                    // off corners 1 and 3
                    segs.push(pair(0, 1));
                    segs.push(pair(2, 3));
                } else {
                    segs.push(pair(3, 0));
                    segs.push(pair(1, 2));
                }
            }
        }
    }
    join_segments(&segs, &point_of)
}

fn join_segments(segs: &[(usize, usize)], point_of: &HashMap<usize, Vec2>) -> Vec<Polyline> {
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segs.iter().enumerate() {
        adj.entry(a).or_default().push(s);
        adj.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    // start open chains at degree-one ends, then sweep the closed loops
    let mut starts: Vec<usize> = adj
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(&e, _)| e)
        .collect();
    starts.sort_unstable();
    let mut all: Vec<usize> = (0..segs.len()).collect();
    all.sort_unstable_by_key(|&s| segs[s].0.min(segs[s].1));
    let walk = |start_edge: usize, first_seg: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut chain = vec![start_edge];
        let mut cur_edge = start_edge;
        let mut seg = first_seg;
        loop {
            used[seg] = true;
            let (a, b) = segs[seg];
            let next_edge = if a == cur_edge { b } else { a };
            if next_edge == start_edge {
                return (chain, true);
            }
            chain.push(next_edge);
            cur_edge = next_edge;
            match adj[&cur_edge].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => return (chain, false),
            }
        }
    };
    for e in starts {
        if let Some(&s) = adj[&e].iter().find(|&&s| !used[s]) {
            let (chain, closed) = walk(e, s, &mut used);
            out.push(Polyline {
                points: chain.iter().map(|id| point_of[id]).collect(),
                closed,
            });
        }
    }
    for s in all {
        if used[s] {
            continue;
        }
        let (chain, closed) = walk(segs[s].0, s, &mut used);
        out.push(Polyline {
            points: chain.iter().map(|id| point_of[id]).collect(),
            closed,
        });
    }
    out
}

/// Resample a polyline at (about) uniform arc-length spacing.
pub fn resample(points: &[Vec2], spacing: f64, closed: bool) -> Vec<Vec2> {
    let mut pts = points.to_vec();
    if closed && !pts.is_empty() {
        pts.push(pts[0]);
    }
    let total: f64 = pts.windows(2).map(|w| w[0].dist(w[1])).sum();
    if pts.len() < 2 || total == 0.0 {
        return points.to_vec();
    }
    let n = ((total / spacing).round() as usize).max(if closed { 3 } else { 1 });
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut seg = 0;
    let mut acc = 0.0;
    let last = if closed { n } else { n + 1 };
    for m in 0..last {
        let s = m as f64 * step;
        while seg + 1 < pts.len() - 1 && acc + pts[seg].dist(pts[seg + 1]) < s {
            acc += pts[seg].dist(pts[seg + 1]);
            seg += 1;
        }
        let l = pts[seg].dist(pts[seg + 1]);
        let t = if l > 0.0 {
            ((s - acc) / l).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(pts[seg].lerp(pts[seg + 1], t));
    }
    out
}

/// Signed turning angles at the interior vertices (all vertices if closed).
pub fn turn_angles(points: &[Vec2], closed: bool) -> Vec<f64> {
    let n = points.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let range: Vec<usize> = if closed {
        (0..n).collect()
    } else {
        (1..n - 1).collect()
    };
    for i in range {
        let a = points[(i + n - 1) % n];
        let b = points[i];
        let c = points[(i + 1) % n];
        let (u, v) = (b - a, c - b);
        if u.norm() == 0.0 || v.norm() == 0.0 {
            continue;
        }
        out.push(u.cross(v).atan2(u.dot(v)));
    }
    out
}

/// Sign changes of the turning angle, ignoring turns smaller than
/// `threshold` radians (cyclically for closed curves).
pub fn curvature_sign_changes(points: &[Vec2], closed: bool, threshold: f64) -> usize {
    let signs: Vec<bool> = turn_angles(points, closed)
        .into_iter()
        .filter(|a| a.abs() >= threshold)
        .map(|a| a > 0.0)
        .collect();
    if signs.len() < 2 {
        return 0;
    }
    let mut n = signs.windows(2).filter(|w| w[0] != w[1]).count();
    if closed && signs[0] != signs[signs.len() - 1] {
        n += 1;
    }
    n
}

/// Convex hull (counterclockwise, monotone chain).
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut p: Vec<Vec2> = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<Vec2> = Vec::new();
    for &q in &p {
        while lower.len() >= 2
            && (lower[lower.len() - 1] - lower[lower.len() - 2]).cross(q - lower[lower.len() - 2])
                <= 0.0
        {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2
            && (upper[upper.len() - 1] - upper[upper.len() - 2]).cross(q - upper[upper.len() - 2])
                <= 0.0
        {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Largest distance from a point of the curve to the boundary of its convex
/// hull; zero for convex curves.
pub fn hull_defect(points: &[Vec2]) -> f64 {
    let hull = convex_hull(points);
    if hull.len() < 2 {
        return 0.0;
    }
    let n = hull.len();
    points
        .iter()
        .map(|&x| {
            (0..n)
                .map(|i| point_segment_distance(x, hull[i], hull[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
