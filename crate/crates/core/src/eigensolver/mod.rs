//! p-ground states by Rayleigh-quotient minimization with continuation in
//! `p`, and the gradient bounds they satisfy.

mod banded;
mod checks;
mod mesh;

pub use banded::BandedSpd;
pub use checks::{
    gradient_bound_check, lower_gradient_check, superharmonicity_check, LowerGradientReport,
};

use crate::error::{Error, Result};
use crate::fields::{FieldLabel, GridSpec, ScalarField};
use crate::geometry::Polygon;
use mesh::P1Mesh;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::sync::Arc;

/// Continuation schedule and stopping rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    pub p_list: Vec<f64>,
    pub max_iter: usize,
    /// Stop when `log R` decreased by less than this over `window` steps.
    pub step_tol: f64,
    /// Stop when the relative Euler-Lagrange residual drops below this.
    pub grad_tol: f64,
    pub window: usize,
    /// Relative floor of the Hessian weights `|grad u|^{p-2}`.
    pub hessian_floor: f64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            p_list: vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            max_iter: 300,
            step_tol: 1e-13,
            grad_tol: 1e-9,
            window: 25,
            hessian_floor: 1e-12,
        }
    }
}

impl LadderConfig {
    pub fn with_p_list(p_list: Vec<f64>) -> Self {
        LadderConfig {
            p_list,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.p_list.first() {
            None => return Err(Error::InvalidLadder("empty p list".into())),
            Some(&p0) if p0 != 2.0 => {
                return Err(Error::InvalidLadder(format!(
                    "ladder must start at p = 2, got {p0}"
                )))
            }
            _ => {}
        }
        if self.p_list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidLadder(
                "p list must be strictly increasing".into(),
            ));
        }
        if self.p_list.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidLadder("p values must be finite".into()));
        }
        if self.max_iter == 0 || self.window == 0 {
            return Err(Error::InvalidLadder(
                "iteration limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One line of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub p: f64,
    pub iter: usize,
    pub lambda_p: f64,
    pub lambda_root: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub p: f64,
    /// Sup-normalized minimizer, label `u_p`.
    pub field: ScalarField,
    pub lambda_p: f64,
    pub iterations: usize,
    /// Relative Euler-Lagrange residual `|∇E - λ ∇M|∞ / |λ ∇M|∞`.
    pub residual: f64,
    /// Iteration budget ran out before a stopping rule fired.
    pub max_iter_exceeded: bool,
    pub history: Vec<ConvergenceRecord>,
}

impl GroundState {
    /// `λ_p^{1/p}`.
    pub fn lambda_root(&self) -> f64 {
        self.lambda_p.powf(1.0 / self.p)
    }

    /// `v_p = log u_p`.
    pub fn log_field(&self) -> ScalarField {
        self.field.log_field(FieldLabel::Vp)
    }
}

/// Result of a continuation run: the solved rungs in order and the rungs
/// that failed (the ladder continues past them).
#[derive(Debug, Clone)]
pub struct LadderRun {
    pub states: Vec<GroundState>,
    pub failed: Vec<(f64, String)>,
}

impl LadderRun {
    pub fn top(&self) -> Option<&GroundState> {
        self.states.last()
    }

    pub fn at(&self, p: f64) -> Option<&GroundState> {
        self.states.iter().find(|s| s.p == p)
    }
}

/// Distance function `dist(x, ∂Ω)`, sup-normalized: the initial guess.
pub fn distance_init(grid: Arc<GridSpec>) -> ScalarField {
    let r = grid
        .interior_nodes()
        .map(|k| grid.boundary_distance_at(k))
        .fold(0.0f64, f64::max);
    let g2 = grid.clone();
    let vals = (0..grid.len())
        .map(|k| {
            if g2.is_inside(k) {
                g2.boundary_distance_at(k) / r
            } else {
                f64::NAN
            }
        })
        .collect();
    ScalarField::unchecked(grid, vals, 0.0, FieldLabel::Up)
}

/// Discrete Rayleigh quotient `∫|∇u|^p / ∫|u|^p` of a field vanishing on the
/// boundary.
pub fn rayleigh_quotient(field: &ScalarField, p: f64) -> Result<f64> {
    let mesh = P1Mesh::new(field.grid());
    let u = mesh.gather(field);
    Ok(mesh.log_quotient(&u, p)?.exp())
}

/// Minimize the Rayleigh quotient for exponent `p` starting from `init`.
///
/// Each step solves with the Hessian of `log E` (weights floored) and tries
/// the steps `(p - 1) 2^{-k}`, keeping the best one only if the quotient
/// decreases; the iterate is renormalized to `max u = 1` every step. For
/// `p = 2` the full step is one step of inverse iteration.
pub fn minimize_ground_state(
    polygon: &Polygon,
    p: f64,
    init: &ScalarField,
    cfg: &LadderConfig,
) -> Result<GroundState> {
    if init.grid().polygon() != polygon {
        return Err(Error::GridMismatch);
    }
    let mesh = P1Mesh::new(init.grid());
    minimize_on_mesh(&mesh, init.grid_arc().clone(), p, mesh.gather(init), cfg)
}

fn minimize_on_mesh(
    mesh: &P1Mesh,
    grid: Arc<GridSpec>,
    p: f64,
    mut u: Vec<f64>,
    cfg: &LadderConfig,
) -> Result<GroundState> {
    if !(p >= 2.0) {
        return Err(Error::InvalidLadder(format!(
            "exponent must be at least 2, got {p}"
        )));
    }
    if u.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidField(
            "initial guess must be positive inside".into(),
        ));
    }
    normalize(&mut u);
    let n = mesh.len();
    let mut hess = BandedSpd::zeros(n, mesh.bandwidth);
    let mut best = mesh.log_quotient(&u, p)?;
    let mut trail = vec![best];
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut exceeded = true;
    let mut trial = vec![0.0; n];
    for it in 1..=cfg.max_iter {
        iterations = it;
        let lin = mesh.linearize(&u, p, cfg.hessian_floor, &mut hess)?;
        residual = lin.grad.iter().fold(0.0f64, |a, g| a.max(g.abs())) / lin.mass_grad_sup;
        if !residual.is_finite() {
            return Err(Error::NonFiniteEncountered(it));
        }
        if residual < cfg.grad_tol {
            exceeded = false;
            break;
        }
        hess.factor()?;
        let mut d: Vec<f64> = lin.grad.iter().map(|g| -g).collect();
        hess.solve(&mut d);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEncountered(it));
        }
        let mut cand: Option<(f64, Vec<f64>)> = None;
        for k in 0..13 {
            let t = (p - 1.0) * 0.5f64.powi(k);
            for ((x, &a), &b) in trial.iter_mut().zip(&u).zip(&d) {
                *x = a + t * b;
            }
            if trial.iter().any(|v| !(*v > 0.0)) {
                continue;
            }
            normalize(&mut trial);
            let q = match mesh.log_quotient(&trial, p) {
                Ok(q) if q.is_finite() => q,
                _ => continue,
            };
            if cand.as_ref().is_none_or(|c| q < c.0) {
                cand = Some((q, trial.clone()));
            }
        }
        match cand {
            Some((q, next)) if q < best => {
                best = q;
                u = next;
            }
            _ => {
                // no decreasing step left at working precision
                exceeded = false;
                break;
            }
        }
        trail.push(best);
        history.push(ConvergenceRecord {
            p,
            iter: it,
            lambda_p: best.exp(),
            lambda_root: (best / p).exp(),
            residual,
        });
        if trail.len() > cfg.window {
            let old = trail[trail.len() - 1 - cfg.window];
            if old - best < cfg.step_tol {
                exceeded = false;
                break;
            }
        }
    }
    let values = mesh.scatter(&u, grid.len());
    let field = ScalarField::new(grid, values, 0.0, FieldLabel::Up)?;
    history.push(ConvergenceRecord {
        p,
        iter: iterations,
        lambda_p: best.exp(),
        lambda_root: (best / p).exp(),
        residual,
    });
    Ok(GroundState {
        p,
        field,
        lambda_p: best.exp(),
        iterations,
        residual,
        max_iter_exceeded: exceeded,
        history,
    })
}

fn normalize(u: &mut [f64]) {
    let m = u.iter().fold(0.0f64, |a, &b| a.max(b));
    u.iter_mut().for_each(|v| *v /= m);
}

/// Solve every rung of the ladder in order, warm-starting from the previous
/// minimizer (the distance function for the first rung).
pub fn continuation_solve(
    polygon: &Polygon,
    grid: Arc<GridSpec>,
    ladder: &LadderConfig,
) -> Result<LadderRun> {
    ladder.validate()?;
    if grid.polygon() != polygon {
        return Err(Error::GridMismatch);
    }
    let mesh = P1Mesh::new(&grid);
    let mut u = mesh.gather(&distance_init(grid.clone()));
    let mut run = LadderRun {
        states: Vec::new(),
        failed: Vec::new(),
    };
    for &p in &ladder.p_list {
        match minimize_on_mesh(&mesh, grid.clone(), p, u.clone(), ladder) {
            Ok(state) => {
                u = mesh.gather(&state.field);
                run.states.push(state);
            }
            Err(e) => run.failed.push((p, e.to_string())),
        }
    }
    Ok(run)
}

/// Convergence log as CSV: `p,iter,lambda_p,lambda_p_root,residual`.
pub fn convergence_csv(states: &[GroundState]) -> String {
    let mut s = String::from("p,iter,lambda_p,lambda_p_root,residual\n");
    for st in states {
        for r in &st.history {
            let _ = writeln!(
                s,
                "{},{},{:.12e},{:.12e},{:.6e}",
                r.p, r.iter, r.lambda_p, r.lambda_root, r.residual
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::rasterize;
    use std::f64::consts::PI;

    fn grid(poly: &Polygon, h: f64) -> Arc<GridSpec> {
        Arc::new(rasterize(poly, h).unwrap())
    }

    #[test]
    fn quotient_of_the_first_mode() {
        let g = grid(&Polygon::unit_square(), 1.0 / 128.0);
        let f = ScalarField::from_fn(g.clone(), FieldLabel::Up, 0.0, |x| {
            (PI * x.x).sin() * (PI * x.y).sin()
        });
        let q = rayleigh_quotient(&f, 2.0).unwrap();
        assert!((q / (2.0 * PI * PI) - 1.0).abs() < 0.01, "{q}");
        // P1 energy of the interpolant: discrete value just below 2π²
        assert!((q / (2.0 * PI * PI) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let g = grid(&Polygon::unit_square(), 1.0 / 32.0);
        let f = ScalarField::from_fn(g.clone(), FieldLabel::Up, 0.0, |x| {
            x.x * (1.0 - x.x) * x.y * x.y.sin()
        });
        for p in [2.0, 7.5, 64.0] {
            let a = rayleigh_quotient(&f, p).unwrap();
            let vals: Vec<f64> = f.values().iter().map(|v| v * 3.7e-3).collect();
            let b = rayleigh_quotient(
                &ScalarField::unchecked(g.clone(), vals, 0.0, FieldLabel::Up),
                p,
            )
            .unwrap();
            assert!((a / b - 1.0).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn rayleigh_principle_for_a_polynomial() {
        // continuous value of x(1-x)y(1-y) is 20
        let g = grid(&Polygon::unit_square(), 1.0 / 64.0);
        let f = ScalarField::from_fn(g, FieldLabel::Up, 0.0, |x| {
            x.x * (1.0 - x.x) * x.y * (1.0 - x.y)
        });
        let q = rayleigh_quotient(&f, 2.0).unwrap();
        assert!(q >= 2.0 * PI * PI && (q - 20.0).abs() < 0.1, "{q}");
    }

    #[test]
    fn zero_field_has_no_quotient() {
        let g = grid(&Polygon::unit_square(), 0.125);
        let f = ScalarField::from_fn(g, FieldLabel::Up, 0.0, |_| 0.0);
        assert_eq!(rayleigh_quotient(&f, 2.0), Err(Error::ZeroDenominator));
    }

    #[test]
    fn p2_square_matches_five_point_eigenvalue() {
        let h = 1.0 / 32.0;
        let poly = Polygon::unit_square();
        let g = grid(&poly, h);
        let st =
            minimize_ground_state(&poly, 2.0, &distance_init(g), &LadderConfig::default()).unwrap();
        // five-point Laplacian with unit lumped mass: (8/h²) sin²(πh/2)
        let exact = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!(
            (st.lambda_p / exact - 1.0).abs() < 1e-9,
            "{} {}",
            st.lambda_p,
            exact
        );
        assert!(!st.max_iter_exceeded);
        assert!((st.field.sup() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn accepted_steps_never_increase() {
        let poly = Polygon::unit_square();
        let g = grid(&poly, 1.0 / 24.0);
        let run =
            continuation_solve(&poly, g, &LadderConfig::with_p_list(vec![2.0, 6.0, 12.0])).unwrap();
        for st in &run.states {
            for w in st.history.windows(2) {
                assert!(w[1].lambda_p <= w[0].lambda_p);
            }
        }
        assert!(run.failed.is_empty());
    }

    #[test]
    fn single_rung_ladder_is_plain_minimization() {
        let poly = Polygon::rectangle(2.0, 1.0).unwrap();
        let g = grid(&poly, 1.0 / 16.0);
        let cfg = LadderConfig::with_p_list(vec![2.0]);
        let run = continuation_solve(&poly, g.clone(), &cfg).unwrap();
        let direct = minimize_ground_state(&poly, 2.0, &distance_init(g), &cfg).unwrap();
        assert_eq!(run.states.len(), 1);
        assert_eq!(run.states[0].lambda_p, direct.lambda_p);
        assert_eq!(
            run.states[0].field.values().len(),
            direct.field.values().len()
        );
    }

    #[test]
    fn ladder_validation() {
        assert!(LadderConfig::with_p_list(vec![]).validate().is_err());
        assert!(LadderConfig::with_p_list(vec![4.0, 8.0])
            .validate()
            .is_err());
        assert!(LadderConfig::with_p_list(vec![2.0, 8.0, 8.0])
            .validate()
            .is_err());
        assert!(LadderConfig::default().validate().is_ok());
    }

    #[test]
    fn csv_log_has_header_and_rows() {
        let poly = Polygon::unit_square();
        let g = grid(&poly, 0.125);
        let run = continuation_solve(&poly, g, &LadderConfig::with_p_list(vec![2.0, 4.0])).unwrap();
        let csv = convergence_csv(&run.states);
        assert!(csv.starts_with("p,iter,lambda_p,lambda_p_root,residual\n"));
        assert!(csv.lines().count() > 2);
    }
}
