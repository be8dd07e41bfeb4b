use super::*;
use crate::fields::{rasterize, AnalyticField, FieldLabel, GridSpec, ScalarField};
use crate::geometry::{chebyshev_set, HighRidge, Polygon};
use crate::streamlines::{trace, Seed, StreamClass, Streamline, Termination, TraceConfig};
use crate::vec2::{polyline_length, Vec2};
use std::sync::Arc;

const H: f64 = 1.0 / 64.0;

fn setup() -> (Polygon, HighRidge, Arc<GridSpec>) {
    let p = Polygon::unit_square();
    let r = chebyshev_set(&p);
    let g = Arc::new(rasterize(&p, H).unwrap());
    (p, r, g)
}

fn pyramid(g: Arc<GridSpec>) -> ScalarField {
    ScalarField::from_fn(g, FieldLabel::U, 0.0, |x| {
        2.0 * x.x.min(x.y).min(1.0 - x.x).min(1.0 - x.y)
    })
}

fn line(points: Vec<Vec2>) -> Streamline {
    let n = points.len();
    let mut params = vec![0.0];
    for w in points.windows(2) {
        params.push(params[params.len() - 1] + w[0].dist(w[1]));
    }
    Streamline {
        arc_length: polyline_length(&points),
        points,
        params,
        speeds: vec![1.0; n],
        values: (0..n).map(|i| i as f64).collect(),
        field_label: FieldLabel::U,
        seed: Seed::Interior,
        class: StreamClass::Generic,
        termination: Termination::ReachedRidge,
    }
}

fn segment(a: Vec2, b: Vec2, n: usize) -> Vec<Vec2> {
    (0..=n).map(|i| a.lerp(b, i as f64 / n as f64)).collect()
}

/// The four corner-to-center segments.
fn diagonals(p: &Polygon) -> Vec<Streamline> {
    let c = Vec2::new(0.5, 0.5);
    p.vertices()
        .iter()
        .map(|&v| line(segment(v, c, 64)))
        .collect()
}

fn diagonal_ids(g: &GridSpec) -> Vec<usize> {
    (0..g.len())
        .filter(|&k| {
            let x = g.node_at(k);
            x.x > 0.1 && x.x < 0.45 && (x.x - x.y).abs() < 0.5 * H
        })
        .collect()
}

fn id_near(g: &GridSpec, x: Vec2) -> usize {
    (0..g.len())
        .min_by(|&a, &b| g.node_at(a).dist(x).total_cmp(&g.node_at(b).dist(x)))
        .unwrap()
}

#[test]
fn theorem1_accepts_diagonal_contact() {
    let (p, r, g) = setup();
    let ids = diagonal_ids(&g);
    assert!(!ids.is_empty());
    let c = ContactEstimate::from_nodes(&g, 2.0, 0.05, &ids);
    let rep = theorem1_check(&c, &diagonals(&p), &r);
    assert!(rep.pass, "{rep:?}");
    assert!(rep.distance < H);
    assert_eq!(rep.nodes, ids.len());
}

#[test]
fn theorem1_rejects_a_far_node() {
    let (p, r, g) = setup();
    let mut ids = diagonal_ids(&g);
    ids.push(id_near(&g, Vec2::new(0.5, 0.15)));
    let c = ContactEstimate::from_nodes(&g, 2.0, 0.05, &ids);
    let rep = theorem1_check(&c, &diagonals(&p), &r);
    assert!(!rep.pass);
    assert!((rep.distance - 0.35 / 2f64.sqrt()).abs() < H);
    let [x, y] = rep.worst_at.unwrap();
    assert!((x - 0.5).abs() < H && (y - 0.15).abs() < H);
}

#[test]
fn empty_contact_is_confined() {
    let (p, r, g) = setup();
    let c = ContactEstimate::from_nodes(&g, 2.0, 0.05, &[]);
    assert!(theorem1_check(&c, &diagonals(&p), &r).pass);
}

#[test]
fn sweep_is_vacuous_on_the_structure() {
    let (p, r, g) = setup();
    let c = ContactEstimate::from_nodes(&g, 2.0, 0.05, &diagonal_ids(&g));
    let rep = level_arc_sweep_check(&pyramid(g), &c, &diagonals(&p), &r);
    assert!(rep.vacuous && rep.pass);
}

#[test]
fn sweep_flags_an_isolated_node() {
    let (p, r, g) = setup();
    let mut ids = diagonal_ids(&g);
    ids.push(id_near(&g, Vec2::new(0.5, 0.25)));
    let c = ContactEstimate::from_nodes(&g, 2.0, 0.05, &ids);
    let rep = level_arc_sweep_check(&pyramid(g), &c, &diagonals(&p), &r);
    assert_eq!(rep.off_nodes, 1);
    assert!(rep.violations > 0);
    assert!(!rep.pass);
}

#[test]
fn capture_along_and_away_from_the_contact() {
    let (_, _, g) = setup();
    let c = ContactEstimate::from_nodes(&g, 2.0, 0.05, &diagonal_ids(&g));
    let along = line(segment(Vec2::new(0.15, 0.15), Vec2::new(0.4, 0.4), 40));
    let rep = capture_check(std::slice::from_ref(&along), &c);
    assert_eq!(rep.entered, 1);
    assert!(rep.pass, "{rep:?}");
    let mut leave = segment(Vec2::new(0.2, 0.05), Vec2::new(0.2, 0.2), 20);
    leave.extend(segment(Vec2::new(0.2, 0.2), Vec2::new(0.2, 0.4), 20));
    let rep = capture_check(&[along, line(leave)], &c);
    assert!(!rep.pass);
    assert_eq!(rep.worst_trace, Some(1));
    let never = line(segment(Vec2::new(0.9, 0.1), Vec2::new(0.9, 0.3), 10));
    assert_eq!(capture_check(&[never], &c).entered, 0);
}

fn sfield(g: Arc<GridSpec>, t: impl Fn(usize) -> f64) -> SField {
    let values: Vec<Option<f64>> = (0..g.len()).map(|k| Some(2.0 * (1.0 + t(k)))).collect();
    SField {
        examined: values.len(),
        grid: g,
        values,
        lambda_inf: 2.0,
        level_floor: 0.0,
        distance_floor: 0.0,
        irregular: 0,
    }
}

#[test]
fn area_trend_shrinks_with_epsilon() {
    let (_, _, g) = setup();
    let f = sfield(g, |k| 0.2 * ((k * 7919) % 101) as f64 / 100.0);
    let rep = area_zero_trend(&[&f], &[0.05, 0.1, 0.025, 1.0]);
    assert!(rep.pass && rep.monotone_in_epsilon);
    let eps: Vec<f64> = rep.rows.iter().map(|r| r.epsilon).collect();
    assert_eq!(eps, vec![1.0, 0.1, 0.05, 0.025]);
    assert_eq!(rep.saturated, vec![1.0]);
    assert!(area_csv(&rep).lines().count() == 5);
}

#[test]
fn area_trend_fails_when_refinement_grows_the_set() {
    let p = Polygon::unit_square();
    let coarse = sfield(Arc::new(rasterize(&p, 1.0 / 16.0).unwrap()), |_| 0.5);
    let fine = sfield(Arc::new(rasterize(&p, 1.0 / 32.0).unwrap()), |_| 0.0);
    let rep = area_zero_trend(&[&fine, &coarse], &[0.1]);
    assert!(rep.monotone_in_epsilon);
    assert!(!rep.monotone_in_h);
    assert!(!rep.pass);
    assert_eq!(rep.rows[0].h, 1.0 / 16.0);
}

fn square_quad() -> Vec<Vec2> {
    vec![
        Vec2::new(0.2, 0.1),
        Vec2::new(0.4, 0.1),
        Vec2::new(0.4, 0.3),
        Vec2::new(0.2, 0.3),
    ]
}

#[test]
fn gauss_flux_of_an_affine_field_vanishes() {
    let p = Polygon::unit_square();
    let f = AnalyticField::new(p, |x: Vec2| 3.0 * x.x - x.y, |_| Vec2::new(3.0, -1.0));
    for m in [2.0, 4.0, 8.0] {
        let v = gauss_integral(&f, &square_quad(), m, H).unwrap();
        assert!(v.abs() < 1e-9 * 10f64.powf(m), "{m}: {v}");
    }
}

#[test]
fn gauss_flux_of_a_paraboloid_is_four_times_the_area() {
    let p = Polygon::unit_square();
    let f = AnalyticField::new(p, |x: Vec2| x.x * x.x + x.y * x.y, |x: Vec2| 2.0 * x);
    let mut q = square_quad();
    let v = gauss_integral(&f, &q, 2.0, H).unwrap();
    assert!((v - 4.0 * 0.04).abs() < 1e-12, "{v}");
    q.reverse();
    assert!((gauss_integral(&f, &q, 2.0, H).unwrap() - v).abs() < 1e-12);
}

#[test]
fn clearance_rejects_quads_near_contact_or_ridge() {
    let (p, r, g) = setup();
    let c = ContactEstimate::from_nodes(&g, 2.0, 0.05, &diagonal_ids(&g));
    let off = vec![
        Vec2::new(0.6, 0.1),
        Vec2::new(0.9, 0.1),
        Vec2::new(0.9, 0.3),
        Vec2::new(0.7, 0.3),
    ];
    assert!(check_clearance(&off, &p, &c, &r, 4.0 * H).is_ok());
    let over = vec![
        Vec2::new(0.1, 0.25),
        Vec2::new(0.3, 0.25),
        Vec2::new(0.3, 0.35),
        Vec2::new(0.1, 0.35),
    ];
    assert!(matches!(
        check_clearance(&over, &p, &c, &r, 4.0 * H),
        Err(crate::error::Error::ClearanceViolated(_))
    ));
    let center = vec![
        Vec2::new(0.4, 0.6),
        Vec2::new(0.6, 0.6),
        Vec2::new(0.6, 0.8),
        Vec2::new(0.4, 0.8),
    ];
    let empty = ContactEstimate::from_nodes(&g, 2.0, 0.05, &[]);
    assert!(check_clearance(&center, &p, &empty, &r, 4.0 * H).is_ok());
    let around = vec![
        Vec2::new(0.4, 0.4),
        Vec2::new(0.6, 0.4),
        Vec2::new(0.6, 0.6),
        Vec2::new(0.4, 0.6),
    ];
    assert!(check_clearance(&around, &p, &empty, &r, 4.0 * H).is_err());
    let edge = vec![
        Vec2::new(0.6, 0.005),
        Vec2::new(0.9, 0.005),
        Vec2::new(0.9, 0.3),
    ];
    assert!(check_clearance(&edge, &p, &empty, &r, 4.0 * H).is_err());
}

#[test]
fn random_quads_are_admissible_and_seeded() {
    let (p, r, g) = setup();
    let c = ContactEstimate::from_nodes(&g, 2.0, 0.05, &diagonal_ids(&g));
    let a = random_quads(&p, &c, &r, 5, 3);
    assert_eq!(a.len(), 5);
    for q in &a {
        assert!(check_clearance(q, &p, &c, &r, 4.0 * H).is_ok());
    }
    assert_eq!(a, random_quads(&p, &c, &r, 5, 3));
}

fn cfg() -> TraceConfig {
    TraceConfig::for_grid(H, 2.0)
}

#[test]
fn quadrilateral_rule_on_the_pyramid() {
    let (_, r, g) = setup();
    let u = pyramid(g);
    let a = trace(&u, &r, Vec2::new(0.3, 0.05), &cfg()).unwrap();
    let b = trace(&u, &r, Vec2::new(0.45, 0.05), &cfg()).unwrap();
    let rep = quadrilateral_rule_check(&u, &r, &a, &b, 0.2, Some(0.4), &cfg(), 0.05).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(!rep.triangular);
    assert!((rep.lower_arc_length - 0.15).abs() < H);
    assert_eq!(rep.interior_joins, 0);
}

#[test]
fn growing_gradient_breaks_dominance() {
    let (_, r, g) = setup();
    let u = ScalarField::from_fn(g, FieldLabel::U, 0.0, |x| x.y * x.y);
    let a = trace(&u, &r, Vec2::new(0.3, 0.05), &cfg()).unwrap();
    let b = trace(&u, &r, Vec2::new(0.45, 0.05), &cfg()).unwrap();
    let rep = quadrilateral_rule_check(&u, &r, &a, &b, 0.04, Some(0.16), &cfg(), 0.05).unwrap();
    assert!(!rep.dominated);
    assert!(!rep.pass);
    assert!((rep.upper_max / rep.lower_max - 2.0).abs() < 0.1, "{rep:?}");
}

#[test]
fn inverted_levels_cannot_form_a_quad() {
    let (_, r, g) = setup();
    let u = pyramid(g);
    let a = trace(&u, &r, Vec2::new(0.3, 0.05), &cfg()).unwrap();
    let b = trace(&u, &r, Vec2::new(0.45, 0.05), &cfg()).unwrap();
    let e = quadrilateral_rule_check(&u, &r, &a, &b, 0.4, Some(0.2), &cfg(), 0.05);
    assert!(matches!(
        e,
        Err(crate::error::Error::QuadConstructionFailed(_))
    ));
    let e = quadrilateral_rule_check(&u, &r, &a, &b, 0.2, Some(1.5), &cfg(), 0.05);
    assert!(matches!(
        e,
        Err(crate::error::Error::QuadConstructionFailed(_))
    ));
}

#[test]
fn triangular_quad_on_a_cone() {
    let (_, r, g) = setup();
    let c = Vec2::new(0.5, 0.5);
    let u = ScalarField::from_fn(g, FieldLabel::U, 0.0, move |x| 1.0 - 2.0 * x.dist(c));
    let a = trace(&u, &r, Vec2::new(0.35, 0.1), &cfg()).unwrap();
    let b = trace(&u, &r, Vec2::new(0.65, 0.1), &cfg()).unwrap();
    let rep = quadrilateral_rule_check(&u, &r, &a, &b, 0.3, None, &cfg(), 0.05).unwrap();
    assert!(rep.triangular);
    assert!(rep.upper > 0.3 && rep.upper < 1.0);
    assert!(rep.dominated, "{rep:?}");
}

fn result(v: Verdict) -> CheckResult {
    CheckResult::new(1.0, 2.0, v, serde_json::json!(null))
}

fn all(v: Verdict) -> Vec<(String, CheckResult)> {
    CRITERIA
        .iter()
        .map(|k| (k.to_string(), result(v)))
        .collect()
}

#[test]
fn report_exit_codes() {
    let rep = assemble_report(serde_json::json!({}), all(Verdict::Pass));
    assert_eq!(rep.exit_code(), 0);
    assert!(rep.failures().is_empty());
    let mut one = all(Verdict::Pass);
    one[4].1 = result(Verdict::Fail);
    let rep = assemble_report(serde_json::json!({}), one);
    assert_eq!(rep.exit_code(), 1);
    assert_eq!(rep.failures(), vec!["log_concavity"]);
    let mut info = all(Verdict::Pass);
    info.push(("stability".into(), result(Verdict::Info)));
    assert_eq!(assemble_report(serde_json::json!({}), info).exit_code(), 0);
}

#[test]
fn missing_keys_fail_and_duplicates_merge() {
    let rep = assemble_report(serde_json::json!({}), vec![]);
    assert_eq!(rep.checks.len(), CRITERIA.len());
    assert_eq!(rep.failures().len(), CRITERIA.len());
    let mut v = all(Verdict::Pass);
    v.push((
        "arc_length".into(),
        CheckResult::new(9.0, 5.0, Verdict::Fail, serde_json::json!("b")),
    ));
    let rep = assemble_report(serde_json::json!({}), v);
    let c = &rep.checks["arc_length"];
    assert_eq!(c.verdict, Verdict::Fail);
    assert_eq!((c.value, c.threshold), (9.0, 5.0));
    assert!(c.detail.is_array());
    assert_eq!(rep.checks.len(), CRITERIA.len());
}
