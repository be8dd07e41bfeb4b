//! Contact set estimate, confinement to the attracting streamlines, flux
//! and quadrilateral checks, and the verification report.

mod confinement;
mod contact;
mod counterpart;
mod gauss;
mod quadrilateral;
mod sweep;

pub use confinement::{
    area_csv, area_zero_trend, capture_check, corner_segment_deviation, distance_to_structure,
    theorem1_check, AreaRow, AreaTrendReport, CaptureReport, ConfinementReport,
};
pub use contact::{
    boundary_level, contact_estimate, s_field, ContactEstimate, SField, S_DISTANCE_CELLS,
};
pub use counterpart::{
    potential_counterpart_suite, CounterpartMedian, CounterpartReport, COUNTERPART_LEVELS,
};
pub use gauss::{check_clearance, gauss_check, gauss_integral, random_quads, GaussReport};
pub use quadrilateral::{
    level_arc, level_crossing, quadrilateral_rule_check, QuadReport, APEX_CELLS,
};
pub use sweep::{level_arc_sweep_check, SweepReport};

use crate::report::{CheckResult, Verdict, VerificationReport};

/// Report keys, one per acceptance criterion, in criterion order.
pub const CRITERIA: [&str; 16] = [
    "eigenvalue_oracle",
    "lambda_inf_limit",
    "gradient_upper_bound",
    "gradient_lower_bound",
    "log_concavity",
    "sandwich",
    "theorem1_contact_confinement",
    "median_straightness",
    "arc_length",
    "speed_laws",
    "contact_capture",
    "gauss_flux",
    "quadrilateral_rule",
    "area_zero_trend",
    "potential_counterpart",
    "figure_reproduction",
];

/// Build the report from named results. Every criterion key ends up present
/// exactly once: repeated names keep the worse verdict and collect their
/// details, and keys nobody evaluated are recorded as failures.
pub fn assemble_report(
    provenance: serde_json::Value,
    results: Vec<(String, CheckResult)>,
) -> VerificationReport {
    let mut report = VerificationReport::new(provenance);
    for (name, r) in results {
        let merged = match report.checks.remove(&name) {
            None => r,
            Some(prev) => {
                let verdict = prev.verdict.and(r.verdict);
                let keep_new = r.verdict == verdict && prev.verdict != verdict;
                let detail = serde_json::json!([prev.detail, r.detail]);
                let (value, threshold) = if keep_new {
                    (r.value, r.threshold)
                } else {
                    (prev.value, prev.threshold)
                };
                CheckResult::new(value, threshold, verdict, detail)
            }
        };
        report.insert(&name, merged);
    }
    for key in CRITERIA {
        if !report.checks.contains_key(key) {
            report.insert(
                key,
                CheckResult::new(0.0, 0.0, Verdict::Fail, serde_json::json!("not evaluated")),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests;
