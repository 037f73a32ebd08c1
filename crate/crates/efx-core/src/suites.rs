//! Built-in verification suites: seeded randomized batteries and pinned
//! fixtures for every bound and propagation result the toolkit checks.
//!
//! Each suite produces ordinary report entries, so `efx verify` output has
//! the same shape and determinism contract as a scenario run. Instance seeds
//! are derived from the base seed and recorded per entry.

use serde_json::json;

use crate::algebra::{
    check_intersection_uniqueness, check_intersection_validity, check_union_inheritance,
    gk_intersection, verify_decomposition,
};
use crate::bounds::{
    check_entropy_upper, check_fano_converse, check_fano_lower, check_mi_stability,
    exhaustive_best_decoder_error, map_decoder, BoundReport,
};
use crate::checkers::{
    check_consistency_propagation, check_explainability_propagation,
    check_gradient_ef_explainability, check_valid_implies_complete, CandidateFamily,
};
use crate::ef::{bind, BoundEf, EfSpec};
use crate::error::{EfxError, Result};
use crate::fixtures;
use crate::model::fd_jacobian;
use crate::prob::MASS_TOL;
use crate::report::{format_real, sha256_hex, AnalysisOutcome, AnalysisResult, Report};

pub const SUITE_NAMES: &[&str] = &[
    "lemmas",
    "thm1",
    "thm2",
    "thm3",
    "thm4",
    "thm5",
    "union",
    "uniqueness",
];

/// Runs one named suite (or `all`) and assembles the report.
pub fn run_suite(name: &str, seed: u64, enum_cap: u64) -> Result<Report> {
    let suites: Vec<&str> = match name {
        "all" => SUITE_NAMES.to_vec(),
        n if SUITE_NAMES.contains(&n) => vec![n],
        other => {
            return Err(EfxError::Scenario(format!(
                "unknown suite `{other}`; expected one of {SUITE_NAMES:?} or `all`"
            )))
        }
    };
    let mut results = Vec::new();
    for suite in suites {
        let entries = match suite {
            "lemmas" => lemmas_suite(seed)?,
            "thm1" => propagation_suite(seed, true)?,
            "thm2" => propagation_suite(seed, false)?,
            "thm3" => gradient_ef_suite()?,
            "thm4" => valid_complete_suite(enum_cap)?,
            "thm5" => intersection_validity_suite(enum_cap)?,
            "union" => union_suite(enum_cap)?,
            "uniqueness" => uniqueness_suite()?,
            _ => unreachable!(),
        };
        for (check, outcome, details) in entries {
            results.push(AnalysisResult {
                index: results.len(),
                analysis: format!("{suite}:{check}"),
                outcome,
                details,
            });
        }
    }
    let digest = format!(
        "sha256:{}",
        sha256_hex(format!("suite:{name}:seed={seed}").as_bytes())
    );
    Ok(Report::assemble(digest, Some(seed), results))
}

type Entry = (&'static str, AnalysisOutcome, serde_json::Value);

fn outcome(ok: bool) -> AnalysisOutcome {
    if ok {
        AnalysisOutcome::Pass
    } else {
        AnalysisOutcome::Fail
    }
}

fn bound_json(rep: &BoundReport, seed: Option<u64>) -> serde_json::Value {
    json!({
        "bound": rep.bound_name,
        "lhs": format_real(rep.lhs),
        "rhs": format_real(rep.rhs),
        "seed": seed,
    })
}

/// Derives a per-instance seed that keeps the batteries independent.
fn instance_seed(base: u64, battery: u64, index: u64) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(battery << 32)
        .wrapping_add(index)
}

fn lemmas_suite(seed: u64) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();

    // Fano lower bound over decodable random joints.
    let mut violations = 0usize;
    let mut worst: Option<(u64, BoundReport)> = None;
    for i in 0..100 {
        let s = instance_seed(seed, 1, i);
        let (x, y) = fixtures::noisy_channel_joint(s, 5);
        let decoder = map_decoder(&y, &x)?;
        let rep = check_fano_lower(&x, &y, &decoder)?;
        if !rep.satisfied {
            violations += 1;
        }
        let margin = rep.lhs - rep.rhs;
        if worst.as_ref().is_none_or(|(_, w)| margin < w.lhs - w.rhs) {
            worst = Some((s, rep));
        }
    }
    let (worst_seed, worst_rep) = worst.unwrap();
    entries.push((
        "fano_lower_random",
        outcome(violations == 0),
        json!({
            "instances": 100,
            "violations": violations,
            "tightest": bound_json(&worst_rep, Some(worst_seed)),
        }),
    ));

    // pinned equality case: perfect decoding of a fair bit
    let (x, y) = fixtures::joint_as_rvs(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
    let decoder = map_decoder(&y, &x)?;
    let rep = check_fano_lower(&x, &y, &decoder)?;
    let pinned_ok = rep.satisfied && (rep.lhs - rep.rhs).abs() <= 1e-9;
    entries.push((
        "fano_lower_equality_pin",
        outcome(pinned_ok),
        bound_json(&rep, None),
    ));

    // mutual information stability under binary swaps
    let mut violations = 0usize;
    for i in 0..100 {
        let s = instance_seed(seed, 2, i);
        let (x, y, z) = fixtures::random_binary_triple(s, 5);
        if !check_mi_stability(&x, &y, &z)?.satisfied {
            violations += 1;
        }
    }
    entries.push((
        "mi_stability_random",
        outcome(violations == 0),
        json!({ "instances": 100, "violations": violations }),
    ));

    // binary entropy upper bound on a fine grid, with the p = 1/2 equality
    let mut violations = 0usize;
    for k in 0..1000 {
        let p = k as f64 / 999.0;
        if !check_entropy_upper(p)?.satisfied {
            violations += 1;
        }
    }
    let rep = check_entropy_upper(0.5)?;
    let equality = (rep.lhs - 1.0).abs() <= 1e-9 && (rep.rhs - 1.0).abs() <= 1e-9;
    entries.push((
        "entropy_upper_grid",
        outcome(violations == 0 && equality),
        json!({
            "grid_points": 1000,
            "violations": violations,
            "equality_pin": bound_json(&rep, None),
        }),
    ));

    // converse decoding bound over fully random joints
    let mut violations = 0usize;
    for i in 0..100 {
        let s = instance_seed(seed, 3, i);
        let (x, y) = fixtures::random_joint(s, 5);
        let (_, rep) = check_fano_converse(&x, &y)?;
        if !rep.satisfied {
            violations += 1;
        }
    }
    entries.push((
        "fano_converse_random",
        outcome(violations == 0),
        json!({ "instances": 100, "violations": violations }),
    ));

    // pinned equality case: identical variables decode exactly
    let (x, y) = fixtures::joint_as_rvs(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
    let (decoder, rep) = check_fano_converse(&x, &y)?;
    let pinned_ok =
        rep.satisfied && decoder.error_rate.abs() <= MASS_TOL && rep.rhs.abs() <= 1e-9;
    entries.push((
        "fano_converse_equality_pin",
        outcome(pinned_ok),
        bound_json(&rep, None),
    ));

    // decoder optimality against exhaustive enumeration
    let mut beaten = 0usize;
    for i in 0..50 {
        let s = instance_seed(seed, 4, i);
        let (x, y) = fixtures::random_joint(s, 4);
        let map_err = map_decoder(&y, &x)?.error_rate;
        let best = exhaustive_best_decoder_error(&y, &x, 1 << 20)?;
        if map_err > best + MASS_TOL {
            beaten += 1;
        }
    }
    entries.push((
        "map_decoder_optimality",
        outcome(beaten == 0),
        json!({ "instances": 50, "beaten": beaten, "max_decoders": 256 }),
    ));

    Ok(entries)
}

fn propagation_suite(seed: u64, downstream: bool) -> Result<Vec<Entry>> {
    let battery = if downstream { 5 } else { 6 };
    let mut failures = 0usize;
    let mut checked = 0usize;
    for i in 0..20 {
        let s = instance_seed(seed, battery, i);
        let (model, space, ef_values) = fixtures::random_layered_model(s);
        let ef = BoundEf::from_values(ef_values)?;
        let depth = model.depth();
        for lower in 1..depth {
            for upper in lower + 1..=depth {
                let pass = if downstream {
                    check_consistency_propagation(&model, &ef, lower, upper, &space)?.pass
                } else {
                    check_explainability_propagation(&model, &ef, lower, upper, &space)?.pass
                };
                checked += 1;
                if !pass {
                    failures += 1;
                }
            }
        }
    }
    Ok(vec![(
        if downstream {
            "consistency_propagation_random"
        } else {
            "explainability_propagation_random"
        },
        outcome(failures == 0),
        json!({ "models": 20, "range_checks": checked, "violations": failures }),
    )])
}

fn gradient_ef_suite() -> Result<Vec<Entry>> {
    let mut entries = Vec::new();

    // shifted plane: constant labels, constant gradient, zero slope
    let (model, space) = fixtures::shifted_plane(20);
    let rep = check_gradient_ef_explainability(&model, &space, 1, 1.0)?;
    let affine_ok = rep.pass
        && rep.margin.min_pre_head_norm >= 2.0 - MASS_TOL
        && rep.stability_violations == 0
        && rep.slope == 0.0;
    entries.push((
        "shifted_plane",
        outcome(affine_ok),
        json!({
            "grid": "20x20",
            "min_pre_head_norm": format_real(rep.margin.min_pre_head_norm),
            "qualifying_pairs": rep.qualifying_pairs,
            "stability_violations": rep.stability_violations,
            "slope": format_real(rep.slope),
            "constant_bound": format_real(rep.constant_bound),
        }),
    ));

    // saturating variant: positive finite slope within the assembled bound
    let (model, space) = fixtures::shifted_plane_tanh(20);
    let rep = check_gradient_ef_explainability(&model, &space, 1, 0.5)?;
    let tanh_ok = rep.pass && rep.slope > 0.0 && rep.slope.is_finite();
    entries.push((
        "shifted_plane_tanh",
        outcome(tanh_ok),
        json!({
            "grid": "20x20",
            "stability_violations": rep.stability_violations,
            "slope": format_real(rep.slope),
            "constant_bound": format_real(rep.constant_bound),
        }),
    ));

    // gradient explanation against score finite differences at every point
    for (name, model, space) in [
        ("gradient_fd_shifted_plane", fixtures::shifted_plane(20).0, fixtures::shifted_plane(20).1),
        (
            "gradient_fd_shifted_plane_tanh",
            fixtures::shifted_plane_tanh(20).0,
            fixtures::shifted_plane_tanh(20).1,
        ),
    ] {
        let ef = bind(&EfSpec::Gradient, &model, &space)?;
        let head = model.head().unwrap();
        let mut worst_rel = 0.0f64;
        for (i, x) in space.points().iter().enumerate() {
            let label = model.label(x)?;
            let m = &head.class_vectors[label - 1];
            let score = |v: &nalgebra::DVector<f64>| {
                model.pre_head(v).map(|p| nalgebra::DVector::from_vec(vec![m.dot(&p)]))
            };
            let fd = fd_jacobian(score, x, 1)?;
            let fd_grad = fd.row(0).transpose();
            let rel = (ef.value(i) - &fd_grad).norm() / (1.0 + ef.value(i).norm());
            worst_rel = worst_rel.max(rel);
        }
        entries.push((
            name,
            outcome(worst_rel <= 1e-4),
            json!({
                "points": space.len(),
                "worst_relative_error": format_real(worst_rel),
            }),
        ));
    }

    Ok(entries)
}

fn valid_complete_suite(enum_cap: u64) -> Result<Vec<Entry>> {
    let fixture = fixtures::two_bits();
    let family = CandidateFamily::Enumerated { codomain_size: 2 };
    let rep = check_valid_implies_complete(&fixture.g, &fixture.h, 0.1, 0.01, &family, enum_cap)?;
    // independently evaluated square-root form for balanced labels
    let closed_form = (2.0f64 - 0.1 - 2.0 * 0.01f64.sqrt()).sqrt() - 1.0;
    let ok = rep.applicable
        && rep.pass
        && (rep.alpha_bound - closed_form).abs() <= 1e-9
        && (rep.alpha_hat - 0.5).abs() <= MASS_TOL;
    let mut entries = vec![(
        "two_bit_fixture",
        outcome(ok),
        json!({
            "epsilon": format_real(0.1),
            "epsilon0": format_real(0.01),
            "alpha_bound": format_real(rep.alpha_bound),
            "alpha_hat": format_real(rep.alpha_hat),
            "candidates": 16,
        }),
    )];

    // hypothesis failure: the budget eats the whole label entropy
    let rep = check_valid_implies_complete(&fixture.g, &fixture.h, 0.9, 0.01, &family, enum_cap)?;
    entries.push((
        "hypothesis_failure",
        if !rep.applicable {
            AnalysisOutcome::NotApplicable
        } else {
            AnalysisOutcome::Fail
        },
        json!({ "reason": rep.reason }),
    ));
    Ok(entries)
}

fn intersection_validity_suite(enum_cap: u64) -> Result<Vec<Entry>> {
    let fx = fixtures::xor_bits();
    let dec = gk_intersection(&fx.g1, &fx.g2)?;
    let check = verify_decomposition(&dec, &fx.g1, &fx.g2, 0.0)?;
    let rep = check_intersection_validity(
        &dec, &fx.g1, &fx.g2, &fx.h, 0.0, 0.01, 0.5, 2, enum_cap,
    )?;
    let oracle = 1.0 - (-0.01f64 - 2.0 * 0.01f64.sqrt() - 1.0).exp2() / 0.5;
    let ok = check.pass
        && check.achieved_epsilon == 0.0
        && rep.applicable
        && rep.pass
        && rep.u_decoder_loss == 0.0
        && (rep.epsilon1_bound - oracle).abs() <= 1e-12;
    Ok(vec![(
        "xor_bits_fixture",
        outcome(ok),
        json!({
            "achieved_epsilon": format_real(check.achieved_epsilon),
            "epsilon1_bound": format_real(rep.epsilon1_bound),
            "u_decoder_loss": format_real(rep.u_decoder_loss),
            "g2_alpha_hat": format_real(rep.g2_alpha_hat),
        }),
    )])
}

fn union_suite(enum_cap: u64) -> Result<Vec<Entry>> {
    let fx = fixtures::xor_bits();
    let dec = gk_intersection(&fx.g1, &fx.g2)?;
    let rep = check_union_inheritance(
        &dec, &fx.g1, &fx.g2, &fx.h, 0.01, 0.1, 0.5, 2, enum_cap,
    )?;
    let ok = rep.validity_applicable
        && rep.completeness_applicable
        && rep.pass
        && rep.union_validity == 0.0;
    Ok(vec![(
        "xor_bits_union",
        outcome(ok),
        json!({
            "g1_validity": format_real(rep.g1_validity),
            "union_validity": format_real(rep.union_validity),
            "g1_alpha_hat": format_real(rep.g1_alpha_hat),
            "union_alpha_hat": format_real(rep.union_alpha_hat),
            "candidates": 256,
        }),
    )])
}

fn uniqueness_suite() -> Result<Vec<Entry>> {
    let fx = fixtures::xor_bits();
    let dec_a = gk_intersection(&fx.g1, &fx.g2)?;
    let dec_b = dec_a.permute_u_symbols(&[1, 0])?;
    let rep = check_intersection_uniqueness(&dec_a, &dec_b, 0.0)?;
    let exact_ok = rep.pass && rep.exact_bijections == Some(true);
    let mut entries = vec![(
        "relabeled_shared_symbols",
        outcome(exact_ok),
        json!({
            "u_forward_error": format_real(rep.u_forward_error),
            "e1_forward_error": format_real(rep.e1_forward_error),
            "exact_bijections": rep.exact_bijections,
        }),
    )];

    // a unit budget: the translation bound degrades to one half
    let rep = check_intersection_uniqueness(&dec_a, &dec_b, 1.0)?;
    let bound_ok = rep.pass && (rep.bound - 0.5).abs() <= 1e-12 && rep.exact_bijections.is_none();
    entries.push((
        "unit_budget_bound",
        outcome(bound_ok),
        json!({
            "bound": format_real(rep.bound),
            "u_forward_error": format_real(rep.u_forward_error),
        }),
    ));
    Ok(entries)
}
