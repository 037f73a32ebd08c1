//! Scenario execution: every requested analysis in declaration order, one
//! result entry each, assembled into a deterministic report.
//!
//! Input problems (parse or validation failures, enumeration cap breaches)
//! surface as errors so a caller can map them to exit code 2; a failed
//! assertion is an ordinary `Fail` result and maps to exit code 1.

use serde_json::json;

use crate::algebra::{
    check_intersection_uniqueness, check_intersection_validity, check_union_inheritance,
    gk_intersection, union_rv, verify_decomposition, Decomposition,
};
use crate::bounds::Decoder;
use crate::checkers::{
    check_consistency_propagation, check_explainability_propagation, check_gradient_ef_explainability,
    check_valid_implies_complete, completeness_level_rv, consistency_modulus, equivalence_report,
    explainability_modulus, label_rv, second_order_modulus, validity_level_rv, CandidateFamily,
    ModulusCurve,
};
use crate::error::{EfxError, Result};
use crate::prob::RandomVariable;
use crate::report::{
    curve_to_json, format_real, sha256_hex, table_to_json, AnalysisOutcome, AnalysisResult,
    Report,
};
use crate::scenario::{parse_scenario, validate, AnalysisSpec, ValidatedScenario};

/// Execution limits; the enumeration cap can be overridden through the
/// `EFX_ENUM_CAP` environment variable by the command line layer.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub enum_cap: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            enum_cap: 1_000_000,
        }
    }
}

/// Parses, validates, and executes a scenario file.
pub fn run_scenario(bytes: &[u8], config: &RunConfig) -> Result<Report> {
    let file = parse_scenario(bytes)?;
    let scenario = validate(&file)?;
    let digest = format!("sha256:{}", sha256_hex(bytes));
    let mut results = Vec::with_capacity(scenario.analyses.len());
    for (index, spec) in scenario.analyses.iter().enumerate() {
        let (outcome, details) = match execute(spec, &scenario, config) {
            Ok(pair) => pair,
            // a cap breach aborts the run as an input problem
            Err(e @ EfxError::Resource(_)) => return Err(e),
            Err(e) => (AnalysisOutcome::Fail, json!({ "error": e.to_string() })),
        };
        results.push(AnalysisResult {
            index,
            analysis: spec.name().to_string(),
            outcome,
            details,
        });
    }
    Ok(Report::assemble(digest, scenario.seed, results))
}

fn decoder_json(decoder: &Decoder) -> serde_json::Value {
    json!({
        "table": decoder.table,
        "error_rate": format_real(decoder.error_rate),
    })
}

fn pass_fail(ok: bool) -> AnalysisOutcome {
    if ok {
        AnalysisOutcome::Pass
    } else {
        AnalysisOutcome::Fail
    }
}

fn applicability(applicable: bool, pass: bool) -> AnalysisOutcome {
    if !applicable {
        AnalysisOutcome::NotApplicable
    } else {
        pass_fail(pass)
    }
}

fn curve_from_pairs(pairs: &[(crate::report::Real, crate::report::Real)]) -> Result<ModulusCurve> {
    ModulusCurve::from_breakpoints(pairs.iter().map(|&(k, v)| (k.0, v.0)).collect())
}

fn ef_rv(
    scenario: &ValidatedScenario,
    name: &str,
    resolution: f64,
) -> Result<RandomVariable> {
    scenario.efs[name].as_rv(&scenario.space, resolution)
}

fn execute(
    spec: &AnalysisSpec,
    scenario: &ValidatedScenario,
    config: &RunConfig,
) -> Result<(AnalysisOutcome, serde_json::Value)> {
    let model = &scenario.model;
    let space = &scenario.space;
    Ok(match spec {
        AnalysisSpec::JacobianCheck => {
            model.validate_jacobians(space)?;
            (
                AnalysisOutcome::Pass,
                json!({ "checked_points": space.len() }),
            )
        }
        AnalysisSpec::MarginCheck { delta } => {
            let rep = model.margin_check(space, delta.0)?;
            (
                pass_fail(rep.pass),
                json!({
                    "delta": format_real(rep.delta),
                    "min_pre_head_norm": format_real(rep.min_pre_head_norm),
                    "min_class_gap": format_real(rep.min_class_gap),
                    "min_score_gap": format_real(rep.min_score_gap),
                }),
            )
        }
        AnalysisSpec::ConsistencyModulus { layer, ef } => {
            let curve = consistency_modulus(model, *layer, &scenario.efs[ef], space)?;
            (
                AnalysisOutcome::Info,
                json!({ "layer": layer, "ef": ef, "curve": curve_to_json(&curve) }),
            )
        }
        AnalysisSpec::ExplainabilityModulus { layer, ef } => {
            let curve = explainability_modulus(model, *layer, &scenario.efs[ef], space)?;
            (
                AnalysisOutcome::Info,
                json!({ "layer": layer, "ef": ef, "curve": curve_to_json(&curve) }),
            )
        }
        AnalysisSpec::SecondOrderModulus {
            layer,
            ef,
            eps0_grid,
            eps1_grid,
        } => {
            let eps0: Vec<f64> = eps0_grid.iter().map(|r| r.0).collect();
            let eps1: Vec<f64> = eps1_grid.iter().map(|r| r.0).collect();
            let table =
                second_order_modulus(model, *layer, &scenario.efs[ef], space, &eps0, &eps1)?;
            (
                AnalysisOutcome::Info,
                json!({ "layer": layer, "ef": ef, "table": table_to_json(&table) }),
            )
        }
        AnalysisSpec::Lipschitz {
            from_layer,
            to_layer,
        } => {
            let est = model.lipschitz_estimate(*from_layer, *to_layer, space)?;
            (
                AnalysisOutcome::Info,
                json!({
                    "from_layer": est.from_layer,
                    "to_layer": est.to_layer,
                    "per_layer": est.per_layer.iter().map(|&l| format_real(l)).collect::<Vec<_>>(),
                    "product": format_real(est.product),
                }),
            )
        }
        AnalysisSpec::ConsistencyPropagation {
            ef,
            lower_layer,
            upper_layer,
        } => {
            let rep = check_consistency_propagation(
                model,
                &scenario.efs[ef],
                *lower_layer,
                *upper_layer,
                space,
            )?;
            (
                pass_fail(rep.pass),
                json!({
                    "ef": ef,
                    "lower_layer": rep.lower_layer,
                    "upper_layer": rep.upper_layer,
                    "lipschitz_product": format_real(rep.lipschitz_product),
                    "max_violation": format_real(rep.max_violation),
                    "checked_breakpoints": rep.checked_breakpoints,
                    "curve_lower": curve_to_json(&rep.curve_lower),
                    "curve_upper": curve_to_json(&rep.curve_upper),
                }),
            )
        }
        AnalysisSpec::ExplainabilityPropagation {
            ef,
            lower_layer,
            upper_layer,
        } => {
            let rep = check_explainability_propagation(
                model,
                &scenario.efs[ef],
                *lower_layer,
                *upper_layer,
                space,
            )?;
            (
                pass_fail(rep.pass),
                json!({
                    "ef": ef,
                    "lower_layer": rep.lower_layer,
                    "upper_layer": rep.upper_layer,
                    "lipschitz_product": format_real(rep.lipschitz_product),
                    "max_violation": format_real(rep.max_violation),
                    "checked_breakpoints": rep.checked_breakpoints,
                    "curve_lower": curve_to_json(&rep.curve_lower),
                    "curve_upper": curve_to_json(&rep.curve_upper),
                }),
            )
        }
        AnalysisSpec::GradientEfExplainability { split, delta } => {
            let rep = check_gradient_ef_explainability(model, space, *split, delta.0)?;
            (
                pass_fail(rep.pass),
                json!({
                    "split": rep.split,
                    "delta": format_real(rep.delta),
                    "min_pre_head_norm": format_real(rep.margin.min_pre_head_norm),
                    "stability_threshold": format_real(rep.stability_threshold),
                    "qualifying_pairs": rep.qualifying_pairs,
                    "stability_violations": rep.stability_violations,
                    "slope": format_real(rep.slope),
                    "slope_pairs": rep.slope_pairs,
                    "constant_bound": format_real(rep.constant_bound),
                    "max_class_norm": format_real(rep.max_class_norm),
                    "suffix_lipschitz": format_real(rep.suffix_lipschitz),
                    "suffix_jacobian_lipschitz": format_real(rep.suffix_jacobian_lipschitz),
                    "max_prefix_jacobian_norm": format_real(rep.max_prefix_jacobian_norm),
                    "max_suffix_jacobian_norm": format_real(rep.max_suffix_jacobian_norm),
                }),
            )
        }
        AnalysisSpec::Validity {
            ef,
            resolution,
            max_epsilon0,
        } => {
            let g_rv = ef_rv(scenario, ef, resolution.0)?;
            let h_rv = label_rv(model, space)?;
            let rep = validity_level_rv(&g_rv, &h_rv)?;
            let outcome = match max_epsilon0 {
                Some(bound) => pass_fail(rep.epsilon0 <= bound.0 + crate::prob::INFO_TOL),
                None => AnalysisOutcome::Info,
            };
            (
                outcome,
                json!({
                    "ef": ef,
                    "epsilon0": format_real(rep.epsilon0),
                    "loss": rep.loss_name,
                    "decoder": decoder_json(&rep.decoder),
                }),
            )
        }
        AnalysisSpec::Completeness {
            ef,
            epsilon,
            codomain_size,
            resolution,
            min_alpha,
        } => {
            let g_rv = ef_rv(scenario, ef, resolution.0)?;
            let h_rv = label_rv(model, space)?;
            let rep = completeness_level_rv(
                &g_rv,
                &h_rv,
                epsilon.0,
                &CandidateFamily::Enumerated {
                    codomain_size: *codomain_size,
                },
                config.enum_cap,
            )?;
            let outcome = match min_alpha {
                Some(bound) => pass_fail(rep.alpha_hat >= bound.0 - crate::prob::INFO_TOL),
                None => AnalysisOutcome::Info,
            };
            (
                outcome,
                json!({
                    "ef": ef,
                    "epsilon": format_real(rep.epsilon),
                    "alpha_hat": format_real(rep.alpha_hat),
                    "family_size": rep.family_size,
                    "admissible_count": rep.admissible_count,
                    "witness": rep.witness.as_ref().map(|(values, decoder)| json!({
                        "values": values,
                        "decoder": decoder_json(decoder),
                    })),
                }),
            )
        }
        AnalysisSpec::ValidImpliesComplete {
            ef,
            epsilon,
            epsilon0,
            codomain_size,
            resolution,
        } => {
            let g_rv = ef_rv(scenario, ef, resolution.0)?;
            let h_rv = label_rv(model, space)?;
            let rep = check_valid_implies_complete(
                &g_rv,
                &h_rv,
                epsilon.0,
                epsilon0.0,
                &CandidateFamily::Enumerated {
                    codomain_size: *codomain_size,
                },
                config.enum_cap,
            )?;
            (
                applicability(rep.applicable, rep.pass),
                json!({
                    "ef": ef,
                    "epsilon": format_real(rep.epsilon),
                    "epsilon0": format_real(rep.epsilon0),
                    "achieved_validity": format_real(rep.achieved_validity),
                    "label_entropy": format_real(rep.label_entropy),
                    "alpha_bound": format_real(rep.alpha_bound),
                    "alpha_hat": format_real(rep.alpha_hat),
                    "reason": rep.reason,
                }),
            )
        }
        AnalysisSpec::Equivalence {
            layer,
            ef,
            beta,
            gamma,
        } => {
            let beta = curve_from_pairs(beta)?;
            let gamma = curve_from_pairs(gamma)?;
            let rep = equivalence_report(model, *layer, &scenario.efs[ef], space, &beta, &gamma)?;
            (
                pass_fail(rep.pass),
                json!({
                    "layer": layer,
                    "ef": ef,
                    "beta_dominates": rep.beta_dominates,
                    "gamma_dominates": rep.gamma_dominates,
                    "beta_worst_gap": format_real(rep.beta_worst_gap),
                    "gamma_worst_gap": format_real(rep.gamma_worst_gap),
                }),
            )
        }
        AnalysisSpec::Intersection {
            ef1,
            ef2,
            epsilon,
            resolution,
        } => {
            let g1 = ef_rv(scenario, ef1, resolution.0)?;
            let g2 = ef_rv(scenario, ef2, resolution.0)?;
            let dec = gk_intersection(&g1, &g2)?;
            let check = verify_decomposition(&dec, &g1, &g2, epsilon.0)?;
            let union = union_rv(&dec)?;
            (
                pass_fail(check.pass),
                json!({
                    "ef1": ef1,
                    "ef2": ef2,
                    "epsilon": format_real(epsilon.0),
                    "achieved_epsilon": format_real(check.achieved_epsilon),
                    "cross_mi_e1_g2": format_real(check.cross_mi_e1_g2),
                    "cross_mi_e2_g1": format_real(check.cross_mi_e2_g1),
                    "e1_exactly_independent": check.e1_exactly_independent,
                    "e2_exactly_independent": check.e2_exactly_independent,
                    "shared_arity": dec.u.arity(),
                    "union_arity": union.arity(),
                    "decomposition": serde_json::to_value(dec.tables()).unwrap(),
                    "failures": check.failures,
                }),
            )
        }
        AnalysisSpec::VerifyDecomposition {
            ef1,
            ef2,
            epsilon,
            decomposition,
            resolution,
        } => {
            let g1 = ef_rv(scenario, ef1, resolution.0)?;
            let g2 = ef_rv(scenario, ef2, resolution.0)?;
            let dec = Decomposition::from_tables(decomposition, &g1, &g2)?;
            let check = verify_decomposition(&dec, &g1, &g2, epsilon.0)?;
            (
                pass_fail(check.pass),
                json!({
                    "ef1": ef1,
                    "ef2": ef2,
                    "epsilon": format_real(epsilon.0),
                    "achieved_epsilon": format_real(check.achieved_epsilon),
                    "r1_bijective": check.r1_bijective,
                    "r2_bijective": check.r2_bijective,
                    "pointwise_consistent": check.pointwise_consistent,
                    "within_budget": check.within_budget,
                    "failures": check.failures,
                }),
            )
        }
        AnalysisSpec::IntersectionValidity {
            ef1,
            ef2,
            epsilon,
            epsilon0,
            alpha,
            codomain_size,
            resolution,
        } => {
            let g1 = ef_rv(scenario, ef1, resolution.0)?;
            let g2 = ef_rv(scenario, ef2, resolution.0)?;
            let h = label_rv(model, space)?;
            let dec = gk_intersection(&g1, &g2)?;
            let rep = check_intersection_validity(
                &dec,
                &g1,
                &g2,
                &h,
                epsilon.0,
                epsilon0.0,
                alpha.0,
                *codomain_size,
                config.enum_cap,
            )?;
            (
                applicability(rep.applicable, rep.pass),
                json!({
                    "ef1": ef1,
                    "ef2": ef2,
                    "epsilon1_bound": format_real(rep.epsilon1_bound),
                    "u_decoder_loss": format_real(rep.u_decoder_loss),
                    "g1_validity": format_real(rep.g1_validity),
                    "g2_alpha_hat": format_real(rep.g2_alpha_hat),
                    "label_entropy": format_real(rep.label_entropy),
                    "reason": rep.reason,
                }),
            )
        }
        AnalysisSpec::UnionInheritance {
            ef1,
            ef2,
            epsilon0,
            epsilon1,
            alpha,
            codomain_size,
            resolution,
        } => {
            let g1 = ef_rv(scenario, ef1, resolution.0)?;
            let g2 = ef_rv(scenario, ef2, resolution.0)?;
            let h = label_rv(model, space)?;
            let dec = gk_intersection(&g1, &g2)?;
            let rep = check_union_inheritance(
                &dec,
                &g1,
                &g2,
                &h,
                epsilon0.0,
                epsilon1.0,
                alpha.0,
                *codomain_size,
                config.enum_cap,
            )?;
            (
                applicability(
                    rep.validity_applicable || rep.completeness_applicable,
                    rep.pass,
                ),
                json!({
                    "ef1": ef1,
                    "ef2": ef2,
                    "g1_validity": format_real(rep.g1_validity),
                    "union_validity": format_real(rep.union_validity),
                    "g1_alpha_hat": format_real(rep.g1_alpha_hat),
                    "union_alpha_hat": format_real(rep.union_alpha_hat),
                    "validity_applicable": rep.validity_applicable,
                    "completeness_applicable": rep.completeness_applicable,
                    "validity_pass": rep.validity_pass,
                    "completeness_pass": rep.completeness_pass,
                    "reason": rep.reason,
                }),
            )
        }
        AnalysisSpec::IntersectionUniqueness {
            ef1,
            ef2,
            epsilon,
            decomposition_b,
            resolution,
        } => {
            let g1 = ef_rv(scenario, ef1, resolution.0)?;
            let g2 = ef_rv(scenario, ef2, resolution.0)?;
            let dec_a = gk_intersection(&g1, &g2)?;
            let dec_b = match decomposition_b {
                Some(tables) => Decomposition::from_tables(tables, &g1, &g2)?,
                None => {
                    // default comparison target: the same decomposition with
                    // the shared symbols reversed
                    let perm: Vec<u32> = (0..dec_a.u.arity()).rev().collect();
                    dec_a.permute_u_symbols(&perm)?
                }
            };
            let rep = check_intersection_uniqueness(&dec_a, &dec_b, epsilon.0)?;
            (
                pass_fail(rep.pass),
                json!({
                    "ef1": ef1,
                    "ef2": ef2,
                    "epsilon": format_real(epsilon.0),
                    "bound": format_real(rep.bound),
                    "u_forward_error": format_real(rep.u_forward_error),
                    "u_backward_error": format_real(rep.u_backward_error),
                    "e1_forward_error": format_real(rep.e1_forward_error),
                    "e1_backward_error": format_real(rep.e1_backward_error),
                    "exact_bijections": rep.exact_bijections,
                }),
            )
        }
    })
}
