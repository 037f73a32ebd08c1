//! Acceptance battery: one test per criterion, each printing a verdict line
//! and holding its stated runtime budget.
//!
//! Expected values are pinned from independent routes: closed forms evaluated
//! inline, brute-force enumerations local to this file, and finite
//! difference oracles. None of them call the code path they check.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;

use efx_core::algebra::{
    check_intersection_uniqueness, check_intersection_validity, check_union_inheritance,
    gk_intersection, union_rv, verify_decomposition,
};
use efx_core::bounds::{exhaustive_best_decoder_error, map_decoder};
use efx_core::checkers::{
    check_consistency_propagation, check_explainability_propagation,
    check_gradient_ef_explainability, check_valid_implies_complete, completeness_level_rv,
    validity_level_rv, CandidateFamily,
};
use efx_core::ef::{bind, BoundEf, EfSpec};
use efx_core::fixtures;
use efx_core::model::fd_jacobian;
use efx_core::prob::{
    conditional_entropy, conditional_mutual_information, entropy, mutual_information,
    RandomVariable, SampleSpace,
};
use efx_core::suites::run_suite;

fn verdict(criterion: usize, name: &str, pass: bool, elapsed_s: f64, budget_s: f64) {
    println!(
        "acceptance {criterion} ({name}): {} in {elapsed_s:.3}s (budget {budget_s}s)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed");
    assert!(
        elapsed_s < budget_s,
        "criterion {criterion} exceeded its {budget_s}s budget: {elapsed_s:.3}s"
    );
}

fn bit_space(n_bits: usize) -> Arc<SampleSpace> {
    let count = 1usize << n_bits;
    let points = (0..count)
        .map(|k| {
            DVector::from_vec(
                (0..n_bits)
                    .map(|b| ((k >> (n_bits - 1 - b)) & 1) as f64)
                    .collect(),
            )
        })
        .collect();
    SampleSpace::uniform(points).unwrap()
}

#[test]
fn criterion_1_information_kernel_exactness() {
    let start = Instant::now();
    let s2 = bit_space(1);
    let coin = RandomVariable::from_labels(&s2, &[0u32, 1]).unwrap();
    let exact_coin = (entropy(&coin) - 1.0).abs() <= 1e-9;

    let s4 = bit_space(2);
    let four = RandomVariable::from_labels(&s4, &[0u32, 1, 2, 3]).unwrap();
    let exact_four = (entropy(&four) - 2.0).abs() <= 1e-9;

    let a = RandomVariable::from_labels(&s4, &[0u32, 0, 1, 1]).unwrap();
    let b = RandomVariable::from_labels(&s4, &[0u32, 1, 0, 1]).unwrap();
    let independent = mutual_information(&a, &b).unwrap().abs() <= 1e-9;

    // chain rules: H(A,B) = H(A) + H(B|A) and I(A,B;Z) = I(A;Z) + I(B;Z|A)
    let s8 = bit_space(3);
    let a3 = RandomVariable::from_labels(&s8, &[0u32, 0, 0, 0, 1, 1, 1, 1]).unwrap();
    let b3 = RandomVariable::from_labels(&s8, &[0u32, 0, 1, 1, 0, 0, 1, 1]).unwrap();
    let z3 = RandomVariable::from_labels(&s8, &[0u32, 1, 0, 1, 1, 0, 1, 0]).unwrap();
    let ab = a3.pair(&b3).unwrap();
    let h_chain =
        (entropy(&ab) - (entropy(&a3) + conditional_entropy(&b3, &a3).unwrap())).abs() <= 1e-9;
    let mi_chain = (mutual_information(&ab, &z3).unwrap()
        - (mutual_information(&a3, &z3).unwrap()
            + conditional_mutual_information(&b3, &z3, &a3).unwrap()))
    .abs()
        <= 1e-9;

    let pass = exact_coin && exact_four && independent && h_chain && mi_chain;
    verdict(1, "information kernel exactness", pass, start.elapsed().as_secs_f64(), 1.0);
}

#[test]
fn criterion_2_lemma_suite() {
    let start = Instant::now();
    let report = run_suite("lemmas", 7, 1_000_000).unwrap();
    let pass = report.all_assertions_pass();
    verdict(2, "lemma suite", pass, start.elapsed().as_secs_f64(), 5.0);
}

#[test]
fn criterion_3_map_decoder_optimality() {
    let start = Instant::now();
    let mut pass = true;
    for seed in 0..50u64 {
        let (x, y) = fixtures::random_joint(seed, 4);
        let map_err = map_decoder(&y, &x).unwrap().error_rate;
        let best = exhaustive_best_decoder_error(&y, &x, 256).unwrap();
        if map_err > best + 1e-12 {
            pass = false;
        }
    }
    verdict(3, "decoder optimality oracle", pass, start.elapsed().as_secs_f64(), 5.0);
}

#[test]
fn criterion_4_propagation_battery() {
    let start = Instant::now();
    let mut pass = true;
    for seed in 0..20u64 {
        let (model, space, ef_values) = fixtures::random_layered_model(seed);
        let ef = BoundEf::from_values(ef_values).unwrap();
        let depth = model.depth();
        for lower in 1..depth {
            for upper in lower + 1..=depth {
                let down =
                    check_consistency_propagation(&model, &ef, lower, upper, &space).unwrap();
                let up =
                    check_explainability_propagation(&model, &ef, lower, upper, &space).unwrap();
                if !(down.pass && down.max_violation <= 1e-9) {
                    pass = false;
                }
                if !(up.pass && up.max_violation <= 1e-9) {
                    pass = false;
                }
            }
        }
    }
    verdict(4, "propagation battery", pass, start.elapsed().as_secs_f64(), 30.0);
}

#[test]
fn criterion_5_gradient_explanation_fixture() {
    let start = Instant::now();

    let (model, space) = fixtures::shifted_plane(20);
    let rep = check_gradient_ef_explainability(&model, &space, 1, 1.0).unwrap();
    let affine_ok = rep.pass
        && rep.margin.min_pre_head_norm >= 2.0 - 1e-12
        && rep.stability_violations == 0
        && rep.slope == 0.0;

    let (tanh_model, tanh_space) = fixtures::shifted_plane_tanh(20);
    let tanh_rep = check_gradient_ef_explainability(&tanh_model, &tanh_space, 1, 0.5).unwrap();
    let tanh_ok = tanh_rep.pass
        && tanh_rep.slope.is_finite()
        && tanh_rep.slope > 0.0
        && tanh_rep.slope <= tanh_rep.constant_bound;

    // gradient explanation against score finite differences at every point
    let mut fd_ok = true;
    for (m, s) in [(&model, &space), (&tanh_model, &tanh_space)] {
        let ef = bind(&EfSpec::Gradient, m, s).unwrap();
        let head = m.head().unwrap();
        for (i, x) in s.points().iter().enumerate() {
            let label = m.label(x).unwrap();
            let class = &head.class_vectors[label - 1];
            let score = |v: &DVector<f64>| {
                m.pre_head(v).map(|p| DVector::from_vec(vec![class.dot(&p)]))
            };
            let fd = fd_jacobian(score, x, 1).unwrap().row(0).transpose();
            let rel = (ef.value(i) - &fd).norm() / (1.0 + ef.value(i).norm());
            if rel > 1e-4 {
                fd_ok = false;
            }
        }
    }

    let pass = affine_ok && tanh_ok && fd_ok;
    verdict(5, "gradient explanation fixture", pass, start.elapsed().as_secs_f64(), 30.0);
}

/// Mutual information of two symbol sequences over uniform points, written
/// independently of the library kernels.
fn oracle_mi(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len() as f64;
    let mut pa: BTreeMap<u32, f64> = BTreeMap::new();
    let mut pb: BTreeMap<u32, f64> = BTreeMap::new();
    let mut pab: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for i in 0..a.len() {
        *pa.entry(a[i]).or_insert(0.0) += 1.0 / n;
        *pb.entry(b[i]).or_insert(0.0) += 1.0 / n;
        *pab.entry((a[i], b[i])).or_insert(0.0) += 1.0 / n;
    }
    pab.iter()
        .map(|(&(x, y), &p)| p * (p / (pa[&x] * pb[&y])).log2())
        .sum()
}

#[test]
fn criterion_6_valid_implies_complete_fixture() {
    let start = Instant::now();
    let fx = fixtures::two_bits();
    let family = CandidateFamily::Enumerated { codomain_size: 2 };
    let rep = check_valid_implies_complete(&fx.g, &fx.h, 0.1, 0.01, &family, 1 << 20).unwrap();

    // closed form for balanced labels
    let alpha_closed = (2.0f64 - 0.1 - 2.0 * 0.01f64.sqrt()).sqrt() - 1.0;
    let bound_ok = rep.applicable
        && (rep.alpha_bound - alpha_closed).abs() <= 1e-9
        && (rep.alpha_bound - 0.3038).abs() <= 1e-3;

    // independent brute force over the 16 candidates: admissibility by a
    // local mutual information routine, loss by trying all 4 decoders
    let g: Vec<u32> = fx.g.values().to_vec();
    let h: Vec<u32> = fx.h.values().to_vec();
    let mut oracle_alpha = f64::INFINITY;
    for code in 0..16u32 {
        let cand: Vec<u32> = (0..4).map(|i| (code >> i) & 1).collect();
        if oracle_mi(&g, &cand) > 0.1 {
            continue;
        }
        for table in 0..4u32 {
            let decode = |sym: u32| (table >> sym) & 1;
            let loss = (0..4)
                .filter(|&i| decode(cand[i]) != h[i])
                .count() as f64
                / 4.0;
            oracle_alpha = oracle_alpha.min(loss);
        }
    }
    let oracle_ok = (oracle_alpha - 0.5).abs() <= 1e-12
        && (rep.alpha_hat - oracle_alpha).abs() <= 1e-12;

    let pass = bound_ok && oracle_ok && rep.pass && rep.alpha_hat >= rep.alpha_bound;
    verdict(6, "valid implies complete fixture", pass, start.elapsed().as_secs_f64(), 1.0);
}

#[test]
fn criterion_7_intersection_and_union_fixture() {
    let start = Instant::now();
    let fx = fixtures::xor_bits();
    let dec = gk_intersection(&fx.g1, &fx.g2).unwrap();

    // the construction recovers the shared bit exactly, with bijective
    // recodings
    let check = verify_decomposition(&dec, &fx.g1, &fx.g2, 0.0).unwrap();
    let parity: Vec<u32> = fx.g1.values().iter().map(|v| v % 2).collect();
    let construction_ok = check.pass
        && check.achieved_epsilon == 0.0
        && check.r1_bijective
        && check.r2_bijective
        && dec.u.values() == parity.as_slice();

    // validity of the shared part against the bound evaluated independently
    let vrep = check_intersection_validity(
        &dec, &fx.g1, &fx.g2, &fx.h, 0.0, 0.01, 0.5, 2, 1 << 20,
    )
    .unwrap();
    let eps1_closed = 1.0 - (-0.01f64 - 2.0 * 0.01f64.sqrt() - 1.0).exp2() / 0.5;
    let bound_ok = vrep.applicable
        && vrep.pass
        && vrep.u_decoder_loss == 0.0
        && (vrep.epsilon1_bound - eps1_closed).abs() <= 1e-12
        && (vrep.epsilon1_bound - 0.1355).abs() <= 1e-3;

    // the union inherits validity and completeness on the 256-candidate
    // family
    let urep = check_union_inheritance(
        &dec, &fx.g1, &fx.g2, &fx.h, 0.01, 0.1, 0.5, 2, 1 << 20,
    )
    .unwrap();
    let union = union_rv(&dec).unwrap();
    let union_validity = validity_level_rv(&union, &fx.h).unwrap().epsilon0;
    let union_completeness = completeness_level_rv(
        &union,
        &fx.h,
        0.1,
        &CandidateFamily::Enumerated { codomain_size: 2 },
        1 << 20,
    )
    .unwrap();
    let union_ok = urep.pass
        && union_validity == 0.0
        && union_completeness.family_size == 256
        && union_completeness.alpha_hat >= 0.5 - 1e-9;

    // relabeled decompositions translate into each other exactly
    let dec_b = dec.permute_u_symbols(&[1, 0]).unwrap();
    let qrep = check_intersection_uniqueness(&dec, &dec_b, 0.0).unwrap();
    let uniqueness_ok = qrep.pass && qrep.exact_bijections == Some(true);

    let pass = construction_ok && bound_ok && union_ok && uniqueness_ok;
    verdict(7, "intersection and union fixture", pass, start.elapsed().as_secs_f64(), 10.0);
}
