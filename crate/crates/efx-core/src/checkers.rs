//! Executable forms of the consistency, explainability, validity, and
//! completeness properties, plus the verifiers that tie them together.
//!
//! On a finite domain the universally quantified definitions collapse to
//! empirical modulus curves: breakpoints at realized pairwise distances,
//! values from exact maxima. The verifiers then assert the stated
//! inequalities at every breakpoint, so a pass is exact for the domain
//! rather than a sampled approximation.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bounds::{map_decoder, Decoder};
use crate::ef::BoundEf;
use crate::error::{EfxError, Result};
use crate::model::{LayeredModel, MarginReport};
use crate::prob::{binary_entropy, mutual_information, RandomVariable, SampleSpace, INFO_TOL};

/// A non-decreasing step curve recorded at realized distances.
///
/// `value_at(eps)` is the value of the greatest breakpoint at or below
/// `eps`, and zero below the first breakpoint (a maximum over an empty set).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusCurve {
    breakpoints: Vec<(f64, f64)>,
}

impl ModulusCurve {
    /// Builds the curve `eps -> max { value : key <= eps }` from raw
    /// per-pair samples of (key distance, value distance).
    pub fn from_samples(samples: &[(f64, f64)]) -> Result<Self> {
        for &(k, v) in samples {
            if !k.is_finite() || !v.is_finite() {
                return Err(EfxError::Numeric("non-finite distance in curve samples".into()));
            }
        }
        let mut sorted: Vec<(f64, f64)> = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut breakpoints: Vec<(f64, f64)> = Vec::new();
        let mut running = 0.0f64;
        for (k, v) in sorted {
            running = running.max(v);
            match breakpoints.last_mut() {
                Some(last) if last.0 == k => last.1 = running,
                _ => breakpoints.push((k, running)),
            }
        }
        Ok(ModulusCurve { breakpoints })
    }

    /// Validates explicit breakpoints: strictly increasing abscissae and
    /// non-decreasing nonnegative values.
    pub fn from_breakpoints(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        for w in breakpoints.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(EfxError::Structural(
                    "curve abscissae must be strictly increasing".into(),
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(EfxError::Structural(
                    "curve values must be non-decreasing".into(),
                ));
            }
        }
        if breakpoints.iter().any(|&(k, v)| !k.is_finite() || !v.is_finite() || v < 0.0) {
            return Err(EfxError::Numeric("curve breakpoints must be finite and nonnegative".into()));
        }
        Ok(ModulusCurve { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn value_at(&self, eps: f64) -> f64 {
        let mut value = 0.0;
        for &(k, v) in &self.breakpoints {
            if k <= eps {
                value = v;
            } else {
                break;
            }
        }
        value
    }

    /// Samples an arbitrary candidate function at the same abscissae, giving
    /// it the step-curve form the comparison routines expect.
    pub fn sample_function<F: Fn(f64) -> f64>(&self, f: F) -> Result<ModulusCurve> {
        ModulusCurve::from_breakpoints(
            self.breakpoints.iter().map(|&(k, _)| (k, f(k))).collect(),
        )
    }
}

fn require_pairs(space: &SampleSpace) -> Result<()> {
    if space.len() < 2 {
        return Err(EfxError::Degenerate(
            "modulus computation needs at least two sample points".into(),
        ));
    }
    Ok(())
}

/// Tightest bound on representation distance given explanation distance:
/// breakpoints at realized explanation distances, values are maxima of the
/// layer-`i` representation distance over the admitted pairs.
pub fn consistency_modulus(
    model: &LayeredModel,
    layer: usize,
    ef: &BoundEf,
    space: &SampleSpace,
) -> Result<ModulusCurve> {
    let samples = pair_distances(model, layer, ef, space)?;
    ModulusCurve::from_samples(&samples.iter().map(|&(dg, df)| (dg, df)).collect::<Vec<_>>())
}

/// Tightest bound on explanation distance given representation distance;
/// the roles of the two distances in [`consistency_modulus`] swapped.
pub fn explainability_modulus(
    model: &LayeredModel,
    layer: usize,
    ef: &BoundEf,
    space: &SampleSpace,
) -> Result<ModulusCurve> {
    let samples = pair_distances(model, layer, ef, space)?;
    ModulusCurve::from_samples(&samples.iter().map(|&(dg, df)| (df, dg)).collect::<Vec<_>>())
}

/// Per-pair (explanation distance, representation distance) at one layer.
fn pair_distances(
    model: &LayeredModel,
    layer: usize,
    ef: &BoundEf,
    space: &SampleSpace,
) -> Result<Vec<(f64, f64)>> {
    require_pairs(space)?;
    if layer == 0 || layer > model.depth() {
        return Err(EfxError::Structural(format!(
            "layer index {layer} out of range 1..={}",
            model.depth()
        )));
    }
    if ef.len() != space.len() {
        return Err(EfxError::Structural(
            "explanation is not bound to this sample space".into(),
        ));
    }
    let reps: Vec<_> = space
        .points()
        .iter()
        .map(|x| model.representation_at(layer, x))
        .collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::with_capacity(space.len() * (space.len() - 1) / 2);
    for a in 0..space.len() {
        for b in a + 1..space.len() {
            let dg = ef.distance(a, b);
            let df = (&reps[a] - &reps[b]).norm();
            samples.push((dg, df));
        }
    }
    Ok(samples)
}

/// Two-parameter modulus: `max { d_g : d_f <= eps0 and d_J <= eps1 }` where
/// `d_J` is the Frobenius distance of the prefix Jacobians.
#[derive(Debug, Clone, Serialize)]
pub struct SecondOrderTable {
    pub eps0: Vec<f64>,
    pub eps1: Vec<f64>,
    /// `values[i][j]` corresponds to `(eps0[i], eps1[j])`.
    pub values: Vec<Vec<f64>>,
}

pub fn second_order_modulus(
    model: &LayeredModel,
    layer: usize,
    ef: &BoundEf,
    space: &SampleSpace,
    eps0_grid: &[f64],
    eps1_grid: &[f64],
) -> Result<SecondOrderTable> {
    require_pairs(space)?;
    if !model.has_jacobians() {
        return Err(EfxError::Capability(
            "second-order modulus needs Jacobians on every layer".into(),
        ));
    }
    let reps: Vec<_> = space
        .points()
        .iter()
        .map(|x| model.representation_at(layer, x))
        .collect::<Result<Vec<_>>>()?;
    let jacs: Vec<_> = space
        .points()
        .iter()
        .map(|x| model.prefix_jacobian(layer, x))
        .collect::<Result<Vec<_>>>()?;
    let mut triples = Vec::new();
    for a in 0..space.len() {
        for b in a + 1..space.len() {
            let df = (&reps[a] - &reps[b]).norm();
            let dj = (&jacs[a] - &jacs[b]).norm();
            let dg = ef.distance(a, b);
            triples.push((df, dj, dg));
        }
    }
    let values = eps0_grid
        .iter()
        .map(|&e0| {
            eps1_grid
                .iter()
                .map(|&e1| {
                    triples
                        .iter()
                        .filter(|&&(df, dj, _)| df <= e0 && dj <= e1)
                        .map(|&(_, _, dg)| dg)
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect();
    Ok(SecondOrderTable {
        eps0: eps0_grid.to_vec(),
        eps1: eps1_grid.to_vec(),
        values,
    })
}

/// Outcome of one curve-domination check between layers.
#[derive(Debug, Clone, Serialize)]
pub struct PropagationReport {
    pub lower_layer: usize,
    pub upper_layer: usize,
    pub lipschitz_product: f64,
    pub checked_breakpoints: usize,
    /// Largest amount by which the dominated side exceeded the dominating
    /// side; negative or zero when the inequality holds everywhere.
    pub max_violation: f64,
    pub pass: bool,
    pub curve_lower: ModulusCurve,
    pub curve_upper: ModulusCurve,
}

/// Downstream consistency: the layer-`j` consistency curve is dominated by
/// the layer-`i` curve scaled by the product of the realized Lipschitz
/// constants of the layers between them (`i < j`).
pub fn check_consistency_propagation(
    model: &LayeredModel,
    ef: &BoundEf,
    i: usize,
    j: usize,
    space: &SampleSpace,
) -> Result<PropagationReport> {
    if i >= j {
        return Err(EfxError::Structural(format!(
            "consistency propagates from a lower layer to a higher one, got {i} >= {j}"
        )));
    }
    let beta_i = consistency_modulus(model, i, ef, space)?;
    let beta_j = consistency_modulus(model, j, ef, space)?;
    let lip = model.lipschitz_estimate(i, j, space)?;
    let mut max_violation = f64::NEG_INFINITY;
    let mut checked = 0;
    for &(eps, _) in beta_i.breakpoints().iter().chain(beta_j.breakpoints()) {
        let lhs = beta_j.value_at(eps);
        let rhs = lip.product * beta_i.value_at(eps);
        max_violation = max_violation.max(lhs - rhs);
        checked += 1;
    }
    Ok(PropagationReport {
        lower_layer: i,
        upper_layer: j,
        lipschitz_product: lip.product,
        checked_breakpoints: checked,
        max_violation,
        pass: max_violation <= INFO_TOL,
        curve_lower: beta_i,
        curve_upper: beta_j,
    })
}

/// Upstream explainability: the layer-`j` explainability curve at `eps` is
/// dominated by the layer-`i` curve at `eps` times the realized Lipschitz
/// product of the layers between them (`j < i`).
pub fn check_explainability_propagation(
    model: &LayeredModel,
    ef: &BoundEf,
    j: usize,
    i: usize,
    space: &SampleSpace,
) -> Result<PropagationReport> {
    if j >= i {
        return Err(EfxError::Structural(format!(
            "explainability propagates from a higher layer to a lower one, got {j} >= {i}"
        )));
    }
    let gamma_j = explainability_modulus(model, j, ef, space)?;
    let gamma_i = explainability_modulus(model, i, ef, space)?;
    let lip = model.lipschitz_estimate(j, i, space)?;
    let mut max_violation = f64::NEG_INFINITY;
    let mut checked = 0;
    for &(eps, _) in gamma_j.breakpoints() {
        let lhs = gamma_j.value_at(eps);
        let rhs = gamma_i.value_at(eps * lip.product);
        max_violation = max_violation.max(lhs - rhs);
        checked += 1;
    }
    Ok(PropagationReport {
        lower_layer: j,
        upper_layer: i,
        lipschitz_product: lip.product,
        checked_breakpoints: checked,
        max_violation,
        pass: max_violation <= INFO_TOL,
        curve_lower: gamma_j,
        curve_upper: gamma_i,
    })
}

/// Verdict of the gradient-explanation check: label stability below the
/// score-margin threshold, and a finite slope of explanation distance per
/// unit of representation-plus-Jacobian distance, against a constant
/// assembled from realized Lipschitz data.
#[derive(Debug, Clone, Serialize)]
pub struct GradientEfReport {
    pub split: usize,
    pub delta: f64,
    pub margin: MarginReport,
    /// Pairs with representation distance below this must share a label.
    pub stability_threshold: f64,
    pub qualifying_pairs: usize,
    pub stability_violations: usize,
    /// Largest realized `d_g / (d_f + d_J)` over label-stable pairs.
    pub slope: f64,
    pub slope_pairs: usize,
    /// Assembled bound the slope must not exceed (safety factor included).
    pub constant_bound: f64,
    pub max_class_norm: f64,
    pub suffix_lipschitz: f64,
    pub suffix_jacobian_lipschitz: f64,
    pub max_prefix_jacobian_norm: f64,
    pub max_suffix_jacobian_norm: f64,
    pub pass: bool,
}

/// Safety factor applied to the assembled slope constant.
const SLOPE_SAFETY: f64 = 2.0;

pub fn check_gradient_ef_explainability(
    model: &LayeredModel,
    space: &SampleSpace,
    split: usize,
    delta: f64,
) -> Result<GradientEfReport> {
    require_pairs(space)?;
    if split == 0 || split > model.depth() {
        return Err(EfxError::Structural(format!(
            "split {split} out of range 1..={}",
            model.depth()
        )));
    }
    if !model.has_jacobians() {
        return Err(EfxError::Capability(
            "gradient explanation check needs Jacobians on every layer".into(),
        ));
    }
    let head = model
        .head()
        .ok_or_else(|| EfxError::Capability("gradient explanation check needs a head".into()))?;
    let margin = model.margin_check(space, delta)?;
    if !margin.pass {
        return Err(EfxError::Precondition(format!(
            "margin check failed: min |p| = {}, min class gap = {}, min score gap = {}",
            margin.min_pre_head_norm, margin.min_class_gap, margin.min_score_gap
        )));
    }

    let k = model.depth();
    let n = space.len();
    let mut labels = Vec::with_capacity(n);
    let mut f_vals = Vec::with_capacity(n);
    let mut f_jacs = Vec::with_capacity(n);
    let mut c_vals = Vec::with_capacity(n);
    let mut c_jacs: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut g_vals = Vec::with_capacity(n);
    for x in space.points() {
        let label = model.label(x)?;
        let f = model.representation_at(split, x)?;
        let jf = model.prefix_jacobian(split, x)?;
        let c = model.segment_eval(split, k, &f)?;
        let jc = model.segment_jacobian(split, k, &f)?;
        let m = &head.class_vectors[label - 1];
        let jp = &jc * &jf;
        g_vals.push((m.transpose() * &jp).transpose());
        labels.push(label);
        f_vals.push(f);
        f_jacs.push(jf);
        c_vals.push(c);
        c_jacs.push(jc);
    }

    // realized Lipschitz data of the suffix and the Jacobian maps
    let mut suffix_lipschitz = 0.0f64;
    let mut suffix_jacobian_lipschitz = 0.0f64;
    for a in 0..n {
        for b in a + 1..n {
            let df = (&f_vals[a] - &f_vals[b]).norm();
            if df > 0.0 {
                suffix_lipschitz =
                    suffix_lipschitz.max((&c_vals[a] - &c_vals[b]).norm() / df);
                suffix_jacobian_lipschitz =
                    suffix_jacobian_lipschitz.max((&c_jacs[a] - &c_jacs[b]).norm() / df);
            }
        }
    }
    let max_prefix_jacobian_norm = f_jacs.iter().map(|j| j.norm()).fold(0.0, f64::max);
    let max_suffix_jacobian_norm = c_jacs.iter().map(|j| j.norm()).fold(0.0, f64::max);
    let max_class_norm = head.max_class_norm();

    let stability_threshold = if suffix_lipschitz > 0.0 {
        (margin.min_class_gap * delta) / (2.0 * suffix_lipschitz * max_class_norm)
    } else {
        f64::INFINITY
    };
    let constant_bound = SLOPE_SAFETY
        * max_class_norm
        * (suffix_jacobian_lipschitz * max_prefix_jacobian_norm + max_suffix_jacobian_norm);

    let mut qualifying_pairs = 0;
    let mut stability_violations = 0;
    let mut slope = 0.0f64;
    let mut slope_pairs = 0;
    for a in 0..n {
        for b in a + 1..n {
            let df = (&f_vals[a] - &f_vals[b]).norm();
            if df < stability_threshold {
                qualifying_pairs += 1;
                if labels[a] != labels[b] {
                    stability_violations += 1;
                }
            }
            if labels[a] == labels[b] {
                let dj = (&f_jacs[a] - &f_jacs[b]).norm();
                let dg = (&g_vals[a] - &g_vals[b]).norm();
                if df + dj > 0.0 {
                    slope = slope.max(dg / (df + dj));
                    slope_pairs += 1;
                }
            }
        }
    }

    let pass = stability_violations == 0 && slope <= constant_bound + INFO_TOL;
    Ok(GradientEfReport {
        split,
        delta,
        margin,
        stability_threshold,
        qualifying_pairs,
        stability_violations,
        slope,
        slope_pairs,
        constant_bound,
        max_class_norm,
        suffix_lipschitz,
        suffix_jacobian_lipschitz,
        max_prefix_jacobian_norm,
        max_suffix_jacobian_norm,
        pass,
    })
}

/// How well the model's own label can be recovered from an explanation.
#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub decoder: Decoder,
    /// Achieved expected loss; the explanation is valid at every level at or
    /// above this.
    pub epsilon0: f64,
    pub loss_name: &'static str,
}

/// Validity of an explanation variable against a label variable under 0-1
/// loss, via the optimal table decoder.
pub fn validity_level_rv(g_rv: &RandomVariable, h_rv: &RandomVariable) -> Result<ValidityReport> {
    let decoder = map_decoder(g_rv, h_rv)?;
    Ok(ValidityReport {
        epsilon0: decoder.error_rate,
        decoder,
        loss_name: "zero_one",
    })
}

/// Label variable induced by the model on the sample space.
pub fn label_rv(model: &LayeredModel, space: &Arc<SampleSpace>) -> Result<RandomVariable> {
    let labels = model.labels(space)?;
    RandomVariable::from_labels(space, &labels)
}

pub fn validity_level(
    ef: &BoundEf,
    model: &LayeredModel,
    space: &Arc<SampleSpace>,
    resolution: f64,
) -> Result<ValidityReport> {
    let g_rv = ef.as_rv(space, resolution)?;
    let h_rv = label_rv(model, space)?;
    validity_level_rv(&g_rv, &h_rv)
}

/// The candidate functions completeness is decided against.
#[derive(Debug, Clone)]
pub enum CandidateFamily {
    /// Every function from sample points into `0..codomain_size`.
    Enumerated { codomain_size: u32 },
    /// An explicit list of per-point symbol assignments.
    Explicit(Vec<Vec<u32>>),
}

/// Result of scanning a candidate family for the best admissible predictor.
#[derive(Debug, Clone, Serialize)]
pub struct CompletenessReport {
    pub epsilon: f64,
    /// Minimal decoder loss over candidates with mutual information at most
    /// `epsilon` against the explanation; infinite when none is admissible.
    pub alpha_hat: f64,
    pub family_size: u64,
    pub admissible_count: u64,
    /// Per-point values and decoder of the best admissible candidate.
    pub witness: Option<(Vec<u32>, Decoder)>,
}

/// Scans the family for functions nearly independent of the explanation and
/// reports how well the best of them predicts the label.
///
/// The verdict is relative to the family: the explanation is
/// `(epsilon, alpha)`-complete on this family exactly when
/// `alpha <= alpha_hat`.
pub fn completeness_level_rv(
    g_rv: &RandomVariable,
    h_rv: &RandomVariable,
    epsilon: f64,
    family: &CandidateFamily,
    cap: u64,
) -> Result<CompletenessReport> {
    if epsilon < 0.0 || !epsilon.is_finite() && epsilon != f64::INFINITY {
        return Err(EfxError::Domain(format!("information budget {epsilon} is invalid")));
    }
    if !g_rv.same_space(h_rv) {
        return Err(EfxError::Structural(
            "completeness needs the explanation and label on one space".into(),
        ));
    }
    let space = g_rv.space();
    let n = space.len();
    let family_size: u64 = match family {
        CandidateFamily::Enumerated { codomain_size } => {
            if *codomain_size == 0 {
                return Err(EfxError::Domain("candidate codomain must be nonempty".into()));
            }
            let size = (*codomain_size as u128).checked_pow(n as u32);
            match size {
                Some(s) if s <= cap as u128 => s as u64,
                _ => {
                    return Err(EfxError::Resource(format!(
                        "candidate family {codomain_size}^{n} exceeds the enumeration cap {cap} \
                         (override with EFX_ENUM_CAP or supply explicit candidates)"
                    )))
                }
            }
        }
        CandidateFamily::Explicit(list) => list.len() as u64,
    };

    let mut alpha_hat = f64::INFINITY;
    let mut admissible_count = 0u64;
    let mut witness: Option<(Vec<u32>, Decoder)> = None;
    let mut values = vec![0u32; n];
    for idx in 0..family_size {
        match family {
            CandidateFamily::Enumerated { codomain_size } => {
                let mut c = idx;
                let base = *codomain_size as u64;
                for v in values.iter_mut() {
                    *v = (c % base) as u32;
                    c /= base;
                }
            }
            CandidateFamily::Explicit(list) => {
                let cand = &list[idx as usize];
                if cand.len() != n {
                    return Err(EfxError::Structural(format!(
                        "candidate {idx} has {} values for {n} points",
                        cand.len()
                    )));
                }
                values.copy_from_slice(cand);
            }
        }
        let cand_rv = RandomVariable::from_labels(space, &values)?;
        let info = mutual_information(g_rv, &cand_rv)?;
        if info <= epsilon + INFO_TOL {
            admissible_count += 1;
            let decoder = map_decoder(&cand_rv, h_rv)?;
            if decoder.error_rate < alpha_hat {
                alpha_hat = decoder.error_rate;
                witness = Some((values.clone(), decoder));
            }
        }
    }
    Ok(CompletenessReport {
        epsilon,
        alpha_hat,
        family_size,
        admissible_count,
        witness,
    })
}

pub fn completeness_level(
    ef: &BoundEf,
    model: &LayeredModel,
    space: &Arc<SampleSpace>,
    epsilon: f64,
    family: &CandidateFamily,
    resolution: f64,
    cap: u64,
) -> Result<CompletenessReport> {
    let g_rv = ef.as_rv(space, resolution)?;
    let h_rv = label_rv(model, space)?;
    completeness_level_rv(&g_rv, &h_rv, epsilon, family, cap)
}

/// Verdict of the valid-implies-complete bound for binary labels.
#[derive(Debug, Clone, Serialize)]
pub struct ValidCompleteReport {
    pub applicable: bool,
    pub reason: Option<String>,
    pub epsilon: f64,
    pub epsilon0: f64,
    pub achieved_validity: f64,
    pub label_entropy: f64,
    /// Completeness level the bound guarantees.
    pub alpha_bound: f64,
    /// Best admissible candidate loss found by enumeration.
    pub alpha_hat: f64,
    pub pass: bool,
}

fn not_applicable(
    epsilon: f64,
    epsilon0: f64,
    achieved: f64,
    label_entropy: f64,
    reason: String,
) -> ValidCompleteReport {
    ValidCompleteReport {
        applicable: false,
        reason: Some(reason),
        epsilon,
        epsilon0,
        achieved_validity: achieved,
        label_entropy,
        alpha_bound: f64::NAN,
        alpha_hat: f64::NAN,
        pass: true,
    }
}

/// Checks that no enumerated candidate contradicts the completeness level
/// `alpha = (sqrt(1 + H(p) (H(p) - eps - 2 sqrt(eps0))) - 1) / H(p)`
/// guaranteed for an `eps0`-valid explanation of a binary model.
pub fn check_valid_implies_complete(
    g_rv: &RandomVariable,
    h_rv: &RandomVariable,
    epsilon: f64,
    epsilon0: f64,
    family: &CandidateFamily,
    cap: u64,
) -> Result<ValidCompleteReport> {
    let validity = validity_level_rv(g_rv, h_rv)?;
    let achieved = validity.epsilon0;
    let hp = if h_rv.arity() == 2 {
        binary_entropy(h_rv.distribution()[0])?
    } else {
        f64::NAN
    };
    if h_rv.arity() != 2 {
        return Ok(not_applicable(
            epsilon,
            epsilon0,
            achieved,
            hp,
            format!("label variable has {} symbols, the bound needs 2", h_rv.arity()),
        ));
    }
    if !(epsilon0 > 0.0 && epsilon0 < 0.5) {
        return Ok(not_applicable(
            epsilon,
            epsilon0,
            achieved,
            hp,
            format!("epsilon0 = {epsilon0} outside (0, 0.5)"),
        ));
    }
    if achieved > epsilon0 {
        return Ok(not_applicable(
            epsilon,
            epsilon0,
            achieved,
            hp,
            format!("explanation is only {achieved}-valid, worse than epsilon0 = {epsilon0}"),
        ));
    }
    let slack = hp - epsilon - 2.0 * epsilon0.sqrt();
    if slack <= 0.0 {
        return Ok(not_applicable(
            epsilon,
            epsilon0,
            achieved,
            hp,
            format!("label entropy {hp} does not exceed epsilon + 2 sqrt(epsilon0)"),
        ));
    }
    let alpha_bound = ((1.0 + hp * slack).sqrt() - 1.0) / hp;
    let completeness = completeness_level_rv(g_rv, h_rv, epsilon, family, cap)?;
    let pass = completeness.alpha_hat >= alpha_bound - INFO_TOL;
    Ok(ValidCompleteReport {
        applicable: true,
        reason: None,
        epsilon,
        epsilon0,
        achieved_validity: achieved,
        label_entropy: hp,
        alpha_bound,
        alpha_hat: completeness.alpha_hat,
        pass,
    })
}

/// Pointwise domination of the empirical curves by candidate moduli.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub beta_dominates: bool,
    pub gamma_dominates: bool,
    /// Worst shortfall of each candidate curve below the empirical one.
    pub beta_worst_gap: f64,
    pub gamma_worst_gap: f64,
    pub pass: bool,
}

pub fn equivalence_report(
    model: &LayeredModel,
    layer: usize,
    ef: &BoundEf,
    space: &SampleSpace,
    beta: &ModulusCurve,
    gamma: &ModulusCurve,
) -> Result<EquivalenceReport> {
    let beta_hat = consistency_modulus(model, layer, ef, space)?;
    let gamma_hat = explainability_modulus(model, layer, ef, space)?;
    let (beta_gap, beta_ok) = domination_gap(beta, &beta_hat);
    let (gamma_gap, gamma_ok) = domination_gap(gamma, &gamma_hat);
    Ok(EquivalenceReport {
        beta_dominates: beta_ok,
        gamma_dominates: gamma_ok,
        beta_worst_gap: beta_gap,
        gamma_worst_gap: gamma_gap,
        pass: beta_ok && gamma_ok,
    })
}

fn domination_gap(candidate: &ModulusCurve, empirical: &ModulusCurve) -> (f64, bool) {
    let mut worst = 0.0f64;
    for &(eps, _) in empirical
        .breakpoints()
        .iter()
        .chain(candidate.breakpoints())
    {
        worst = worst.max(empirical.value_at(eps) - candidate.value_at(eps));
    }
    (worst, worst <= 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ef::BoundEf;
    use crate::model::{ArgmaxHead, Layer};
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vec1(a: f64) -> DVector<f64> {
        DVector::from_vec(vec![a])
    }

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    fn identity_model(dim: usize) -> LayeredModel {
        LayeredModel::new(
            vec![Layer::Affine {
                weight: DMatrix::identity(dim, dim),
                offset: DVector::zeros(dim),
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn curve_construction_and_lookup() {
        let curve = ModulusCurve::from_samples(&[(1.0, 3.0)]).unwrap();
        assert_eq!(curve.breakpoints(), &[(1.0, 3.0)]);
        assert_eq!(curve.value_at(0.5), 0.0);
        assert_eq!(curve.value_at(1.0), 3.0);
        assert_eq!(curve.value_at(9.0), 3.0);

        let curve =
            ModulusCurve::from_samples(&[(2.0, 1.0), (1.0, 5.0), (2.0, 2.0), (3.0, 0.5)]).unwrap();
        assert_eq!(curve.breakpoints(), &[(1.0, 5.0), (2.0, 5.0), (3.0, 5.0)]);

        assert!(ModulusCurve::from_breakpoints(vec![(1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(ModulusCurve::from_breakpoints(vec![(1.0, 2.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn single_pair_modulus() {
        let pts = vec![vec1(0.0), vec1(3.0)];
        let space = SampleSpace::uniform(pts).unwrap();
        let model = identity_model(1);
        // explanation distance 1, representation distance 3
        let ef = BoundEf::from_values(vec![vec1(0.0), vec1(1.0)]).unwrap();
        let beta = consistency_modulus(&model, 1, &ef, &space).unwrap();
        assert_eq!(beta.breakpoints(), &[(1.0, 3.0)]);
        let gamma = explainability_modulus(&model, 1, &ef, &space).unwrap();
        assert_eq!(gamma.breakpoints(), &[(3.0, 1.0)]);
    }

    #[test]
    fn constant_representation_has_zero_consistency_curve() {
        let space = SampleSpace::grid(&[(0.0, 1.0)], &[4]).unwrap();
        let model = LayeredModel::new(
            vec![Layer::Affine {
                weight: DMatrix::from_row_slice(1, 1, &[0.0]),
                offset: vec1(2.0),
            }],
            None,
        )
        .unwrap();
        let ef = BoundEf::from_values(space.points().to_vec()).unwrap();
        let beta = consistency_modulus(&model, 1, &ef, &space).unwrap();
        for &(_, v) in beta.breakpoints() {
            assert_eq!(v, 0.0);
        }
        // and the explainability curve of a constant explanation is zero
        let const_ef = BoundEf::from_values(vec![vec1(5.0); space.len()]).unwrap();
        let gamma = explainability_modulus(&model, 1, &const_ef, &space).unwrap();
        for &(_, v) in gamma.breakpoints() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn first_coordinate_representation_is_dominated_by_identity() {
        // representation = first coordinate of the explanation, so the
        // consistency curve never exceeds the identity
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<DVector<f64>> = (0..8).map(|k| vec1(k as f64)).collect();
        let space = SampleSpace::uniform(points).unwrap();
        let g_values: Vec<DVector<f64>> = (0..8)
            .map(|_| vec2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let entries: Vec<(DVector<f64>, DVector<f64>)> = space
            .points()
            .iter()
            .zip(g_values.iter())
            .map(|(p, g)| (p.clone(), vec1(g[0])))
            .collect();
        let model = LayeredModel::new(
            vec![Layer::Tabulated {
                in_dim: 1,
                out_dim: 1,
                entries,
            }],
            None,
        )
        .unwrap();
        let ef = BoundEf::from_values(g_values).unwrap();
        let beta = consistency_modulus(&model, 1, &ef, &space).unwrap();
        for &(eps, v) in beta.breakpoints() {
            assert!(v <= eps + 1e-12, "beta({eps}) = {v} exceeds identity");
        }
    }

    #[test]
    fn three_point_modulus_matches_brute_force_rescan() {
        let pts = vec![vec1(0.0), vec1(1.0), vec1(2.5)];
        let space = SampleSpace::uniform(pts.clone()).unwrap();
        let f_out = [vec1(0.0), vec1(2.0), vec1(3.0)];
        let entries: Vec<_> = pts
            .iter()
            .cloned()
            .zip(f_out.iter().cloned())
            .collect();
        let model = LayeredModel::new(
            vec![Layer::Tabulated {
                in_dim: 1,
                out_dim: 1,
                entries,
            }],
            None,
        )
        .unwrap();
        let g_vals = vec![vec1(1.0), vec1(1.5), vec1(4.0)];
        let ef = BoundEf::from_values(g_vals.clone()).unwrap();
        let gamma = explainability_modulus(&model, 1, &ef, &space).unwrap();

        // brute-force oracle over the three pairs
        let mut pairs = Vec::new();
        for a in 0..3 {
            for b in a + 1..3 {
                let df = (&f_out[a] - &f_out[b]).norm();
                let dg = (&g_vals[a] - &g_vals[b]).norm();
                pairs.push((df, dg));
            }
        }
        for &(eps, v) in gamma.breakpoints() {
            let oracle = pairs
                .iter()
                .filter(|&&(df, _)| df <= eps)
                .map(|&(_, dg)| dg)
                .fold(0.0, f64::max);
            assert_eq!(v, oracle);
        }
    }

    #[test]
    fn modulus_on_a_subset_is_dominated_by_the_full_curve() {
        let space = SampleSpace::grid(&[(0.0, 1.0)], &[6]).unwrap();
        let sub_points: Vec<DVector<f64>> = space.points()[..4].to_vec();
        let sub_space = SampleSpace::uniform(sub_points).unwrap();
        let model = identity_model(1);
        let values: Vec<DVector<f64>> = space.points().iter().map(|p| vec1(p[0] * p[0])).collect();
        let full = BoundEf::from_values(values.clone()).unwrap();
        let sub = BoundEf::from_values(values[..4].to_vec()).unwrap();
        let beta_full = consistency_modulus(&model, 1, &full, &space).unwrap();
        let beta_sub = consistency_modulus(&model, 1, &sub, &sub_space).unwrap();
        for &(eps, v) in beta_sub.breakpoints() {
            assert!(v <= beta_full.value_at(eps) + 1e-12);
        }
    }

    #[test]
    fn second_order_table_for_affine_models_ignores_jacobian_budget() {
        let space = SampleSpace::grid(&[(-1.0, 1.0), (-1.0, 1.0)], &[4, 4]).unwrap();
        let model = identity_model(2);
        // explanation affine in the representation
        let values: Vec<DVector<f64>> = space
            .points()
            .iter()
            .map(|p| vec2(2.0 * p[0] + 0.5, -p[1]))
            .collect();
        let ef = BoundEf::from_values(values).unwrap();
        let grid0 = [0.5, 1.0, 2.0, f64::INFINITY];
        let grid1 = [0.0, 1.0, f64::INFINITY];
        let table = second_order_modulus(&model, 1, &ef, &space, &grid0, &grid1).unwrap();
        // all prefix Jacobians equal, so columns are identical
        for row in &table.values {
            for w in row.windows(2) {
                assert_eq!(w[0], w[1]);
            }
        }
        // entries non-decreasing in the first budget
        for j in 0..grid1.len() {
            for i in 1..grid0.len() {
                assert!(table.values[i][j] >= table.values[i - 1][j]);
            }
        }
        // the unconstrained entry is the largest pairwise explanation distance
        let mut dmax = 0.0f64;
        for a in 0..space.len() {
            for b in a + 1..space.len() {
                dmax = dmax.max(ef.distance(a, b));
            }
        }
        assert_eq!(table.values[3][2], dmax);
    }

    #[test]
    fn second_order_table_is_monotone_in_both_budgets() {
        let space = SampleSpace::grid(&[(-1.5, 1.5), (-1.5, 1.5)], &[5, 5]).unwrap();
        let model = LayeredModel::new(vec![Layer::Tanh { dim: 2 }], None).unwrap();
        let values: Vec<DVector<f64>> = space
            .points()
            .iter()
            .map(|p| vec2((p[0] * 1.3).sin(), p[1].cos()))
            .collect();
        let ef = BoundEf::from_values(values).unwrap();
        let grid0 = [0.2, 0.6, 1.5, f64::INFINITY];
        let grid1 = [0.1, 0.5, 2.0, f64::INFINITY];
        let table = second_order_modulus(&model, 1, &ef, &space, &grid0, &grid1).unwrap();
        for i in 0..grid0.len() {
            for j in 0..grid1.len() {
                if i > 0 {
                    assert!(table.values[i][j] >= table.values[i - 1][j]);
                }
                if j > 0 {
                    assert!(table.values[i][j] >= table.values[i][j - 1]);
                }
            }
        }
    }

    #[test]
    fn consistency_propagation_through_a_scaling_layer() {
        let space = SampleSpace::grid(&[(-1.0, 1.0)], &[7]).unwrap();
        let model = LayeredModel::new(
            vec![
                Layer::Tanh { dim: 1 },
                Layer::Scale { dim: 1, factor: 2.0 },
            ],
            None,
        )
        .unwrap();
        let values: Vec<DVector<f64>> = space.points().iter().map(|p| vec1(p[0].sin())).collect();
        let ef = BoundEf::from_values(values).unwrap();
        let rep = check_consistency_propagation(&model, &ef, 1, 2, &space).unwrap();
        assert!(rep.pass, "violation {}", rep.max_violation);
        assert!((rep.lipschitz_product - 2.0).abs() < 1e-12);
        // the scaled lower curve dominates pointwise
        for &(eps, v) in rep.curve_upper.breakpoints() {
            assert!(v <= 2.0 * rep.curve_lower.value_at(eps) + 1e-12);
        }
    }

    #[test]
    fn explainability_propagation_through_contractions() {
        let space = SampleSpace::grid(&[(-2.0, 2.0)], &[9]).unwrap();
        let model = LayeredModel::new(
            vec![
                Layer::Affine {
                    weight: DMatrix::from_row_slice(1, 1, &[0.9]),
                    offset: vec1(0.3),
                },
                Layer::Tanh { dim: 1 },
            ],
            None,
        )
        .unwrap();
        let values: Vec<DVector<f64>> =
            space.points().iter().map(|p| vec1(p[0] * 0.5 + 1.0)).collect();
        let ef = BoundEf::from_values(values).unwrap();
        let rep = check_explainability_propagation(&model, &ef, 1, 2, &space).unwrap();
        assert!(rep.pass, "violation {}", rep.max_violation);
        assert!(rep.lipschitz_product <= 1.0 + 1e-12);
        // contraction case: the lower curve is dominated by the upper curve
        // at the same abscissa
        for &(eps, v) in rep.curve_lower.breakpoints() {
            assert!(v <= rep.curve_upper.value_at(eps) + 1e-12);
        }
    }

    #[test]
    fn propagation_holds_on_randomized_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for round in 0..20 {
            let space = SampleSpace::grid(&[(-1.0, 1.0), (-1.0, 1.0)], &[5, 5]).unwrap();
            let depth = rng.gen_range(2..=4);
            let mut layers = Vec::new();
            let mut dim = 2usize;
            for _ in 0..depth {
                match rng.gen_range(0..3) {
                    0 => {
                        let out = rng.gen_range(1..=3);
                        let data: Vec<f64> =
                            (0..out * dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
                        layers.push(Layer::Affine {
                            weight: DMatrix::from_row_slice(out, dim, &data),
                            offset: DVector::from_iterator(
                                out,
                                (0..out).map(|_| rng.gen_range(-0.5..0.5)),
                            ),
                        });
                        dim = out;
                    }
                    1 => layers.push(Layer::Tanh { dim }),
                    _ => layers.push(Layer::Scale {
                        dim,
                        factor: rng.gen_range(0.5..2.0),
                    }),
                }
            }
            let model = LayeredModel::new(layers, None).unwrap();
            let m = rng.gen_range(1..=2);
            let values: Vec<DVector<f64>> = (0..space.len())
                .map(|_| DVector::from_iterator(m, (0..m).map(|_| rng.gen_range(-1.0..1.0))))
                .collect();
            let ef = BoundEf::from_values(values).unwrap();
            let i = rng.gen_range(1..depth);
            let j = rng.gen_range(i + 1..=depth);
            let down = check_consistency_propagation(&model, &ef, i, j, &space).unwrap();
            assert!(down.pass, "round {round}: consistency violation {}", down.max_violation);
            let up = check_explainability_propagation(&model, &ef, i, j, &space).unwrap();
            assert!(up.pass, "round {round}: explainability violation {}", up.max_violation);
        }
    }

    fn shift_fixture() -> (LayeredModel, Arc<SampleSpace>) {
        let head = ArgmaxHead::new(vec![vec2(1.0, 0.0), vec2(0.0, 1.0)]).unwrap();
        let model = LayeredModel::new(
            vec![Layer::Affine {
                weight: DMatrix::identity(2, 2),
                offset: vec2(3.0, 0.0),
            }],
            Some(head),
        )
        .unwrap();
        let space = SampleSpace::grid(&[(-1.0, 1.0), (-1.0, 1.0)], &[20, 20]).unwrap();
        (model, space)
    }

    #[test]
    fn gradient_ef_check_on_the_affine_fixture() {
        let (model, space) = shift_fixture();
        let rep = check_gradient_ef_explainability(&model, &space, 1, 1.0).unwrap();
        assert!(rep.pass);
        assert!(rep.margin.min_pre_head_norm >= 2.0 - 1e-12);
        assert_eq!(rep.stability_violations, 0);
        assert_eq!(rep.slope, 0.0);
    }

    #[test]
    fn gradient_ef_check_on_a_tanh_fixture() {
        let head = ArgmaxHead::new(vec![vec2(1.0, 0.0), vec2(0.0, 1.0)]).unwrap();
        let model = LayeredModel::new(
            vec![
                Layer::Affine {
                    weight: DMatrix::identity(2, 2),
                    offset: vec2(3.0, 0.0),
                },
                Layer::Tanh { dim: 2 },
            ],
            Some(head),
        )
        .unwrap();
        let space = SampleSpace::grid(&[(-1.0, 1.0), (-1.0, 1.0)], &[10, 10]).unwrap();
        let rep = check_gradient_ef_explainability(&model, &space, 1, 0.5).unwrap();
        assert!(rep.pass, "slope {} vs bound {}", rep.slope, rep.constant_bound);
        assert!(rep.slope > 0.0 && rep.slope.is_finite());
    }

    #[test]
    fn gradient_ef_check_requires_the_margin() {
        let head = ArgmaxHead::new(vec![vec2(1.0, 0.0), vec2(1.0, 0.0)]).unwrap();
        let model = LayeredModel::new(
            vec![Layer::Affine {
                weight: DMatrix::identity(2, 2),
                offset: vec2(3.0, 0.0),
            }],
            Some(head),
        )
        .unwrap();
        let space = SampleSpace::grid(&[(-1.0, 1.0), (-1.0, 1.0)], &[4, 4]).unwrap();
        assert!(matches!(
            check_gradient_ef_explainability(&model, &space, 1, 1.0),
            Err(EfxError::Precondition(_))
        ));
    }

    fn quad_space() -> Arc<SampleSpace> {
        SampleSpace::uniform(
            (0..4)
                .map(|k| vec2((k >> 1) as f64, (k & 1) as f64))
                .collect(),
        )
        .unwrap()
    }

    /// Model whose label is decided by the first coordinate of a {0,1}^2
    /// input, mapped through 2 x1 - 1.
    fn first_coordinate_model() -> LayeredModel {
        let head = ArgmaxHead::new(vec![vec1(1.0), vec1(-1.0)]).unwrap();
        LayeredModel::new(
            vec![Layer::Affine {
                weight: DMatrix::from_row_slice(1, 2, &[2.0, 0.0]),
                offset: vec1(-1.0),
            }],
            Some(head),
        )
        .unwrap()
    }

    #[test]
    fn validity_of_label_and_constant_explanations() {
        let space = quad_space();
        let model = first_coordinate_model();
        let values: Vec<DVector<f64>> = space.points().iter().map(|p| vec1(p[0])).collect();
        let ef = BoundEf::from_values(values).unwrap();
        let rep = validity_level(&ef, &model, &space, 1e-6).unwrap();
        assert_eq!(rep.epsilon0, 0.0);
        assert_eq!(rep.loss_name, "zero_one");

        let constant = BoundEf::from_values(vec![vec1(1.0); 4]).unwrap();
        let rep = validity_level(&constant, &model, &space, 1e-6).unwrap();
        assert!((rep.epsilon0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn validity_of_unbalanced_labels_with_zero_budget_completeness() {
        // weights 0.5, 0.25, 0.125, 0.125 with the label determined by the
        // explanation: the best label-independent candidate guesses the
        // majority class
        let points: Vec<DVector<f64>> = (0..4).map(|k| vec1(k as f64)).collect();
        let space = SampleSpace::new(points, vec![0.5, 0.25, 0.125, 0.125]).unwrap();
        let g = RandomVariable::from_labels(&space, &[0u32, 1, 1, 1]).unwrap();
        let h = g.clone();
        let rep = completeness_level_rv(
            &g,
            &h,
            0.0,
            &CandidateFamily::Enumerated { codomain_size: 2 },
            1 << 20,
        )
        .unwrap();
        // admissible candidates are independent of g, hence of h; the best
        // constant guess errs with the minority mass
        assert!((rep.alpha_hat - 0.5).abs() < 1e-12);
    }

    #[test]
    fn completeness_on_the_two_bit_fixture() {
        let space = quad_space();
        let model = first_coordinate_model();
        let values: Vec<DVector<f64>> = space.points().iter().map(|p| vec1(p[0])).collect();
        let ef = BoundEf::from_values(values).unwrap();
        let family = CandidateFamily::Enumerated { codomain_size: 2 };
        let rep =
            completeness_level(&ef, &model, &space, 0.1, &family, 1e-6, 1 << 20).unwrap();
        assert_eq!(rep.family_size, 16);
        assert_eq!(rep.admissible_count, 6);
        assert!((rep.alpha_hat - 0.5).abs() < 1e-12);

        // a budget above the explanation entropy admits everything, and the
        // label itself becomes a candidate
        let rep =
            completeness_level(&ef, &model, &space, 1.5, &family, 1e-6, 1 << 20).unwrap();
        assert_eq!(rep.admissible_count, 16);
        assert_eq!(rep.alpha_hat, 0.0);
    }

    #[test]
    fn alpha_hat_never_increases_with_the_budget() {
        let space = quad_space();
        let model = first_coordinate_model();
        let values: Vec<DVector<f64>> = space.points().iter().map(|p| vec1(p[0])).collect();
        let ef = BoundEf::from_values(values).unwrap();
        let family = CandidateFamily::Enumerated { codomain_size: 2 };
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.05, 0.2, 0.5, 1.0, 2.0] {
            let rep = completeness_level(&ef, &model, &space, eps, &family, 1e-6, 1 << 20)
                .unwrap();
            assert!(rep.alpha_hat <= last + 1e-12);
            last = rep.alpha_hat;
        }
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let space = quad_space();
        let g = RandomVariable::from_labels(&space, &[0u32, 1, 2, 3]).unwrap();
        let res = completeness_level_rv(
            &g,
            &g,
            0.1,
            &CandidateFamily::Enumerated { codomain_size: 10 },
            100,
        );
        assert!(matches!(res, Err(EfxError::Resource(_))));
    }

    #[test]
    fn valid_implies_complete_on_the_fixture() {
        let space = quad_space();
        let model = first_coordinate_model();
        let values: Vec<DVector<f64>> = space.points().iter().map(|p| vec1(p[0])).collect();
        let ef = BoundEf::from_values(values).unwrap();
        let g_rv = ef.as_rv(&space, 1e-6).unwrap();
        let h_rv = label_rv(&model, &space).unwrap();
        let family = CandidateFamily::Enumerated { codomain_size: 2 };
        let rep =
            check_valid_implies_complete(&g_rv, &h_rv, 0.1, 0.01, &family, 1 << 20).unwrap();
        assert!(rep.applicable);
        // balanced labels make the bound collapse to its square root form
        let oracle = (2.0f64 - 0.1 - 2.0 * 0.01f64.sqrt()).sqrt() - 1.0;
        assert!((rep.alpha_bound - oracle).abs() < INFO_TOL);
        assert!((rep.alpha_bound - 0.303_840_481_040_529_8).abs() < 1e-9);
        assert!((rep.alpha_hat - 0.5).abs() < 1e-12);
        assert!(rep.pass);

        // a budget that eats the whole label entropy is out of hypothesis
        let rep =
            check_valid_implies_complete(&g_rv, &h_rv, 0.9, 0.01, &family, 1 << 20).unwrap();
        assert!(!rep.applicable);
        assert!(rep.pass);
    }

    #[test]
    fn equivalence_against_identity_and_zero_curves() {
        let space = SampleSpace::grid(&[(0.0, 1.0)], &[5]).unwrap();
        let model = identity_model(1);
        let ef = BoundEf::from_values(space.points().to_vec()).unwrap();
        let beta_hat = consistency_modulus(&model, 1, &ef, &space).unwrap();
        let gamma_hat = explainability_modulus(&model, 1, &ef, &space).unwrap();

        // the explanation equals the representation, so identity curves pass
        let beta = beta_hat.sample_function(|e| e).unwrap();
        let gamma = gamma_hat.sample_function(|e| e).unwrap();
        let rep = equivalence_report(&model, 1, &ef, &space, &beta, &gamma).unwrap();
        assert!(rep.pass);

        // the empirical curves dominate themselves
        let rep =
            equivalence_report(&model, 1, &ef, &space, &beta_hat, &gamma_hat).unwrap();
        assert!(rep.pass);

        // a zero gamma candidate fails against a non-constant explanation
        let zero = gamma_hat.sample_function(|_| 0.0).unwrap();
        let rep = equivalence_report(&model, 1, &ef, &space, &beta_hat, &zero).unwrap();
        assert!(!rep.pass && !rep.gamma_dominates);
    }

    #[test]
    fn explainability_duality_rescan() {
        // wherever gamma(eps) <= d, every pair with d_f <= eps has d_g <= d
        let space = SampleSpace::grid(&[(-1.0, 1.0)], &[6]).unwrap();
        let model = identity_model(1);
        let values: Vec<DVector<f64>> =
            space.points().iter().map(|p| vec1((2.0 * p[0]).tanh())).collect();
        let ef = BoundEf::from_values(values).unwrap();
        let gamma = explainability_modulus(&model, 1, &ef, &space).unwrap();
        let reps: Vec<_> = space.points().to_vec();
        for &(e_star, bound) in gamma.breakpoints() {
            for a in 0..space.len() {
                for b in a + 1..space.len() {
                    let df = (&reps[a] - &reps[b]).norm();
                    if df <= e_star {
                        assert!(ef.distance(a, b) <= bound + 1e-12);
                    }
                }
            }
        }
    }
}
