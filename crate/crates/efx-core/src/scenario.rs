//! Scenario files: the JSON surface through which a space, a model,
//! explanation functions, and a list of analyses are declared.
//!
//! Parsing is strict (unknown fields and analyses are rejected with their
//! location) and validation resolves every reference before anything runs.
//! Real numbers are accepted both as JSON numbers and as decimal strings.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::algebra::DecompositionTables;
use crate::ef::{bind, BoundEf, EfSpec, DEFAULT_RESOLUTION};
use crate::error::{EfxError, Result};
use crate::model::{ArgmaxHead, Layer, LayeredModel};
use crate::prob::SampleSpace;
use crate::report::Real;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub space: SpaceSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub efs: Vec<EfDecl>,
    pub analyses: Vec<AnalysisSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default)]
    pub points: Option<Vec<Vec<Real>>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Optional explicit weights; uniform when omitted.
    #[serde(default)]
    pub weights: Option<Vec<Real>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub ranges: Vec<(Real, Real)>,
    pub steps: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub head: Option<HeadSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Affine {
        weight: Vec<Vec<Real>>,
        offset: Vec<Real>,
    },
    Tanh {
        dim: usize,
    },
    Softplus {
        dim: usize,
    },
    Scaling {
        dim: usize,
        factor: Real,
    },
    Tabulated {
        in_dim: usize,
        out_dim: usize,
        inputs: Vec<Vec<Real>>,
        outputs: Vec<Vec<Real>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadSpec {
    pub class_vectors: Vec<Vec<Real>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EfDecl {
    Gradient { name: String },
    Tabulated { name: String, values: Vec<Vec<Real>> },
}

impl EfDecl {
    pub fn name(&self) -> &str {
        match self {
            EfDecl::Gradient { name } | EfDecl::Tabulated { name, .. } => name,
        }
    }
}

fn default_resolution() -> Real {
    Real(DEFAULT_RESOLUTION)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "analysis", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisSpec {
    /// Analytic Jacobians against finite differences on every sample point.
    JacobianCheck,
    MarginCheck {
        delta: Real,
    },
    ConsistencyModulus {
        layer: usize,
        ef: String,
    },
    ExplainabilityModulus {
        layer: usize,
        ef: String,
    },
    SecondOrderModulus {
        layer: usize,
        ef: String,
        eps0_grid: Vec<Real>,
        eps1_grid: Vec<Real>,
    },
    Lipschitz {
        from_layer: usize,
        to_layer: usize,
    },
    ConsistencyPropagation {
        ef: String,
        lower_layer: usize,
        upper_layer: usize,
    },
    ExplainabilityPropagation {
        ef: String,
        lower_layer: usize,
        upper_layer: usize,
    },
    GradientEfExplainability {
        split: usize,
        delta: Real,
    },
    Validity {
        ef: String,
        #[serde(default = "default_resolution")]
        resolution: Real,
        /// When present the analysis asserts the achieved level stays at or
        /// below this; otherwise it only reports.
        #[serde(default)]
        max_epsilon0: Option<Real>,
    },
    Completeness {
        ef: String,
        epsilon: Real,
        codomain_size: u32,
        #[serde(default = "default_resolution")]
        resolution: Real,
        #[serde(default)]
        min_alpha: Option<Real>,
    },
    ValidImpliesComplete {
        ef: String,
        epsilon: Real,
        epsilon0: Real,
        codomain_size: u32,
        #[serde(default = "default_resolution")]
        resolution: Real,
    },
    Equivalence {
        layer: usize,
        ef: String,
        beta: Vec<(Real, Real)>,
        gamma: Vec<(Real, Real)>,
    },
    Intersection {
        ef1: String,
        ef2: String,
        epsilon: Real,
        #[serde(default = "default_resolution")]
        resolution: Real,
    },
    VerifyDecomposition {
        ef1: String,
        ef2: String,
        epsilon: Real,
        decomposition: DecompositionTables,
        #[serde(default = "default_resolution")]
        resolution: Real,
    },
    IntersectionValidity {
        ef1: String,
        ef2: String,
        epsilon: Real,
        epsilon0: Real,
        alpha: Real,
        codomain_size: u32,
        #[serde(default = "default_resolution")]
        resolution: Real,
    },
    UnionInheritance {
        ef1: String,
        ef2: String,
        epsilon0: Real,
        epsilon1: Real,
        alpha: Real,
        codomain_size: u32,
        #[serde(default = "default_resolution")]
        resolution: Real,
    },
    IntersectionUniqueness {
        ef1: String,
        ef2: String,
        epsilon: Real,
        /// Optional second decomposition; when omitted the constructed one
        /// is compared against itself with reversed shared symbols.
        #[serde(default)]
        decomposition_b: Option<DecompositionTables>,
        #[serde(default = "default_resolution")]
        resolution: Real,
    },
}

impl AnalysisSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisSpec::JacobianCheck => "jacobian_check",
            AnalysisSpec::MarginCheck { .. } => "margin_check",
            AnalysisSpec::ConsistencyModulus { .. } => "consistency_modulus",
            AnalysisSpec::ExplainabilityModulus { .. } => "explainability_modulus",
            AnalysisSpec::SecondOrderModulus { .. } => "second_order_modulus",
            AnalysisSpec::Lipschitz { .. } => "lipschitz",
            AnalysisSpec::ConsistencyPropagation { .. } => "consistency_propagation",
            AnalysisSpec::ExplainabilityPropagation { .. } => "explainability_propagation",
            AnalysisSpec::GradientEfExplainability { .. } => "gradient_ef_explainability",
            AnalysisSpec::Validity { .. } => "validity",
            AnalysisSpec::Completeness { .. } => "completeness",
            AnalysisSpec::ValidImpliesComplete { .. } => "valid_implies_complete",
            AnalysisSpec::Equivalence { .. } => "equivalence",
            AnalysisSpec::Intersection { .. } => "intersection",
            AnalysisSpec::VerifyDecomposition { .. } => "verify_decomposition",
            AnalysisSpec::IntersectionValidity { .. } => "intersection_validity",
            AnalysisSpec::UnionInheritance { .. } => "union_inheritance",
            AnalysisSpec::IntersectionUniqueness { .. } => "intersection_uniqueness",
        }
    }
}

/// A scenario with every reference resolved and every object built.
pub struct ValidatedScenario {
    pub space: Arc<SampleSpace>,
    pub model: LayeredModel,
    pub efs: BTreeMap<String, BoundEf>,
    pub analyses: Vec<AnalysisSpec>,
    pub seed: Option<u64>,
}

pub fn parse_scenario(bytes: &[u8]) -> Result<ScenarioFile> {
    serde_json::from_slice(bytes).map_err(|e| {
        EfxError::Scenario(format!(
            "parse failure at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

fn to_vector(v: &[Real]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|r| r.0))
}

fn to_matrix(rows: &[Vec<Real>], what: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(EfxError::Scenario(format!("{what}: empty matrix")));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(EfxError::Scenario(format!("{what}: ragged or empty matrix rows")));
    }
    let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().map(|x| x.0)).collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &data))
}

fn build_space(spec: &SpaceSpec) -> Result<Arc<SampleSpace>> {
    let points: Vec<DVector<f64>> = match (&spec.points, &spec.grid) {
        (Some(points), None) => points.iter().map(|p| to_vector(p)).collect(),
        (None, Some(grid)) => {
            let ranges: Vec<(f64, f64)> =
                grid.ranges.iter().map(|&(lo, hi)| (lo.0, hi.0)).collect();
            let space = SampleSpace::grid(&ranges, &grid.steps)?;
            if spec.weights.is_none() {
                return Ok(space);
            }
            space.points().to_vec()
        }
        _ => {
            return Err(EfxError::Scenario(
                "space needs exactly one of `points` or `grid`".into(),
            ))
        }
    };
    match &spec.weights {
        Some(weights) => SampleSpace::new(points, weights.iter().map(|w| w.0).collect()),
        None => SampleSpace::uniform(points),
    }
}

fn build_layer(spec: &LayerSpec, index: usize) -> Result<Layer> {
    let what = format!("layer {index}");
    Ok(match spec {
        LayerSpec::Affine { weight, offset } => {
            let weight = to_matrix(weight, &what)?;
            if offset.len() != weight.nrows() {
                return Err(EfxError::Scenario(format!(
                    "{what}: offset length {} does not match {} rows",
                    offset.len(),
                    weight.nrows()
                )));
            }
            Layer::Affine {
                weight,
                offset: to_vector(offset),
            }
        }
        LayerSpec::Tanh { dim } => Layer::Tanh { dim: *dim },
        LayerSpec::Softplus { dim } => Layer::Softplus { dim: *dim },
        LayerSpec::Scaling { dim, factor } => Layer::Scale {
            dim: *dim,
            factor: factor.0,
        },
        LayerSpec::Tabulated {
            in_dim,
            out_dim,
            inputs,
            outputs,
        } => {
            if inputs.len() != outputs.len() {
                return Err(EfxError::Scenario(format!(
                    "{what}: {} inputs but {} outputs",
                    inputs.len(),
                    outputs.len()
                )));
            }
            let entries = inputs
                .iter()
                .zip(outputs.iter())
                .map(|(i, o)| {
                    if i.len() != *in_dim || o.len() != *out_dim {
                        return Err(EfxError::Scenario(format!(
                            "{what}: entry dimensions do not match in_dim/out_dim"
                        )));
                    }
                    Ok((to_vector(i), to_vector(o)))
                })
                .collect::<Result<Vec<_>>>()?;
            Layer::Tabulated {
                in_dim: *in_dim,
                out_dim: *out_dim,
                entries,
            }
        }
    })
}

/// Builds and cross-checks everything a run needs. Errors here are input
/// errors: unresolved references, bad dimensions, analyses whose parameters
/// fall outside the documented ranges.
pub fn validate(file: &ScenarioFile) -> Result<ValidatedScenario> {
    let space = build_space(&file.space)?;
    let layers = file
        .model
        .layers
        .iter()
        .enumerate()
        .map(|(i, spec)| build_layer(spec, i + 1))
        .collect::<Result<Vec<_>>>()?;
    let head = file
        .model
        .head
        .as_ref()
        .map(|h| ArgmaxHead::new(h.class_vectors.iter().map(|v| to_vector(v)).collect()))
        .transpose()?;
    let model = LayeredModel::new(layers, head)?;
    if model.in_dim() != space.dim() {
        return Err(EfxError::Scenario(format!(
            "model expects inputs of dimension {}, the space has {}",
            model.in_dim(),
            space.dim()
        )));
    }

    let mut efs = BTreeMap::new();
    for decl in &file.efs {
        if efs.contains_key(decl.name()) {
            return Err(EfxError::Scenario(format!(
                "duplicate explanation name `{}`",
                decl.name()
            )));
        }
        let spec = match decl {
            EfDecl::Gradient { .. } => EfSpec::Gradient,
            EfDecl::Tabulated { values, .. } => EfSpec::Tabulated {
                values: values.iter().map(|v| to_vector(v)).collect(),
            },
        };
        let bound = bind(&spec, &model, &space)
            .map_err(|e| EfxError::Scenario(format!("explanation `{}`: {e}", decl.name())))?;
        efs.insert(decl.name().to_string(), bound);
    }

    for (i, analysis) in file.analyses.iter().enumerate() {
        validate_analysis(analysis, i, &model, &efs)?;
    }
    Ok(ValidatedScenario {
        space,
        model,
        efs,
        analyses: file.analyses.clone(),
        seed: file.seed,
    })
}

fn validate_analysis(
    spec: &AnalysisSpec,
    index: usize,
    model: &LayeredModel,
    efs: &BTreeMap<String, BoundEf>,
) -> Result<()> {
    let fail = |msg: String| Err(EfxError::Scenario(format!("analysis {index}: {msg}")));
    let need_ef = |name: &str| -> Result<()> {
        if efs.contains_key(name) {
            Ok(())
        } else {
            fail(format!("unknown explanation `{name}`"))
        }
    };
    let need_layer = |layer: usize| -> Result<()> {
        if layer >= 1 && layer <= model.depth() {
            Ok(())
        } else {
            fail(format!(
                "layer {layer} out of range 1..={}",
                model.depth()
            ))
        }
    };
    let need_head = || -> Result<()> {
        if model.head().is_some() {
            Ok(())
        } else {
            fail(format!("`{}` needs a model with a head", spec.name()))
        }
    };
    let need_positive = |value: f64, what: &str| -> Result<()> {
        if value > 0.0 && value.is_finite() {
            Ok(())
        } else {
            fail(format!("{what} must be positive and finite, got {value}"))
        }
    };
    let need_budget = |value: f64, what: &str| -> Result<()> {
        if value >= 0.0 {
            Ok(())
        } else {
            fail(format!("{what} must be nonnegative, got {value}"))
        }
    };
    match spec {
        AnalysisSpec::JacobianCheck => Ok(()),
        AnalysisSpec::MarginCheck { delta } => {
            need_head()?;
            need_positive(delta.0, "delta")
        }
        AnalysisSpec::ConsistencyModulus { layer, ef }
        | AnalysisSpec::ExplainabilityModulus { layer, ef } => {
            need_layer(*layer)?;
            need_ef(ef)
        }
        AnalysisSpec::SecondOrderModulus {
            layer,
            ef,
            eps0_grid,
            eps1_grid,
        } => {
            need_layer(*layer)?;
            need_ef(ef)?;
            if eps0_grid.is_empty() || eps1_grid.is_empty() {
                return fail("budget grids must be nonempty".into());
            }
            if !model.has_jacobians() {
                return fail("second-order modulus needs Jacobians on every layer".into());
            }
            Ok(())
        }
        AnalysisSpec::Lipschitz {
            from_layer,
            to_layer,
        } => {
            if *from_layer >= *to_layer || *to_layer > model.depth() {
                return fail(format!(
                    "bad layer range ({from_layer}, {to_layer}] in a model of depth {}",
                    model.depth()
                ));
            }
            Ok(())
        }
        AnalysisSpec::ConsistencyPropagation {
            ef,
            lower_layer,
            upper_layer,
        }
        | AnalysisSpec::ExplainabilityPropagation {
            ef,
            lower_layer,
            upper_layer,
        } => {
            need_layer(*lower_layer)?;
            need_layer(*upper_layer)?;
            if lower_layer >= upper_layer {
                return fail("lower_layer must be strictly below upper_layer".into());
            }
            need_ef(ef)
        }
        AnalysisSpec::GradientEfExplainability { split, delta } => {
            need_head()?;
            need_layer(*split)?;
            if !model.has_jacobians() {
                return fail("gradient explanation check needs Jacobians on every layer".into());
            }
            need_positive(delta.0, "delta")
        }
        AnalysisSpec::Validity { ef, resolution, .. } => {
            need_head()?;
            need_ef(ef)?;
            need_positive(resolution.0, "resolution")
        }
        AnalysisSpec::Completeness {
            ef,
            epsilon,
            codomain_size,
            resolution,
            ..
        } => {
            need_head()?;
            need_ef(ef)?;
            need_budget(epsilon.0, "epsilon")?;
            need_positive(resolution.0, "resolution")?;
            if *codomain_size < 1 {
                return fail("codomain_size must be at least 1".into());
            }
            Ok(())
        }
        AnalysisSpec::ValidImpliesComplete {
            ef,
            epsilon,
            epsilon0,
            codomain_size,
            resolution,
        } => {
            need_head()?;
            need_ef(ef)?;
            need_budget(epsilon.0, "epsilon")?;
            need_positive(epsilon0.0, "epsilon0")?;
            need_positive(resolution.0, "resolution")?;
            if *codomain_size < 2 {
                return fail("codomain_size must be at least 2".into());
            }
            Ok(())
        }
        AnalysisSpec::Equivalence { layer, ef, .. } => {
            need_layer(*layer)?;
            need_ef(ef)
        }
        AnalysisSpec::Intersection {
            ef1,
            ef2,
            epsilon,
            resolution,
        } => {
            need_ef(ef1)?;
            need_ef(ef2)?;
            need_budget(epsilon.0, "epsilon")?;
            need_positive(resolution.0, "resolution")
        }
        AnalysisSpec::VerifyDecomposition {
            ef1,
            ef2,
            epsilon,
            resolution,
            ..
        } => {
            need_ef(ef1)?;
            need_ef(ef2)?;
            need_budget(epsilon.0, "epsilon")?;
            need_positive(resolution.0, "resolution")
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
            need_head()?;
            need_ef(ef1)?;
            need_ef(ef2)?;
            need_budget(epsilon.0, "epsilon")?;
            need_positive(epsilon0.0, "epsilon0")?;
            need_positive(alpha.0, "alpha")?;
            need_positive(resolution.0, "resolution")?;
            if *codomain_size < 1 {
                return fail("codomain_size must be at least 1".into());
            }
            Ok(())
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
            need_head()?;
            need_ef(ef1)?;
            need_ef(ef2)?;
            need_budget(epsilon0.0, "epsilon0")?;
            need_budget(epsilon1.0, "epsilon1")?;
            need_positive(alpha.0, "alpha")?;
            need_positive(resolution.0, "resolution")?;
            if *codomain_size < 1 {
                return fail("codomain_size must be at least 1".into());
            }
            Ok(())
        }
        AnalysisSpec::IntersectionUniqueness {
            ef1,
            ef2,
            epsilon,
            resolution,
            ..
        } => {
            need_ef(ef1)?;
            need_ef(ef2)?;
            need_budget(epsilon.0, "epsilon")?;
            need_positive(resolution.0, "resolution")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(analyses: &str) -> String {
        format!(
            r#"{{
              "space": {{"grid": {{"ranges": [[-1, 1], [-1, 1]], "steps": [3, 3]}}}},
              "model": {{
                "layers": [{{"kind": "affine", "weight": [[1, 0], [0, 1]], "offset": [3, 0]}}],
                "head": {{"class_vectors": [[1, 0], [0, 1]]}}
              }},
              "efs": [{{"kind": "gradient", "name": "g"}}],
              "analyses": [{analyses}]
            }}"#
        )
    }

    #[test]
    fn minimal_scenario_validates() {
        let text = minimal(r#"{"analysis": "margin_check", "delta": 1.0}"#);
        let file = parse_scenario(text.as_bytes()).unwrap();
        let validated = validate(&file).unwrap();
        assert_eq!(validated.space.len(), 9);
        assert_eq!(validated.efs.len(), 1);
        assert_eq!(validated.analyses.len(), 1);
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse_scenario(b"{ not json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "{msg}");

        let err = parse_scenario(minimal(r#"{"analysis": "bogus"}"#).as_bytes()).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn unresolved_references_are_input_errors() {
        let text = minimal(r#"{"analysis": "consistency_modulus", "layer": 1, "ef": "nope"}"#);
        let file = parse_scenario(text.as_bytes()).unwrap();
        assert!(matches!(validate(&file), Err(EfxError::Scenario(_))));

        let text = minimal(r#"{"analysis": "consistency_modulus", "layer": 7, "ef": "g"}"#);
        let file = parse_scenario(text.as_bytes()).unwrap();
        assert!(matches!(validate(&file), Err(EfxError::Scenario(_))));
    }

    #[test]
    fn reals_accept_numbers_and_strings() {
        let text = minimal(r#"{"analysis": "margin_check", "delta": "1.0000000000000000e0"}"#);
        let file = parse_scenario(text.as_bytes()).unwrap();
        let AnalysisSpec::MarginCheck { delta } = &file.analyses[0] else {
            panic!("wrong analysis");
        };
        assert_eq!(delta.0, 1.0);
    }

    #[test]
    fn tabulated_explanations_must_cover_the_space() {
        let text = r#"{
          "space": {"points": [[0], [1]]},
          "model": {"layers": [{"kind": "tanh", "dim": 1}]},
          "efs": [{"kind": "tabulated", "name": "g", "values": [[1.0]]}],
          "analyses": []
        }"#;
        let file = parse_scenario(text.as_bytes()).unwrap();
        assert!(matches!(validate(&file), Err(EfxError::Scenario(_))));
    }

    #[test]
    fn space_needs_exactly_one_source_of_points() {
        let text = r#"{
          "space": {},
          "model": {"layers": [{"kind": "tanh", "dim": 1}]},
          "analyses": []
        }"#;
        let file = parse_scenario(text.as_bytes()).unwrap();
        assert!(matches!(validate(&file), Err(EfxError::Scenario(_))));
    }
}
