//! Layered models over finite sample spaces.
//!
//! A model is a chain of layers, optionally topped by an argmax head over
//! linear class scores. Layers expose exact evaluation and, where available,
//! analytic Jacobians; prefix Jacobians come from the chain rule and are
//! validated against central finite differences. Lipschitz constants are the
//! realized maxima over the finite domain, which makes the propagation
//! inequalities provable on that domain rather than merely sampled.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{EfxError, Result};
use crate::prob::SampleSpace;

/// Central finite difference step used by Jacobian validation.
pub const FD_STEP: f64 = 1e-5;
/// Relative tolerance for analytic-vs-numeric Jacobian agreement.
pub const FD_REL_TOL: f64 = 1e-4;

/// One layer of a model.
#[derive(Debug, Clone)]
pub enum Layer {
    /// `u -> W u + b`.
    Affine { weight: DMatrix<f64>, offset: DVector<f64> },
    /// Elementwise hyperbolic tangent.
    Tanh { dim: usize },
    /// Elementwise softplus `ln(1 + e^u)`.
    Softplus { dim: usize },
    /// Elementwise multiplication by a scalar factor.
    Scale { dim: usize, factor: f64 },
    /// Explicit input/output pairs; carries no Jacobian.
    Tabulated {
        in_dim: usize,
        out_dim: usize,
        entries: Vec<(DVector<f64>, DVector<f64>)>,
    },
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        match self {
            Layer::Affine { weight, .. } => weight.ncols(),
            Layer::Tanh { dim } | Layer::Softplus { dim } | Layer::Scale { dim, .. } => *dim,
            Layer::Tabulated { in_dim, .. } => *in_dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Layer::Affine { weight, .. } => weight.nrows(),
            Layer::Tanh { dim } | Layer::Softplus { dim } | Layer::Scale { dim, .. } => *dim,
            Layer::Tabulated { out_dim, .. } => *out_dim,
        }
    }

    pub fn has_jacobian(&self) -> bool {
        !matches!(self, Layer::Tabulated { .. })
    }

    pub fn eval(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.in_dim() {
            return Err(EfxError::Structural(format!(
                "layer expects dimension {}, got {}",
                self.in_dim(),
                u.len()
            )));
        }
        match self {
            Layer::Affine { weight, offset } => Ok(weight * u + offset),
            Layer::Tanh { .. } => Ok(u.map(f64::tanh)),
            Layer::Softplus { .. } => Ok(u.map(softplus)),
            Layer::Scale { factor, .. } => Ok(u * *factor),
            Layer::Tabulated { entries, .. } => entries
                .iter()
                .find(|(input, _)| input == u)
                .map(|(_, output)| output.clone())
                .ok_or_else(|| {
                    EfxError::Mapping(format!(
                        "tabulated layer has no entry for input {:?}",
                        u.as_slice()
                    ))
                }),
        }
    }

    /// Analytic Jacobian at `u`, if this layer kind supports one.
    pub fn jacobian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        if u.len() != self.in_dim() {
            return Err(EfxError::Structural(format!(
                "layer expects dimension {}, got {}",
                self.in_dim(),
                u.len()
            )));
        }
        match self {
            Layer::Affine { weight, .. } => Ok(weight.clone()),
            Layer::Tanh { dim } => {
                Ok(DMatrix::from_diagonal(&DVector::from_iterator(
                    *dim,
                    u.iter().map(|&x| 1.0 - x.tanh().powi(2)),
                )))
            }
            Layer::Softplus { dim } => Ok(DMatrix::from_diagonal(&DVector::from_iterator(
                *dim,
                u.iter().map(|&x| sigmoid(x)),
            ))),
            Layer::Scale { dim, factor } => Ok(DMatrix::identity(*dim, *dim) * *factor),
            Layer::Tabulated { .. } => Err(EfxError::Capability(
                "tabulated layers carry no Jacobian".into(),
            )),
        }
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Linear class scores with argmax decision.
#[derive(Debug, Clone)]
pub struct ArgmaxHead {
    /// One score vector per class; scores are inner products with the
    /// pre-head representation.
    pub class_vectors: Vec<DVector<f64>>,
}

impl ArgmaxHead {
    pub fn new(class_vectors: Vec<DVector<f64>>) -> Result<Self> {
        if class_vectors.is_empty() {
            return Err(EfxError::Structural("head needs at least one class".into()));
        }
        let d = class_vectors[0].len();
        if class_vectors.iter().any(|m| m.len() != d) {
            return Err(EfxError::Structural(
                "class vectors must share one dimension".into(),
            ));
        }
        Ok(ArgmaxHead { class_vectors })
    }

    pub fn dim(&self) -> usize {
        self.class_vectors[0].len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_vectors.len()
    }

    /// Smallest pairwise distance between class vectors.
    pub fn min_class_gap(&self) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..self.class_vectors.len() {
            for j in i + 1..self.class_vectors.len() {
                min = min.min((&self.class_vectors[i] - &self.class_vectors[j]).norm());
            }
        }
        min
    }

    pub fn max_class_norm(&self) -> f64 {
        self.class_vectors
            .iter()
            .map(|m| m.norm())
            .fold(0.0, f64::max)
    }
}

/// Composition of layers with an optional argmax head.
#[derive(Debug, Clone)]
pub struct LayeredModel {
    layers: Vec<Layer>,
    head: Option<ArgmaxHead>,
}

/// Per-layer realized Lipschitz constants over a layer range.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzEstimate {
    /// First layer of the estimated range (1-based).
    pub from_layer: usize,
    /// Last layer of the estimated range (inclusive).
    pub to_layer: usize,
    pub per_layer: Vec<f64>,
    pub product: f64,
}

/// Result of the margin and separation checks a head must satisfy before
/// label-stability arguments apply.
#[derive(Debug, Clone, Serialize)]
pub struct MarginReport {
    pub delta: f64,
    pub min_pre_head_norm: f64,
    pub min_class_gap: f64,
    /// Smallest gap between the best and second best class score over the
    /// sample points; positive means every decision is tie free.
    pub min_score_gap: f64,
    pub pass: bool,
}

impl LayeredModel {
    pub fn new(layers: Vec<Layer>, head: Option<ArgmaxHead>) -> Result<Self> {
        if layers.is_empty() {
            return Err(EfxError::Structural("model needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(EfxError::Structural(format!(
                    "layer output dimension {} does not chain into input dimension {}",
                    w[0].out_dim(),
                    w[1].in_dim()
                )));
            }
        }
        if let Some(h) = &head {
            let d = layers.last().unwrap().out_dim();
            if h.dim() != d {
                return Err(EfxError::Structural(format!(
                    "head dimension {} does not match final layer output {}",
                    h.dim(),
                    d
                )));
            }
        }
        Ok(LayeredModel { layers, head })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn head(&self) -> Option<&ArgmaxHead> {
        self.head.as_ref()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn has_jacobians(&self) -> bool {
        self.layers.iter().all(Layer::has_jacobian)
    }

    /// Output of the first `i` layers; `i = 0` is the input itself.
    pub fn representation_at(&self, i: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        if i > self.depth() {
            return Err(EfxError::Structural(format!(
                "layer index {i} out of range 0..={}",
                self.depth()
            )));
        }
        self.segment_eval(0, i, x)
    }

    /// Pre-head representation (all layers applied).
    pub fn pre_head(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.representation_at(self.depth(), x)
    }

    /// Applies layers `from+1 ..= to` to `u`; an empty range is the identity.
    pub fn segment_eval(&self, from: usize, to: usize, u: &DVector<f64>) -> Result<DVector<f64>> {
        if from > to || to > self.depth() {
            return Err(EfxError::Structural(format!(
                "bad layer range ({from}, {to}] in a model of depth {}",
                self.depth()
            )));
        }
        let mut v = u.clone();
        for layer in &self.layers[from..to] {
            v = layer.eval(&v)?;
        }
        Ok(v)
    }

    /// Chain-rule Jacobian of layers `from+1 ..= to` at segment input `u`.
    pub fn segment_jacobian(&self, from: usize, to: usize, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        if from > to || to > self.depth() {
            return Err(EfxError::Structural(format!(
                "bad layer range ({from}, {to}] in a model of depth {}",
                self.depth()
            )));
        }
        let dim = if from == to {
            u.len()
        } else {
            self.layers[from].in_dim()
        };
        let mut jac = DMatrix::identity(dim, dim);
        let mut v = u.clone();
        for layer in &self.layers[from..to] {
            jac = layer.jacobian(&v)? * jac;
            v = layer.eval(&v)?;
        }
        Ok(jac)
    }

    /// Jacobian of the first `i` layers at input `x`.
    pub fn prefix_jacobian(&self, i: usize, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.segment_jacobian(0, i, x)
    }

    /// Class label in `1..=K` by argmax of the class scores, ties broken
    /// toward the smallest index.
    pub fn label(&self, x: &DVector<f64>) -> Result<usize> {
        let head = self
            .head
            .as_ref()
            .ok_or_else(|| EfxError::Capability("model has no argmax head".into()))?;
        let p = self.pre_head(x)?;
        let mut best = 0usize;
        let mut best_score = head.class_vectors[0].dot(&p);
        for (i, m) in head.class_vectors.iter().enumerate().skip(1) {
            let s = m.dot(&p);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        Ok(best + 1)
    }

    /// Labels on every sample point.
    pub fn labels(&self, space: &SampleSpace) -> Result<Vec<usize>> {
        space.points().iter().map(|x| self.label(x)).collect()
    }

    /// Per-point representations at every depth `0..=k`, computed once.
    pub fn representations(&self, space: &SampleSpace) -> Result<Vec<Vec<DVector<f64>>>> {
        let mut reps: Vec<Vec<DVector<f64>>> = Vec::with_capacity(self.depth() + 1);
        reps.push(space.points().to_vec());
        for (r, layer) in self.layers.iter().enumerate() {
            let next = reps[r]
                .iter()
                .map(|u| layer.eval(u))
                .collect::<Result<Vec<_>>>()?;
            reps.push(next);
        }
        Ok(reps)
    }

    /// Realized Lipschitz constants of layers `from+1 ..= to` on the inputs
    /// each layer actually sees from the sample space.
    ///
    /// Each constant is exact for the restriction of the layer to its
    /// realized inputs and a lower bound of any global constant.
    pub fn lipschitz_estimate(
        &self,
        from: usize,
        to: usize,
        space: &SampleSpace,
    ) -> Result<LipschitzEstimate> {
        if from >= to || to > self.depth() {
            return Err(EfxError::Structural(format!(
                "bad layer range ({from}, {to}] in a model of depth {}",
                self.depth()
            )));
        }
        if space.len() < 2 {
            return Err(EfxError::Degenerate(
                "lipschitz estimation needs at least two sample points".into(),
            ));
        }
        let reps = self.representations(space)?;
        let mut per_layer = Vec::with_capacity(to - from);
        for r in from..to {
            let inputs = &reps[r];
            let outputs = &reps[r + 1];
            let mut ratio_max: f64 = 0.0;
            let mut distinct = false;
            for a in 0..inputs.len() {
                for b in a + 1..inputs.len() {
                    let din = (&inputs[a] - &inputs[b]).norm();
                    if din > 0.0 {
                        distinct = true;
                        let dout = (&outputs[a] - &outputs[b]).norm();
                        ratio_max = ratio_max.max(dout / din);
                    }
                }
            }
            if !distinct {
                return Err(EfxError::Degenerate(format!(
                    "all realized inputs of layer {} are identical",
                    r + 1
                )));
            }
            per_layer.push(ratio_max);
        }
        let product = per_layer.iter().product();
        Ok(LipschitzEstimate {
            from_layer: from + 1,
            to_layer: to,
            per_layer,
            product,
        })
    }

    /// Verifies the pre-head norm floor, class vector separation, and tie
    /// freeness of the argmax decision over the sample points.
    pub fn margin_check(&self, space: &SampleSpace, delta: f64) -> Result<MarginReport> {
        let head = self
            .head
            .as_ref()
            .ok_or_else(|| EfxError::Capability("margin check needs an argmax head".into()))?;
        let mut min_norm = f64::INFINITY;
        let mut min_score_gap = f64::INFINITY;
        for x in space.points() {
            let p = self.pre_head(x)?;
            min_norm = min_norm.min(p.norm());
            if head.num_classes() >= 2 {
                let mut scores: Vec<f64> =
                    head.class_vectors.iter().map(|m| m.dot(&p)).collect();
                scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
                min_score_gap = min_score_gap.min(scores[0] - scores[1]);
            }
        }
        let min_class_gap = head.min_class_gap();
        let pass = min_norm >= delta && min_class_gap > 0.0 && min_score_gap > 0.0;
        Ok(MarginReport {
            delta,
            min_pre_head_norm: min_norm,
            min_class_gap,
            min_score_gap,
            pass,
        })
    }

    /// Checks every analytic Jacobian (per layer at realized inputs and per
    /// prefix at sample points) against central finite differences.
    pub fn validate_jacobians(&self, space: &SampleSpace) -> Result<()> {
        let reps = self.representations(space)?;
        for (r, layer) in self.layers.iter().enumerate() {
            if !layer.has_jacobian() {
                continue;
            }
            for u in &reps[r] {
                let analytic = layer.jacobian(u)?;
                let numeric = fd_jacobian(|v| layer.eval(v), u, layer.out_dim())?;
                check_jacobian_agreement(&analytic, &numeric, &format!("layer {}", r + 1))?;
            }
        }
        if self.has_jacobians() {
            for x in space.points() {
                for i in 1..=self.depth() {
                    let analytic = self.prefix_jacobian(i, x)?;
                    let numeric = fd_jacobian(
                        |v| self.representation_at(i, v),
                        x,
                        self.layers[i - 1].out_dim(),
                    )?;
                    check_jacobian_agreement(&analytic, &numeric, &format!("prefix {i}"))?;
                }
            }
        }
        Ok(())
    }
}

/// Central finite difference Jacobian of `f` at `x`.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, out_dim: usize) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut jac = DMatrix::zeros(out_dim, x.len());
    for c in 0..x.len() {
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[c] += FD_STEP;
        lo[c] -= FD_STEP;
        let dcol = (f(&hi)? - f(&lo)?) / (2.0 * FD_STEP);
        jac.set_column(c, &dcol);
    }
    Ok(jac)
}

fn check_jacobian_agreement(
    analytic: &DMatrix<f64>,
    numeric: &DMatrix<f64>,
    what: &str,
) -> Result<()> {
    let diff = (analytic - numeric).norm();
    let scale = 1.0 + analytic.norm();
    if diff > FD_REL_TOL * scale {
        return Err(EfxError::Numeric(format!(
            "{what} Jacobian disagrees with finite differences: |diff| = {diff:.3e}, scale = {scale:.3e}"
        )));
    }
    Ok(())
}
