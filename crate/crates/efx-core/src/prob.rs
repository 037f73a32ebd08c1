//! Exact probability, entropy, and mutual information over finite sample
//! spaces.
//!
//! Everything here is computed from explicit weighted atoms, never estimated
//! from samples. All information quantities are in bits (base-2 logarithms)
//! with the convention `0 * log 0 = 0`. Probability mass is checked to
//! absolute tolerance [`MASS_TOL`]; derived information quantities carry a
//! slack of [`INFO_TOL`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{EfxError, Result};

/// Absolute tolerance for probability mass checks.
pub const MASS_TOL: f64 = 1e-12;
/// Slack for derived information quantities (entropies, mutual informations).
pub const INFO_TOL: f64 = 1e-9;

/// A finite set of distinct input vectors with one probability weight each.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpace {
    points: Vec<DVector<f64>>,
    weights: Vec<f64>,
    dim: usize,
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) => continue,
            Some(ord) => return ord,
            None => return Ordering::Equal, // unreachable for finite entries
        }
    }
    a.len().cmp(&b.len())
}

impl SampleSpace {
    /// Builds a space from explicit points and weights.
    ///
    /// Weights must be nonnegative and sum to 1 within [`MASS_TOL`]; points
    /// must be nonempty, of equal dimension, finite, and pairwise distinct.
    pub fn new(points: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Arc<Self>> {
        if points.is_empty() {
            return Err(EfxError::Structural("sample space must be nonempty".into()));
        }
        if points.len() != weights.len() {
            return Err(EfxError::Structural(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(EfxError::Structural(format!(
                    "point {} has dimension {} but point 0 has {}",
                    i,
                    p.len(),
                    dim
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(EfxError::Numeric(format!("point {i} has a non-finite entry")));
            }
        }
        let mut mass = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(EfxError::Numeric(format!("weight {i} is {w}")));
            }
            mass += w;
        }
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(EfxError::Numeric(format!(
                "weights sum to {mass}, expected 1 within {MASS_TOL}"
            )));
        }
        // Distinctness via a lexicographic sort of point indices.
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
        for w in order.windows(2) {
            if points[w[0]] == points[w[1]] {
                return Err(EfxError::Structural(format!(
                    "points {} and {} are identical",
                    w[0].min(w[1]),
                    w[0].max(w[1])
                )));
            }
        }
        Ok(Arc::new(SampleSpace { points, weights, dim }))
    }

    /// Uniformly weighted space over the given points.
    pub fn uniform(points: Vec<DVector<f64>>) -> Result<Arc<Self>> {
        let n = points.len();
        if n == 0 {
            return Err(EfxError::Structural("sample space must be nonempty".into()));
        }
        let w = 1.0 / n as f64;
        let mut weights = vec![w; n];
        // Absorb the rounding of 1/n so the mass check is exact.
        let partial: f64 = weights[..n - 1].iter().sum();
        weights[n - 1] = 1.0 - partial;
        SampleSpace::new(points, weights)
    }

    /// Uniform rectangular grid: `steps[d]` evenly spaced values across
    /// `ranges[d]` per coordinate, cartesian product over coordinates with
    /// the last coordinate varying fastest.
    pub fn grid(ranges: &[(f64, f64)], steps: &[usize]) -> Result<Arc<Self>> {
        if ranges.is_empty() || ranges.len() != steps.len() {
            return Err(EfxError::Structural(format!(
                "{} ranges but {} step counts",
                ranges.len(),
                steps.len()
            )));
        }
        let mut axes: Vec<Vec<f64>> = Vec::with_capacity(ranges.len());
        for (d, (&(lo, hi), &n)) in ranges.iter().zip(steps.iter()).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(EfxError::Domain(format!("bad range [{lo}, {hi}] in axis {d}")));
            }
            if n == 0 {
                return Err(EfxError::Domain(format!("axis {d} has zero steps")));
            }
            let axis = if n == 1 {
                vec![lo]
            } else {
                (0..n)
                    .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                    .collect()
            };
            axes.push(axis);
        }
        let total: usize = axes.iter().map(|a| a.len()).product();
        let mut points = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        loop {
            let p: Vec<f64> = idx.iter().zip(axes.iter()).map(|(&k, a)| a[k]).collect();
            points.push(DVector::from_vec(p));
            // odometer increment, last axis fastest
            let mut d = axes.len();
            loop {
                if d == 0 {
                    return SampleSpace::uniform(points);
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees nonempty
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &DVector<f64> {
        &self.points[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A total map from sample points to canonical discrete symbols.
///
/// Symbols are always the dense range `0..arity`, assigned by sorted order of
/// the raw labels the variable was built from, so two variables built from
/// equal label sequences compare equal.
#[derive(Debug, Clone)]
pub struct RandomVariable {
    space: Arc<SampleSpace>,
    values: Vec<u32>,
    arity: u32,
}

impl PartialEq for RandomVariable {
    fn eq(&self, other: &Self) -> bool {
        self.same_space(other) && self.values == other.values
    }
}

impl RandomVariable {
    /// Canonicalizes one raw label per point into a dense symbol range.
    pub fn from_labels<T: Ord + Clone>(space: &Arc<SampleSpace>, labels: &[T]) -> Result<Self> {
        if labels.len() != space.len() {
            return Err(EfxError::Structural(format!(
                "{} labels for a space of {} points",
                labels.len(),
                space.len()
            )));
        }
        let mut canon: BTreeMap<T, u32> = BTreeMap::new();
        for l in labels {
            let next = canon.len() as u32;
            canon.entry(l.clone()).or_insert(next);
        }
        // Re-index by sorted label order for a deterministic canonical form.
        let mut sorted: Vec<&T> = canon.keys().collect();
        sorted.sort();
        let index: BTreeMap<&T, u32> = sorted
            .iter()
            .enumerate()
            .map(|(i, l)| (*l, i as u32))
            .collect();
        let values = labels.iter().map(|l| index[l]).collect();
        Ok(RandomVariable {
            space: Arc::clone(space),
            values,
            arity: canon.len() as u32,
        })
    }

    /// The constant variable (a single symbol on every point).
    pub fn constant(space: &Arc<SampleSpace>) -> Self {
        RandomVariable {
            space: Arc::clone(space),
            values: vec![0; space.len()],
            arity: 1,
        }
    }

    pub fn space(&self) -> &Arc<SampleSpace> {
        &self.space
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn same_space(&self, other: &RandomVariable) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    /// Probability mass per symbol.
    pub fn distribution(&self) -> Vec<f64> {
        let mut dist = vec![0.0; self.arity as usize];
        for (i, &s) in self.values.iter().enumerate() {
            dist[s as usize] += self.space.weight(i);
        }
        dist
    }

    /// Pointwise relabeling through a symbol table.
    ///
    /// The table must be total on this variable's symbol set; the result is
    /// canonicalized again, so composing with the identity returns an equal
    /// variable.
    pub fn compose(&self, table: &BTreeMap<u32, u32>) -> Result<RandomVariable> {
        let mut mapped = Vec::with_capacity(self.values.len());
        for &s in &self.values {
            match table.get(&s) {
                Some(&t) => mapped.push(t),
                None => {
                    return Err(EfxError::Mapping(format!(
                        "symbol {s} present but not mapped"
                    )))
                }
            }
        }
        RandomVariable::from_labels(&self.space, &mapped)
    }

    /// Joint variable over canonical symbol pairs.
    pub fn pair(&self, other: &RandomVariable) -> Result<RandomVariable> {
        if !self.same_space(other) {
            return Err(EfxError::Structural(
                "pairing variables on different sample spaces".into(),
            ));
        }
        let labels: Vec<(u32, u32)> = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| (a, b))
            .collect();
        RandomVariable::from_labels(&self.space, &labels)
    }
}

/// Joint probability table of two variables, with cached marginals.
#[derive(Debug, Clone)]
pub struct JointTable {
    /// `probs[x][y]` is the joint mass of symbol x of the first variable and
    /// symbol y of the second.
    pub probs: Vec<Vec<f64>>,
    pub x_marginal: Vec<f64>,
    pub y_marginal: Vec<f64>,
}

impl JointTable {
    pub fn from_rvs(x: &RandomVariable, y: &RandomVariable) -> Result<Self> {
        if !x.same_space(y) {
            return Err(EfxError::Structural(
                "joint table of variables on different sample spaces".into(),
            ));
        }
        let (a, b) = (x.arity() as usize, y.arity() as usize);
        let mut probs = vec![vec![0.0; b]; a];
        for i in 0..x.space().len() {
            probs[x.values()[i] as usize][y.values()[i] as usize] += x.space().weight(i);
        }
        let x_marginal: Vec<f64> = probs.iter().map(|row| row.iter().sum()).collect();
        let mut y_marginal = vec![0.0; b];
        for row in &probs {
            for (j, &p) in row.iter().enumerate() {
                y_marginal[j] += p;
            }
        }
        Ok(JointTable {
            probs,
            x_marginal,
            y_marginal,
        })
    }

    /// Verifies nonnegativity, unit mass, and marginal consistency.
    pub fn check_invariants(&self) -> Result<()> {
        let mut mass = 0.0;
        for row in &self.probs {
            for &p in row {
                if p.is_nan() || p < 0.0 {
                    return Err(EfxError::Numeric(format!("negative joint mass {p}")));
                }
                mass += p;
            }
        }
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(EfxError::Numeric(format!("joint mass {mass} != 1")));
        }
        for (i, row) in self.probs.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - self.x_marginal[i]).abs() > MASS_TOL {
                return Err(EfxError::Numeric(format!("row {i} marginal mismatch")));
            }
        }
        for j in 0..self.y_marginal.len() {
            let s: f64 = self.probs.iter().map(|row| row[j]).sum();
            if (s - self.y_marginal[j]).abs() > MASS_TOL {
                return Err(EfxError::Numeric(format!("column {j} marginal mismatch")));
            }
        }
        Ok(())
    }
}

/// Binary entropy in bits, `H(p) = -p log p - (1-p) log(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EfxError::Domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(plogp(p) + plogp(1.0 - p))
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy of the induced symbol distribution, in bits.
pub fn entropy(x: &RandomVariable) -> f64 {
    x.distribution().iter().map(|&p| plogp(p)).sum()
}

/// Conditional entropy `H(X|Y) = H(X,Y) - H(Y)`.
pub fn conditional_entropy(x: &RandomVariable, y: &RandomVariable) -> Result<f64> {
    Ok(entropy(&x.pair(y)?) - entropy(y))
}

fn clamp_information(value: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -INFO_TOL {
        Ok(0.0)
    } else {
        Err(EfxError::Numeric(format!(
            "{what} evaluated to {value}, below the roundoff slack"
        )))
    }
}

/// Mutual information `I(X;Y) = H(X) + H(Y) - H(X,Y)` in bits.
///
/// Roundoff negatives within [`INFO_TOL`] clamp to zero; anything more
/// negative is treated as a bug and reported as a numeric error.
pub fn mutual_information(x: &RandomVariable, y: &RandomVariable) -> Result<f64> {
    if !x.same_space(y) {
        return Err(EfxError::Structural(
            "mutual information of variables on different sample spaces".into(),
        ));
    }
    let value = entropy(x) + entropy(y) - entropy(&x.pair(y)?);
    clamp_information(value, "I(X;Y)")
}

/// Conditional mutual information `I(X;Y|Z) = H(X,Z) + H(Y,Z) - H(Z) - H(X,Y,Z)`.
pub fn conditional_mutual_information(
    x: &RandomVariable,
    y: &RandomVariable,
    z: &RandomVariable,
) -> Result<f64> {
    if !x.same_space(y) || !x.same_space(z) {
        return Err(EfxError::Structural(
            "conditional mutual information needs one shared sample space".into(),
        ));
    }
    let xz = x.pair(z)?;
    let yz = y.pair(z)?;
    let xyz = x.pair(&yz)?;
    let value = entropy(&xz) + entropy(&yz) - entropy(z) - entropy(&xyz);
    clamp_information(value, "I(X;Y|Z)")
}

fn cell_index(v: f64, resolution: f64) -> Result<i64> {
    if !v.is_finite() {
        return Err(EfxError::Numeric(format!("non-finite vector entry {v}")));
    }
    let q = (v / resolution).floor();
    if q.abs() >= 9.0e18 {
        return Err(EfxError::Numeric(format!(
            "lattice index overflow for value {v} at resolution {resolution}"
        )));
    }
    Ok(q as i64)
}

/// Quantizes one real vector per sample point onto a lattice of cell size
/// `resolution` per coordinate, then canonicalizes the distinct cells into
/// symbols (lexicographic order of cell index vectors).
///
/// Values exactly on a lattice line stay with the cell they open, which is
/// what per-coordinate `floor(v / resolution)` produces deterministically.
pub fn quantize(
    space: &Arc<SampleSpace>,
    vectors: &[DVector<f64>],
    resolution: f64,
) -> Result<RandomVariable> {
    if resolution <= 0.0 || !resolution.is_finite() {
        return Err(EfxError::Domain(format!("resolution {resolution} must be positive")));
    }
    if vectors.len() != space.len() {
        return Err(EfxError::Structural(format!(
            "{} vectors for a space of {} points",
            vectors.len(),
            space.len()
        )));
    }
    let mut cells: Vec<Vec<i64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let cell = v
            .iter()
            .map(|&x| cell_index(x, resolution))
            .collect::<Result<Vec<i64>>>()?;
        cells.push(cell);
    }
    RandomVariable::from_labels(space, &cells)
}

/// Lattice representatives (cell midpoints) of the given vectors.
///
/// Quantizing the snapped vectors at the same resolution reproduces the same
/// cells, which makes quantization idempotent on snapped data.
pub fn snap(vectors: &[DVector<f64>], resolution: f64) -> Result<Vec<DVector<f64>>> {
    if resolution <= 0.0 || !resolution.is_finite() {
        return Err(EfxError::Domain(format!("resolution {resolution} must be positive")));
    }
    vectors
        .iter()
        .map(|v| {
            let snapped = v
                .iter()
                .map(|&x| cell_index(x, resolution).map(|c| (c as f64 + 0.5) * resolution))
                .collect::<Result<Vec<f64>>>()?;
            Ok(DVector::from_vec(snapped))
        })
        .collect()
}
