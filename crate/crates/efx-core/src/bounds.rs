//! Fano-type information bounds and table decoders.
//!
//! Each checker evaluates both sides of one inequality on exact finite
//! distributions and reports whether the inequality holds within
//! [`crate::prob::INFO_TOL`]. The decoders are maximum-a-posteriori tables,
//! which are optimal under 0-1 loss and therefore realize every existential
//! decoder these bounds quantify over.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{EfxError, Result};
use crate::prob::{
    binary_entropy, entropy, mutual_information, JointTable, RandomVariable, INFO_TOL, MASS_TOL,
};

/// A table decoder from observed symbols to predicted symbols, together with
/// its exact 0-1 error probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoder {
    /// Prediction per observed symbol. Symbols that carry no probability
    /// mass are unreachable and have no entry.
    pub table: BTreeMap<u32, u32>,
    /// `P[X != t(Y)]` recomputed from the joint distribution.
    pub error_rate: f64,
}

impl Decoder {
    /// Recomputes the 0-1 error of this table against the joint of `x`
    /// (source) and `y` (observation).
    pub fn error_against(&self, y: &RandomVariable, x: &RandomVariable) -> Result<f64> {
        let joint = JointTable::from_rvs(x, y)?;
        let mut correct = 0.0;
        for (j, &my) in self.y_mass(&joint).iter().enumerate() {
            if my <= 0.0 {
                continue;
            }
            match self.table.get(&(j as u32)) {
                Some(&pred) => correct += joint.probs[pred as usize][j],
                None => {
                    return Err(EfxError::Structural(format!(
                        "decoder has no entry for observed symbol {j} with mass {my}"
                    )))
                }
            }
        }
        Ok(1.0 - correct)
    }

    fn y_mass<'a>(&self, joint: &'a JointTable) -> &'a [f64] {
        &joint.y_marginal
    }
}

/// One evaluated inequality: both sides, the verdict, and the decoder that
/// witnessed it when one was constructed.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub witness: Option<Decoder>,
}

/// Maximum-a-posteriori decoder predicting `x` from `y`.
///
/// For every observed symbol of `y` with positive mass the prediction is the
/// source symbol maximizing the joint mass, ties broken toward the smallest
/// canonical symbol. No decoder has a strictly lower 0-1 error.
pub fn map_decoder(y: &RandomVariable, x: &RandomVariable) -> Result<Decoder> {
    let joint = JointTable::from_rvs(x, y)?;
    let mut table = BTreeMap::new();
    let mut correct = 0.0;
    for j in 0..y.arity() as usize {
        if joint.y_marginal[j] <= 0.0 {
            continue; // unreachable observation
        }
        let mut best = 0usize;
        for i in 1..x.arity() as usize {
            if joint.probs[i][j] > joint.probs[best][j] {
                best = i;
            }
        }
        table.insert(j as u32, best as u32);
        correct += joint.probs[best][j];
    }
    Ok(Decoder {
        table,
        error_rate: 1.0 - correct,
    })
}

/// Exhaustively scores every decoder table from `y` symbols to `x` symbols
/// and returns the minimum achievable 0-1 error.
///
/// This is the independent oracle for decoder optimality; it never consults
/// [`map_decoder`]. The enumeration size `arity(x) ^ arity(y)` must stay
/// within `cap`.
pub fn exhaustive_best_decoder_error(
    y: &RandomVariable,
    x: &RandomVariable,
    cap: u64,
) -> Result<f64> {
    let joint = JointTable::from_rvs(x, y)?;
    let (a, b) = (x.arity() as u64, y.arity() as u64);
    let count = a
        .checked_pow(b as u32)
        .filter(|&c| c <= cap)
        .ok_or_else(|| {
            EfxError::Resource(format!(
                "decoder enumeration {a}^{b} exceeds cap {cap}"
            ))
        })?;
    let mut best = f64::INFINITY;
    for code in 0..count {
        let mut c = code;
        let mut correct = 0.0;
        for j in 0..b as usize {
            let pred = (c % a) as usize;
            c /= a;
            correct += joint.probs[pred][j];
        }
        let err = 1.0 - correct;
        if err < best {
            best = err;
        }
    }
    Ok(best)
}

fn check_decoder_freshness(
    decoder: &Decoder,
    y: &RandomVariable,
    x: &RandomVariable,
) -> Result<f64> {
    let recomputed = decoder.error_against(y, x)?;
    if (recomputed - decoder.error_rate).abs() > MASS_TOL {
        return Err(EfxError::Numeric(format!(
            "decoder stores error {} but the joint gives {}",
            decoder.error_rate, recomputed
        )));
    }
    Ok(recomputed)
}

/// Fano-type lower bound `I(X;Y) >= q H(X) - H(q)` for a decoder with success
/// probability `q = 1 - error >= 1/2`.
pub fn check_fano_lower(
    x: &RandomVariable,
    y: &RandomVariable,
    decoder: &Decoder,
) -> Result<BoundReport> {
    let err = check_decoder_freshness(decoder, y, x)?;
    let q = 1.0 - err;
    if q < 0.5 - MASS_TOL {
        return Err(EfxError::Precondition(format!(
            "decoder success probability {q} is below 1/2; the bound does not apply"
        )));
    }
    let lhs = mutual_information(x, y)?;
    let rhs = q * entropy(x) - binary_entropy(q.clamp(0.0, 1.0))?;
    Ok(BoundReport {
        bound_name: "fano_lower".into(),
        lhs,
        rhs,
        satisfied: lhs >= rhs - INFO_TOL,
        witness: Some(decoder.clone()),
    })
}

/// Stability of mutual information under swapping one binary variable for
/// another: `|I(X;Y) - I(X;Z)| <= H(P[Y != Z])`.
pub fn check_mi_stability(
    x: &RandomVariable,
    y: &RandomVariable,
    z: &RandomVariable,
) -> Result<BoundReport> {
    if y.arity() > 2 || z.arity() > 2 {
        return Err(EfxError::Precondition(format!(
            "stability bound needs binary variables, got arities {} and {}",
            y.arity(),
            z.arity()
        )));
    }
    if !y.same_space(z) || !x.same_space(y) {
        return Err(EfxError::Structural(
            "stability bound needs one shared sample space".into(),
        ));
    }
    let lhs = (mutual_information(x, y)? - mutual_information(x, z)?).abs();
    let p_neq: f64 = (0..y.space().len())
        .filter(|&i| y.values()[i] != z.values()[i])
        .map(|i| y.space().weight(i))
        .sum();
    let rhs = binary_entropy(p_neq.clamp(0.0, 1.0))?;
    Ok(BoundReport {
        bound_name: "mi_stability".into(),
        lhs,
        rhs,
        satisfied: lhs <= rhs + INFO_TOL,
        witness: None,
    })
}

/// Square-root upper bound on binary entropy: `H(p) <= 2 sqrt(p (1-p))`.
pub fn check_entropy_upper(p: f64) -> Result<BoundReport> {
    let lhs = binary_entropy(p)?;
    let rhs = 2.0 * (p * (1.0 - p)).sqrt();
    Ok(BoundReport {
        bound_name: "entropy_upper".into(),
        lhs,
        rhs,
        satisfied: lhs <= rhs + INFO_TOL,
        witness: None,
    })
}

/// Converse decoding bound: some decoder achieves
/// `P[X != t(Y)] <= 1 - 2^(I(X;Y) - H(X))`; the constructed MAP decoder can
/// only do better.
pub fn check_fano_converse(
    x: &RandomVariable,
    y: &RandomVariable,
) -> Result<(Decoder, BoundReport)> {
    let decoder = map_decoder(y, x)?;
    let lhs = decoder.error_rate;
    let rhs = 1.0 - (mutual_information(x, y)? - entropy(x)).exp2();
    let report = BoundReport {
        bound_name: "fano_converse".into(),
        lhs,
        rhs,
        satisfied: lhs <= rhs + INFO_TOL,
        witness: Some(decoder.clone()),
    };
    Ok((decoder, report))
}
