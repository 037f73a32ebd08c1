//! Intersection and union of explanation variables.
//!
//! The constructive intersection is the common-part decomposition: connect
//! symbols of the two variables whenever they co-occur on a sample point,
//! take connected components of that bipartite graph as the shared variable,
//! and index each symbol inside its component as the private remainder. The
//! recodings `r1`, `r2` are bijective by construction; the cross informations
//! they leave behind are measured exactly, never assumed. For block
//! structured joints the construction is exact at a zero budget.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::map_decoder;
use crate::checkers::{completeness_level_rv, validity_level_rv, CandidateFamily};
use crate::error::{EfxError, Result};
use crate::prob::{entropy, mutual_information, RandomVariable, INFO_TOL, MASS_TOL};

/// A decomposition of two explanation variables into a shared part and two
/// private parts through bijective recodings.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub u: RandomVariable,
    pub e1: RandomVariable,
    pub e2: RandomVariable,
    /// First variable's symbol to its (private, shared) pair.
    pub r1: BTreeMap<u32, (u32, u32)>,
    /// Second variable's symbol to its (private, shared) pair.
    pub r2: BTreeMap<u32, (u32, u32)>,
    /// `max(I(e1; g2), I(e2; g1))`, recomputed exactly.
    pub achieved_epsilon: f64,
    g1: RandomVariable,
    g2: RandomVariable,
}

/// Serializable form of a decomposition (symbol tables as explicit maps).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionTables {
    pub u: Vec<u32>,
    pub e1: Vec<u32>,
    pub e2: Vec<u32>,
    pub r1: BTreeMap<u32, (u32, u32)>,
    pub r2: BTreeMap<u32, (u32, u32)>,
}

impl Decomposition {
    pub fn g1(&self) -> &RandomVariable {
        &self.g1
    }

    pub fn g2(&self) -> &RandomVariable {
        &self.g2
    }

    pub fn tables(&self) -> DecompositionTables {
        DecompositionTables {
            u: self.u.values().to_vec(),
            e1: self.e1.values().to_vec(),
            e2: self.e2.values().to_vec(),
            r1: self.r1.clone(),
            r2: self.r2.clone(),
        }
    }

    /// Rebuilds a decomposition from explicit tables, recomputing the
    /// achieved cross information.
    pub fn from_tables(
        tables: &DecompositionTables,
        g1: &RandomVariable,
        g2: &RandomVariable,
    ) -> Result<Self> {
        if !g1.same_space(g2) {
            return Err(EfxError::Structural(
                "decomposition inputs live on different sample spaces".into(),
            ));
        }
        let space = g1.space();
        let u = RandomVariable::from_labels(space, &tables.u)?;
        let e1 = RandomVariable::from_labels(space, &tables.e1)?;
        let e2 = RandomVariable::from_labels(space, &tables.e2)?;
        if u.values() != tables.u || e1.values() != tables.e1 || e2.values() != tables.e2 {
            return Err(EfxError::Structural(
                "decomposition symbols must already be canonical (dense from zero)".into(),
            ));
        }
        let achieved_epsilon =
            mutual_information(&e1, g2)?.max(mutual_information(&e2, g1)?);
        Ok(Decomposition {
            u,
            e1,
            e2,
            r1: tables.r1.clone(),
            r2: tables.r2.clone(),
            achieved_epsilon,
            g1: g1.clone(),
            g2: g2.clone(),
        })
    }

    /// Relabels the shared variable through a permutation of its symbols,
    /// keeping the recodings pointwise consistent.
    pub fn permute_u_symbols(&self, perm: &[u32]) -> Result<Decomposition> {
        let arity = self.u.arity() as usize;
        if perm.len() != arity {
            return Err(EfxError::Structural(format!(
                "permutation of length {} for {} shared symbols",
                perm.len(),
                arity
            )));
        }
        let mut seen = vec![false; arity];
        for &p in perm {
            if (p as usize) >= arity || seen[p as usize] {
                return Err(EfxError::Structural("not a permutation".into()));
            }
            seen[p as usize] = true;
        }
        let relabeled: Vec<u32> = self.u.values().iter().map(|&s| perm[s as usize]).collect();
        let u = RandomVariable::from_labels(self.u.space(), &relabeled)?;
        let remap = |table: &BTreeMap<u32, (u32, u32)>| {
            table
                .iter()
                .map(|(&g, &(e, us))| (g, (e, perm[us as usize])))
                .collect::<BTreeMap<_, _>>()
        };
        Ok(Decomposition {
            u,
            e1: self.e1.clone(),
            e2: self.e2.clone(),
            r1: remap(&self.r1),
            r2: remap(&self.r2),
            achieved_epsilon: self.achieved_epsilon,
            g1: self.g1.clone(),
            g2: self.g2.clone(),
        })
    }
}

/// Per-symbol placement: (component id, index of the symbol inside its
/// component).
type SymbolPlacement = Vec<(u32, u32)>;

/// Connected components of the symbol co-occurrence graph.
///
/// Returns the placement of each variable's symbols, with components
/// numbered by their smallest first-variable symbol and within-component
/// indices by canonical symbol order.
fn co_occurrence_components(
    g1: &RandomVariable,
    g2: &RandomVariable,
) -> (SymbolPlacement, SymbolPlacement) {
    let (a, b) = (g1.arity() as usize, g2.arity() as usize);
    // union-find over a + b vertices: first the g1 symbols, then the g2 ones
    let mut parent: Vec<usize> = (0..a + b).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for i in 0..g1.space().len() {
        let x = g1.values()[i] as usize;
        let y = g2.values()[i] as usize + a;
        let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
        if rx != ry {
            parent[rx.max(ry)] = rx.min(ry);
        }
    }
    // canonical component ids in order of the smallest root
    let mut roots: Vec<usize> = (0..a + b).map(|v| find(&mut parent, v)).collect();
    let mut component_of_root = BTreeMap::new();
    for &r in roots.iter() {
        let next = component_of_root.len() as u32;
        component_of_root.entry(r).or_insert(next);
    }
    let comp_ids: Vec<u32> = roots.drain(..).map(|r| component_of_root[&r]).collect();

    let index_within = |offset: usize, count: usize| -> SymbolPlacement {
        let mut counters: BTreeMap<u32, u32> = BTreeMap::new();
        (0..count)
            .map(|s| {
                let comp = comp_ids[offset + s];
                let idx = counters.entry(comp).or_insert(0);
                let here = *idx;
                *idx += 1;
                (comp, here)
            })
            .collect()
    };
    (index_within(0, a), index_within(a, b))
}

/// Constructive intersection of two explanation variables.
///
/// The decomposition is returned whatever its achieved cross information
/// turns out to be; admissibility against a budget is the caller's call.
pub fn gk_intersection(g1: &RandomVariable, g2: &RandomVariable) -> Result<Decomposition> {
    if !g1.same_space(g2) {
        return Err(EfxError::Structural(
            "intersection needs both variables on one sample space".into(),
        ));
    }
    let space = g1.space();
    let (map1, map2) = co_occurrence_components(g1, g2);
    let u_labels: Vec<u32> = g1.values().iter().map(|&s| map1[s as usize].0).collect();
    let e1_labels: Vec<u32> = g1.values().iter().map(|&s| map1[s as usize].1).collect();
    let e2_labels: Vec<u32> = g2.values().iter().map(|&s| map2[s as usize].1).collect();
    let u = RandomVariable::from_labels(space, &u_labels)?;
    let e1 = RandomVariable::from_labels(space, &e1_labels)?;
    let e2 = RandomVariable::from_labels(space, &e2_labels)?;
    let r1: BTreeMap<u32, (u32, u32)> = (0..g1.arity())
        .map(|s| (s, (map1[s as usize].1, map1[s as usize].0)))
        .collect();
    let r2: BTreeMap<u32, (u32, u32)> = (0..g2.arity())
        .map(|s| (s, (map2[s as usize].1, map2[s as usize].0)))
        .collect();
    let achieved_epsilon = mutual_information(&e1, g2)?.max(mutual_information(&e2, g1)?);
    Ok(Decomposition {
        u,
        e1,
        e2,
        r1,
        r2,
        achieved_epsilon,
        g1: g1.clone(),
        g2: g2.clone(),
    })
}

/// Itemized verification of a decomposition against a cross-information
/// budget.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionCheck {
    pub cross_mi_e1_g2: f64,
    pub cross_mi_e2_g1: f64,
    pub achieved_epsilon: f64,
    /// Whether the private parts are exactly independent of the opposite
    /// variable, not merely within the budget.
    pub e1_exactly_independent: bool,
    pub e2_exactly_independent: bool,
    pub r1_bijective: bool,
    pub r2_bijective: bool,
    pub pointwise_consistent: bool,
    pub within_budget: bool,
    pub failures: Vec<String>,
    pub pass: bool,
}

fn check_recoding(
    name: &str,
    table: &BTreeMap<u32, (u32, u32)>,
    g: &RandomVariable,
    e: &RandomVariable,
    u: &RandomVariable,
    failures: &mut Vec<String>,
) -> (bool, bool) {
    let mut bijective = true;
    let mut seen: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for s in 0..g.arity() {
        match table.get(&s) {
            Some(&pair) => {
                if let Some(&other) = seen.get(&pair) {
                    bijective = false;
                    failures.push(format!(
                        "{name} maps symbols {other} and {s} to the same pair {pair:?}"
                    ));
                }
                seen.insert(pair, s);
            }
            None => {
                bijective = false;
                failures.push(format!("{name} has no entry for symbol {s}"));
            }
        }
    }
    let mut consistent = true;
    for i in 0..g.space().len() {
        let expected = (e.values()[i], u.values()[i]);
        match table.get(&g.values()[i]) {
            Some(&pair) if pair == expected => {}
            got => {
                consistent = false;
                failures.push(format!(
                    "{name} at point {i}: symbol {} maps to {:?}, realized pair is {:?}",
                    g.values()[i],
                    got,
                    expected
                ));
                break;
            }
        }
    }
    (bijective, consistent)
}

pub fn verify_decomposition(
    dec: &Decomposition,
    g1: &RandomVariable,
    g2: &RandomVariable,
    epsilon: f64,
) -> Result<DecompositionCheck> {
    if dec.g1 != *g1 || dec.g2 != *g2 {
        return Err(EfxError::Structural(
            "decomposition was built for different variables".into(),
        ));
    }
    let cross1 = mutual_information(&dec.e1, g2)?;
    let cross2 = mutual_information(&dec.e2, g1)?;
    let achieved = cross1.max(cross2);
    let mut failures = Vec::new();
    if (achieved - dec.achieved_epsilon).abs() > INFO_TOL {
        failures.push(format!(
            "stored achieved epsilon {} differs from recomputed {}",
            dec.achieved_epsilon, achieved
        ));
    }
    let (r1_bij, r1_cons) = check_recoding("r1", &dec.r1, g1, &dec.e1, &dec.u, &mut failures);
    let (r2_bij, r2_cons) = check_recoding("r2", &dec.r2, g2, &dec.e2, &dec.u, &mut failures);
    let within = achieved <= epsilon + INFO_TOL;
    if !within {
        failures.push(format!("achieved epsilon {achieved} exceeds budget {epsilon}"));
    }
    let pass = failures.is_empty();
    Ok(DecompositionCheck {
        cross_mi_e1_g2: cross1,
        cross_mi_e2_g1: cross2,
        achieved_epsilon: achieved,
        e1_exactly_independent: cross1 == 0.0,
        e2_exactly_independent: cross2 == 0.0,
        r1_bijective: r1_bij,
        r2_bijective: r2_bij,
        pointwise_consistent: r1_cons && r2_cons,
        within_budget: within,
        failures,
        pass,
    })
}

/// The union variable over canonical (e1, u, e2) triples.
pub fn union_rv(dec: &Decomposition) -> Result<RandomVariable> {
    let space = dec.u.space();
    let labels: Vec<(u32, u32, u32)> = (0..space.len())
        .map(|i| (dec.e1.values()[i], dec.u.values()[i], dec.e2.values()[i]))
        .collect();
    RandomVariable::from_labels(space, &labels)
}

/// Verdict of the intersection-validity bound: when one input is valid and
/// the other complete, the shared part decodes the label within
/// `1 - 2^(-eps0 - 2 sqrt(eps0) - H(h)) / (1 - alpha)`.
#[derive(Debug, Clone, Serialize)]
pub struct IntersectionValidityReport {
    pub applicable: bool,
    pub reason: Option<String>,
    pub epsilon1_bound: f64,
    pub u_decoder_loss: f64,
    pub g1_validity: f64,
    pub g2_alpha_hat: f64,
    pub label_entropy: f64,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn check_intersection_validity(
    dec: &Decomposition,
    g1: &RandomVariable,
    g2: &RandomVariable,
    h: &RandomVariable,
    epsilon: f64,
    epsilon0: f64,
    alpha: f64,
    codomain_size: u32,
    cap: u64,
) -> Result<IntersectionValidityReport> {
    let g1_validity = validity_level_rv(g1, h)?.epsilon0;
    let label_entropy = entropy(h);
    let completeness = completeness_level_rv(
        g2,
        h,
        epsilon,
        &CandidateFamily::Enumerated { codomain_size },
        cap,
    )?;
    let bail = |reason: String| IntersectionValidityReport {
        applicable: false,
        reason: Some(reason),
        epsilon1_bound: f64::NAN,
        u_decoder_loss: f64::NAN,
        g1_validity,
        g2_alpha_hat: completeness.alpha_hat,
        label_entropy,
        pass: true,
    };
    if h.arity() != 2 {
        return Ok(bail(format!(
            "label variable has {} symbols, the bound needs 2",
            h.arity()
        )));
    }
    if g1_validity > epsilon0 {
        return Ok(bail(format!(
            "first explanation is only {g1_validity}-valid, worse than epsilon0 = {epsilon0}"
        )));
    }
    if completeness.alpha_hat < alpha - INFO_TOL {
        return Ok(bail(format!(
            "second explanation is not ({epsilon}, {alpha})-complete on the family: \
             a candidate achieves loss {}",
            completeness.alpha_hat
        )));
    }
    let check = verify_decomposition(dec, g1, g2, epsilon)?;
    if !check.pass {
        return Ok(bail(format!(
            "decomposition fails verification at budget {epsilon}: {:?}",
            check.failures
        )));
    }
    if alpha >= 1.0 {
        return Ok(bail(format!("alpha = {alpha} makes the bound vacuous")));
    }
    let epsilon1 =
        1.0 - (-epsilon0 - 2.0 * epsilon0.sqrt() - label_entropy).exp2() / (1.0 - alpha);
    if !(0.0..=1.0).contains(&epsilon1) {
        return Ok(bail(format!("bound epsilon1 = {epsilon1} is outside [0, 1]")));
    }
    let loss = map_decoder(&dec.u, h)?.error_rate;
    Ok(IntersectionValidityReport {
        applicable: true,
        reason: None,
        epsilon1_bound: epsilon1,
        u_decoder_loss: loss,
        g1_validity,
        g2_alpha_hat: completeness.alpha_hat,
        label_entropy,
        pass: loss <= epsilon1 + INFO_TOL,
    })
}

/// Verdict of the union inheritance checks: the union stays as valid as the
/// first input and as complete as the first input on the same family.
#[derive(Debug, Clone, Serialize)]
pub struct UnionInheritanceReport {
    pub validity_applicable: bool,
    pub completeness_applicable: bool,
    pub g1_validity: f64,
    pub union_validity: f64,
    pub g1_alpha_hat: f64,
    pub union_alpha_hat: f64,
    pub validity_pass: bool,
    pub completeness_pass: bool,
    pub reason: Option<String>,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn check_union_inheritance(
    dec: &Decomposition,
    g1: &RandomVariable,
    g2: &RandomVariable,
    h: &RandomVariable,
    epsilon0: f64,
    epsilon1: f64,
    alpha: f64,
    codomain_size: u32,
    cap: u64,
) -> Result<UnionInheritanceReport> {
    if dec.g1 != *g1 || dec.g2 != *g2 {
        return Err(EfxError::Structural(
            "decomposition was built for different variables".into(),
        ));
    }
    let union = union_rv(dec)?;
    let family = CandidateFamily::Enumerated { codomain_size };

    let g1_validity = validity_level_rv(g1, h)?.epsilon0;
    let union_validity = validity_level_rv(&union, h)?.epsilon0;
    let validity_applicable = g1_validity <= epsilon0;
    let validity_pass = !validity_applicable || union_validity <= epsilon0 + INFO_TOL;

    let g1_alpha_hat = completeness_level_rv(g1, h, epsilon1, &family, cap)?.alpha_hat;
    let union_alpha_hat = completeness_level_rv(&union, h, epsilon1, &family, cap)?.alpha_hat;
    let completeness_applicable = g1_alpha_hat >= alpha - INFO_TOL;
    let completeness_pass = !completeness_applicable || union_alpha_hat >= alpha - INFO_TOL;

    let reason = match (validity_applicable, completeness_applicable) {
        (false, false) => Some(format!(
            "first explanation is neither {epsilon0}-valid nor ({epsilon1}, {alpha})-complete"
        )),
        (false, true) => Some(format!("first explanation is not {epsilon0}-valid")),
        (true, false) => Some(format!(
            "first explanation is not ({epsilon1}, {alpha})-complete on the family"
        )),
        (true, true) => None,
    };
    Ok(UnionInheritanceReport {
        validity_applicable,
        completeness_applicable,
        g1_validity,
        union_validity,
        g1_alpha_hat,
        union_alpha_hat,
        validity_pass,
        completeness_pass,
        reason,
        pass: validity_pass && completeness_pass,
    })
}

/// Verdict of the uniqueness check between two decompositions of the same
/// pair of variables.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    /// `1 - 2^(-epsilon)`, the loss every translation map must respect.
    pub bound: f64,
    pub u_forward_error: f64,
    pub u_backward_error: f64,
    pub e1_forward_error: f64,
    pub e1_backward_error: f64,
    /// Present exactly when the budget is zero: whether the translation maps
    /// are exact mutually inverse bijections.
    pub exact_bijections: Option<bool>,
    pub pass: bool,
}

pub fn check_intersection_uniqueness(
    dec_a: &Decomposition,
    dec_b: &Decomposition,
    epsilon: f64,
) -> Result<UniquenessReport> {
    if dec_a.g1 != dec_b.g1 || dec_a.g2 != dec_b.g2 {
        return Err(EfxError::Structural(
            "decompositions describe different variable pairs".into(),
        ));
    }
    let check_a = verify_decomposition(dec_a, &dec_a.g1, &dec_a.g2, epsilon)?;
    let check_b = verify_decomposition(dec_b, &dec_b.g1, &dec_b.g2, epsilon)?;
    if !check_a.pass || !check_b.pass {
        return Err(EfxError::Precondition(format!(
            "both decompositions must verify at budget {epsilon} before comparing them"
        )));
    }
    let bound = 1.0 - (-epsilon).exp2();
    let s1 = map_decoder(&dec_a.u, &dec_b.u)?;
    let s2 = map_decoder(&dec_b.u, &dec_a.u)?;
    let d1 = map_decoder(&dec_a.e1, &dec_b.e1)?;
    let d2 = map_decoder(&dec_b.e1, &dec_a.e1)?;
    let errors = [s1.error_rate, s2.error_rate, d1.error_rate, d2.error_rate];
    let mut pass = errors.iter().all(|&e| e <= bound + INFO_TOL);
    let exact_bijections = if epsilon == 0.0 {
        let exact = errors.iter().all(|&e| e <= MASS_TOL)
            && mutually_inverse(&s1.table, &s2.table)
            && mutually_inverse(&d1.table, &d2.table);
        pass = pass && exact;
        Some(exact)
    } else {
        None
    };
    Ok(UniquenessReport {
        bound,
        u_forward_error: errors[0],
        u_backward_error: errors[1],
        e1_forward_error: errors[2],
        e1_backward_error: errors[3],
        exact_bijections,
        pass,
    })
}

fn mutually_inverse(fwd: &BTreeMap<u32, u32>, bwd: &BTreeMap<u32, u32>) -> bool {
    fwd.iter().all(|(&k, &v)| bwd.get(&v) == Some(&k))
        && bwd.iter().all(|(&k, &v)| fwd.get(&v) == Some(&k))
}
