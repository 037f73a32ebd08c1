//! Shared fixtures and seeded generators used by the built-in verification
//! suites and the test batteries.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{ArgmaxHead, Layer, LayeredModel};
use crate::prob::{RandomVariable, SampleSpace};

/// Eight uniform points with coordinates (a, b, u) in {0,1}^3, the two
/// explanations 2a + u and 2b + u as variables, and labels decided by u.
pub struct XorBits {
    pub space: Arc<SampleSpace>,
    pub model: LayeredModel,
    pub g1: RandomVariable,
    pub g2: RandomVariable,
    pub h: RandomVariable,
}

pub fn xor_bits() -> XorBits {
    let points: Vec<DVector<f64>> = (0..8)
        .map(|k: u32| {
            DVector::from_vec(vec![
                ((k >> 2) & 1) as f64,
                ((k >> 1) & 1) as f64,
                (k & 1) as f64,
            ])
        })
        .collect();
    let space = SampleSpace::uniform(points).unwrap();
    // label 1 exactly when the u coordinate is 1, with margin 1
    let head = ArgmaxHead::new(vec![
        DVector::from_vec(vec![1.0]),
        DVector::from_vec(vec![-1.0]),
    ])
    .unwrap();
    let model = LayeredModel::new(
        vec![Layer::Affine {
            weight: DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 2.0]),
            offset: DVector::from_vec(vec![-1.0]),
        }],
        Some(head),
    )
    .unwrap();
    let g1: Vec<u32> = space
        .points()
        .iter()
        .map(|p| 2 * (p[0] as u32) + (p[2] as u32))
        .collect();
    let g2: Vec<u32> = space
        .points()
        .iter()
        .map(|p| 2 * (p[1] as u32) + (p[2] as u32))
        .collect();
    let h: Vec<u32> = space.points().iter().map(|p| p[2] as u32).collect();
    XorBits {
        g1: RandomVariable::from_labels(&space, &g1).unwrap(),
        g2: RandomVariable::from_labels(&space, &g2).unwrap(),
        h: RandomVariable::from_labels(&space, &h).unwrap(),
        space,
        model,
    }
}

/// Four uniform points {0,1}^2, labels decided by the first coordinate, and
/// the first coordinate itself as the explanation variable.
pub struct TwoBits {
    pub space: Arc<SampleSpace>,
    pub model: LayeredModel,
    pub g: RandomVariable,
    pub h: RandomVariable,
}

pub fn two_bits() -> TwoBits {
    let points: Vec<DVector<f64>> = (0..4)
        .map(|k: u32| DVector::from_vec(vec![((k >> 1) & 1) as f64, (k & 1) as f64]))
        .collect();
    let space = SampleSpace::uniform(points).unwrap();
    let head = ArgmaxHead::new(vec![
        DVector::from_vec(vec![1.0]),
        DVector::from_vec(vec![-1.0]),
    ])
    .unwrap();
    let model = LayeredModel::new(
        vec![Layer::Affine {
            weight: DMatrix::from_row_slice(1, 2, &[2.0, 0.0]),
            offset: DVector::from_vec(vec![-1.0]),
        }],
        Some(head),
    )
    .unwrap();
    let g: Vec<u32> = space.points().iter().map(|p| p[0] as u32).collect();
    let h = g.clone();
    TwoBits {
        g: RandomVariable::from_labels(&space, &g).unwrap(),
        h: RandomVariable::from_labels(&space, &h).unwrap(),
        space,
        model,
    }
}

/// The shifted-identity classifier p(x) = x + (3, 0) with orthogonal unit
/// heads on a square grid. Every pre-head norm is at least 2 and all points
/// share one label.
pub fn shifted_plane(grid_steps: usize) -> (LayeredModel, Arc<SampleSpace>) {
    let head = ArgmaxHead::new(vec![
        DVector::from_vec(vec![1.0, 0.0]),
        DVector::from_vec(vec![0.0, 1.0]),
    ])
    .unwrap();
    let model = LayeredModel::new(
        vec![Layer::Affine {
            weight: DMatrix::identity(2, 2),
            offset: DVector::from_vec(vec![3.0, 0.0]),
        }],
        Some(head),
    )
    .unwrap();
    let space =
        SampleSpace::grid(&[(-1.0, 1.0), (-1.0, 1.0)], &[grid_steps, grid_steps]).unwrap();
    (model, space)
}

/// Variant of [`shifted_plane`] with a saturating nonlinearity on top, so
/// the gradient explanation genuinely varies across the grid.
pub fn shifted_plane_tanh(grid_steps: usize) -> (LayeredModel, Arc<SampleSpace>) {
    let head = ArgmaxHead::new(vec![
        DVector::from_vec(vec![1.0, 0.0]),
        DVector::from_vec(vec![0.0, 1.0]),
    ])
    .unwrap();
    let model = LayeredModel::new(
        vec![
            Layer::Affine {
                weight: DMatrix::identity(2, 2),
                offset: DVector::from_vec(vec![3.0, 0.0]),
            },
            Layer::Tanh { dim: 2 },
        ],
        Some(head),
    )
    .unwrap();
    let space =
        SampleSpace::grid(&[(-1.0, 1.0), (-1.0, 1.0)], &[grid_steps, grid_steps]).unwrap();
    (model, space)
}

/// Realizes an explicit joint matrix as two variables on a fresh space with
/// one atom per positive cell.
pub fn joint_as_rvs(cells: &[Vec<f64>]) -> (RandomVariable, RandomVariable) {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, row) in cells.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                points.push(DVector::from_vec(vec![i as f64, j as f64]));
                weights.push(p);
                xs.push(i as u32);
                ys.push(j as u32);
            }
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let space = SampleSpace::new(points, weights).unwrap();
    (
        RandomVariable::from_labels(&space, &xs).unwrap(),
        RandomVariable::from_labels(&space, &ys).unwrap(),
    )
}

/// Fully random positive joint with both arities in `2..=max_arity`.
pub fn random_joint(seed: u64, max_arity: usize) -> (RandomVariable, RandomVariable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.gen_range(2..=max_arity);
    let b = rng.gen_range(2..=max_arity);
    let cells: Vec<Vec<f64>> = (0..a)
        .map(|_| (0..b).map(|_| rng.gen_range(0.01..1.0)).collect())
        .collect();
    joint_as_rvs(&cells)
}

/// Random joint built as a noisy channel around the identity, so the optimal
/// decoder succeeds with probability at least 0.6.
pub fn noisy_channel_joint(seed: u64, max_arity: usize) -> (RandomVariable, RandomVariable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.gen_range(2..=max_arity);
    let noise: f64 = rng.gen_range(0.0..0.4);
    let mut cells = vec![vec![0.0; a]; a];
    for (i, row) in cells.iter_mut().enumerate() {
        let px: f64 = rng.gen_range(0.2..1.0);
        for (j, cell) in row.iter_mut().enumerate() {
            let channel = if i == j {
                1.0 - noise
            } else {
                noise / (a - 1) as f64
            };
            *cell = px * channel;
        }
    }
    joint_as_rvs(&cells)
}

/// Random triple (x, y, z) with binary y and z on a fresh space.
pub fn random_binary_triple(
    seed: u64,
    max_arity: usize,
) -> (RandomVariable, RandomVariable, RandomVariable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.gen_range(2..=max_arity);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let (mut xs, mut ys, mut zs) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..a {
        for y in 0..2u32 {
            for z in 0..2u32 {
                points.push(DVector::from_vec(vec![i as f64, y as f64, z as f64]));
                weights.push(rng.gen_range(0.01..1.0));
                xs.push(i as u32);
                ys.push(y);
                zs.push(z);
            }
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let space = SampleSpace::new(points, weights).unwrap();
    (
        RandomVariable::from_labels(&space, &xs).unwrap(),
        RandomVariable::from_labels(&space, &ys).unwrap(),
        RandomVariable::from_labels(&space, &zs).unwrap(),
    )
}

/// Seeded layered model (affine, tanh, and scaling layers) on a small grid,
/// together with a random tabulated explanation.
pub fn random_layered_model(
    seed: u64,
) -> (LayeredModel, Arc<SampleSpace>, Vec<DVector<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = rng.gen_range(4..=7);
    let space = SampleSpace::grid(&[(-1.0, 1.0), (-1.0, 1.0)], &[steps, steps]).unwrap();
    let depth = rng.gen_range(2..=4);
    let mut layers = Vec::new();
    let mut dim = 2usize;
    for _ in 0..depth {
        match rng.gen_range(0..3) {
            0 => {
                let out = rng.gen_range(1..=3);
                let data: Vec<f64> = (0..out * dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
                layers.push(Layer::Affine {
                    weight: DMatrix::from_row_slice(out, dim, &data),
                    offset: DVector::from_iterator(out, (0..out).map(|_| rng.gen_range(-0.5..0.5))),
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
    let ef_values: Vec<DVector<f64>> = (0..space.len())
        .map(|_| DVector::from_iterator(m, (0..m).map(|_| rng.gen_range(-1.0..1.0))))
        .collect();
    (model, space, ef_values)
}
