//! Seeded random configurations and vectors for property checks and experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hilbert::{RotationSpec, SpaceConfig};
use crate::linalg::Vector;
use crate::scalar::{ratio, Rational, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric real rows with entries uniform in `[-max_abs, max_abs]`.
pub fn deformation_rows(rng: &mut impl Rng, n_blocks: usize, max_abs: f64) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; n_blocks]; n_blocks];
    for i in 0..n_blocks {
        for j in i..n_blocks {
            let x = rng.gen_range(-max_abs..=max_abs);
            rows[i][j] = x;
            rows[j][i] = x;
        }
    }
    rows
}

/// Symmetric rational entries `p/den` with `|p| <= num_max`.
pub fn rational_deformation(rng: &mut impl Rng, n_blocks: usize, num_max: i64, den: i64) -> Vec<Vec<Rational>> {
    let mut rows = vec![vec![ratio(0, 1); n_blocks]; n_blocks];
    for i in 0..n_blocks {
        for j in i..n_blocks {
            let x = ratio(rng.gen_range(-num_max..=num_max), den);
            rows[i][j] = x.clone();
            rows[j][i] = x;
        }
    }
    rows
}

pub struct ConfigShape {
    pub dim: usize,
    pub n_blocks: usize,
    pub max_q: f64,
    /// Pair up same-block basis vectors into rotations with this probability each.
    pub rotation_probability: f64,
}

/// A valid space with every block label in use (when `n_blocks <= dim`).
pub fn space_config(rng: &mut impl Rng, shape: &ConfigShape) -> SpaceConfig {
    let n_blocks = shape.n_blocks.clamp(1, shape.dim.max(1));
    let mut blocks: Vec<usize> = (0..shape.dim).map(|a| if a < n_blocks { a } else { rng.gen_range(0..n_blocks) }).collect();
    blocks.shuffle(rng);
    let mut rotations = Vec::new();
    let mut free: Vec<usize> = (0..shape.dim).collect();
    free.shuffle(rng);
    while let Some(a) = free.pop() {
        if let Some(pos) = free.iter().position(|&b| blocks[b] == blocks[a]) {
            if rng.gen_bool(shape.rotation_probability) {
                let b = free.remove(pos);
                rotations.push(RotationSpec { basis: [a, b], lambda: rng.gen_range(1.0..4.0) });
            }
        }
    }
    SpaceConfig { dim: shape.dim, blocks, rotations, q: deformation_rows(rng, n_blocks, shape.max_q) }
}

pub fn complex_vector(rng: &mut impl Rng, d: usize) -> Vector<C64> {
    Vector::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn real_vector(rng: &mut impl Rng, d: usize) -> Vector<C64> {
    Vector::from_fn(d, |_, _| C64::new(rng.gen_range(-1.0..1.0), 0.0))
}

/// A vector supported on the basis vectors of one block, chosen at random.
pub fn block_vector(rng: &mut impl Rng, block_of: &[usize], real: bool) -> Vector<C64> {
    let labels: Vec<usize> = block_of.to_vec();
    let label = *labels.choose(rng).expect("non-empty space");
    Vector::from_fn(block_of.len(), |a, _| {
        if block_of[a] != label {
            C64::new(0.0, 0.0)
        } else if real {
            C64::new(rng.gen_range(-1.0..1.0), 0.0)
        } else {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }
    })
}

pub fn rational_vector(rng: &mut impl Rng, d: usize, num_max: i64, den: i64) -> Vector<Rational> {
    Vector::from_fn(d, |_, _| ratio(rng.gen_range(-num_max..=num_max), den))
}
