//! The five experiment types. Each returns its tables and invariant failures; module
//! errors propagate with the experiment name attached by the caller.

use qaw_core::hilbert::HilbertSetup;
use qaw_core::linalg::Vector;
use qaw_core::sampling;
use qaw_core::wick::LabeledTensor;
use qaw_core::C64;
use rand::Rng;

use crate::config::{Experiment, RunConfig, Tolerances};
use crate::report::Output;

mod fock;
mod moments;
mod modular;
mod multipliers;
mod ultra;

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub setup: &'a HilbertSetup,
    pub tol: Tolerances,
    pub seed: u64,
}

pub fn run(e: Experiment, ctx: &Context) -> qaw_core::Result<Output> {
    match e {
        Experiment::Fock => fock::run(ctx),
        Experiment::Moments => moments::run(ctx),
        Experiment::Modular => modular::run(ctx),
        Experiment::Multipliers => multipliers::run(ctx),
        Experiment::Ultra => ultra::run(ctx),
    }
}

/// `n` random legs, each supported on one randomly chosen block.
fn random_tensor(rng: &mut impl Rng, setup: &HilbertSetup, n: usize, real: bool) -> qaw_core::Result<LabeledTensor<C64>> {
    let legs = (0..n).map(|_| sampling::block_vector(rng, setup.block_of(), real)).collect();
    LabeledTensor::new(legs, setup.block_of())
}

fn legs_json(legs: &[Vector<C64>]) -> serde_json::Value {
    serde_json::Value::Array(legs.iter().map(crate::report::vector_json).collect())
}
