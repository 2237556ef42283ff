#![allow(dead_code)]

use dualdiv::{CostFunction, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn table_one(c: f64) -> ModelParams {
    ModelParams::exponential(CostFunction::p1(c), 0.1, 0.1, 0.01)
}

/// A parameter point plus a barrier.
#[derive(Debug, Clone)]
pub struct CorpusPoint {
    pub params: ModelParams,
    pub beta: f64,
}

/// Reproducible random points with exponential gains and a builtin cost.
pub fn corpus(seed: u64, n: usize) -> Vec<CorpusPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c = rng.random_range(1.0..4.0);
            let cost = match rng.random_range(0..3) {
                0 => CostFunction::p1(c),
                1 => CostFunction::p2(c),
                _ => CostFunction::p3(c),
            };
            let lambda = rng.random_range(0.05..0.2);
            let q = rng.random_range(0.05..0.2);
            let mu = rng.random_range(0.01..0.05);
            let beta = rng.random_range(3.0..40.0);
            CorpusPoint { params: ModelParams::exponential(cost, lambda, q, mu), beta }
        })
        .collect()
}
