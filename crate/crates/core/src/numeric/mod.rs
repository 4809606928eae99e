//! Deterministic numerics shared by every other module.

mod data;
pub mod gradcheck;
mod model;
mod objective;
mod param;
mod quadratic;
mod rng;

pub use data::{load_csv, make_synthetic, Dataset, SyntheticSpec};
pub use model::{Model, ModelKind};
pub use objective::{Evaluation, Evaluator, Objective, SupervisedTask};
pub use param::ParamVector;
pub use quadratic::{QuadraticProblem, QuadraticSpec};
pub use rng::{derive_seed, rng_gaussian, rng_two_point, rng_uniform, streams, NoiseDist, NoiseSpec, Prng, RngState};
