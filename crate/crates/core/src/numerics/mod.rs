//! Deterministic differentiable building blocks.
//!
//! Models are written once against [`Tape`]: the forward pass records each
//! primitive and [`Tape::backward`] replays them in reverse to fill a
//! [`Grads`] buffer aligned with the owning [`ParamStore`]. The plain
//! functions in [`kernels`] compute the same quantities without recording and
//! back the fast decoding paths.

mod adam;
mod array;
mod gradcheck;
pub mod layers;
pub mod kernels;
mod params;
mod tape;

pub use adam::{adam_update, Adam, AdamConfig};
pub use array::RealArray;
pub use gradcheck::{grad_check, GradCheckReport};
pub use kernels::{softmax, softsign, tanh_act, Activation};
pub use layers::{GruLayer, Linear};
pub use params::{Grads, Init, ParamId, ParamStore};
pub use tape::{Tape, Var};

/// Deterministic generator used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeds the crate-wide generator.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
