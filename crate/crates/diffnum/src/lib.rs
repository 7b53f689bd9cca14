//! Minimal reverse-mode differentiable numerics.
//!
//! Everything is 64-bit and row-major. Computations are recorded on a
//! [`Graph`] (a Wengert tape); [`Graph::backward`] replays the tape in reverse
//! and accumulates parameter gradients into a [`ParamStore`], which also owns
//! the Adam moments.
//!
//! ```
//! use diffnum::{Graph, MlpSpec, Mlp, ParamStore, Tensor};
//! use rand::SeedableRng;
//!
//! let mut store = ParamStore::new();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let spec = MlpSpec::new(vec![2, 8, 16, 16]).unwrap();
//! let mlp = Mlp::init(&mut store, "e_point", spec, &mut rng).unwrap();
//!
//! let mut g = Graph::new();
//! let x = g.constant(Tensor::zeros(&[5, 2]));
//! let y = mlp.forward(&mut g, &store, x).unwrap();
//! assert_eq!(g.value(y).shape(), &[5, 16]);
//! ```

mod adam;
mod error;
mod gaussian;
pub mod gradcheck;
mod graph;
mod mlp;
mod params;
mod tensor;

pub use adam::{adam_step, AdamConfig};
pub use error::{DiffError, Result};
pub use gaussian::{kl_standard_normal, kl_standard_normal_value, sample_reparameterized, LatentGaussian};
pub use graph::{Gradients, Graph, Var};
pub use mlp::{Mlp, MlpSpec};
pub use params::{ParamId, ParamStore};
pub use tensor::Tensor;
