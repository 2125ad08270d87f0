//! Dense fully-connected networks with analytic gradients, an adaptive-moment
//! optimizer and target-network blending.

mod adam;
mod mlp;
mod snapshot;

pub use adam::{Adam, AdamConfig};
pub use mlp::{soft_update, Activation, ForwardCache, Gradients, InitRule, Mlp};
pub use snapshot::{AdamSnapshot, MlpSnapshot, TensorRecord};
