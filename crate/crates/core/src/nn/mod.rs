//! Dense networks, activations, losses, optimizers and the model file format.

mod activation;
mod loss;
pub mod model_file;
mod network;
mod optim;

pub use activation::{sigmoid, Activation, LEAKY_SLOPE, PRELU_INIT, SELU_ALPHA, SELU_SCALE};
pub use loss::{Loss, DEFAULT_HUBER_DELTA};
pub use model_file::{load_model, parse_model, save_model, to_model_string};
pub use network::{Gradients, InitScheme, InitSpec, Layer, Network, NetworkSpec, Workspace};
pub use optim::{Optimizer, OptimizerKind};
