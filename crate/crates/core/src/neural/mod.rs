//! Small neural stack: MLPs with value/gradient/Laplacian propagation and
//! exact reverse mode, DeepONet operators, the supervised and physics
//! losses, Adam and the training loop.

pub mod adam;
pub mod deeponet;
pub mod io;
pub mod loss;
pub mod mlp;
pub mod train;

pub use adam::{AdamState, DEFAULT_LR};
pub use deeponet::{Arch, ArchConfig, DeepOnet, DualDeepOnet, Operator, OperatorModel, DEFAULT_LATENT};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, ModelManifest};
pub use loss::{loss_mad, loss_mad_grad, loss_pinn, loss_pinn_grad, MadBatch, PinnBatch, DEFAULT_WEIGHTS};
pub use mlp::{Activation, LayerSpec, Mlp};
pub use train::{train, train_mad, train_pinn, LossKind, TrainConfig, TrainReport};

use ndarray::{Array2, ArrayView2};

use crate::error::Result;

/// `lap_x u(x)` of the model output for each sample row and query point.
pub fn laplacian_of_network(
    model: &OperatorModel,
    g: ArrayView2<f64>,
    f: Option<ArrayView2<f64>>,
    x: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    model.laplacian(g, f, x)
}
