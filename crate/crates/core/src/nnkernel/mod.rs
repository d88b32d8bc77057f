//! A small, dependency-free neural network kernel: dense tensors, the layers
//! needed by the state encoder and the Q-networks, hand-written backward
//! passes, the Adam update rule and a text checkpoint format.
//!
//! Every layer exposes `forward` returning its output and a cache, and
//! `backward` taking that cache plus the upstream gradient, accumulating
//! parameter gradients into a same-typed value and returning the input
//! gradient.

mod adam;
mod attention;
pub mod checkpoint;
pub mod gradcheck;
mod layers;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use attention::{AttentionCache, EncoderBlock, EncoderBlockCache, MultiHeadAttention};
pub use layers::{
    relu, relu_backward, softmax_backward, softmax_rows, FeedForward, FeedForwardCache, LayerNorm,
    LayerNormCache, Linear, Mlp, MlpCache, Parameters, LAYER_NORM_EPS,
};
pub(crate) use tensor::order_free_sum;
pub use tensor::Tensor2;
