//! Dense kernels, the gradient tape, gradient checking and Adam.

mod adam;
mod gradcheck;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport, ScalarObjective};
pub use tape::{Gradients, NodeId, ParamId, ParamStore, Tape};
pub use tensor::{concat, dot, linear_forward, mse, relu, sigmoid, softmax, Tensor1, Tensor2};
