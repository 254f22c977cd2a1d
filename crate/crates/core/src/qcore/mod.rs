//! A small fully connected Q-network with hand-written backpropagation, an
//! Adam optimizer and a central-difference gradient checker.

mod adam;
mod gradcheck;
mod mlp;

pub use adam::Adam;
pub use gradcheck::{grad_check, grad_check_against, relative_error};
pub use mlp::{td_loss_from_cache, td_loss_grad, Batch, Dense, ForwardCache, MlpParams};

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QcoreError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite gradient at parameter {0}")]
    NonFiniteGradient(usize),
    #[error("non-finite parameter at {0}")]
    NonFiniteParameter(usize),
}
