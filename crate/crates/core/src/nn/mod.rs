//! Minimal dense-tensor math with reverse-mode differentiation: enough
//! for the LSTM cell, linear/MLP layers, message passing, and Adam.
//! Double precision throughout.

pub mod adam;
pub mod lstm;
pub mod matrix;
pub mod params;
pub mod tape;

pub use adam::{adam_step, AdamState};
pub use lstm::{affine, init_lstm_params, init_mlp_params, lstm_cell, mlp_forward};
pub use matrix::Matrix;
pub use params::{
    load_checkpoint, save_checkpoint, uniform_init, CheckpointError, ParameterStore, TapeBinding,
};
pub use tape::{Gradients, Tape, Var};
