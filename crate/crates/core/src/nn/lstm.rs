//! A single LSTM cell on the autodiff tape, plus affine/MLP helpers.

use super::matrix::Matrix;
use super::params::{uniform_init, ParameterStore, TapeBinding};
use super::tape::{Tape, Var};
use rand::Rng;

/// Register the weights of one LSTM cell under `prefix`: per-gate input
/// and hidden matrices plus biases. Biases start at zero except the
/// forget gate, which starts at one.
pub fn init_lstm_params<R: Rng>(
    store: &mut ParameterStore,
    prefix: &str,
    input_dim: usize,
    hidden_dim: usize,
    rng: &mut R,
) {
    for gate in ["i", "f", "s", "o"] {
        store.insert(
            format!("{prefix}.w_i{gate}"),
            uniform_init(hidden_dim, input_dim, hidden_dim, rng),
        );
        store.insert(
            format!("{prefix}.w_h{gate}"),
            uniform_init(hidden_dim, hidden_dim, hidden_dim, rng),
        );
        let bias = if gate == "f" { Matrix::ones(hidden_dim, 1) } else { Matrix::zeros(hidden_dim, 1) };
        store.insert(format!("{prefix}.b_{gate}"), bias);
    }
}

fn gate(tape: &Tape, binding: &TapeBinding, prefix: &str, name: &str, z: Var, h_prev: Var) -> Var {
    let wi = binding.var(&format!("{prefix}.w_i{name}"));
    let wh = binding.var(&format!("{prefix}.w_h{name}"));
    let b = binding.var(&format!("{prefix}.b_{name}"));
    tape.add(tape.add(tape.matmul(wi, z), tape.matmul(wh, h_prev)), b)
}

/// One LSTM step: sigmoid input/forget/output gates, tanh candidate,
/// `s = f * s_prev + i * cand`, `h = o * tanh(s)`.
pub fn lstm_cell(
    tape: &Tape,
    binding: &TapeBinding,
    prefix: &str,
    z: Var,
    h_prev: Var,
    s_prev: Var,
) -> (Var, Var) {
    let i = tape.sigmoid(gate(tape, binding, prefix, "i", z, h_prev));
    let f = tape.sigmoid(gate(tape, binding, prefix, "f", z, h_prev));
    let cand = tape.tanh(gate(tape, binding, prefix, "s", z, h_prev));
    let o = tape.sigmoid(gate(tape, binding, prefix, "o", z, h_prev));
    let s = tape.add(tape.mul(f, s_prev), tape.mul(i, cand));
    let h = tape.mul(o, tape.tanh(s));
    (h, s)
}

/// Affine map `W x + b` on column vectors.
pub fn affine(tape: &Tape, binding: &TapeBinding, w_name: &str, b_name: &str, x: Var) -> Var {
    tape.add(tape.matmul(binding.var(w_name), x), binding.var(b_name))
}

/// Register an MLP under `prefix`: `dims` lists layer widths from input
/// to output, e.g. `[3, 8, 1]` for one hidden layer.
pub fn init_mlp_params<R: Rng>(store: &mut ParameterStore, prefix: &str, dims: &[usize], rng: &mut R) {
    assert!(dims.len() >= 2, "an MLP needs at least input and output dims");
    for layer in 0..dims.len() - 1 {
        store.insert(
            format!("{prefix}.w{layer}"),
            uniform_init(dims[layer + 1], dims[layer], dims[layer], rng),
        );
        store.insert(format!("{prefix}.b{layer}"), Matrix::zeros(dims[layer + 1], 1));
    }
}

/// MLP forward with ReLU hidden activations and an identity output layer.
pub fn mlp_forward(tape: &Tape, binding: &TapeBinding, prefix: &str, layers: usize, x: Var) -> Var {
    let mut out = x;
    for layer in 0..layers {
        out = affine(
            tape,
            binding,
            &format!("{prefix}.w{layer}"),
            &format!("{prefix}.b{layer}"),
            out,
        );
        if layer + 1 < layers {
            out = tape.relu(out);
        }
    }
    out
}
