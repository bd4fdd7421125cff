//! Adam with bias correction, over a [`ParameterStore`].

use super::matrix::Matrix;
use super::params::ParameterStore;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: BTreeMap<String, Matrix>,
    second_moment: BTreeMap<String, Matrix>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &ParameterStore) -> AdamState {
        let zeros = |m: &Matrix| Matrix::zeros(m.rows, m.cols);
        AdamState {
            first_moment: params.iter().map(|(n, m)| (n.clone(), zeros(m))).collect(),
            second_moment: params.iter().map(|(n, m)| (n.clone(), zeros(m))).collect(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update over every parameter with a gradient entry.
pub fn adam_step(
    params: &mut ParameterStore,
    grads: &BTreeMap<String, Matrix>,
    state: &mut AdamState,
    lr: f64,
) {
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    for (name, grad) in grads {
        let m = state
            .first_moment
            .get_mut(name)
            .unwrap_or_else(|| panic!("gradient for unknown parameter {name}"));
        let v = state.second_moment.get_mut(name).expect("moments stay in sync");
        let target = params.get_mut(name);
        assert_eq!(target.shape(), grad.shape(), "gradient shape mismatch for {name}");
        for i in 0..grad.data.len() {
            let g = grad.data[i];
            m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g;
            v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g * g;
            let m_hat = m.data[i] / bias1;
            let v_hat = v.data[i] / bias2;
            target.data[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
        target.debug_assert_finite();
    }
}
