//! Exact statevector simulation of depth-p QAOA.
//!
//! The circuit alternates a diagonal cost layer exp(-i gamma H_C), applied
//! as an elementwise phase over the stored diagonal, and an X-mixer layer
//! exp(-i beta X) per qubit, applied as in-place stride-2^q pair rotations.
//! Gradients come from a single reverse (adjoint) sweep rather than
//! parameter-shift re-executions.

use crate::hamiltonian::CostHamiltonian;
use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;

/// QAOA angles theta = (gamma_1..gamma_p, beta_1..beta_p).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ParameterVector {
    pub fn new(gamma: Vec<f64>, beta: Vec<f64>) -> Self {
        assert_eq!(gamma.len(), beta.len(), "gamma and beta must share the depth p");
        assert!(
            gamma.iter().chain(beta.iter()).all(|v| v.is_finite()),
            "angles must be finite"
        );
        Self { gamma, beta }
    }

    pub fn zeros(p: usize) -> Self {
        Self { gamma: vec![0.0; p], beta: vec![0.0; p] }
    }

    pub fn depth(&self) -> usize {
        self.gamma.len()
    }

    /// Flat layout [gamma_1..gamma_p, beta_1..beta_p].
    pub fn flat(&self) -> Vec<f64> {
        self.gamma.iter().chain(self.beta.iter()).copied().collect()
    }

    pub fn from_flat(values: &[f64]) -> Self {
        assert!(values.len() % 2 == 0, "flat parameter vector must have even length");
        let p = values.len() / 2;
        Self::new(values[..p].to_vec(), values[p..].to_vec())
    }
}

/// Dense complex amplitudes over the computational basis; qubit 0 is the
/// least-significant bit of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Computational basis state |idx>.
    pub fn basis_state(n: usize, idx: usize) -> StateVector {
        assert!(idx < (1usize << n));
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[idx] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }
}

/// Uniform superposition |+>^n.
pub fn prepare_plus_state(n: usize) -> StateVector {
    assert!((1..=20).contains(&n), "qubit count must be in 1..=20");
    let dim = 1usize << n;
    let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
    StateVector { n, amps: vec![amp; dim] }
}

/// Multiply each amplitude by exp(-i gamma H_C(x)).
pub fn apply_cost_layer(state: &mut StateVector, diagonal: &[f64], gamma: f64) {
    assert_eq!(state.amps.len(), diagonal.len(), "diagonal length must match state dimension");
    #[cfg(debug_assertions)]
    let norm_before = state.norm_sqr();
    for (amp, &d) in state.amps.iter_mut().zip(diagonal.iter()) {
        *amp *= Complex64::from_polar(1.0, -gamma * d);
    }
    // Unitarity: the layer must preserve the norm (also of unnormalized
    // co-states during the adjoint sweep).
    #[cfg(debug_assertions)]
    debug_assert!(
        (state.norm_sqr() - norm_before).abs() < 1e-10 * (1.0 + norm_before),
        "cost layer broke unitarity"
    );
}

/// Apply exp(-i beta X) on every qubit: each bit-flipped amplitude pair
/// (a0, a1) becomes (c a0 - i s a1, c a1 - i s a0).
pub fn apply_mixer_layer(state: &mut StateVector, beta: f64) {
    let c = beta.cos();
    let s = beta.sin();
    let dim = state.amps.len();
    #[cfg(debug_assertions)]
    let norm_before = state.norm_sqr();
    for q in 0..state.n {
        let stride = 1usize << q;
        let mut base = 0;
        while base < dim {
            for offset in base..base + stride {
                let i0 = offset;
                let i1 = offset + stride;
                let a0 = state.amps[i0];
                let a1 = state.amps[i1];
                state.amps[i0] = c * a0 - Complex64::i() * s * a1;
                state.amps[i1] = c * a1 - Complex64::i() * s * a0;
            }
            base += 2 * stride;
        }
    }
    #[cfg(debug_assertions)]
    debug_assert!(
        (state.norm_sqr() - norm_before).abs() < 1e-10 * (1.0 + norm_before),
        "mixer layer broke unitarity"
    );
}

/// Run the depth-p circuit prod_l [U_mixer(beta_l) U_cost(gamma_l)] on |+>^n.
pub fn run_qaoa(h: &CostHamiltonian, theta: &ParameterVector) -> StateVector {
    assert!(theta.depth() >= 1, "depth p must be at least 1");
    let mut state = prepare_plus_state(h.n);
    for l in 0..theta.depth() {
        apply_cost_layer(&mut state, &h.diagonal, theta.gamma[l]);
        apply_mixer_layer(&mut state, theta.beta[l]);
    }
    state
}

/// <psi| H_C |psi> = sum_x |psi_x|^2 H_C(x).
pub fn expectation(state: &StateVector, h: &CostHamiltonian) -> f64 {
    assert_eq!(state.amps.len(), h.diagonal.len(), "state and Hamiltonian dimensions differ");
    state
        .amps
        .iter()
        .zip(h.diagonal.iter())
        .map(|(a, &d)| a.norm_sqr() * d)
        .sum()
}

/// Energy only (no gradient): one forward pass.
pub fn energy(h: &CostHamiltonian, theta: &ParameterVector) -> f64 {
    expectation(&run_qaoa(h, theta), h)
}

fn inner_with_diag(lam: &StateVector, diagonal: &[f64], phi: &StateVector) -> Complex64 {
    lam.amps
        .iter()
        .zip(diagonal.iter())
        .zip(phi.amps.iter())
        .map(|((l, &d), p)| l.conj() * d * p)
        .sum()
}

fn inner_with_mixer_generator(lam: &StateVector, phi: &StateVector) -> Complex64 {
    // <lam| sum_q X_q |phi> = sum_q sum_x conj(lam_x) phi_{x ^ (1<<q)}
    let mut total = Complex64::new(0.0, 0.0);
    for q in 0..phi.n {
        let stride = 1usize << q;
        for (idx, l) in lam.amps.iter().enumerate() {
            total += l.conj() * phi.amps[idx ^ stride];
        }
    }
    total
}

/// Energy and its analytic gradient d E / d theta via one forward pass and
/// one adjoint sweep: the co-state lambda = H_C |psi> is pulled backward
/// through the inverted layers, and each parameter contributes
/// 2 Im <lambda| G |phi> with G the layer generator.
pub fn energy_and_gradient(h: &CostHamiltonian, theta: &ParameterVector) -> (f64, Vec<f64>) {
    let p = theta.depth();
    let mut phi = run_qaoa(h, theta);
    let e = expectation(&phi, h);

    let mut lam = phi.clone();
    for (amp, &d) in lam.amps.iter_mut().zip(h.diagonal.iter()) {
        *amp *= d;
    }

    let mut grad_gamma = vec![0.0; p];
    let mut grad_beta = vec![0.0; p];
    for l in (0..p).rev() {
        grad_beta[l] = 2.0 * inner_with_mixer_generator(&lam, &phi).im;
        apply_mixer_layer(&mut phi, -theta.beta[l]);
        apply_mixer_layer(&mut lam, -theta.beta[l]);
        grad_gamma[l] = 2.0 * inner_with_diag(&lam, &h.diagonal, &phi).im;
        apply_cost_layer(&mut phi, &h.diagonal, -theta.gamma[l]);
        apply_cost_layer(&mut lam, &h.diagonal, -theta.gamma[l]);
    }

    let mut grad = grad_gamma;
    grad.extend(grad_beta);
    (e, grad)
}

/// Measurement outcomes from repeated shots.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub n: usize,
    /// Basis index -> occurrence count.
    pub counts: BTreeMap<usize, u32>,
    pub shots: u32,
}

/// |psi_x|^2 for every basis state.
pub fn exact_probabilities(state: &StateVector) -> Vec<f64> {
    state.amps.iter().map(|a| a.norm_sqr()).collect()
}

/// Multinomial draw of `shots` measurements from |psi_x|^2.
pub fn sample<R: Rng>(state: &StateVector, shots: u32, rng: &mut R) -> SampleSet {
    assert!(shots >= 1, "need at least one shot");
    let probs = exact_probabilities(state);
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
        *counts.entry(idx).or_insert(0) += 1;
    }
    SampleSet { n: state.n, counts, shots }
}
