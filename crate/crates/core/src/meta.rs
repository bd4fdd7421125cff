//! The graph-conditioned recurrent meta-optimizer.
//!
//! An LSTM proposes a short trajectory of QAOA angles. At step t it reads
//! the previous normalized energy and the previous angles, optionally adds
//! a projected graph embedding to its hidden state, and emits the next
//! angles through a linear output map. Training differentiates the
//! decay-weighted energy trajectory end to end: reverse mode through the
//! unrolled cell composed with the simulator's adjoint gradient at every
//! step. The energy value fed back as input is treated as a constant
//! (gradients reach each E_t only through the angles that produced it).

use crate::hamiltonian::{normalized_energy, CostHamiltonian};
use crate::nn::{
    adam_step, init_lstm_params, lstm_cell, uniform_init, AdamState, Matrix, ParameterStore, Tape,
    TapeBinding, Var,
};
use crate::rng::stream_rng;
use crate::simulator::{energy, energy_and_gradient, ParameterVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("no embedding provided for instance {0}")]
    MissingEmbedding(String),
    #[error("embedding dimension {found} does not match the model projection ({expected})")]
    EmbeddingDim { expected: usize, found: usize },
    #[error("model was built without an embedding projection but received an embedding")]
    UnexpectedEmbedding,
}

/// Architecture of one meta-optimizer model (one model per problem class
/// and circuit depth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaConfig {
    /// QAOA circuit depth p; the output map emits 2p angles.
    pub depth: usize,
    /// Rollout horizon T.
    pub horizon: usize,
    /// LSTM hidden/cell width.
    pub hidden: usize,
    /// Input width of the embedding projection, if conditioned.
    pub embed_dim: Option<usize>,
}

impl MetaConfig {
    pub fn new(depth: usize, embed_dim: Option<usize>) -> MetaConfig {
        MetaConfig { depth, horizon: 10, hidden: 48, embed_dim }
    }

    fn input_dim(&self) -> usize {
        1 + 2 * self.depth
    }
}

/// LSTM weights, output map, and optional embedding projection.
#[derive(Debug, Clone)]
pub struct MetaOptimizerModel {
    pub config: MetaConfig,
    pub params: ParameterStore,
}

impl MetaOptimizerModel {
    pub fn new<R: Rng>(config: MetaConfig, rng: &mut R) -> MetaOptimizerModel {
        let mut params = ParameterStore::new();
        init_lstm_params(&mut params, "lstm", config.input_dim(), config.hidden, rng);
        params.insert("w_out", uniform_init(2 * config.depth, config.hidden, config.hidden, rng));
        if let Some(embed_dim) = config.embed_dim {
            params.insert("p_embed", uniform_init(config.hidden, embed_dim, embed_dim, rng));
        }
        MetaOptimizerModel { config, params }
    }

    /// Rebuild a model from checkpointed weights; depth, hidden size, and
    /// embedding width are recovered from the tensor shapes.
    pub fn from_params(params: ParameterStore, horizon: usize) -> MetaOptimizerModel {
        let (out_rows, hidden) = params.get("w_out").shape();
        assert!(out_rows % 2 == 0, "output map must emit gamma/beta pairs");
        let embed_dim = params.contains("p_embed").then(|| params.get("p_embed").shape().1);
        let config = MetaConfig { depth: out_rows / 2, horizon, hidden, embed_dim };
        MetaOptimizerModel { config, params }
    }
}

/// One generated trajectory: angles, raw and normalized energies, and the
/// recurrent state values at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// thetas[t] is the flat angle vector emitted at step t+1.
    pub thetas: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    pub normalized_energies: Vec<f64>,
    pub hidden_states: Vec<Vec<f64>>,
    pub cell_states: Vec<Vec<f64>>,
    /// Normalized energy of the uniform superposition (step 0 input).
    pub initial_normalized_energy: f64,
}

/// Trajectory weights omega_t; larger weights emphasize later steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    pub omega: Vec<f64>,
}

impl LossWeights {
    pub fn new(omega: Vec<f64>) -> LossWeights {
        assert!(!omega.is_empty());
        assert!(
            omega.windows(2).all(|w| w[0] <= w[1]),
            "trajectory weights must be nondecreasing"
        );
        LossWeights { omega }
    }

    /// The linear decay schedule omega_t = t / 10.
    pub fn linear(horizon: usize) -> LossWeights {
        LossWeights::new((1..=horizon).map(|t| t as f64 / 10.0).collect())
    }
}

/// Whether a rollout records adjoint gradients (training) or only runs
/// the simulator forward (evaluation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutMode {
    Train,
    Eval,
}

/// Handles into the tape for the differentiable pieces of one rollout.
pub struct RolloutTrace {
    pub rollout: Rollout,
    /// Normalized energies on the tape, one per step.
    pub ebar_vars: Vec<Var>,
}

fn energy_var(
    tape: &Tape,
    theta_var: Var,
    h: &CostHamiltonian,
    mode: RolloutMode,
) -> (Var, f64) {
    let theta = ParameterVector::from_flat(&tape.value(theta_var).data);
    match mode {
        RolloutMode::Train => {
            let (e, grad) = energy_and_gradient(h, &theta);
            let grad = Matrix::column(&grad);
            let var = tape.custom_unary(theta_var, Matrix::scalar(e), move |g| {
                grad.scale(g.scalar_value())
            });
            (var, e)
        }
        RolloutMode::Eval => {
            let e = energy(h, &theta);
            let zero = Matrix::zeros(2 * theta.depth(), 1);
            let var = tape.custom_unary(theta_var, Matrix::scalar(e), move |_| zero.clone());
            (var, e)
        }
    }
}

/// Unroll the meta-optimizer for `horizon` steps on the tape.
///
/// `embedding` conditions every step by adding the projected vector to the
/// hidden state before the output map. `feedback_override`, when given,
/// replaces the energy component of the input z_t with fixed values; the
/// live path feeds the previous step's normalized energy as a constant
/// (no gradient flows through the feedback input either way), so the
/// override exists to make the recorded computation reproducible for
/// finite-difference checks.
#[allow(clippy::too_many_arguments)]
pub fn rollout_on_tape(
    tape: &Tape,
    binding: &TapeBinding,
    config: &MetaConfig,
    h: &CostHamiltonian,
    embedding: Option<&[f64]>,
    horizon: usize,
    mode: RolloutMode,
    feedback_override: Option<&[f64]>,
) -> Result<RolloutTrace, MetaError> {
    let projected_embedding = match (embedding, config.embed_dim) {
        (None, _) => None,
        (Some(_), None) => return Err(MetaError::UnexpectedEmbedding),
        (Some(e), Some(dim)) => {
            if e.len() != dim {
                return Err(MetaError::EmbeddingDim { expected: dim, found: e.len() });
            }
            let g = tape.leaf(Matrix::column(e));
            Some(tape.matmul(binding.var("p_embed"), g))
        }
    };

    let ebar0 = normalized_energy(h.mean_diagonal(), h).expect("positive l1 norm");
    let mut h_state = tape.leaf(Matrix::zeros(config.hidden, 1));
    let mut s_state = tape.leaf(Matrix::zeros(config.hidden, 1));
    let mut theta_var = tape.leaf(Matrix::zeros(2 * config.depth, 1));
    let mut ebar_prev = ebar0;

    let mut rollout = Rollout {
        thetas: Vec::with_capacity(horizon),
        energies: Vec::with_capacity(horizon),
        normalized_energies: Vec::with_capacity(horizon),
        hidden_states: Vec::with_capacity(horizon),
        cell_states: Vec::with_capacity(horizon),
        initial_normalized_energy: ebar0,
    };
    let mut ebar_vars = Vec::with_capacity(horizon);

    for t in 0..horizon {
        let feedback = feedback_override.map_or(ebar_prev, |f| f[t]);
        // The energy input enters as a constant leaf: the feedback path
        // carries no gradient.
        let energy_input = tape.leaf(Matrix::scalar(feedback));
        let z = tape.concat_rows(&[energy_input, theta_var]);
        let (h_next, s_next) = lstm_cell(tape, binding, "lstm", z, h_state, s_state);
        h_state = h_next;
        s_state = s_next;
        let conditioned = match projected_embedding {
            Some(pg) => tape.add(h_state, pg),
            None => h_state,
        };
        theta_var = tape.matmul(binding.var("w_out"), conditioned);

        let (e_var, e) = energy_var(tape, theta_var, h, mode);
        let ebar_var = tape.scale(e_var, 1.0 / h.l1_norm);
        let ebar = e / h.l1_norm;
        ebar_vars.push(ebar_var);

        rollout.thetas.push(tape.value(theta_var).data);
        rollout.energies.push(e);
        rollout.normalized_energies.push(ebar);
        rollout.hidden_states.push(tape.value(h_state).data);
        rollout.cell_states.push(tape.value(s_state).data);
        ebar_prev = ebar;
    }
    Ok(RolloutTrace { rollout, ebar_vars })
}

/// Evaluation-mode rollout with no gradient bookkeeping.
pub fn rollout(
    model: &MetaOptimizerModel,
    h: &CostHamiltonian,
    embedding: Option<&[f64]>,
    horizon: usize,
) -> Result<Rollout, MetaError> {
    let tape = Tape::new();
    let binding = TapeBinding::bind(&tape, &model.params);
    let trace = rollout_on_tape(
        &tape,
        &binding,
        &model.config,
        h,
        embedding,
        horizon,
        RolloutMode::Eval,
        None,
    )?;
    Ok(trace.rollout)
}

/// Trajectory loss sum_t omega_t Ebar_t on the tape.
pub fn meta_loss_on_tape(tape: &Tape, ebar_vars: &[Var], weights: &LossWeights) -> Var {
    assert_eq!(ebar_vars.len(), weights.omega.len(), "weights must match the horizon");
    let mut total = tape.leaf(Matrix::scalar(0.0));
    for (&ebar, &w) in ebar_vars.iter().zip(weights.omega.iter()) {
        total = tape.add(total, tape.scale(ebar, w));
    }
    total
}

/// Value-level trajectory loss of a finished rollout.
pub fn meta_loss_value(rollout: &Rollout, weights: &LossWeights) -> f64 {
    assert_eq!(rollout.normalized_energies.len(), weights.omega.len(), "length mismatch");
    rollout
        .normalized_energies
        .iter()
        .zip(weights.omega.iter())
        .map(|(e, w)| e * w)
        .sum()
}

/// One training instance: the Hamiltonian plus its optional conditioning
/// embedding.
#[derive(Debug, Clone)]
pub struct TrainInstance {
    pub id: String,
    pub hamiltonian: CostHamiltonian,
    pub embedding: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { batch: 32, epochs: 100, lr: 1e-3, horizon: 10, seed: 0 }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Mean normalized energy at the final rollout step over the train set.
    pub mean_final_ebar: f64,
    pub wall_time_secs: f64,
}

fn instance_grads(
    model_params: &ParameterStore,
    config: &MetaConfig,
    instance: &TrainInstance,
    weights: &LossWeights,
    horizon: usize,
) -> Result<(f64, BTreeMap<String, Matrix>), MetaError> {
    let tape = Tape::new();
    let binding = TapeBinding::bind(&tape, model_params);
    let trace = rollout_on_tape(
        &tape,
        &binding,
        config,
        &instance.hamiltonian,
        instance.embedding.as_deref(),
        horizon,
        RolloutMode::Train,
        None,
    )?;
    let loss = meta_loss_on_tape(&tape, &trace.ebar_vars, weights);
    let loss_value = tape.value(loss).scalar_value();
    let grads = tape.backward(loss);
    Ok((loss_value, binding.grads_by_name(model_params, &grads)))
}

/// Mean final-step normalized energy of eval rollouts over `instances`.
pub fn mean_final_ebar(
    model: &MetaOptimizerModel,
    instances: &[TrainInstance],
    horizon: usize,
) -> Result<f64, MetaError> {
    let finals: Vec<f64> = instances
        .par_iter()
        .map(|inst| {
            rollout(model, &inst.hamiltonian, inst.embedding.as_deref(), horizon)
                .map(|r| *r.normalized_energies.last().expect("horizon >= 1"))
        })
        .collect::<Result<_, _>>()?;
    Ok(finals.iter().sum::<f64>() / finals.len().max(1) as f64)
}

/// Train by mini-batch Adam on the mean per-instance trajectory loss.
/// Returns the checkpoint with the lowest mean final-step normalized
/// energy on the training set, plus the per-epoch history. Rollouts
/// within a batch run in parallel; gradients reduce in instance order so
/// results do not depend on the thread count.
pub fn train(
    mut model: MetaOptimizerModel,
    instances: &[TrainInstance],
    config: &TrainConfig,
) -> Result<(MetaOptimizerModel, Vec<EpochStats>), MetaError> {
    assert!(!instances.is_empty(), "training set must be nonempty");
    let weights = LossWeights::linear(config.horizon);
    let mut adam = AdamState::new(&model.params);
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, ParameterStore)> = None;
    let start = std::time::Instant::now();

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..instances.len()).collect();
        order.shuffle(&mut stream_rng(config.seed, 1000 + epoch as u64));

        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch) {
            let results: Vec<(f64, BTreeMap<String, Matrix>)> = chunk
                .par_iter()
                .map(|&idx| {
                    instance_grads(&model.params, &model.config, &instances[idx], &weights, config.horizon)
                })
                .collect::<Result<_, _>>()?;
            let mut mean_grads: Option<BTreeMap<String, Matrix>> = None;
            for (loss, grads) in results {
                epoch_loss += loss;
                match &mut mean_grads {
                    None => mean_grads = Some(grads),
                    Some(acc) => {
                        for (name, grad) in grads {
                            acc.get_mut(&name).expect("same parameter set").add_assign(&grad);
                        }
                    }
                }
            }
            if let Some(mut grads) = mean_grads {
                for grad in grads.values_mut() {
                    *grad = grad.scale(1.0 / chunk.len() as f64);
                }
                adam_step(&mut model.params, &grads, &mut adam, config.lr);
            }
        }

        let final_ebar = mean_final_ebar(&model, instances, config.horizon)?;
        if best.as_ref().is_none_or(|(b, _)| final_ebar < *b) {
            best = Some((final_ebar, model.params.clone()));
        }
        history.push(EpochStats {
            epoch,
            mean_loss: epoch_loss / instances.len() as f64,
            mean_final_ebar: final_ebar,
            wall_time_secs: start.elapsed().as_secs_f64(),
        });
    }

    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok((model, history))
}

/// Copy-on-adapt fine-tuning: `steps` Adam updates of the single-instance
/// trajectory loss. The input model is untouched.
pub fn fine_tune(
    model: &MetaOptimizerModel,
    h: &CostHamiltonian,
    embedding: Option<&[f64]>,
    steps: usize,
    lr: f64,
    horizon: usize,
) -> Result<MetaOptimizerModel, MetaError> {
    let mut adapted = model.clone();
    let mut adam = AdamState::new(&adapted.params);
    let weights = LossWeights::linear(horizon);
    let instance = TrainInstance {
        id: "fine-tune".into(),
        hamiltonian: h.clone(),
        embedding: embedding.map(<[f64]>::to_vec),
    };
    for _ in 0..steps {
        let (_, grads) =
            instance_grads(&adapted.params, &adapted.config, &instance, &weights, horizon)?;
        adam_step(&mut adapted.params, &grads, &mut adam, lr);
    }
    Ok(adapted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_connected_graph;
    use crate::hamiltonian::build_cost_hamiltonian;
    use crate::problem::ProblemClass;

    fn small_model(depth: usize, embed_dim: Option<usize>, seed: u64) -> MetaOptimizerModel {
        let mut config = MetaConfig::new(depth, embed_dim);
        config.hidden = 16;
        MetaOptimizerModel::new(config, &mut stream_rng(seed, 0))
    }

    fn mis_instance(seed: u64, n: usize) -> CostHamiltonian {
        let mut rng = stream_rng(seed, 7);
        let g = generate_random_connected_graph("g", n, 3, &mut rng).unwrap();
        build_cost_hamiltonian(ProblemClass::Mis, &g)
    }

    #[test]
    fn zero_embedding_equals_unconditioned_rollout() {
        let model = small_model(2, Some(6), 3);
        let h = mis_instance(3, 5);
        let zero = vec![0.0; 6];
        let with_zero = rollout(&model, &h, Some(&zero), 6).unwrap();
        let without = rollout(&model, &h, None, 6).unwrap();
        assert_eq!(with_zero, without);
    }

    #[test]
    fn zero_output_map_freezes_the_trajectory() {
        let mut model = small_model(2, None, 5);
        let shape = model.params.get("w_out").shape();
        *model.params.get_mut("w_out") = Matrix::zeros(shape.0, shape.1);
        let h = mis_instance(5, 5);
        let r = rollout(&model, &h, None, 4).unwrap();
        for t in 0..4 {
            assert_eq!(r.thetas[t], vec![0.0; 4]);
            assert!((r.normalized_energies[t] - r.initial_normalized_energy).abs() < 1e-15);
        }
    }

    #[test]
    fn normalized_energies_stay_bounded() {
        let model = small_model(4, None, 7);
        let h = mis_instance(7, 6);
        let r = rollout(&model, &h, None, 10).unwrap();
        for &e in &r.normalized_energies {
            assert!(e.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn meta_loss_examples() {
        let weights = LossWeights::linear(10);
        let rollout = Rollout {
            thetas: vec![vec![]; 10],
            energies: vec![0.0; 10],
            normalized_energies: vec![-1.0; 10],
            hidden_states: vec![vec![]; 10],
            cell_states: vec![vec![]; 10],
            initial_normalized_energy: 0.0,
        };
        assert!((meta_loss_value(&rollout, &weights) + 5.5).abs() < 1e-12);

        let zeros = Rollout { normalized_energies: vec![0.0; 10], ..rollout.clone() };
        assert_eq!(meta_loss_value(&zeros, &weights), 0.0);

        let single = Rollout {
            thetas: vec![vec![]],
            energies: vec![0.0],
            normalized_energies: vec![-0.5],
            hidden_states: vec![vec![]],
            cell_states: vec![vec![]],
            initial_normalized_energy: 0.0,
        };
        assert!((meta_loss_value(&single, &LossWeights::new(vec![0.1])) + 0.05).abs() < 1e-15);
    }

    #[test]
    fn loss_is_bounded_below_by_weight_sum() {
        let model = small_model(3, None, 11);
        let h = mis_instance(11, 6);
        let weights = LossWeights::linear(8);
        let r = rollout(&model, &h, None, 8).unwrap();
        let bound: f64 = weights.omega.iter().sum();
        assert!(meta_loss_value(&r, &weights) >= -bound - 1e-9);
    }

    #[test]
    #[should_panic(expected = "nondecreasing")]
    fn decreasing_weights_are_rejected() {
        let _ = LossWeights::new(vec![0.5, 0.1]);
    }

    #[test]
    fn embedding_dimension_is_checked() {
        let model = small_model(2, Some(6), 13);
        let h = mis_instance(13, 5);
        let wrong = vec![0.0; 4];
        assert!(matches!(
            rollout(&model, &h, Some(&wrong), 3),
            Err(MetaError::EmbeddingDim { expected: 6, found: 4 })
        ));
        let unconditioned = small_model(2, None, 13);
        assert!(matches!(
            rollout(&unconditioned, &h, Some(&[0.0; 6]), 3),
            Err(MetaError::UnexpectedEmbedding)
        ));
    }

    #[test]
    fn fine_tune_zero_steps_is_identity() {
        let model = small_model(2, None, 17);
        let h = mis_instance(17, 5);
        let adapted = fine_tune(&model, &h, None, 0, 1e-3, 5).unwrap();
        assert_eq!(model.params, adapted.params);
        assert_eq!(
            rollout(&model, &h, None, 5).unwrap(),
            rollout(&adapted, &h, None, 5).unwrap()
        );
    }

    #[test]
    fn batch_of_identical_instances_equals_single_instance_loss() {
        let model = small_model(2, None, 19);
        let h = mis_instance(19, 5);
        let weights = LossWeights::linear(4);
        let instance = TrainInstance { id: "a".into(), hamiltonian: h, embedding: None };
        let (single, _) =
            instance_grads(&model.params, &model.config, &instance, &weights, 4).unwrap();
        // The batch loss is the mean of per-instance losses; for copies of
        // one instance that mean equals the single loss.
        let copies = [instance.clone(), instance.clone(), instance];
        let total: f64 = copies
            .iter()
            .map(|inst| {
                instance_grads(&model.params, &model.config, inst, &weights, 4).unwrap().0
            })
            .sum();
        assert!((total / 3.0 - single).abs() < 1e-15);
    }

    #[test]
    fn single_instance_training_makes_progress() {
        // Smoke test: on one instance for 5 epochs the loss is
        // nonincreasing between consecutive epochs at least 3 times.
        let model = small_model(2, None, 23);
        let h = mis_instance(23, 5);
        let instances =
            vec![TrainInstance { id: "a".into(), hamiltonian: h, embedding: None }];
        let config = TrainConfig { batch: 1, epochs: 5, lr: 1e-2, horizon: 5, seed: 23 };
        let (_, history) = train(model, &instances, &config).unwrap();
        let nonincreasing = history
            .windows(2)
            .filter(|w| w[1].mean_loss <= w[0].mean_loss + 1e-12)
            .count();
        assert!(nonincreasing >= 3, "only {nonincreasing} nonincreasing epochs: {history:?}");
    }

    #[test]
    fn training_is_reproducible() {
        let make = || {
            let model = small_model(2, None, 29);
            let instances: Vec<TrainInstance> = (0..4)
                .map(|i| TrainInstance {
                    id: format!("g{i}"),
                    hamiltonian: mis_instance(29 + i, 5),
                    embedding: None,
                })
                .collect();
            let config = TrainConfig { batch: 2, epochs: 3, lr: 1e-3, horizon: 4, seed: 29 };
            let (trained, history) = train(model, &instances, &config).unwrap();
            let losses: Vec<f64> = history.iter().map(|e| e.mean_loss).collect();
            (losses, format!("{:?}", trained.params.get("w_out").data))
        };
        assert_eq!(make(), make());
    }

    #[test]
    fn frozen_feedback_matches_live_rollout_at_base_point() {
        let model = small_model(2, None, 31);
        let h = mis_instance(31, 5);
        let live = rollout(&model, &h, None, 4).unwrap();
        let mut frozen_inputs = vec![live.initial_normalized_energy];
        frozen_inputs.extend_from_slice(&live.normalized_energies[..3]);

        let tape = Tape::new();
        let binding = TapeBinding::bind(&tape, &model.params);
        let trace = rollout_on_tape(
            &tape,
            &binding,
            &model.config,
            &h,
            None,
            4,
            RolloutMode::Eval,
            Some(&frozen_inputs),
        )
        .unwrap();
        assert_eq!(live, trace.rollout);
    }

    #[test]
    fn conditioned_rollout_uses_the_embedding() {
        let model = small_model(2, Some(6), 37);
        let h = mis_instance(37, 5);
        let g1 = vec![0.5; 6];
        let g2 = vec![-0.5; 6];
        let r1 = rollout(&model, &h, Some(&g1), 4).unwrap();
        let r2 = rollout(&model, &h, Some(&g2), 4).unwrap();
        assert_ne!(r1.thetas, r2.thetas);
    }
}
