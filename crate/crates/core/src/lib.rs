//! Graph-conditioned meta-learning of QAOA parameters.
//!
//! The crate bundles everything needed to train and evaluate a recurrent
//! meta-optimizer that emits QAOA angle trajectories for four graph
//! problems (MaxCut, MIS, MaxClique, MVC):
//!
//! * [`graph`] / [`dataset`] — random connected graph instances and the
//!   non-isomorphic train/test datasets built from them.
//! * [`problem`] — classical objectives, feasibility, QP/QUBO encodings,
//!   and brute-force oracles.
//! * [`hamiltonian`] — diagonal cost Hamiltonians as Z-polynomials with
//!   their Pauli-coefficient l1 normalization.
//! * [`simulator`] — exact statevector QAOA simulation with adjoint-mode
//!   analytic gradients and shot sampling.
//! * [`nn`] — a small dense-tensor reverse-mode autodiff core (LSTM cell,
//!   MLPs, Adam).
//! * [`embedding`] — structural WL embeddings and the problem-aware
//!   heterogeneous-GNN embedding with unsupervised QUBO pre-training.
//! * [`meta`] — the graph-conditioned LSTM meta-optimizer: rollouts, loss,
//!   end-to-end training through the simulator, fine-tuning.
//! * [`baseline`], [`metrics`], [`experiments`] — vanilla-QAOA baseline,
//!   feasibility-aware metrics, and experiment orchestration.

pub mod baseline;
pub mod dataset;
pub mod embedding;
pub mod experiments;
pub mod graph;
pub mod hamiltonian;
pub mod meta;
pub mod metrics;
pub mod nn;
pub mod problem;
pub mod rng;
pub mod simulator;
