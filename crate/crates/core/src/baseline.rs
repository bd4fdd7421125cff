//! Per-instance vanilla QAOA: Adam from a random initialization, the
//! empirical upper-bound baseline for the learned optimizers.

use crate::hamiltonian::CostHamiltonian;
use crate::nn::{adam_step, AdamState, Matrix, ParameterStore};
use crate::simulator::{energy_and_gradient, run_qaoa, ParameterVector, StateVector};
use rand::Rng;

pub const VANILLA_MAX_STEPS: u32 = 500;
pub const VANILLA_TOLERANCE: f64 = 1e-8;
pub const VANILLA_LR: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct VanillaRun {
    pub theta: ParameterVector,
    /// Gradient evaluations performed before convergence or the cap.
    pub steps_used: u32,
    pub final_state: StateVector,
    pub energy_trace: Vec<f64>,
}

/// Optimize `2p` angles with Adam (lr 0.01) from gamma ~ U[-pi, pi),
/// beta ~ U[-pi/2, pi/2), stopping after 500 steps or when the energy
/// change between consecutive steps falls below 1e-8.
pub fn run_vanilla_qaoa<R: Rng>(h: &CostHamiltonian, p: usize, rng: &mut R) -> VanillaRun {
    use std::f64::consts::{FRAC_PI_2, PI};
    let gamma: Vec<f64> = (0..p).map(|_| rng.random_range(-PI..PI)).collect();
    let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-FRAC_PI_2..FRAC_PI_2)).collect();
    let mut params = ParameterStore::new();
    params.insert("theta", Matrix::column(&ParameterVector::new(gamma, beta).flat()));
    let mut adam = AdamState::new(&params);

    let mut trace = Vec::new();
    let mut steps_used = 0;
    let mut previous: Option<f64> = None;
    for _ in 0..VANILLA_MAX_STEPS {
        let theta = ParameterVector::from_flat(&params.get("theta").data);
        let (e, grad) = energy_and_gradient(h, &theta);
        steps_used += 1;
        trace.push(e);
        if previous.is_some_and(|prev| (e - prev).abs() < VANILLA_TOLERANCE) {
            break;
        }
        previous = Some(e);
        let grads = [("theta".to_string(), Matrix::column(&grad))].into_iter().collect();
        adam_step(&mut params, &grads, &mut adam, VANILLA_LR);
    }

    let theta = ParameterVector::from_flat(&params.get("theta").data);
    let final_state = run_qaoa(h, &theta);
    VanillaRun { theta, steps_used, final_state, energy_trace: trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphInstance;
    use crate::hamiltonian::build_cost_hamiltonian;
    use crate::problem::ProblemClass;
    use crate::rng::stream_rng;
    use crate::simulator::expectation;

    fn single_edge_maxcut() -> CostHamiltonian {
        build_cost_hamiltonian(ProblemClass::MaxCut, &GraphInstance::new("e", 2, &[(0, 1)]).unwrap())
    }

    #[test]
    fn p1_single_edge_reaches_the_known_optimum() {
        // Depth-1 QAOA solves one-edge MaxCut exactly: <H_C> -> -1.
        let h = single_edge_maxcut();
        let run = run_vanilla_qaoa(&h, 1, &mut stream_rng(101, 0));
        let e = expectation(&run.final_state, &h);
        assert!((e + 1.0).abs() < 1e-4, "converged energy {e}");
        assert!(run.steps_used <= VANILLA_MAX_STEPS);
    }

    #[test]
    fn restart_from_converged_angles_stops_quickly() {
        // A cold Adam restart still takes sign-normalized first steps, so
        // re-damping to the 1e-8 tolerance needs 60-90 iterations across
        // seeds; assert it stays an order of magnitude under the budget.
        let h = single_edge_maxcut();
        let first = run_vanilla_qaoa(&h, 1, &mut stream_rng(103, 0));
        let mut params = ParameterStore::new();
        params.insert("theta", Matrix::column(&first.theta.flat()));
        let mut adam = AdamState::new(&params);
        let mut steps = 0;
        let mut previous: Option<f64> = None;
        for _ in 0..VANILLA_MAX_STEPS {
            let theta = ParameterVector::from_flat(&params.get("theta").data);
            let (e, grad) = energy_and_gradient(&h, &theta);
            steps += 1;
            if previous.is_some_and(|prev| (e - prev).abs() < VANILLA_TOLERANCE) {
                break;
            }
            previous = Some(e);
            let grads = [("theta".to_string(), Matrix::column(&grad))].into_iter().collect();
            adam_step(&mut params, &grads, &mut adam, VANILLA_LR);
        }
        assert!(steps < 120, "restart took {steps} steps");
        assert!(steps < first.steps_used, "restart should beat the cold run");
    }

    #[test]
    fn energy_trace_is_nonincreasing_over_late_windows() {
        // The 1e-3 tolerance is absolute, so eyeball it on MaxCut whose
        // energies are O(|E|); penalty-scale classes get the same check
        // relative to their l1 norm.
        let mut rng = stream_rng(107, 0);
        let g = crate::graph::generate_random_connected_graph("g", 6, 3, &mut rng).unwrap();
        for class in [ProblemClass::MaxCut, ProblemClass::Mis] {
            let h = build_cost_hamiltonian(class, &g);
            let tolerance = if class == ProblemClass::MaxCut { 1e-3 } else { 1e-3 * h.l1_norm };
            let run = run_vanilla_qaoa(&h, 2, &mut rng);
            let trace = &run.energy_trace;
            if trace.len() > 70 {
                for t in 50..trace.len() - 20 {
                    assert!(
                        trace[t + 20] <= trace[t] + tolerance,
                        "{class} window at {t}: {} -> {}",
                        trace[t],
                        trace[t + 20]
                    );
                }
            }
        }
    }
}
