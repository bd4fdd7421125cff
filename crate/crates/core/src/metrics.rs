//! Feasibility-aware evaluation metrics over measured bitstrings.
//!
//! All three rates are computed from a weighted outcome distribution:
//! shot counts after sampling, or the exact |psi_x|^2 probabilities. The
//! approximation ratio conditions on the feasible outcomes (renormalized
//! by the feasible mass); MVC reports the relative gap AR - 1 instead.

use crate::graph::GraphInstance;
use crate::problem::{
    index_to_bits, is_feasible, objective_value, OracleResult, ProblemClass, Sense,
};
use crate::simulator::{exact_probabilities, sample, SampleSet, StateVector};
use rand::Rng;

/// One evaluated instance. `steps` is the optimizer-iteration column and
/// is filled in by the experiment layer (mean Adam steps for the vanilla
/// baseline, the rollout horizon for meta-optimizers).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Fraction of all shots that are feasible and attain the optimum.
    pub optimal_hit_rate: f64,
    /// Mean feasible objective over the optimum (AR), or AR - 1 for MVC.
    /// Missing when no feasible outcome was observed.
    pub approximation_ratio: Option<f64>,
    /// Fraction of shots satisfying the constraints; absent for MaxCut.
    pub feasibility_rate: Option<f64>,
    pub steps: f64,
}

/// Both readings of the feasible-conditioned expectation, available in
/// exact-probability mode: `renormalized` divides by the feasible mass,
/// `unrenormalized` does not.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleExpectation {
    pub renormalized: Option<f64>,
    pub unrenormalized: f64,
}

fn metrics_from_weights(
    class: ProblemClass,
    g: &GraphInstance,
    outcomes: impl Iterator<Item = (usize, f64)>,
    oracle: &OracleResult,
) -> MetricsReport {
    let optimum = oracle.optimal_value;
    let mut total = 0.0;
    let mut feasible_mass = 0.0;
    let mut hit_mass = 0.0;
    let mut feasible_objective = 0.0;
    let mut all_objective = 0.0;
    for (idx, weight) in outcomes {
        let x = index_to_bits(idx, g.n);
        let value = objective_value(class, g, &x);
        total += weight;
        all_objective += weight * value;
        if is_feasible(class, g, &x) {
            feasible_mass += weight;
            feasible_objective += weight * value;
            if (value - optimum).abs() < 1e-9 {
                hit_mass += weight;
            }
        }
    }
    assert!(total > 0.0);
    let optimal_hit_rate = hit_mass / total;
    let approximation_ratio = match class {
        ProblemClass::MaxCut => Some(all_objective / total / optimum),
        _ if feasible_mass > 0.0 => {
            let mean_feasible = feasible_objective / feasible_mass;
            match class.sense() {
                Sense::Maximize => Some(mean_feasible / optimum),
                Sense::Minimize => Some(mean_feasible / optimum - 1.0),
            }
        }
        _ => None,
    };
    let feasibility_rate = class.is_constrained().then_some(feasible_mass / total);
    MetricsReport { optimal_hit_rate, approximation_ratio, feasibility_rate, steps: 0.0 }
}

/// Metrics from a finished sample set.
pub fn evaluate_sample_set(
    class: ProblemClass,
    g: &GraphInstance,
    samples: &SampleSet,
    oracle: &OracleResult,
) -> MetricsReport {
    assert_eq!(samples.n, g.n);
    metrics_from_weights(
        class,
        g,
        samples.counts.iter().map(|(&idx, &count)| (idx, f64::from(count))),
        oracle,
    )
}

/// Sample `shots` measurements from the state and evaluate.
pub fn evaluate_metrics<R: Rng>(
    class: ProblemClass,
    g: &GraphInstance,
    state: &StateVector,
    shots: u32,
    rng: &mut R,
    oracle: &OracleResult,
) -> MetricsReport {
    let samples = sample(state, shots, rng);
    evaluate_sample_set(class, g, &samples, oracle)
}

/// Shot-free metrics from the exact outcome distribution.
pub fn evaluate_metrics_exact(
    class: ProblemClass,
    g: &GraphInstance,
    state: &StateVector,
    oracle: &OracleResult,
) -> MetricsReport {
    let probs = exact_probabilities(state);
    metrics_from_weights(class, g, probs.into_iter().enumerate().map(|(i, p)| (i, p)), oracle)
}

/// Exact-mode feasible-conditioned expectation under both readings,
/// normalized by the optimum.
pub fn exact_feasible_expectation(
    class: ProblemClass,
    g: &GraphInstance,
    state: &StateVector,
    oracle: &OracleResult,
) -> FeasibleExpectation {
    let probs = exact_probabilities(state);
    let mut feasible_mass = 0.0;
    let mut feasible_objective = 0.0;
    for (idx, p) in probs.into_iter().enumerate() {
        let x = index_to_bits(idx, g.n);
        if is_feasible(class, g, &x) {
            feasible_mass += p;
            feasible_objective += p * objective_value(class, g, &x);
        }
    }
    FeasibleExpectation {
        renormalized: (feasible_mass > 0.0)
            .then(|| feasible_objective / feasible_mass / oracle.optimal_value),
        unrenormalized: feasible_objective / oracle.optimal_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_connected_graph;
    use crate::hamiltonian::build_cost_hamiltonian;
    use crate::problem::brute_force_optimum;
    use crate::rng::stream_rng;
    use crate::simulator::{prepare_plus_state, run_qaoa, ParameterVector};
    use std::collections::BTreeMap;

    fn single_edge() -> GraphInstance {
        GraphInstance::new("e", 2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn worked_mis_example() {
        // Counts over (00, 01, 10, 11) = (2500, 1500, 500, 500):
        // FR = 0.9, p(x*) = 0.4, AR = (2000/4500)/1.
        let g = single_edge();
        let oracle = brute_force_optimum(ProblemClass::Mis, &g);
        let counts: BTreeMap<usize, u32> =
            [(0b00, 2500), (0b01, 1500), (0b10, 500), (0b11, 500)].into_iter().collect();
        let samples = SampleSet { n: 2, counts, shots: 5000 };
        let report = evaluate_sample_set(ProblemClass::Mis, &g, &samples, &oracle);
        assert!((report.feasibility_rate.unwrap() - 0.9).abs() < 1e-12);
        assert!((report.optimal_hit_rate - 0.4).abs() < 1e-12);
        assert!((report.approximation_ratio.unwrap() - 2000.0 / 4500.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_basis_state_is_perfect() {
        let g = single_edge();
        let oracle = brute_force_optimum(ProblemClass::Mis, &g);
        let state = StateVector::basis_state(2, 0b01);
        let report = evaluate_metrics(
            ProblemClass::Mis,
            &g,
            &state,
            5000,
            &mut stream_rng(1, 0),
            &oracle,
        );
        assert_eq!(report.feasibility_rate, Some(1.0));
        assert_eq!(report.optimal_hit_rate, 1.0);
        assert_eq!(report.approximation_ratio, Some(1.0));
    }

    #[test]
    fn maxcut_uniform_state_ar_is_three_quarters_exactly() {
        let k3 = GraphInstance::complete("k3", 3);
        let oracle = brute_force_optimum(ProblemClass::MaxCut, &k3);
        let state = prepare_plus_state(3);
        let exact = evaluate_metrics_exact(ProblemClass::MaxCut, &k3, &state, &oracle);
        assert!((exact.approximation_ratio.unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(exact.feasibility_rate, None);

        // Sampled value converges within the 3-sigma binomial envelope.
        let sampled =
            evaluate_metrics(ProblemClass::MaxCut, &k3, &state, 5000, &mut stream_rng(2, 0), &oracle);
        assert!((sampled.approximation_ratio.unwrap() - 0.75).abs() < 0.02);
    }

    #[test]
    fn zero_feasible_mass_reports_missing_ar() {
        let g = single_edge();
        let oracle = brute_force_optimum(ProblemClass::Mis, &g);
        // All mass on the infeasible 11 outcome.
        let state = StateVector::basis_state(2, 0b11);
        let report = evaluate_metrics_exact(ProblemClass::Mis, &g, &state, &oracle);
        assert_eq!(report.feasibility_rate, Some(0.0));
        assert_eq!(report.approximation_ratio, None);
        assert_eq!(report.optimal_hit_rate, 0.0);
    }

    #[test]
    fn mvc_exact_gap_is_nonnegative() {
        let mut rng = stream_rng(3, 0);
        for trial in 0..10 {
            let g = generate_random_connected_graph(format!("g{trial}"), 5, 3, &mut rng).unwrap();
            let oracle = brute_force_optimum(ProblemClass::Mvc, &g);
            let h = build_cost_hamiltonian(ProblemClass::Mvc, &g);
            let theta = ParameterVector::new(
                (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
                (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
            );
            let state = run_qaoa(&h, &theta);
            let report = evaluate_metrics_exact(ProblemClass::Mvc, &g, &state, &oracle);
            assert!(report.approximation_ratio.unwrap() >= -1e-12);
        }
    }

    #[test]
    fn exact_and_sampled_metrics_agree_within_noise() {
        let g = single_edge();
        let oracle = brute_force_optimum(ProblemClass::Mis, &g);
        let h = build_cost_hamiltonian(ProblemClass::Mis, &g);
        let state = run_qaoa(&h, &ParameterVector::new(vec![0.3], vec![0.4]));
        let exact = evaluate_metrics_exact(ProblemClass::Mis, &g, &state, &oracle);
        let sampled =
            evaluate_metrics(ProblemClass::Mis, &g, &state, 5000, &mut stream_rng(5, 0), &oracle);
        // 3 sigma of a Bernoulli rate at 5000 shots is at most ~0.021.
        assert!((exact.feasibility_rate.unwrap() - sampled.feasibility_rate.unwrap()).abs() < 0.022);
        assert!((exact.optimal_hit_rate - sampled.optimal_hit_rate).abs() < 0.022);
    }

    #[test]
    fn both_ar_readings_are_available_in_exact_mode() {
        let g = single_edge();
        let oracle = brute_force_optimum(ProblemClass::Mis, &g);
        let state = prepare_plus_state(2);
        let both = exact_feasible_expectation(ProblemClass::Mis, &g, &state, &oracle);
        // Uniform state: feasible mass 3/4, feasible objective mass 1/2.
        assert!((both.unrenormalized - 0.5).abs() < 1e-12);
        assert!((both.renormalized.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }
}
