//! Diagonal cost Hamiltonians as Z-polynomials.
//!
//! Each problem class maps to a sum of Pauli-Z products whose diagonal is
//! materialized as a dense 2^n vector (qubit 0 = least-significant bit of
//! the basis index). The l1 norm of the Pauli coefficients, identity term
//! included, normalizes energies into [-1, 1].

use crate::graph::GraphInstance;
use crate::problem::{index_to_bits, objective_value, ProblemClass};
use std::collections::BTreeMap;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("cannot normalize by a zero Pauli coefficient norm")]
    ZeroNorm,
}

/// One Pauli-Z product term: `coefficient * prod_{i in z_support} Z_i`.
/// An empty support is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub z_support: Vec<usize>,
}

/// A diagonal cost Hamiltonian with its dense basis-state values.
#[derive(Debug, Clone, PartialEq)]
pub struct CostHamiltonian {
    pub n: usize,
    pub terms: Vec<PauliTerm>,
    /// H_C(x) for every basis state, indexed by the bitstring as integer.
    pub diagonal: Vec<f64>,
    /// Sum of |coefficient| over all terms, identity included.
    pub l1_norm: f64,
}

impl CostHamiltonian {
    fn from_term_map(n: usize, map: BTreeMap<Vec<usize>, f64>) -> CostHamiltonian {
        assert!(n <= 20, "dense diagonal materialization is bounded to n <= 20");
        let terms: Vec<PauliTerm> = map
            .into_iter()
            .filter(|(_, coeff)| coeff.abs() > 1e-12)
            .map(|(z_support, coefficient)| PauliTerm { coefficient, z_support })
            .collect();
        let l1_norm = terms.iter().map(|t| t.coefficient.abs()).sum();
        let mut diagonal = vec![0.0; 1 << n];
        for term in &terms {
            let mask: usize = term.z_support.iter().fold(0, |acc, &q| acc | (1 << q));
            for (idx, entry) in diagonal.iter_mut().enumerate() {
                // prod_{i in supp} (1 - 2 x_i) = (-1)^{popcount(idx & mask)}
                let sign = if (idx & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                *entry += term.coefficient * sign;
            }
        }
        CostHamiltonian { n, terms, diagonal, l1_norm }
    }

    pub fn min_diagonal(&self) -> f64 {
        self.diagonal.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_diagonal(&self) -> f64 {
        self.diagonal.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Basis indices minimizing H_C(x); ties within 1e-9.
    pub fn diagonal_argmin(&self) -> Vec<usize> {
        let min = self.min_diagonal();
        self.diagonal
            .iter()
            .enumerate()
            .filter(|(_, &d)| (d - min).abs() < 1e-9)
            .map(|(idx, _)| idx)
            .collect()
    }

    /// Uniform-superposition expectation, i.e. the mean diagonal value.
    pub fn mean_diagonal(&self) -> f64 {
        self.diagonal.iter().sum::<f64>() / self.diagonal.len() as f64
    }

    /// Debug dump of (bitstring, diagonal value) rows as CSV.
    pub fn dump_diagonal_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bitstring,value")?;
        for (idx, value) in self.diagonal.iter().enumerate() {
            writeln!(out, "{},{}", crate::problem::format_bits(idx, self.n), value)?;
        }
        Ok(())
    }
}

/// Build the cost Hamiltonian for `(class, G)`:
///
/// * MaxCut:    (1/2) sum_E (Z_u Z_v - I)
/// * MIS:       3 sum_E (Z_u Z_v - Z_u - Z_v) + sum_V Z_i
/// * MaxClique: the MIS form summed over the complement's edges
/// * MVC:       3 sum_E (Z_u Z_v + Z_u + Z_v) - sum_V Z_i
///
/// Like terms are merged; the identity term is kept.
pub fn build_cost_hamiltonian(class: ProblemClass, g: &GraphInstance) -> CostHamiltonian {
    let mut map: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut add = |support: Vec<usize>, coeff: f64| {
        *map.entry(support).or_insert(0.0) += coeff;
    };
    match class {
        ProblemClass::MaxCut => {
            for &(u, v) in &g.edges {
                add(vec![u, v], 0.5);
                add(vec![], -0.5);
            }
        }
        ProblemClass::Mis | ProblemClass::MaxClique => {
            let penalized = if class == ProblemClass::Mis { g.clone() } else { g.complement() };
            for &(u, v) in &penalized.edges {
                add(vec![u, v], 3.0);
                add(vec![u], -3.0);
                add(vec![v], -3.0);
            }
            for i in 0..g.n {
                add(vec![i], 1.0);
            }
        }
        ProblemClass::Mvc => {
            for &(u, v) in &g.edges {
                add(vec![u, v], 3.0);
                add(vec![u], 3.0);
                add(vec![v], 3.0);
            }
            for i in 0..g.n {
                add(vec![i], -1.0);
            }
        }
    }
    CostHamiltonian::from_term_map(g.n, map)
}

/// Pauli coefficient norm ||alpha||_1 (identity term included).
pub fn pauli_l1_norm(h: &CostHamiltonian) -> f64 {
    h.l1_norm
}

/// Energy normalized by the Pauli coefficient norm; bounded in [-1, 1]
/// for any valid expectation of `h`.
pub fn normalized_energy(e: f64, h: &CostHamiltonian) -> Result<f64, HamiltonianError> {
    if h.l1_norm <= 0.0 {
        return Err(HamiltonianError::ZeroNorm);
    }
    Ok(e / h.l1_norm)
}

/// Verify the exact affine identities between the Hamiltonian diagonal and
/// the classical objective/penalty counts, over all 2^n bitstrings:
///
/// * MaxCut:    H_C(x) = -cut(x)
/// * MIS:       H_C(x) = (n - 3|E|)        - 2 sum x_i + 12 (#selected edges)
/// * MaxClique: the MIS identity over the complement graph
/// * MVC:       H_C(x) = (-n - 3|E|)       + 2 sum x_i + 12 (#uncovered edges)
pub fn hamiltonian_objective_identity_check(class: ProblemClass, g: &GraphInstance) -> bool {
    assert!(g.n <= 12, "identity check enumerates all bitstrings; bounded to n <= 12");
    let h = build_cost_hamiltonian(class, g);
    let penalized = match class {
        ProblemClass::MaxClique => g.complement(),
        _ => g.clone(),
    };
    for idx in 0..(1usize << g.n) {
        let x = index_to_bits(idx, g.n);
        let ones: f64 = x.iter().map(|&b| b as f64).sum();
        let expected = match class {
            ProblemClass::MaxCut => -objective_value(ProblemClass::MaxCut, g, &x),
            ProblemClass::Mis | ProblemClass::MaxClique => {
                let selected_edges =
                    penalized.edges.iter().filter(|&&(u, v)| x[u] == 1 && x[v] == 1).count() as f64;
                (g.n as f64 - 3.0 * penalized.num_edges() as f64) - 2.0 * ones
                    + 12.0 * selected_edges
            }
            ProblemClass::Mvc => {
                let uncovered =
                    g.edges.iter().filter(|&&(u, v)| x[u] == 0 && x[v] == 0).count() as f64;
                (-(g.n as f64) - 3.0 * g.num_edges() as f64) + 2.0 * ones + 12.0 * uncovered
            }
        };
        if (h.diagonal[idx] - expected).abs() > 0.0 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_connected_graph;
    use crate::problem::brute_force_optimum;
    use crate::rng::stream_rng;

    fn single_edge() -> GraphInstance {
        GraphInstance::new("e", 2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn maxcut_k3_diagonal() {
        let h = build_cost_hamiltonian(ProblemClass::MaxCut, &GraphInstance::complete("k3", 3));
        assert_eq!(h.diagonal, vec![0.0, -2.0, -2.0, -2.0, -2.0, -2.0, -2.0, 0.0]);
        assert_eq!(pauli_l1_norm(&h), 3.0);
    }

    #[test]
    fn mis_single_edge_diagonal() {
        let h = build_cost_hamiltonian(ProblemClass::Mis, &single_edge());
        assert_eq!(h.diagonal, vec![-1.0, -3.0, -3.0, 7.0]);
        // Terms merge to 3 Z0Z1 - 2 Z0 - 2 Z1.
        assert_eq!(pauli_l1_norm(&h), 7.0);
        assert_eq!(h.terms.len(), 3);
    }

    #[test]
    fn mvc_single_edge_diagonal() {
        let h = build_cost_hamiltonian(ProblemClass::Mvc, &single_edge());
        assert_eq!(h.diagonal, vec![7.0, -3.0, -3.0, -1.0]);
    }

    #[test]
    fn maxcut_single_edge_l1() {
        let h = build_cost_hamiltonian(ProblemClass::MaxCut, &single_edge());
        assert_eq!(pauli_l1_norm(&h), 1.0);
    }

    #[test]
    fn normalized_energy_examples() {
        let h = build_cost_hamiltonian(ProblemClass::Mis, &single_edge());
        assert!((normalized_energy(-3.0, &h).unwrap() + 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(normalized_energy(0.0, &h).unwrap(), 0.0);
    }

    #[test]
    fn zero_norm_is_an_error() {
        // MaxCut on an edgeless graph has no terms at all.
        let empty = GraphInstance::complete("k3", 3).complement();
        let h = build_cost_hamiltonian(ProblemClass::MaxCut, &empty);
        assert_eq!(h.l1_norm, 0.0);
        assert!(normalized_energy(1.0, &h).is_err());
    }

    #[test]
    fn diagonal_extremes_stay_within_l1() {
        let mut rng = stream_rng(41, 0);
        for trial in 0..100 {
            let n = 4 + (trial % 5);
            let g = generate_random_connected_graph(format!("g{trial}"), n, 3, &mut rng).unwrap();
            let class = ProblemClass::ALL[trial % 4];
            let h = build_cost_hamiltonian(class, &g);
            assert!(h.min_diagonal() / h.l1_norm >= -1.0 - 1e-12);
            assert!(h.max_diagonal().abs() <= h.l1_norm + 1e-12);
            assert!(h.min_diagonal().abs() <= h.l1_norm + 1e-12);
        }
    }

    #[test]
    fn identity_check_examples() {
        assert!(hamiltonian_objective_identity_check(ProblemClass::Mis, &single_edge()));
        assert!(hamiltonian_objective_identity_check(ProblemClass::Mvc, &single_edge()));
        let mut rng = stream_rng(43, 0);
        for trial in 0..6 {
            let g = generate_random_connected_graph(format!("g{trial}"), 6, 3, &mut rng).unwrap();
            for class in ProblemClass::ALL {
                assert!(hamiltonian_objective_identity_check(class, &g), "{class}");
            }
        }
    }

    #[test]
    fn diagonal_reconstruction_matches_terms_exactly() {
        let mut rng = stream_rng(47, 0);
        let g = generate_random_connected_graph("g", 7, 3, &mut rng).unwrap();
        for class in ProblemClass::ALL {
            let h = build_cost_hamiltonian(class, &g);
            for idx in 0..(1usize << g.n) {
                let x = index_to_bits(idx, g.n);
                let mut value = 0.0;
                for term in &h.terms {
                    let mut sign = 1.0;
                    for &q in &term.z_support {
                        sign *= 1.0 - 2.0 * x[q] as f64;
                    }
                    value += term.coefficient * sign;
                }
                assert_eq!(value, h.diagonal[idx]);
            }
        }
    }

    #[test]
    fn diagonal_argmin_matches_brute_force_optimizers() {
        let mut rng = stream_rng(53, 0);
        for trial in 0..12 {
            let n = 4 + (trial % 6);
            let g = generate_random_connected_graph(format!("g{trial}"), n, 3, &mut rng).unwrap();
            for class in ProblemClass::ALL {
                let h = build_cost_hamiltonian(class, &g);
                let mut argmin = h.diagonal_argmin();
                let mut oracle = brute_force_optimum(class, &g).optimizers;
                argmin.sort_unstable();
                oracle.sort_unstable();
                assert_eq!(argmin, oracle, "{class} on {}", g.id);
            }
        }
    }

    #[test]
    fn csv_dump_has_header_and_all_rows() {
        let h = build_cost_hamiltonian(ProblemClass::Mis, &single_edge());
        let mut buf = Vec::new();
        h.dump_diagonal_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "bitstring,value");
        assert_eq!(lines[1], "00,-1");
        assert_eq!(lines[4], "11,7");
    }
}
