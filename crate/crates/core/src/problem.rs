//! Problem classes on graphs: classical objectives, feasibility, QP/QUBO
//! encodings, and the brute-force oracle used to grade sampled solutions.

use crate::graph::GraphInstance;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Optimization direction of a problem class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// The four supported graph problems. The class fixes both the objective
/// and the optimization sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemClass {
    MaxCut,
    Mis,
    MaxClique,
    Mvc,
}

impl ProblemClass {
    pub const ALL: [ProblemClass; 4] = [
        ProblemClass::MaxCut,
        ProblemClass::Mis,
        ProblemClass::MaxClique,
        ProblemClass::Mvc,
    ];

    pub fn sense(self) -> Sense {
        match self {
            ProblemClass::MaxCut | ProblemClass::Mis | ProblemClass::MaxClique => Sense::Maximize,
            ProblemClass::Mvc => Sense::Minimize,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProblemClass::MaxCut => "maxcut",
            ProblemClass::Mis => "mis",
            ProblemClass::MaxClique => "maxclique",
            ProblemClass::Mvc => "mvc",
        }
    }

    pub fn parse(s: &str) -> Option<ProblemClass> {
        match s.to_ascii_lowercase().as_str() {
            "maxcut" => Some(ProblemClass::MaxCut),
            "mis" => Some(ProblemClass::Mis),
            "maxclique" => Some(ProblemClass::MaxClique),
            "mvc" => Some(ProblemClass::Mvc),
            _ => None,
        }
    }

    /// Constrained classes report a feasibility rate; MaxCut does not.
    pub fn is_constrained(self) -> bool {
        !matches!(self, ProblemClass::MaxCut)
    }
}

impl fmt::Display for ProblemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Binary assignment as a vector of 0/1 entries, one per vertex.
/// Vertex `i` corresponds to qubit `i` (least-significant bit of a basis
/// state index).
pub type Bitstring = Vec<u8>;

/// Decode basis-state index `idx` into a bitstring of length `n`.
pub fn index_to_bits(idx: usize, n: usize) -> Bitstring {
    (0..n).map(|i| ((idx >> i) & 1) as u8).collect()
}

pub fn bits_to_index(x: &[u8]) -> usize {
    x.iter().enumerate().fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i))
}

/// Render a basis-state index as a bitstring with qubit 0 rightmost.
pub fn format_bits(idx: usize, n: usize) -> String {
    (0..n).rev().map(|i| if (idx >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Classical objective value C(x).
///
/// MaxCut counts cut edges; MIS, MaxClique, and MVC count selected
/// vertices. Feasibility is a separate question ([`is_feasible`]).
pub fn objective_value(class: ProblemClass, g: &GraphInstance, x: &[u8]) -> f64 {
    assert_eq!(x.len(), g.n, "bitstring length must equal vertex count");
    match class {
        ProblemClass::MaxCut => g.edges.iter().filter(|&&(u, v)| x[u] != x[v]).count() as f64,
        ProblemClass::Mis | ProblemClass::MaxClique | ProblemClass::Mvc => {
            x.iter().map(|&b| b as f64).sum()
        }
    }
}

/// Whether `x` satisfies the class constraints on `g`.
pub fn is_feasible(class: ProblemClass, g: &GraphInstance, x: &[u8]) -> bool {
    assert_eq!(x.len(), g.n, "bitstring length must equal vertex count");
    match class {
        ProblemClass::MaxCut => true,
        ProblemClass::Mis => g.edges.iter().all(|&(u, v)| x[u] + x[v] <= 1),
        ProblemClass::MaxClique => {
            // Every selected pair must be an edge, i.e. no selected non-edge.
            for u in 0..g.n {
                for v in (u + 1)..g.n {
                    if x[u] == 1 && x[v] == 1 && !g.has_edge(u, v) {
                        return false;
                    }
                }
            }
            true
        }
        ProblemClass::Mvc => g.edges.iter().all(|&(u, v)| x[u] + x[v] >= 1),
    }
}

/// Exhaustive optimum over all feasible bitstrings.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimal_value: f64,
    /// All feasible bitstrings attaining the optimum, as basis indices.
    pub optimizers: Vec<usize>,
    pub feasible_count: usize,
}

/// Enumerate all 2^n bitstrings and return the best feasible objective and
/// every attaining assignment. Bounded to n <= 20.
pub fn brute_force_optimum(class: ProblemClass, g: &GraphInstance) -> OracleResult {
    assert!(g.n <= 20, "brute force enumeration is bounded to n <= 20");
    let mut best: Option<f64> = None;
    let mut optimizers = Vec::new();
    let mut feasible_count = 0usize;
    let better = |candidate: f64, incumbent: f64| match class.sense() {
        Sense::Maximize => candidate > incumbent + 1e-12,
        Sense::Minimize => candidate < incumbent - 1e-12,
    };
    for idx in 0..(1usize << g.n) {
        let x = index_to_bits(idx, g.n);
        if !is_feasible(class, g, &x) {
            continue;
        }
        feasible_count += 1;
        let value = objective_value(class, g, &x);
        match best {
            None => {
                best = Some(value);
                optimizers.push(idx);
            }
            Some(b) if better(value, b) => {
                best = Some(value);
                optimizers.clear();
                optimizers.push(idx);
            }
            Some(b) if (value - b).abs() <= 1e-12 => optimizers.push(idx),
            _ => {}
        }
    }
    OracleResult {
        optimal_value: best.expect("every class has at least one feasible assignment"),
        optimizers,
        feasible_count,
    }
}

/// Quadratic program `min x^T Q x + c^T x  s.t.  A x <= b` over binary x.
/// Constraints are already standardized to the `<=` form.
#[derive(Debug, Clone, PartialEq)]
pub struct QpForm {
    pub n: usize,
    /// Symmetric n x n quadratic coefficients, row-major.
    pub q: Vec<f64>,
    pub c: Vec<f64>,
    /// m x n constraint coefficients, row-major.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub m: usize,
}

/// QUBO `min x^T Qtilde x` with the constraint system kept alongside for
/// the heterogeneous graph construction.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboForm {
    pub n: usize,
    /// Qtilde = Q + diag(c), symmetric, row-major.
    pub qtilde: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub m: usize,
}

impl QpForm {
    pub fn q_at(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }
    pub fn a_at(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.n + col]
    }
}

impl QuboForm {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.qtilde[i * self.n + j]
    }
    pub fn a_at(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.n + col]
    }

    /// Objective x^T Qtilde x for a binary assignment.
    pub fn objective(&self, x: &[u8]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            if x[i] == 0 {
                continue;
            }
            for j in 0..self.n {
                if x[j] == 1 {
                    total += self.at(i, j);
                }
            }
        }
        total
    }

    /// Constraint satisfaction A x <= b (elementwise).
    pub fn satisfies_constraints(&self, x: &[u8]) -> bool {
        (0..self.m).all(|row| {
            let lhs: f64 = (0..self.n).map(|col| self.a_at(row, col) * x[col] as f64).sum();
            lhs <= self.b[row] + 1e-9
        })
    }
}

/// Encode `(class, G)` as a QP in minimization convention. The induced
/// QUBO objective x^T Qtilde x equals the negated classical objective for
/// maximization classes and the classical objective for MVC, exactly.
pub fn to_qp(class: ProblemClass, g: &GraphInstance) -> QpForm {
    let n = g.n;
    let mut q = vec![0.0; n * n];
    let mut c = vec![0.0; n];
    let mut a = Vec::new();
    let mut b = Vec::new();
    match class {
        ProblemClass::MaxCut => {
            // min -cut(x) = 2 sum_E x_u x_v - sum_E (x_u + x_v)
            for &(u, v) in &g.edges {
                q[u * n + v] += 1.0;
                q[v * n + u] += 1.0;
                c[u] -= 1.0;
                c[v] -= 1.0;
            }
        }
        ProblemClass::Mis => {
            for item in c.iter_mut() {
                *item = -1.0;
            }
            for &(u, v) in &g.edges {
                let mut row = vec![0.0; n];
                row[u] = 1.0;
                row[v] = 1.0;
                a.extend(row);
                b.push(1.0);
            }
        }
        ProblemClass::MaxClique => {
            for item in c.iter_mut() {
                *item = -1.0;
            }
            for u in 0..n {
                for v in (u + 1)..n {
                    if !g.has_edge(u, v) {
                        let mut row = vec![0.0; n];
                        row[u] = 1.0;
                        row[v] = 1.0;
                        a.extend(row);
                        b.push(1.0);
                    }
                }
            }
        }
        ProblemClass::Mvc => {
            for item in c.iter_mut() {
                *item = 1.0;
            }
            // x_u + x_v >= 1 standardized to -x_u - x_v <= -1.
            for &(u, v) in &g.edges {
                let mut row = vec![0.0; n];
                row[u] = -1.0;
                row[v] = -1.0;
                a.extend(row);
                b.push(-1.0);
            }
        }
    }
    let m = b.len();
    QpForm { n, q, c, a, b, m }
}

/// Fold the linear coefficients into the diagonal: Qtilde = Q + diag(c).
pub fn qp_to_qubo(qp: &QpForm) -> QuboForm {
    let n = qp.n;
    let mut qtilde = qp.q.clone();
    for i in 0..n {
        qtilde[i * n + i] += qp.c[i];
    }
    QuboForm { n, qtilde, a: qp.a.clone(), b: qp.b.clone(), m: qp.m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_random_connected_graph;
    use crate::rng::stream_rng;

    fn single_edge() -> GraphInstance {
        GraphInstance::new("e", 2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn objective_examples() {
        let k3 = GraphInstance::complete("k3", 3);
        // x = (x0,x1,x2) = (1,1,0): edges (0,1) uncut, (0,2) and (1,2) cut.
        assert_eq!(objective_value(ProblemClass::MaxCut, &k3, &[1, 1, 0]), 2.0);
        assert_eq!(objective_value(ProblemClass::Mis, &k3, &[0, 0, 0]), 0.0);
        assert_eq!(objective_value(ProblemClass::Mvc, &single_edge(), &[1, 1]), 2.0);
    }

    #[test]
    #[should_panic(expected = "length")]
    fn objective_rejects_length_mismatch() {
        objective_value(ProblemClass::MaxCut, &single_edge(), &[1]);
    }

    #[test]
    fn feasibility_examples() {
        assert!(!is_feasible(ProblemClass::Mis, &single_edge(), &[1, 1]));
        let p3 = GraphInstance::path("p3", 3);
        assert!(!is_feasible(ProblemClass::MaxClique, &p3, &[1, 0, 1]));
        assert!(!is_feasible(ProblemClass::Mvc, &single_edge(), &[0, 0]));
        assert!(is_feasible(ProblemClass::MaxCut, &single_edge(), &[0, 0]));
    }

    #[test]
    fn brute_force_examples() {
        let k3 = GraphInstance::complete("k3", 3);
        let res = brute_force_optimum(ProblemClass::MaxCut, &k3);
        assert_eq!(res.optimal_value, 2.0);
        assert_eq!(res.optimizers.len(), 6);
        assert_eq!(res.feasible_count, 8);

        let res = brute_force_optimum(ProblemClass::Mis, &single_edge());
        assert_eq!(res.optimal_value, 1.0);
        assert_eq!(res.optimizers, vec![0b01, 0b10]);

        let res = brute_force_optimum(ProblemClass::Mvc, &single_edge());
        assert_eq!(res.optimal_value, 1.0);
        assert_eq!(res.optimizers, vec![0b01, 0b10]);
    }

    #[test]
    fn qubo_examples() {
        let qubo = qp_to_qubo(&to_qp(ProblemClass::Mis, &single_edge()));
        assert_eq!(qubo.at(0, 0), -1.0);
        assert_eq!(qubo.at(1, 1), -1.0);
        assert_eq!(qubo.at(0, 1), 0.0);
        assert_eq!(qubo.m, 1);
        assert_eq!(qubo.a, vec![1.0, 1.0]);
        assert_eq!(qubo.b, vec![1.0]);

        let qubo = qp_to_qubo(&to_qp(ProblemClass::Mvc, &single_edge()));
        assert_eq!(qubo.a, vec![-1.0, -1.0]);
        assert_eq!(qubo.b, vec![-1.0]);
    }

    #[test]
    fn maxcut_qubo_equals_negated_cut() {
        let k3 = GraphInstance::complete("k3", 3);
        let qubo = qp_to_qubo(&to_qp(ProblemClass::MaxCut, &k3));
        for idx in 0..8 {
            let x = index_to_bits(idx, 3);
            let cut = objective_value(ProblemClass::MaxCut, &k3, &x);
            assert!((qubo.objective(&x) + cut).abs() < 1e-12);
        }
    }

    #[test]
    fn qubo_objective_matches_signed_classical_objective() {
        let mut rng = stream_rng(23, 0);
        for trial in 0..8 {
            let g = generate_random_connected_graph(format!("g{trial}"), 6, 3, &mut rng).unwrap();
            for class in ProblemClass::ALL {
                let qubo = qp_to_qubo(&to_qp(class, &g));
                for idx in 0..(1usize << g.n) {
                    let x = index_to_bits(idx, g.n);
                    let obj = objective_value(class, &g, &x);
                    let expected = match class.sense() {
                        Sense::Maximize => -obj,
                        Sense::Minimize => obj,
                    };
                    assert!(
                        (qubo.objective(&x) - expected).abs() < 1e-12,
                        "{class} idx {idx}"
                    );
                }
            }
        }
    }

    #[test]
    fn feasibility_matches_constraint_rows_exhaustively() {
        let mut rng = stream_rng(29, 0);
        for trial in 0..10 {
            let n = 4 + (trial % 5);
            let g = generate_random_connected_graph(format!("g{trial}"), n, 3, &mut rng).unwrap();
            for class in ProblemClass::ALL {
                let qubo = qp_to_qubo(&to_qp(class, &g));
                for idx in 0..(1usize << n) {
                    let x = index_to_bits(idx, n);
                    assert_eq!(
                        is_feasible(class, &g, &x),
                        qubo.satisfies_constraints(&x),
                        "{class} {idx}"
                    );
                }
            }
        }
    }

    #[test]
    fn optimizers_closed_under_automorphism_on_vertex_transitive_graphs() {
        // On vertex-transitive graphs, rotating an optimizer yields another.
        for (g, rotation) in [
            (GraphInstance::complete("k3", 3), vec![1, 2, 0]),
            (GraphInstance::cycle("c4", 4), vec![1, 2, 3, 0]),
            (GraphInstance::cycle("c5", 5), vec![1, 2, 3, 4, 0]),
        ] {
            for class in ProblemClass::ALL {
                let res = brute_force_optimum(class, &g);
                for &opt in &res.optimizers {
                    let x = index_to_bits(opt, g.n);
                    let mut rotated = vec![0u8; g.n];
                    for v in 0..g.n {
                        rotated[rotation[v]] = x[v];
                    }
                    let ridx = bits_to_index(&rotated);
                    assert!(res.optimizers.contains(&ridx), "{class} {opt}");
                }
            }
        }
    }

    #[test]
    fn maxclique_on_g_equals_mis_on_complement() {
        let mut rng = stream_rng(31, 0);
        for trial in 0..10 {
            let n = 5 + (trial % 6);
            let g = generate_random_connected_graph(format!("g{trial}"), n, 3, &mut rng).unwrap();
            let clique = brute_force_optimum(ProblemClass::MaxClique, &g);
            let mis = brute_force_optimum(ProblemClass::Mis, &g.complement());
            assert_eq!(clique.optimal_value, mis.optimal_value);
            let mut a = clique.optimizers.clone();
            let mut b = mis.optimizers.clone();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bit_helpers_round_trip() {
        for idx in 0..32 {
            assert_eq!(bits_to_index(&index_to_bits(idx, 5)), idx);
        }
        assert_eq!(format_bits(1, 2), "01");
        assert_eq!(format_bits(2, 2), "10");
    }
}
