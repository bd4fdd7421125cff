//! Greedy projection of a relaxed selection vector onto a feasible
//! discrete solution. Output feasibility is guaranteed by construction
//! for every class.

use crate::graph::GraphInstance;
use crate::problem::{Bitstring, ProblemClass};

/// Vertices ordered by descending score, ties broken by index.
fn descending_order(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    order
}

/// Decode a relaxed vector into a feasible assignment.
///
/// * MaxCut: threshold at 0.5, then one improvement pass in score order.
/// * MIS: add in score order when no selected neighbor exists.
/// * MaxClique: add in score order when adjacent to all selected.
/// * MVC: start from all-selected, drop low-score vertices while the
///   cover still holds.
pub fn greedy_decode(class: ProblemClass, g: &GraphInstance, x: &[f64]) -> Bitstring {
    assert_eq!(x.len(), g.n, "relaxed vector length must equal vertex count");
    let order = descending_order(x);
    let adj = g.adjacency();
    match class {
        ProblemClass::MaxCut => {
            let mut assign: Vec<u8> = x.iter().map(|&v| u8::from(v > 0.5)).collect();
            for &v in &order {
                let flipped = 1 - assign[v];
                let gain: i64 = adj[v]
                    .iter()
                    .map(|&w| {
                        i64::from(flipped != assign[w]) - i64::from(assign[v] != assign[w])
                    })
                    .sum();
                if gain > 0 {
                    assign[v] = flipped;
                }
            }
            assign
        }
        ProblemClass::Mis => {
            let mut selected = vec![0u8; g.n];
            for &v in &order {
                if adj[v].iter().all(|&w| selected[w] == 0) {
                    selected[v] = 1;
                }
            }
            selected
        }
        ProblemClass::MaxClique => {
            let mut selected = vec![0u8; g.n];
            let mut clique: Vec<usize> = Vec::new();
            for &v in &order {
                if clique.iter().all(|&w| g.has_edge(v, w)) {
                    selected[v] = 1;
                    clique.push(v);
                }
            }
            selected
        }
        ProblemClass::Mvc => {
            let mut selected = vec![1u8; g.n];
            let mut ascending = order.clone();
            ascending.reverse();
            for &v in &ascending {
                let removable = adj[v].iter().all(|&w| selected[w] == 1);
                if removable {
                    selected[v] = 0;
                }
            }
            selected
        }
    }
}
