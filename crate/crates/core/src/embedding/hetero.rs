//! Problem-aware heterogeneous graph embedding.
//!
//! Each instance is lifted to a heterogeneous graph with decision-variable
//! nodes, constraint nodes, and three relations: the original problem
//! edges, objective couplings from the QUBO matrix (off-diagonals as
//! weighted edges, diagonals as a node feature channel), and bipartite
//! variable-constraint incidences from the standardized A x <= b system.
//! A relation-specific message-passing stack produces three 32-dim node
//! embeddings that are fused by an MLP into a prediction head; training
//! minimizes the unsupervised QUBO objective plus a hinge penalty on
//! constraint violations, with no labeled solutions.

use crate::graph::GraphInstance;
use crate::nn::{
    adam_step, uniform_init, AdamState, Matrix, ParameterStore, Tape, TapeBinding, Var,
};
use crate::problem::{qp_to_qubo, to_qp, ProblemClass, QuboForm};
use crate::rng::stream_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;

/// Per-relation node embedding width.
pub const RELATION_DIM: usize = 32;
/// Fused embedding width (three relations concatenated).
pub const UNIHETCO_EMBED_DIM: usize = 3 * RELATION_DIM;

/// Heterogeneous view of one `(class, G)` instance.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    pub n_vars: usize,
    pub n_constraints: usize,
    /// Original instance structure.
    pub prob_edges: Vec<(usize, usize)>,
    /// Off-diagonal objective couplings `(u, v, Qtilde_uv)` with u < v.
    pub obj_edges: Vec<(usize, usize, f64)>,
    /// Diagonal objective weights Qtilde_uu, one per variable node.
    pub obj_diag: Vec<f64>,
    /// Bipartite incidences `(constraint, var, coefficient)` from A.
    pub constr_incidence: Vec<(usize, usize, f64)>,
    /// Right-hand sides attached to the constraint nodes.
    pub rhs: Vec<f64>,
    /// Dense Qtilde (n x n) for the objective loss.
    pub qtilde: Matrix,
    /// Dense A (m x n) and b (m x 1) for the hinge loss; m may be zero.
    pub a_mat: Matrix,
    pub b_vec: Matrix,
}

/// Populate the heterogeneous edge sets from the QUBO nonzeros.
pub fn build_hetero_graph(g: &GraphInstance, qubo: &QuboForm) -> HeteroGraph {
    let n = qubo.n;
    assert_eq!(g.n, n, "qubo must be derived from the same graph");
    let mut obj_edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let w = qubo.at(u, v);
            if w != 0.0 {
                obj_edges.push((u, v, w));
            }
        }
    }
    let obj_diag: Vec<f64> = (0..n).map(|u| qubo.at(u, u)).collect();
    let mut constr_incidence = Vec::new();
    for row in 0..qubo.m {
        for col in 0..n {
            let coeff = qubo.a_at(row, col);
            if coeff != 0.0 {
                constr_incidence.push((row, col, coeff));
            }
        }
    }
    HeteroGraph {
        n_vars: n,
        n_constraints: qubo.m,
        prob_edges: g.edges.clone(),
        obj_edges,
        obj_diag,
        constr_incidence,
        rhs: qubo.b.clone(),
        qtilde: Matrix::from_rows(n, n, qubo.qtilde.clone()),
        a_mat: Matrix::from_rows(qubo.m.max(1), n, if qubo.m == 0 { vec![0.0; n] } else { qubo.a.clone() }),
        b_vec: Matrix::from_rows(qubo.m.max(1), 1, if qubo.m == 0 { vec![0.0] } else { qubo.b.clone() }),
    }
}

/// Convenience: encode `(class, G)` and build the heterogeneous graph.
pub fn hetero_graph_for(class: ProblemClass, g: &GraphInstance) -> HeteroGraph {
    build_hetero_graph(g, &qp_to_qubo(&to_qp(class, g)))
}

/// Fresh GNN weights: two message-passing layers per relation, a fusion
/// MLP, and the shared prediction head.
pub fn init_hetero_weights<R: Rng>(rng: &mut R) -> ParameterStore {
    fn layer<R: Rng>(store: &mut ParameterStore, name: &str, d_in: usize, d: usize, rng: &mut R) {
        store.insert(format!("{name}.w_self"), uniform_init(d_in, d, d_in, rng));
        store.insert(format!("{name}.w_nbr"), uniform_init(d_in, d, d_in, rng));
        store.insert(format!("{name}.b"), Matrix::zeros(1, d));
    }
    let mut store = ParameterStore::new();
    let d = RELATION_DIM;
    layer(&mut store, "gnn.prob.l1", 2, d, rng);
    layer(&mut store, "gnn.prob.l2", d, d, rng);
    layer(&mut store, "gnn.obj.l1", 3, d, rng);
    layer(&mut store, "gnn.obj.l2", d, d, rng);
    // Constraint relation: alternating constraint-side and variable-side
    // updates over the bipartite star expansion.
    layer(&mut store, "gnn.constr.c1", 2, d, rng);
    store.insert("gnn.constr.v1.w_self", uniform_init(2, d, 2, rng));
    store.insert("gnn.constr.v1.w_nbr", uniform_init(d, d, d, rng));
    store.insert("gnn.constr.v1.b", Matrix::zeros(1, d));
    layer(&mut store, "gnn.constr.c2", d, d, rng);
    layer(&mut store, "gnn.constr.v2", d, d, rng);
    let fused = UNIHETCO_EMBED_DIM;
    store.insert("gnn.fuse.w1", uniform_init(fused, fused, fused, rng));
    store.insert("gnn.fuse.b1", Matrix::zeros(1, fused));
    store.insert("gnn.fuse.w2", uniform_init(fused, fused, fused, rng));
    store.insert("gnn.fuse.b2", Matrix::zeros(1, fused));
    store.insert("gnn.head.w", uniform_init(fused, 1, fused, rng));
    store.insert("gnn.head.b", Matrix::zeros(1, 1));
    store
}

/// Coefficient-weighted mean-aggregation matrix: row `v` holds
/// `weight(v,u) / |N(v)|` for each neighbor `u`.
fn aggregation_matrix(rows: usize, cols: usize, edges: &[(usize, usize, f64)]) -> Matrix {
    let mut counts = vec![0usize; rows];
    for &(r, _, _) in edges {
        counts[r] += 1;
    }
    let mut m = Matrix::zeros(rows, cols);
    for &(r, c, w) in edges {
        m.data[r * cols + c] += w / counts[r] as f64;
    }
    m
}

struct RelationMatrices {
    prob: Matrix,
    obj: Matrix,
    var_to_constr: Option<Matrix>,
    constr_to_var: Option<Matrix>,
}

fn relation_matrices(hg: &HeteroGraph) -> RelationMatrices {
    let n = hg.n_vars;
    let sym = |edges: &[(usize, usize, f64)]| {
        let mut both = Vec::with_capacity(edges.len() * 2);
        for &(u, v, w) in edges {
            both.push((u, v, w));
            both.push((v, u, w));
        }
        both
    };
    let prob_edges: Vec<(usize, usize, f64)> =
        hg.prob_edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
    let prob = aggregation_matrix(n, n, &sym(&prob_edges));
    let obj = aggregation_matrix(n, n, &sym(&hg.obj_edges));
    let (var_to_constr, constr_to_var) = if hg.n_constraints > 0 {
        let cv: Vec<(usize, usize, f64)> =
            hg.constr_incidence.iter().map(|&(j, u, w)| (j, u, w)).collect();
        let vc: Vec<(usize, usize, f64)> =
            hg.constr_incidence.iter().map(|&(j, u, w)| (u, j, w)).collect();
        (
            Some(aggregation_matrix(hg.n_constraints, n, &cv)),
            Some(aggregation_matrix(n, hg.n_constraints, &vc)),
        )
    } else {
        (None, None)
    };
    RelationMatrices { prob, obj, var_to_constr, constr_to_var }
}

fn var_input_features(hg: &HeteroGraph) -> Matrix {
    let n = hg.n_vars;
    let mut deg = vec![0usize; n];
    for &(u, v) in &hg.prob_edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    let mut m = Matrix::zeros(n, 2);
    for v in 0..n {
        m.data[v * 2] = deg[v] as f64 / n as f64;
        m.data[v * 2 + 1] = 1.0;
    }
    m
}

fn obj_input_features(hg: &HeteroGraph) -> Matrix {
    let base = var_input_features(hg);
    let n = hg.n_vars;
    let mut m = Matrix::zeros(n, 3);
    for v in 0..n {
        m.data[v * 3] = base.data[v * 2];
        m.data[v * 3 + 1] = 1.0;
        m.data[v * 3 + 2] = hg.obj_diag[v];
    }
    m
}

fn constr_input_features(hg: &HeteroGraph) -> Matrix {
    let m = hg.n_constraints;
    let mut feats = Matrix::zeros(m, 2);
    for j in 0..m {
        feats.data[j * 2] = hg.rhs[j];
        feats.data[j * 2 + 1] = 1.0;
    }
    feats
}

/// relu(H W_self + M H_src W_nbr + b), the shared layer shape for every
/// relation. `messages` is the pre-aggregated M H_src (or None when the
/// relation has no edges, which leaves only the transformed self-feature).
fn mp_layer(
    tape: &Tape,
    binding: &TapeBinding,
    name: &str,
    h_self: Var,
    messages: Option<Var>,
) -> Var {
    let w_self = binding.var(&format!("{name}.w_self"));
    let w_nbr = binding.var(&format!("{name}.w_nbr"));
    let b = binding.var(&format!("{name}.b"));
    let mut pre = tape.matmul(h_self, w_self);
    if let Some(msg) = messages {
        pre = tape.add(pre, tape.matmul(msg, w_nbr));
    }
    tape.relu(tape.add_row_broadcast(pre, b))
}

/// Tape handles produced by one forward pass.
pub struct HeteroForward {
    /// Per-relation node embeddings, each n x 32.
    pub h_prob: Var,
    pub h_obj: Var,
    pub h_constr: Var,
    /// Concatenated per-node embeddings, n x 96 (the pooled quantity).
    pub h_concat: Var,
    /// Fusion MLP output, n x 96.
    pub h_fused: Var,
    /// Relaxed selection vector, n x 1, entries strictly in (0, 1).
    pub x: Var,
}

/// Two rounds of relation-specific message passing, fusion, and the
/// sigmoid prediction head.
pub fn hetero_forward(tape: &Tape, binding: &TapeBinding, hg: &HeteroGraph) -> HeteroForward {
    let mats = relation_matrices(hg);
    let var_feats = tape.leaf(var_input_features(hg));
    let obj_feats = tape.leaf(obj_input_features(hg));

    // Problem relation.
    let m_prob = tape.leaf(mats.prob);
    let p1 = mp_layer(tape, binding, "gnn.prob.l1", var_feats, Some(tape.matmul(m_prob, var_feats)));
    let h_prob = mp_layer(tape, binding, "gnn.prob.l2", p1, Some(tape.matmul(m_prob, p1)));

    // Objective relation: messages scaled by the coupling weight, and the
    // diagonal as a feature channel.
    let m_obj = tape.leaf(mats.obj);
    let o1 = mp_layer(tape, binding, "gnn.obj.l1", obj_feats, Some(tape.matmul(m_obj, obj_feats)));
    let h_obj = mp_layer(tape, binding, "gnn.obj.l2", o1, Some(tape.matmul(m_obj, o1)));

    // Constraint relation over the star expansion.
    let h_constr = match (mats.var_to_constr, mats.constr_to_var) {
        (Some(cv), Some(vc)) => {
            let constr_feats = tape.leaf(constr_input_features(hg));
            let m_cv = tape.leaf(cv);
            let m_vc = tape.leaf(vc);
            let c1 = mp_layer(tape, binding, "gnn.constr.c1", constr_feats, Some(tape.matmul(m_cv, var_feats)));
            let v1 = mp_layer(tape, binding, "gnn.constr.v1", var_feats, Some(tape.matmul(m_vc, c1)));
            let c2 = mp_layer(tape, binding, "gnn.constr.c2", c1, Some(tape.matmul(m_cv, v1)));
            mp_layer(tape, binding, "gnn.constr.v2", v1, Some(tape.matmul(m_vc, c2)))
        }
        _ => {
            let v1 = mp_layer(tape, binding, "gnn.constr.v1", var_feats, None);
            mp_layer(tape, binding, "gnn.constr.v2", v1, None)
        }
    };

    let h_concat = tape.concat_cols(&[h_prob, h_obj, h_constr]);
    let f1 = tape.relu(tape.add_row_broadcast(
        tape.matmul(h_concat, binding.var("gnn.fuse.w1")),
        binding.var("gnn.fuse.b1"),
    ));
    let h_fused = tape.add_row_broadcast(
        tape.matmul(f1, binding.var("gnn.fuse.w2")),
        binding.var("gnn.fuse.b2"),
    );
    let x = tape.sigmoid(tape.add_row_broadcast(
        tape.matmul(h_fused, binding.var("gnn.head.w")),
        binding.var("gnn.head.b"),
    ));
    HeteroForward { h_prob, h_obj, h_constr, h_concat, h_fused, x }
}

/// Unsupervised losses on the tape: `L_obj = x^T Qtilde x`, the hinge
/// `L_constr = sum max(0, A x - b)`, and their unit-weighted total.
pub fn nco_loss_on_tape(tape: &Tape, hg: &HeteroGraph, x: Var) -> (Var, Var, Var) {
    let qt = tape.leaf(hg.qtilde.clone());
    let l_obj = tape.sum(tape.mul(x, tape.matmul(qt, x)));
    let l_constr = if hg.n_constraints > 0 {
        let a = tape.leaf(hg.a_mat.clone());
        let b = tape.leaf(hg.b_vec.clone());
        tape.sum(tape.relu(tape.sub(tape.matmul(a, x), b)))
    } else {
        tape.leaf(Matrix::scalar(0.0))
    };
    let total = tape.add(l_obj, l_constr);
    (l_obj, l_constr, total)
}

/// Value-level NCO loss for a given relaxed vector.
pub fn nco_loss(hg: &HeteroGraph, x: &[f64]) -> (f64, f64, f64) {
    let tape = Tape::new();
    let xv = tape.leaf(Matrix::column(x));
    let (l_obj, l_constr, total) = nco_loss_on_tape(&tape, hg, xv);
    (
        tape.value(l_obj).scalar_value(),
        tape.value(l_constr).scalar_value(),
        tape.value(total).scalar_value(),
    )
}

/// Run the GNN and return the relaxed selection vector.
pub fn relaxed_solution(weights: &ParameterStore, hg: &HeteroGraph) -> Vec<f64> {
    let tape = Tape::new();
    let binding = TapeBinding::bind(&tape, weights);
    let fwd = hetero_forward(&tape, &binding, hg);
    tape.value(fwd.x).data
}

/// Frozen graph-level embedding: mean over nodes of the concatenated
/// per-relation embeddings (96-dim). No gradients flow from here.
pub fn extract_embedding(weights: &ParameterStore, hg: &HeteroGraph) -> Vec<f64> {
    let tape = Tape::new();
    let binding = TapeBinding::bind(&tape, weights);
    let fwd = hetero_forward(&tape, &binding, hg);
    tape.value(tape.mean_rows(fwd.h_concat)).data
}

/// A prepared pre-training instance.
#[derive(Debug, Clone)]
pub struct PretrainInstance {
    pub id: String,
    pub hetero: HeteroGraph,
}

#[derive(Debug, Clone)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig { epochs: 30, lr: 1e-3, batch: 32, seed: 0 }
    }
}

/// Multi-domain unsupervised pre-training: each mini-batch holds an equal
/// number of instances from every class, and the loss is the mean
/// per-instance NCO loss. Returns the trained weights and the mean total
/// loss per epoch.
pub fn pretrain_unihetco(
    class_sets: &BTreeMap<ProblemClass, Vec<PretrainInstance>>,
    config: &PretrainConfig,
) -> (ParameterStore, Vec<f64>) {
    assert!(!class_sets.is_empty(), "need at least one class dataset");
    assert!(class_sets.values().all(|set| !set.is_empty()));
    let k = class_sets.len();
    let per_class = (config.batch / k).max(1);
    let mut weights = init_hetero_weights(&mut stream_rng(config.seed, 0));
    let mut adam = AdamState::new(&weights);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        // Per-class shuffled orders, derived per epoch.
        let orders: BTreeMap<ProblemClass, Vec<usize>> = class_sets
            .iter()
            .enumerate()
            .map(|(class_idx, (&class, set))| {
                let mut idx: Vec<usize> = (0..set.len()).collect();
                let mut rng = stream_rng(config.seed, 1 + epoch as u64 * 16 + class_idx as u64);
                idx.shuffle(&mut rng);
                (class, idx)
            })
            .collect();
        let batches = class_sets.values().map(|s| s.len() / per_class).min().unwrap_or(0).max(1);

        let mut epoch_loss = 0.0;
        let mut epoch_count = 0usize;
        for batch_idx in 0..batches {
            let mut grads_sum: Option<BTreeMap<String, Matrix>> = None;
            let mut batch_count = 0usize;
            for (&class, order) in &orders {
                let set = &class_sets[&class];
                for slot in 0..per_class {
                    let pick = order[(batch_idx * per_class + slot) % set.len()];
                    let hg = &set[pick].hetero;
                    let tape = Tape::new();
                    let binding = TapeBinding::bind(&tape, &weights);
                    let fwd = hetero_forward(&tape, &binding, hg);
                    let (_, _, total) = nco_loss_on_tape(&tape, hg, fwd.x);
                    epoch_loss += tape.value(total).scalar_value();
                    epoch_count += 1;
                    batch_count += 1;
                    let grads = tape.backward(total);
                    let by_name = binding.grads_by_name(&weights, &grads);
                    match &mut grads_sum {
                        None => grads_sum = Some(by_name),
                        Some(acc) => {
                            for (name, grad) in by_name {
                                acc.get_mut(&name).expect("same parameter set").add_assign(&grad);
                            }
                        }
                    }
                }
            }
            if let Some(mut grads) = grads_sum {
                for grad in grads.values_mut() {
                    *grad = grad.scale(1.0 / batch_count as f64);
                }
                adam_step(&mut weights, &grads, &mut adam, config.lr);
            }
        }
        history.push(epoch_loss / epoch_count.max(1) as f64);
    }
    (weights, history)
}
