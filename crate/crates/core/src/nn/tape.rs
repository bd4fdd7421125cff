//! Reverse-mode automatic differentiation over [`Matrix`] values.
//!
//! A [`Tape`] is a Wengert list: every operation appends a node holding
//! its forward value and a backward closure that scatters the upstream
//! gradient onto its parents. Nodes are created in topological order, so
//! the backward pass is a single reverse sweep with additive gradient
//! accumulation. Tapes are rebuilt per training step and never shared
//! across threads.

use super::matrix::Matrix;
use std::cell::RefCell;
use std::collections::HashMap;

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

type BackwardFn = Box<dyn Fn(&Matrix, &[Node]) -> Vec<(Var, Matrix)>>;

pub struct Node {
    value: Matrix,
    backward: Option<BackwardFn>,
}

impl Node {
    fn value(&self) -> &Matrix {
        &self.value
    }
}

/// Gradients keyed by tape variable, as produced by [`Tape::backward`].
pub struct Gradients {
    by_var: HashMap<usize, Matrix>,
}

impl Gradients {
    /// Gradient for `var`, or a zero matrix of the given shape when the
    /// variable never influenced the loss.
    pub fn get_or_zero(&self, var: Var, rows: usize, cols: usize) -> Matrix {
        self.by_var.get(&var.0).cloned().unwrap_or_else(|| Matrix::zeros(rows, cols))
    }

    pub fn get(&self, var: Var) -> Option<&Matrix> {
        self.by_var.get(&var.0)
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    fn push(&self, value: Matrix, backward: Option<BackwardFn>) -> Var {
        value.debug_assert_finite();
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, backward });
        Var(nodes.len() - 1)
    }

    /// A leaf node (input, parameter, or constant). Gradients accumulate
    /// here and can be read back after [`Tape::backward`].
    pub fn leaf(&self, value: Matrix) -> Var {
        self.push(value, None)
    }

    pub fn value(&self, var: Var) -> Matrix {
        self.nodes.borrow()[var.0].value.clone()
    }

    pub fn shape(&self, var: Var) -> (usize, usize) {
        self.nodes.borrow()[var.0].value.shape()
    }

    pub fn add(&self, a: Var, b: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value().add(nodes[b.0].value())
        };
        self.push(
            value,
            Some(Box::new(move |g, _| vec![(a, g.clone()), (b, g.clone())])),
        )
    }

    pub fn sub(&self, a: Var, b: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value().sub(nodes[b.0].value())
        };
        self.push(
            value,
            Some(Box::new(move |g, _| vec![(a, g.clone()), (b, g.neg())])),
        )
    }

    /// Elementwise product.
    pub fn mul(&self, a: Var, b: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value().hadamard(nodes[b.0].value())
        };
        self.push(
            value,
            Some(Box::new(move |g, nodes| {
                vec![
                    (a, g.hadamard(nodes[b.0].value())),
                    (b, g.hadamard(nodes[a.0].value())),
                ]
            })),
        )
    }

    pub fn matmul(&self, a: Var, b: Var) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            nodes[a.0].value().matmul(nodes[b.0].value())
        };
        self.push(
            value,
            Some(Box::new(move |g, nodes| {
                vec![
                    (a, g.matmul(&nodes[b.0].value().transpose())),
                    (b, nodes[a.0].value().transpose().matmul(g)),
                ]
            })),
        )
    }

    pub fn scale(&self, a: Var, factor: f64) -> Var {
        let value = self.nodes.borrow()[a.0].value().scale(factor);
        self.push(value, Some(Box::new(move |g, _| vec![(a, g.scale(factor))])))
    }

    pub fn sigmoid(&self, a: Var) -> Var {
        let value = self.nodes.borrow()[a.0].value().map(|v| 1.0 / (1.0 + (-v).exp()));
        let saved = value.clone();
        self.push(
            value,
            Some(Box::new(move |g, _| {
                vec![(a, g.hadamard(&saved.map(|y| y * (1.0 - y))))]
            })),
        )
    }

    pub fn tanh(&self, a: Var) -> Var {
        let value = self.nodes.borrow()[a.0].value().map(f64::tanh);
        let saved = value.clone();
        self.push(
            value,
            Some(Box::new(move |g, _| {
                vec![(a, g.hadamard(&saved.map(|y| 1.0 - y * y)))]
            })),
        )
    }

    pub fn relu(&self, a: Var) -> Var {
        let value = self.nodes.borrow()[a.0].value().map(|v| v.max(0.0));
        self.push(
            value,
            Some(Box::new(move |g, nodes| {
                let mask = nodes[a.0].value().map(|v| if v > 0.0 { 1.0 } else { 0.0 });
                vec![(a, g.hadamard(&mask))]
            })),
        )
    }

    /// Sum of all entries as a 1x1 scalar.
    pub fn sum(&self, a: Var) -> Var {
        let (rows, cols) = self.shape(a);
        let value = Matrix::scalar(self.nodes.borrow()[a.0].value().sum());
        self.push(
            value,
            Some(Box::new(move |g, _| {
                vec![(a, Matrix::ones(rows, cols).scale(g.scalar_value()))]
            })),
        )
    }

    /// Mean over rows: n x d -> 1 x d.
    pub fn mean_rows(&self, a: Var) -> Var {
        let (rows, cols) = self.shape(a);
        assert!(rows > 0);
        let value = self.nodes.borrow()[a.0].value().column_sums().scale(1.0 / rows as f64);
        self.push(
            value,
            Some(Box::new(move |g, _| {
                let mut out = Matrix::zeros(rows, cols);
                for r in 0..rows {
                    for c in 0..cols {
                        out.data[r * cols + c] = g.data[c] / rows as f64;
                    }
                }
                vec![(a, out)]
            })),
        )
    }

    /// Broadcast-add a 1 x d row vector to every row of an n x d matrix.
    pub fn add_row_broadcast(&self, a: Var, bias: Var) -> Var {
        let (rows, cols) = self.shape(a);
        assert_eq!(self.shape(bias), (1, cols), "bias must be 1 x cols");
        let value = {
            let nodes = self.nodes.borrow();
            let mat = nodes[a.0].value();
            let b = nodes[bias.0].value();
            let mut out = mat.clone();
            for r in 0..rows {
                for c in 0..cols {
                    out.data[r * cols + c] += b.data[c];
                }
            }
            out
        };
        self.push(
            value,
            Some(Box::new(move |g, _| {
                vec![(a, g.clone()), (bias, g.column_sums())]
            })),
        )
    }

    /// Stack column vectors (or equal-width matrices) vertically.
    pub fn concat_rows(&self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let cols = self.shape(parts[0]).1;
        let mut data = Vec::new();
        let mut row_blocks = Vec::new();
        {
            let nodes = self.nodes.borrow();
            for &p in parts {
                let v = nodes[p.0].value();
                assert_eq!(v.cols, cols, "concat_rows width mismatch");
                row_blocks.push(v.rows);
                data.extend_from_slice(&v.data);
            }
        }
        let rows: usize = row_blocks.iter().sum();
        let value = Matrix::from_rows(rows, cols, data);
        let parts: Vec<Var> = parts.to_vec();
        self.push(
            value,
            Some(Box::new(move |g, _| {
                let mut out = Vec::new();
                let mut offset = 0;
                for (&p, &block) in parts.iter().zip(row_blocks.iter()) {
                    let slice = g.data[offset * cols..(offset + block) * cols].to_vec();
                    out.push((p, Matrix::from_rows(block, cols, slice)));
                    offset += block;
                }
                out
            })),
        )
    }

    /// Stack equal-height matrices side by side.
    pub fn concat_cols(&self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.shape(parts[0]).0;
        let mut col_blocks = Vec::new();
        {
            let nodes = self.nodes.borrow();
            for &p in parts {
                let v = nodes[p.0].value();
                assert_eq!(v.rows, rows, "concat_cols height mismatch");
                col_blocks.push(v.cols);
            }
        }
        let cols: usize = col_blocks.iter().sum();
        let value = {
            let nodes = self.nodes.borrow();
            let mut out = Matrix::zeros(rows, cols);
            let mut offset = 0;
            for &p in parts {
                let v = nodes[p.0].value();
                for r in 0..rows {
                    for c in 0..v.cols {
                        out.data[r * cols + offset + c] = v.data[r * v.cols + c];
                    }
                }
                offset += v.cols;
            }
            out
        };
        let parts: Vec<Var> = parts.to_vec();
        self.push(
            value,
            Some(Box::new(move |g, _| {
                let mut out = Vec::new();
                let mut offset = 0;
                for (&p, &block) in parts.iter().zip(col_blocks.iter()) {
                    let mut part = Matrix::zeros(rows, block);
                    for r in 0..rows {
                        for c in 0..block {
                            part.data[r * block + c] = g.data[r * cols + offset + c];
                        }
                    }
                    out.push((p, part));
                    offset += block;
                }
                out
            })),
        )
    }

    /// Node with an externally supplied value and vector-Jacobian product
    /// (used for the QAOA energy, whose gradient comes from the adjoint
    /// sweep rather than from tape primitives).
    pub fn custom_unary(
        &self,
        input: Var,
        value: Matrix,
        vjp: impl Fn(&Matrix) -> Matrix + 'static,
    ) -> Var {
        self.push(value, Some(Box::new(move |g, _| vec![(input, vjp(g))])))
    }

    /// Reverse sweep from a scalar loss. Returns gradients for every node
    /// that influenced the loss; leaves that never did are simply absent
    /// (callers read them as zeros).
    pub fn backward(&self, loss: Var) -> Gradients {
        let nodes = self.nodes.borrow();
        assert!(nodes[loss.0].value.is_scalar(), "backward requires a scalar loss");
        let mut grads: Vec<Option<Matrix>> = vec![None; nodes.len()];
        grads[loss.0] = Some(Matrix::scalar(1.0));
        let mut result = HashMap::new();
        for idx in (0..=loss.0).rev() {
            let Some(grad) = grads[idx].take() else { continue };
            match &nodes[idx].backward {
                Some(backward) => {
                    for (parent, contribution) in backward(&grad, &nodes) {
                        debug_assert!(parent.0 < idx, "tape must be topologically ordered");
                        match &mut grads[parent.0] {
                            Some(existing) => existing.add_assign(&contribution),
                            slot => *slot = Some(contribution),
                        }
                    }
                }
                None => {
                    result.insert(idx, grad);
                }
            }
        }
        Gradients { by_var: result }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn finite_difference(
        f: &mut dyn FnMut(&Matrix) -> f64,
        x: &Matrix,
        h: f64,
    ) -> Matrix {
        let mut grad = Matrix::zeros(x.rows, x.cols);
        for i in 0..x.data.len() {
            let mut plus = x.clone();
            plus.data[i] += h;
            let mut minus = x.clone();
            minus.data[i] -= h;
            grad.data[i] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        grad
    }

    fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
        Matrix::from_rows(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn linear_case_gradient_is_outer_product() {
        // loss = sum(W x): d loss / d W = outer(1, x).
        let tape = Tape::new();
        let w = tape.leaf(Matrix::from_rows(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]));
        let x = tape.leaf(Matrix::column(&[1.0, 2.0, 3.0]));
        let loss = tape.sum(tape.matmul(w, x));
        let grads = tape.backward(loss);
        let gw = grads.get(w).unwrap();
        assert_eq!(gw.data, vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn unused_parameter_gets_no_gradient() {
        let tape = Tape::new();
        let used = tape.leaf(Matrix::scalar(2.0));
        let unused = tape.leaf(Matrix::scalar(5.0));
        let loss = tape.scale(used, 3.0);
        let grads = tape.backward(loss);
        assert!(grads.get(unused).is_none());
        assert_eq!(grads.get_or_zero(unused, 1, 1).data, vec![0.0]);
        assert_eq!(grads.get(used).unwrap().data, vec![3.0]);
    }

    #[test]
    fn every_primitive_matches_finite_differences() {
        let mut rng = stream_rng(71, 0);
        let h = 1e-5;
        let rel_tol = 1e-4;

        type Builder = fn(&Tape, Var, Var) -> Var;
        let cases: Vec<(&str, Builder)> = vec![
            ("add", |t, a, b| t.sum(t.add(a, b))),
            ("sub", |t, a, b| t.sum(t.sub(a, b))),
            ("mul", |t, a, b| t.sum(t.mul(a, b))),
            ("matmul", |t, a, b| t.sum(t.matmul(a, t.matmul(b, t.leaf(Matrix::ones(3, 1)))))),
            ("sigmoid", |t, a, b| t.sum(t.mul(t.sigmoid(a), b))),
            ("tanh", |t, a, b| t.sum(t.mul(t.tanh(a), b))),
            ("relu", |t, a, b| t.sum(t.mul(t.relu(a), b))),
            ("scale", |t, a, b| t.sum(t.add(t.scale(a, 1.7), b))),
            ("concat_rows", |t, a, b| t.sum(t.concat_rows(&[a, b]))),
            ("mean_rows", |t, a, b| t.sum(t.add(t.mean_rows(a), t.mean_rows(b)))),
            ("add_row_broadcast", |t, a, b| {
                t.sum(t.add_row_broadcast(a, t.mean_rows(b)))
            }),
        ];

        for (name, build) in cases {
            let a0 = random_matrix(3, 3, &mut rng);
            let b0 = random_matrix(3, 3, &mut rng);

            let tape = Tape::new();
            let a = tape.leaf(a0.clone());
            let b = tape.leaf(b0.clone());
            let loss = build(&tape, a, b);
            let grads = tape.backward(loss);
            let ga = grads.get_or_zero(a, 3, 3);

            let mut f = |x: &Matrix| {
                let tape = Tape::new();
                let a = tape.leaf(x.clone());
                let b = tape.leaf(b0.clone());
                tape.value(build(&tape, a, b)).scalar_value()
            };
            let fd = finite_difference(&mut f, &a0, h);
            for i in 0..fd.data.len() {
                let denom = fd.data[i].abs().max(ga.data[i].abs()).max(1e-6);
                assert!(
                    (fd.data[i] - ga.data[i]).abs() / denom < rel_tol,
                    "{name} coord {i}: analytic {} vs fd {}",
                    ga.data[i],
                    fd.data[i]
                );
            }
        }
    }

    #[test]
    fn concat_cols_backward_splits_correctly() {
        let tape = Tape::new();
        let a = tape.leaf(Matrix::from_rows(2, 1, vec![1.0, 2.0]));
        let b = tape.leaf(Matrix::from_rows(2, 2, vec![3.0, 4.0, 5.0, 6.0]));
        let cat = tape.concat_cols(&[a, b]);
        assert_eq!(tape.value(cat).data, vec![1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let weights = tape.leaf(Matrix::from_rows(2, 3, vec![1.0, 10.0, 100.0, 2.0, 20.0, 200.0]));
        let loss = tape.sum(tape.mul(cat, weights));
        let grads = tape.backward(loss);
        assert_eq!(grads.get(a).unwrap().data, vec![1.0, 2.0]);
        assert_eq!(grads.get(b).unwrap().data, vec![10.0, 100.0, 20.0, 200.0]);
    }

    #[test]
    fn custom_unary_routes_vjp() {
        let tape = Tape::new();
        let x = tape.leaf(Matrix::column(&[2.0, 3.0]));
        // Pretend op: f(x) = x0 * x1 with externally known gradient.
        let value = Matrix::scalar(6.0);
        let grad = Matrix::column(&[3.0, 2.0]);
        let y = tape.custom_unary(x, value, move |g| grad.scale(g.scalar_value()));
        let loss = tape.scale(y, 2.0);
        let grads = tape.backward(loss);
        assert_eq!(grads.get(x).unwrap().data, vec![6.0, 4.0]);
    }

    #[test]
    fn replay_is_bit_identical() {
        let run = || {
            let mut rng = stream_rng(3, 9);
            let tape = Tape::new();
            let a = tape.leaf(random_matrix(4, 4, &mut rng));
            let b = tape.leaf(random_matrix(4, 4, &mut rng));
            let loss = tape.sum(tape.tanh(tape.matmul(a, tape.sigmoid(b))));
            let grads = tape.backward(loss);
            (tape.value(loss).data.clone(), grads.get(a).unwrap().data.clone())
        };
        assert_eq!(run(), run());
    }
}
