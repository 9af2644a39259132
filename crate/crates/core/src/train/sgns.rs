//! Skip-gram with negative sampling on a single edge.
//!
//! Per edge `(u, v)` with negatives `n_1..n_K` the ascended objective is
//!
//! ```text
//! log s(f_u . f_v) + sum_i log s(-f_u . f_n_i)
//! ```
//!
//! with `s` the logistic sigmoid.

use super::table::EmbeddingTable;

/// Row-addressed vector storage updated by [`sgns_step`].
pub trait VectorStore {
    fn dim(&self) -> usize;
    fn load(&self, row: usize, out: &mut [f64]);
    fn add_scaled(&mut self, row: usize, direction: &[f64], scale: f64);
}

impl VectorStore for EmbeddingTable {
    fn dim(&self) -> usize {
        EmbeddingTable::dim(self)
    }

    fn load(&self, row: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(row));
    }

    fn add_scaled(&mut self, row: usize, direction: &[f64], scale: f64) {
        for (x, d) in self.row_mut(row).iter_mut().zip(direction) {
            *x += scale * d;
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(x))` without overflow.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Value of the per-edge objective.
pub fn sgns_objective(fu: &[f64], fv: &[f64], negatives: &[&[f64]]) -> f64 {
    log_sigmoid(dot(fu, fv)) + negatives.iter().map(|n| log_sigmoid(-dot(fu, n))).sum::<f64>()
}

/// Gradients of [`sgns_objective`] with every vector treated as a distinct variable.
#[derive(Clone, Debug, PartialEq)]
pub struct SgnsGradients {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn sgns_gradients(fu: &[f64], fv: &[f64], negatives: &[&[f64]]) -> SgnsGradients {
    let pos = 1.0 - sigmoid(dot(fu, fv));
    let mut source: Vec<f64> = fv.iter().map(|x| pos * x).collect();
    let target = fu.iter().map(|x| pos * x).collect();
    let mut neg_grads = Vec::with_capacity(negatives.len());
    for n in negatives {
        let s = sigmoid(dot(fu, n));
        for (g, x) in source.iter_mut().zip(n.iter()) {
            *g -= s * x;
        }
        neg_grads.push(fu.iter().map(|x| -s * x).collect());
    }
    SgnsGradients {
        source,
        target,
        negatives: neg_grads,
    }
}

/// Reusable buffers for [`sgns_step`].
#[derive(Clone, Debug, Default)]
pub struct SgnsScratch {
    fu: Vec<f64>,
    fv: Vec<f64>,
    negs: Vec<f64>,
    grad_u: Vec<f64>,
    neg_scale: Vec<f64>,
}

impl SgnsScratch {
    pub fn new(dim: usize) -> Self {
        SgnsScratch {
            fu: vec![0.0; dim],
            fv: vec![0.0; dim],
            negs: Vec::new(),
            grad_u: vec![0.0; dim],
            neg_scale: Vec::new(),
        }
    }
}

/// One ascent step `x <- x + lr * grad` on the source, target and negative rows.
///
/// All gradients are taken at the pre-step values, so repeated rows
/// simply accumulate their updates.
pub fn sgns_step<S: VectorStore + ?Sized>(
    store: &mut S,
    source: usize,
    target: usize,
    negatives: &[usize],
    lr: f64,
    scratch: &mut SgnsScratch,
) {
    let d = store.dim();
    if scratch.fu.len() != d {
        *scratch = SgnsScratch::new(d);
    }
    store.load(source, &mut scratch.fu);
    store.load(target, &mut scratch.fv);
    scratch.negs.resize(negatives.len() * d, 0.0);
    scratch.neg_scale.clear();

    let pos = 1.0 - sigmoid(dot(&scratch.fu, &scratch.fv));
    for (g, x) in scratch.grad_u.iter_mut().zip(&scratch.fv) {
        *g = pos * x;
    }
    for (k, &n) in negatives.iter().enumerate() {
        let fnk = &mut scratch.negs[k * d..(k + 1) * d];
        store.load(n, fnk);
        let s = sigmoid(dot(&scratch.fu, fnk));
        for (g, x) in scratch.grad_u.iter_mut().zip(fnk.iter()) {
            *g -= s * x;
        }
        scratch.neg_scale.push(-s);
    }

    store.add_scaled(source, &scratch.grad_u, lr);
    store.add_scaled(target, &scratch.fu, lr * pos);
    for (k, &n) in negatives.iter().enumerate() {
        store.add_scaled(n, &scratch.fu, lr * scratch.neg_scale[k]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(rows: &[&[f64]]) -> EmbeddingTable {
        let dim = rows[0].len();
        let ids = (0..rows.len()).map(|i| format!("n{i}")).collect();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        EmbeddingTable::from_parts("t", dim, ids, data).unwrap()
    }

    #[test]
    fn origin_is_a_fixed_point_without_negatives() {
        let mut t = table(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let before = t.clone();
        sgns_step(&mut t, 0, 1, &[], 0.5, &mut SgnsScratch::default());
        assert_eq!(t, before);
    }

    #[test]
    fn positive_pair_moves_closer() {
        let mut t = table(&[&[0.3, -0.1, 0.2], &[0.1, 0.4, -0.2]]);
        let before = dot(t.row(0), t.row(1));
        sgns_step(&mut t, 0, 1, &[], 0.01, &mut SgnsScratch::default());
        assert!(dot(t.row(0), t.row(1)) > before);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let mut t = table(&refs);
        let before = t.clone();
        sgns_step(&mut t, 0, 1, &[2, 3, 3, 5], 0.0, &mut SgnsScratch::default());
        assert_eq!(t, before);
    }

    #[test]
    fn step_matches_gradient_function() {
        let rows: [&[f64]; 4] = [&[0.2, -0.4], &[0.5, 0.1], &[-0.3, 0.7], &[0.9, 0.2]];
        let mut t = table(&rows);
        let g = sgns_gradients(rows[0], rows[1], &[rows[2], rows[3]]);
        let lr = 0.1;
        sgns_step(&mut t, 0, 1, &[2, 3], lr, &mut SgnsScratch::default());
        for (row, grad) in [
            (0, &g.source),
            (1, &g.target),
            (2, &g.negatives[0]),
            (3, &g.negatives[1]),
        ] {
            for j in 0..2 {
                assert!((t.row(row)[j] - (rows[row][j] + lr * grad[j])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert_eq!(sigmoid(-800.0), 0.0);
    }
}
