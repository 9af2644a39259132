//! Small L2-regularized logistic regression trained by shuffled SGD.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::train::sigmoid;

#[derive(Clone, Debug, PartialEq)]
pub struct LogRegConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            epochs: 30,
            lr: 0.05,
            l2: 1e-4,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    /// `sigmoid(w . x + b)`.
    pub fn predict_score(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

fn check_matrix(x: &[Vec<f64>], n_labels: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Eval("no training examples".into()));
    }
    if x.len() != n_labels {
        return Err(Error::Eval(format!("{} examples for {} labels", x.len(), n_labels)));
    }
    let dim = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::Eval(format!(
            "inconsistent feature length: {} vs {dim}",
            row.len()
        )));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Eval("non-finite feature value".into()));
    }
    Ok(dim)
}

/// Fits `P(y=1|x) = sigmoid(w . x + b)`. With a single class in `y` the
/// result is a constant model favouring that class.
pub fn train_logreg(x: &[Vec<f64>], y: &[bool], cfg: &LogRegConfig) -> Result<LogisticModel> {
    let dim = check_matrix(x, y.len())?;
    let positives = y.iter().filter(|&&l| l).count();
    if positives == 0 || positives == y.len() {
        log::warn!("logistic regression trained on a single class; returning a constant model");
        let n = y.len() as f64;
        let p = (positives as f64 + 0.5) / (n + 1.0);
        return Ok(LogisticModel {
            weights: vec![0.0; dim],
            bias: (p / (1.0 - p)).ln(),
        });
    }

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let lr = cfg.lr / (1.0 + epoch as f64 / 10.0);
        for &i in &order {
            let xi = &x[i];
            let z = b + w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>();
            let g = f64::from(u8::from(y[i])) - sigmoid(z);
            for (wj, xj) in w.iter_mut().zip(xi) {
                *wj += lr * (g * xj - cfg.l2 * *wj);
            }
            b += lr * g;
        }
    }
    Ok(LogisticModel { weights: w, bias: b })
}

/// One-vs-rest multi-class wrapper.
#[derive(Clone, Debug, PartialEq)]
pub struct OneVsRest {
    pub classes: Vec<String>,
    pub models: Vec<LogisticModel>,
}

impl OneVsRest {
    pub fn train(x: &[Vec<f64>], y: &[String], cfg: &LogRegConfig) -> Result<Self> {
        check_matrix(x, y.len())?;
        let mut classes: Vec<String> = y.to_vec();
        classes.sort();
        classes.dedup();
        let models = classes
            .iter()
            .map(|c| {
                let labels: Vec<bool> = y.iter().map(|l| l == c).collect();
                train_logreg(x, &labels, cfg)
            })
            .collect::<Result<_>>()?;
        Ok(OneVsRest { classes, models })
    }

    /// Class with the highest margin; ties go to the first class in sorted order.
    pub fn predict(&self, x: &[f64]) -> &str {
        let mut best = 0;
        let mut best_m = f64::NEG_INFINITY;
        for (i, m) in self.models.iter().enumerate() {
            let s = m.margin(x);
            if s > best_m {
                best = i;
                best_m = s;
            }
        }
        &self.classes[best]
    }
}
