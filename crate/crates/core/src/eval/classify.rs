//! Node classification on concatenated aspect embeddings.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::logreg::{LogRegConfig, OneVsRest};
use super::metrics::accuracy;
use crate::compose::AspectBundle;
use crate::error::{Error, Result};

/// Reads `<node_id>\t<class>` rows.
pub fn read_labels(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 2 || f[1].trim().is_empty() {
            return Err(Error::parse(path, i + 1, line, "expected `node<TAB>class`"));
        }
        if !seen.insert(f[0].to_string()) {
            return Err(Error::parse(path, i + 1, f[0], "duplicate node label"));
        }
        out.push((f[0].to_string(), f[1].trim().to_string()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyReport {
    pub accuracy: f64,
    pub train: usize,
    pub test: usize,
    pub classes: usize,
}

/// Shuffles the labelled nodes with `seed`, trains one-vs-rest logistic
/// regression on `1 - test_fraction` of them and reports test accuracy.
pub fn classify_harness(
    bundle: &AspectBundle,
    labels: &[(String, String)],
    test_fraction: f64,
    seed: u64,
    cfg: &LogRegConfig,
) -> Result<ClassifyReport> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut rows: Vec<(Vec<f64>, String)> = labels
        .iter()
        .map(|(n, c)| Ok((bundle.node_embedding(n)?, c.clone())))
        .collect::<Result<_>>()?;
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((rows.len() as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test == rows.len() {
        return Err(Error::Eval(format!("{} labelled nodes cannot be split", rows.len())));
    }
    let train = rows.split_off(n_test);
    let (x, y): (Vec<_>, Vec<_>) = train.into_iter().unzip();
    let model = OneVsRest::train(&x, &y, cfg)?;
    let pred: Vec<String> = rows.iter().map(|(f, _)| model.predict(f).to_string()).collect();
    let truth: Vec<String> = rows.iter().map(|(_, c)| c.clone()).collect();
    Ok(ClassifyReport {
        accuracy: accuracy(&pred, &truth)?,
        train: x.len(),
        test: rows.len(),
        classes: model.classes.len(),
    })
}
