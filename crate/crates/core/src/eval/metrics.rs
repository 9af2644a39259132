use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Candidates sorted by descending score, ties by ascending id.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedResult {
    ids: Vec<String>,
    labels: Vec<bool>,
    positives: usize,
}

impl RankedResult {
    pub fn new(scored: impl IntoIterator<Item = (String, f64, bool)>) -> Result<Self> {
        let mut scored: Vec<_> = scored.into_iter().collect();
        if scored.is_empty() {
            return Err(Error::Eval("empty candidate set".into()));
        }
        if let Some((id, s, _)) = scored.iter().find(|(_, s, _)| s.is_nan()) {
            return Err(Error::Eval(format!("candidate `{id}` has score {s}")));
        }
        scored.sort_by(|a, b| match b.1.partial_cmp(&a.1).expect("no NaN") {
            Ordering::Equal => a.0.cmp(&b.0),
            o => o,
        });
        let positives = scored.iter().filter(|c| c.2).count();
        if positives == 0 {
            return Err(Error::Eval("candidate set has no true instance".into()));
        }
        let (ids, labels) = scored.into_iter().map(|(id, _, l)| (id, l)).unzip();
        Ok(RankedResult { ids, labels, positives })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    fn hits(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.len() {
            return Err(Error::Eval(format!("k={k} outside 1..={}", self.len())));
        }
        Ok(self.labels[..k].iter().filter(|&&l| l).count())
    }
}

pub fn precision_at_k(r: &RankedResult, k: usize) -> Result<f64> {
    Ok(r.hits(k)? as f64 / k as f64)
}

pub fn recall_at_k(r: &RankedResult, k: usize) -> Result<f64> {
    Ok(r.hits(k)? as f64 / r.positives as f64)
}

pub fn accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Eval(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Eval("no predictions".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(c: &[(&str, f64, bool)]) -> RankedResult {
        RankedResult::new(c.iter().map(|(i, s, l)| (i.to_string(), *s, *l))).unwrap()
    }

    #[test]
    fn single_true_ranked_first() {
        let r = ranked(&[("a", 0.9, true), ("b", 0.1, false)]);
        assert_eq!(precision_at_k(&r, 1).unwrap(), 1.0);
        assert_eq!(recall_at_k(&r, 1).unwrap(), 1.0);
    }

    #[test]
    fn partial_hits_in_top_three() {
        let r = ranked(&[("a", 0.9, true), ("b", 0.8, false), ("c", 0.7, false), ("d", 0.1, true)]);
        assert!((precision_at_k(&r, 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(recall_at_k(&r, 3).unwrap(), 0.5);
        assert_eq!(recall_at_k(&r, 4).unwrap(), 1.0);
    }

    #[test]
    fn no_hits_and_k_range() {
        let r = ranked(&[("a", 0.9, false), ("b", 0.1, true)]);
        assert_eq!(precision_at_k(&r, 1).unwrap(), 0.0);
        assert_eq!(recall_at_k(&r, 1).unwrap(), 0.0);
        assert!(precision_at_k(&r, 0).is_err());
        assert!(recall_at_k(&r, 3).is_err());
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let r = ranked(&[("c", 1.0, false), ("a", 1.0, true), ("b", 2.0, false)]);
        assert_eq!(r.ids(), ["b", "a", "c"]);
    }

    #[test]
    fn rejects_degenerate_candidate_sets() {
        assert!(RankedResult::new(Vec::new()).is_err());
        assert!(RankedResult::new(vec![("a".to_string(), 1.0, false)]).is_err());
        assert!(RankedResult::new(vec![("a".to_string(), f64::NAN, true)]).is_err());
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2], &[3, 4]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }
}
