//! Exact (unsampled) model probabilities and the per-aspect objective.
//! Quadratic in type sizes; for diagnostics and tests.

use super::sgns::dot;
use super::table::EmbeddingTable;
use crate::aspect::Aspect;
use crate::error::{Error, Result};
use crate::hin::{EdgeTypeId, Hin, NodeId};

fn row<'t>(table: &'t EmbeddingTable, id: &str) -> Result<&'t [f64]> {
    table.get(id).ok_or_else(|| Error::UnknownNode(id.to_string()))
}

fn log_softmax(fu: &[f64], target: usize, candidates: &[&[f64]]) -> f64 {
    let scores: Vec<f64> = candidates.iter().map(|c| dot(fu, c)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores[target] - log_z
}

/// `exp(f_u . f_v) / sum_c exp(f_u . f_c)` over `candidates`, which must contain `v`.
pub fn softmax_prob(table: &EmbeddingTable, u: &str, v: &str, candidates: &[&str]) -> Result<f64> {
    let fu = row(table, u)?;
    let target = candidates
        .iter()
        .position(|c| *c == v)
        .ok_or_else(|| Error::Eval(format!("`{v}` is not among the candidates")))?;
    let rows = candidates.iter().map(|c| row(table, c)).collect::<Result<Vec<_>>>()?;
    Ok(log_softmax(fu, target, &rows).exp())
}

/// `W_uv / D_out(u)` in edge type `r`.
pub fn empirical_prob(hin: &Hin, u: NodeId, v: NodeId, r: EdgeTypeId) -> Result<f64> {
    let (out, _) = hin.degrees(u, r)?;
    if out <= 0.0 {
        return Err(Error::Eval(format!(
            "node `{}` has no outgoing edges of type `{}`",
            hin.node_name(u),
            hin.edge_type(r).name
        )));
    }
    Ok(hin.relation(r).weight(u, v) / out)
}

/// Weighted negative log-likelihood of the aspect's edges, each edge type
/// normalized by its total weight, under the type-restricted softmax.
pub fn objective(hin: &Hin, table: &EmbeddingTable, aspect: &Aspect) -> Result<f64> {
    if aspect.edge_types().is_empty() {
        return Err(Error::InvalidAspect("aspect has no edge types".into()));
    }
    let mut total = 0.0;
    for &r in aspect.edge_types() {
        let rel = hin.relation(r);
        let omega = rel.total_weight();
        if omega <= 0.0 {
            continue;
        }
        let mut sum = 0.0;
        for e in rel.edges() {
            if e.weight == 0.0 {
                continue;
            }
            let ty = hin.node_type(e.dst);
            let cands = hin.nodes_of_type(ty);
            let rows = cands
                .iter()
                .map(|&c| row(table, hin.node_name(c)))
                .collect::<Result<Vec<_>>>()?;
            let target = cands.binary_search(&e.dst).expect("destination has its own type");
            let fu = row(table, hin.node_name(e.src))?;
            sum += e.weight * log_softmax(fu, target, &rows);
        }
        total -= sum / omega;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::HinBuilder;

    fn t2(rows: &[(&str, [f64; 2])]) -> EmbeddingTable {
        EmbeddingTable::from_parts(
            "t",
            2,
            rows.iter().map(|(n, _)| n.to_string()).collect(),
            rows.iter().flat_map(|(_, v)| *v).collect(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_and_single_candidate() {
        let t = t2(&[("u", [0.0, 0.0]), ("a", [0.0, 0.0]), ("b", [0.0, 0.0])]);
        assert!((softmax_prob(&t, "u", "a", &["a", "b"]).unwrap() - 0.5).abs() < 1e-15);
        assert!((softmax_prob(&t, "u", "a", &["a"]).unwrap() - 1.0).abs() < 1e-15);
        assert!(softmax_prob(&t, "u", "a", &["b"]).is_err());
    }

    #[test]
    fn hand_evaluated_two_candidates() {
        let t = t2(&[("u", [1.0, 0.0]), ("v", [1.0, 0.0]), ("w", [-1.0, 0.0])]);
        let e = std::f64::consts::E;
        let p = softmax_prob(&t, "u", "v", &["v", "w"]).unwrap();
        assert!((p - e / (e + 1.0 / e)).abs() < 1e-12);
        assert!((p - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn empirical_ratio_and_zero_degree() {
        let mut b = HinBuilder::new();
        b.edge_type("r", "U", "V", true).unwrap();
        for n in ["u", "x"] {
            b.add_node(n, "U").unwrap();
        }
        for n in ["v", "w", "z"] {
            b.add_node(n, "V").unwrap();
        }
        b.add_edge("u", "v", "r", 2.0).unwrap();
        b.add_edge("u", "w", "r", 6.0).unwrap();
        let hin = b.build();
        let r = hin.edge_type_id("r").unwrap();
        let id = |n| hin.node_id(n).unwrap();
        assert_eq!(empirical_prob(&hin, id("u"), id("v"), r).unwrap(), 0.25);
        assert_eq!(empirical_prob(&hin, id("u"), id("z"), r).unwrap(), 0.0);
        let total: f64 = ["v", "w", "z"]
            .iter()
            .map(|v| empirical_prob(&hin, id("u"), id(v), r).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(empirical_prob(&hin, id("x"), id("v"), r).is_err());
    }
}
