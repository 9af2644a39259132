use rand::Rng;

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::hin::{EdgeTypeId, Hin, NodeId, NodeTypeId};

#[derive(Clone, Debug)]
struct NoiseDist {
    target: NodeTypeId,
    nodes: Vec<NodeId>,
    weights: Vec<f64>,
    table: AliasTable,
}

/// Negative-sample distributions `P(v) ~ in_degree(v)^power`, one per
/// `(edge type, target node type)`. Undirected edge types have one per endpoint type.
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    power: f64,
    per_edge: Vec<Vec<NoiseDist>>,
}

impl NoiseSampler {
    pub fn new(hin: &Hin, edge_types: impl IntoIterator<Item = EdgeTypeId>, power: f64) -> Result<Self> {
        if !power.is_finite() {
            return Err(Error::Config(format!("noise power {power} is not finite")));
        }
        let mut per_edge = vec![Vec::new(); hin.edge_types().len()];
        for r in edge_types {
            let def = hin.edge_type(r);
            let rel = hin.relation(r);
            let mut targets = vec![def.target];
            if !def.directed && def.source != def.target {
                targets.push(def.source);
            }
            for ty in targets {
                let (nodes, weights): (Vec<NodeId>, Vec<f64>) = hin
                    .nodes_of_type(ty)
                    .iter()
                    .filter(|&&v| rel.in_degree(v) > 0.0)
                    .map(|&v| (v, rel.in_degree(v).powf(power)))
                    .unzip();
                if nodes.is_empty() {
                    continue;
                }
                let table = AliasTable::new(&weights)?;
                per_edge[r.index()].push(NoiseDist {
                    target: ty,
                    nodes,
                    weights,
                    table,
                });
            }
        }
        Ok(NoiseSampler { power, per_edge })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    fn dist(&self, r: EdgeTypeId, target: NodeTypeId) -> Option<&NoiseDist> {
        self.per_edge.get(r.index())?.iter().find(|d| d.target == target)
    }

    /// Draws a node of type `target` for an edge of type `r`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, r: EdgeTypeId, target: NodeTypeId, rng: &mut R) -> Result<NodeId> {
        let d = self.dist(r, target).ok_or_else(|| {
            Error::InvalidWeights(format!(
                "no node of type {target} has positive in-degree in edge type {r}"
            ))
        })?;
        Ok(d.nodes[d.table.sample(rng)])
    }

    /// Normalized `(node, probability)` pairs; empty when the support is empty.
    pub fn distribution(&self, r: EdgeTypeId, target: NodeTypeId) -> Vec<(NodeId, f64)> {
        match self.dist(r, target) {
            None => Vec::new(),
            Some(d) => {
                let total: f64 = d.weights.iter().sum();
                d.nodes.iter().zip(&d.weights).map(|(&v, &w)| (v, w / total)).collect()
            }
        }
    }
}

/// Draws a negative for edge type `r` from its declared target type.
pub fn noise_sample<R: Rng + ?Sized>(sampler: &NoiseSampler, hin: &Hin, r: EdgeTypeId, rng: &mut R) -> Result<NodeId> {
    sampler.sample(r, hin.edge_type(r).target, rng)
}
