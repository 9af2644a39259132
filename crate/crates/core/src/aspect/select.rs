use std::collections::BTreeSet;

use super::{enumerate_sub_aspects, Aspect, ScoreTable};
use crate::error::{Error, Result};
use crate::hin::{NodeTypeId, SchemaGraph};

const MAX_EDGE_TYPES: usize = 20;

/// Sum of sub-aspect scores over the aspect.
pub fn inc_aspect(scores: &ScoreTable, aspect: &Aspect, schema: &SchemaGraph) -> Result<f64> {
    let mut total = 0.0;
    for sub in enumerate_sub_aspects(aspect, schema) {
        total += scores.get(&sub).ok_or_else(|| Error::MissingScore(sub.label(schema)))?;
    }
    Ok(total)
}

/// Connected edge-type subsets whose node types include every anchor,
/// ordered by the bitmask of edge types in schema order.
pub fn enumerate_candidate_aspects(schema: &SchemaGraph, anchors: &BTreeSet<NodeTypeId>) -> Result<Vec<Aspect>> {
    let edges = schema.edge_types();
    if edges.len() > MAX_EDGE_TYPES {
        return Err(Error::TooManyEdgeTypes(edges.len()));
    }
    if anchors.iter().any(|&a| !schema.contains_node_type(a)) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << edges.len()) {
        let chosen = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, d)| d.id);
        let Ok(aspect) = Aspect::new(schema, chosen) else {
            continue;
        };
        if anchors.iter().all(|&a| aspect.contains_node_type(a)) {
            out.push(aspect);
        }
    }
    Ok(out)
}

fn scored_candidates(
    scores: &ScoreTable,
    schema: &SchemaGraph,
    anchors: &BTreeSet<NodeTypeId>,
) -> Result<Vec<(Aspect, f64)>> {
    enumerate_candidate_aspects(schema, anchors)?
        .into_iter()
        .map(|a| {
            let inc = inc_aspect(scores, &a, schema)?;
            Ok((a, inc))
        })
        .collect()
}

/// Keeps candidates with score `<= theta` that have no eligible strict superset.
pub fn select_aspects(
    scores: &ScoreTable,
    schema: &SchemaGraph,
    theta: f64,
    anchors: &BTreeSet<NodeTypeId>,
) -> Result<Vec<Aspect>> {
    if !(theta >= 0.0) {
        return Err(Error::Config(format!("threshold must be nonnegative, got {theta}")));
    }
    let eligible: Vec<Aspect> = scored_candidates(scores, schema, anchors)?
        .into_iter()
        .filter(|(_, inc)| *inc <= theta)
        .map(|(a, _)| a)
        .collect();
    Ok(eligible
        .iter()
        .filter(|a| !eligible.iter().any(|b| a.is_strict_subset_of(b)))
        .cloned()
        .collect())
}

/// Smallest candidate score at which every schema node type shares an
/// eligible aspect with `anchor`.
pub fn choose_threshold(scores: &ScoreTable, schema: &SchemaGraph, anchor: NodeTypeId) -> Result<f64> {
    if !schema.contains_node_type(anchor) {
        return Err(Error::UnknownNodeType(anchor.to_string()));
    }
    let anchors = BTreeSet::from([anchor]);
    let mut candidates = scored_candidates(scores, schema, &anchors)?;
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1));
    let all: BTreeSet<NodeTypeId> = schema.node_types().collect();
    let mut covered = BTreeSet::from([anchor]);
    let mut i = 0;
    while i < candidates.len() {
        let theta = candidates[i].1;
        while i < candidates.len() && candidates[i].1 <= theta {
            covered.extend(candidates[i].0.node_types().iter().copied());
            i += 1;
        }
        if covered == all {
            return Ok(theta);
        }
    }
    let unreachable = all
        .difference(&covered)
        .map(|&t| schema.node_type_name(t).to_string())
        .collect();
    Err(Error::Unreachable {
        anchor: schema.node_type_name(anchor).to_string(),
        unreachable,
    })
}
