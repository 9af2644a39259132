//! Aspects, sub-aspects and statistics-driven aspect selection.

mod io;
mod score;
mod select;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use io::{read_scores, write_scores};
pub use score::{gamma, inc_simple, score_schema};
pub use select::{choose_threshold, enumerate_candidate_aspects, inc_aspect, select_aspects};

use crate::error::{Error, Result};
use crate::hin::{EdgeTypeDef, EdgeTypeId, NodeTypeId, SchemaGraph};

/// A connected subgraph of the schema, identified by its edge types.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Aspect {
    name: String,
    edge_types: BTreeSet<EdgeTypeId>,
    node_types: BTreeSet<NodeTypeId>,
}

impl Aspect {
    pub fn new(schema: &SchemaGraph, edge_types: impl IntoIterator<Item = EdgeTypeId>) -> Result<Self> {
        let edge_types: BTreeSet<EdgeTypeId> = edge_types.into_iter().collect();
        if edge_types.is_empty() {
            return Err(Error::InvalidAspect("aspect has no edge types".into()));
        }
        let mut defs = Vec::with_capacity(edge_types.len());
        for &r in &edge_types {
            defs.push(
                schema
                    .edge_type(r)
                    .ok_or_else(|| Error::InvalidAspect(format!("edge type id {r} not in schema")))?,
            );
        }
        if !is_connected(&defs) {
            return Err(Error::InvalidAspect(format!(
                "edge types {} do not form a connected subgraph",
                defs.iter().map(|d| d.name.as_str()).collect::<Vec<_>>().join(",")
            )));
        }
        let node_types: BTreeSet<NodeTypeId> = defs.iter().flat_map(|d| [d.source, d.target]).collect();
        let names: Vec<&str> = node_types.iter().map(|&t| schema.node_type_name(t)).collect();
        let name = if names.iter().all(|n| n.chars().count() == 1) {
            names.concat()
        } else {
            names.join("+")
        };
        Ok(Aspect {
            name,
            edge_types,
            node_types,
        })
    }

    /// The whole schema as a single aspect.
    pub fn full(schema: &SchemaGraph) -> Result<Self> {
        Aspect::new(schema, schema.edge_types().iter().map(|e| e.id))
    }

    /// Aspect induced by a set of node types: every schema edge type with both ends inside.
    pub fn induced(schema: &SchemaGraph, node_types: &BTreeSet<NodeTypeId>) -> Result<Self> {
        let edges = schema
            .edge_types()
            .iter()
            .filter(|d| node_types.contains(&d.source) && node_types.contains(&d.target))
            .map(|d| d.id);
        let aspect = Aspect::new(schema, edges)?;
        if &aspect.node_types != node_types {
            return Err(Error::InvalidAspect(format!(
                "node types do not induce a spanning aspect (got {})",
                aspect.name
            )));
        }
        Ok(aspect)
    }

    /// Parses `APRTV` (single-letter type names) or `Author+Paper` / `Author,Paper`.
    pub fn parse(schema: &SchemaGraph, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let names: Vec<String> = if spec.contains(['+', ',']) {
            spec.split(['+', ',']).map(|s| s.trim().to_string()).collect()
        } else if schema.node_type_id(spec).is_some() {
            vec![spec.to_string()]
        } else {
            spec.chars().map(String::from).collect()
        };
        let mut types = BTreeSet::new();
        for n in &names {
            types.insert(
                schema
                    .node_type_id(n)
                    .ok_or_else(|| Error::UnknownNodeType(n.clone()))?,
            );
        }
        Aspect::induced(schema, &types)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn edge_types(&self) -> &BTreeSet<EdgeTypeId> {
        &self.edge_types
    }

    pub fn node_types(&self) -> &BTreeSet<NodeTypeId> {
        &self.node_types
    }

    pub fn contains_node_type(&self, ty: NodeTypeId) -> bool {
        self.node_types.contains(&ty)
    }

    pub fn is_strict_subset_of(&self, other: &Aspect) -> bool {
        self.edge_types.len() < other.edge_types.len() && self.edge_types.is_subset(&other.edge_types)
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn is_connected(defs: &[&EdgeTypeDef]) -> bool {
    if defs.is_empty() {
        return false;
    }
    let mut reached: BTreeSet<NodeTypeId> = [defs[0].source, defs[0].target].into();
    let mut used = vec![false; defs.len()];
    used[0] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for (i, d) in defs.iter().enumerate() {
            if !used[i] && (reached.contains(&d.source) || reached.contains(&d.target)) {
                used[i] = true;
                reached.insert(d.source);
                reached.insert(d.target);
                changed = true;
            }
        }
    }
    used.iter().all(|&u| u)
}

/// Two edge types joined at a center node type: `left -left_edge-> center -right_edge-> right`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubAspect {
    pub left: NodeTypeId,
    pub left_edge: EdgeTypeId,
    pub center: NodeTypeId,
    pub right_edge: EdgeTypeId,
    pub right: NodeTypeId,
}

impl SubAspect {
    /// Validates orientation against the schema and returns the canonical form.
    pub fn new(
        schema: &SchemaGraph,
        left: NodeTypeId,
        left_edge: EdgeTypeId,
        center: NodeTypeId,
        right_edge: EdgeTypeId,
        right: NodeTypeId,
    ) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidAspect(format!("sub-aspect: {msg}"));
        if left_edge == right_edge {
            return Err(bad("edge types must differ"));
        }
        let l = schema
            .edge_type(left_edge)
            .ok_or_else(|| bad("unknown left edge type"))?;
        let r = schema
            .edge_type(right_edge)
            .ok_or_else(|| bad("unknown right edge type"))?;
        if !arrives(l, left, center) {
            return Err(bad(&format!("`{}` does not lead into the center type", l.name)));
        }
        if !arrives(r, center, right) {
            return Err(bad(&format!("`{}` does not leave the center type", r.name)));
        }
        Ok(SubAspect {
            left,
            left_edge,
            center,
            right_edge,
            right,
        }
        .canonical(schema))
    }

    pub fn mirror(&self) -> Self {
        SubAspect {
            left: self.right,
            left_edge: self.right_edge,
            center: self.center,
            right_edge: self.left_edge,
            right: self.left,
        }
    }

    /// When both edge types are undirected the sub-aspect and its mirror are
    /// the same object; the smaller tuple represents both.
    pub fn canonical(self, schema: &SchemaGraph) -> Self {
        let undirected = |r| schema.edge_type(r).is_some_and(|d| !d.directed);
        if undirected(self.left_edge) && undirected(self.right_edge) {
            self.min(self.mirror())
        } else {
            self
        }
    }

    pub fn label(&self, schema: &SchemaGraph) -> String {
        let e = |r| schema.edge_type(r).map(|d| d.name.as_str()).unwrap_or("?");
        format!(
            "{}-{}-{}-{}-{}",
            schema.node_type_name(self.left),
            e(self.left_edge),
            schema.node_type_name(self.center),
            e(self.right_edge),
            schema.node_type_name(self.right)
        )
    }
}

/// Whether edge type `def` can be traversed from `from` to `to`.
fn arrives(def: &EdgeTypeDef, from: NodeTypeId, to: NodeTypeId) -> bool {
    (def.source == from && def.target == to) || (!def.directed && def.source == to && def.target == from)
}

/// Canonical sub-aspects formed by pairs of distinct edge types of `edge_types`.
fn sub_aspects_of(schema: &SchemaGraph, edge_types: &BTreeSet<EdgeTypeId>) -> Vec<SubAspect> {
    let defs: Vec<&EdgeTypeDef> = edge_types.iter().filter_map(|&r| schema.edge_type(r)).collect();
    let centers: BTreeSet<NodeTypeId> = defs.iter().flat_map(|d| [d.source, d.target]).collect();
    let mut out = BTreeSet::new();
    for &c in &centers {
        // (edge, far endpoint) pairs that reach c / leave c.
        let mut into = Vec::new();
        let mut from = Vec::new();
        for d in &defs {
            if d.target == c {
                into.push((d.id, d.source));
            }
            if !d.directed && d.source == c {
                into.push((d.id, d.target));
            }
            if d.source == c {
                from.push((d.id, d.target));
            }
            if !d.directed && d.target == c {
                from.push((d.id, d.source));
            }
        }
        for &(le, l) in &into {
            for &(re, r) in &from {
                if le != re {
                    out.insert(
                        SubAspect {
                            left: l,
                            left_edge: le,
                            center: c,
                            right_edge: re,
                            right: r,
                        }
                        .canonical(schema),
                    );
                }
            }
        }
    }
    out.into_iter().collect()
}

/// All canonical sub-aspects contained in `aspect`, in sorted order.
pub fn enumerate_sub_aspects(aspect: &Aspect, schema: &SchemaGraph) -> Vec<SubAspect> {
    sub_aspects_of(schema, &aspect.edge_types)
}

/// All canonical sub-aspects of the schema.
pub fn schema_sub_aspects(schema: &SchemaGraph) -> Vec<SubAspect> {
    let all = schema.edge_types().iter().map(|d| d.id).collect();
    sub_aspects_of(schema, &all)
}

/// Incompatibility score per canonical sub-aspect.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreTable {
    scores: BTreeMap<SubAspect, f64>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, schema: &SchemaGraph, sub: SubAspect, score: f64) -> Result<()> {
        if !(score.is_finite() && score >= 0.0) {
            return Err(Error::InvalidWeights(format!(
                "score {score} for {} must be finite and nonnegative",
                sub.label(schema)
            )));
        }
        self.scores.insert(sub.canonical(schema), score);
        Ok(())
    }

    /// Looks up a canonical key.
    pub fn get(&self, sub: &SubAspect) -> Option<f64> {
        self.scores.get(sub).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SubAspect, f64)> + '_ {
        self.scores.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[cfg(test)]
pub(crate) mod test_schemas {
    use crate::hin::{EdgeTypeDef, EdgeTypeId, NodeTypeId, SchemaGraph};

    /// Star schema: the first type is the center; each other type hangs off
    /// it by an undirected edge type named `e<k>`.
    pub fn star(center: &str, leaves: &[&str]) -> SchemaGraph {
        let mut node_types = vec![(NodeTypeId(0), center.to_string())];
        let mut edges = Vec::new();
        for (i, leaf) in leaves.iter().enumerate() {
            node_types.push((NodeTypeId(i as u32 + 1), leaf.to_string()));
            edges.push(EdgeTypeDef {
                id: EdgeTypeId(i as u32),
                name: format!("e{i}"),
                source: NodeTypeId(0),
                target: NodeTypeId(i as u32 + 1),
                directed: false,
            });
        }
        SchemaGraph::new(node_types, edges).unwrap()
    }

    /// DBLP-shaped schema with node order A,P,R,T,V,Y.
    pub fn dblp() -> SchemaGraph {
        let names = ["A", "P", "R", "T", "V", "Y"];
        let node_types = names
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeTypeId(i as u32), n.to_string()))
            .collect();
        let e = |id, name: &str, s, t| EdgeTypeDef {
            id: EdgeTypeId(id),
            name: name.into(),
            source: NodeTypeId(s),
            target: NodeTypeId(t),
            directed: false,
        };
        SchemaGraph::new(
            node_types,
            vec![
                e(0, "write", 0, 1),
                e(1, "cite", 1, 2),
                e(2, "contain", 1, 3),
                e(3, "publish", 1, 4),
                e(4, "in_year", 1, 5),
            ],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_schemas::*;
    use super::*;

    #[test]
    fn dblp_full_schema_has_ten_sub_aspects() {
        let schema = dblp();
        let full = Aspect::full(&schema).unwrap();
        assert_eq!(full.name(), "APRTVY");
        assert_eq!(enumerate_sub_aspects(&full, &schema).len(), 10);
    }

    #[test]
    fn single_edge_type_has_no_sub_aspects() {
        let schema = dblp();
        let a = Aspect::parse(&schema, "AP").unwrap();
        assert!(enumerate_sub_aspects(&a, &schema).is_empty());
    }

    #[test]
    fn apy_has_exactly_one_sub_aspect() {
        let schema = dblp();
        let a = Aspect::parse(&schema, "APY").unwrap();
        let subs = enumerate_sub_aspects(&a, &schema);
        assert_eq!(subs.len(), 1);
        let s = subs[0];
        let ends: BTreeSet<_> = [s.left, s.right].into();
        assert_eq!(
            ends,
            [schema.node_type_id("A").unwrap(), schema.node_type_id("Y").unwrap()].into()
        );
        assert_eq!(s.center, schema.node_type_id("P").unwrap());
    }

    #[test]
    fn names_follow_schema_order() {
        let schema = dblp();
        assert_eq!(Aspect::parse(&schema, "YPRTV").unwrap().name(), "PRTVY");
        assert_eq!(Aspect::parse(&schema, "VTRPA").unwrap().name(), "APRTV");
    }

    #[test]
    fn disconnected_or_empty_aspects_are_rejected() {
        let schema = dblp();
        assert!(Aspect::parse(&schema, "AY").is_err());
        assert!(Aspect::new(&schema, []).is_err());
        assert!(Aspect::parse(&schema, "AQ").is_err());
    }

    #[test]
    fn mirrors_collapse_only_for_undirected_pairs() {
        let schema = dblp();
        let a = schema.node_type_id("A").unwrap();
        let p = schema.node_type_id("P").unwrap();
        let y = schema.node_type_id("Y").unwrap();
        let write = schema.edge_type_id("write").unwrap();
        let year = schema.edge_type_id("in_year").unwrap();
        let s1 = SubAspect::new(&schema, a, write, p, year, y).unwrap();
        let s2 = SubAspect::new(&schema, y, year, p, write, a).unwrap();
        assert_eq!(s1, s2);

        let node_types = vec![
            (NodeTypeId(0), "A".to_string()),
            (NodeTypeId(1), "P".to_string()),
            (NodeTypeId(2), "V".to_string()),
        ];
        let directed = SchemaGraph::new(
            node_types,
            vec![
                EdgeTypeDef {
                    id: EdgeTypeId(0),
                    name: "write".into(),
                    source: NodeTypeId(0),
                    target: NodeTypeId(1),
                    directed: true,
                },
                EdgeTypeDef {
                    id: EdgeTypeId(1),
                    name: "publish".into(),
                    source: NodeTypeId(1),
                    target: NodeTypeId(2),
                    directed: true,
                },
            ],
        )
        .unwrap();
        let full = Aspect::full(&directed).unwrap();
        let subs = enumerate_sub_aspects(&full, &directed);
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].left, NodeTypeId(0));
        assert!(SubAspect::new(
            &directed,
            NodeTypeId(2),
            EdgeTypeId(1),
            NodeTypeId(1),
            EdgeTypeId(0),
            NodeTypeId(0)
        )
        .is_err());
    }

    #[test]
    fn score_table_canonicalizes_keys() {
        let schema = star("M", &["U", "A"]);
        let sub = schema_sub_aspects(&schema)[0];
        let mut t = ScoreTable::new();
        t.insert(&schema, sub.mirror(), 3.0).unwrap();
        assert_eq!(t.get(&sub), Some(3.0));
        assert!(t.insert(&schema, sub, -1.0).is_err());
    }
}
