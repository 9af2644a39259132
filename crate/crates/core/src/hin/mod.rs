//! Typed, weighted, directed graph model.
//!
//! Node and edge types live in dense registries. Edges are stored per edge
//! type, sorted by `(src, dst)` with duplicates merged, and indexed in both
//! directions together with weighted degree sums.

mod io;
mod schema;

use std::collections::HashMap;
use std::fmt;

pub use io::{ingest, read_edges, read_nodes, write_edges, write_nodes};
pub use schema::{derive_schema, SchemaGraph};

use crate::error::{Error, Result};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Dense node type identifier.
    NodeTypeId
);
id_type!(
    /// Dense edge type identifier.
    EdgeTypeId
);
id_type!(
    /// Dense node identifier, assigned in order of first appearance.
    NodeId
);

/// Declaration of an edge type: its endpoints and whether it is directed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeTypeDef {
    pub id: EdgeTypeId,
    pub name: String,
    pub source: NodeTypeId,
    pub target: NodeTypeId,
    pub directed: bool,
}

impl EdgeTypeDef {
    pub fn touches(&self, ty: NodeTypeId) -> bool {
        self.source == ty || self.target == ty
    }

    /// Endpoint on the other side of `ty`, if `ty` is an endpoint.
    pub fn opposite(&self, ty: NodeTypeId) -> Option<NodeTypeId> {
        if self.source == ty {
            Some(self.target)
        } else if self.target == ty {
            Some(self.source)
        } else {
            None
        }
    }
}

/// Name registry with contiguous ids from 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Registry {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A single directed, weighted edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

/// Splits an undirected edge into its two directed halves.
///
/// Self-loops produce two identical halves; both are kept.
pub fn decompose_undirected(edge: Edge, def: &EdgeTypeDef) -> Result<[Edge; 2]> {
    if def.directed {
        return Err(Error::NotUndirected(def.name.clone()));
    }
    Ok([
        edge,
        Edge {
            src: edge.dst,
            dst: edge.src,
            weight: edge.weight,
        },
    ])
}

/// All edges of one edge type with adjacency and degree indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    /// Sorted by `(src, dst)`; `(src, dst)` pairs are unique.
    edges: Vec<Edge>,
    out_offsets: Vec<usize>,
    /// Edge indices grouped by destination.
    in_edges: Vec<u32>,
    in_offsets: Vec<usize>,
    out_degree: Vec<f64>,
    in_degree: Vec<f64>,
    total_weight: f64,
}

impl Relation {
    fn build(mut edges: Vec<Edge>, node_count: usize) -> Self {
        edges.sort_by_key(|e| (e.src, e.dst));
        let mut merged: Vec<Edge> = Vec::with_capacity(edges.len());
        for e in edges {
            match merged.last_mut() {
                Some(last) if last.src == e.src && last.dst == e.dst => last.weight += e.weight,
                _ => merged.push(e),
            }
        }

        let mut out_offsets = vec![0usize; node_count + 1];
        let mut in_counts = vec![0usize; node_count + 1];
        let mut out_degree = vec![0.0; node_count];
        let mut in_degree = vec![0.0; node_count];
        let mut total_weight = 0.0;
        for e in &merged {
            out_offsets[e.src.index() + 1] += 1;
            in_counts[e.dst.index() + 1] += 1;
            out_degree[e.src.index()] += e.weight;
            in_degree[e.dst.index()] += e.weight;
            total_weight += e.weight;
        }
        for i in 0..node_count {
            out_offsets[i + 1] += out_offsets[i];
            in_counts[i + 1] += in_counts[i];
        }
        let in_offsets = in_counts.clone();
        let mut cursor = in_counts;
        let mut in_edges = vec![0u32; merged.len()];
        for (idx, e) in merged.iter().enumerate() {
            let slot = &mut cursor[e.dst.index()];
            in_edges[*slot] = idx as u32;
            *slot += 1;
        }

        Relation {
            edges: merged,
            out_offsets,
            in_edges,
            in_offsets,
            out_degree,
            in_degree,
            total_weight,
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Sum of all edge weights of this type.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn out_edges(&self, u: NodeId) -> &[Edge] {
        &self.edges[self.out_offsets[u.index()]..self.out_offsets[u.index() + 1]]
    }

    pub fn in_edges(&self, v: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.in_edges[self.in_offsets[v.index()]..self.in_offsets[v.index() + 1]]
            .iter()
            .map(move |&i| &self.edges[i as usize])
    }

    pub fn out_degree(&self, u: NodeId) -> f64 {
        self.out_degree[u.index()]
    }

    pub fn in_degree(&self, v: NodeId) -> f64 {
        self.in_degree[v.index()]
    }

    /// Weight of `u -> v`, zero when absent.
    pub fn weight(&self, u: NodeId, v: NodeId) -> f64 {
        let out = self.out_edges(u);
        out.binary_search_by_key(&v, |e| e.dst)
            .map(|i| out[i].weight)
            .unwrap_or(0.0)
    }
}

/// Heterogeneous information network. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Hin {
    node_type_names: Registry,
    edge_types: Vec<EdgeTypeDef>,
    edge_type_index: HashMap<String, EdgeTypeId>,
    node_names: Vec<String>,
    node_index: HashMap<String, NodeId>,
    node_types: Vec<NodeTypeId>,
    nodes_by_type: Vec<Vec<NodeId>>,
    relations: Vec<Relation>,
}

impl Hin {
    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn node_name(&self, u: NodeId) -> &str {
        &self.node_names[u.index()]
    }

    pub fn node_type(&self, u: NodeId) -> NodeTypeId {
        self.node_types[u.index()]
    }

    pub fn nodes_of_type(&self, ty: NodeTypeId) -> &[NodeId] {
        &self.nodes_by_type[ty.index()]
    }

    pub fn node_type_count(&self) -> usize {
        self.node_type_names.len()
    }

    pub fn node_type_name(&self, ty: NodeTypeId) -> &str {
        self.node_type_names.name(ty.0)
    }

    pub fn node_type_id(&self, name: &str) -> Option<NodeTypeId> {
        self.node_type_names.get(name).map(NodeTypeId)
    }

    pub fn node_type_names(&self) -> &Registry {
        &self.node_type_names
    }

    pub fn edge_types(&self) -> &[EdgeTypeDef] {
        &self.edge_types
    }

    pub fn edge_type(&self, r: EdgeTypeId) -> &EdgeTypeDef {
        &self.edge_types[r.index()]
    }

    pub fn edge_type_id(&self, name: &str) -> Option<EdgeTypeId> {
        self.edge_type_index.get(name).copied()
    }

    pub fn relation(&self, r: EdgeTypeId) -> &Relation {
        &self.relations[r.index()]
    }

    /// Weighted `(out, in)` degree of `u` in edge type `r`.
    pub fn degrees(&self, u: NodeId, r: EdgeTypeId) -> Result<(f64, f64)> {
        if u.index() >= self.node_count() {
            return Err(Error::UnknownNode(u.to_string()));
        }
        let rel = self
            .relations
            .get(r.index())
            .ok_or_else(|| Error::UnknownEdgeType(r.to_string()))?;
        Ok((rel.out_degree(u), rel.in_degree(u)))
    }

    pub fn schema(&self) -> SchemaGraph {
        derive_schema(self)
    }
}

/// Incremental constructor for [`Hin`]; also used by file ingestion.
#[derive(Debug, Default)]
pub struct HinBuilder {
    node_type_names: Registry,
    edge_types: Vec<EdgeTypeDef>,
    edge_type_index: HashMap<String, EdgeTypeId>,
    node_names: Vec<String>,
    node_index: HashMap<String, NodeId>,
    node_types: Vec<NodeTypeId>,
    raw_edges: Vec<Vec<Edge>>,
}

impl HinBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_type(&mut self, name: &str) -> NodeTypeId {
        NodeTypeId(self.node_type_names.intern(name))
    }

    /// Declares an edge type. Redeclaring with an identical definition is a no-op.
    pub fn edge_type(&mut self, name: &str, source: &str, target: &str, directed: bool) -> Result<EdgeTypeId> {
        let source = self.node_type(source);
        let target = self.node_type(target);
        if let Some(&id) = self.edge_type_index.get(name) {
            let def = &self.edge_types[id.index()];
            if def.source == source && def.target == target && def.directed == directed {
                return Ok(id);
            }
            return Err(Error::Config(format!(
                "edge type `{name}` declared twice with different endpoints"
            )));
        }
        let id = EdgeTypeId(self.edge_types.len() as u32);
        self.edge_types.push(EdgeTypeDef {
            id,
            name: name.to_string(),
            source,
            target,
            directed,
        });
        self.edge_type_index.insert(name.to_string(), id);
        self.raw_edges.push(Vec::new());
        Ok(id)
    }

    /// Adds a node; re-adding an existing id with the same type is a no-op.
    pub fn add_node(&mut self, name: &str, node_type: &str) -> Result<NodeId> {
        let ty = self.node_type(node_type);
        if let Some(&id) = self.node_index.get(name) {
            if self.node_types[id.index()] == ty {
                return Ok(id);
            }
            return Err(Error::TypeMismatch {
                node: name.to_string(),
                expected: self.node_type_names.name(self.node_types[id.index()].0).to_string(),
                actual: node_type.to_string(),
            });
        }
        let id = NodeId(self.node_names.len() as u32);
        self.node_names.push(name.to_string());
        self.node_index.insert(name.to_string(), id);
        self.node_types.push(ty);
        Ok(id)
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn edge_type_id(&self, name: &str) -> Option<EdgeTypeId> {
        self.edge_type_index.get(name).copied()
    }

    pub fn edge_type_def(&self, r: EdgeTypeId) -> &EdgeTypeDef {
        &self.edge_types[r.index()]
    }

    pub fn add_edge(&mut self, src: &str, dst: &str, edge_type: &str, weight: f64) -> Result<()> {
        let r = self
            .edge_type_id(edge_type)
            .ok_or_else(|| Error::UnknownEdgeType(edge_type.to_string()))?;
        let u = self.node_id(src).ok_or_else(|| Error::UnknownNode(src.to_string()))?;
        let v = self.node_id(dst).ok_or_else(|| Error::UnknownNode(dst.to_string()))?;
        self.add_edge_ids(u, v, r, weight)
    }

    pub fn add_edge_ids(&mut self, u: NodeId, v: NodeId, r: EdgeTypeId, weight: f64) -> Result<()> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidWeight {
                src: self.node_names[u.index()].clone(),
                dst: self.node_names[v.index()].clone(),
                weight,
            });
        }
        let def = &self.edge_types[r.index()];
        let (tu, tv) = (self.node_types[u.index()], self.node_types[v.index()]);
        let forward = tu == def.source && tv == def.target;
        let backward = !def.directed && tu == def.target && tv == def.source;
        if !(forward || backward) {
            let (node, expected, actual) = if tu != def.source && tu != def.target {
                (u, def.source, tu)
            } else {
                (v, def.target, tv)
            };
            return Err(Error::TypeMismatch {
                node: self.node_names[node.index()].clone(),
                expected: self.node_type_names.name(expected.0).to_string(),
                actual: self.node_type_names.name(actual.0).to_string(),
            });
        }
        let edge = Edge { src: u, dst: v, weight };
        if def.directed {
            self.raw_edges[r.index()].push(edge);
        } else {
            let halves = decompose_undirected(edge, def)?;
            self.raw_edges[r.index()].extend(halves);
        }
        Ok(())
    }

    pub fn build(self) -> Hin {
        let node_count = self.node_names.len();
        let mut nodes_by_type = vec![Vec::new(); self.node_type_names.len()];
        for (i, ty) in self.node_types.iter().enumerate() {
            nodes_by_type[ty.index()].push(NodeId(i as u32));
        }
        let relations = self
            .raw_edges
            .into_iter()
            .map(|edges| Relation::build(edges, node_count))
            .collect();
        Hin {
            node_type_names: self.node_type_names,
            edge_types: self.edge_types,
            edge_type_index: self.edge_type_index,
            node_names: self.node_names,
            node_index: self.node_index,
            node_types: self.node_types,
            nodes_by_type,
            relations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Hin {
        let mut b = HinBuilder::new();
        b.add_node("a", "A").unwrap();
        b.add_node("p", "P").unwrap();
        b.add_node("q", "P").unwrap();
        b.edge_type("write", "A", "P", false).unwrap();
        b.edge_type("cite", "P", "P", true).unwrap();
        b.add_edge("a", "p", "write", 1.0).unwrap();
        b.add_edge("p", "q", "cite", 1.0).unwrap();
        b.add_edge("p", "q", "cite", 2.0).unwrap();
        b.add_edge("p", "p", "cite", 5.0).unwrap();
        b.build()
    }

    #[test]
    fn undirected_edge_becomes_two_directed_edges() {
        let hin = tiny();
        let write = hin.edge_type_id("write").unwrap();
        let rel = hin.relation(write);
        assert_eq!(rel.len(), 2);
        let a = hin.node_id("a").unwrap();
        let p = hin.node_id("p").unwrap();
        assert_eq!(rel.weight(a, p), 1.0);
        assert_eq!(rel.weight(p, a), 1.0);
    }

    #[test]
    fn decompose_keeps_weight_and_reverses() {
        let def = EdgeTypeDef {
            id: EdgeTypeId(0),
            name: "x".into(),
            source: NodeTypeId(0),
            target: NodeTypeId(0),
            directed: false,
        };
        let e = Edge {
            src: NodeId(0),
            dst: NodeId(1),
            weight: 2.5,
        };
        let [f, b] = decompose_undirected(e, &def).unwrap();
        assert_eq!((f.src, f.dst, f.weight), (NodeId(0), NodeId(1), 2.5));
        assert_eq!((b.src, b.dst, b.weight), (NodeId(1), NodeId(0), 2.5));

        let self_loop = Edge {
            src: NodeId(3),
            dst: NodeId(3),
            weight: 1.0,
        };
        let halves = decompose_undirected(self_loop, &def).unwrap();
        assert_eq!(halves[0], self_loop);
        assert_eq!(halves[1], self_loop);

        let directed = EdgeTypeDef { directed: true, ..def };
        assert!(matches!(
            decompose_undirected(e, &directed),
            Err(Error::NotUndirected(_))
        ));
    }

    #[test]
    fn duplicates_merge_and_self_loops_count_both_ways() {
        let hin = tiny();
        let cite = hin.edge_type_id("cite").unwrap();
        let p = hin.node_id("p").unwrap();
        let q = hin.node_id("q").unwrap();
        assert_eq!(hin.relation(cite).weight(p, q), 3.0);
        assert_eq!(hin.degrees(p, cite).unwrap(), (8.0, 5.0));
        assert_eq!(hin.degrees(q, cite).unwrap(), (0.0, 3.0));
    }

    #[test]
    fn degrees_of_unrelated_type_are_zero() {
        let hin = tiny();
        let cite = hin.edge_type_id("cite").unwrap();
        let a = hin.node_id("a").unwrap();
        assert_eq!(hin.degrees(a, cite).unwrap(), (0.0, 0.0));
        assert!(matches!(hin.degrees(NodeId(99), cite), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn rejects_bad_edges() {
        let mut b = HinBuilder::new();
        b.add_node("a", "A").unwrap();
        b.add_node("b", "A").unwrap();
        b.add_node("p", "P").unwrap();
        b.edge_type("write", "A", "P", true).unwrap();
        assert!(matches!(
            b.add_edge("a", "p", "write", -1.0),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(matches!(
            b.add_edge("a", "zzz", "write", 1.0),
            Err(Error::UnknownNode(n)) if n == "zzz"
        ));
        assert!(matches!(
            b.add_edge("p", "a", "write", 1.0),
            Err(Error::TypeMismatch { .. })
        ));
        assert!(matches!(
            b.add_edge("a", "b", "write", 1.0),
            Err(Error::TypeMismatch { .. })
        ));
        assert!(matches!(
            b.add_edge("a", "p", "nope", 1.0),
            Err(Error::UnknownEdgeType(_))
        ));
    }

    #[test]
    fn in_edges_follow_destination() {
        let hin = tiny();
        let cite = hin.edge_type_id("cite").unwrap();
        let q = hin.node_id("q").unwrap();
        let srcs: Vec<_> = hin.relation(cite).in_edges(q).map(|e| e.src).collect();
        assert_eq!(srcs, vec![hin.node_id("p").unwrap()]);
    }
}
