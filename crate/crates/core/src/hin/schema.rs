use std::collections::BTreeSet;

use super::{EdgeTypeDef, EdgeTypeId, Hin, NodeTypeId};
use crate::error::{Error, Result};

/// Meta-graph of node types and edge types.
///
/// Type ids are shared with the graph the schema was derived from, so a
/// schema may have gaps in its id space when some declared types are unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaGraph {
    node_types: Vec<(NodeTypeId, String)>,
    edge_types: Vec<EdgeTypeDef>,
}

impl SchemaGraph {
    pub fn new(node_types: Vec<(NodeTypeId, String)>, edge_types: Vec<EdgeTypeDef>) -> Result<Self> {
        let ids: BTreeSet<_> = node_types.iter().map(|(id, _)| *id).collect();
        if ids.len() != node_types.len() {
            return Err(Error::Config("duplicate node type id in schema".into()));
        }
        let names: BTreeSet<_> = node_types.iter().map(|(_, n)| n.as_str()).collect();
        if names.len() != node_types.len() {
            return Err(Error::Config("duplicate node type name in schema".into()));
        }
        let edge_names: BTreeSet<_> = edge_types.iter().map(|e| e.name.as_str()).collect();
        if edge_names.len() != edge_types.len() {
            return Err(Error::Config("duplicate edge type name in schema".into()));
        }
        for def in &edge_types {
            for end in [def.source, def.target] {
                if !ids.contains(&end) {
                    return Err(Error::Config(format!(
                        "edge type `{}` references node type id {end} outside the schema",
                        def.name
                    )));
                }
            }
        }
        let mut node_types = node_types;
        node_types.sort_by_key(|(id, _)| *id);
        let mut edge_types = edge_types;
        edge_types.sort_by_key(|e| e.id);
        Ok(SchemaGraph { node_types, edge_types })
    }

    pub fn node_types(&self) -> impl Iterator<Item = NodeTypeId> + '_ {
        self.node_types.iter().map(|(id, _)| *id)
    }

    pub fn node_type_count(&self) -> usize {
        self.node_types.len()
    }

    pub fn edge_types(&self) -> &[EdgeTypeDef] {
        &self.edge_types
    }

    pub fn contains_node_type(&self, ty: NodeTypeId) -> bool {
        self.node_types.binary_search_by_key(&ty, |(id, _)| *id).is_ok()
    }

    pub fn node_type_name(&self, ty: NodeTypeId) -> &str {
        let i = self
            .node_types
            .binary_search_by_key(&ty, |(id, _)| *id)
            .expect("node type not in schema");
        &self.node_types[i].1
    }

    pub fn node_type_id(&self, name: &str) -> Option<NodeTypeId> {
        self.node_types.iter().find(|(_, n)| n == name).map(|(id, _)| *id)
    }

    pub fn edge_type(&self, r: EdgeTypeId) -> Option<&EdgeTypeDef> {
        self.edge_types
            .binary_search_by_key(&r, |e| e.id)
            .ok()
            .map(|i| &self.edge_types[i])
    }

    pub fn edge_type_id(&self, name: &str) -> Option<EdgeTypeId> {
        self.edge_types.iter().find(|e| e.name == name).map(|e| e.id)
    }

    /// Edge types incident to `ty`.
    pub fn incident(&self, ty: NodeTypeId) -> impl Iterator<Item = &EdgeTypeDef> + '_ {
        self.edge_types.iter().filter(move |e| e.touches(ty))
    }
}

/// Schema holding exactly the node types with nodes and the edge types with edges.
pub fn derive_schema(hin: &Hin) -> SchemaGraph {
    let edge_types: Vec<EdgeTypeDef> = hin
        .edge_types()
        .iter()
        .filter(|def| !hin.relation(def.id).is_empty())
        .cloned()
        .collect();
    let mut present: BTreeSet<NodeTypeId> = (0..hin.node_type_count() as u32)
        .map(NodeTypeId)
        .filter(|&ty| !hin.nodes_of_type(ty).is_empty())
        .collect();
    for def in &edge_types {
        present.insert(def.source);
        present.insert(def.target);
    }
    let node_types = present
        .into_iter()
        .map(|ty| (ty, hin.node_type_name(ty).to_string()))
        .collect();
    SchemaGraph::new(node_types, edge_types).expect("derived schema is consistent")
}
