//! Score table files.
//!
//! ```text
//! %nodetype A
//! %edgetype write A P u
//! %subaspect A write P cite R 307.988
//! ```
//!
//! `%nodetype` and `%edgetype` lines are optional. Without them the schema
//! is inferred from the sub-aspect lines, with every edge type undirected.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{ScoreTable, SubAspect};
use crate::error::{Error, Result};
use crate::hin::{EdgeTypeDef, EdgeTypeId, NodeTypeId, Registry, SchemaGraph};

struct Pending {
    lineno: usize,
    fields: Vec<String>,
    score: f64,
}

pub fn read_scores(path: &Path) -> Result<(SchemaGraph, ScoreTable)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut node_types = Registry::default();
    let mut edges: Vec<EdgeTypeDef> = Vec::new();
    let mut edge_index: HashMap<String, usize> = HashMap::new();
    let mut pending = Vec::new();
    let mut declared_edges = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts[0] {
            "%nodetype" => {
                if parts.len() != 2 {
                    return Err(Error::parse(path, lineno, line, "expected `%nodetype <name>`"));
                }
                node_types.intern(parts[1]);
            }
            "%edgetype" => {
                if parts.len() != 5 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        line,
                        "expected `%edgetype <name> <src_type> <dst_type> <d|u>`",
                    ));
                }
                let directed = match parts[4] {
                    "d" => true,
                    "u" => false,
                    other => return Err(Error::parse(path, lineno, other, "expected `d` or `u`")),
                };
                if edge_index.contains_key(parts[1]) {
                    return Err(Error::parse(path, lineno, parts[1], "duplicate edge type"));
                }
                let id = EdgeTypeId(edges.len() as u32);
                edge_index.insert(parts[1].to_string(), edges.len());
                edges.push(EdgeTypeDef {
                    id,
                    name: parts[1].to_string(),
                    source: NodeTypeId(node_types.intern(parts[2])),
                    target: NodeTypeId(node_types.intern(parts[3])),
                    directed,
                });
                declared_edges = true;
            }
            "%subaspect" => {
                if parts.len() != 7 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        line,
                        "expected `%subaspect <left> <left_edge> <center> <right_edge> <right> <score>`",
                    ));
                }
                let score: f64 = parts[6]
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, parts[6], "score is not a number"))?;
                if !(score.is_finite() && score >= 0.0) {
                    return Err(Error::parse(path, lineno, parts[6], "score must be nonnegative"));
                }
                pending.push(Pending {
                    lineno,
                    fields: parts[1..6].iter().map(|s| s.to_string()).collect(),
                    score,
                });
            }
            other => return Err(Error::parse(path, lineno, other, "unknown record kind")),
        }
    }

    if !declared_edges {
        for p in &pending {
            let f = &p.fields;
            for (edge, a, b) in [(&f[1], &f[0], &f[2]), (&f[3], &f[2], &f[4])] {
                let (a, b) = (NodeTypeId(node_types.intern(a)), NodeTypeId(node_types.intern(b)));
                match edge_index.get(edge.as_str()) {
                    Some(&i) => {
                        let d = &edges[i];
                        let same = (d.source, d.target) == (a, b) || (d.source, d.target) == (b, a);
                        if !same {
                            return Err(Error::parse(
                                path,
                                p.lineno,
                                edge.as_str(),
                                "edge type used with inconsistent endpoints",
                            ));
                        }
                    }
                    None => {
                        edge_index.insert(edge.clone(), edges.len());
                        edges.push(EdgeTypeDef {
                            id: EdgeTypeId(edges.len() as u32),
                            name: edge.clone(),
                            source: a,
                            target: b,
                            directed: false,
                        });
                    }
                }
            }
        }
    }

    let schema_nodes = (0..node_types.len() as u32)
        .map(|i| (NodeTypeId(i), node_types.name(i).to_string()))
        .collect();
    let schema = SchemaGraph::new(schema_nodes, edges).map_err(|e| Error::parse(path, 0, "schema", e.to_string()))?;

    let mut table = ScoreTable::new();
    for p in pending {
        let f = &p.fields;
        let node = |i: usize| {
            schema
                .node_type_id(&f[i])
                .ok_or_else(|| Error::parse(path, p.lineno, f[i].as_str(), "unknown node type"))
        };
        let edge = |i: usize| {
            schema
                .edge_type_id(&f[i])
                .ok_or_else(|| Error::parse(path, p.lineno, f[i].as_str(), "unknown edge type"))
        };
        let sub = SubAspect::new(&schema, node(0)?, edge(1)?, node(2)?, edge(3)?, node(4)?)
            .map_err(|e| Error::parse(path, p.lineno, f.join(" "), e.to_string()))?;
        if table.get(&sub).is_some() {
            return Err(Error::parse(path, p.lineno, f.join(" "), "duplicate sub-aspect"));
        }
        table.insert(&schema, sub, p.score)?;
    }
    Ok((schema, table))
}

pub fn write_scores(path: &Path, schema: &SchemaGraph, scores: &ScoreTable) -> Result<()> {
    let mut out = Vec::new();
    for ty in schema.node_types() {
        writeln!(out, "%nodetype {}", schema.node_type_name(ty)).unwrap();
    }
    for d in schema.edge_types() {
        writeln!(
            out,
            "%edgetype {} {} {} {}",
            d.name,
            schema.node_type_name(d.source),
            schema.node_type_name(d.target),
            if d.directed { "d" } else { "u" }
        )
        .unwrap();
    }
    for (sub, score) in scores.iter() {
        let e = |r| &schema.edge_type(r).expect("edge type in schema").name;
        writeln!(
            out,
            "%subaspect {} {} {} {} {} {}",
            schema.node_type_name(sub.left),
            e(sub.left_edge),
            schema.node_type_name(sub.center),
            e(sub.right_edge),
            schema.node_type_name(sub.right),
            score
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
