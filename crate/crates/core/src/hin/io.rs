//! Text formats for graphs.
//!
//! Node file: `<node_id>\t<node_type>` per line.
//! Edge file: `%edgetype <name> <src_type> <dst_type> <d|u>` headers followed
//! by `<src_id>\t<dst_id>\t<edge_type>\t<weight>` records.
//! Blank lines and lines starting with `#` are ignored in both.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Hin, HinBuilder, NodeId};
use crate::error::{Error, Result};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn content_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>> + '_> {
    let reader = open(path)?;
    Ok(reader.lines().enumerate().filter_map(move |(i, line)| match line {
        Err(e) => Some(Err(Error::io(path, e))),
        Ok(l) => {
            let t = l.trim_end_matches(['\r', '\n']);
            if t.trim().is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, t.to_string())))
            }
        }
    }))
}

/// Reads `(node_id, node_type)` pairs in file order.
pub fn read_nodes(path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for item in content_lines(path)? {
        let (lineno, line) = item?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                path,
                lineno,
                line.as_str(),
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let (id, ty) = (fields[0].trim(), fields[1].trim());
        if id.is_empty() {
            return Err(Error::parse(path, lineno, "node_id", "empty node id"));
        }
        if ty.is_empty() {
            return Err(Error::parse(path, lineno, "node_type", "empty node type"));
        }
        out.push((id.to_string(), ty.to_string()));
    }
    Ok(out)
}

/// Parses an edge file into `builder`, whose nodes must already be present.
pub fn read_edges(path: &Path, builder: &mut HinBuilder) -> Result<()> {
    for item in content_lines(path)? {
        let (lineno, line) = item?;
        if let Some(rest) = line.strip_prefix("%edgetype") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::parse(
                    path,
                    lineno,
                    line.as_str(),
                    "expected `%edgetype <name> <src_type> <dst_type> <d|u>`",
                ));
            }
            let directed = match parts[3] {
                "d" => true,
                "u" => false,
                other => return Err(Error::parse(path, lineno, other, "directedness must be `d` or `u`")),
            };
            builder
                .edge_type(parts[0], parts[1], parts[2], directed)
                .map_err(|e| Error::parse(path, lineno, parts[0], e.to_string()))?;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                line.as_str(),
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let (src, dst, ty, w) = (fields[0], fields[1], fields[2], fields[3]);
        let weight: f64 = w
            .parse()
            .map_err(|_| Error::parse(path, lineno, w, "weight is not a number"))?;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::parse(path, lineno, w, "weight must be finite and nonnegative"));
        }
        if builder.edge_type_id(ty).is_none() {
            return Err(Error::parse(path, lineno, ty, "unknown edge type"));
        }
        for id in [src, dst] {
            if builder.node_id(id).is_none() {
                return Err(Error::parse(path, lineno, id, format!("unknown node `{id}`")));
            }
        }
        builder
            .add_edge(src, dst, ty, weight)
            .map_err(|e| Error::parse(path, lineno, line.as_str(), e.to_string()))?;
    }
    Ok(())
}

/// Builds a graph from a node file and an edge file.
pub fn ingest(node_file: &Path, edge_file: &Path) -> Result<Hin> {
    let mut builder = HinBuilder::new();
    for (lineno, (id, ty)) in read_nodes(node_file)?.into_iter().enumerate() {
        builder
            .add_node(&id, &ty)
            .map_err(|e| Error::parse(node_file, lineno + 1, id.as_str(), e.to_string()))?;
    }
    read_edges(edge_file, &mut builder)?;
    Ok(builder.build())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_nodes(hin: &Hin, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for i in 0..hin.node_count() {
        let u = NodeId(i as u32);
        writeln!(w, "{}\t{}", hin.node_name(u), hin.node_type_name(hin.node_type(u))).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes an edge file that re-ingests to an identical graph.
///
/// Undirected types are written once per pair in declared orientation;
/// a merged undirected self-loop carries twice its input weight, so half is written.
pub fn write_edges(hin: &Hin, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for def in hin.edge_types() {
        writeln!(
            w,
            "%edgetype {} {} {} {}",
            def.name,
            hin.node_type_name(def.source),
            hin.node_type_name(def.target),
            if def.directed { "d" } else { "u" }
        )
        .map_err(io)?;
    }
    for def in hin.edge_types() {
        for e in hin.relation(def.id).edges() {
            let weight = if def.directed {
                e.weight
            } else if e.src == e.dst {
                e.weight / 2.0
            } else {
                let (ts, td) = (hin.node_type(e.src), hin.node_type(e.dst));
                let keep = if def.source != def.target {
                    ts == def.source && td == def.target
                } else {
                    e.src < e.dst
                };
                if !keep {
                    continue;
                }
                e.weight
            };
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                hin.node_name(e.src),
                hin.node_name(e.dst),
                def.name,
                weight
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
