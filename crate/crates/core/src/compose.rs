//! Cross-aspect node features and Hadamard edge features.
//!
//! A bundle is persisted as a manifest next to one embedding file per aspect:
//!
//! ```text
//! %nodetype 0 A
//! %nodetype 1 P
//! %edgetype 0 write A P u
//! %aspect AP write 8 AP.emb
//! ```
//!
//! Aspect order in the manifest is the feature order. Embedding paths are
//! relative to the manifest's directory.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::aspect::Aspect;
use crate::error::{Error, Result};
use crate::hin::{EdgeTypeDef, EdgeTypeId, NodeTypeId, SchemaGraph};
use crate::train::EmbeddingTable;

#[derive(Clone, Debug, PartialEq)]
pub struct AspectBundle {
    schema: SchemaGraph,
    spaces: Vec<(Aspect, EmbeddingTable)>,
}

impl AspectBundle {
    pub fn new(schema: SchemaGraph, spaces: Vec<(Aspect, EmbeddingTable)>) -> Result<Self> {
        let mut names = HashSet::new();
        for (aspect, table) in &spaces {
            if !names.insert(aspect.name().to_string()) {
                return Err(Error::Bundle {
                    aspect: aspect.name().into(),
                    message: "duplicate aspect".into(),
                });
            }
            if table.aspect() != aspect.name() {
                return Err(Error::Bundle {
                    aspect: aspect.name().into(),
                    message: format!("embedding table is labelled `{}`", table.aspect()),
                });
            }
            for &r in aspect.edge_types() {
                if schema.edge_type(r).is_none() {
                    return Err(Error::Bundle {
                        aspect: aspect.name().into(),
                        message: format!("edge type {r} is not in the schema"),
                    });
                }
            }
        }
        Ok(AspectBundle { schema, spaces })
    }

    pub fn schema(&self) -> &SchemaGraph {
        &self.schema
    }

    pub fn spaces(&self) -> &[(Aspect, EmbeddingTable)] {
        &self.spaces
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    /// Concatenation of `u`'s vectors over every aspect covering it, in bundle order.
    pub fn node_embedding(&self, u: &str) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut found = false;
        for (_, t) in &self.spaces {
            if let Some(row) = t.get(u) {
                found = true;
                out.extend_from_slice(row);
            }
        }
        if !found {
            return Err(Error::UnknownNode(u.to_string()));
        }
        Ok(out)
    }

    /// Concatenation of `f_u ∘ f_v` over every aspect covering both nodes.
    pub fn edge_embedding(&self, u: &str, v: &str) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut shared = false;
        for (_, t) in &self.spaces {
            if let (Some(fu), Some(fv)) = (t.get(u), t.get(v)) {
                shared = true;
                out.extend(fu.iter().zip(fv).map(|(a, b)| a * b));
            }
        }
        if !shared {
            return Err(Error::Eval(format!("`{u}` and `{v}` share no aspect")));
        }
        Ok(out)
    }

    /// Length of [`edge_embedding`](Self::edge_embedding) for a pair of node types.
    pub fn edge_dim(&self, a: NodeTypeId, b: NodeTypeId) -> usize {
        self.spaces
            .iter()
            .filter(|(asp, _)| asp.contains_node_type(a) && asp.contains_node_type(b))
            .map(|(_, t)| t.dim())
            .sum()
    }

    /// Length of [`node_embedding`](Self::node_embedding) for a node type.
    pub fn node_dim(&self, ty: NodeTypeId) -> usize {
        self.edge_dim(ty, ty)
    }

    pub fn write(&self, manifest: &Path) -> Result<()> {
        let mut text = String::new();
        for ty in self.schema.node_types() {
            writeln!(text, "%nodetype {} {}", ty.0, self.schema.node_type_name(ty)).unwrap();
        }
        for def in self.schema.edge_types() {
            writeln!(
                text,
                "%edgetype {} {} {} {} {}",
                def.id.0,
                def.name,
                self.schema.node_type_name(def.source),
                self.schema.node_type_name(def.target),
                if def.directed { "d" } else { "u" }
            )
            .unwrap();
        }
        for (aspect, table) in &self.spaces {
            let path = embedding_file(manifest, aspect);
            table.write(&path)?;
            let file = path.file_name().expect("has a file name").to_string_lossy();
            let edges: Vec<&str> = aspect
                .edge_types()
                .iter()
                .map(|&r| self.schema.edge_type(r).expect("validated").name.as_str())
                .collect();
            writeln!(
                text,
                "%aspect {} {} {} {}",
                aspect.name(),
                edges.join(","),
                table.dim(),
                file
            )
            .unwrap();
        }
        fs::write(manifest, text).map_err(|e| Error::io(manifest, e))
    }

    pub fn read(manifest: &Path) -> Result<Self> {
        let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let dir = manifest.parent().unwrap_or(Path::new(""));
        let mut node_types: Vec<(NodeTypeId, String)> = Vec::new();
        let mut edge_lines: Vec<(usize, Vec<String>)> = Vec::new();
        let mut aspect_lines: Vec<(usize, Vec<String>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            let expect = |n: usize, usage: &str| {
                if parts.len() == n {
                    Ok(())
                } else {
                    Err(Error::parse(manifest, lineno, line, format!("expected `{usage}`")))
                }
            };
            match parts[0].as_str() {
                "%nodetype" => {
                    expect(3, "%nodetype <id> <name>")?;
                    let id = parse_id(manifest, lineno, &parts[1])?;
                    node_types.push((NodeTypeId(id), parts[2].clone()));
                }
                "%edgetype" => {
                    expect(6, "%edgetype <id> <name> <src_type> <dst_type> <d|u>")?;
                    edge_lines.push((lineno, parts));
                }
                "%aspect" => {
                    expect(5, "%aspect <name> <edge_types> <dim> <path>")?;
                    aspect_lines.push((lineno, parts));
                }
                other => return Err(Error::parse(manifest, lineno, other, "unknown record kind")),
            }
        }

        let type_id = |lineno: usize, name: &str| {
            node_types
                .iter()
                .find(|(_, n)| n == name)
                .map(|(id, _)| *id)
                .ok_or_else(|| Error::parse(manifest, lineno, name, "unknown node type"))
        };
        let mut edges = Vec::new();
        for (lineno, p) in &edge_lines {
            let directed = match p[5].as_str() {
                "d" => true,
                "u" => false,
                other => return Err(Error::parse(manifest, *lineno, other, "expected `d` or `u`")),
            };
            edges.push(EdgeTypeDef {
                id: EdgeTypeId(parse_id(manifest, *lineno, &p[1])?),
                name: p[2].clone(),
                source: type_id(*lineno, &p[3])?,
                target: type_id(*lineno, &p[4])?,
                directed,
            });
        }
        let schema = SchemaGraph::new(node_types.clone(), edges)
            .map_err(|e| Error::parse(manifest, 0, "schema", e.to_string()))?;

        let mut spaces = Vec::new();
        for (lineno, p) in &aspect_lines {
            let edge_ids = p[2]
                .split(',')
                .map(|name| {
                    schema
                        .edge_type_id(name)
                        .ok_or_else(|| Error::parse(manifest, *lineno, name, "unknown edge type"))
                })
                .collect::<Result<BTreeSet<_>>>()?;
            let aspect = Aspect::new(&schema, edge_ids)?;
            if aspect.name() != p[1] {
                return Err(Error::parse(
                    manifest,
                    *lineno,
                    p[1].as_str(),
                    format!("edge types describe aspect `{}`", aspect.name()),
                ));
            }
            let dim: usize = p[3]
                .parse()
                .map_err(|_| Error::parse(manifest, *lineno, p[3].as_str(), "dimension is not an integer"))?;
            let path: PathBuf = dir.join(&p[4]);
            if !path.exists() {
                return Err(Error::Bundle {
                    aspect: aspect.name().into(),
                    message: format!("embedding file {} does not exist", path.display()),
                });
            }
            let table = EmbeddingTable::read(&path)?;
            if table.dim() != dim {
                return Err(Error::Bundle {
                    aspect: aspect.name().into(),
                    message: format!("manifest says dimension {dim}, file has {}", table.dim()),
                });
            }
            spaces.push((aspect, table));
        }
        AspectBundle::new(schema, spaces)
    }
}

/// Where [`AspectBundle::write`] puts an aspect's table: `<stem>.<aspect>.emb`
/// next to the manifest.
pub fn embedding_file(manifest: &Path, aspect: &Aspect) -> PathBuf {
    let dir = manifest.parent().unwrap_or(Path::new(""));
    let stem = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "bundle".into());
    dir.join(format!("{stem}.{}.emb", aspect.name().replace('+', "_")))
}

fn parse_id(path: &Path, lineno: usize, field: &str) -> Result<u32> {
    field
        .parse()
        .map_err(|_| Error::parse(path, lineno, field, "type id is not an integer"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspect::test_schemas;

    fn table(name: &str, rows: &[(&str, &[f64])]) -> EmbeddingTable {
        EmbeddingTable::from_parts(
            name,
            rows[0].1.len(),
            rows.iter().map(|(n, _)| n.to_string()).collect(),
            rows.iter().flat_map(|(_, v)| v.iter().copied()).collect(),
        )
        .unwrap()
    }

    fn two_aspect_bundle() -> AspectBundle {
        let schema = test_schemas::star("P", &["A", "V"]);
        let pa = Aspect::parse(&schema, "PA").unwrap();
        let pv = Aspect::parse(&schema, "PV").unwrap();
        let t1 = table("PA", &[("a", &[1.0, 2.0]), ("p", &[5.0, 6.0])]);
        let t2 = table("PV", &[("p", &[3.0, 4.0]), ("v", &[0.5, -1.0])]);
        AspectBundle::new(schema, vec![(pa, t1), (pv, t2)]).unwrap()
    }

    #[test]
    fn concatenation_follows_bundle_order() {
        let b = two_aspect_bundle();
        assert_eq!(b.node_embedding("p").unwrap(), vec![5.0, 6.0, 3.0, 4.0]);
        assert_eq!(b.node_embedding("v").unwrap(), vec![0.5, -1.0]);
        assert!(matches!(b.node_embedding("zzz"), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn hadamard_over_shared_aspects() {
        let b = two_aspect_bundle();
        assert_eq!(b.edge_embedding("a", "p").unwrap(), vec![5.0, 12.0]);
        assert_eq!(b.edge_embedding("p", "p").unwrap(), vec![25.0, 36.0, 9.0, 16.0]);
        assert!(b.edge_embedding("a", "v").is_err());
        let p = b.schema().node_type_id("P").unwrap();
        let a = b.schema().node_type_id("A").unwrap();
        assert_eq!(b.edge_dim(a, p), 2);
        assert_eq!(b.node_dim(p), 4);
    }

    #[test]
    fn duplicate_and_mislabelled_aspects_are_rejected() {
        let b = two_aspect_bundle();
        let mut spaces = b.spaces().to_vec();
        spaces.push(spaces[0].clone());
        assert!(AspectBundle::new(b.schema().clone(), spaces).is_err());
        let (asp, _) = b.spaces()[0].clone();
        let wrong = table("PV", &[("a", &[1.0])]);
        assert!(AspectBundle::new(b.schema().clone(), vec![(asp, wrong)]).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let b = two_aspect_bundle();
        let path = dir.path().join("run.bundle");
        b.write(&path).unwrap();
        let back = AspectBundle::read(&path).unwrap();
        assert_eq!(back.schema(), b.schema());
        assert_eq!(back.len(), 2);
        for ((a1, t1), (a2, t2)) in b.spaces().iter().zip(back.spaces()) {
            assert_eq!(a1, a2);
            assert_eq!(t1.ids(), t2.ids());
            for (x, y) in t1.data().iter().zip(t2.data()) {
                assert!((x - y).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn missing_embedding_file_names_the_aspect() {
        let dir = tempfile::tempdir().unwrap();
        let b = two_aspect_bundle();
        let path = dir.path().join("run.bundle");
        b.write(&path).unwrap();
        fs::remove_file(dir.path().join("run.PV.emb")).unwrap();
        match AspectBundle::read(&path) {
            Err(Error::Bundle { aspect, .. }) => assert_eq!(aspect, "PV"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_in_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.bundle");
        two_aspect_bundle().write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace("PA e0 2", "PA e0 3");
        fs::write(&path, text).unwrap();
        assert!(matches!(AspectBundle::read(&path), Err(Error::Bundle { .. })));
    }

    #[test]
    fn corrupt_manifest_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bundle");
        fs::write(&path, "%nodetype A\n").unwrap();
        assert!(matches!(AspectBundle::read(&path), Err(Error::Parse { line: 1, .. })));
    }
}
