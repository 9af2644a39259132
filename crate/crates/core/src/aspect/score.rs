//! Per-node inconsistency and sub-aspect incompatibility scores.
//!
//! For a center node `u`, the right-hand row is the normalized out-row of `u`
//! in the right edge type, and the left-hand row the normalized in-row of `u`
//! in the left edge type (the reverse of the left edge type). Comparing `u`
//! against every other center `w` by inner products of these rows gives
//! `x_w` and `y_w`, and
//!
//! ```text
//! gamma(u) = sum_w max(x_w, y_w) / sum_w min(x_w, y_w) - 1
//! ```
//!
//! Only centers sharing a neighbor with `u` on either side have a nonzero
//! term, so the sums run over that set.

use rayon::prelude::*;

use super::{schema_sub_aspects, ScoreTable, SubAspect};
use crate::error::{Error, Result};
use crate::hin::{Hin, NodeId, Relation, SchemaGraph};

struct Scratch {
    x: Vec<f64>,
    y: Vec<f64>,
    touched: Vec<NodeId>,
    seen: Vec<bool>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            x: vec![0.0; n],
            y: vec![0.0; n],
            touched: Vec::new(),
            seen: vec![false; n],
        }
    }

    fn touch(&mut self, w: NodeId) {
        if !self.seen[w.index()] {
            self.seen[w.index()] = true;
            self.touched.push(w);
        }
    }

    fn reset(&mut self) {
        for w in self.touched.drain(..) {
            self.x[w.index()] = 0.0;
            self.y[w.index()] = 0.0;
            self.seen[w.index()] = false;
        }
    }
}

struct Sides<'a> {
    hin: &'a Hin,
    left: &'a Relation,
    right: &'a Relation,
    sub: SubAspect,
}

impl<'a> Sides<'a> {
    fn new(hin: &'a Hin, sub: SubAspect) -> Result<Self> {
        let n = hin.edge_types().len();
        for r in [sub.left_edge, sub.right_edge] {
            if r.index() >= n {
                return Err(Error::UnknownEdgeType(r.to_string()));
            }
        }
        Ok(Sides {
            hin,
            left: hin.relation(sub.left_edge),
            right: hin.relation(sub.right_edge),
            sub,
        })
    }

    fn gamma(&self, u: NodeId, s: &mut Scratch) -> Option<f64> {
        let du = self.right.out_degree(u);
        let lu = self.left.in_degree(u);
        if du <= 0.0 || lu <= 0.0 {
            return None;
        }
        let center = self.sub.center;
        for e in self.right.out_edges(u) {
            let ru = e.weight / du;
            for f in self.right.in_edges(e.dst) {
                let w = f.src;
                if self.hin.node_type(w) != center {
                    continue;
                }
                let dw = self.right.out_degree(w);
                // Zero-weight edges leave `w` with a zero degree and add nothing.
                if dw <= 0.0 {
                    continue;
                }
                s.touch(w);
                s.x[w.index()] += ru * f.weight / dw;
            }
        }
        for e in self.left.in_edges(u) {
            let luz = e.weight / lu;
            for f in self.left.out_edges(e.src) {
                let w = f.dst;
                if self.hin.node_type(w) != center {
                    continue;
                }
                let dw = self.left.in_degree(w);
                if dw <= 0.0 {
                    continue;
                }
                s.touch(w);
                s.y[w.index()] += luz * f.weight / dw;
            }
        }
        let (mut hi, mut lo) = (0.0, 0.0);
        for &w in &s.touched {
            let (x, y) = (s.x[w.index()], s.y[w.index()]);
            hi += x.max(y);
            lo += x.min(y);
        }
        s.reset();
        if lo > 0.0 {
            Some(hi / lo - 1.0)
        } else {
            None
        }
    }
}

/// Inconsistency of center node `u` under `sub`; `None` when the
/// denominator vanishes (no left in-edges or no right out-edges).
pub fn gamma(hin: &Hin, u: NodeId, sub: &SubAspect) -> Result<Option<f64>> {
    if u.index() >= hin.node_count() {
        return Err(Error::UnknownNode(u.to_string()));
    }
    if hin.node_type(u) != sub.center {
        return Err(Error::TypeMismatch {
            node: hin.node_name(u).to_string(),
            expected: hin.node_type_name(sub.center).to_string(),
            actual: hin.node_type_name(hin.node_type(u)).to_string(),
        });
    }
    let sides = Sides::new(hin, *sub)?;
    let mut scratch = Scratch::new(hin.node_count());
    Ok(sides.gamma(u, &mut scratch))
}

/// Mean of `gamma` over the centers where it is defined.
pub fn inc_simple(hin: &Hin, sub: &SubAspect) -> Result<f64> {
    let sides = Sides::new(hin, *sub)?;
    let centers = hin.nodes_of_type(sub.center);
    let n = hin.node_count();
    let values: Vec<Option<f64>> = centers
        .par_iter()
        .with_min_len(64)
        .map_init(|| Scratch::new(n), |s, &u| sides.gamma(u, s))
        .collect();
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values.into_iter().flatten() {
        sum += v;
        count += 1;
    }
    if count == 0 {
        log::warn!(
            "no center of type `{}` has both left and right edges; scoring 0",
            hin.node_type_name(sub.center)
        );
        return Ok(0.0);
    }
    Ok(sum / count as f64)
}

/// Scores every sub-aspect of `schema`.
pub fn score_schema(hin: &Hin, schema: &SchemaGraph) -> Result<ScoreTable> {
    let mut table = ScoreTable::new();
    for sub in schema_sub_aspects(schema) {
        let score = inc_simple(hin, &sub)?;
        log::info!("{}\t{score}", sub.label(schema));
        table.insert(schema, sub, score)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::HinBuilder;

    fn sub_for(hin: &Hin, l: &str, le: &str, c: &str, re: &str, r: &str) -> SubAspect {
        let schema = hin.schema();
        SubAspect::new(
            &schema,
            hin.node_type_id(l).unwrap(),
            hin.edge_type_id(le).unwrap(),
            hin.node_type_id(c).unwrap(),
            hin.edge_type_id(re).unwrap(),
            hin.node_type_id(r).unwrap(),
        )
        .unwrap()
    }

    /// Two edge types with identical adjacency between M and X.
    #[test]
    fn identical_edge_types_score_zero() {
        let mut b = HinBuilder::new();
        b.edge_type("l", "X", "M", false).unwrap();
        b.edge_type("r", "M", "X", false).unwrap();
        for m in ["m1", "m2", "m3"] {
            b.add_node(m, "M").unwrap();
        }
        for x in ["x1", "x2"] {
            b.add_node(x, "X").unwrap();
        }
        for (m, x, w) in [
            ("m1", "x1", 1.0),
            ("m1", "x2", 2.0),
            ("m2", "x2", 1.0),
            ("m3", "x1", 4.0),
        ] {
            b.add_edge(x, m, "l", w).unwrap();
            b.add_edge(m, x, "r", w).unwrap();
        }
        let hin = b.build();
        let sub = sub_for(&hin, "X", "l", "M", "r", "X");
        for &u in hin.nodes_of_type(sub.center) {
            let g = gamma(&hin, u, &sub).unwrap().unwrap();
            assert!(g.abs() < 1e-12, "gamma {g}");
        }
        assert!(inc_simple(&hin, &sub).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zero_weight_neighbours_contribute_nothing() {
        let mut b = HinBuilder::new();
        b.edge_type("write", "A", "P", false).unwrap();
        b.edge_type("venue", "P", "V", false).unwrap();
        for (n, t) in [("a", "A"), ("p1", "P"), ("p2", "P"), ("v", "V")] {
            b.add_node(n, t).unwrap();
        }
        b.add_edge("a", "p1", "write", 1.0).unwrap();
        b.add_edge("p1", "v", "venue", 1.0).unwrap();
        b.add_edge("a", "p2", "write", 0.0).unwrap();
        b.add_edge("p2", "v", "venue", 0.0).unwrap();
        let hin = b.build();
        let sub = sub_for(&hin, "A", "write", "P", "venue", "V");
        let p1 = hin.node_id("p1").unwrap();
        assert_eq!(gamma(&hin, p1, &sub).unwrap(), Some(0.0));
        assert_eq!(inc_simple(&hin, &sub).unwrap(), 0.0);
    }

    #[test]
    fn missing_side_is_excluded() {
        let mut b = HinBuilder::new();
        b.edge_type("write", "A", "P", false).unwrap();
        b.edge_type("venue", "P", "V", false).unwrap();
        b.add_node("a", "A").unwrap();
        b.add_node("p1", "P").unwrap();
        b.add_node("p2", "P").unwrap();
        b.add_node("v", "V").unwrap();
        b.add_edge("a", "p1", "write", 1.0).unwrap();
        b.add_edge("p1", "v", "venue", 1.0).unwrap();
        b.add_edge("p2", "v", "venue", 1.0).unwrap();
        let hin = b.build();
        let sub = sub_for(&hin, "A", "write", "P", "venue", "V");
        let p2 = hin.node_id("p2").unwrap();
        let p1 = hin.node_id("p1").unwrap();
        let a = hin.node_id("a").unwrap();
        assert_eq!(gamma(&hin, p2, &sub).unwrap(), None);
        // p1: x = {p1: 1, p2: 1}, y = {p1: 1} -> (2 + 0) ... max sum 2, min sum 1.
        assert!((gamma(&hin, p1, &sub).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(gamma(&hin, a, &sub), Err(Error::TypeMismatch { .. })));
        assert!((inc_simple(&hin, &sub).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_center_set_scores_zero() {
        let mut b = HinBuilder::new();
        b.edge_type("write", "A", "P", false).unwrap();
        b.edge_type("venue", "P", "V", false).unwrap();
        b.add_node("a", "A").unwrap();
        b.add_node("p1", "P").unwrap();
        b.add_node("p2", "P").unwrap();
        b.add_node("v", "V").unwrap();
        b.add_edge("a", "p1", "write", 1.0).unwrap();
        b.add_edge("p2", "v", "venue", 1.0).unwrap();
        let hin = b.build();
        let sub = sub_for(&hin, "A", "write", "P", "venue", "V");
        assert_eq!(inc_simple(&hin, &sub).unwrap(), 0.0);
    }
}
