use std::collections::BTreeSet;

use aspem::aspect::{enumerate_candidate_aspects, gamma, inc_aspect, schema_sub_aspects, select_aspects, ScoreTable};
use aspem::hin::{EdgeTypeDef, EdgeTypeId, HinBuilder, NodeTypeId, SchemaGraph};
use proptest::prelude::*;

fn schema_strategy() -> impl Strategy<Value = SchemaGraph> {
    (2u32..6).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n, any::<bool>()), 1..7).prop_map(move |edges| {
            let node_types = (0..n).map(|t| (NodeTypeId(t), format!("T{t}"))).collect();
            let defs = edges
                .into_iter()
                .enumerate()
                .map(|(i, (s, t, directed))| EdgeTypeDef {
                    id: EdgeTypeId(i as u32),
                    name: format!("r{i}"),
                    source: NodeTypeId(s),
                    target: NodeTypeId(t),
                    directed,
                })
                .collect();
            SchemaGraph::new(node_types, defs).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn raising_theta_never_shrinks_coverage(
        schema in schema_strategy(),
        raw in proptest::collection::vec(0.0f64..100.0, 64),
        anchor in 0u32..6,
    ) {
        let anchor = NodeTypeId(anchor);
        prop_assume!(schema.contains_node_type(anchor));
        let mut scores = ScoreTable::new();
        for (sub, v) in schema_sub_aspects(&schema).into_iter().zip(raw.iter().cycle()) {
            scores.insert(&schema, sub, *v).unwrap();
        }
        let anchors = BTreeSet::from([anchor]);
        let mut thetas: Vec<f64> = enumerate_candidate_aspects(&schema, &anchors)
            .unwrap()
            .iter()
            .map(|a| inc_aspect(&scores, a, &schema).unwrap())
            .collect();
        thetas.push(0.0);
        thetas.sort_by(f64::total_cmp);
        let mut last = BTreeSet::new();
        for t in thetas {
            let covered: BTreeSet<NodeTypeId> = select_aspects(&scores, &schema, t, &anchors)
                .unwrap()
                .iter()
                .flat_map(|a| a.node_types().iter().copied())
                .collect();
            prop_assert!(last.is_subset(&covered), "θ={t}: {last:?} ⊄ {covered:?}");
            last = covered;
        }
    }

    #[test]
    fn gamma_is_nonnegative(
        edges in proptest::collection::vec((0usize..8, 0usize..8, 0usize..8, 0usize..2, 0.0f64..3.0), 1..60),
    ) {
        let mut b = HinBuilder::new();
        b.edge_type("l", "L", "C", false).unwrap();
        b.edge_type("r", "C", "R", true).unwrap();
        for i in 0..8 {
            for t in ["L", "C", "R"] {
                b.add_node(&format!("{t}{i}"), t).unwrap();
            }
        }
        for (x, c, y, side, w) in edges {
            if side == 0 {
                b.add_edge(&format!("L{x}"), &format!("C{c}"), "l", w).unwrap();
            } else {
                b.add_edge(&format!("C{c}"), &format!("R{y}"), "r", w).unwrap();
            }
        }
        let hin = b.build();
        for sub in schema_sub_aspects(&hin.schema()) {
            for &u in hin.nodes_of_type(sub.center) {
                if let Some(g) = gamma(&hin, u, &sub).unwrap() {
                    prop_assert!(g >= 0.0, "gamma {g}");
                }
            }
        }
    }
}
