use std::collections::HashMap;

use aspem::alias::AliasTable;
use aspem::hin::{ingest, write_edges, write_nodes, Hin, HinBuilder};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Debug)]
struct RawEdge {
    src: usize,
    dst: usize,
    ty: usize,
    weight: f64,
}

/// Two node types, three edge types: directed `X->Y`, undirected `X-Y`, directed `Y->Y`.
fn build(nx: usize, ny: usize, edges: &[RawEdge]) -> Hin {
    let mut b = HinBuilder::new();
    b.edge_type("d", "X", "Y", true).unwrap();
    b.edge_type("u", "X", "Y", false).unwrap();
    b.edge_type("yy", "Y", "Y", true).unwrap();
    for i in 0..nx {
        b.add_node(&format!("x{i}"), "X").unwrap();
    }
    for i in 0..ny {
        b.add_node(&format!("y{i}"), "Y").unwrap();
    }
    for e in edges {
        let (src, dst) = match e.ty {
            2 => (format!("y{}", e.src % ny), format!("y{}", e.dst)),
            _ => (format!("x{}", e.src % nx), format!("y{}", e.dst)),
        };
        b.add_edge(&src, &dst, ["d", "u", "yy"][e.ty], e.weight).unwrap();
    }
    b.build()
}

fn edges_strategy(nx: usize, ny: usize) -> impl Strategy<Value = Vec<RawEdge>> {
    proptest::collection::vec(
        (0..nx.max(ny), 0..ny, 0..3usize, 0.0f64..4.0).prop_map(|(src, dst, ty, weight)| RawEdge {
            src,
            dst,
            ty,
            weight,
        }),
        0..80,
    )
}

fn graph_strategy() -> impl Strategy<Value = (usize, usize, Vec<RawEdge>)> {
    (1..12usize, 1..12usize).prop_flat_map(|(nx, ny)| (Just(nx), Just(ny), edges_strategy(nx, ny)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn degrees_match_brute_force((nx, ny, edges) in graph_strategy()) {
        let hin = build(nx, ny, &edges);
        let mut out: HashMap<(usize, String), f64> = HashMap::new();
        let mut inn: HashMap<(usize, String), f64> = HashMap::new();
        let mut pair: HashMap<(usize, String, String), f64> = HashMap::new();
        for e in &edges {
            let (s, d) = match e.ty {
                2 => (format!("y{}", e.src % ny), format!("y{}", e.dst)),
                _ => (format!("x{}", e.src % nx), format!("y{}", e.dst)),
            };
            let mut halves = vec![(s.clone(), d.clone())];
            if e.ty == 1 {
                halves.push((d, s));
            }
            for (a, c) in halves {
                *out.entry((e.ty, a.clone())).or_default() += e.weight;
                *inn.entry((e.ty, c.clone())).or_default() += e.weight;
                *pair.entry((e.ty, a, c)).or_default() += e.weight;
            }
        }
        for r in 0..3 {
            let rid = hin.edge_type_id(["d", "u", "yy"][r]).unwrap();
            let rel = hin.relation(rid);
            for u in 0..hin.node_count() {
                let id = aspem::hin::NodeId(u as u32);
                let name = hin.node_name(id).to_string();
                let (o, i) = hin.degrees(id, rid).unwrap();
                prop_assert!((o - out.get(&(r, name.clone())).copied().unwrap_or(0.0)).abs() < 1e-9);
                prop_assert!((i - inn.get(&(r, name.clone())).copied().unwrap_or(0.0)).abs() < 1e-9);
            }
            let mut seen = 0;
            for e in rel.edges() {
                let key = (r, hin.node_name(e.src).to_string(), hin.node_name(e.dst).to_string());
                prop_assert!((e.weight - pair[&key]).abs() < 1e-9);
                seen += 1;
            }
            // Parallel edges are merged: one stored edge per distinct pair.
            prop_assert_eq!(seen, pair.keys().filter(|k| k.0 == r).count());
            let total: f64 = pair.iter().filter(|(k, _)| k.0 == r).map(|(_, w)| w).sum();
            prop_assert!((rel.total_weight() - total).abs() < 1e-9);
            let ids = (0..hin.node_count()).map(|u| aspem::hin::NodeId(u as u32));
            let (so, si) = ids.fold((0.0, 0.0), |(o, i), u| (o + rel.out_degree(u), i + rel.in_degree(u)));
            prop_assert!((so - total).abs() < 1e-9 && (si - total).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn serialize_then_ingest_is_identity((nx, ny, edges) in graph_strategy()) {
        let hin = build(nx, ny, &edges);
        let dir = tempfile::tempdir().unwrap();
        let (n, e) = (dir.path().join("nodes.tsv"), dir.path().join("edges.tsv"));
        write_nodes(&hin, &n).unwrap();
        write_edges(&hin, &e).unwrap();
        let back = ingest(&n, &e).unwrap();
        prop_assert_eq!(back.node_count(), hin.node_count());
        for u in 0..hin.node_count() {
            let id = aspem::hin::NodeId(u as u32);
            prop_assert_eq!(back.node_name(id), hin.node_name(id));
            prop_assert_eq!(back.node_type_name(back.node_type(id)), hin.node_type_name(hin.node_type(id)));
        }
        prop_assert_eq!(back.edge_types(), hin.edge_types());
        for def in hin.edge_types() {
            prop_assert_eq!(back.relation(def.id), hin.relation(def.id));
        }
    }
}

#[test]
fn alias_frequencies_pass_chi_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let draws = 1_000_000;
    for case in 0..50 {
        let n = rng.gen_range(2..60);
        let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..10.0)).collect();
        if case % 5 == 0 {
            weights[0] = 0.0;
        }
        let table = AliasTable::new(&weights).unwrap();
        let mut counts = vec![0u64; n];
        for _ in 0..draws {
            counts[table.sample(&mut rng)] += 1;
        }
        let total: f64 = weights.iter().sum();
        let mut chi2 = 0.0;
        let mut cells = 0;
        for (c, w) in counts.iter().zip(&weights) {
            if *w == 0.0 {
                assert_eq!(*c, 0, "case {case}: zero-weight slot drawn");
                continue;
            }
            let expected = draws as f64 * w / total;
            chi2 += (*c as f64 - expected).powi(2) / expected;
            cells += 1;
        }
        let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(1.0 - 0.001);
        assert!(chi2 < critical, "case {case}: chi-square {chi2} >= {critical}");
    }
}
