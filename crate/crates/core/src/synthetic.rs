//! Planted two-aspect networks for controlled experiments.
//!
//! Authors (`A`) write papers (`P`); every paper carries attributes of two
//! kinds, `X` and `Y`. Both attribute vocabularies are partitioned into
//! clusters and every author has one home cluster in each, drawn
//! independently, together with a few favourite attributes inside each home
//! cluster. A paper takes its attributes from its lead author's favourites
//! and home clusters. Two papers alike in `X` are therefore typically unlike
//! in `Y`, so the `X`-`P`-`Y` sub-aspect is strongly incompatible while
//! `A`-`P`-`X` and `A`-`P`-`Y` are each consistent.
//!
//! Held-out test papers are generated the same way but kept out of the
//! graph; they become author-identification queries over the attributes.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{sample_candidates, write_instances, LinkPredInstance};
use crate::hin::{write_edges, write_nodes, Hin, HinBuilder};
use crate::pipeline::graph_files;

pub const WRITE: &str = "write";
pub const HAS_X: &str = "has_x";
pub const HAS_Y: &str = "has_y";

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub authors: usize,
    pub papers: usize,
    pub x_nodes: usize,
    pub y_nodes: usize,
    pub x_clusters: usize,
    pub y_clusters: usize,
    /// Favourite attributes per author and kind.
    pub favourites: usize,
    pub authors_per_paper: usize,
    pub x_per_paper: usize,
    pub y_per_paper: usize,
    /// Probability an attribute comes from the favourites rather than the home cluster.
    pub favourite_rate: f64,
    /// Probability an attribute is uniform over the whole vocabulary.
    pub noise: f64,
    /// Probability a paper is coherent in only one attribute kind, the other kind being uniform.
    pub single_facet: f64,
    pub train_queries: usize,
    pub test_queries: usize,
    pub candidates: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            authors: 300,
            papers: 3000,
            x_nodes: 120,
            y_nodes: 120,
            x_clusters: 6,
            y_clusters: 6,
            favourites: 4,
            authors_per_paper: 2,
            x_per_paper: 4,
            y_per_paper: 4,
            favourite_rate: 0.5,
            noise: 0.1,
            single_facet: 0.0,
            train_queries: 300,
            test_queries: 300,
            candidates: 100,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedHin {
    pub hin: Hin,
    /// Queries over papers inside the graph, for fitting the link predictor.
    pub train: Vec<LinkPredInstance>,
    /// Queries over held-out papers.
    pub test: Vec<LinkPredInstance>,
}

pub const TRAIN_INSTANCES: &str = "train_instances.tsv";
pub const TRAIN_ATTRIBUTES: &str = "train_attributes.tsv";
pub const TEST_INSTANCES: &str = "test_instances.tsv";
pub const TEST_ATTRIBUTES: &str = "test_attributes.tsv";

impl PlantedHin {
    /// Writes the graph files plus train and test query files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (nodes, edges) = graph_files(dir);
        write_nodes(&self.hin, &nodes)?;
        write_edges(&self.hin, &edges)?;
        write_instances(&self.train, &dir.join(TRAIN_INSTANCES), &dir.join(TRAIN_ATTRIBUTES))?;
        write_instances(&self.test, &dir.join(TEST_INSTANCES), &dir.join(TEST_ATTRIBUTES))
    }
}

struct Author {
    x_home: usize,
    y_home: usize,
    x_fav: Vec<usize>,
    y_fav: Vec<usize>,
}

struct Paper {
    authors: Vec<usize>,
    x: Vec<usize>,
    y: Vec<usize>,
}

fn cluster_range(nodes: usize, clusters: usize, c: usize) -> std::ops::Range<usize> {
    (c * nodes / clusters)..((c + 1) * nodes / clusters)
}

impl PlantedConfig {
    fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::Config(m.into()));
        if self.authors == 0 || self.papers == 0 {
            return err("need at least one author and one paper");
        }
        if self.x_clusters == 0 || self.y_clusters == 0 {
            return err("need at least one cluster per attribute kind");
        }
        if self.x_nodes < self.x_clusters * self.favourites.max(1)
            || self.y_nodes < self.y_clusters * self.favourites.max(1)
        {
            return err("attribute clusters are smaller than the favourite count");
        }
        if self.authors_per_paper == 0 || self.x_per_paper == 0 || self.y_per_paper == 0 {
            return err("papers need authors and attributes");
        }
        if !(0.0..=1.0).contains(&self.favourite_rate)
            || !(0.0..=1.0).contains(&self.noise)
            || !(0.0..=1.0).contains(&self.single_facet)
        {
            return err("rates must lie in [0, 1]");
        }
        if self.candidates > self.authors {
            return err("more candidates than authors");
        }
        if self.train_queries > self.papers {
            return err("more training queries than papers");
        }
        Ok(())
    }

    fn attribute(&self, rng: &mut ChaCha8Rng, nodes: usize, clusters: usize, home: usize, fav: &[usize]) -> usize {
        let u: f64 = rng.gen();
        if u < self.noise {
            rng.gen_range(0..nodes)
        } else if u < self.noise + (1.0 - self.noise) * self.favourite_rate {
            *fav.choose(rng).expect("favourites are nonempty")
        } else {
            rng.gen_range(cluster_range(nodes, clusters, home))
        }
    }

    fn paper(&self, rng: &mut ChaCha8Rng, authors: &[Author]) -> Paper {
        let lead = rng.gen_range(0..authors.len());
        let a = &authors[lead];
        let mut ids = vec![lead];
        // Co-authors share both home clusters with the lead when possible.
        let peers: Vec<usize> = (0..authors.len())
            .filter(|&i| i != lead && authors[i].x_home == a.x_home && authors[i].y_home == a.y_home)
            .collect();
        for &p in peers.choose_multiple(rng, self.authors_per_paper - 1) {
            ids.push(p);
        }
        let (mut x_coherent, mut y_coherent) = (true, true);
        if rng.gen::<f64>() < self.single_facet {
            if rng.gen::<bool>() {
                y_coherent = false;
            } else {
                x_coherent = false;
            }
        }
        let x = (0..self.x_per_paper)
            .map(|_| match x_coherent {
                true => self.attribute(rng, self.x_nodes, self.x_clusters, a.x_home, &a.x_fav),
                false => rng.gen_range(0..self.x_nodes),
            })
            .collect();
        let y = (0..self.y_per_paper)
            .map(|_| match y_coherent {
                true => self.attribute(rng, self.y_nodes, self.y_clusters, a.y_home, &a.y_fav),
                false => rng.gen_range(0..self.y_nodes),
            })
            .collect();
        Paper { authors: ids, x, y }
    }

    pub fn generate(&self) -> Result<PlantedHin> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let authors: Vec<Author> = (0..self.authors)
            .map(|_| {
                let x_home = rng.gen_range(0..self.x_clusters);
                let y_home = rng.gen_range(0..self.y_clusters);
                let xr: Vec<usize> = cluster_range(self.x_nodes, self.x_clusters, x_home).collect();
                let yr: Vec<usize> = cluster_range(self.y_nodes, self.y_clusters, y_home).collect();
                Author {
                    x_home,
                    y_home,
                    x_fav: xr.choose_multiple(&mut rng, self.favourites.max(1)).copied().collect(),
                    y_fav: yr.choose_multiple(&mut rng, self.favourites.max(1)).copied().collect(),
                }
            })
            .collect();
        let papers: Vec<Paper> = (0..self.papers).map(|_| self.paper(&mut rng, &authors)).collect();
        let held_out: Vec<Paper> = (0..self.test_queries).map(|_| self.paper(&mut rng, &authors)).collect();

        let mut b = HinBuilder::new();
        b.edge_type(WRITE, "A", "P", false)?;
        b.edge_type(HAS_X, "P", "X", false)?;
        b.edge_type(HAS_Y, "P", "Y", false)?;
        let author_ids: Vec<String> = (0..self.authors).map(|i| format!("a{i}")).collect();
        for a in &author_ids {
            b.add_node(a, "A")?;
        }
        for i in 0..self.x_nodes {
            b.add_node(&format!("x{i}"), "X")?;
        }
        for i in 0..self.y_nodes {
            b.add_node(&format!("y{i}"), "Y")?;
        }
        for (i, p) in papers.iter().enumerate() {
            let pid = format!("p{i}");
            b.add_node(&pid, "P")?;
            for &a in &p.authors {
                b.add_edge(&author_ids[a], &pid, WRITE, 1.0)?;
            }
            for &x in &p.x {
                b.add_edge(&pid, &format!("x{x}"), HAS_X, 1.0)?;
            }
            for &y in &p.y {
                b.add_edge(&pid, &format!("y{y}"), HAS_Y, 1.0)?;
            }
        }
        let hin = b.build();

        let query = |rng: &mut ChaCha8Rng, id: String, p: &Paper| -> Result<LinkPredInstance> {
            let truths: Vec<String> = p.authors.iter().map(|&a| author_ids[a].clone()).collect();
            let exclude: HashSet<String> = truths.iter().cloned().collect();
            let candidates = sample_candidates(&truths, &exclude, &author_ids, self.candidates, rng)?;
            let mut attrs = BTreeMap::new();
            attrs.insert(HAS_X.to_string(), p.x.iter().map(|x| format!("x{x}")).collect());
            attrs.insert(HAS_Y.to_string(), p.y.iter().map(|y| format!("y{y}")).collect());
            Ok(LinkPredInstance {
                query: id,
                candidates,
                attrs,
            })
        };
        let mut train_ids: Vec<usize> = (0..self.papers).collect();
        train_ids.shuffle(&mut rng);
        train_ids.truncate(self.train_queries);
        train_ids.sort_unstable();
        let train = train_ids
            .iter()
            .map(|&i| query(&mut rng, format!("p{i}"), &papers[i]))
            .collect::<Result<_>>()?;
        let test = held_out
            .iter()
            .enumerate()
            .map(|(i, p)| query(&mut rng, format!("q{i}"), p))
            .collect::<Result<_>>()?;
        Ok(PlantedHin { hin, train, test })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PlantedConfig {
        PlantedConfig {
            authors: 40,
            papers: 200,
            x_nodes: 20,
            y_nodes: 20,
            x_clusters: 2,
            y_clusters: 2,
            favourites: 2,
            authors_per_paper: 1,
            train_queries: 20,
            test_queries: 10,
            candidates: 20,
            ..PlantedConfig::default()
        }
    }

    #[test]
    fn shapes_and_query_disjointness() {
        let p = small().generate().unwrap();
        assert_eq!(p.hin.nodes_of_type(p.hin.node_type_id("P").unwrap()).len(), 200);
        assert_eq!(p.train.len(), 20);
        assert_eq!(p.test.len(), 10);
        for q in p.test.iter().chain(&p.train) {
            assert_eq!(q.candidates.len(), 20);
            assert_eq!(q.candidates.iter().filter(|c| c.1).count(), 1);
            assert_eq!(q.attrs[HAS_X].len(), 4);
        }
        assert!(p.test.iter().all(|q| p.hin.node_id(&q.query).is_none()));
    }

    #[test]
    fn generation_is_seeded() {
        let a = small().generate().unwrap();
        let b = small().generate().unwrap();
        assert_eq!(a.hin, b.hin);
        assert_eq!(a.test, b.test);
        let c = PlantedConfig { seed: 2, ..small() }.generate().unwrap();
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn written_files_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let p = small().generate().unwrap();
        p.write(dir.path()).unwrap();
        let hin = crate::pipeline::load_graph(dir.path()).unwrap();
        assert_eq!(hin.node_count(), p.hin.node_count());
        let test =
            crate::eval::read_instances(&dir.path().join(TEST_INSTANCES), &dir.path().join(TEST_ATTRIBUTES)).unwrap();
        assert_eq!(test, p.test);
    }

    #[test]
    fn rejects_impossible_configs() {
        assert!(PlantedConfig {
            candidates: 50,
            ..small()
        }
        .generate()
        .is_err());
        assert!(PlantedConfig {
            x_clusters: 0,
            ..small()
        }
        .generate()
        .is_err());
        assert!(PlantedConfig { noise: 1.5, ..small() }.generate().is_err());
    }
}
