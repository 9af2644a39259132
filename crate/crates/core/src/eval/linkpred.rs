//! Link prediction: rank candidates for a query whose own embedding is
//! unknown, using edge embeddings between each candidate and the query's
//! attributes.
//!
//! Instance file rows are `<query>\t<candidate>\t<0|1>`; attribute file rows
//! are `<query>\t<edge_type>\t<attribute>`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::logreg::{train_logreg, LogRegConfig, LogisticModel};
use super::metrics::{precision_at_k, recall_at_k, RankedResult};
use crate::compose::AspectBundle;
use crate::error::{Error, Result};
use crate::hin::{NodeTypeId, SchemaGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct LinkPredInstance {
    pub query: String,
    pub candidates: Vec<(String, bool)>,
    /// Attribute ids keyed by edge type name.
    pub attrs: BTreeMap<String, Vec<String>>,
}

/// One feature block: the averaged edge embeddings between the candidate
/// and the query's attributes reached through `edge_type`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBlock {
    pub edge_type: String,
    pub attr_type: NodeTypeId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSpec {
    pub candidate_type: NodeTypeId,
    pub blocks: Vec<FeatureBlock>,
}

impl FeatureSpec {
    /// Blocks for `edge_types` in the given order; the attribute type of
    /// each is its endpoint opposite `query_type`.
    pub fn from_schema(
        schema: &SchemaGraph,
        query_type: &str,
        candidate_type: &str,
        edge_types: &[&str],
    ) -> Result<Self> {
        let qt = schema
            .node_type_id(query_type)
            .ok_or_else(|| Error::UnknownNodeType(query_type.into()))?;
        let candidate_type = schema
            .node_type_id(candidate_type)
            .ok_or_else(|| Error::UnknownNodeType(candidate_type.to_string()))?;
        let mut blocks = Vec::with_capacity(edge_types.len());
        for &name in edge_types {
            let r = schema
                .edge_type_id(name)
                .ok_or_else(|| Error::UnknownEdgeType(name.into()))?;
            let def = schema.edge_type(r).expect("id from schema");
            let attr_type = def
                .opposite(qt)
                .ok_or_else(|| Error::Eval(format!("edge type `{name}` does not touch query type `{query_type}`")))?;
            blocks.push(FeatureBlock {
                edge_type: name.to_string(),
                attr_type,
            });
        }
        if blocks.is_empty() {
            return Err(Error::Eval("no attribute edge types".into()));
        }
        Ok(FeatureSpec { candidate_type, blocks })
    }

    pub fn dim(&self, bundle: &AspectBundle) -> usize {
        self.blocks
            .iter()
            .map(|b| bundle.edge_dim(self.candidate_type, b.attr_type))
            .sum()
    }
}

/// Per-block averages of `edge_embedding(candidate, attr)`, concatenated.
/// A block with no attributes is all zeros.
pub fn pair_features(
    bundle: &AspectBundle,
    spec: &FeatureSpec,
    candidate: &str,
    attrs: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(spec.dim(bundle));
    for block in &spec.blocks {
        let len = bundle.edge_dim(spec.candidate_type, block.attr_type);
        let start = out.len();
        out.resize(start + len, 0.0);
        let list = attrs.get(&block.edge_type).map(Vec::as_slice).unwrap_or(&[]);
        if list.is_empty() {
            log::warn!(
                "no `{}` attributes for candidate `{candidate}`; using a zero block",
                block.edge_type
            );
            continue;
        }
        for a in list {
            let e = bundle.edge_embedding(candidate, a)?;
            if e.len() != len {
                return Err(Error::Eval(format!(
                    "edge embedding of `{candidate}`-`{a}` has length {}, expected {len}",
                    e.len()
                )));
            }
            for (o, x) in out[start..].iter_mut().zip(&e) {
                *o += x;
            }
        }
        let n = list.len() as f64;
        for o in &mut out[start..] {
            *o /= n;
        }
    }
    Ok(out)
}

pub fn read_instances(instance_file: &Path, attr_file: &Path) -> Result<Vec<LinkPredInstance>> {
    let mut order: Vec<String> = Vec::new();
    let mut by_query: HashMap<String, LinkPredInstance> = HashMap::new();
    let text = fs::read_to_string(instance_file).map_err(|e| Error::io(instance_file, e))?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::parse(
                instance_file,
                i + 1,
                line,
                "expected `query<TAB>candidate<TAB>label`",
            ));
        }
        let label = match f[2].trim() {
            "1" => true,
            "0" => false,
            other => return Err(Error::parse(instance_file, i + 1, other, "label must be 0 or 1")),
        };
        let inst = by_query.entry(f[0].to_string()).or_insert_with(|| {
            order.push(f[0].to_string());
            LinkPredInstance {
                query: f[0].to_string(),
                candidates: Vec::new(),
                attrs: BTreeMap::new(),
            }
        });
        inst.candidates.push((f[1].to_string(), label));
    }
    let text = fs::read_to_string(attr_file).map_err(|e| Error::io(attr_file, e))?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::parse(
                attr_file,
                i + 1,
                line,
                "expected `query<TAB>edge_type<TAB>attribute`",
            ));
        }
        let inst = by_query
            .get_mut(f[0])
            .ok_or_else(|| Error::parse(attr_file, i + 1, f[0], "query has no candidates"))?;
        inst.attrs
            .entry(f[1].to_string())
            .or_default()
            .push(f[2].trim().to_string());
    }
    Ok(order
        .into_iter()
        .map(|q| by_query.remove(&q).expect("present"))
        .collect())
}

pub fn write_instances(instances: &[LinkPredInstance], instance_file: &Path, attr_file: &Path) -> Result<()> {
    let mut inst = String::new();
    let mut attrs = String::new();
    for q in instances {
        for (c, l) in &q.candidates {
            inst.push_str(&format!("{}\t{}\t{}\n", q.query, c, u8::from(*l)));
        }
        for (r, list) in &q.attrs {
            for a in list {
                attrs.push_str(&format!("{}\t{}\t{}\n", q.query, r, a));
            }
        }
    }
    fs::write(instance_file, inst).map_err(|e| Error::io(instance_file, e))?;
    fs::write(attr_file, attrs).map_err(|e| Error::io(attr_file, e))
}

/// Disjoint train/test partition of queries.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Vec<LinkPredInstance>,
    pub test: Vec<LinkPredInstance>,
}

impl Split {
    /// Shuffles queries with `seed` and puts `test_fraction` of them in the test part.
    pub fn random(instances: Vec<LinkPredInstance>, test_fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&test_fraction) {
            return Err(Error::Config(format!("test fraction {test_fraction} outside [0, 1]")));
        }
        let mut instances = instances;
        instances.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = (instances.len() as f64 * test_fraction).round() as usize;
        let train = instances.split_off(n_test);
        Split::new(train, instances)
    }

    pub fn new(train: Vec<LinkPredInstance>, test: Vec<LinkPredInstance>) -> Result<Self> {
        let train_q: HashSet<&str> = train.iter().map(|i| i.query.as_str()).collect();
        if let Some(q) = test.iter().find(|i| train_q.contains(i.query.as_str())) {
            return Err(Error::Eval(format!("query `{}` is in both train and test", q.query)));
        }
        Ok(Split { train, test })
    }
}

/// `size - |true|` candidates drawn uniformly without replacement from `pool`
/// minus `exclude`, plus every true candidate.
pub fn sample_candidates<R: Rng + ?Sized>(
    truths: &[String],
    exclude: &HashSet<String>,
    pool: &[String],
    size: usize,
    rng: &mut R,
) -> Result<Vec<(String, bool)>> {
    if truths.is_empty() {
        return Err(Error::Eval("query has no true candidate".into()));
    }
    let need = size.saturating_sub(truths.len());
    let eligible: Vec<&String> = pool.iter().filter(|c| !exclude.contains(*c)).collect();
    if eligible.len() < need {
        return Err(Error::Eval(format!(
            "need {need} negative candidates, only {} eligible",
            eligible.len()
        )));
    }
    let mut out: Vec<(String, bool)> = truths.iter().map(|t| (t.clone(), true)).collect();
    out.extend(eligible.choose_multiple(rng, need).map(|c| ((*c).clone(), false)));
    Ok(out)
}

pub const DEFAULT_KS: [usize; 3] = [1, 3, 10];

/// Mean P@k and R@k over queries.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkPredMetrics {
    pub ks: Vec<usize>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub queries: usize,
}

impl LinkPredMetrics {
    pub fn from_rankings(rankings: &[RankedResult], ks: &[usize]) -> Result<Self> {
        if rankings.is_empty() {
            return Err(Error::Eval("no queries to evaluate".into()));
        }
        let mut precision = vec![0.0; ks.len()];
        let mut recall = vec![0.0; ks.len()];
        for r in rankings {
            for (i, &k) in ks.iter().enumerate() {
                precision[i] += precision_at_k(r, k)?;
                recall[i] += recall_at_k(r, k)?;
            }
        }
        let n = rankings.len() as f64;
        precision.iter_mut().chain(recall.iter_mut()).for_each(|x| *x /= n);
        Ok(LinkPredMetrics {
            ks: ks.to_vec(),
            precision,
            recall,
            queries: rankings.len(),
        })
    }

    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.precision[i])
    }

    pub fn recall_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.recall[i])
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("metric\tk\tvalue\n");
        for (i, k) in self.ks.iter().enumerate() {
            s.push_str(&format!("precision\t{k}\t{}\n", self.precision[i]));
        }
        for (i, k) in self.ks.iter().enumerate() {
            s.push_str(&format!("recall\t{k}\t{}\n", self.recall[i]));
        }
        s
    }
}

impl fmt::Display for LinkPredMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>8}", "")?;
        for k in &self.ks {
            write!(f, " {:>8}", format!("@{k}"))?;
        }
        writeln!(f)?;
        for (name, vals) in [("P", &self.precision), ("R", &self.recall)] {
            write!(f, "{name:>8}")?;
            for v in vals {
                write!(f, " {v:>8.4}")?;
            }
            writeln!(f)?;
        }
        write!(f, "({} queries)", self.queries)
    }
}

/// Ranks each query's candidates by `score(query, candidate)`.
pub fn evaluate_with_scorer(
    instances: &[LinkPredInstance],
    ks: &[usize],
    mut score: impl FnMut(&LinkPredInstance, &str) -> Result<f64>,
) -> Result<LinkPredMetrics> {
    let rankings = instances
        .iter()
        .map(|q| {
            let scored = q
                .candidates
                .iter()
                .map(|(c, l)| Ok((c.clone(), score(q, c)?, *l)))
                .collect::<Result<Vec<_>>>()?;
            RankedResult::new(scored)
        })
        .collect::<Result<Vec<_>>>()?;
    LinkPredMetrics::from_rankings(&rankings, ks)
}

/// Trains logistic regression on train-query pair features and evaluates the test queries.
pub fn linkpred_harness(
    bundle: &AspectBundle,
    spec: &FeatureSpec,
    split: &Split,
    ks: &[usize],
    cfg: &LogRegConfig,
) -> Result<(LinkPredMetrics, LogisticModel)> {
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::Eval("train and test splits must both be nonempty".into()));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for q in &split.train {
        for (c, l) in &q.candidates {
            x.push(pair_features(bundle, spec, c, &q.attrs)?);
            y.push(*l);
        }
    }
    let model = train_logreg(&x, &y, cfg)?;
    let metrics = evaluate_with_scorer(&split.test, ks, |q, c| {
        Ok(model.margin(&pair_features(bundle, spec, c, &q.attrs)?))
    })?;
    Ok((metrics, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspect::{test_schemas, Aspect};
    use crate::train::EmbeddingTable;

    fn bundle() -> AspectBundle {
        let schema = test_schemas::star("P", &["A", "V", "T"]);
        let pa = Aspect::parse(&schema, "PA").unwrap();
        let pav = Aspect::parse(&schema, "PAV").unwrap();
        let t1 = EmbeddingTable::from_parts("PA", 2, vec!["a".into(), "p".into()], vec![1.0, 2.0, 0.0, 0.0]).unwrap();
        let t2 = EmbeddingTable::from_parts(
            "PAV",
            1,
            vec!["a".into(), "v1".into(), "v2".into(), "p".into()],
            vec![2.0, 1.0, 3.0, 0.0],
        )
        .unwrap();
        AspectBundle::new(schema, vec![(pa, t1), (pav, t2)]).unwrap()
    }

    #[test]
    fn features_average_per_block_and_zero_fill() {
        let b = bundle();
        let spec = FeatureSpec::from_schema(b.schema(), "P", "A", &["e1", "e2"]).unwrap();
        let v = b.schema().node_type_id("V").unwrap();
        assert_eq!(spec.blocks[0].attr_type, v);
        assert_eq!(spec.dim(&b), 1);
        let mut attrs = BTreeMap::new();
        attrs.insert("e1".to_string(), vec!["v1".to_string(), "v2".to_string()]);
        let f = pair_features(&b, &spec, "a", &attrs).unwrap();
        assert_eq!(f, vec![4.0]);
        attrs.clear();
        assert_eq!(pair_features(&b, &spec, "a", &attrs).unwrap(), vec![0.0]);
    }

    #[test]
    fn attribute_sharing_no_aspect_is_an_error() {
        let b = bundle();
        let spec = FeatureSpec::from_schema(b.schema(), "P", "A", &["e1"]).unwrap();
        let mut attrs = BTreeMap::new();
        attrs.insert("e1".to_string(), vec!["unknown".to_string()]);
        assert!(pair_features(&b, &spec, "a", &attrs).is_err());
        assert!(FeatureSpec::from_schema(b.schema(), "A", "A", &["e1"]).is_err());
    }

    #[test]
    fn instance_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut attrs = BTreeMap::new();
        attrs.insert("e1".to_string(), vec!["v1".to_string()]);
        let inst = vec![
            LinkPredInstance {
                query: "q1".into(),
                candidates: vec![("a".into(), true), ("b".into(), false)],
                attrs: attrs.clone(),
            },
            LinkPredInstance {
                query: "q0".into(),
                candidates: vec![("b".into(), true)],
                attrs: BTreeMap::new(),
            },
        ];
        let (i, a) = (dir.path().join("inst.tsv"), dir.path().join("attr.tsv"));
        write_instances(&inst, &i, &a).unwrap();
        assert_eq!(read_instances(&i, &a).unwrap(), inst);
        fs::write(&i, "q\ta\t2\n").unwrap();
        assert!(matches!(read_instances(&i, &a), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn splits_are_disjoint() {
        let inst: Vec<_> = (0..20)
            .map(|i| LinkPredInstance {
                query: format!("q{i}"),
                candidates: vec![("a".into(), true)],
                attrs: BTreeMap::new(),
            })
            .collect();
        let s = Split::random(inst.clone(), 0.25, 3).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (15, 5));
        let train: HashSet<_> = s.train.iter().map(|q| &q.query).collect();
        assert!(s.test.iter().all(|q| !train.contains(&q.query)));
        assert!(Split::new(inst[..2].to_vec(), inst[1..3].to_vec()).is_err());
    }

    #[test]
    fn candidate_sampling_excludes_linked_nodes() {
        let pool: Vec<String> = (0..50).map(|i| format!("n{i}")).collect();
        let truths = vec!["n3".to_string()];
        let exclude: HashSet<String> = ["n3", "n4"].iter().map(|s| s.to_string()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = sample_candidates(&truths, &exclude, &pool, 20, &mut rng).unwrap();
        assert_eq!(c.len(), 20);
        assert_eq!(c.iter().filter(|x| x.1).count(), 1);
        assert!(c.iter().all(|(id, l)| *l || !exclude.contains(id)));
        let unique: HashSet<_> = c.iter().map(|x| &x.0).collect();
        assert_eq!(unique.len(), 20);
        assert!(sample_candidates(&truths, &exclude, &pool, 100, &mut rng).is_err());
    }

    #[test]
    fn metrics_table_and_tsv() {
        let r = RankedResult::new(vec![("a".to_string(), 1.0, true), ("b".to_string(), 0.0, false)]).unwrap();
        let m = LinkPredMetrics::from_rankings(&[r], &[1, 2]).unwrap();
        assert_eq!(m.precision_at(2), Some(0.5));
        assert!(m.to_tsv().contains("recall\t1\t1\n"));
        assert!(m.to_string().contains("@2"));
        assert!(LinkPredMetrics::from_rankings(&[], &[1]).is_err());
    }
}
