//! End-to-end runs: ingest → score → select → train → compose → evaluate.
//!
//! Configuration is a flat `key = value` file; `#` starts a comment. Every
//! key can also be set programmatically with [`PipelineConfig::set`], which
//! is how command-line overrides are applied.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::aspect::{choose_threshold, read_scores, score_schema, select_aspects, write_scores, Aspect, ScoreTable};
use crate::compose::{embedding_file, AspectBundle};
use crate::error::{Error, Result};
use crate::eval::{
    classify_harness, linkpred_harness, read_instances, read_labels, FeatureSpec, LogRegConfig, Split, DEFAULT_KS,
};
use crate::hin::{ingest, Hin, NodeTypeId, SchemaGraph};
use crate::train::{train_aspect, TrainConfig};

pub const NODE_FILE: &str = "nodes.tsv";
pub const EDGE_FILE: &str = "edges.tsv";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Node and edge files of a graph directory.
pub fn graph_files(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join(NODE_FILE), dir.join(EDGE_FILE))
}

pub fn load_graph(dir: &Path) -> Result<Hin> {
    let (nodes, edges) = graph_files(dir);
    ingest(&nodes, &edges)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Theta {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkPredTask {
    pub instances: PathBuf,
    pub attributes: PathBuf,
    pub query_type: String,
    pub candidate_type: String,
    pub edge_types: Vec<String>,
    pub test_fraction: f64,
    /// Fixed held-out queries; when set, `instances` are all used for training.
    pub test_instances: Option<(PathBuf, PathBuf)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyTask {
    pub labels: PathBuf,
    pub test_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub graph: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub out: PathBuf,
    pub anchors: Vec<String>,
    pub theta: Theta,
    pub train: TrainConfig,
    pub linkpred: Option<LinkPredTask>,
    pub classify: Option<ClassifyTask>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            graph: None,
            scores: None,
            out: PathBuf::from("aspem-out"),
            anchors: Vec::new(),
            theta: Theta::Auto,
            train: TrainConfig::default(),
            linkpred: None,
            classify: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{value}`")))
}

/// Integer accepting scientific notation such as `1e6`.
fn parse_count(key: &str, value: &str) -> Result<u64> {
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = parse_num(key, value)?;
    if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(Error::Config(format!(
            "`{key}` expects a nonnegative integer, got `{value}`"
        )))
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let mut cfg = PipelineConfig::default();
        let mut raw = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, line, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if raw.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::parse(path, i + 1, k, "duplicate key"));
            }
            cfg.set(k, v).map_err(|e| Error::parse(path, i + 1, k, e.to_string()))?;
        }
        cfg.resolve_paths(dir);
        Ok(cfg)
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(g) = &mut self.graph {
            fix(g);
        }
        if let Some(s) = &mut self.scores {
            fix(s);
        }
        fix(&mut self.out);
        if let Some(t) = &mut self.linkpred {
            fix(&mut t.instances);
            fix(&mut t.attributes);
            if let Some((i, a)) = &mut t.test_instances {
                fix(i);
                fix(a);
            }
        }
        if let Some(t) = &mut self.classify {
            fix(&mut t.labels);
        }
    }

    fn linkpred_mut(&mut self) -> &mut LinkPredTask {
        self.linkpred.get_or_insert_with(|| LinkPredTask {
            instances: PathBuf::new(),
            attributes: PathBuf::new(),
            query_type: String::new(),
            candidate_type: String::new(),
            edge_types: Vec::new(),
            test_fraction: 0.5,
            test_instances: None,
        })
    }

    fn classify_mut(&mut self) -> &mut ClassifyTask {
        self.classify.get_or_insert_with(|| ClassifyTask {
            labels: PathBuf::new(),
            test_fraction: 0.2,
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "graph" => self.graph = Some(value.into()),
            "scores" => self.scores = Some(value.into()),
            "out" => self.out = value.into(),
            "anchor" => self.anchors = list(value),
            "theta" => {
                self.theta = if value == "auto" {
                    Theta::Auto
                } else {
                    Theta::Fixed(parse_num(key, value)?)
                }
            }
            "dim" => self.train.dim = parse_count(key, value)? as usize,
            "negatives" => self.train.negatives = parse_count(key, value)? as usize,
            "samples" => self.train.samples = parse_count(key, value)?,
            "lr" => self.train.initial_lr = parse_num(key, value)?,
            "workers" => self.train.workers = parse_count(key, value)? as usize,
            "seed" => self.train.seed = parse_count(key, value)?,
            "noise_power" => self.train.noise_power = parse_num(key, value)?,
            "linkpred.instances" => self.linkpred_mut().instances = value.into(),
            "linkpred.attributes" => self.linkpred_mut().attributes = value.into(),
            "linkpred.query_type" => self.linkpred_mut().query_type = value.into(),
            "linkpred.candidate_type" => self.linkpred_mut().candidate_type = value.into(),
            "linkpred.edge_types" => self.linkpred_mut().edge_types = list(value),
            "linkpred.test_fraction" => self.linkpred_mut().test_fraction = parse_num(key, value)?,
            "linkpred.test_instances" => {
                let t = self.linkpred_mut();
                let attrs = t.test_instances.take().map(|(_, a)| a).unwrap_or_default();
                t.test_instances = Some((value.into(), attrs));
            }
            "linkpred.test_attributes" => {
                let t = self.linkpred_mut();
                let inst = t.test_instances.take().map(|(i, _)| i).unwrap_or_default();
                t.test_instances = Some((inst, value.into()));
            }
            "classify.labels" => self.classify_mut().labels = value.into(),
            "classify.test_fraction" => self.classify_mut().test_fraction = parse_num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let graph = self
            .graph
            .as_ref()
            .ok_or_else(|| Error::Config("`graph` is required".into()))?;
        let (nodes, edges) = graph_files(graph);
        for p in [&nodes, &edges] {
            if !p.is_file() {
                return Err(Error::Config(format!("graph file {} does not exist", p.display())));
            }
        }
        if let Some(s) = &self.scores {
            if !s.is_file() {
                return Err(Error::Config(format!("score file {} does not exist", s.display())));
            }
        }
        if self.anchors.is_empty() {
            return Err(Error::Config("`anchor` is required".into()));
        }
        match self.theta {
            Theta::Fixed(t) if !(t >= 0.0) => {
                return Err(Error::Config(format!("theta must be nonnegative, got {t}")));
            }
            Theta::Auto if self.anchors.len() != 1 => {
                return Err(Error::Config("automatic theta needs exactly one anchor".into()));
            }
            _ => {}
        }
        self.train.validate()?;
        if let Some(t) = &self.linkpred {
            let fixed = t.test_instances.iter().flat_map(|(i, a)| [i, a]);
            for p in [&t.instances, &t.attributes].into_iter().chain(fixed) {
                if !p.is_file() {
                    return Err(Error::Config(format!(
                        "link prediction file {} does not exist",
                        p.display()
                    )));
                }
            }
            if t.query_type.is_empty() || t.candidate_type.is_empty() || t.edge_types.is_empty() {
                return Err(Error::Config(
                    "link prediction needs query_type, candidate_type and edge_types".into(),
                ));
            }
        }
        if let Some(t) = &self.classify {
            if !t.labels.is_file() {
                return Err(Error::Config(format!(
                    "label file {} does not exist",
                    t.labels.display()
                )));
            }
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; its hash identifies the run.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let _ = writeln!(s, "graph = {}", path(&self.graph));
        if self.scores.is_some() {
            let _ = writeln!(s, "scores = {}", path(&self.scores));
        }
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "anchor = {}", self.anchors.join(","));
        match self.theta {
            Theta::Auto => s.push_str("theta = auto\n"),
            Theta::Fixed(t) => {
                let _ = writeln!(s, "theta = {t}");
            }
        }
        let t = &self.train;
        let _ = writeln!(s, "dim = {}", t.dim);
        let _ = writeln!(s, "negatives = {}", t.negatives);
        let _ = writeln!(s, "samples = {}", t.samples);
        let _ = writeln!(s, "lr = {}", t.initial_lr);
        let _ = writeln!(s, "workers = {}", t.workers);
        let _ = writeln!(s, "seed = {}", t.seed);
        let _ = writeln!(s, "noise_power = {}", t.noise_power);
        if let Some(l) = &self.linkpred {
            let _ = writeln!(s, "linkpred.instances = {}", l.instances.display());
            let _ = writeln!(s, "linkpred.attributes = {}", l.attributes.display());
            let _ = writeln!(s, "linkpred.query_type = {}", l.query_type);
            let _ = writeln!(s, "linkpred.candidate_type = {}", l.candidate_type);
            let _ = writeln!(s, "linkpred.edge_types = {}", l.edge_types.join(","));
            let _ = writeln!(s, "linkpred.test_fraction = {}", l.test_fraction);
            if let Some((i, a)) = &l.test_instances {
                let _ = writeln!(s, "linkpred.test_instances = {}", i.display());
                let _ = writeln!(s, "linkpred.test_attributes = {}", a.display());
            }
        }
        if let Some(c) = &self.classify {
            let _ = writeln!(s, "classify.labels = {}", c.labels.display());
            let _ = writeln!(s, "classify.test_fraction = {}", c.test_fraction);
        }
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Scores from `path` if given, otherwise computed from the graph.
pub fn load_or_score(hin: &Hin, path: Option<&Path>) -> Result<(SchemaGraph, ScoreTable)> {
    match path {
        Some(p) => read_scores(p),
        None => {
            let schema = hin.schema();
            let scores = score_schema(hin, &schema)?;
            Ok((schema, scores))
        }
    }
}

pub fn anchor_ids(schema: &SchemaGraph, anchors: &[String]) -> Result<BTreeSet<NodeTypeId>> {
    anchors
        .iter()
        .map(|a| schema.node_type_id(a).ok_or_else(|| Error::UnknownNodeType(a.clone())))
        .collect()
}

/// Resolves the threshold and returns it with the selected aspects.
pub fn select_stage(
    schema: &SchemaGraph,
    scores: &ScoreTable,
    anchors: &[String],
    theta: Theta,
) -> Result<(f64, Vec<Aspect>)> {
    let ids = anchor_ids(schema, anchors)?;
    let theta = match theta {
        Theta::Fixed(t) => t,
        Theta::Auto => {
            let [anchor] = ids.iter().copied().collect::<Vec<_>>()[..] else {
                return Err(Error::Config("automatic theta needs exactly one anchor".into()));
            };
            choose_threshold(scores, schema, anchor)?
        }
    };
    Ok((theta, select_aspects(scores, schema, theta, &ids)?))
}

/// Re-expresses an aspect of one schema in another by edge type name.
pub fn remap_aspect(aspect: &Aspect, from: &SchemaGraph, to: &SchemaGraph) -> Result<Aspect> {
    let ids = aspect
        .edge_types()
        .iter()
        .map(|&r| {
            let name = &from.edge_type(r).expect("aspect belongs to schema").name;
            to.edge_type_id(name)
                .ok_or_else(|| Error::UnknownEdgeType(name.clone()))
        })
        .collect::<Result<BTreeSet<_>>>()?;
    Aspect::new(to, ids)
}

/// `<name>\t<edge,types>` per selected aspect.
pub fn write_aspects(path: &Path, schema: &SchemaGraph, aspects: &[Aspect]) -> Result<()> {
    let mut s = String::new();
    for a in aspects {
        let edges: Vec<&str> = a
            .edge_types()
            .iter()
            .map(|&r| schema.edge_type(r).expect("aspect belongs to schema").name.as_str())
            .collect();
        let _ = writeln!(s, "{}\t{}", a.name(), edges.join(","));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_aspects(path: &Path, schema: &SchemaGraph) -> Result<Vec<Aspect>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, edges) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, line, "expected `name<TAB>edge_types`"))?;
        let ids = list(edges)
            .iter()
            .map(|e| {
                schema
                    .edge_type_id(e)
                    .ok_or_else(|| Error::parse(path, i + 1, e.as_str(), "unknown edge type"))
            })
            .collect::<Result<BTreeSet<_>>>()?;
        let aspect = Aspect::new(schema, ids)?;
        if aspect.name() != name {
            return Err(Error::parse(
                path,
                i + 1,
                name,
                format!("edge types describe `{}`", aspect.name()),
            ));
        }
        out.push(aspect);
    }
    Ok(out)
}

/// Trains every aspect with the same configuration, in order.
pub fn train_bundle(hin: &Hin, aspects: &[Aspect], cfg: &TrainConfig) -> Result<AspectBundle> {
    let schema = hin.schema();
    let spaces = aspects
        .iter()
        .map(|a| {
            log::info!("training aspect {} ({} samples, d={})", a.name(), cfg.samples, cfg.dim);
            Ok((a.clone(), train_aspect(hin, a, cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    AspectBundle::new(schema, spaces)
}

/// Splits instances, fits the link predictor and returns the metrics.
pub fn run_linkpred(bundle: &AspectBundle, task: &LinkPredTask, seed: u64) -> Result<crate::eval::LinkPredMetrics> {
    let instances = read_instances(&task.instances, &task.attributes)?;
    let edges: Vec<&str> = task.edge_types.iter().map(String::as_str).collect();
    let spec = FeatureSpec::from_schema(bundle.schema(), &task.query_type, &task.candidate_type, &edges)?;
    let split = match &task.test_instances {
        Some((i, a)) => Split::new(instances, read_instances(i, a)?)?,
        None => Split::random(instances, task.test_fraction, seed)?,
    };
    let lr = LogRegConfig {
        seed,
        ..LogRegConfig::default()
    };
    Ok(linkpred_harness(bundle, &spec, &split, &DEFAULT_KS, &lr)?.0)
}

pub fn run_classify(bundle: &AspectBundle, task: &ClassifyTask, seed: u64) -> Result<crate::eval::ClassifyReport> {
    let labels = read_labels(&task.labels)?;
    let lr = LogRegConfig {
        seed,
        ..LogRegConfig::default()
    };
    classify_harness(bundle, &labels, task.test_fraction, seed, &lr)
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub theta: f64,
    pub aspects: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

pub const SCORES_OUT: &str = "scores.tsv";
pub const ASPECTS_OUT: &str = "aspects.tsv";
pub const BUNDLE_OUT: &str = "bundle.manifest";
pub const LINKPRED_OUT: &str = "linkpred.tsv";
pub const CLASSIFY_OUT: &str = "classify.tsv";
pub const MANIFEST_OUT: &str = "run.manifest";

/// Writes `run.manifest`: config hash, seed, worker count, version and the
/// hash of every listed output.
pub fn write_manifest(out: &Path, config_text: &str, seed: u64, workers: usize, outputs: &[PathBuf]) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "version\taspem {VERSION}");
    let _ = writeln!(s, "config_sha256\t{}", sha256_hex(config_text.as_bytes()));
    let _ = writeln!(s, "seed\t{seed}");
    let _ = writeln!(s, "workers\t{workers}");
    let _ = writeln!(s, "bit_reproducible\t{}", workers == 1);
    for p in outputs {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        let name = p.strip_prefix(out).unwrap_or(p);
        let _ = writeln!(s, "output\t{}\t{}", name.display(), sha256_hex(&bytes));
    }
    let path = out.join(MANIFEST_OUT);
    fs::write(&path, s).map_err(|e| Error::io(&path, e))
}

pub fn run(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = &cfg.out;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let hin = load_graph(cfg.graph.as_ref().expect("validated"))?;
    let mut outputs = Vec::new();

    let (score_schema_, scores) = load_or_score(&hin, cfg.scores.as_deref())?;
    if cfg.scores.is_none() {
        let p = out.join(SCORES_OUT);
        write_scores(&p, &score_schema_, &scores)?;
        outputs.push(p);
    }

    let (theta, selected) = select_stage(&score_schema_, &scores, &cfg.anchors, cfg.theta)?;
    let schema = hin.schema();
    let aspects = selected
        .iter()
        .map(|a| remap_aspect(a, &score_schema_, &schema))
        .collect::<Result<Vec<_>>>()?;
    let p = out.join(ASPECTS_OUT);
    write_aspects(&p, &schema, &aspects)?;
    outputs.push(p);

    let bundle = train_bundle(&hin, &aspects, &cfg.train)?;
    let manifest = out.join(BUNDLE_OUT);
    bundle.write(&manifest)?;
    outputs.push(manifest.clone());
    for (a, _) in bundle.spaces() {
        outputs.push(embedding_file(&manifest, a));
    }

    if let Some(task) = &cfg.linkpred {
        let m = run_linkpred(&bundle, task, cfg.train.seed)?;
        let p = out.join(LINKPRED_OUT);
        fs::write(&p, m.to_tsv()).map_err(|e| Error::io(&p, e))?;
        outputs.push(p);
    }
    if let Some(task) = &cfg.classify {
        let r = run_classify(&bundle, task, cfg.train.seed)?;
        let p = out.join(CLASSIFY_OUT);
        fs::write(&p, format!("metric\tvalue\naccuracy\t{}\n", r.accuracy)).map_err(|e| Error::io(&p, e))?;
        outputs.push(p);
    }

    write_manifest(out, &cfg.to_text(), cfg.train.seed, cfg.train.workers, &outputs)?;
    Ok(RunSummary {
        theta,
        aspects: aspects.iter().map(|a| a.name().to_string()).collect(),
        outputs,
    })
}
