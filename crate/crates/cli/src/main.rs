use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aspem::aspect::{inc_aspect, write_scores, Aspect};
use aspem::compose::AspectBundle;
use aspem::error::{Error, Result};
use aspem::hin::{write_edges, write_nodes, Hin};
use aspem::pipeline::{
    self, load_graph, load_or_score, run_classify, run_linkpred, select_stage, write_aspects, ClassifyTask,
    LinkPredTask, PipelineConfig, Theta,
};
use aspem::synthetic::{self, PlantedConfig};
use aspem::train::{train_aspect, TrainConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aspem",
    version,
    about = "Multi-aspect embedding of heterogeneous information networks"
)]
struct Cli {
    /// Random seed for training, splits and sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Training threads; 1 gives bit-reproducible output.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct TrainArgs {
    /// Graph directory holding nodes.tsv and edges.tsv.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    /// Number of sampled edges; accepts forms like 1e6.
    #[arg(long, default_value = "1e6")]
    samples: String,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 0.025)]
    lr: f64,
    #[arg(long, default_value_t = 0.75)]
    noise_power: f64,
}

#[derive(Args, Clone)]
struct LinkPredArgs {
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    attributes: PathBuf,
    /// Node type of the queries (e.g. P).
    #[arg(long)]
    query_type: String,
    /// Node type of the candidates (e.g. A).
    #[arg(long)]
    candidate_type: String,
    /// Comma-separated attribute edge types, in feature order.
    #[arg(long, value_delimiter = ',', required = true)]
    edge_types: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    test_fraction: f64,
    /// Fixed held-out queries instead of a random split.
    #[arg(long, requires = "test_attributes")]
    test_instances: Option<PathBuf>,
    #[arg(long, requires = "test_instances")]
    test_attributes: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load a graph and print its schema and sizes.
    Ingest {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Compute incompatibility scores of every sub-aspect.
    Score {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Select aspects from a score table.
    Select {
        #[arg(long, required_unless_present = "graph")]
        scores: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Anchor node types (comma-separated).
        #[arg(long, value_delimiter = ',', required = true)]
        anchor: Vec<String>,
        #[arg(long, conflicts_with = "auto_theta", required_unless_present = "auto_theta")]
        theta: Option<f64>,
        #[arg(long)]
        auto_theta: bool,
    },
    /// Train one aspect's embedding.
    Train {
        #[command(flatten)]
        train: TrainArgs,
        /// Aspect name such as APRTV, or comma-separated node types.
        #[arg(long)]
        aspect: String,
    },
    /// Train the full schema as a single space.
    Onespace {
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Bundle embedding files into a manifest.
    Compose {
        #[arg(long)]
        graph: PathBuf,
        /// Embedding files in feature order.
        #[arg(long = "emb", required = true)]
        embeddings: Vec<PathBuf>,
    },
    /// Link prediction with logistic regression on pair features.
    EvalLinkpred {
        #[arg(long)]
        bundle: PathBuf,
        #[command(flatten)]
        task: LinkPredArgs,
    },
    /// Node classification with one-vs-rest logistic regression.
    EvalClassify {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
    },
    /// Re-run a configured pipeline over several values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = ["dim", "samples"])]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Run the whole pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Extra `key=value` overrides.
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
    /// Write a planted two-aspect network with link prediction queries.
    Synth {
        #[arg(long, default_value_t = 300)]
        authors: usize,
        #[arg(long, default_value_t = 3000)]
        papers: usize,
    },
}

fn train_config(cli: &Cli, a: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = PipelineConfig::default();
    cfg.set("samples", &a.samples)?;
    let t = TrainConfig {
        dim: a.dim,
        negatives: a.negatives,
        samples: cfg.train.samples,
        initial_lr: a.lr,
        workers: cli.workers.unwrap_or(1),
        seed: cli.seed.unwrap_or(1),
        noise_power: a.noise_power,
    };
    t.validate()?;
    Ok(t)
}

fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn print_graph(hin: &Hin) {
    let schema = hin.schema();
    println!("{} nodes", hin.node_count());
    for ty in schema.node_types() {
        println!("  {}\t{}", schema.node_type_name(ty), hin.nodes_of_type(ty).len());
    }
    for def in schema.edge_types() {
        println!(
            "  {}\t{} -{}- {}\t{} edges, weight {}",
            def.name,
            schema.node_type_name(def.source),
            if def.directed { ">" } else { "" },
            schema.node_type_name(def.target),
            hin.relation(def.id).len(),
            hin.relation(def.id).total_weight()
        );
    }
}

fn train_and_write(cli: &Cli, args: &TrainArgs, aspect_spec: Option<&str>) -> Result<()> {
    let cfg = train_config(cli, args)?;
    let hin = load_graph(&args.graph)?;
    let schema = hin.schema();
    let aspect = match aspect_spec {
        Some(s) => Aspect::parse(&schema, s)?,
        None => Aspect::full(&schema)?,
    };
    let table = train_aspect(&hin, &aspect, &cfg)?;
    let out = out_path(cli, &format!("{}.emb", aspect.name().replace('+', "_")));
    table.write(&out)?;
    println!(
        "{}: {} vectors of dimension {} -> {}",
        aspect.name(),
        table.len(),
        table.dim(),
        out.display()
    );
    Ok(())
}

fn linkpred_task(t: &LinkPredArgs) -> LinkPredTask {
    LinkPredTask {
        instances: t.instances.clone(),
        attributes: t.attributes.clone(),
        query_type: t.query_type.clone(),
        candidate_type: t.candidate_type.clone(),
        edge_types: t.edge_types.clone(),
        test_fraction: t.test_fraction,
        test_instances: t.test_instances.clone().zip(t.test_attributes.clone()),
    }
}

fn load_config(cli: &Cli, path: &Path, overrides: &[String]) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::from_file(path)?;
    let cwd = Path::new(".");
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.train.workers = w;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    cfg.resolve_paths(cwd);
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest { graph } => {
            let hin = load_graph(graph)?;
            print_graph(&hin);
            if let Some(dir) = &cli.out {
                fs::create_dir_all(dir).map_err(|e| Error::Io {
                    path: dir.clone(),
                    source: e,
                })?;
                let (n, e) = pipeline::graph_files(dir);
                write_nodes(&hin, &n)?;
                write_edges(&hin, &e)?;
            }
        }
        Command::Score { graph } => {
            let hin = load_graph(graph)?;
            let (schema, scores) = load_or_score(&hin, None)?;
            for (sub, s) in scores.iter() {
                println!("{}\t{s}", sub.label(&schema));
            }
            write_scores(&out_path(cli, pipeline::SCORES_OUT), &schema, &scores)?;
        }
        Command::Select {
            scores,
            graph,
            anchor,
            theta,
            auto_theta,
        } => {
            let (schema, table) = match (scores, graph) {
                (Some(p), _) => aspem::aspect::read_scores(p)?,
                (None, Some(g)) => load_or_score(&load_graph(g)?, None)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let theta = match (theta, auto_theta) {
                (Some(t), _) => Theta::Fixed(*t),
                _ => Theta::Auto,
            };
            let (theta, aspects) = select_stage(&schema, &table, anchor, theta)?;
            println!("θ={theta}");
            let names: Vec<&str> = aspects.iter().map(|a| a.name()).collect();
            println!("{{{}}}", names.join(", "));
            for a in &aspects {
                log::info!("Inc({}) = {}", a.name(), inc_aspect(&table, a, &schema)?);
            }
            if let Some(out) = &cli.out {
                write_aspects(out, &schema, &aspects)?;
            }
        }
        Command::Train { train, aspect } => train_and_write(cli, train, Some(aspect))?,
        Command::Onespace { train } => train_and_write(cli, train, None)?,
        Command::Compose { graph, embeddings } => {
            let schema = load_graph(graph)?.schema();
            let spaces = embeddings
                .iter()
                .map(|p| {
                    let table = aspem::train::EmbeddingTable::read(p)?;
                    Ok((Aspect::parse(&schema, table.aspect())?, table))
                })
                .collect::<Result<Vec<_>>>()?;
            let bundle = AspectBundle::new(schema, spaces)?;
            let out = out_path(cli, pipeline::BUNDLE_OUT);
            bundle.write(&out)?;
            println!("{} aspects -> {}", bundle.len(), out.display());
        }
        Command::EvalLinkpred { bundle, task } => {
            let bundle = AspectBundle::read(bundle)?;
            let metrics = run_linkpred(&bundle, &linkpred_task(task), cli.seed.unwrap_or(1))?;
            println!("{metrics}");
            if let Some(out) = &cli.out {
                write_text(out, &metrics.to_tsv())?;
            }
        }
        Command::EvalClassify {
            bundle,
            labels,
            test_fraction,
        } => {
            let bundle = AspectBundle::read(bundle)?;
            let task = ClassifyTask {
                labels: labels.clone(),
                test_fraction: *test_fraction,
            };
            let r = run_classify(&bundle, &task, cli.seed.unwrap_or(1))?;
            println!(
                "accuracy {:.4} ({} train, {} test, {} classes)",
                r.accuracy, r.train, r.test, r.classes
            );
            if let Some(out) = &cli.out {
                write_text(out, &format!("metric\tvalue\naccuracy\t{}\n", r.accuracy))?;
            }
        }
        Command::Sweep { config, param, values } => {
            let base = load_config(cli, config, &[])?;
            if base.linkpred.is_none() {
                return Err(Error::Config("sweep needs a linkpred task in the config".into()));
            }
            let mut rows: BTreeMap<usize, (String, String)> = BTreeMap::new();
            let mut tsv = String::from("param\tvalue\tmetric\tk\tscore\n");
            for (i, v) in values.iter().enumerate() {
                let mut cfg = base.clone();
                cfg.set(param, v)?;
                cfg.out = base.out.join(format!("{param}={v}"));
                let summary = pipeline::run(&cfg)?;
                let text = fs::read_to_string(cfg.out.join(pipeline::LINKPRED_OUT)).map_err(|e| Error::Io {
                    path: cfg.out.join(pipeline::LINKPRED_OUT),
                    source: e,
                })?;
                let mut cells = Vec::new();
                for line in text.lines().skip(1) {
                    let f: Vec<&str> = line.split('\t').collect();
                    tsv.push_str(&format!("{param}\t{v}\t{}\t{}\t{}\n", f[0], f[1], f[2]));
                    let x: f64 = f[2].parse().unwrap_or(f64::NAN);
                    cells.push(format!("{:>8.4}", x));
                }
                rows.insert(i, (format!("{v} ({})", summary.aspects.join(",")), cells.join(" ")));
            }
            println!("{param:>24}  P@1      P@3      P@10     R@1      R@3      R@10");
            for (label, cells) in rows.values() {
                println!("{label:>24} {cells}");
            }
            let p = base.out.join(format!("sweep_{param}.tsv"));
            fs::create_dir_all(&base.out).map_err(|e| Error::Io {
                path: base.out.clone(),
                source: e,
            })?;
            write_text(&p, &tsv)?;
        }
        Command::Run { config, overrides } => {
            let cfg = load_config(cli, config, overrides)?;
            let s = pipeline::run(&cfg)?;
            println!("θ={}", s.theta);
            println!("{{{}}}", s.aspects.join(", "));
            println!("outputs in {}", cfg.out.display());
        }
        Command::Synth { authors, papers } => {
            let cfg = PlantedConfig {
                authors: *authors,
                papers: *papers,
                seed: cli.seed.unwrap_or(1),
                ..PlantedConfig::default()
            };
            let out = out_path(cli, "planted");
            cfg.generate()?.write(&out)?;
            let run_cfg = format!(
                "graph = .\nout = run\nanchor = A\ntheta = auto\ndim = 8\nsamples = 1e6\nseed = {}\n\
                 linkpred.instances = {}\nlinkpred.attributes = {}\n\
                 linkpred.test_instances = {}\nlinkpred.test_attributes = {}\n\
                 linkpred.query_type = P\nlinkpred.candidate_type = A\nlinkpred.edge_types = {},{}\n",
                cfg.seed,
                synthetic::TRAIN_INSTANCES,
                synthetic::TRAIN_ATTRIBUTES,
                synthetic::TEST_INSTANCES,
                synthetic::TEST_ATTRIBUTES,
                synthetic::HAS_X,
                synthetic::HAS_Y
            );
            write_text(&out.join("run.cfg"), &run_cfg)?;
            println!("planted network -> {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
