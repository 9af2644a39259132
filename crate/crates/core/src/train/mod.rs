//! Per-aspect embedding training by edge sampling and negative sampling.
//!
//! Each iteration picks an edge type of the aspect uniformly, an edge of that
//! type proportionally to its weight, and `K` negatives of the destination's
//! type from the noise distribution, then takes one SGNS ascent step. Workers
//! share the embedding matrix without locks; every entry is an `AtomicU64`
//! accessed with relaxed ordering, so concurrent updates may be lost but
//! never torn. With one worker the run is bit-reproducible.

mod noise;
mod objective;
mod sgns;
mod table;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use noise::{noise_sample, NoiseSampler};
pub use objective::{empirical_prob, objective, softmax_prob};
pub use sgns::{
    dot, log_sigmoid, sgns_gradients, sgns_objective, sgns_step, sigmoid, SgnsGradients, SgnsScratch, VectorStore,
};
pub use table::{format_sig9, EmbeddingTable};

use crate::alias::AliasTable;
use crate::aspect::Aspect;
use crate::error::{Error, Result};
use crate::hin::{EdgeTypeId, Hin, NodeId, NodeTypeId};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub negatives: usize,
    pub samples: u64,
    pub initial_lr: f64,
    pub workers: usize,
    pub seed: u64,
    pub noise_power: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            negatives: 5,
            samples: 1_000_000,
            initial_lr: 0.025,
            workers: 1,
            seed: 1,
            noise_power: 0.75,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("sample count must be at least 1".into()));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.initial_lr
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        if !self.noise_power.is_finite() {
            return Err(Error::Config("noise power must be finite".into()));
        }
        Ok(())
    }

    /// `initial_lr * max(1 - t / samples, 1e-4)`.
    pub fn learning_rate(&self, t: u64) -> f64 {
        self.initial_lr * (1.0 - t as f64 / self.samples as f64).max(1e-4)
    }
}

struct SharedMatrix {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl SharedMatrix {
    fn from_values(dim: usize, values: Vec<f64>) -> Self {
        SharedMatrix {
            dim,
            cells: values.into_iter().map(|x| AtomicU64::new(x.to_bits())).collect(),
        }
    }

    fn to_vec(&self) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| f64::from_bits(c.load(Ordering::Relaxed)))
            .collect()
    }
}

#[derive(Clone, Copy)]
struct SharedRows<'a>(&'a SharedMatrix);

impl VectorStore for SharedRows<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn load(&self, row: usize, out: &mut [f64]) {
        let cells = &self.0.cells[row * self.0.dim..(row + 1) * self.0.dim];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }

    fn add_scaled(&mut self, row: usize, direction: &[f64], scale: f64) {
        let cells = &self.0.cells[row * self.0.dim..(row + 1) * self.0.dim];
        for (c, d) in cells.iter().zip(direction) {
            let x = f64::from_bits(c.load(Ordering::Relaxed)) + scale * d;
            c.store(x.to_bits(), Ordering::Relaxed);
        }
    }
}

struct EdgeSampler {
    edge_type: EdgeTypeId,
    /// `(src row, dst row, dst type)` per edge.
    edges: Vec<(u32, u32, NodeTypeId)>,
    table: AliasTable,
}

/// Training state for one aspect.
pub struct Trainer<'h> {
    hin: &'h Hin,
    aspect: Aspect,
    cfg: TrainConfig,
    nodes: Vec<NodeId>,
    rows: Vec<u32>,
    samplers: Vec<EdgeSampler>,
    noise: NoiseSampler,
    matrix: SharedMatrix,
}

const NO_ROW: u32 = u32::MAX;

impl<'h> Trainer<'h> {
    pub fn new(hin: &'h Hin, aspect: &Aspect, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut nodes = Vec::new();
        let mut rows = vec![NO_ROW; hin.node_count()];
        for i in 0..hin.node_count() {
            let u = NodeId(i as u32);
            if aspect.contains_node_type(hin.node_type(u)) {
                rows[i] = nodes.len() as u32;
                nodes.push(u);
            }
        }

        let mut samplers = Vec::with_capacity(aspect.edge_types().len());
        for &r in aspect.edge_types() {
            if r.index() >= hin.edge_types().len() {
                return Err(Error::UnknownEdgeType(r.to_string()));
            }
            let rel = hin.relation(r);
            if rel.total_weight() <= 0.0 {
                return Err(Error::InvalidAspect(format!(
                    "edge type `{}` of aspect {} has zero total weight",
                    hin.edge_type(r).name,
                    aspect.name()
                )));
            }
            let weights: Vec<f64> = rel.edges().iter().map(|e| e.weight).collect();
            let edges = rel
                .edges()
                .iter()
                .map(|e| (rows[e.src.index()], rows[e.dst.index()], hin.node_type(e.dst)))
                .collect();
            samplers.push(EdgeSampler {
                edge_type: r,
                edges,
                table: AliasTable::new(&weights)?,
            });
        }
        let noise = NoiseSampler::new(hin, aspect.edge_types().iter().copied(), cfg.noise_power)?;

        let dim = cfg.dim;
        let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let bound = 0.5 / dim as f64;
        let values = (0..nodes.len() * dim)
            .map(|_| init_rng.gen_range(-bound..bound))
            .collect();

        Ok(Trainer {
            hin,
            aspect: aspect.clone(),
            cfg: cfg.clone(),
            nodes,
            rows,
            samplers,
            noise,
            matrix: SharedMatrix::from_values(dim, values),
        })
    }

    fn worker_rng(&self, worker: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(worker + 1);
        rng
    }

    /// Runs `steps` iterations; `progress(i)` maps the local step index to the global one.
    fn run_steps(&self, rng: &mut ChaCha8Rng, steps: u64, progress: impl Fn(u64) -> u64) {
        let mut store = SharedRows(&self.matrix);
        let mut scratch = SgnsScratch::new(self.cfg.dim);
        let mut negs: Vec<usize> = Vec::with_capacity(self.cfg.negatives);
        for i in 0..steps {
            let lr = self.cfg.learning_rate(progress(i));
            let sampler = &self.samplers[rng.gen_range(0..self.samplers.len())];
            let (src, dst, ty) = sampler.edges[sampler.table.sample(rng)];
            negs.clear();
            for _ in 0..self.cfg.negatives {
                let v = self
                    .noise
                    .sample(sampler.edge_type, ty, rng)
                    .expect("destination type has positive in-degree");
                negs.push(self.rows[v.index()] as usize);
            }
            sgns_step(&mut store, src as usize, dst as usize, &negs, lr, &mut scratch);
        }
    }

    /// Runs the configured number of samples across the configured workers.
    pub fn run(self) -> EmbeddingTable {
        let workers = self.cfg.workers as u64;
        let total = self.cfg.samples;
        if workers == 1 {
            let mut rng = self.worker_rng(0);
            self.run_steps(&mut rng, total, |i| i);
        } else {
            std::thread::scope(|scope| {
                for w in 0..workers {
                    let steps = total / workers + u64::from(w < total % workers);
                    let this = &self;
                    scope.spawn(move || {
                        let mut rng = this.worker_rng(w);
                        this.run_steps(&mut rng, steps, move |i| i * workers + w);
                    });
                }
            });
        }
        self.snapshot()
    }

    /// Single-worker run calling `monitor(step, table)` at step 0, every `every` steps, and at the end.
    pub fn run_monitored(self, every: u64, mut monitor: impl FnMut(u64, &EmbeddingTable)) -> EmbeddingTable {
        let every = every.max(1);
        let mut rng = self.worker_rng(0);
        let mut done = 0;
        monitor(0, &self.snapshot());
        while done < self.cfg.samples {
            let n = every.min(self.cfg.samples - done);
            self.run_steps(&mut rng, n, |i| done + i);
            done += n;
            monitor(done, &self.snapshot());
        }
        self.snapshot()
    }

    pub fn snapshot(&self) -> EmbeddingTable {
        let ids = self.nodes.iter().map(|&u| self.hin.node_name(u).to_string()).collect();
        EmbeddingTable::from_parts(self.aspect.name(), self.cfg.dim, ids, self.matrix.to_vec())
            .expect("trainer rows are consistent")
    }
}

/// Trains one embedding space for `aspect`.
pub fn train_aspect(hin: &Hin, aspect: &Aspect, cfg: &TrainConfig) -> Result<EmbeddingTable> {
    Ok(Trainer::new(hin, aspect, cfg)?.run())
}
