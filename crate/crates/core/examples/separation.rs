//! AspEm (one space per selected aspect) against OneSpace on planted networks.
//!
//! `cargo run --release --example separation -- [seeds=10] [dim=16] [samples=1e6] [authors=300] [papers=3000]`
//!
//! `dim` is the OneSpace dimension; the aspect spaces share it evenly. Each
//! space is trained for `samples` edges.

use aspem::aspect::{score_schema, Aspect};
use aspem::compose::AspectBundle;
use aspem::eval::{linkpred_harness, FeatureSpec, LogRegConfig, Split};
use aspem::pipeline::{select_stage, Theta};
use aspem::synthetic::{PlantedConfig, HAS_X, HAS_Y};
use aspem::train::{train_aspect, TrainConfig};

fn main() -> aspem::Result<()> {
    let mut planted = PlantedConfig::default();
    let (mut seeds, mut dim, mut samples) = (10u64, 16usize, 1_000_000u64);
    for arg in std::env::args().skip(1) {
        let (k, v) = arg.split_once('=').expect("arguments are key=value");
        let v: f64 = v.parse().expect("numeric value");
        match k {
            "seeds" => seeds = v as u64,
            "dim" => dim = v as usize,
            "samples" => samples = v as u64,
            "authors" => planted.authors = v as usize,
            "papers" => planted.papers = v as usize,
            _ => panic!("unknown key {k}"),
        }
    }
    let (mut sum_a, mut sum_o) = (0.0, 0.0);
    for seed in 1..=seeds {
        let data = PlantedConfig {
            seed,
            ..planted.clone()
        }
        .generate()?;
        let schema = data.hin.schema();
        let scores = score_schema(&data.hin, &schema)?;
        let (_, aspects) = select_stage(&schema, &scores, &["A".into()], Theta::Auto)?;
        let cfg = |d| TrainConfig {
            dim: d,
            samples,
            seed,
            ..TrainConfig::default()
        };

        let spaces = aspects
            .iter()
            .map(|a| Ok((a.clone(), train_aspect(&data.hin, a, &cfg(dim / aspects.len()))?)))
            .collect::<aspem::Result<Vec<_>>>()?;
        let aspem = AspectBundle::new(schema.clone(), spaces)?;
        let full = Aspect::full(&schema)?;
        let table = train_aspect(&data.hin, &full, &cfg(dim))?;
        let one = AspectBundle::new(schema.clone(), vec![(full, table)])?;

        let spec = FeatureSpec::from_schema(&schema, "P", "A", &[HAS_X, HAS_Y])?;
        let split = Split::new(data.train, data.test)?;
        let lr = LogRegConfig {
            seed,
            ..LogRegConfig::default()
        };
        let (ma, _) = linkpred_harness(&aspem, &spec, &split, &[1, 10], &lr)?;
        let (mo, _) = linkpred_harness(&one, &spec, &split, &[1, 10], &lr)?;
        let (pa, po) = (ma.precision_at(1).unwrap(), mo.precision_at(1).unwrap());
        println!(
            "seed {seed}: aspem P@1 {pa:.4} R@10 {:.4} | onespace P@1 {po:.4} R@10 {:.4}",
            ma.recall_at(10).unwrap(),
            mo.recall_at(10).unwrap()
        );
        sum_a += pa;
        sum_o += po;
    }
    let n = seeds as f64;
    println!(
        "mean P@1: aspem {:.4} onespace {:.4} diff {:+.4}",
        sum_a / n,
        sum_o / n,
        (sum_a - sum_o) / n
    );
    Ok(())
}
