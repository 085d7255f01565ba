//! Desk-scale experiments: random-net inference benchmark, the two-pattern
//! toy learning problem, synthetic-image learning and data generation.

mod bench;
mod config;
mod data;
mod emit;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bench::{
    bench_net, inference_bench, moment_differences, moment_pairs, ComponentRun, Histogram, InferenceBenchResult,
    NetRun,
};
pub use config::{
    ExperimentConfig, ExperimentId, GenDataConfig, ImageLearnConfig, InferenceBenchConfig, ToyLearnConfig,
    SCHEMA_VERSION,
};
pub use data::{
    gen_labelled_images, gen_random_nets, gen_synthetic_images, image_topology, prototypes, toy_patterns,
    N_PROTOTYPES, PROTOTYPE_SIDE,
};
pub use emit::{emit_results, Document, FileEntry, FileFormat, Manifest, Outputs, Table, MANIFEST_FILE};
pub use crate::model::PatternSet;

use crate::error::Result;
use crate::learning::{train, Engine, FreePhase, RunRecord};
use crate::model::{Network, Topology};

pub const IMAGE_GRID: (usize, usize) = (PROTOTYPE_SIDE, PROTOTYPE_SIDE);

/// File-name form of an engine: `exact`, `meanfield`, `mixture-K`.
pub fn engine_slug(e: Engine) -> String {
    match e {
        Engine::Mixture { n_components } => format!("mixture-{n_components}"),
        other => other.to_string(),
    }
}

/// Number of steps t with trace[t + 1] < trace[t].
pub fn count_worsenings(trace: &[f64]) -> usize {
    trace.windows(2).filter(|w| w[1] < w[0]).count()
}

/// Train every configured engine on the toy patterns from the same seed.
pub fn toy_learn(config: &ToyLearnConfig, seed: u64) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let patterns = toy_patterns();
    let top = Topology::complete(2);
    config
        .engines
        .par_iter()
        .map(|&e| train(&top, &patterns, &config.train_config(e, seed)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageLearnResult {
    pub patterns: PatternSet,
    pub records: Vec<RunRecord>,
}

pub fn image_learn(config: &ImageLearnConfig, seed: u64) -> Result<ImageLearnResult> {
    config.validate()?;
    let patterns = gen_synthetic_images(config.count_per_class, config.classes, IMAGE_GRID, config.flip_prob, seed)?;
    let top = image_topology(IMAGE_GRID, config.n_hidden)?;
    let records = config
        .engines
        .par_iter()
        .map(|&e| train(&top, &patterns, &config.train_config(e, seed)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageLearnResult { patterns, records })
}

fn f(x: f64) -> String {
    x.to_string()
}

fn run_tables(prefix: &str, rec: &RunRecord) -> Result<(Table, Document)> {
    let slug = engine_slug(rec.engine());
    let mut t = Table::new(format!("{prefix}_{slug}"), rec.csv_header());
    rec.csv_rows().into_iter().for_each(|r| t.push(r));
    let doc = Document {
        name: format!("{prefix}_{slug}"),
        content: rec.to_json()? + "\n",
    };
    Ok((t, doc))
}

/// Free-phase means per iteration and component, restricted to the first
/// `n_nodes` nodes. Mean-field runs report a single component with α = 1.
fn free_means_table(name: String, records: &[RunRecord], n_nodes: usize) -> Table {
    let mut cols = vec!["engine".to_string(), "iteration".into(), "component".into(), "alpha".into()];
    cols.extend((1..=n_nodes).map(|i| format!("m_{i}")));
    let mut t = Table::new(name, cols);
    for rec in records {
        let engine = rec.engine().to_string();
        for row in &rec.rows {
            let comps: Vec<(f64, &[f64])> = match &row.free_phase {
                FreePhase::Exact => Vec::new(),
                FreePhase::MeanField(p) => vec![(1.0, p.means())],
                FreePhase::Mixture(p) => p.alphas().iter().copied().zip(p.means().iter().map(|m| m.as_slice())).collect(),
            };
            for (k, (alpha, means)) in comps.into_iter().enumerate() {
                let mut r = vec![engine.clone(), row.iteration.to_string(), (k + 1).to_string(), f(alpha)];
                r.extend(means[..n_nodes].iter().map(|&m| f(m)));
                t.push(r);
            }
        }
    }
    t
}

fn patterns_table(name: &str, patterns: &PatternSet) -> Table {
    let mut cols = vec!["count".to_string()];
    cols.extend((1..=patterns.n_visible()).map(|i| format!("v_{i}")));
    let mut t = Table::new(name, cols);
    for (p, c) in patterns.iter() {
        let mut r = vec![c.to_string()];
        r.extend(p.iter().map(|v| v.to_string()));
        t.push(r);
    }
    t
}

pub fn inference_bench_outputs(result: &InferenceBenchResult, config: &ExperimentConfig) -> Outputs {
    let mut out = Outputs::empty(ExperimentId::InferenceBench, config.clone());
    let n_nodes = config.inference_bench.n_nodes;

    let mut sse = Table::new(
        "inference_sse",
        ["net", "n_components", "sse", "bound", "neg_log_partition", "converged", "floor_hits"],
    );
    let mut diffs = Table::new("inference_differences", ["net", "n_components", "a", "b", "difference"]);
    let pairs = moment_pairs(n_nodes);
    for n in &result.nets {
        for r in &n.runs {
            sse.push(vec![
                n.net.to_string(),
                r.n_components.to_string(),
                f(r.sse),
                f(r.bound),
                f(-n.log_partition),
                r.converged.to_string(),
                r.floor_hits.to_string(),
            ]);
            for (&(a, b), &d) in pairs.iter().zip(&r.differences) {
                diffs.push(vec![n.net.to_string(), r.n_components.to_string(), a.to_string(), b.to_string(), f(d)]);
            }
        }
    }

    let mut summary = Table::new("inference_summary", ["n_components", "median_sse", "mean_sse"]);
    for ((k, med), mean) in result.components.iter().zip(result.median_sse()).zip(result.mean_sse()) {
        summary.push(vec![k.to_string(), f(med), f(mean)]);
    }

    let mut hist = Table::new("inference_histogram", ["n_components", "bin_low", "bin_high", "count"]);
    for (k, h) in result.components.iter().zip(result.histograms()) {
        hist.push(vec![k.to_string(), "-inf".into(), f(h.low), h.below.to_string()]);
        for (b, c) in h.counts.iter().enumerate() {
            hist.push(vec![k.to_string(), f(h.edge(b)), f(h.edge(b + 1)), c.to_string()]);
        }
        hist.push(vec![k.to_string(), f(h.high), "inf".into(), h.above.to_string()]);
    }
    out.tables = vec![summary, sse, hist, diffs];
    out
}

pub fn toy_learn_outputs(records: &[RunRecord], config: &ExperimentConfig) -> Result<Outputs> {
    let mut out = Outputs::empty(ExperimentId::ToyLearn, config.clone());
    for rec in records {
        let (t, d) = run_tables("toy", rec)?;
        out.tables.push(t);
        out.documents.push(d);
    }
    out.tables.push(free_means_table("toy_free_phase".into(), records, 2));
    Ok(out)
}

pub fn image_learn_outputs(result: &ImageLearnResult, config: &ExperimentConfig) -> Result<Outputs> {
    let mut out = Outputs::empty(ExperimentId::ImageLearn, config.clone());
    out.tables.push(patterns_table("image_patterns", &result.patterns));
    let n_visible = result.patterns.n_visible();
    for rec in &result.records {
        let (t, d) = run_tables("image", rec)?;
        out.tables.push(t);
        out.documents.push(d);
        out.tables.push(free_means_table(
            format!("image_{}_visible_means", engine_slug(rec.engine())),
            std::slice::from_ref(rec),
            n_visible,
        ));
    }
    Ok(out)
}

pub fn gen_data(config: &GenDataConfig, seed: u64) -> Result<(PatternSet, Vec<Network>)> {
    config.validate()?;
    let patterns = gen_synthetic_images(config.count_per_class, config.classes, IMAGE_GRID, config.flip_prob, seed)?;
    let nets = gen_random_nets(config.n_nets, config.n_nodes, config.param_range, seed)?;
    Ok((patterns, nets))
}

pub fn gen_data_outputs(patterns: &PatternSet, nets: &[Network], config: &ExperimentConfig) -> Result<Outputs> {
    let mut out = Outputs::empty(ExperimentId::GenData, config.clone());
    out.tables.push(patterns_table("patterns", patterns));
    if !nets.is_empty() {
        let files: Vec<_> = nets.iter().map(Network::to_file).collect();
        out.documents.push(Document {
            name: "random_nets".into(),
            content: serde_json::to_string_pretty(&files)? + "\n",
        });
    }
    Ok(out)
}

/// Validate, run and package one experiment.
pub fn run_experiment(id: ExperimentId, config: &ExperimentConfig) -> Result<Outputs> {
    config.validate_for(id)?;
    let seed = config.seed;
    match id {
        ExperimentId::InferenceBench => {
            let r = inference_bench(&config.inference_bench, seed)?;
            Ok(inference_bench_outputs(&r, config))
        }
        ExperimentId::ToyLearn => toy_learn_outputs(&toy_learn(&config.toy_learn, seed)?, config),
        ExperimentId::ImageLearn => image_learn_outputs(&image_learn(&config.image_learn, seed)?, config),
        ExperimentId::GenData => {
            let (p, n) = gen_data(&config.gen_data, seed)?;
            gen_data_outputs(&p, &n, config)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worsening_count() {
        assert_eq!(count_worsenings(&[1.0, 2.0, 1.5, 1.5, 1.0, 3.0]), 2);
        assert_eq!(count_worsenings(&[]), 0);
    }

    #[test]
    fn slugs() {
        assert_eq!(engine_slug(Engine::Mixture { n_components: 10 }), "mixture-10");
        assert_eq!(engine_slug(Engine::MeanField), "meanfield");
    }

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig {
            seed: 3,
            ..ExperimentConfig::default()
        };
        c.inference_bench.n_nets = 2;
        c.inference_bench.n_nodes = 5;
        c.inference_bench.components = vec![1, 2];
        c.toy_learn.n_iterations = 10;
        c.image_learn.count_per_class = 2;
        c.image_learn.classes = 3;
        c.image_learn.n_hidden = 2;
        c.image_learn.n_iterations = 2;
        c.image_learn.engines = vec![Engine::MeanField, Engine::Mixture { n_components: 2 }];
        c.gen_data.n_nets = 2;
        c
    }

    fn emit_bytes(id: ExperimentId, c: &ExperimentConfig) -> Vec<(String, Vec<u8>)> {
        let dir = tempfile::tempdir().unwrap();
        emit_results(&run_experiment(id, c).unwrap(), dir.path()).unwrap();
        let mut files: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    }

    #[test]
    fn every_experiment_is_byte_deterministic() {
        let c = small();
        for id in ExperimentId::ALL {
            let a = emit_bytes(id, &c);
            assert!(a.len() > 1, "{id}");
            assert_eq!(a, emit_bytes(id, &c), "{id}");
        }
    }

    #[test]
    fn toy_outputs_layout() {
        let c = small();
        let out = run_experiment(ExperimentId::ToyLearn, &c).unwrap();
        let names: Vec<_> = out.tables.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["toy_exact", "toy_meanfield", "toy_mixture-2", "toy_free_phase"]);
        assert_eq!(out.table("toy_exact").unwrap().rows.len(), 10);
        // 10 meanfield rows plus 2 x 10 mixture rows.
        assert_eq!(out.table("toy_free_phase").unwrap().rows.len(), 30);
    }

    #[test]
    fn image_outputs_layout() {
        let c = small();
        let r = image_learn(&c.image_learn, c.seed).unwrap();
        assert_eq!(r.patterns.total(), 6);
        assert_eq!(r.records.len(), 2);
        assert!(r.records.iter().all(|rec| rec.rows.len() == 2 && rec.rows[0].kl.is_none()));
        let out = image_learn_outputs(&r, &c).unwrap();
        let means = out.table("image_mixture-2_visible_means").unwrap();
        assert_eq!(means.columns.len(), 4 + 64);
        assert_eq!(means.rows.len(), 2 * 2);
    }

    #[test]
    fn gen_data_outputs_nets() {
        let c = small();
        let out = run_experiment(ExperimentId::GenData, &c).unwrap();
        assert_eq!(out.documents.len(), 1);
        let nets: Vec<crate::model::NetworkFile> = serde_json::from_str(&out.documents[0].content).unwrap();
        assert_eq!(nets.len(), 2);
        assert_eq!(out.table("patterns").unwrap().columns.len(), 65);
    }

    #[test]
    fn pinned_config_rejects_other_experiments() {
        let c = ExperimentConfig {
            experiment: Some(ExperimentId::ToyLearn),
            ..small()
        };
        assert!(run_experiment(ExperimentId::GenData, &c).is_err());
    }
}
