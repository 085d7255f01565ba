use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use boltzmix::experiments::{emit_results, run_experiment, ExperimentConfig, ExperimentId, Outputs};
use boltzmix::learning::Engine;
use clap::{Args, Parser, Subcommand};

/// Inference and learning experiments for Boltzmann machines with exact,
/// mean-field and mixture-of-mean-field engines.
///
/// Settings come from built-in defaults, then command-line flags, then the
/// `--config` file; keys present in the file take precedence.
#[derive(Parser, Debug)]
#[command(name = "boltzmix", version)]
struct Cli {
    /// Seed for every random draw of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory [default: out/<experiment>].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare annealed mixture approximations with exact moments on random nets.
    InferenceBench(BenchArgs),
    /// Train on {(1,1), (1,1), (-1,-1)} with each engine.
    ToyLearn(ToyArgs),
    /// Train the grid-plus-hidden network on synthetic 8x8 images.
    ImageLearn(ImageArgs),
    /// Write synthetic image patterns and, optionally, random nets.
    GenData(GenArgs),
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    nets: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Comma-separated mixture sizes.
    #[arg(long, value_delimiter = ',')]
    components: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct ToyArgs {
    #[arg(long)]
    iterations: Option<usize>,
    /// Comma-separated engines: exact, meanfield, mixture(K).
    #[arg(long, value_delimiter = ',', value_parser = parse_engine)]
    engines: Option<Vec<Engine>>,
}

#[derive(Args, Debug)]
struct ImageArgs {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    count_per_class: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_engine)]
    engines: Option<Vec<Engine>>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    count_per_class: Option<usize>,
    #[arg(long)]
    flip_prob: Option<f64>,
    /// Also write this many random fully connected nets.
    #[arg(long)]
    nets: Option<usize>,
}

fn parse_engine(s: &str) -> std::result::Result<Engine, String> {
    s.parse().map_err(|e: boltzmix::Error| e.to_string())
}

impl Command {
    fn id(&self) -> ExperimentId {
        match self {
            Command::InferenceBench(_) => ExperimentId::InferenceBench,
            Command::ToyLearn(_) => ExperimentId::ToyLearn,
            Command::ImageLearn(_) => ExperimentId::ImageLearn,
            Command::GenData(_) => ExperimentId::GenData,
        }
    }

    fn apply(&self, c: &mut ExperimentConfig) {
        fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
            if let Some(v) = src {
                *dst = v.clone();
            }
        }
        match self {
            Command::InferenceBench(a) => {
                set(&mut c.inference_bench.n_nets, &a.nets);
                set(&mut c.inference_bench.n_nodes, &a.nodes);
                set(&mut c.inference_bench.components, &a.components);
            }
            Command::ToyLearn(a) => {
                set(&mut c.toy_learn.n_iterations, &a.iterations);
                set(&mut c.toy_learn.engines, &a.engines);
            }
            Command::ImageLearn(a) => {
                set(&mut c.image_learn.n_iterations, &a.iterations);
                set(&mut c.image_learn.count_per_class, &a.count_per_class);
                set(&mut c.image_learn.learning_rate, &a.learning_rate);
                set(&mut c.image_learn.engines, &a.engines);
            }
            Command::GenData(a) => {
                set(&mut c.gen_data.count_per_class, &a.count_per_class);
                set(&mut c.gen_data.flip_prob, &a.flip_prob);
                set(&mut c.gen_data.n_nets, &a.nets);
            }
        }
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.output_dir = cli.out.clone();
    cli.command.apply(&mut config);
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        // Parse the file on its own first so its errors name the file's keys.
        ExperimentConfig::from_toml_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let file: toml::Value = toml::from_str(&text)?;
        let mut merged = toml::Value::try_from(&config)?;
        merge(&mut merged, file);
        config = merged.try_into()?;
    }
    config.validate_for(cli.command.id())?;
    Ok(config)
}

fn report(outputs: &Outputs) {
    if let Some(t) = outputs.table("inference_summary") {
        println!("{}", t.columns.join("\t"));
        for r in &t.rows {
            println!("{}", r.join("\t"));
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let id = cli.command.id();
    let config = resolve(&cli)?;
    let dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(id.as_str()));
    let outputs = run_experiment(id, &config)?;
    let manifest = emit_results(&outputs, &dir).with_context(|| format!("writing {}", dir.display()))?;
    report(&outputs);
    println!("{id}: wrote {} files to {}", manifest.files.len() + 1, dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("boltzmix: error: {e:#}");
            ExitCode::from(2)
        }
    }
}
