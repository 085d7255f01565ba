//! Maximum-likelihood training: clamped and free inference per iteration,
//! gradient assembly, gradient-ascent parameter updates and per-iteration
//! metric records.
//!
//! Gradients are averaged over patterns, so a learning rate `lr` here equals
//! `lr / N` applied to the summed gradient.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{mf_anneal, mf_fixed_point, AnnealSchedule, FixedPointSettings, MeanFieldParams, StageTrace};
use crate::mixture::{mixture_pair_correlations, optimize_mixture, MixtureParams, MixtureSettings, UpdateStep};
use crate::model::{
    exact_pair_correlations, kl_divergence_discrete, log_clamped_partition, log_partition, visible_marginals,
    ClampPattern, Moments, Network, NetworkFile, PatternSet, Temperature, Topology, ENUMERATION_LIMIT,
};

/// How the free phase (and, for `Exact`, the clamped phase) is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Engine {
    Exact,
    #[serde(rename = "meanfield")]
    MeanField,
    Mixture { n_components: usize },
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Engine::Exact => write!(f, "exact"),
            Engine::MeanField => write!(f, "meanfield"),
            Engine::Mixture { n_components } => write!(f, "mixture({n_components})"),
        }
    }
}

impl FromStr for Engine {
    type Err = Error;

    /// Accepts `exact`, `meanfield` and `mixture(K)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "exact" => return Ok(Engine::Exact),
            "meanfield" => return Ok(Engine::MeanField),
            _ => {}
        }
        let k = s
            .strip_prefix("mixture(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown engine `{s}`")))?;
        Ok(Engine::Mixture { n_components: k })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub engine: Engine,
    pub learning_rate: f64,
    pub n_iterations: usize,
    /// Schedule for free-phase inference.
    pub anneal: AnnealSchedule,
    pub init_weight_std: f64,
    pub fixed_point: FixedPointSettings,
    pub seed: u64,
    /// Also anneal the clamped phase over `anneal`.
    pub anneal_clamped: bool,
    /// Warm-start each free phase from the previous iteration's solution.
    pub carry_over_free: bool,
    pub mixture_order: Vec<UpdateStep>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            engine: Engine::MeanField,
            learning_rate: 0.25,
            n_iterations: 200,
            anneal: AnnealSchedule::unit(),
            init_weight_std: 0.1,
            fixed_point: FixedPointSettings::default(),
            seed: 0,
            anneal_clamped: false,
            carry_over_free: false,
            mixture_order: MixtureSettings::default().order,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.n_iterations == 0 {
            return Err(Error::InvalidConfig("n_iterations must be >= 1".into()));
        }
        if !(self.init_weight_std >= 0.0) || !self.init_weight_std.is_finite() {
            return Err(Error::InvalidConfig("init_weight_std must be >= 0".into()));
        }
        if let Engine::Mixture { n_components: 0 } = self.engine {
            return Err(Error::InvalidConfig("mixture needs at least one component".into()));
        }
        if self.mixture_order.is_empty() {
            return Err(Error::InvalidConfig("empty mixture update order".into()));
        }
        self.fixed_point.validate()
    }

    fn mixture_settings(&self) -> MixtureSettings {
        MixtureSettings {
            fixed_point: self.fixed_point,
            order: self.mixture_order.clone(),
        }
    }
}

/// Network on `topology` with every weight and bias drawn from N(0, std²).
pub fn init_network(topology: &Topology, std: f64, seed: u64) -> Result<Network> {
    init_network_with(topology, std, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// As [`init_network`], drawing from `rng`: edges in sorted order, then biases.
pub fn init_network_with<R: Rng + ?Sized>(topology: &Topology, std: f64, rng: &mut R) -> Result<Network> {
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(format!("init_weight_std: {e}")))?;
    let mut net = Network::zeros(topology);
    for &(i, j) in topology.edges() {
        net.set_weight(i, j, normal.sample(rng))?;
    }
    for i in 0..topology.n_nodes() {
        net.set_bias(i, normal.sample(rng));
    }
    Ok(net)
}

/// Free-phase variational state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "params")]
pub enum FreePhase {
    Exact,
    #[serde(rename = "meanfield")]
    MeanField(MeanFieldParams),
    Mixture(MixtureParams),
}

impl FreePhase {
    pub fn floor_hits(&self) -> u64 {
        match self {
            FreePhase::Mixture(p) => p.floor_hits(),
            _ => 0,
        }
    }
}

/// Result of inference for one learning iteration.
#[derive(Clone, Debug)]
pub struct EStep {
    /// Clamped means per distinct pattern; empty for the exact engine.
    pub clamped: Vec<MeanFieldParams>,
    /// Multiplicity-weighted average of the clamped moments.
    pub clamped_moments: Moments,
    pub free: FreePhase,
    pub free_moments: Moments,
    /// Weighted mean of L_C, or of ln Σ_H exp(-E) for the exact engine.
    pub clamped_objective: f64,
    /// L_F, the mixture bound total, or -ln Z for the exact engine.
    pub free_objective: f64,
    pub free_stages: Vec<StageTrace>,
    /// Distinct patterns whose clamped solve converged.
    pub clamped_converged: usize,
    pub free_converged: bool,
}

impl EStep {
    /// Pattern-averaged log-likelihood gradient estimate, laid out like [`Moments`].
    pub fn gradient(&self) -> Moments {
        &self.clamped_moments - &self.free_moments
    }

    /// Per-pattern estimate of ln P(V): clamped plus free objective.
    pub fn objective(&self) -> f64 {
        self.clamped_objective + self.free_objective
    }
}

fn check_dims(net: &Network, patterns: &PatternSet) -> Result<()> {
    if patterns.is_empty() {
        return Err(Error::InvalidConfig("no patterns".into()));
    }
    if patterns.n_visible() > net.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: net.n_nodes(),
            found: patterns.n_visible(),
        });
    }
    Ok(())
}

fn weighted_mean(items: impl Iterator<Item = (Moments, f64)>, total: f64, dim: usize) -> Moments {
    let mut acc = Array2::<f64>::zeros((dim, dim));
    for (m, c) in items {
        acc.scaled_add(c, &m);
    }
    acc / total
}

/// Inference for one iteration: plain mean field per distinct pattern for the
/// clamped phase and the configured engine for the free phase.
///
/// Fresh variational means are drawn from `rng`, clamped patterns first in
/// pattern order, then the free phase. `warm_start` is used only when
/// `carry_over_free` is set and its kind matches the engine.
pub fn e_step<R: Rng + ?Sized>(
    net: &Network,
    patterns: &PatternSet,
    config: &TrainConfig,
    rng: &mut R,
    warm_start: Option<&FreePhase>,
) -> Result<EStep> {
    check_dims(net, patterns)?;
    let n = net.n_nodes();
    let clamps = patterns.clamps(n)?;
    let counts: Vec<f64> = patterns.iter().map(|(_, c)| c as f64).collect();
    let total = patterns.total() as f64;
    let unit = Temperature::UNIT;

    if config.engine == Engine::Exact {
        let per: Vec<(Moments, f64)> = clamps
            .par_iter()
            .map(|c| {
                Ok((
                    exact_pair_correlations(net, unit, Some(c))?,
                    log_clamped_partition(net, Some(c), unit)?,
                ))
            })
            .collect::<Result<_>>()?;
        let clamped_objective = per.iter().zip(&counts).map(|((_, l), c)| l * c).sum::<f64>() / total;
        let clamped_moments = weighted_mean(per.into_iter().zip(counts.iter().copied()).map(|((m, _), c)| (m, c)), total, n + 1);
        return Ok(EStep {
            clamped: Vec::new(),
            clamped_moments,
            free: FreePhase::Exact,
            free_moments: exact_pair_correlations(net, unit, None)?,
            clamped_objective,
            free_objective: -log_partition(net, unit)?,
            free_stages: Vec::new(),
            clamped_converged: clamps.len(),
            free_converged: true,
        });
    }

    let inits: Vec<MeanFieldParams> = clamps
        .iter()
        .map(|c| MeanFieldParams::random(n, Some(c.clone()), rng))
        .collect::<Result<_>>()?;
    let solved: Vec<_> = inits
        .into_par_iter()
        .zip(clamps.par_iter())
        .map(|(init, c)| solve_clamped(net, c, init, config))
        .collect::<Result<_>>()?;
    let clamped_converged = solved.iter().filter(|s| s.converged()).count();
    let clamped_objective = solved.iter().zip(&counts).map(|(s, c)| s.objective() * c).sum::<f64>() / total;
    let clamped: Vec<MeanFieldParams> = solved.into_iter().map(|s| s.params).collect();
    let clamped_moments = weighted_mean(clamped.iter().map(|p| p.moments()).zip(counts.iter().copied()), total, n + 1);

    let warm = warm_start.filter(|_| config.carry_over_free);
    let (free, free_moments, free_objective, free_stages, free_converged) = match config.engine {
        Engine::MeanField => {
            let init = match warm {
                Some(FreePhase::MeanField(p)) if p.len() == n => p.clone(),
                _ => MeanFieldParams::random(n, None, rng)?,
            };
            let sol = mf_anneal(net, None, &config.anneal, init, &config.fixed_point)?;
            let (conv, obj) = (sol.converged(), sol.objective());
            let moments = sol.params.moments();
            (FreePhase::MeanField(sol.params), moments, obj, sol.stages, conv)
        }
        Engine::Mixture { n_components } => {
            let init = match warm {
                Some(FreePhase::Mixture(p)) if p.n_nodes() == n && p.n_components() == n_components => p.clone(),
                _ => MixtureParams::initialize(n, n_components, rng)?,
            };
            let sol = optimize_mixture(net, &config.anneal, init, &config.mixture_settings())?;
            let (conv, obj) = (sol.converged(), sol.objective());
            let moments = mixture_pair_correlations(&sol.params);
            (FreePhase::Mixture(sol.params), moments, obj, sol.stages, conv)
        }
        Engine::Exact => unreachable!(),
    };
    Ok(EStep {
        clamped,
        clamped_moments,
        free,
        free_moments,
        clamped_objective,
        free_objective,
        free_stages,
        clamped_converged,
        free_converged,
    })
}

fn solve_clamped(
    net: &Network,
    clamp: &ClampPattern,
    init: MeanFieldParams,
    config: &TrainConfig,
) -> Result<crate::meanfield::MeanFieldSolution> {
    if config.anneal_clamped {
        mf_anneal(net, Some(clamp), &config.anneal, init, &config.fixed_point)
    } else {
        mf_fixed_point(net, Some(clamp), Temperature::UNIT, init, &config.fixed_point)
    }
}

/// Gradient ascent step on the permitted adjacency: w_ij += lr · g(i+1, j+1)
/// and b_i += lr · g(0, i+1).
pub fn m_step(net: &Network, gradient: &Moments, learning_rate: f64) -> Result<Network> {
    let n = net.n_nodes();
    if gradient.dim() != (n + 1, n + 1) {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            found: gradient.nrows(),
        });
    }
    let mut next = net.clone();
    for (i, j) in net.edges() {
        next.set_weight(i, j, net.weight(i, j) + learning_rate * gradient[[i + 1, j + 1]])?;
    }
    for i in 0..n {
        next.set_bias(i, net.bias(i) + learning_rate * gradient[[0, i + 1]]);
    }
    Ok(next)
}

fn gradient_norm(net: &Network, g: &Moments) -> f64 {
    let w: f64 = net.edges().iter().map(|&(i, j)| g[[i + 1, j + 1]].powi(2)).sum();
    let b: f64 = (0..net.n_nodes()).map(|i| g[[0, i + 1]].powi(2)).sum();
    (w + b).sqrt()
}

/// KL(empirical ‖ model marginal over the visible nodes).
pub fn model_visible_kl(net: &Network, patterns: &PatternSet, t: Temperature) -> Result<f64> {
    check_dims(net, patterns)?;
    let q = visible_marginals(net, patterns.n_visible(), t)?;
    kl_divergence_discrete(&patterns.empirical_distribution(), &q)
}

/// Exact per-pattern average of ln P(V_n).
fn mean_log_likelihood(net: &Network, patterns: &PatternSet) -> Result<f64> {
    let log_z = log_partition(net, Temperature::UNIT)?;
    let clamps = patterns.clamps(net.n_nodes())?;
    let mut acc = 0.0;
    for (c, (_, k)) in clamps.iter().zip(patterns.iter()) {
        acc += k as f64 * (log_clamped_partition(net, Some(c), Temperature::UNIT)? - log_z);
    }
    Ok(acc / patterns.total() as f64)
}

/// Metrics for one learning iteration, computed on the network the E-step saw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: usize,
    pub objective: f64,
    pub clamped_objective: f64,
    pub free_objective: f64,
    /// Exact mean ln P(V) when the net is small enough to enumerate.
    pub log_likelihood: Option<f64>,
    pub kl: Option<f64>,
    pub gradient_norm: f64,
    pub clamped_converged: usize,
    pub n_distinct: usize,
    pub free_converged: bool,
    pub floor_hits: u64,
    pub network: NetworkFile,
    pub free_phase: FreePhase,
    pub free_stages: Vec<StageTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: TrainConfig,
    pub rows: Vec<IterationRow>,
    pub final_network: NetworkFile,
}

/// Train from a network drawn by [`init_network_with`] on the config's seeded generator.
pub fn train(topology: &Topology, patterns: &PatternSet, config: &TrainConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let net = init_network_with(topology, config.init_weight_std, &mut rng)?;
    run(net, patterns, config, &mut rng)
}

/// Train from a given starting network; variational draws still come from
/// a generator seeded with `config.seed`.
pub fn train_from(net: Network, patterns: &PatternSet, config: &TrainConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run(net, patterns, config, &mut rng)
}

fn run(mut net: Network, patterns: &PatternSet, config: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<RunRecord> {
    check_dims(&net, patterns)?;
    let enumerable = net.n_nodes() <= ENUMERATION_LIMIT;
    let mut rows = Vec::with_capacity(config.n_iterations);
    let mut warm: Option<FreePhase> = None;
    for iteration in 0..config.n_iterations {
        let step = e_step(&net, patterns, config, rng, warm.as_ref())?;
        let gradient = step.gradient();
        let (log_likelihood, kl) = if enumerable {
            (
                Some(mean_log_likelihood(&net, patterns)?),
                Some(model_visible_kl(&net, patterns, Temperature::UNIT)?),
            )
        } else {
            (None, None)
        };
        rows.push(IterationRow {
            iteration,
            objective: step.objective(),
            clamped_objective: step.clamped_objective,
            free_objective: step.free_objective,
            log_likelihood,
            kl,
            gradient_norm: gradient_norm(&net, &gradient),
            clamped_converged: step.clamped_converged,
            n_distinct: patterns.n_distinct(),
            free_converged: step.free_converged,
            floor_hits: step.free.floor_hits(),
            network: net.to_file(),
            free_phase: step.free.clone(),
            free_stages: step.free_stages,
        });
        net = m_step(&net, &gradient, config.learning_rate)?;
        warm = Some(step.free);
    }
    Ok(RunRecord {
        config: config.clone(),
        rows,
        final_network: net.to_file(),
    })
}

/// Fixed leading columns of [`RunRecord::write_csv`].
pub const RUN_CSV_COLUMNS: [&str; 11] = [
    "iteration",
    "objective",
    "clamped_objective",
    "free_objective",
    "log_likelihood",
    "kl",
    "gradient_norm",
    "clamped_converged",
    "n_distinct",
    "free_converged",
    "floor_hits",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunRecord {
    pub fn engine(&self) -> Engine {
        self.config.engine
    }

    /// Header: [`RUN_CSV_COLUMNS`], then `w_i_j` per edge and `b_i` per node
    /// (1-based). Parameters are those the iteration's E-step used.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = RUN_CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
        h.extend(
            self.final_network
                .edges
                .iter()
                .map(|&(i, j, _)| format!("w_{i}_{j}")),
        );
        h.extend((1..=self.final_network.biases.len()).map(|i| format!("b_{i}")));
        h
    }

    /// One row per iteration, matching [`RunRecord::csv_header`].
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut rec = vec![
                    r.iteration.to_string(),
                    r.objective.to_string(),
                    r.clamped_objective.to_string(),
                    r.free_objective.to_string(),
                    opt(r.log_likelihood),
                    opt(r.kl),
                    r.gradient_norm.to_string(),
                    r.clamped_converged.to_string(),
                    r.n_distinct.to_string(),
                    r.free_converged.to_string(),
                    r.floor_hits.to_string(),
                ];
                rec.extend(r.network.edges.iter().map(|e| e.2.to_string()));
                rec.extend(r.network.biases.iter().map(|b| b.to_string()));
                rec
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.csv_header())?;
        for rec in self.csv_rows() {
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Per-iteration values of a column extracted from the rows.
    pub fn trace(&self, f: impl Fn(&IterationRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}
