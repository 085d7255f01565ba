//! Naive mean field theory: factorized variational distributions, the
//! clamped and free objectives, sequential tanh fixed-point iteration and
//! deterministic annealing.
//!
//! Temperature is applied by dividing the couplings and biases, so every
//! equation below is the T = 1 form evaluated on `w / T`, `b / T`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{factorized_moments, ClampPattern, Moments, Network, Temperature};

/// Half-width of the interval used for fresh variational means.
pub const INIT_HALF_WIDTH: f64 = 0.1;

/// Per-node means of a factorized distribution, with optionally clamped
/// entries frozen at their observed ±1 values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldParams {
    means: Vec<f64>,
    clamp: Option<ClampPattern>,
}

impl MeanFieldParams {
    pub fn new(means: Vec<f64>, clamp: Option<ClampPattern>) -> Result<Self> {
        for (i, &m) in means.iter().enumerate() {
            if !(-1.0..=1.0).contains(&m) {
                return Err(Error::InvalidMean { node: i, value: m });
            }
        }
        if let Some(c) = &clamp {
            if c.len() != means.len() {
                return Err(Error::LengthMismatch {
                    expected: means.len(),
                    found: c.len(),
                });
            }
            for i in c.clamped_nodes() {
                let v = c.value(i).unwrap() as f64;
                if means[i] != v {
                    return Err(Error::InvalidMean {
                        node: i,
                        value: means[i],
                    });
                }
            }
        }
        Ok(Self { means, clamp })
    }

    pub fn free(means: Vec<f64>) -> Result<Self> {
        Self::new(means, None)
    }

    /// Clamped entries set to their observed values, free entries uniform
    /// on (-0.1, 0.1).
    pub fn random<R: Rng + ?Sized>(n: usize, clamp: Option<ClampPattern>, rng: &mut R) -> Result<Self> {
        let mut means: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-INIT_HALF_WIDTH..INIT_HALF_WIDTH))
            .collect();
        if let Some(c) = &clamp {
            if c.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: c.len(),
                });
            }
            for i in c.clamped_nodes() {
                means[i] = c.value(i).unwrap() as f64;
            }
        }
        Self::new(means, clamp)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn clamp(&self) -> Option<&ClampPattern> {
        self.clamp.as_ref()
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn is_free(&self, i: usize) -> bool {
        self.clamp.as_ref().is_none_or(|c| !c.is_clamped(i))
    }

    pub fn moments(&self) -> Moments {
        factorized_moments(&self.means)
    }
}

/// A strictly decreasing sequence of temperatures ending at T = 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AnnealSchedule {
    temperatures: Vec<f64>,
}

impl AnnealSchedule {
    pub fn new(temperatures: Vec<f64>) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::InvalidSchedule("empty".into()));
        }
        if temperatures.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::InvalidSchedule("temperatures must be positive".into()));
        }
        if temperatures.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule("must be strictly decreasing".into()));
        }
        if *temperatures.last().unwrap() != 1.0 {
            return Err(Error::InvalidSchedule("must end at T = 1".into()));
        }
        Ok(Self { temperatures })
    }

    /// No annealing: a single stage at T = 1.
    pub fn unit() -> Self {
        Self {
            temperatures: vec![1.0],
        }
    }

    /// `steps` temperatures spaced geometrically from `start` down to 1,
    /// both endpoints included.
    pub fn geometric(start: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidSchedule("zero steps".into()));
        }
        if steps == 1 {
            return Self::new(vec![1.0]);
        }
        let last = (steps - 1) as f64;
        let temps = (0..steps)
            .map(|k| if k + 1 == steps { 1.0 } else { start.powf(1.0 - k as f64 / last) })
            .collect();
        Self::new(temps)
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }
}

impl TryFrom<Vec<f64>> for AnnealSchedule {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AnnealSchedule> for Vec<f64> {
    fn from(s: AnnealSchedule) -> Self {
        s.temperatures
    }
}

/// Stopping rule for iterative inference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointSettings {
    pub max_sweeps: usize,
    /// Stop once |Δ objective| <= rel_tol · |objective|.
    pub rel_tol: f64,
    pub damping: f64,
}

impl Default for FixedPointSettings {
    fn default() -> Self {
        Self {
            max_sweeps: 20,
            rel_tol: 1e-4,
            damping: 0.0,
        }
    }
}

impl FixedPointSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidConfig("damping must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub(crate) fn converged(&self, previous: f64, current: f64) -> bool {
        let delta = (current - previous).abs();
        delta == 0.0 || delta <= self.rel_tol * previous.abs()
    }
}

/// Objective values recorded while solving at one temperature. `objectives[0]`
/// is the value at the starting point, followed by one entry per sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub temperature: f64,
    pub objectives: Vec<f64>,
    pub converged: bool,
}

impl StageTrace {
    pub fn sweeps(&self) -> usize {
        self.objectives.len() - 1
    }

    pub fn final_objective(&self) -> f64 {
        *self.objectives.last().unwrap()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldSolution {
    pub params: MeanFieldParams,
    pub stages: Vec<StageTrace>,
}

impl MeanFieldSolution {
    pub fn converged(&self) -> bool {
        self.stages.last().is_some_and(|s| s.converged)
    }

    pub fn objective(&self) -> f64 {
        self.stages.last().unwrap().final_objective()
    }
}

/// H(p) = -p ln p - (1-p) ln(1-p), with 0 ln 0 = 0.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: f64) -> f64 {
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    -xlnx(p) - xlnx(1.0 - p)
}

/// Entropy of a ±1 unit with mean `m`.
pub(crate) fn spin_entropy(m: f64) -> f64 {
    entropy_unchecked(0.5 * (1.0 + m))
}

/// Q(s_i = s) for a unit with mean `mean`.
pub fn mf_marginal_prob(mean: f64, s: i8) -> f64 {
    if s > 0 {
        0.5 * (1.0 + mean)
    } else {
        0.5 * (1.0 - mean)
    }
}

fn check_len(net: &Network, p: &MeanFieldParams) -> Result<()> {
    if p.len() != net.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: net.n_nodes(),
            found: p.len(),
        });
    }
    Ok(())
}

/// L_F(m) = E_Q[E/T] - H(Q), an upper bound on -ln Z(T).
pub fn mf_free_objective(net: &Network, m: &MeanFieldParams, t: Temperature) -> Result<f64> {
    check_len(net, m)?;
    Ok(free_objective(net, m.means(), t.value()))
}

pub(crate) fn free_objective(net: &Network, means: &[f64], t: f64) -> f64 {
    let entropy: f64 = means.iter().map(|&m| spin_entropy(m)).sum();
    net.energy_of(means) / t - entropy
}

/// L_C(μ) = -E_Q[E/T] + H(Q) over the free nodes; a lower bound on
/// ln Σ_H exp(-E(H, V)/T).
pub fn mf_clamped_objective(net: &Network, mu: &MeanFieldParams, t: Temperature) -> Result<f64> {
    check_len(net, mu)?;
    Ok(clamped_objective(net, mu, t.value()))
}

fn clamped_objective(net: &Network, mu: &MeanFieldParams, t: f64) -> f64 {
    let entropy: f64 = (0..mu.len())
        .filter(|&i| mu.is_free(i))
        .map(|i| spin_entropy(mu.means[i]))
        .sum();
    -net.energy_of(&mu.means) / t + entropy
}

/// The objective a fixed-point solve minimizes: L_F for the free phase and
/// -L_C for a clamped one.
fn phase_cost(net: &Network, p: &MeanFieldParams, t: f64) -> f64 {
    match p.clamp {
        None => free_objective(net, &p.means, t),
        Some(_) => -clamped_objective(net, p, t),
    }
}

fn phase_value(p: &MeanFieldParams, cost: f64) -> f64 {
    if p.clamp.is_some() {
        -cost
    } else {
        cost
    }
}

/// One sequential pass of m_i <- tanh((Σ_j w_ij m_j + b_i) / T) over the free nodes.
fn sweep(net: &Network, p: &mut MeanFieldParams, t: f64, damping: f64) {
    for i in 0..p.means.len() {
        if !p.is_free(i) {
            continue;
        }
        let target = (net.local_field(i, &p.means) / t).tanh();
        p.means[i] = if damping > 0.0 {
            (1.0 - damping) * target + damping * p.means[i]
        } else {
            target
        };
    }
}

fn check_clamp(init: &MeanFieldParams, clamp: Option<&ClampPattern>) -> Result<()> {
    if init.clamp.as_ref() != clamp {
        return Err(Error::InvalidConfig(
            "initial parameters carry a different clamp pattern".into(),
        ));
    }
    Ok(())
}

/// Solve the mean-field equations at temperature `t` by sequential sweeps.
///
/// The recorded objective is L_F for the free phase and L_C for a clamped
/// one. Non-convergence within `max_sweeps` is reported on the trace.
pub fn mf_fixed_point(
    net: &Network,
    clamp: Option<&ClampPattern>,
    t: Temperature,
    init: MeanFieldParams,
    settings: &FixedPointSettings,
) -> Result<MeanFieldSolution> {
    check_len(net, &init)?;
    check_clamp(&init, clamp)?;
    settings.validate()?;
    let (params, stage) = solve_stage(net, t.value(), init, settings);
    Ok(MeanFieldSolution {
        params,
        stages: vec![stage],
    })
}

fn solve_stage(
    net: &Network,
    t: f64,
    mut p: MeanFieldParams,
    settings: &FixedPointSettings,
) -> (MeanFieldParams, StageTrace) {
    let mut cost = phase_cost(net, &p, t);
    let mut objectives = vec![phase_value(&p, cost)];
    let mut converged = false;
    for _ in 0..settings.max_sweeps {
        sweep(net, &mut p, t, settings.damping);
        let next = phase_cost(net, &p, t);
        objectives.push(phase_value(&p, next));
        let done = settings.converged(cost, next);
        cost = next;
        if done {
            converged = true;
            break;
        }
    }
    let stage = StageTrace {
        temperature: t,
        objectives,
        converged,
    };
    (p, stage)
}

/// Run [`mf_fixed_point`] at each temperature of `schedule`, warm-starting
/// every stage from the previous result.
pub fn mf_anneal(
    net: &Network,
    clamp: Option<&ClampPattern>,
    schedule: &AnnealSchedule,
    init: MeanFieldParams,
    settings: &FixedPointSettings,
) -> Result<MeanFieldSolution> {
    check_len(net, &init)?;
    check_clamp(&init, clamp)?;
    settings.validate()?;
    let mut p = init;
    let mut stages = Vec::with_capacity(schedule.temperatures().len());
    for &t in schedule.temperatures() {
        let (next, stage) = solve_stage(net, t, p, settings);
        p = next;
        stages.push(stage);
    }
    Ok(MeanFieldSolution { params: p, stages })
}

/// Pattern-averaged μ_i μ_j minus m_i m_j, with the bias column via s_0 = 1.
pub fn mf_learning_gradient(mu_per_pattern: &[MeanFieldParams], m: &MeanFieldParams) -> Result<Moments> {
    Ok(mean_moments(mu_per_pattern)? - m.moments())
}

pub(crate) fn mean_moments(params: &[MeanFieldParams]) -> Result<Moments> {
    let first = params
        .first()
        .ok_or_else(|| Error::InvalidConfig("no patterns".into()))?;
    let mut acc = first.moments();
    for p in &params[1..] {
        if p.len() != first.len() {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                found: p.len(),
            });
        }
        acc += &p.moments();
    }
    Ok(acc / params.len() as f64)
}
