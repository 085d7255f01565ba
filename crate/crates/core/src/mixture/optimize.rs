use serde::{Deserialize, Serialize};

use super::bound::{bound_with, Overlaps};
use super::params::MixtureParams;
use super::update::{alpha_step, means_pass, set_lambdas, smoothing_pass};
use crate::error::{Error, Result};
use crate::meanfield::{AnnealSchedule, FixedPointSettings, StageTrace};
use crate::model::Network;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateStep {
    Means,
    Smoothing,
    Lambdas,
    Alphas,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixtureSettings {
    /// `max_sweeps` bounds the number of full update cycles per temperature.
    pub fixed_point: FixedPointSettings,
    pub order: Vec<UpdateStep>,
}

impl Default for MixtureSettings {
    fn default() -> Self {
        Self {
            fixed_point: FixedPointSettings::default(),
            order: vec![
                UpdateStep::Means,
                UpdateStep::Smoothing,
                UpdateStep::Lambdas,
                UpdateStep::Alphas,
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSolution {
    pub params: MixtureParams,
    /// Bound totals per temperature: the starting value, then one per cycle.
    pub stages: Vec<StageTrace>,
}

impl MixtureSolution {
    pub fn converged(&self) -> bool {
        self.stages.last().is_some_and(|s| s.converged)
    }

    pub fn objective(&self) -> f64 {
        self.stages.last().unwrap().final_objective()
    }
}

/// Apply one cycle of block updates in `order`.
pub(crate) fn cycle(p: &mut MixtureParams, net: &Network, t: f64, order: &[UpdateStep]) {
    let mut ov = Overlaps::new(p);
    for step in order {
        match step {
            UpdateStep::Means => means_pass(p, net, t, &mut ov),
            UpdateStep::Smoothing => smoothing_pass(p, &mut ov),
            UpdateStep::Lambdas => set_lambdas(p, &ov),
            UpdateStep::Alphas => alpha_step(p, net, t, &ov),
        }
    }
}

fn total(p: &MixtureParams, net: &Network, t: f64) -> f64 {
    bound_with(p, net, t, &Overlaps::new(p)).total
}

/// Coordinate descent on the mixture bound, annealed over `schedule` with
/// each temperature warm-started from the previous one. At every temperature,
/// cycles run until the relative change of the bound falls to `rel_tol` or
/// `max_sweeps` cycles have run.
pub fn optimize_mixture(
    net: &Network,
    schedule: &AnnealSchedule,
    init: MixtureParams,
    settings: &MixtureSettings,
) -> Result<MixtureSolution> {
    if init.n_nodes() != net.n_nodes() {
        return Err(Error::LengthMismatch {
            expected: net.n_nodes(),
            found: init.n_nodes(),
        });
    }
    settings.fixed_point.validate()?;
    if settings.order.is_empty() {
        return Err(Error::InvalidConfig("empty update order".into()));
    }
    let fp = &settings.fixed_point;
    let mut p = init;
    let mut stages = Vec::with_capacity(schedule.temperatures().len());
    for &t in schedule.temperatures() {
        let mut current = total(&p, net, t);
        let mut objectives = vec![current];
        let mut converged = false;
        for _ in 0..fp.max_sweeps {
            cycle(&mut p, net, t, &settings.order);
            let next = total(&p, net, t);
            objectives.push(next);
            let done = fp.converged(current, next);
            current = next;
            if done {
                converged = true;
                break;
            }
        }
        stages.push(StageTrace {
            temperature: t,
            objectives,
            converged,
        });
    }
    Ok(MixtureSolution { params: p, stages })
}
