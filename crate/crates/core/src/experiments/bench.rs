use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::InferenceBenchConfig;
use super::data::{gen_random_nets, stream_rng, STREAM_INFERENCE};
use crate::error::Result;
use crate::mixture::{mixture_pair_correlations, optimize_mixture, MixtureParams};
use crate::model::{exact_pair_correlations, Moments, Network, Temperature};

/// Fixed-width histogram with explicit under/overflow counts. Bin k covers
/// [edge(k), edge(k + 1)); the top edge is included in the last bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub low: f64,
    pub high: f64,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    /// [-1, 1] in bins of width 0.05.
    pub fn differences() -> Self {
        Self::new(-1.0, 1.0, 40)
    }

    pub fn new(low: f64, high: f64, n_bins: usize) -> Self {
        Self {
            low,
            high,
            counts: vec![0; n_bins],
            below: 0,
            above: 0,
        }
    }

    pub fn edge(&self, k: usize) -> f64 {
        let n = self.counts.len() as f64;
        (self.low * (n - k as f64) + self.high * k as f64) / n
    }

    pub fn push(&mut self, x: f64) {
        if x < self.low {
            self.below += 1;
        } else if x > self.high {
            self.above += 1;
        } else {
            let n = self.counts.len();
            let k = ((x - self.low) * n as f64 / (self.high - self.low)).floor() as usize;
            self.counts[k.min(n - 1)] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }
}

/// Entries compared per net: every pair a < b of moment indices, where
/// index 0 is the bias unit. For L nodes that is L(L+1)/2 entries.
pub fn moment_pairs(n_nodes: usize) -> Vec<(usize, usize)> {
    (0..=n_nodes)
        .flat_map(|a| (a + 1..=n_nodes).map(move |b| (a, b)))
        .collect()
}

/// Approximate minus exact moments over [`moment_pairs`].
pub fn moment_differences(approx: &Moments, exact: &Moments) -> Vec<f64> {
    moment_pairs(approx.nrows() - 1)
        .into_iter()
        .map(|(a, b)| approx[[a, b]] - exact[[a, b]])
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRun {
    pub n_components: usize,
    pub differences: Vec<f64>,
    pub sse: f64,
    pub bound: f64,
    pub converged: bool,
    pub floor_hits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetRun {
    pub net: usize,
    pub log_partition: f64,
    pub runs: Vec<ComponentRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceBenchResult {
    pub components: Vec<usize>,
    pub nets: Vec<NetRun>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl InferenceBenchResult {
    /// SSE of every net for the `k`-th entry of `components`.
    pub fn sse_column(&self, k: usize) -> Vec<f64> {
        self.nets.iter().map(|n| n.runs[k].sse).collect()
    }

    pub fn median_sse(&self) -> Vec<f64> {
        (0..self.components.len()).map(|k| median(self.sse_column(k))).collect()
    }

    pub fn mean_sse(&self) -> Vec<f64> {
        (0..self.components.len())
            .map(|k| self.sse_column(k).iter().sum::<f64>() / self.nets.len() as f64)
            .collect()
    }

    pub fn histograms(&self) -> Vec<Histogram> {
        (0..self.components.len())
            .map(|k| {
                let mut h = Histogram::differences();
                for n in &self.nets {
                    n.runs[k].differences.iter().for_each(|&d| h.push(d));
                }
                h
            })
            .collect()
    }
}

/// Compare annealed mixture approximations of each size against exact
/// moments for one net. Initial means come from `rng`, one draw per size in
/// the order given.
pub fn bench_net<R: rand::Rng + ?Sized>(
    net: &Network,
    config: &InferenceBenchConfig,
    rng: &mut R,
) -> Result<(f64, Vec<ComponentRun>)> {
    let exact = exact_pair_correlations(net, Temperature::UNIT, None)?;
    let log_z = crate::model::log_partition(net, Temperature::UNIT)?;
    let mut runs = Vec::with_capacity(config.components.len());
    for &k in &config.components {
        let init = MixtureParams::initialize(net.n_nodes(), k, rng)?;
        let sol = optimize_mixture(net, &config.anneal, init, &config.mixture)?;
        let differences = moment_differences(&mixture_pair_correlations(&sol.params), &exact);
        runs.push(ComponentRun {
            n_components: k,
            sse: differences.iter().map(|d| d * d).sum(),
            differences,
            bound: sol.objective(),
            converged: sol.converged(),
            floor_hits: sol.params.floor_hits(),
        });
    }
    Ok((log_z, runs))
}

/// Random nets drawn from `seed`, each benchmarked on its own generator
/// stream so results do not depend on scheduling.
pub fn inference_bench(config: &InferenceBenchConfig, seed: u64) -> Result<InferenceBenchResult> {
    config.validate()?;
    let nets = gen_random_nets(config.n_nets, config.n_nodes, config.param_range, seed)?;
    let nets = nets
        .par_iter()
        .enumerate()
        .map(|(i, net)| {
            let mut rng = stream_rng(seed, STREAM_INFERENCE + i as u64);
            let (log_partition, runs) = bench_net(net, config, &mut rng)?;
            Ok(NetRun {
                net: i,
                log_partition,
                runs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InferenceBenchResult {
        components: config.components.clone(),
        nets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Topology;

    #[test]
    fn histogram_binning() {
        let mut h = Histogram::differences();
        assert_eq!(h.counts.len(), 40);
        assert_eq!(h.edge(0), -1.0);
        assert_eq!(h.edge(20), 0.0);
        assert_eq!(h.edge(40), 1.0);
        assert_eq!(h.edge(1), -0.95);
        for x in [-1.5, -1.0, -0.97, 0.0, 0.049, 0.05, 1.0, 1.2] {
            h.push(x);
        }
        assert_eq!(h.below, 1);
        assert_eq!(h.above, 1);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[20], 2);
        assert_eq!(h.counts[21], 1);
        assert_eq!(h.counts[39], 1);
        assert_eq!(h.total(), 8);
    }

    #[test]
    fn pair_count_matches_parameters() {
        assert_eq!(moment_pairs(10).len(), 55);
        assert_eq!(moment_pairs(10).len(), Network::fully_connected(10).n_parameters());
    }

    fn small_config(components: Vec<usize>) -> InferenceBenchConfig {
        InferenceBenchConfig {
            n_nets: 3,
            n_nodes: 6,
            components,
            ..InferenceBenchConfig::default()
        }
    }

    #[test]
    fn factorized_truth_gives_zero_differences() {
        let mut net = Network::zeros(&Topology::complete(5));
        for i in 0..5 {
            net.set_bias(i, 0.3 * i as f64 - 0.6);
        }
        let config = small_config(vec![1]);
        let (_, runs) = bench_net(&net, &config, &mut stream_rng(0, 0)).unwrap();
        assert!(runs[0].differences.iter().all(|d| d.abs() < 1e-6), "{:?}", runs[0].differences);
    }

    #[test]
    fn bimodal_net_prefers_two_components() {
        let mut net = Network::fully_connected(6);
        for (i, j) in net.edges() {
            net.set_weight(i, j, 0.8).unwrap();
        }
        let config = small_config(vec![1, 2]);
        let (_, runs) = bench_net(&net, &config, &mut stream_rng(1, 0)).unwrap();
        assert!(runs[1].sse < runs[0].sse, "{} vs {}", runs[1].sse, runs[0].sse);
    }

    #[test]
    fn differences_bounded_and_deterministic() {
        let config = small_config(vec![1, 3]);
        let a = inference_bench(&config, 11).unwrap();
        assert_eq!(a, inference_bench(&config, 11).unwrap());
        for n in &a.nets {
            for r in &n.runs {
                assert_eq!(r.differences.len(), 21);
                assert!(r.differences.iter().all(|d| (-2.0..=2.0).contains(d)));
                assert!(r.bound >= -n.log_partition - 1e-10);
            }
        }
        let h = a.histograms();
        assert_eq!(h[0].total(), 3 * 21);
        assert_eq!(a.median_sse().len(), 2);
    }
}
