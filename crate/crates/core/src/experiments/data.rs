use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Network, PatternSet, Topology};

const PROTOTYPE_ART: &str = include_str!("prototypes.txt");
pub const N_PROTOTYPES: usize = 10;
pub const PROTOTYPE_SIDE: usize = 8;

// Independent ChaCha streams derived from one experiment seed.
pub(crate) const STREAM_DATA: u64 = 1;
pub(crate) const STREAM_NETS: u64 = 2;
pub(crate) const STREAM_INFERENCE: u64 = 1 << 32;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The 8x8 class prototypes, row-major, in class order.
pub fn prototypes() -> Vec<Vec<i8>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for line in PROTOTYPE_ART.lines().map(str::trim) {
        if line.starts_with(';') {
            continue;
        }
        if line.is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.extend(line.chars().map(|c| if c == '#' { 1i8 } else { -1 }));
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Nearest-neighbour resample of a square prototype onto `grid`.
fn resample(proto: &[i8], grid: (usize, usize)) -> Vec<i8> {
    let (rows, cols) = grid;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let pr = r * PROTOTYPE_SIDE / rows;
            let pc = c * PROTOTYPE_SIDE / cols;
            out.push(proto[pr * PROTOTYPE_SIDE + pc]);
        }
    }
    out
}

/// Noisy copies of the first `classes` prototypes, `count_per_class` each,
/// with every pixel flipped independently with probability `flip_prob`.
/// Also returns the class label of every generated image, in generation order.
pub fn gen_labelled_images(
    count_per_class: usize,
    classes: usize,
    grid: (usize, usize),
    flip_prob: f64,
    seed: u64,
) -> Result<(Vec<Vec<i8>>, Vec<usize>)> {
    if classes == 0 || classes > N_PROTOTYPES {
        return Err(Error::InvalidConfig(format!("classes must lie in 1..={N_PROTOTYPES}")));
    }
    if grid.0 == 0 || grid.1 == 0 {
        return Err(Error::InvalidConfig("grid must be non-empty".into()));
    }
    if !(0.0..=1.0).contains(&flip_prob) {
        return Err(Error::InvalidProbability(flip_prob));
    }
    let protos = prototypes();
    let mut rng = stream_rng(seed, STREAM_DATA);
    let mut images = Vec::with_capacity(count_per_class * classes);
    let mut labels = Vec::with_capacity(count_per_class * classes);
    for (class, proto) in protos.iter().take(classes).enumerate() {
        let base = resample(proto, grid);
        for _ in 0..count_per_class {
            images.push(
                base.iter()
                    .map(|&v| if rng.random_bool(flip_prob) { -v } else { v })
                    .collect(),
            );
            labels.push(class);
        }
    }
    Ok((images, labels))
}

pub fn gen_synthetic_images(
    count_per_class: usize,
    classes: usize,
    grid: (usize, usize),
    flip_prob: f64,
    seed: u64,
) -> Result<PatternSet> {
    let (images, _) = gen_labelled_images(count_per_class, classes, grid, flip_prob, seed)?;
    let mut set = PatternSet::from_patterns(images)?;
    set.grid = Some(grid);
    Ok(set)
}

/// Fully connected nets with every weight and bias uniform on
/// [low, high).
pub fn gen_random_nets(count: usize, n_nodes: usize, param_range: [f64; 2], seed: u64) -> Result<Vec<Network>> {
    let [lo, hi] = param_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidConfig("param_range must be a finite [low, high] pair".into()));
    }
    let mut rng = stream_rng(seed, STREAM_NETS);
    let mut draw = move || if lo == hi { lo } else { rng.random_range(lo..hi) };
    (0..count)
        .map(|_| {
            let mut net = Network::fully_connected(n_nodes);
            for (i, j) in net.edges() {
                net.set_weight(i, j, draw())?;
            }
            for i in 0..n_nodes {
                net.set_bias(i, draw());
            }
            Ok(net)
        })
        .collect()
}

/// Visible grid nodes first (row-major), then the hidden nodes. Each visible
/// node links to its horizontal, vertical and diagonal neighbours; hidden
/// nodes link to each other and to every visible node.
pub fn image_topology(grid: (usize, usize), n_hidden: usize) -> Result<Topology> {
    let (rows, cols) = grid;
    let n_visible = rows * cols;
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((idx(r, c), idx(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((idx(r, c), idx(r + 1, c)));
                if c + 1 < cols {
                    edges.push((idx(r, c), idx(r + 1, c + 1)));
                }
                if c > 0 {
                    edges.push((idx(r, c), idx(r + 1, c - 1)));
                }
            }
        }
    }
    for h in n_visible..n_visible + n_hidden {
        for v in 0..n_visible {
            edges.push((v, h));
        }
        for h2 in h + 1..n_visible + n_hidden {
            edges.push((h, h2));
        }
    }
    Topology::new(n_visible + n_hidden, edges)
}

/// Two copies of (1, 1) and one of (-1, -1).
pub fn toy_patterns() -> PatternSet {
    PatternSet::from_patterns([vec![1, 1], vec![1, 1], vec![-1, -1]]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prototypes_parse() {
        let p = prototypes();
        assert_eq!(p.len(), N_PROTOTYPES);
        for (k, proto) in p.iter().enumerate() {
            assert_eq!(proto.len(), 64, "prototype {k}");
        }
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                assert_ne!(p[i], p[j]);
            }
        }
    }

    #[test]
    fn zero_noise_reproduces_prototypes() {
        let (images, labels) = gen_labelled_images(3, 10, (8, 8), 0.0, 1).unwrap();
        let p = prototypes();
        for (img, &l) in images.iter().zip(&labels) {
            assert_eq!(img, &p[l]);
        }
        let set = gen_synthetic_images(3, 10, (8, 8), 0.0, 1).unwrap();
        assert_eq!(set.n_distinct(), 10);
        assert_eq!(set.total(), 30);
        assert_eq!(set.grid, Some((8, 8)));
    }

    #[test]
    fn full_scale_count() {
        let set = gen_synthetic_images(700, 10, (8, 8), 0.05, 3).unwrap();
        assert_eq!(set.total(), 7000);
    }

    #[test]
    fn hamming_distance_is_binomial() {
        let flip = 0.05;
        let (images, labels) = gen_labelled_images(100, 10, (8, 8), flip, 4).unwrap();
        let p = prototypes();
        let n = images.len() as f64;
        let mean = images
            .iter()
            .zip(&labels)
            .map(|(img, &l)| img.iter().zip(&p[l]).filter(|(a, b)| a != b).count() as f64)
            .sum::<f64>()
            / n;
        let expected = 64.0 * flip;
        let sigma = (64.0 * flip * (1.0 - flip) / n).sqrt();
        assert!((mean - expected).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn images_deterministic() {
        assert_eq!(
            gen_synthetic_images(5, 4, (8, 8), 0.1, 7).unwrap(),
            gen_synthetic_images(5, 4, (8, 8), 0.1, 7).unwrap()
        );
        assert!(gen_synthetic_images(1, 11, (8, 8), 0.1, 7).is_err());
    }

    #[test]
    fn random_nets() {
        let nets = gen_random_nets(4, 10, [-1.0, 1.0], 5).unwrap();
        assert_eq!(nets.len(), 4);
        for net in &nets {
            assert_eq!(net.n_parameters(), 55);
            assert!(net.weights().iter().all(|w| (-1.0..1.0).contains(w)));
        }
        assert_eq!(nets, gen_random_nets(4, 10, [-1.0, 1.0], 5).unwrap());
        assert_ne!(nets, gen_random_nets(4, 10, [-1.0, 1.0], 6).unwrap());
        let zero = gen_random_nets(2, 5, [0.0, 0.0], 5).unwrap();
        assert!(zero.iter().all(|n| n.weights().iter().all(|&w| w == 0.0) && n.biases().iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn image_topology_counts() {
        let top = image_topology((8, 8), 10).unwrap();
        assert_eq!(top.n_nodes(), 74);
        let edges = top.edges();
        let grid = edges.iter().filter(|&&(i, j)| i < 64 && j < 64).count();
        let hh = edges.iter().filter(|&&(i, _)| i >= 64).count();
        let hv = edges.iter().filter(|&&(i, j)| i < 64 && j >= 64).count();
        assert_eq!((grid, hh, hv), (210, 45, 640));
        let net = Network::zeros(&top);
        assert_eq!(net.n_parameters(), 210 + 45 + 640 + 74);
    }

    #[test]
    fn image_topology_matches_neighbourhood_oracle() {
        // Independent check: two grid cells are linked iff their Chebyshev
        // distance is exactly 1.
        let top = image_topology((8, 8), 0).unwrap();
        for a in 0..64usize {
            for b in a + 1..64 {
                let (ra, ca) = ((a / 8) as i64, (a % 8) as i64);
                let (rb, cb) = ((b / 8) as i64, (b % 8) as i64);
                let linked = (ra - rb).abs().max((ca - cb).abs()) == 1;
                assert_eq!(top.edges().contains(&(a, b)), linked, "{a} {b}");
            }
        }
    }

    #[test]
    fn toy_distribution() {
        let p = toy_patterns().empirical_distribution();
        assert!((p[0b11] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[0b00] - 1.0 / 3.0).abs() < 1e-15);
    }
}
