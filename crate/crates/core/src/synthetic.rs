//! Seeded synthetic graphs for tests and desk-scale experiments.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::graph::{AttributedGraph, Edge};
use crate::matrix::Matrix;
use crate::seed::{self, Rng};

/// Stochastic block model: each pair inside a block is an edge with
/// probability `p_in`, each pair across blocks with probability `p_out`.
///
/// Returns the canonical edge list and the block label of every node.
pub fn sbm_edges(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    rng: &mut Rng,
) -> (Vec<Edge>, Vec<usize>) {
    let labels: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    (edges, labels)
}

/// SBM graph whose features carry a class signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub num_features: usize,
    /// Number of leading features whose mean depends on the class.
    pub informative: usize,
    /// Class-mean separation on informative features, in noise standard deviations.
    pub signal: f64,
    pub seed: u64,
}

impl SbmSpec {
    pub fn two_block(nodes_per_block: usize, seed: u64) -> Self {
        Self {
            block_sizes: vec![nodes_per_block; 2],
            p_in: 0.05,
            p_out: 0.005,
            num_features: 16,
            informative: 8,
            signal: 0.4,
            seed,
        }
    }

    pub fn generate(&self) -> Result<AttributedGraph> {
        let mut rng = seed::rng(self.seed);
        let (edges, labels) = sbm_edges(&self.block_sizes, self.p_in, self.p_out, &mut rng);
        let num_classes = self.block_sizes.len();
        // Per-class mean pattern of ±signal/2 on the informative features.
        let means: Vec<Vec<f64>> = (0..num_classes)
            .map(|_| {
                (0..self.informative)
                    .map(|_| if rng.gen_bool(0.5) { 0.5 } else { -0.5 } * self.signal)
                    .collect()
            })
            .collect();
        let mut x = Matrix::zeros(labels.len(), self.num_features);
        for (i, &c) in labels.iter().enumerate() {
            for j in 0..self.num_features {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let mean = if j < self.informative {
                    means[c][j]
                } else {
                    0.0
                };
                x[(i, j)] = mean + noise;
            }
        }
        AttributedGraph::new(x, &edges, Some(labels))
    }
}

/// Two-class homophilous graph where feature 0 is the class label plus small
/// noise and every other feature is pure noise.
pub fn planted_signal(num_nodes: usize, num_features: usize, seed: u64) -> Result<AttributedGraph> {
    let mut rng = seed::rng(seed);
    let half = num_nodes / 2;
    let (edges, labels) = sbm_edges(&[half, num_nodes - half], 0.04, 0.004, &mut rng);
    let mut x = Matrix::zeros(num_nodes, num_features);
    for (i, &c) in labels.iter().enumerate() {
        for j in 0..num_features {
            let noise: f64 = StandardNormal.sample(&mut rng);
            x[(i, j)] = if j == 0 {
                c as f64 + 0.25 * noise
            } else {
                noise
            };
        }
    }
    AttributedGraph::new(x, &edges, Some(labels))
}
