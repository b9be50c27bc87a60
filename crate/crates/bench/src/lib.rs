//! Shared fixtures for the benchmarks.

use cliquesum::generate::{generate_instance, GenParams};
use cliquesum::Graph;

/// Generated instances at the acceptance size limits.
pub fn instances(seeds: std::ops::Range<u64>, bipartite: bool) -> Vec<Graph> {
    let p = GenParams { thin_prob: 0.3, bipartite, ..GenParams::default() };
    seeds.map(|s| generate_instance(s, &p).graph).collect()
}

/// One instance of roughly `n` vertices.
pub fn sized(n: usize, seed: u64) -> Graph {
    let p = GenParams { total_max: n, pieces: (n / 5).max(1), thin_prob: 0.3, ..GenParams::default() };
    generate_instance(seed, &p).graph
}
