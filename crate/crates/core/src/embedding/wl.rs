//! Structure-only graph embedding: WL subtree colors hashed into a
//! fixed-width count histogram. Deterministic and training-free, and
//! deliberately blind to the problem class.

use crate::graph::{wl_colors, GraphInstance};
use crate::rng::fnv1a_combine;

pub const WL_EMBED_DIM: usize = 48;

/// WL color refinement for `iterations` rounds; the multiset of subtree
/// colors across all rounds is feature-hashed into a `dim` count vector
/// and l2-normalized.
pub fn wl_embed_with(g: &GraphInstance, dim: usize, iterations: usize) -> Vec<f64> {
    let mut histogram = vec![0.0f64; dim];
    for round in wl_colors(g, iterations) {
        for color in round {
            let bucket = (fnv1a_combine(0x9e37_79b9_7f4a_7c15, color) % dim as u64) as usize;
            histogram[bucket] += 1.0;
        }
    }
    let norm = histogram.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut histogram {
            *v /= norm;
        }
    }
    histogram
}

/// Default 48-dim, 3-iteration WL embedding.
pub fn wl_embed(g: &GraphInstance) -> Vec<f64> {
    wl_embed_with(g, WL_EMBED_DIM, 3)
}
