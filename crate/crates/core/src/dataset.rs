//! Train/test datasets of pairwise non-isomorphic random connected graphs,
//! with a JSON-lines on-disk format.

use crate::graph::{are_isomorphic, generate_random_connected_graph, wl_hash, GraphError, GraphInstance};
use crate::rng::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset record: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("could not draw a non-isomorphic graph for index {0} within budget")]
    IsomorphismBudget(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<GraphInstance>,
    pub test: Vec<GraphInstance>,
}

impl Dataset {
    pub fn all(&self) -> impl Iterator<Item = &GraphInstance> {
        self.train.iter().chain(self.test.iter())
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    n: usize,
    edges: Vec<(usize, usize)>,
    split: String,
}

/// One draw of (n, k, graph) from the per-index stream; k is sampled
/// uniformly from [3, n-1] per graph.
fn draw_graph<R: Rng>(
    id: String,
    n_range: (usize, usize),
    rng: &mut R,
) -> Result<GraphInstance, GraphError> {
    let n = rng.random_range(n_range.0..=n_range.1);
    let k = rng.random_range(3..=(n - 1).max(3));
    generate_random_connected_graph(id, n, k.min(n - 1), rng)
}

/// Generate `train_count` training graphs with n drawn uniformly from
/// `train_n_range` and `test_count` test graphs of size `test_n`, pairwise
/// non-isomorphic across the union. Deterministic per `master_seed`; each
/// index owns its own RNG stream.
pub fn generate_dataset(
    train_count: usize,
    test_count: usize,
    train_n_range: (usize, usize),
    test_n: usize,
    master_seed: u64,
) -> Result<Dataset, DatasetError> {
    assert!(train_count >= 1 && test_count >= 1, "counts must be at least 1");
    assert!(train_n_range.0 >= 4 && train_n_range.0 <= train_n_range.1);

    let mut accepted: Vec<GraphInstance> = Vec::new();
    let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
    let total = train_count + test_count;

    for index in 0..total {
        let (split, local) = if index < train_count {
            ("train", index)
        } else {
            ("test", index - train_count)
        };
        let id = format!("{split}-{local:04}");
        let mut rng = stream_rng(master_seed, index as u64);
        let mut found = None;
        // A duplicate draw is resampled from the same stream.
        for _ in 0..10_000 {
            let g = if split == "train" {
                draw_graph(id.clone(), train_n_range, &mut rng)?
            } else {
                draw_graph(id.clone(), (test_n, test_n), &mut rng)?
            };
            let h = wl_hash(&g);
            let duplicate = by_hash
                .get(&h)
                .is_some_and(|idxs| idxs.iter().any(|&i| are_isomorphic(&accepted[i], &g)));
            if !duplicate {
                by_hash.entry(h).or_default().push(accepted.len());
                found = Some(g);
                break;
            }
        }
        accepted.push(found.ok_or(DatasetError::IsomorphismBudget(index))?);
    }

    let test = accepted.split_off(train_count);
    Ok(Dataset { train: accepted, test })
}

/// Serialize as JSON lines: one `{"id", "n", "edges", "split"}` record per
/// graph, train split first. Byte-identical for identical inputs.
pub fn save_jsonl<W: Write>(dataset: &Dataset, mut out: W) -> Result<(), DatasetError> {
    for (split, graphs) in [("train", &dataset.train), ("test", &dataset.test)] {
        for g in graphs {
            let record = Record {
                id: g.id.clone(),
                n: g.n,
                edges: g.edges.clone(),
                split: split.to_string(),
            };
            writeln!(out, "{}", serde_json::to_string(&record)?)?;
        }
    }
    Ok(())
}

pub fn save_jsonl_path(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let file = std::fs::File::create(path)?;
    save_jsonl(dataset, std::io::BufWriter::new(file))
}

pub fn load_jsonl<R: std::io::Read>(reader: R) -> Result<Dataset, DatasetError> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)?;
        let g = GraphInstance::new(record.id, record.n, &record.edges)?;
        match record.split.as_str() {
            "train" => train.push(g),
            _ => test.push(g),
        }
    }
    Ok(Dataset { train, test })
}

pub fn load_jsonl_path(path: &Path) -> Result<Dataset, DatasetError> {
    Ok(load_jsonl(std::fs::File::open(path)?)?)
}
