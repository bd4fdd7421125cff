//! Named parameter tensors, tape binding, and the on-disk checkpoint
//! format (little-endian f64 blob + JSON manifest).

use super::matrix::Matrix;
use super::tape::{Gradients, Tape, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest error: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("blob length {found} does not match manifest ({expected} bytes)")]
    BlobLength { expected: usize, found: usize },
}

/// Named map of parameter matrices. Iteration order (and therefore every
/// serialized byte) is the lexicographic name order of the `BTreeMap`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterStore {
    entries: BTreeMap<String, Matrix>,
}

impl ParameterStore {
    pub fn new() -> ParameterStore {
        ParameterStore::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) {
        let name = name.into();
        assert!(!self.entries.contains_key(&name), "duplicate parameter name {name}");
        self.entries.insert(name, value);
    }

    pub fn get(&self, name: &str) -> &Matrix {
        self.entries.get(name).unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Matrix {
        self.entries.get_mut(name).unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Matrix)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total scalar parameter count.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|m| m.data.len()).sum()
    }
}

/// Parameters placed on a tape as leaves, so one backward pass yields a
/// gradient per name.
pub struct TapeBinding {
    vars: BTreeMap<String, Var>,
}

impl TapeBinding {
    pub fn bind(tape: &Tape, store: &ParameterStore) -> TapeBinding {
        let vars = store
            .iter()
            .map(|(name, value)| (name.clone(), tape.leaf(value.clone())))
            .collect();
        TapeBinding { vars }
    }

    pub fn var(&self, name: &str) -> Var {
        *self.vars.get(name).unwrap_or_else(|| panic!("unbound parameter {name}"))
    }

    /// Collect gradients per parameter name; parameters the loss never
    /// touched get zeros.
    pub fn grads_by_name(&self, store: &ParameterStore, grads: &Gradients) -> BTreeMap<String, Matrix> {
        self.vars
            .iter()
            .map(|(name, &var)| {
                let shape = store.get(name).shape();
                (name.clone(), grads.get_or_zero(var, shape.0, shape.1))
            })
            .collect()
    }
}

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
pub fn uniform_init<R: Rng>(rows: usize, cols: usize, fan_in: usize, rng: &mut R) -> Matrix {
    let bound = (fan_in as f64).sqrt().recip();
    Matrix::from_rows(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect(),
    )
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: (usize, usize),
    offset: usize,
    byte_len: usize,
}

#[derive(Serialize, Deserialize)]
struct CheckpointManifest {
    global_step: u64,
    config_hash: String,
    tensors: Vec<TensorEntry>,
}

/// Write `store` as `<path>.bin` (little-endian f64, name order) plus
/// `<path>.json` manifest.
pub fn save_checkpoint(
    store: &ParameterStore,
    path_stem: &Path,
    global_step: u64,
    config_hash: &str,
) -> Result<(), CheckpointError> {
    if let Some(parent) = path_stem.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut blob: Vec<u8> = Vec::new();
    let mut tensors = Vec::new();
    for (name, value) in store.iter() {
        let offset = blob.len();
        for &v in &value.data {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        tensors.push(TensorEntry {
            name: name.clone(),
            shape: value.shape(),
            offset,
            byte_len: blob.len() - offset,
        });
    }
    let manifest = CheckpointManifest { global_step, config_hash: config_hash.to_string(), tensors };
    std::fs::File::create(path_stem.with_extension("bin"))?.write_all(&blob)?;
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::File::create(path_stem.with_extension("json"))?.write_all(json.as_bytes())?;
    Ok(())
}

/// Load a checkpoint written by [`save_checkpoint`]. Returns the store and
/// the recorded global step.
pub fn load_checkpoint(path_stem: &Path) -> Result<(ParameterStore, u64), CheckpointError> {
    let manifest: CheckpointManifest =
        serde_json::from_reader(std::fs::File::open(path_stem.with_extension("json"))?)?;
    let mut blob = Vec::new();
    std::fs::File::open(path_stem.with_extension("bin"))?.read_to_end(&mut blob)?;
    let expected: usize = manifest.tensors.iter().map(|t| t.byte_len).sum();
    if blob.len() != expected {
        return Err(CheckpointError::BlobLength { expected, found: blob.len() });
    }
    let mut store = ParameterStore::new();
    for entry in manifest.tensors {
        let bytes = &blob[entry.offset..entry.offset + entry.byte_len];
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        store.insert(entry.name, Matrix::from_rows(entry.shape.0, entry.shape.1, data));
    }
    Ok((store, manifest.global_step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = stream_rng(13, 0);
        let mut store = ParameterStore::new();
        store.insert("b", uniform_init(2, 3, 3, &mut rng));
        store.insert("a", uniform_init(4, 1, 4, &mut rng));
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("ckpt");
        save_checkpoint(&store, &stem, 17, "deadbeef").unwrap();
        let (loaded, step) = load_checkpoint(&stem).unwrap();
        assert_eq!(step, 17);
        assert_eq!(store, loaded);
    }

    #[test]
    fn binding_reports_zero_for_untouched_params() {
        let mut store = ParameterStore::new();
        store.insert("used", Matrix::scalar(2.0));
        store.insert("unused", Matrix::column(&[1.0, 1.0]));
        let tape = Tape::new();
        let binding = TapeBinding::bind(&tape, &store);
        let loss = tape.scale(binding.var("used"), 4.0);
        let grads = tape.backward(loss);
        let by_name = binding.grads_by_name(&store, &grads);
        assert_eq!(by_name["used"].data, vec![4.0]);
        assert_eq!(by_name["unused"].data, vec![0.0, 0.0]);
    }
}
