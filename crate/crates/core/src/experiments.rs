//! Experiment orchestration: baselines vs meta-optimizers on a test
//! split, exhaustive cross-problem transfer, trajectory-diversity
//! statistics, and deterministic CSV/manifest emission.

use crate::baseline::run_vanilla_qaoa;
use crate::embedding::{embed_instance, EmbeddingBackend};
use crate::graph::GraphInstance;
use crate::hamiltonian::build_cost_hamiltonian;
use crate::meta::{fine_tune, rollout, MetaError, MetaOptimizerModel};
use crate::metrics::{evaluate_metrics, evaluate_metrics_exact, MetricsReport};
use crate::nn::{load_checkpoint, ParameterStore};
use crate::problem::{brute_force_optimum, ProblemClass};
use crate::rng::{fnv1a, named_rng};
use crate::simulator::{run_qaoa, ParameterVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("missing checkpoint for ({class}, p={depth}, {backend}); expected at {path}")]
    MissingCheckpoint { class: ProblemClass, depth: usize, backend: &'static str, path: PathBuf },
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("trajectory diversity needs at least 2 trajectories, got {0}")]
    TooFewTrajectories(usize),
}

/// The four evaluated methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Vanilla,
    MetaLstm,
    WlMetaLstm,
    UniMetaLstm,
}

impl Method {
    pub const ALL: [Method; 4] =
        [Method::Vanilla, Method::MetaLstm, Method::WlMetaLstm, Method::UniMetaLstm];

    pub fn label(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::MetaLstm => "meta-lstm",
            Method::WlMetaLstm => "wl-meta-lstm",
            Method::UniMetaLstm => "uni-meta-lstm",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" => Some(Method::Vanilla),
            "meta-lstm" | "meta" => Some(Method::MetaLstm),
            "wl-meta-lstm" | "wl" => Some(Method::WlMetaLstm),
            "uni-meta-lstm" | "uni" => Some(Method::UniMetaLstm),
            _ => None,
        }
    }

    /// Conditioning backend of the meta variants; None for the vanilla
    /// baseline.
    pub fn backend(self) -> Option<EmbeddingBackend> {
        match self {
            Method::Vanilla => None,
            Method::MetaLstm => Some(EmbeddingBackend::None),
            Method::WlMetaLstm => Some(EmbeddingBackend::Wl),
            Method::UniMetaLstm => Some(EmbeddingBackend::Unihetco),
        }
    }
}

/// Flat experiment configuration, mirrored one-to-one by the JSON config
/// file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub classes: Vec<ProblemClass>,
    pub depths: Vec<usize>,
    pub horizon: usize,
    pub shots: u32,
    pub exact: bool,
    pub batch: usize,
    pub epochs: usize,
    pub gnn_epochs: usize,
    pub seed: u64,
    pub backend: EmbeddingBackend,
    pub fine_tune_steps: usize,
    pub lr: f64,
    pub gnn_lr: f64,
    pub train_count: usize,
    pub test_count: usize,
    pub train_n_min: usize,
    pub train_n_max: usize,
    pub test_n: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            classes: ProblemClass::ALL.to_vec(),
            depths: vec![4, 6, 8, 10],
            horizon: 10,
            shots: 5000,
            exact: false,
            batch: 32,
            epochs: 100,
            gnn_epochs: 30,
            seed: 42,
            backend: EmbeddingBackend::Unihetco,
            fine_tune_steps: 5,
            lr: 1e-3,
            gnn_lr: 1e-3,
            train_count: 1000,
            test_count: 100,
            train_n_min: 6,
            train_n_max: 10,
            test_n: 12,
        }
    }
}

impl ExperimentConfig {
    pub const SUPPORTED_DEPTHS: [usize; 4] = [4, 6, 8, 10];

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.classes.is_empty() {
            return Err(ExperimentError::Config("at least one problem class required".into()));
        }
        for &p in &self.depths {
            if !Self::SUPPORTED_DEPTHS.contains(&p) {
                return Err(ExperimentError::Config(format!(
                    "depth {p} outside the supported grid {:?}",
                    Self::SUPPORTED_DEPTHS
                )));
            }
        }
        if self.horizon == 0 || self.batch == 0 || self.shots == 0 {
            return Err(ExperimentError::Config("horizon, batch, and shots must be positive".into()));
        }
        if self.train_n_min < 4 || self.train_n_min > self.train_n_max || self.test_n > 20 {
            return Err(ExperimentError::Config("invalid graph size range".into()));
        }
        Ok(())
    }

    /// Stable hash of the serialized config, recorded in manifests and
    /// checkpoints.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a(json.as_bytes()))
    }
}

/// Checkpoint stem for one trained meta model.
pub fn meta_checkpoint_stem(
    dir: &Path,
    class: ProblemClass,
    depth: usize,
    backend: EmbeddingBackend,
) -> PathBuf {
    dir.join(format!("meta_{}_p{}_{}", class.label(), depth, backend.label()))
}

/// Checkpoint stem for the pre-trained embedding GNN.
pub fn gnn_checkpoint_stem(dir: &Path) -> PathBuf {
    dir.join("unihetco")
}

fn load_meta_model(
    dir: &Path,
    class: ProblemClass,
    depth: usize,
    backend: EmbeddingBackend,
    horizon: usize,
) -> Result<MetaOptimizerModel, ExperimentError> {
    let stem = meta_checkpoint_stem(dir, class, depth, backend);
    if !stem.with_extension("json").exists() {
        return Err(ExperimentError::MissingCheckpoint {
            class,
            depth,
            backend: backend.label(),
            path: stem,
        });
    }
    let (params, _) = load_checkpoint(&stem)
        .map_err(|e| ExperimentError::Config(format!("unreadable checkpoint {stem:?}: {e}")))?;
    Ok(MetaOptimizerModel::from_params(params, horizon))
}

/// Evaluation settings shared by the experiment runners.
#[derive(Debug, Clone, Copy)]
pub struct EvalSettings {
    /// None runs the exact-probability mode instead of sampling.
    pub shots: Option<u32>,
    pub seed: u64,
    pub horizon: usize,
}

/// One row of the single-problem results table (fractions, not percent).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub class: ProblemClass,
    pub depth: usize,
    pub method: Method,
    pub p_opt_hit: f64,
    pub ar: Option<f64>,
    pub fr: Option<f64>,
    pub steps: f64,
    pub n_instances: usize,
    pub seed: u64,
}

/// One cell of the transfer grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub source: ProblemClass,
    pub target: ProblemClass,
    pub depth: usize,
    pub method: Method,
    pub p_opt_hit: f64,
    pub ar: Option<f64>,
    pub fr: Option<f64>,
    pub steps: f64,
    pub n_instances: usize,
    pub seed: u64,
}

struct InstanceOutcome {
    report: MetricsReport,
    steps: f64,
}

fn aggregate(
    class: ProblemClass,
    depth: usize,
    method: Method,
    outcomes: Vec<InstanceOutcome>,
    seed: u64,
) -> ResultRow {
    let n = outcomes.len();
    let mean =
        |f: &dyn Fn(&InstanceOutcome) -> f64| outcomes.iter().map(|o| f(o)).sum::<f64>() / n as f64;
    let mean_opt = |f: &dyn Fn(&InstanceOutcome) -> Option<f64>| {
        let values: Vec<f64> = outcomes.iter().filter_map(|o| f(o)).collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    ResultRow {
        class,
        depth,
        method,
        p_opt_hit: mean(&|o| o.report.optimal_hit_rate),
        ar: mean_opt(&|o| o.report.approximation_ratio),
        fr: mean_opt(&|o| o.report.feasibility_rate),
        steps: mean(&|o| o.steps),
        n_instances: n,
        seed,
    }
}

fn evaluate_state(
    class: ProblemClass,
    g: &GraphInstance,
    state: &crate::simulator::StateVector,
    settings: &EvalSettings,
    method: Method,
) -> MetricsReport {
    let oracle = brute_force_optimum(class, g);
    match settings.shots {
        Some(shots) => {
            let mut rng = named_rng(settings.seed, &format!("shots-{}-{}", method.label(), g.id));
            evaluate_metrics(class, g, state, shots, &mut rng, &oracle)
        }
        None => evaluate_metrics_exact(class, g, state, &oracle),
    }
}

/// Vanilla baseline over the test split: fresh Adam optimization per
/// instance, steps column reports the mean iterations used.
pub fn eval_vanilla(
    class: ProblemClass,
    depth: usize,
    test: &[GraphInstance],
    settings: &EvalSettings,
) -> ResultRow {
    let outcomes: Vec<InstanceOutcome> = test
        .par_iter()
        .map(|g| {
            let h = build_cost_hamiltonian(class, g);
            let mut rng = named_rng(settings.seed, &format!("vanilla-{}", g.id));
            let run = run_vanilla_qaoa(&h, depth, &mut rng);
            let report = evaluate_state(class, g, &run.final_state, settings, Method::Vanilla);
            InstanceOutcome { report, steps: f64::from(run.steps_used) }
        })
        .collect();
    aggregate(class, depth, Method::Vanilla, outcomes, settings.seed)
}

/// A meta variant over the test split: eval rollout, final angles, final
/// state, metrics. Steps column is the rollout horizon.
pub fn eval_meta_method(
    class: ProblemClass,
    depth: usize,
    method: Method,
    model: &MetaOptimizerModel,
    test: &[GraphInstance],
    gnn: Option<&ParameterStore>,
    settings: &EvalSettings,
) -> Result<ResultRow, ExperimentError> {
    let backend = method.backend().expect("meta method");
    let outcomes: Vec<InstanceOutcome> = test
        .par_iter()
        .map(|g| -> Result<InstanceOutcome, ExperimentError> {
            let h = build_cost_hamiltonian(class, g);
            let embedding = embed_instance(backend, class, g, gnn);
            let r = rollout(model, &h, embedding.as_deref(), settings.horizon)?;
            let theta = ParameterVector::from_flat(r.thetas.last().expect("horizon >= 1"));
            let state = run_qaoa(&h, &theta);
            let report = evaluate_state(class, g, &state, settings, method);
            Ok(InstanceOutcome { report, steps: settings.horizon as f64 })
        })
        .collect::<Result<_, _>>()?;
    Ok(aggregate(class, depth, method, outcomes, settings.seed))
}

/// Single-problem experiment: evaluate each requested method on one
/// (class, depth) cell, loading meta checkpoints from `ckpt_dir`.
pub fn run_single_problem(
    class: ProblemClass,
    depth: usize,
    methods: &[Method],
    test: &[GraphInstance],
    ckpt_dir: &Path,
    gnn: Option<&ParameterStore>,
    settings: &EvalSettings,
) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &method in methods {
        let row = match method.backend() {
            None => eval_vanilla(class, depth, test, settings),
            Some(backend) => {
                let model = load_meta_model(ckpt_dir, class, depth, backend, settings.horizon)?;
                eval_meta_method(class, depth, method, &model, test, gnn, settings)?
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

/// All (source, target, depth) transfer cells: ordered pairs of distinct
/// classes at every depth. Full mode enumerates 4 * 3 * |depths| cells,
/// each exactly once.
pub fn enumerate_transfer_cells(depths: &[usize]) -> Vec<(ProblemClass, ProblemClass, usize)> {
    let mut cells = Vec::new();
    for &depth in depths {
        for source in ProblemClass::ALL {
            for target in ProblemClass::ALL {
                if source != target {
                    cells.push((source, target, depth));
                }
            }
        }
    }
    cells
}

/// One transfer cell: load the source-class model, fine-tune per target
/// instance for `fine_tune_steps` Adam steps, then evaluate on the target.
#[allow(clippy::too_many_arguments)]
pub fn run_transfer_cell(
    source: ProblemClass,
    target: ProblemClass,
    depth: usize,
    method: Method,
    test: &[GraphInstance],
    ckpt_dir: &Path,
    gnn: Option<&ParameterStore>,
    fine_tune_steps: usize,
    fine_tune_lr: f64,
    settings: &EvalSettings,
) -> Result<TransferRow, ExperimentError> {
    let backend = method.backend().expect("transfer applies to meta methods");
    let model = load_meta_model(ckpt_dir, source, depth, backend, settings.horizon)?;
    let outcomes: Vec<InstanceOutcome> = test
        .par_iter()
        .map(|g| -> Result<InstanceOutcome, ExperimentError> {
            let h = build_cost_hamiltonian(target, g);
            let embedding = embed_instance(backend, target, g, gnn);
            let adapted = fine_tune(
                &model,
                &h,
                embedding.as_deref(),
                fine_tune_steps,
                fine_tune_lr,
                settings.horizon,
            )?;
            let r = rollout(&adapted, &h, embedding.as_deref(), settings.horizon)?;
            let theta = ParameterVector::from_flat(r.thetas.last().expect("horizon >= 1"));
            let state = run_qaoa(&h, &theta);
            let report = evaluate_state(target, g, &state, settings, method);
            Ok(InstanceOutcome { report, steps: settings.horizon as f64 })
        })
        .collect::<Result<_, _>>()?;
    let row = aggregate(target, depth, method, outcomes, settings.seed);
    Ok(TransferRow {
        source,
        target,
        depth,
        method,
        p_opt_hit: row.p_opt_hit,
        ar: row.ar,
        fr: row.fr,
        steps: row.steps,
        n_instances: row.n_instances,
        seed: row.seed,
    })
}

/// Per-step mean squared deviation of generated angles from the
/// instance-mean trajectory, aggregated within gamma and beta, plus the
/// full per-(step, coordinate) variance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub msd_gamma: Vec<f64>,
    pub msd_beta: Vec<f64>,
    /// variance[t][c] over instances, for all 2p coordinates.
    pub per_coord_variance: Vec<Vec<f64>>,
}

/// `trajectories[i][t]` is instance i's flat angle vector at step t
/// (gammas first). Population variance over instances, averaged over the
/// gamma and beta coordinate blocks separately.
pub fn trajectory_diversity(
    trajectories: &[Vec<Vec<f64>>],
    depth: usize,
) -> Result<TrajectoryStats, ExperimentError> {
    let n = trajectories.len();
    if n < 2 {
        return Err(ExperimentError::TooFewTrajectories(n));
    }
    let horizon = trajectories[0].len();
    let width = 2 * depth;
    assert!(trajectories.iter().all(|t| t.len() == horizon && t.iter().all(|v| v.len() == width)));

    let mut per_coord_variance = vec![vec![0.0; width]; horizon];
    let mut msd_gamma = vec![0.0; horizon];
    let mut msd_beta = vec![0.0; horizon];
    for t in 0..horizon {
        for c in 0..width {
            let mean: f64 = trajectories.iter().map(|traj| traj[t][c]).sum::<f64>() / n as f64;
            let var: f64 = trajectories
                .iter()
                .map(|traj| {
                    let d = traj[t][c] - mean;
                    d * d
                })
                .sum::<f64>()
                / n as f64;
            per_coord_variance[t][c] = var;
            if c < depth {
                msd_gamma[t] += var / depth as f64;
            } else {
                msd_beta[t] += var / depth as f64;
            }
        }
    }
    Ok(TrajectoryStats { msd_gamma, msd_beta, per_coord_variance })
}

fn fmt_percent(value: Option<f64>) -> String {
    value.map_or(String::new(), |v| format!("{:.2}", v * 100.0))
}

/// Results CSV matching the single-problem table layout; rates in percent
/// with two decimals, missing values empty.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "class,depth,method,p_opt_hit,ar,fr,steps,n_instances,seed")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.2},{},{}",
            r.class,
            r.depth,
            r.method.label(),
            fmt_percent(Some(r.p_opt_hit)),
            fmt_percent(r.ar),
            fmt_percent(r.fr),
            r.steps,
            r.n_instances,
            r.seed
        )?;
    }
    Ok(())
}

pub fn write_transfer_csv<W: Write>(rows: &[TransferRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "source,target,depth,method,p_opt_hit,ar,fr,steps,n_instances,seed")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.2},{},{}",
            r.source,
            r.target,
            r.depth,
            r.method.label(),
            fmt_percent(Some(r.p_opt_hit)),
            fmt_percent(r.ar),
            fmt_percent(r.fr),
            r.steps,
            r.n_instances,
            r.seed
        )?;
    }
    Ok(())
}

/// Aggregated diversity CSV (step, msd_gamma, msd_beta), full precision.
pub fn write_diversity_csv<W: Write>(stats: &TrajectoryStats, mut out: W) -> std::io::Result<()> {
    writeln!(out, "step,msd_gamma,msd_beta")?;
    for (t, (g, b)) in stats.msd_gamma.iter().zip(stats.msd_beta.iter()).enumerate() {
        writeln!(out, "{},{g},{b}", t + 1)?;
    }
    Ok(())
}

/// Long-format per-coordinate variance (step, kind, coord, variance) for
/// the heatmap view.
pub fn write_variance_long_csv<W: Write>(
    stats: &TrajectoryStats,
    depth: usize,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "step,kind,coord,variance")?;
    for (t, row) in stats.per_coord_variance.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let (kind, coord) = if c < depth { ("gamma", c + 1) } else { ("beta", c - depth + 1) };
            writeln!(out, "{},{kind},{coord},{v}", t + 1)?;
        }
    }
    Ok(())
}

/// Per-run provenance record. The wall time necessarily varies between
/// runs; result artifacts stay byte-identical, manifests do not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub git_revision: String,
    pub wall_time_secs: f64,
    pub threads: usize,
}

pub fn git_revision() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|out| out.status.success())
        .map(|out| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta::MetaConfig;
    use crate::rng::stream_rng;

    #[test]
    fn transfer_grid_enumerates_48_unique_cells() {
        let cells = enumerate_transfer_cells(&[4, 6, 8, 10]);
        assert_eq!(cells.len(), 48);
        let mut dedup = cells.clone();
        dedup.sort_by_key(|&(s, t, p)| (s, t, p));
        dedup.dedup();
        assert_eq!(dedup.len(), 48);
        assert!(cells.iter().all(|&(s, t, _)| s != t));
    }

    #[test]
    fn diversity_of_identical_trajectories_is_zero() {
        let traj = vec![vec![vec![0.3, -0.2, 0.1, 0.4]; 5]; 7];
        let stats = trajectory_diversity(&traj, 2).unwrap();
        // Up to the rounding of the mean (7 * 0.3 / 7 != 0.3 exactly).
        assert!(stats.msd_gamma.iter().all(|&v| v < 1e-30));
        assert!(stats.msd_beta.iter().all(|&v| v < 1e-30));
    }

    #[test]
    fn single_coordinate_deviation_has_closed_form() {
        // Two trajectories differing by +/- delta in one gamma coordinate
        // at one step: MSD_gamma = delta^2 / p there, zero elsewhere.
        let p = 3;
        let delta = 0.25;
        let base = vec![vec![0.0; 2 * p]; 4];
        let mut a = base.clone();
        let mut b = base;
        a[2][1] += delta;
        b[2][1] -= delta;
        let stats = trajectory_diversity(&[a, b], p).unwrap();
        assert!((stats.msd_gamma[2] - delta * delta / p as f64).abs() < 1e-15);
        assert_eq!(stats.msd_gamma[0], 0.0);
        assert!(stats.msd_beta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn msd_matches_two_pass_variance_oracle() {
        let mut rng = stream_rng(111, 0);
        use rand::Rng;
        let (n, horizon, p) = (100, 6, 2);
        let trajectories: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| {
                (0..horizon)
                    .map(|_| (0..2 * p).map(|_| rng.random_range(-2.0..2.0)).collect())
                    .collect()
            })
            .collect();
        let stats = trajectory_diversity(&trajectories, p).unwrap();
        // Independent two-pass computation.
        for t in 0..horizon {
            let mut expected_gamma = 0.0;
            for c in 0..p {
                let values: Vec<f64> = trajectories.iter().map(|traj| traj[t][c]).collect();
                let mean = values.iter().sum::<f64>() / n as f64;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                expected_gamma += var / p as f64;
            }
            assert!((stats.msd_gamma[t] - expected_gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_trajectories_error() {
        assert!(matches!(
            trajectory_diversity(&[vec![vec![0.0; 2]; 3]], 1),
            Err(ExperimentError::TooFewTrajectories(1))
        ));
    }

    #[test]
    fn results_csv_formats_percentages() {
        let rows = vec![ResultRow {
            class: ProblemClass::Mis,
            depth: 4,
            method: Method::UniMetaLstm,
            p_opt_hit: 0.1849,
            ar: Some(0.7049),
            fr: Some(0.8007),
            steps: 10.0,
            n_instances: 100,
            seed: 42,
        }];
        let mut buf = Vec::new();
        write_results_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "mis,4,uni-meta-lstm,18.49,70.49,80.07,10.00,100,42"
        );
    }

    #[test]
    fn maxcut_rows_leave_fr_empty() {
        let rows = vec![ResultRow {
            class: ProblemClass::MaxCut,
            depth: 4,
            method: Method::Vanilla,
            p_opt_hit: 0.2509,
            ar: Some(0.938),
            fr: None,
            steps: 231.44,
            n_instances: 100,
            seed: 7,
        }];
        let mut buf = Vec::new();
        write_results_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "maxcut,4,vanilla,25.09,93.80,,231.44,100,7");
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 43;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn config_validation_rejects_bad_depths() {
        let mut config = ExperimentConfig::default();
        assert!(config.validate().is_ok());
        config.depths = vec![5];
        assert!(config.validate().is_err());
    }

    #[test]
    fn missing_checkpoint_names_the_cell() {
        let dir = tempfile::tempdir().unwrap();
        let settings = EvalSettings { shots: Some(100), seed: 1, horizon: 3 };
        let test = vec![GraphInstance::complete("k3", 3)];
        let err = run_single_problem(
            ProblemClass::Mis,
            4,
            &[Method::UniMetaLstm],
            &test,
            dir.path(),
            None,
            &settings,
        )
        .unwrap_err();
        let message = err.to_string();
        assert!(message.contains("mis") && message.contains("p=4") && message.contains("unihetco"));
    }

    #[test]
    fn single_instance_split_reproduces_that_instance() {
        // With one test instance the aggregated row equals the instance's
        // own report.
        let dir = tempfile::tempdir().unwrap();
        let g = GraphInstance::complete("k3", 3);
        let model = MetaOptimizerModel::new(
            MetaConfig { depth: 4, horizon: 3, hidden: 8, embed_dim: None },
            &mut stream_rng(5, 0),
        );
        crate::nn::save_checkpoint(
            &model.params,
            &meta_checkpoint_stem(dir.path(), ProblemClass::MaxCut, 4, EmbeddingBackend::None),
            0,
            "test",
        )
        .unwrap();
        let settings = EvalSettings { shots: None, seed: 3, horizon: 3 };
        let rows = run_single_problem(
            ProblemClass::MaxCut,
            4,
            &[Method::MetaLstm],
            std::slice::from_ref(&g),
            dir.path(),
            None,
            &settings,
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_instances, 1);
        assert_eq!(rows[0].steps, 3.0);
        assert_eq!(rows[0].fr, None);
    }
}
