//! Command-line driver: dataset generation, embedding pre-training,
//! meta-optimizer training, and the evaluation/diversity/transfer
//! experiments. Every run writes its results plus a manifest recording
//! the config hash, seed, git revision, and wall time.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use qaoa_meta::dataset::{generate_dataset, load_jsonl_path, save_jsonl_path, Dataset};
use qaoa_meta::embedding::{
    embed_instance, export_embeddings_csv, hetero_graph_for, pretrain_unihetco, EmbeddingBackend,
    PretrainConfig, PretrainInstance,
};
use qaoa_meta::experiments::{
    enumerate_transfer_cells, gnn_checkpoint_stem, git_revision, meta_checkpoint_stem,
    run_single_problem, run_transfer_cell, trajectory_diversity, write_diversity_csv,
    write_manifest, write_results_csv, write_transfer_csv, write_variance_long_csv, EvalSettings,
    ExperimentConfig, Method, RunManifest, TransferRow,
};
use qaoa_meta::hamiltonian::build_cost_hamiltonian;
use qaoa_meta::meta::{rollout, train, MetaConfig, MetaOptimizerModel, TrainConfig, TrainInstance};
use qaoa_meta::nn::{load_checkpoint, save_checkpoint, ParameterStore};
use qaoa_meta::problem::ProblemClass;
use qaoa_meta::rng::named_rng;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "qaoa-meta", version, about = "Graph-conditioned meta-optimizer for QAOA")]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Flat JSON config file mirroring the experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output location: a .jsonl file path for gen-data, a directory for
    /// everything else (default "runs").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; results are identical for any value.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the train/test graph dataset as JSON lines.
    GenData {
        #[arg(long, default_value_t = 1000)]
        train: usize,
        #[arg(long, default_value_t = 100)]
        test: usize,
        #[arg(long)]
        train_n_min: Option<usize>,
        #[arg(long)]
        train_n_max: Option<usize>,
        #[arg(long)]
        test_n: Option<usize>,
    },
    /// Pre-train the UniHetCO embedding GNN on the training split.
    PretrainEmbed {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
    },
    /// Train one meta-optimizer model for (class, depth, backend).
    TrainMeta {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value = "unihetco")]
        backend: String,
        /// Checkpoint stem of the pre-trained GNN (defaults to
        /// <out>/unihetco).
        #[arg(long)]
        gnn: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Evaluate methods on the test split of one (class, depth) cell.
    EvalSingle {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long)]
        p: usize,
        /// Comma-separated subset of vanilla,meta-lstm,wl-meta-lstm,uni-meta-lstm.
        #[arg(long, default_value = "vanilla,meta-lstm,wl-meta-lstm,uni-meta-lstm")]
        methods: String,
        /// Directory holding meta checkpoints (defaults to <out>).
        #[arg(long)]
        ckpt_dir: Option<PathBuf>,
        #[arg(long)]
        gnn: Option<PathBuf>,
        /// Use exact outcome probabilities instead of sampling.
        #[arg(long, default_value_t = false)]
        exact: bool,
    },
    /// Cross-problem transfer with per-instance fine-tuning.
    EvalTransfer {
        #[arg(long)]
        data: PathBuf,
        /// Depths to run; defaults to the config grid.
        #[arg(long)]
        depths: Option<String>,
        #[arg(long, default_value = "uni-meta-lstm")]
        method: String,
        /// Restrict to one source class (all, when omitted).
        #[arg(long)]
        source: Option<String>,
        /// Restrict to one target class (all, when omitted).
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        ckpt_dir: Option<PathBuf>,
        #[arg(long)]
        gnn: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = false)]
        exact: bool,
    },
    /// Per-step trajectory diversity statistics on the test split.
    Diversity {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        class: String,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value = "meta-lstm,uni-meta-lstm")]
        methods: String,
        #[arg(long)]
        ckpt_dir: Option<PathBuf>,
        #[arg(long)]
        gnn: Option<PathBuf>,
    },
    /// Export UniHetCO embeddings for (instance, class) pairs as CSV.
    ExportEmbed {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        gnn: Option<PathBuf>,
        /// Which split to embed: train, test, or all.
        #[arg(long, default_value = "train")]
        split: String,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}

fn parse_class(s: &str) -> Result<ProblemClass> {
    ProblemClass::parse(s).ok_or_else(|| anyhow!("unknown problem class {s:?}"))
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| Method::parse(p).ok_or_else(|| anyhow!("unknown method {p:?}")))
        .collect()
}

fn load_config(cli_seed: Option<u64>, path: Option<&Path>) -> Result<ExperimentConfig> {
    let mut config = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli_seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn require_depth(config: &ExperimentConfig, p: usize) -> Result<()> {
    if !ExperimentConfig::SUPPORTED_DEPTHS.contains(&p) {
        bail!("depth {p} outside the supported grid {:?}", ExperimentConfig::SUPPORTED_DEPTHS);
    }
    let _ = config;
    Ok(())
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    if !path.exists() {
        bail!("dataset path {} does not exist", path.display());
    }
    Ok(load_jsonl_path(path)?)
}

fn load_gnn(stem: &Path) -> Result<ParameterStore> {
    if !stem.with_extension("json").exists() {
        bail!("GNN checkpoint {} not found; run pretrain-embed first", stem.display());
    }
    Ok(load_checkpoint(stem).map(|(store, _)| store)?)
}

/// GNN weights if any requested method needs them.
fn maybe_gnn(methods: &[Method], stem: &Path) -> Result<Option<ParameterStore>> {
    let needs = methods.iter().any(|m| m.backend() == Some(EmbeddingBackend::Unihetco));
    if needs {
        Ok(Some(load_gnn(stem)?))
    } else {
        Ok(None)
    }
}

struct Run {
    out_dir: PathBuf,
    config: ExperimentConfig,
    threads: usize,
    started: Instant,
}

impl Run {
    fn manifest(&self, command: &str) -> Result<()> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_hash: self.config.hash(),
            seed: self.config.seed,
            git_revision: git_revision(),
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            threads: self.threads,
        };
        write_manifest(&self.out_dir.join(format!("manifest_{command}.json")), &manifest)?;
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("initializing the thread pool")?;
    let config = load_config(cli.seed, cli.config.as_deref())?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let (out_dir, dataset_file) = if out.extension().is_some_and(|e| e == "jsonl") {
        (out.parent().map(Path::to_path_buf).unwrap_or_default(), out.clone())
    } else {
        (out.clone(), out.join("dataset.jsonl"))
    };
    std::fs::create_dir_all(if out_dir.as_os_str().is_empty() {
        Path::new(".")
    } else {
        out_dir.as_path()
    })?;
    let run = Run { out_dir: out_dir.clone(), config, threads: cli.threads, started: Instant::now() };

    match cli.command {
        Command::GenData { train, test, train_n_min, train_n_max, test_n } => {
            let range = (
                train_n_min.unwrap_or(run.config.train_n_min),
                train_n_max.unwrap_or(run.config.train_n_max),
            );
            let test_n = test_n.unwrap_or(run.config.test_n);
            let dataset = generate_dataset(train, test, range, test_n, run.config.seed)?;
            save_jsonl_path(&dataset, &dataset_file)?;
            println!(
                "wrote {} train + {} test graphs to {}",
                dataset.train.len(),
                dataset.test.len(),
                dataset_file.display()
            );
            run.manifest("gen-data")?;
        }

        Command::PretrainEmbed { data, epochs, batch, lr } => {
            let dataset = load_dataset(&data)?;
            let mut class_sets = BTreeMap::new();
            for class in ProblemClass::ALL {
                let set: Vec<PretrainInstance> = dataset
                    .train
                    .iter()
                    .map(|g| PretrainInstance {
                        id: g.id.clone(),
                        hetero: hetero_graph_for(class, g),
                    })
                    .collect();
                class_sets.insert(class, set);
            }
            let pretrain = PretrainConfig {
                epochs: epochs.unwrap_or(run.config.gnn_epochs),
                lr: lr.unwrap_or(run.config.gnn_lr),
                batch: batch.unwrap_or(run.config.batch),
                seed: run.config.seed,
            };
            let (weights, history) = pretrain_unihetco(&class_sets, &pretrain);
            let stem = gnn_checkpoint_stem(&run.out_dir);
            save_checkpoint(&weights, &stem, pretrain.epochs as u64, &run.config.hash())?;
            let mut log = std::fs::File::create(run.out_dir.join("pretrain_log.csv"))?;
            writeln!(log, "epoch,mean_total_loss")?;
            for (epoch, loss) in history.iter().enumerate() {
                writeln!(log, "{},{loss}", epoch + 1)?;
            }
            println!("saved GNN checkpoint to {}", stem.display());
            run.manifest("pretrain-embed")?;
        }

        Command::TrainMeta { data, class, p, backend, gnn, epochs, batch } => {
            require_depth(&run.config, p)?;
            let class = parse_class(&class)?;
            let backend = EmbeddingBackend::parse(&backend)
                .ok_or_else(|| anyhow!("unknown backend {backend:?}"))?;
            let dataset = load_dataset(&data)?;
            let gnn_weights = if backend == EmbeddingBackend::Unihetco {
                Some(load_gnn(&gnn.unwrap_or_else(|| gnn_checkpoint_stem(&run.out_dir)))?)
            } else {
                None
            };
            let instances: Vec<TrainInstance> = dataset
                .train
                .iter()
                .map(|g| TrainInstance {
                    id: g.id.clone(),
                    hamiltonian: build_cost_hamiltonian(class, g),
                    embedding: embed_instance(backend, class, g, gnn_weights.as_ref()),
                })
                .collect();
            let model = MetaOptimizerModel::new(
                MetaConfig::new(p, backend.dim()),
                &mut named_rng(run.config.seed, &format!("init-{class}-{p}-{}", backend.label())),
            );
            let train_config = TrainConfig {
                batch: batch.unwrap_or(run.config.batch),
                epochs: epochs.unwrap_or(run.config.epochs),
                lr: run.config.lr,
                horizon: run.config.horizon,
                seed: run.config.seed,
            };
            let (trained, history) = train(model, &instances, &train_config)?;
            let stem = meta_checkpoint_stem(&run.out_dir, class, p, backend);
            save_checkpoint(&trained.params, &stem, train_config.epochs as u64, &run.config.hash())?;
            let log_name = format!("train_log_{}_p{}_{}.csv", class.label(), p, backend.label());
            let mut log = std::fs::File::create(run.out_dir.join(log_name))?;
            writeln!(log, "epoch,mean_loss,mean_final_ebar,wall_time")?;
            for e in &history {
                writeln!(log, "{},{},{},{}", e.epoch + 1, e.mean_loss, e.mean_final_ebar, e.wall_time_secs)?;
            }
            println!("saved meta checkpoint to {}", stem.display());
            run.manifest("train-meta")?;
        }

        Command::EvalSingle { data, class, p, methods, ckpt_dir, gnn, exact } => {
            require_depth(&run.config, p)?;
            let class = parse_class(&class)?;
            let methods = parse_methods(&methods)?;
            let dataset = load_dataset(&data)?;
            let ckpt_dir = ckpt_dir.unwrap_or_else(|| run.out_dir.clone());
            let gnn_weights =
                maybe_gnn(&methods, &gnn.unwrap_or_else(|| gnn_checkpoint_stem(&ckpt_dir)))?;
            let settings = EvalSettings {
                shots: if exact || run.config.exact { None } else { Some(run.config.shots) },
                seed: run.config.seed,
                horizon: run.config.horizon,
            };
            let rows = run_single_problem(
                class,
                p,
                &methods,
                &dataset.test,
                &ckpt_dir,
                gnn_weights.as_ref(),
                &settings,
            )?;
            let csv = run.out_dir.join(format!("results_single_{}_p{p}.csv", class.label()));
            write_results_csv(&rows, std::fs::File::create(&csv)?)?;
            println!("wrote {}", csv.display());
            run.manifest("eval-single")?;
        }

        Command::EvalTransfer {
            data,
            depths,
            method,
            source,
            target,
            ckpt_dir,
            gnn,
            steps,
            exact,
        } => {
            let method =
                Method::parse(&method).ok_or_else(|| anyhow!("unknown method {method:?}"))?;
            if method == Method::Vanilla {
                bail!("transfer applies to the meta-optimizer methods");
            }
            let depths: Vec<usize> = match depths {
                Some(list) => list
                    .split(',')
                    .map(|d| d.trim().parse::<usize>().context("parsing --depths"))
                    .collect::<Result<_>>()?,
                None => run.config.depths.clone(),
            };
            for &p in &depths {
                require_depth(&run.config, p)?;
            }
            let source_filter = source.as_deref().map(parse_class).transpose()?;
            let target_filter = target.as_deref().map(parse_class).transpose()?;
            let dataset = load_dataset(&data)?;
            let ckpt_dir = ckpt_dir.unwrap_or_else(|| run.out_dir.clone());
            let gnn_weights = maybe_gnn(
                std::slice::from_ref(&method),
                &gnn.unwrap_or_else(|| gnn_checkpoint_stem(&ckpt_dir)),
            )?;
            let settings = EvalSettings {
                shots: if exact || run.config.exact { None } else { Some(run.config.shots) },
                seed: run.config.seed,
                horizon: run.config.horizon,
            };
            let mut rows: Vec<TransferRow> = Vec::new();
            for (src, tgt, depth) in enumerate_transfer_cells(&depths) {
                if source_filter.is_some_and(|s| s != src) || target_filter.is_some_and(|t| t != tgt)
                {
                    continue;
                }
                rows.push(run_transfer_cell(
                    src,
                    tgt,
                    depth,
                    method,
                    &dataset.test,
                    &ckpt_dir,
                    gnn_weights.as_ref(),
                    steps.unwrap_or(run.config.fine_tune_steps),
                    run.config.lr,
                    &settings,
                )?);
            }
            let csv = run.out_dir.join(format!("transfer_{}.csv", method.label()));
            write_transfer_csv(&rows, std::fs::File::create(&csv)?)?;
            println!("wrote {} ({} cells)", csv.display(), rows.len());
            run.manifest("eval-transfer")?;
        }

        Command::Diversity { data, class, p, methods, ckpt_dir, gnn } => {
            require_depth(&run.config, p)?;
            let class = parse_class(&class)?;
            let methods = parse_methods(&methods)?;
            let dataset = load_dataset(&data)?;
            let ckpt_dir = ckpt_dir.unwrap_or_else(|| run.out_dir.clone());
            let gnn_weights =
                maybe_gnn(&methods, &gnn.unwrap_or_else(|| gnn_checkpoint_stem(&ckpt_dir)))?;
            for method in methods {
                let backend = method
                    .backend()
                    .ok_or_else(|| anyhow!("diversity applies to the meta-optimizer methods"))?;
                let stem = meta_checkpoint_stem(&ckpt_dir, class, p, backend);
                if !stem.with_extension("json").exists() {
                    bail!("missing checkpoint {}", stem.display());
                }
                let (params, _) = load_checkpoint(&stem)?;
                let model = MetaOptimizerModel::from_params(params, run.config.horizon);
                let trajectories: Vec<Vec<Vec<f64>>> = dataset
                    .test
                    .iter()
                    .map(|g| -> Result<Vec<Vec<f64>>> {
                        let h = build_cost_hamiltonian(class, g);
                        let embedding = embed_instance(backend, class, g, gnn_weights.as_ref());
                        let r = rollout(&model, &h, embedding.as_deref(), run.config.horizon)?;
                        Ok(r.thetas)
                    })
                    .collect::<Result<_>>()?;
                let stats = trajectory_diversity(&trajectories, p)?;
                let base = format!("diversity_{}_{}_p{p}", method.label(), class.label());
                let msd_csv = run.out_dir.join(format!("{base}.csv"));
                write_diversity_csv(&stats, std::fs::File::create(&msd_csv)?)?;
                let var_csv = run.out_dir.join(format!("{base}_variance.csv"));
                write_variance_long_csv(&stats, p, std::fs::File::create(&var_csv)?)?;
                println!("wrote {} and {}", msd_csv.display(), var_csv.display());
            }
            run.manifest("diversity")?;
        }

        Command::ExportEmbed { data, gnn, split } => {
            let dataset = load_dataset(&data)?;
            let weights = load_gnn(&gnn.unwrap_or_else(|| gnn_checkpoint_stem(&run.out_dir)))?;
            let instances: Vec<_> = match split.as_str() {
                "train" => dataset.train.clone(),
                "test" => dataset.test.clone(),
                "all" => dataset.all().cloned().collect(),
                other => bail!("unknown split {other:?} (expected train, test, or all)"),
            };
            let csv = run.out_dir.join("embeddings.csv");
            export_embeddings_csv(
                &instances,
                &ProblemClass::ALL,
                &weights,
                std::fs::File::create(&csv)?,
            )?;
            println!("wrote {} ({} rows)", csv.display(), instances.len() * 4);
            run.manifest("export-embed")?;
        }
    }
    Ok(())
}
