use qaoa_meta::dataset::generate_dataset;
use qaoa_meta::embedding::*;
use qaoa_meta::experiments::trajectory_diversity;
use qaoa_meta::graph::GraphInstance;
use qaoa_meta::hamiltonian::build_cost_hamiltonian;
use qaoa_meta::meta::*;
use qaoa_meta::problem::ProblemClass;
use qaoa_meta::rng::named_rng;
use std::collections::BTreeMap;
use std::time::Instant;

const SEED: u64 = 20260810;

fn train_instances(class: ProblemClass, graphs: &[GraphInstance], backend: EmbeddingBackend, gnn: Option<&qaoa_meta::nn::ParameterStore>) -> Vec<TrainInstance> {
    graphs.iter().map(|g| TrainInstance {
        id: g.id.clone(),
        hamiltonian: build_cost_hamiltonian(class, g),
        embedding: embed_instance(backend, class, g, gnn),
    }).collect()
}

fn mean_step_ebar(model: &MetaOptimizerModel, instances: &[TrainInstance], horizon: usize, step: usize) -> f64 {
    let vals: Vec<f64> = instances.iter().map(|i| {
        rollout(model, &i.hamiltonian, i.embedding.as_deref(), horizon).unwrap().normalized_energies[step]
    }).collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

fn main() {
    let t0 = Instant::now();
    // Criterion-6 dataset: MaxCut, 200 train n in [6,8], 20 test n=10.
    let ds = generate_dataset(200, 20, (6, 8), 10, SEED).unwrap();
    println!("[{:6.1?}] dataset done", t0.elapsed());

    // GNN pretraining set: 100 graphs per class (shared structures).
    let pre_ds = generate_dataset(100, 1, (6, 8), 9, SEED + 1).unwrap();
    let mut class_sets = BTreeMap::new();
    for class in ProblemClass::ALL {
        class_sets.insert(class, pre_ds.train.iter().map(|g| PretrainInstance {
            id: g.id.clone(), hetero: hetero_graph_for(class, g),
        }).collect::<Vec<_>>());
    }
    let (gnn, gnn_hist) = pretrain_unihetco(&class_sets, &PretrainConfig { epochs: 30, lr: 1e-3, batch: 32, seed: SEED });
    println!("[{:6.1?}] gnn pretrained: loss {:.4} -> {:.4}", t0.elapsed(), gnn_hist[0], gnn_hist.last().unwrap());

    // Criterion 10: embedding separation on 4x100.
    let mut per_class: BTreeMap<ProblemClass, Vec<Vec<f64>>> = BTreeMap::new();
    for class in ProblemClass::ALL {
        for g in &pre_ds.train {
            per_class.entry(class).or_default().push(extract_embedding(&gnn, &hetero_graph_for(class, g)));
        }
    }
    let centroid = |set: &Vec<Vec<f64>>| -> Vec<f64> {
        let d = set[0].len();
        let mut c = vec![0.0; d];
        for e in set { for k in 0..d { c[k] += e[k]; } }
        for v in &mut c { *v /= set.len() as f64; }
        c
    };
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let centroids: BTreeMap<_, _> = per_class.iter().map(|(c, s)| (*c, centroid(s))).collect();
    let mut inter = vec![];
    let classes: Vec<_> = centroids.keys().copied().collect();
    for i in 0..4 { for j in (i+1)..4 {
        inter.push(dist(&centroids[&classes[i]], &centroids[&classes[j]]));
    }}
    let inter_mean = inter.iter().sum::<f64>() / inter.len() as f64;
    let intra_mean = per_class.iter().map(|(c, s)| {
        s.iter().map(|e| dist(e, &centroids[c])).sum::<f64>() / s.len() as f64
    }).sum::<f64>() / 4.0;
    println!("[{:6.1?}] crit10: inter-centroid {:.4} vs intra dispersion {:.4} -> {}", t0.elapsed(), inter_mean, intra_mean, inter_mean > intra_mean);

    // Criterion 6: train uni-conditioned p=4.
    let uni_train = train_instances(ProblemClass::MaxCut, &ds.train, EmbeddingBackend::Unihetco, Some(&gnn));
    let uni_test = train_instances(ProblemClass::MaxCut, &ds.test, EmbeddingBackend::Unihetco, Some(&gnn));
    let cfg = MetaConfig::new(4, Some(UNIHETCO_EMBED_DIM));
    let untrained = MetaOptimizerModel::new(cfg, &mut named_rng(SEED, "uni-init"));
    let untrained_final = mean_step_ebar(&untrained, &uni_test, 10, 9);
    let tc = TrainConfig { batch: 32, epochs: 30, lr: 1e-3, horizon: 10, seed: SEED };
    let (uni_model, hist) = train(untrained.clone(), &uni_train, &tc).unwrap();
    let trained_final = mean_step_ebar(&uni_model, &uni_test, 10, 9);
    let trained_step1 = mean_step_ebar(&uni_model, &uni_test, 10, 0);
    println!("[{:6.1?}] crit6: untrained {:.4} trained {:.4} (gain {:.4} vs >= 0.02) | step1 {:.4} final {:.4} (gain {:.4} vs >= 0.01)",
        t0.elapsed(), untrained_final, trained_final, untrained_final - trained_final, trained_step1, trained_final, trained_step1 - trained_final);
    println!("   train hist: first loss {:.4} last {:.4} best-ebar {:.4}", hist[0].mean_loss, hist.last().unwrap().mean_loss, hist.iter().map(|e| e.mean_final_ebar).fold(f64::INFINITY, f64::min));

    // Criterion 7: train unconditioned, compare MSD.
    let plain_train = train_instances(ProblemClass::MaxCut, &ds.train, EmbeddingBackend::None, None);
    let plain_test = train_instances(ProblemClass::MaxCut, &ds.test, EmbeddingBackend::None, None);
    let plain_init = MetaOptimizerModel::new(MetaConfig::new(4, None), &mut named_rng(SEED, "plain-init"));
    let (plain_model, _) = train(plain_init, &plain_train, &tc).unwrap();
    let collect_trajs = |model: &MetaOptimizerModel, insts: &[TrainInstance]| -> Vec<Vec<Vec<f64>>> {
        insts.iter().map(|i| rollout(model, &i.hamiltonian, i.embedding.as_deref(), 10).unwrap().thetas).collect()
    };
    let uni_stats = trajectory_diversity(&collect_trajs(&uni_model, &uni_test), 4).unwrap();
    let plain_stats = trajectory_diversity(&collect_trajs(&plain_model, &plain_test), 4).unwrap();
    println!("[{:6.1?}] crit7: final MSD_gamma uni {:.5} vs plain {:.5} -> {} | MSD_beta uni {:.5} vs plain {:.5} -> {}",
        t0.elapsed(),
        uni_stats.msd_gamma[9], plain_stats.msd_gamma[9], uni_stats.msd_gamma[9] > plain_stats.msd_gamma[9],
        uni_stats.msd_beta[9], plain_stats.msd_beta[9], uni_stats.msd_beta[9] > plain_stats.msd_beta[9]);
    println!("   plain final ebar on test: {:.4}", mean_step_ebar(&plain_model, &plain_test, 10, 9));

    // Criterion 8: MaxCut->MIS transfer with 5-step fine-tuning.
    let weights = LossWeights::linear(10);
    let mut improved = 0;
    for g in &ds.test {
        let h = build_cost_hamiltonian(ProblemClass::Mis, g);
        let emb = embed_instance(EmbeddingBackend::Unihetco, ProblemClass::Mis, g, Some(&gnn));
        let before = meta_loss_value(&rollout(&uni_model, &h, emb.as_deref(), 10).unwrap(), &weights);
        let adapted = fine_tune(&uni_model, &h, emb.as_deref(), 5, 1e-3, 10).unwrap();
        let after = meta_loss_value(&rollout(&adapted, &h, emb.as_deref(), 10).unwrap(), &weights);
        if after < before { improved += 1; }
    }
    println!("[{:6.1?}] crit8: fine-tuning improved {}/20 (need >= 16)", t0.elapsed(), improved);
}
