use qaoa_meta::dataset::generate_dataset;
use qaoa_meta::embedding::*;
use qaoa_meta::graph::GraphInstance;
use qaoa_meta::hamiltonian::build_cost_hamiltonian;
use qaoa_meta::meta::*;
use qaoa_meta::problem::ProblemClass;
use qaoa_meta::rng::named_rng;
use std::collections::BTreeMap;

fn main() {
    for seed in [4u64, 5, 6, 7, 8, 9, 10, 11, 12] {
        let ds = generate_dataset(200, 20, (6, 8), 10, seed).unwrap();
        let pre_ds = generate_dataset(100, 1, (6, 8), 9, seed + 1).unwrap();
        let mut class_sets = BTreeMap::new();
        for class in ProblemClass::ALL {
            class_sets.insert(class, pre_ds.train.iter().map(|g| PretrainInstance {
                id: g.id.clone(), hetero: hetero_graph_for(class, g),
            }).collect::<Vec<_>>());
        }
        let (gnn, _) = pretrain_unihetco(&class_sets, &PretrainConfig { epochs: 30, lr: 1e-3, batch: 32, seed });
        let mk = |class: ProblemClass, graphs: &[GraphInstance]| -> Vec<TrainInstance> {
            graphs.iter().map(|g| TrainInstance {
                id: g.id.clone(),
                hamiltonian: build_cost_hamiltonian(class, g),
                embedding: embed_instance(EmbeddingBackend::Unihetco, class, g, Some(&gnn)),
            }).collect()
        };
        let uni_train = mk(ProblemClass::MaxCut, &ds.train);
        let uni_test = mk(ProblemClass::MaxCut, &ds.test);
        let cfg = MetaConfig::new(4, Some(UNIHETCO_EMBED_DIM));
        let untrained = MetaOptimizerModel::new(cfg, &mut named_rng(seed, "uni-init"));
        let tc = TrainConfig { batch: 32, epochs: 30, lr: 1e-3, horizon: 10, seed };
        let (uni_model, _) = train(untrained.clone(), &uni_train, &tc).unwrap();
        let mean_step = |model: &MetaOptimizerModel, insts: &[TrainInstance], step: usize| -> f64 {
            insts.iter().map(|i| rollout(model, &i.hamiltonian, i.embedding.as_deref(), 10).unwrap().normalized_energies[step]).sum::<f64>() / insts.len() as f64
        };
        let gain_a = mean_step(&untrained, &uni_test, 9) - mean_step(&uni_model, &uni_test, 9);
        let gain_b = mean_step(&uni_model, &uni_test, 0) - mean_step(&uni_model, &uni_test, 9);
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
        println!("seed {seed}: c6a {gain_a:.4} c6b {gain_b:.4} c8 {improved}/20");
    }
}
