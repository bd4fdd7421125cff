use qaoa_meta::dataset::generate_dataset;
use qaoa_meta::embedding::*;
use qaoa_meta::graph::GraphInstance;
use qaoa_meta::hamiltonian::build_cost_hamiltonian;
use qaoa_meta::meta::*;
use qaoa_meta::problem::ProblemClass;
use qaoa_meta::rng::named_rng;
use std::collections::BTreeMap;

fn main() {
    for seed in [20260810u64, 1, 2, 3, 4] {
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
        let cfg = MetaConfig::new(4, Some(UNIHETCO_EMBED_DIM));
        let init = MetaOptimizerModel::new(cfg, &mut named_rng(seed, "uni-init"));
        let tc = TrainConfig { batch: 32, epochs: 30, lr: 1e-3, horizon: 10, seed };
        let (uni_model, _) = train(init, &uni_train, &tc).unwrap();

        let weights = LossWeights::linear(10);
        let mut improved = 0;
        let mut deltas = vec![];
        for g in &ds.test {
            let h = build_cost_hamiltonian(ProblemClass::Mis, g);
            let emb = embed_instance(EmbeddingBackend::Unihetco, ProblemClass::Mis, g, Some(&gnn));
            let before = meta_loss_value(&rollout(&uni_model, &h, emb.as_deref(), 10).unwrap(), &weights);
            let adapted = fine_tune(&uni_model, &h, emb.as_deref(), 5, 1e-3, 10).unwrap();
            let after = meta_loss_value(&rollout(&adapted, &h, emb.as_deref(), 10).unwrap(), &weights);
            deltas.push(after - before);
            if after < before { improved += 1; }
        }
        deltas.sort_by(f64::total_cmp);
        let pos: Vec<String> = deltas.iter().filter(|&&d| d >= 0.0).map(|d| format!("{d:.2e}")).collect();
        println!("seed {seed}: improved {improved}/20; non-improving deltas: [{}]", pos.join(", "));
    }
}
