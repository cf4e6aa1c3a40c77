mod common;

use fedsim::data::{ClientDataset, Dataset, PartitionPlan};
use fedsim::fed::{
    aggregate, build_clients, client_update_fedavg, client_update_mmb, discordance,
    run_centralized, run_federated, CentralizedTrainer, ClientState, MetricsLog, MetricsRow,
    RoundReport, Seeds, TrainingConfig,
};
use fedsim::nn::{evaluate, init_weights, ModelWeights, NetworkSpec};
use fedsim::rng::SeededRng;
use fedsim::Error;
use proptest::prelude::*;

fn client(n: usize, seed: u64) -> ClientDataset<f64> {
    let (data, _) = common::synthetic_split(seed, n, 4, 3);
    ClientDataset { index: 0, data }
}

fn small_spec() -> NetworkSpec {
    NetworkSpec::new(4, vec![6], 3).unwrap()
}

fn bits(w: &ModelWeights<f64>) -> Vec<u64> {
    w.iter().map(|v| v.to_bits()).collect()
}

#[test]
fn batch_count_at_least_t_uses_every_batch() {
    let spec = small_spec();
    let w = init_weights(&spec, 1);
    let mut state = ClientState::new(client(95, 2), 10, 25, 3).unwrap();
    let r = client_update_mmb(&spec, 0, &w, &mut state, 0.1).unwrap();
    assert_eq!(r.local_updates, 10);
    assert_eq!(r.samples, 95);
}

#[test]
fn batch_count_one_takes_a_single_step() {
    let spec = small_spec();
    let w = init_weights(&spec, 1);
    let mut state = ClientState::new(client(95, 2), 10, 1, 3).unwrap();
    let r = client_update_mmb(&spec, 0, &w, &mut state, 0.1).unwrap();
    assert_eq!(r.local_updates, 1);
    assert_eq!(r.samples, 10);
}

#[test]
fn zero_learning_rate_leaves_weights_unchanged() {
    let spec = small_spec();
    let w = init_weights(&spec, 1);
    let mut state = ClientState::new(client(40, 2), 8, 3, 3).unwrap();
    let r = client_update_mmb(&spec, 0, &w, &mut state, 0.0).unwrap();
    assert_eq!(r.weights, w);

    let (train, _) = common::synthetic_split(2, 40, 4, 3);
    let mut t = CentralizedTrainer::free_running(spec, w.clone(), 0.0, train, 8, 3).unwrap();
    for _ in 0..7 {
        t.step().unwrap();
    }
    assert_eq!(t.weights(), &w);
    assert_eq!(t.iterations(), 7);
}

#[test]
fn fedavg_local_update_counts() {
    let spec = small_spec();
    let w = init_weights(&spec, 1);
    let mut a = ClientState::new(client(100, 2), 10, 10, 3).unwrap();
    assert_eq!(
        client_update_fedavg(&spec, &w, &mut a, 1, 0.1)
            .unwrap()
            .local_updates,
        10
    );
    let mut b = ClientState::new(client(95, 2), 10, 10, 3).unwrap();
    let r = client_update_fedavg(&spec, &w, &mut b, 2, 0.1).unwrap();
    assert_eq!(r.local_updates, 20);
    assert_eq!(r.samples, 190);
    assert_eq!(b.local_updates(), 20);
}

#[test]
fn fedavg_one_epoch_equals_fedmmb_with_full_window() {
    let (train, test) = common::synthetic_split(4, 240, 4, 3);
    let spec = small_spec();
    let plan = PartitionPlan::iid(4, 5);
    let run = |cfg: TrainingConfig| {
        let mut clients = build_clients(plan.apply(&train).unwrap(), &cfg).unwrap();
        run_federated(&spec, &cfg, init_weights(&spec, 6), &mut clients, &test).unwrap()
    };
    // 60 samples per client, B=7 gives T=9
    let avg = run(TrainingConfig::fedavg(4, 7, 1, 0.05, 12));
    let mmb = run(TrainingConfig::fedmmb(4, 7, 9, 0.05, 12));
    assert_eq!(bits(&avg.weights), bits(&mmb.weights));
    assert_eq!(avg.log, mmb.log);
}

#[test]
fn single_client_full_window_equals_centralized() {
    let (train, test) = common::synthetic_split(7, 53, 4, 3);
    let spec = small_spec();
    let init = init_weights(&spec, 8);
    let seeds = Seeds {
        init: 8,
        shuffle: 21,
        partition: 0,
    };
    // T = ceil(53 / 6) = 9 centralized steps per federated round
    let fed_cfg = TrainingConfig::fedmmb(1, 6, 9, 0.05, 10).with_seeds(seeds);
    let clients = vec![ClientDataset {
        index: 0,
        data: train.clone(),
    }];
    let mut clients = build_clients(clients, &fed_cfg).unwrap();
    let fed = run_federated(&spec, &fed_cfg, init.clone(), &mut clients, &test).unwrap();
    let cent_cfg = TrainingConfig::centralized(6, 0.05, 90)
        .with_eval_every(9)
        .with_seeds(seeds);
    let cent = run_centralized(&spec, &cent_cfg, init, &train, &test).unwrap();
    assert_eq!(bits(&fed.weights), bits(&cent.weights));
    for (f, c) in fed.log.rows().iter().zip(cent.log.rows()) {
        assert_eq!(c.round, f.round * 9);
        assert_eq!(f.test_loss.to_bits(), c.test_loss.to_bits());
    }
}

#[test]
fn full_batch_descent_decreases_training_loss() {
    let (train, _) = common::synthetic_split(9, 300, 4, 3);
    let spec = small_spec();
    let n = train.len();
    let mut t =
        CentralizedTrainer::free_running(spec.clone(), init_weights(&spec, 1), 0.01, train, n, 2)
            .unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        let loss = t.step().unwrap();
        assert!(loss < last, "{loss} !< {last}");
        last = loss;
    }
}

#[test]
fn cumulative_updates_follow_the_windows() {
    // each client: 30 samples, B=4 -> T=8; C=3 -> windows of 3, 3, 2
    let (train, test) = common::synthetic_split(3, 60, 4, 3);
    let spec = small_spec();
    let cfg = TrainingConfig::fedmmb(2, 4, 3, 0.05, 7);
    let mut clients = build_clients(PartitionPlan::iid(2, 1).apply(&train).unwrap(), &cfg).unwrap();
    let out = run_federated(&spec, &cfg, init_weights(&spec, 2), &mut clients, &test).unwrap();
    let per_client = [3, 3, 2, 3, 3, 2, 3];
    let mut total = 0;
    for (row, mu) in out.log.rows().iter().zip(per_client) {
        total += 2 * mu;
        assert_eq!(row.cum_local_updates, total);
    }
    assert!(clients.iter().all(|c| c.local_updates() == 19));
}

#[test]
fn evaluation_rounds_follow_eval_every() {
    let (train, test) = common::synthetic_split(3, 60, 4, 3);
    let spec = small_spec();
    let cfg = TrainingConfig::fedmmb(3, 4, 2, 0.05, 12).with_eval_every(4);
    let mut clients = build_clients(PartitionPlan::iid(3, 1).apply(&train).unwrap(), &cfg).unwrap();
    let out = run_federated(&spec, &cfg, init_weights(&spec, 2), &mut clients, &test).unwrap();
    assert_eq!(out.log.rounds(), vec![4, 8, 12]);
    let last = evaluate(&spec, &out.weights, &test).unwrap();
    assert_eq!(out.log.rows()[2].test_loss, last.loss);
    assert!(matches!(
        run_federated(
            &spec,
            &cfg.clone().with_eval_every(5),
            init_weights(&spec, 2),
            &mut clients,
            &test
        ),
        Err(Error::Config(_))
    ));
}

#[test]
fn metrics_csv_round_trips() {
    let (train, test) = common::synthetic_split(3, 60, 4, 3);
    let spec = small_spec();
    let cfg = TrainingConfig::fedavg(3, 4, 2, 0.05, 6).with_train_loss(true);
    let mut clients = build_clients(PartitionPlan::iid(3, 1).apply(&train).unwrap(), &cfg).unwrap();
    let out = run_federated(&spec, &cfg, init_weights(&spec, 2), &mut clients, &test).unwrap();
    let text = out.log.to_csv_string().unwrap();
    let back = MetricsLog::read_csv(text.as_bytes()).unwrap();
    assert_eq!(back, out.log);
    assert!(back.rows().iter().all(|r| r.train_loss.is_some()));
}

#[test]
fn parallel_and_sequential_runs_agree() {
    let (train, test) = common::synthetic_split(5, 360, 4, 3);
    let spec = small_spec();
    let plan = PartitionPlan::noniid_l(6, 2, 3);
    let run = |parallel: bool| {
        let cfg = TrainingConfig::fedmmb(6, 5, 3, 0.05, 20).with_parallel(parallel);
        let mut clients = build_clients(plan.apply(&train).unwrap(), &cfg).unwrap();
        run_federated(&spec, &cfg, init_weights(&spec, 6), &mut clients, &test).unwrap()
    };
    let (a, b) = (run(true), run(false));
    assert_eq!(
        a.log.to_csv_string().unwrap(),
        b.log.to_csv_string().unwrap()
    );
    assert_eq!(bits(&a.weights), bits(&b.weights));
}

fn log_of(losses: &[f64]) -> MetricsLog {
    let mut log = MetricsLog::new();
    for (i, &l) in losses.iter().enumerate() {
        log.push(MetricsRow {
            round: 10 * (i as u64 + 1),
            test_loss: l,
            test_accuracy: 0.5,
            train_loss: None,
            cum_local_updates: 0,
            cum_bytes: 0,
        })
        .unwrap();
    }
    log
}

fn reports(rng: &mut SeededRng, spec: &NetworkSpec, k: usize) -> Vec<RoundReport<f64>> {
    (0..k)
        .map(|j| RoundReport {
            client: j,
            weights: init_weights(spec, rng.next_u64()),
            samples: 1 + rng.below(50) as usize,
            local_updates: 1,
            loss_sum: 0.0,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discordance_is_symmetric(a in prop::collection::vec(0.0f64..5.0, 1..20), shift in -1.0f64..1.0) {
        let b: Vec<f64> = a.iter().map(|v| v + shift * v.sin()).collect();
        let (la, lb) = (log_of(&a), log_of(&b));
        let ab = discordance(&la, &lb, 0.01).unwrap();
        let ba = discordance(&lb, &la, 0.01).unwrap();
        prop_assert_eq!(ab.delta, ba.delta);
        prop_assert_eq!(discordance(&la, &la, 0.01).unwrap().delta, 0.0);
        let mean: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
        prop_assert!((ab.delta - mean).abs() <= 1e-15 * (1.0 + mean));
    }

    #[test]
    fn aggregate_is_a_convex_combination(seed in any::<u64>(), k in 1usize..7) {
        let mut rng = SeededRng::new(seed);
        let spec = small_spec();
        let reps = reports(&mut rng, &spec, k);
        let avg = aggregate(&reps).unwrap();
        let total: f64 = reps.iter().map(|r| r.samples as f64).sum();
        let flats: Vec<Vec<f64>> = reps.iter().map(|r| r.weights.to_flat()).collect();
        for (p, v) in avg.iter().enumerate() {
            let lo = flats.iter().map(|f| f[p]).fold(f64::INFINITY, f64::min);
            let hi = flats.iter().map(|f| f[p]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= *v && *v <= hi);
            let plain: f64 = reps.iter().zip(&flats).map(|(r, f)| r.samples as f64 * f[p]).sum::<f64>() / total;
            prop_assert!((v - plain).abs() <= 1e-12);
        }
    }

    #[test]
    fn aggregate_of_identical_weights_is_exact(seed in any::<u64>(), k in 1usize..7) {
        let mut rng = SeededRng::new(seed);
        let spec = small_spec();
        let shared = init_weights(&spec, rng.next_u64());
        let mut reps = reports(&mut rng, &spec, k);
        for r in &mut reps {
            r.weights = shared.clone();
        }
        prop_assert_eq!(aggregate(&reps).unwrap(), shared);
    }
}

#[test]
fn mismatched_rounds_are_rejected() {
    let a = log_of(&[1.0, 2.0]);
    let b = log_of(&[1.0]);
    assert!(matches!(
        discordance(&a, &b, 0.01),
        Err(Error::MismatchedRounds)
    ));
}

#[test]
fn client_data_is_untouched_by_training() {
    let data: Dataset<f64> = client(30, 2).data;
    let spec = small_spec();
    let mut state = ClientState::new(
        ClientDataset {
            index: 0,
            data: data.clone(),
        },
        4,
        2,
        1,
    )
    .unwrap();
    for i in 0..5 {
        client_update_mmb(&spec, i, &init_weights(&spec, 1), &mut state, 0.1).unwrap();
    }
    assert_eq!(state.data().data, data);
}
