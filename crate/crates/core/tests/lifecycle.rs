use chrono::NaiveDate;
use flowcast::data::{
    build_windows, generate_synthetic, BaseProfile, Normalizer, SampleWindow, SyntheticConfig,
};
use flowcast::lifecycle::{
    decode_model, encode_model, load_model, online_step, retrain, save_model, train_batch,
    transfer, BatchPolicy, OnlineConfig, TrainingConfig,
};
use flowcast::nn::{LagMatrix, NetworkModel, NetworkSpec};
use flowcast::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small() -> NetworkSpec {
    NetworkSpec {
        conv_filters: 8,
        lstm_cells: 10,
        dense_units: 8,
        ..NetworkSpec::standard()
    }
}

fn corridor(days: usize, amplitude: f64, noise_std: f64, seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        road_name: format!("road-{seed}"),
        start_date: NaiveDate::from_ymd_opt(2017, 1, 2).unwrap(),
        days,
        base_profile: BaseProfile::default(),
        amplitude,
        weekend_scale: 0.7,
        special_events: Vec::new(),
        drift: 0.0,
        year_days: 365,
        noise_std,
        propagation_lag: 1,
        seed,
    }
}

/// Normalized windows for slots `range`, with the normalizer fitted on `fit`.
fn windows(
    cfg: &SyntheticConfig,
    fit: std::ops::Range<usize>,
    range: std::ops::Range<usize>,
) -> Vec<SampleWindow> {
    let d = generate_synthetic(cfg).unwrap();
    let n = Normalizer::fit(&d, fit).unwrap();
    n.apply_windows(&build_windows(&d, range).unwrap()).unwrap()
}

fn config(epochs: usize, learning_rate: f64, seed: u64) -> TrainingConfig {
    TrainingConfig {
        epochs,
        learning_rate,
        seed,
        ..TrainingConfig::default()
    }
}

fn random_windows(n: usize, seed: u64) -> Vec<LagMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            LagMatrix::new(5, 9, (0..45).map(|_| rng.random_range(0.0..1.2)).collect()).unwrap()
        })
        .collect()
}

fn mean_loss(model: &NetworkModel, windows: &[SampleWindow]) -> f64 {
    let mut m = model.clone();
    m.reset_state();
    let total: f64 = windows
        .iter()
        .map(|w| {
            let e = m.forward(&w.features, true).unwrap() - w.target;
            e * e
        })
        .sum();
    total / windows.len() as f64
}

#[test]
fn training_is_deterministic_per_seed() {
    let w = windows(&corridor(8, 1.0, 8.0, 1), 0..768, 96..288);
    let a = train_batch(small(), &w, &config(5, 1e-2, 4)).unwrap();
    let b = train_batch(small(), &w, &config(5, 1e-2, 4)).unwrap();
    let c = train_batch(small(), &w, &config(5, 1e-2, 5)).unwrap();
    assert!(a.model.same_weights(&b.model));
    assert_eq!(a.loss_trace, b.loss_trace);
    assert!(!a.model.same_weights(&c.model));
}

#[test]
fn null_training() {
    let w = windows(&corridor(8, 1.0, 8.0, 1), 0..768, 96..192);
    let out = train_batch(small(), &w, &config(1, 0.0, 7)).unwrap();
    assert_eq!(out.loss_trace.len(), 1);
    assert!(out
        .model
        .same_weights(&NetworkModel::init(small(), 7).unwrap()));
    assert!(matches!(
        train_batch(small(), &w, &config(0, 1e-3, 7)),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        train_batch(small(), &[], &config(1, 1e-3, 7)),
        Err(Error::Contract(_))
    ));
    let mut reversed = w.clone();
    reversed.reverse();
    assert!(matches!(
        train_batch(small(), &reversed, &config(1, 1e-3, 7)),
        Err(Error::Contract(_))
    ));
}

#[test]
fn small_model_overfits_one_noise_free_day() {
    // A single day is a single day-batch, so per-window updates are used to
    // give the optimizer more than 500 steps.
    let w = windows(&corridor(8, 1.0, 0.0, 1), 96..192, 96..192);
    let cfg = TrainingConfig {
        batch_policy: BatchPolicy::Window,
        ..config(500, 1e-2, 1)
    };
    let out = train_batch(small(), &w, &cfg).unwrap();
    let (first, last) = (out.loss_trace[0], *out.loss_trace.last().unwrap());
    assert!(last < 0.01 * first, "first {first} last {last}");
}

#[test]
fn day_batches_include_the_partial_last_day() {
    let w = windows(&corridor(8, 1.0, 8.0, 1), 0..768, 96..250);
    let out = train_batch(small(), &w, &config(2, 1e-2, 3)).unwrap();
    assert_eq!(out.loss_trace.len(), 2);
    let only_full = train_batch(small(), &w[..96], &config(1, 1e-2, 3))
        .unwrap()
        .model;
    let with_partial = train_batch(small(), &w, &config(1, 1e-2, 3)).unwrap().model;
    assert!(!only_full.same_weights(&with_partial));
}

#[test]
fn retrain_contracts() {
    let w = windows(&corridor(8, 1.0, 8.0, 2), 0..768, 96..288);
    let donor = train_batch(small(), &w, &config(3, 1e-2, 1)).unwrap().model;

    let frozen = retrain(transfer(&donor), &w, &config(3, 0.0, 9)).unwrap();
    assert!(frozen.model.same_weights(&donor));

    let fresh = NetworkModel::init(small(), 12).unwrap();
    let a = retrain(fresh, &w, &config(4, 1e-2, 12)).unwrap();
    let b = train_batch(small(), &w, &config(4, 1e-2, 12)).unwrap();
    assert!(a.model.same_weights(&b.model));
    assert_eq!(a.loss_trace, b.loss_trace);
}

#[test]
fn retraining_adapts_a_scaled_donor() {
    // Donor traffic is 1.5x the target's. Days 0..14 train the donor, target
    // days 14..21 stand in for January and 21..28 for February.
    let donor_cfg = corridor(28, 1.5, 10.0, 31);
    let target_cfg = corridor(28, 1.0, 10.0, 32);
    let donor_windows = windows(&donor_cfg, 0..14 * 96, 5..14 * 96);
    let january = 14 * 96..21 * 96;
    let january_windows = windows(&target_cfg, january.clone(), january.clone());
    let february_windows = windows(&target_cfg, january, 21 * 96..28 * 96);

    let donor = train_batch(small(), &donor_windows, &config(60, 1e-2, 5))
        .unwrap()
        .model;
    let retrained = retrain(transfer(&donor), &january_windows, &config(60, 1e-2, 5))
        .unwrap()
        .model;
    let before = mean_loss(&donor, &february_windows);
    let after = mean_loss(&retrained, &february_windows);
    assert!(after < before, "donor {before} retrained {after}");
}

#[test]
fn transfer_copies_and_isolates() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut source = NetworkModel::init(small(), 3).unwrap();
    for v in source.params_mut().iter_mut() {
        *v += rng.random_range(-0.1..0.1);
    }
    let probe = random_windows(20, 8);
    source.forward(&probe[0], true).unwrap();
    let mut copy = transfer(&source);
    assert!(copy.state().is_zero());
    assert!(copy.same_weights(&source));
    assert!(transfer(&copy).same_weights(&copy));
    for w in &probe {
        assert_eq!(
            copy.predict(w).unwrap().to_bits(),
            source.predict(w).unwrap().to_bits()
        );
    }

    let before: Vec<f64> = probe.iter().map(|w| source.predict(w).unwrap()).collect();
    let (_, grads) = copy.compute_gradients(&probe[1], 0.9).unwrap();
    copy.apply_update(&grads, 0.5).unwrap();
    assert!(!copy.same_weights(&source));
    let after: Vec<f64> = probe.iter().map(|w| source.predict(w).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn frozen_online_step_is_a_forward_pass() {
    let model = NetworkModel::init(small(), 14).unwrap();
    let (mut online, mut plain) = (model.clone(), model.clone());
    for (i, w) in random_windows(30, 2).iter().enumerate() {
        let p = online_step(&mut online, w, i as f64 * 0.03, &OnlineConfig::frozen()).unwrap();
        let q = plain.forward(w, true).unwrap();
        assert_eq!(p.to_bits(), q.to_bits());
    }
    assert!(online.same_weights(&model));
    assert_eq!(online.state(), plain.state());
}

#[test]
fn repeated_step_on_one_sample_never_increases_error() {
    let model = NetworkModel::init(small(), 15).unwrap();
    let window = &random_windows(1, 4)[0];
    let cfg = OnlineConfig {
        learning_rate: 1e-2,
        updates_per_sample: 1,
    };
    let mut m = model.clone();
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        m.reset_state();
        let p = online_step(&mut m, window, 0.8, &cfg).unwrap();
        let err = (p - 0.8) * (p - 0.8);
        assert!(err <= last, "{err} > {last}");
        last = err;
    }
    assert!(last < 1e-3, "{last}");
}

#[test]
fn online_prediction_precedes_its_update() {
    let model = NetworkModel::init(small(), 16).unwrap();
    let stream = random_windows(10, 5);
    let cfg = OnlineConfig {
        learning_rate: 5e-2,
        updates_per_sample: 1,
    };
    let (mut a, mut b) = (model.clone(), model);
    for w in &stream[..9] {
        online_step(&mut a, w, 0.5, &cfg).unwrap();
        online_step(&mut b, w, 0.5, &cfg).unwrap();
    }
    let pa = online_step(&mut a, &stream[9], 0.0, &cfg).unwrap();
    let pb = online_step(&mut b, &stream[9], 1.0, &cfg).unwrap();
    assert_eq!(pa.to_bits(), pb.to_bits());
    assert!(!a.same_weights(&b));

    assert!(matches!(
        online_step(&mut a, &stream[0], f64::NAN, &cfg),
        Err(Error::Data(_))
    ));
}

#[test]
fn persistence_round_trip_is_bit_exact() {
    let w = windows(&corridor(8, 1.0, 8.0, 1), 0..768, 96..288);
    let mut model = train_batch(small(), &w, &config(3, 1e-2, 2)).unwrap().model;
    model.forward(&w[0].features, true).unwrap();

    let mut bytes = Vec::new();
    save_model(&model, &mut bytes).unwrap();
    let loaded = load_model(bytes.as_slice()).unwrap();
    assert!(loaded.same_weights(&model));
    assert!(loaded.state().is_zero());
    assert_eq!(encode_model(&loaded), bytes);
    for p in random_windows(100, 6) {
        assert_eq!(
            loaded.predict(&p).unwrap().to_bits(),
            model.predict(&p).unwrap().to_bits()
        );
    }

    for cut in [0, 3, 4, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(
            matches!(decode_model(&bytes[..cut]), Err(Error::CorruptFile(_))),
            "cut at {cut}"
        );
    }
}

#[test]
fn foreign_spec_loads_with_its_own_shape() {
    let other = NetworkSpec {
        conv_filters: 3,
        conv_kernel: 3,
        lstm_cells: 4,
        dense_units: 6,
        stateful: false,
        ..NetworkSpec::standard()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut source = NetworkModel::init(other, 10).unwrap();
    for v in source.params_mut().iter_mut() {
        *v = rng.random_range(-0.5..0.5);
    }
    let loaded = decode_model(&encode_model(&source)).unwrap();
    assert_eq!(loaded.spec(), &other);
    for p in random_windows(25, 7) {
        assert_eq!(
            loaded.predict(&p).unwrap().to_bits(),
            source.predict(&p).unwrap().to_bits()
        );
    }
}
