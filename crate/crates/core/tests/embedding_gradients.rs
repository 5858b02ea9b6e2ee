use liftrack::embedding::{
    compute_centroids, gradient_check, train, train_with, ArchConfig, AutoEncoderModel, LayerSpec, TrainingConfig, TrainingSet,
};
use liftrack::ImagePatch;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn patches(seed: u64, count: usize, shape: (usize, usize, usize)) -> Vec<ImagePatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (c, h, w) = shape;
    (0..count)
        .map(|_| ImagePatch::new(c, h, w, (0..c * h * w).map(|_| rng.gen()).collect()).unwrap())
        .collect()
}

fn check(arch: ArchConfig, lambda: f64, seed: u64) -> f64 {
    let model = AutoEncoderModel::new(arch.clone(), seed).unwrap();
    assert!(model.num_params() <= 5000, "{} params", model.num_params());
    let xs = patches(seed + 50, 4, arch.input);
    let labels = [0, 0, 1, 1];
    let table = compute_centroids(&model, &xs, &labels).unwrap();
    let refs: Vec<_> = xs.iter().collect();
    let report = gradient_check(&model, &refs, &labels, &table, lambda, 40, seed).unwrap();
    eprintln!("lambda {lambda}: skipped {}/{} {:?}", report.skipped, report.checked + report.skipped, report.per_layer);
    assert!(report.checked >= 2 * report.skipped);
    report.max_relative_error
}

#[test]
fn linear_autoencoder() {
    let arch = ArchConfig {
        input: (6, 1, 1),
        latent_dim: 3,
        encoder: vec![LayerSpec::Dense { out: 3 }],
        decoder: vec![LayerSpec::Dense { out: 6 }],
    };
    for lambda in [0.0, 0.5, 0.95] {
        assert!(check(arch.clone(), lambda, 1) < 1e-6);
    }
}

#[test]
fn small_conv_model_without_batchnorm() {
    let arch = ArchConfig::pyramid((3, 8, 8), 2, 4, 8, false);
    for lambda in [0.0, 0.5, 0.95] {
        assert!(check(arch.clone(), lambda, 2) < 1e-4);
    }
}

#[test]
fn small_conv_model_with_batchnorm() {
    let arch = ArchConfig::pyramid((3, 8, 8), 2, 4, 8, true);
    for lambda in [0.0, 0.5, 0.95] {
        assert!(check(arch.clone(), lambda, 3) < 1e-4);
    }
}

#[test]
fn reconstruction_descends_and_is_reproducible() {
    let arch = ArchConfig::pyramid((3, 8, 8), 2, 4, 8, false);
    let xs = patches(9, 4, arch.input);
    let data = TrainingSet::new(xs, vec![1, 1, 2, 2], vec![0, 1, 2, 3]).unwrap();
    let config = TrainingConfig {
        epochs: 200,
        learning_rate: 0.01,
        lambda_schedule: vec![(0, 0.0)],
        seed: 4,
        plateau_patience: None,
    };
    let run = || {
        let mut m = AutoEncoderModel::new(arch.clone(), 4).unwrap();
        let trace = train(&mut m, &data, &config).unwrap();
        (m, trace)
    };
    let (m1, t1) = run();
    let (m2, t2) = run();
    assert!(t1.last().unwrap().reconstruction < t1[0].reconstruction);
    assert_eq!(t1, t2);
    assert_eq!(m1, m2);
}

#[test]
fn clustering_pulls_latents_towards_centroids() {
    let arch = ArchConfig::pyramid((3, 8, 8), 2, 4, 8, false);
    let xs = patches(11, 12, arch.input);
    let frames: Vec<u32> = (0..12).map(|i| 1 + i / 3).collect();
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let data = TrainingSet::new(xs.clone(), frames, labels.clone()).unwrap();
    let config = TrainingConfig {
        epochs: 60,
        learning_rate: 0.01,
        lambda_schedule: vec![(0, 0.0), (30, 0.95)],
        seed: 5,
        plateau_patience: None,
    };
    let spread = |m: &AutoEncoderModel| {
        let table = compute_centroids(m, &xs, &labels).unwrap();
        xs.iter()
            .zip(&labels)
            .map(|(x, &l)| m.encode(x).unwrap().distance(table.get(l).unwrap()))
            .sum::<f64>()
            / xs.len() as f64
    };
    let mut model = AutoEncoderModel::new(arch, 5).unwrap();
    let mut at_switch = None;
    train_with(&mut model, &data, &config, |epoch, m| {
        if epoch == 30 {
            at_switch = Some(spread(m));
        }
    })
    .unwrap();
    let before = at_switch.unwrap();
    let after = spread(&model);
    assert!(after < before, "{after} !< {before}");
}
