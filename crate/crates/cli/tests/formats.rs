//! Round-trip and corruption behavior of the on-disk formats.

use mtmv_core::datagen::{gen_synthetic, PlantedSpec, Split};
use mtmv_core::nets::Modality;
use mtmv_core::Tensor;

use mtmv_cli::config_io::{parse_config_str, serialize_config};
use mtmv_cli::dataset_io::{load_dataset, save_dataset};
use mtmv_cli::error::CliError;
use mtmv_cli::tensor_io::{read_tensor, write_tensor};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample_dataset(seed: u64) -> mtmv_core::datagen::MultiViewDataset {
    let spec = PlantedSpec {
        task_groups: vec![vec![0, 1], vec![2]],
        signal: vec![1.0, 0.5],
        noise: 0.3,
        label_noise: 0.1,
        seed,
    };
    gen_synthetic(
        &spec,
        20,
        &[(Modality::Vector, vec![4]), (Modality::Image2d, vec![1, 3, 3])],
    )
    .unwrap()
}

#[test]
fn dataset_round_trip_is_bit_exact() {
    for seed in 0..5u64 {
        let ds = sample_dataset(seed);
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(ds, back, "seed {seed}");
        assert_eq!(back.split_indices(0, Split::Valid), ds.split_indices(0, Split::Valid));
    }
}

#[test]
fn manifest_referencing_missing_file_errors() {
    let ds = sample_dataset(9);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("task1/view0.mtmv")).unwrap();
    match load_dataset(dir.path()) {
        Err(CliError::Data(m)) => assert!(m.contains("task1"), "{m}"),
        other => panic!("expected data error, got {other:?}"),
    }
}

#[test]
fn tensor_with_wrong_declared_shape_errors() {
    let ds = sample_dataset(10);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    // overwrite one feature file with a differently-shaped tensor
    let path = dir.path().join("task0/view0.mtmv");
    write_tensor(&path, &Tensor::zeros(&[3, 4])).unwrap();
    match load_dataset(dir.path()) {
        Err(CliError::Data(m)) => {
            assert!(m.contains("expects") || m.contains("shape"), "{m}");
        }
        other => panic!("expected data error, got {other:?}"),
    }
}

#[test]
fn truncated_tensor_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.mtmv");
    write_tensor(&path, &Tensor::zeros(&[4, 4])).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
    assert!(matches!(read_tensor(&path), Err(CliError::Data(_))));
}

#[test]
fn corrupted_manifest_json_errors() {
    let ds = sample_dataset(11);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    std::fs::write(dir.path().join("manifest.json"), b"{ not json").unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(CliError::Data(_))));
}

#[test]
fn model_save_reload_preserves_predictions() {
    use mtmv_cli::arch_io::save_architecture;
    use mtmv_cli::model_io::{load_model, ARCH_FILE, PARAMS_FILE};
    use mtmv_cli::params_io::save_params;
    use mtmv_core::clustering::{ClusterAssignment, SplitDecision};
    use mtmv_core::config::TrainConfig;
    use mtmv_core::widening::{build_model, split_layer, train_round};

    for cross_stitch in [false, true] {
        let ds = sample_dataset(42);
        let mut cfg = TrainConfig::with_seed(42);
        cfg.cross_stitch = cross_stitch;
        let mut model = build_model(&ds, &cfg).unwrap();
        train_round(&mut model, &ds, &cfg, 5, 1).unwrap();
        let decision = SplitDecision {
            d: 2,
            assignment: ClusterAssignment { labels: vec![0, 0, 1], d: 2 },
            loss: 0.0,
            candidates: vec![],
        };
        split_layer(&mut model, 0, &decision).unwrap();

        let dir = tempfile::tempdir().unwrap();
        save_architecture(&model.architecture(), &dir.path().join(ARCH_FILE)).unwrap();
        save_params(&model.store, &dir.path().join(PARAMS_FILE)).unwrap();
        let reloaded = load_model(dir.path()).unwrap();

        let rows: Vec<usize> = (0..10).collect();
        for task in 0..3 {
            let feats = ds.features_at(task, &rows).unwrap();
            let a = model.predict_task(task, &feats).unwrap();
            let b = reloaded.predict_task(task, &feats).unwrap();
            assert_eq!(a, b, "stitch={cross_stitch} task {task}: reload drifted");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    /// Random tensors survive the binary format bit-exactly.
    #[test]
    fn tensor_file_round_trip(seed in 0u64..10_000, rank in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape: Vec<usize> = (0..rank).map(|_| rng.gen_range(1..5)).collect();
        let numel: usize = shape.iter().product();
        let data: Vec<f64> = (0..numel).map(|_| rng.gen_range(-1e6..1e6)).collect();
        let t = Tensor::new(shape, data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.mtmv");
        write_tensor(&path, &t).unwrap();
        prop_assert_eq!(read_tensor(&path).unwrap(), t);
    }

    /// Randomized configs: serialize(parse(x)) parses back equal.
    #[test]
    fn config_round_trip(
        seed in 0u64..1_000_000,
        rounds in 0usize..5,
        alpha in 0.0f64..3.0,
        l0 in 0.0f64..1.0,
        lr in 0.001f64..1.0,
        batch in 0usize..64,
        cross in any::<bool>(),
    ) {
        let text = format!(
            r#"{{"seed": {seed}, "rounds": {rounds}, "alpha": {alpha}, "l0": {l0},
               "learning_rate": {lr}, "batch_size": {batch}, "cross_stitch": {cross},
               "dataset": "somewhere"}}"#
        );
        let cfg = parse_config_str(&text).unwrap();
        let cfg2 = parse_config_str(&serialize_config(&cfg)).unwrap();
        prop_assert_eq!(cfg, cfg2);
    }
}
