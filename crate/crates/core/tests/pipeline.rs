use std::fs;

use egosenti::datamodel::{FeatureLayout, FUSED_DIM};
use egosenti::eval::{run_cv, CvConfig, EventSource};
use egosenti::features::NormalizationConfig;
use egosenti::pipeline::{Dataset, PathOverrides};
use egosenti::segmentation::SegmentationParams;
use egosenti::svm::TrainConfig;
use egosenti::synth::{
    generate_dataset, write_dataset, ImagesPerEvent, SynthConfig, ANP_FILE, CATALOG_FILE, CNN_FILE,
    CONFIG_FILE, MANIFEST_FILE,
};
use egosenti::Error;

fn small() -> SynthConfig {
    SynthConfig {
        events_per_class: [10, 12, 6],
        images_per_event: ImagesPerEvent {
            mean: 12.0,
            std: 4.0,
            min: 6,
        },
        streams: 4,
        seed: 5,
        ..SynthConfig::default()
    }
}

fn cv_config(seed: u64) -> CvConfig {
    CvConfig {
        folds: 5,
        seed,
        train: TrainConfig {
            max_epochs: 100_000,
            ..TrainConfig::default()
        },
        ..CvConfig::default()
    }
}

#[test]
fn synthetic_dataset_round_trips_through_disk() {
    let ds = generate_dataset(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = write_dataset(&ds, dir.path()).unwrap();
    for name in [CNN_FILE, ANP_FILE, CATALOG_FILE, MANIFEST_FILE, CONFIG_FILE] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let loaded = Dataset::load(&manifest_path, &PathOverrides::default()).unwrap();
    assert_eq!(loaded.manifest, ds.manifest);
    assert_eq!(loaded.cnn, ds.cnn);
    assert_eq!(loaded.anp, ds.anp);
    assert_eq!(loaded.catalog.sha256(), ds.catalog.sha256());

    let vectors = loaded.fuse(&NormalizationConfig::default()).unwrap();
    let report = run_cv(&loaded.manifest, &vectors, &cv_config(3)).unwrap();
    assert!(report.event.all.mean.unwrap() >= 99.0);
}

#[test]
fn same_seed_writes_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_dataset(&generate_dataset(&small()).unwrap(), a.path()).unwrap();
    write_dataset(&generate_dataset(&small()).unwrap(), b.path()).unwrap();
    for name in [CNN_FILE, ANP_FILE, CATALOG_FILE, MANIFEST_FILE, CONFIG_FILE] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let other = tempfile::tempdir().unwrap();
    let cfg = SynthConfig { seed: 6, ..small() };
    write_dataset(&generate_dataset(&cfg).unwrap(), other.path()).unwrap();
    assert_ne!(
        fs::read(a.path().join(CNN_FILE)).unwrap(),
        fs::read(other.path().join(CNN_FILE)).unwrap()
    );
}

#[test]
fn tampered_feature_file_fails_its_pin() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = write_dataset(&generate_dataset(&small()).unwrap(), dir.path()).unwrap();
    let path = dir.path().join(ANP_FILE);
    let mut bytes = fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    fs::write(&path, bytes).unwrap();
    assert!(matches!(
        Dataset::load(&manifest_path, &PathOverrides::default()),
        Err(Error::HashMismatch { .. })
    ));
}

#[test]
fn missing_feature_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = write_dataset(&generate_dataset(&small()).unwrap(), dir.path()).unwrap();
    let overrides = PathOverrides {
        cnn: Some(dir.path().join("absent.egsf")),
        ..PathOverrides::default()
    };
    assert!(matches!(
        Dataset::load(&manifest_path, &overrides),
        Err(Error::FileNotFound(_))
    ));
}

#[test]
fn mismatched_feature_dims_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = write_dataset(&generate_dataset(&small()).unwrap(), dir.path()).unwrap();
    // the ANP file has 32 columns, not the manifest's 64 CNN columns
    let overrides = PathOverrides {
        cnn: Some(dir.path().join(ANP_FILE)),
        ..PathOverrides::default()
    };
    assert!(matches!(
        Dataset::load(&manifest_path, &overrides),
        Err(Error::DimMismatch {
            expected: 64,
            found: 32
        })
    ));
}

#[test]
fn segmented_evaluation_recovers_planted_events() {
    let ds = generate_dataset(&SynthConfig {
        noise_sigma: 0.05,
        ..small()
    })
    .unwrap();
    let vectors = egosenti::features::fuse_matrices(
        &ds.cnn,
        &ds.anp,
        ds.manifest.feature_dims,
        &ds.catalog,
        &NormalizationConfig::default(),
    )
    .unwrap();
    let config = CvConfig {
        events: EventSource::Segmented(SegmentationParams {
            merge_threshold: 0.1,
            ..SegmentationParams::default()
        }),
        ..cv_config(4)
    };
    let report = run_cv(&ds.manifest, &vectors, &config).unwrap();
    let held_out: usize = report.folds.iter().map(|f| f.test_events).sum();
    assert_eq!(held_out, ds.manifest.events.len());
    assert!(report.event.all.mean.unwrap() >= 99.0);
}

#[test]
fn full_dimension_dataset_runs_end_to_end() {
    let ds = generate_dataset(&SynthConfig {
        events_per_class: [4, 4, 4],
        images_per_event: ImagesPerEvent {
            mean: 6.0,
            std: 0.0,
            min: 6,
        },
        dims: FeatureLayout::FULL,
        streams: 2,
        seed: 2,
        ..SynthConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = write_dataset(&ds, dir.path()).unwrap();
    let loaded = Dataset::load(&manifest_path, &PathOverrides::default()).unwrap();
    assert_eq!(loaded.catalog.len(), 2089);
    let vectors = loaded.fuse(&NormalizationConfig::default()).unwrap();
    assert!(vectors.iter().all(|v| v.len() == FUSED_DIM));
    let report = run_cv(&loaded.manifest, &vectors, &cv_config(1)).unwrap();
    assert_eq!(report.folds.len(), 5);
}
