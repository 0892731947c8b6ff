//! Seeded synthetic photostreams with planted event boundaries and class
//! signal.
//!
//! Every image is drawn from a joint latent vector of `cnn + anp`
//! coordinates:
//!
//! ```text
//! z = class_signal * c_class + event_signal * e_event + noise_sigma * n
//! ```
//!
//! with `c`, `e` and `n` standard normal per coordinate. The CNN block is the
//! first `cnn` coordinates of `z`; ANP likelihoods are `1 - exp(-max(z, 0))`
//! over the remaining ones, so both blocks carry the class signal.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datamodel::{
    sha256_hex, AnpCatalog, AnpEntry, DatasetManifest, Event, FeatureLayout, FeatureMatrix,
    FeatureRefs, FileRef, ImageEntry, SentimentLabel, Stream, DEFAULT_MIN_EVENT_SIZE,
    MANIFEST_VERSION,
};
use crate::error::{Error, Result};

pub const CNN_FILE: &str = "cnn.egsf";
pub const ANP_FILE: &str = "anp.egsf";
pub const CATALOG_FILE: &str = "catalog.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "synth_config.json";

/// Sentiment values are kept out of `(-ZERO_BAND, ZERO_BAND)`.
const ZERO_BAND: f64 = 0.05;
const CAPTURE_INTERVAL_S: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagesPerEvent {
    pub mean: f64,
    pub std: f64,
    pub min: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Event counts in [`SentimentLabel::ALL`] order.
    pub events_per_class: [usize; 3],
    pub images_per_event: ImagesPerEvent,
    pub class_signal: f64,
    pub event_signal: f64,
    pub noise_sigma: f64,
    pub dims: FeatureLayout,
    pub streams: usize,
    pub min_event_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// Event counts and event-size statistics of the reference lifelog
    /// dataset, 20 day-long streams, reduced feature dims.
    fn default() -> Self {
        SynthConfig {
            events_per_class: [83, 107, 43],
            images_per_event: ImagesPerEvent {
                mean: 51.88,
                std: 52.19,
                min: DEFAULT_MIN_EVENT_SIZE,
            },
            class_signal: 1.0,
            event_signal: 1.0,
            noise_sigma: 0.1,
            dims: FeatureLayout { cnn: 64, anp: 32 },
            streams: 20,
            min_event_size: DEFAULT_MIN_EVENT_SIZE,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        let ipe = &self.images_per_event;
        if ipe.min == 0 {
            return Err(Error::Unsatisfiable(
                "images_per_event.min must be at least 1".into(),
            ));
        }
        if !(ipe.mean.is_finite() && ipe.mean > 0.0) || !(ipe.std.is_finite() && ipe.std >= 0.0) {
            return Err(Error::Unsatisfiable(format!(
                "images_per_event needs mean > 0 and std >= 0, got mean {} std {}",
                ipe.mean, ipe.std
            )));
        }
        if ipe.std == 0.0 && (ipe.mean.round() as usize) < ipe.min {
            return Err(Error::Unsatisfiable(format!(
                "images_per_event min {} exceeds mean {} with std 0",
                ipe.min, ipe.mean
            )));
        }
        for (name, v) in [
            ("class_signal", self.class_signal),
            ("event_signal", self.event_signal),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Unsatisfiable(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        let total: usize = self.events_per_class.iter().sum();
        if total == 0 {
            return Err(Error::Unsatisfiable("no events requested".into()));
        }
        if self.streams == 0 || self.streams > total {
            return Err(Error::Unsatisfiable(format!(
                "streams must lie in [1, {total}], got {}",
                self.streams
            )));
        }
        if self.min_event_size == 0 {
            return Err(Error::Unsatisfiable(
                "min_event_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Manifest, feature matrices and catalog of one generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub config: SynthConfig,
    pub manifest: DatasetManifest,
    pub cnn: FeatureMatrix,
    pub anp: FeatureMatrix,
    pub catalog: AnpCatalog,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn draw_event_size(rng: &mut ChaCha8Rng, ipe: &ImagesPerEvent) -> usize {
    if ipe.std == 0.0 {
        return ipe.mean.round() as usize;
    }
    let normal = Normal::new(ipe.mean, ipe.std).expect("validated std");
    let x: f64 = normal.sample(rng);
    (x.round().max(0.0) as usize).max(ipe.min)
}

fn synth_catalog(rng: &mut ChaCha8Rng, n: usize) -> Result<AnpCatalog> {
    let entries = (0..n)
        .map(|i| {
            let value = loop {
                let v: f64 = rng.random_range(-2.0..=2.0);
                if v.abs() >= ZERO_BAND {
                    break v;
                }
            };
            AnpEntry {
                name: format!("synthetic_anp_{i:04}"),
                sentiment_value: value,
            }
        })
        .collect();
    AnpCatalog::new(entries, n)
}

pub fn generate_dataset(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dims = config.dims;
    let latent = dims.fused();

    let catalog = synth_catalog(&mut rng, dims.anp)?;
    let centroids: Vec<Vec<f64>> = (0..3).map(|_| gaussian_vec(&mut rng, latent)).collect();

    let mut plan: Vec<SentimentLabel> = SentimentLabel::ALL
        .iter()
        .zip(config.events_per_class)
        .flat_map(|(&l, n)| std::iter::repeat_n(l, n))
        .collect();
    plan.shuffle(&mut rng);
    let n_events = plan.len();

    let mut streams: Vec<Stream> = (0..config.streams)
        .map(|s| Stream {
            stream_id: format!("day{s:02}"),
            images: Vec::new(),
        })
        .collect();
    let mut events = Vec::with_capacity(n_events);
    let mut cnn = Vec::new();
    let mut anp = Vec::new();

    for (j, &label) in plan.iter().enumerate() {
        let s = j * config.streams / n_events;
        let size = draw_event_size(&mut rng, &config.images_per_event);
        let scene = gaussian_vec(&mut rng, latent);
        let base: Vec<f64> = centroids[label.index()]
            .iter()
            .zip(&scene)
            .map(|(c, e)| config.class_signal * c + config.event_signal * e)
            .collect();
        let stream = &mut streams[s];
        let mut image_ids = Vec::with_capacity(size);
        for _ in 0..size {
            let idx = stream.images.len();
            let image_id = format!("{}_{idx:05}", stream.stream_id);
            stream.images.push(ImageEntry {
                image_id: image_id.clone(),
                timestamp: idx as u64 * CAPTURE_INTERVAL_S,
            });
            image_ids.push(image_id);
            for (k, b) in base.iter().enumerate() {
                let noise: f64 = if config.noise_sigma > 0.0 {
                    StandardNormal.sample(&mut rng)
                } else {
                    0.0
                };
                let z = b + config.noise_sigma * noise;
                if k < dims.cnn {
                    cnn.push(z as f32);
                } else {
                    anp.push((1.0 - (-z.max(0.0)).exp()) as f32);
                }
            }
        }
        events.push(Event {
            event_id: format!("ev{j:04}"),
            stream_id: streams[s].stream_id.clone(),
            image_ids,
            label: Some(label),
        });
    }

    let n_images: usize = streams.iter().map(|s| s.images.len()).sum();
    let cnn = FeatureMatrix::new(n_images, dims.cnn, cnn)?;
    let anp = FeatureMatrix::new(n_images, dims.anp, anp)?;
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        min_event_size: config.min_event_size,
        feature_dims: dims,
        streams,
        events,
        features: FeatureRefs {
            cnn: FileRef {
                path: CNN_FILE.into(),
                sha256: sha256_hex(&cnn.to_bytes()),
            },
            anp: FileRef {
                path: ANP_FILE.into(),
                sha256: sha256_hex(&anp.to_bytes()),
            },
        },
        anp_catalog: FileRef {
            path: CATALOG_FILE.into(),
            sha256: catalog.sha256().to_string(),
        },
        discarded: Vec::new(),
    };
    manifest.validate()?;
    Ok(SynthDataset {
        config: *config,
        manifest,
        cnn,
        anp,
        catalog,
    })
}

/// Write manifest, both feature files, the catalog and the resolved config
/// into `dir`. Returns the manifest path.
pub fn write_dataset(dataset: &SynthDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, bytes: &[u8]| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(p, e))
    };
    write(CNN_FILE, &dataset.cnn.to_bytes())?;
    write(ANP_FILE, &dataset.anp.to_bytes())?;
    write(CATALOG_FILE, dataset.catalog.to_csv_string().as_bytes())?;
    let mut config = serde_json::to_string_pretty(&dataset.config).expect("config serializes");
    config.push('\n');
    write(CONFIG_FILE, config.as_bytes())?;
    let manifest_path = dir.join(MANIFEST_FILE);
    crate::datamodel::save_manifest(&dataset.manifest, &manifest_path)?;
    Ok(manifest_path)
}
