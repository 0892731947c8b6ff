//! Dataset manifest: streams, events and pinned references to the feature
//! files and the ANP catalog.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::types::{Event, FeatureLayout};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_MIN_EVENT_SIZE: usize = 6;

fn default_min_event_size() -> usize {
    DEFAULT_MIN_EVENT_SIZE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub image_id: String,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stream {
    pub stream_id: String,
    pub images: Vec<ImageEntry>,
}

/// Path plus pinned content hash. An empty `sha256` disables the check.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FileRef {
    pub path: String,
    #[serde(default)]
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureRefs {
    pub cnn: FileRef,
    pub anp: FileRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    #[serde(default = "default_min_event_size")]
    pub min_event_size: usize,
    #[serde(default)]
    pub feature_dims: FeatureLayout,
    pub streams: Vec<Stream>,
    #[serde(default)]
    pub events: Vec<Event>,
    pub features: FeatureRefs,
    pub anp_catalog: FileRef,
    /// Image ids excluded from the labeled set (short events and anything
    /// else dropped upstream).
    #[serde(default)]
    pub discarded: Vec<String>,
}

/// Counts from [`filter_short_events`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FilterReport {
    pub removed_events: usize,
    pub discarded_images: usize,
}

impl DatasetManifest {
    pub fn new(streams: Vec<Stream>, events: Vec<Event>) -> Self {
        DatasetManifest {
            version: MANIFEST_VERSION,
            min_event_size: DEFAULT_MIN_EVENT_SIZE,
            feature_dims: FeatureLayout::FULL,
            streams,
            events,
            features: FeatureRefs::default(),
            anp_catalog: FileRef::default(),
            discarded: Vec::new(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let manifest: DatasetManifest =
            serde_json::from_str(text).map_err(|e| Error::parse("manifest", e))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn image_count(&self) -> usize {
        self.streams.iter().map(|s| s.images.len()).sum()
    }

    /// Image ids in manifest order: streams in order, images in stream order.
    /// Feature-file rows follow this order.
    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.streams
            .iter()
            .flat_map(|s| s.images.iter().map(|i| i.image_id.as_str()))
    }

    /// Map from image id to its row in the feature files.
    pub fn row_index(&self) -> HashMap<&str, usize> {
        self.image_ids()
            .enumerate()
            .map(|(i, id)| (id, i))
            .collect()
    }

    pub fn labeled_events(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.label.is_some())
    }

    /// Check every manifest invariant.
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::UnsupportedVersion {
                what: "manifest",
                found: self.version as u64,
                expected: MANIFEST_VERSION as u64,
            });
        }
        if self.min_event_size == 0 {
            return Err(Error::InvalidManifest(
                "min_event_size must be positive".into(),
            ));
        }
        self.feature_dims.validate()?;

        // image id -> (stream index, position within stream)
        let mut position: HashMap<&str, (usize, usize)> = HashMap::new();
        let mut stream_ids: HashMap<&str, usize> = HashMap::new();
        for (si, stream) in self.streams.iter().enumerate() {
            if stream_ids.insert(&stream.stream_id, si).is_some() {
                return Err(Error::DuplicateStream(stream.stream_id.clone()));
            }
            let mut last_ts = 0u64;
            for (pi, image) in stream.images.iter().enumerate() {
                if position.insert(&image.image_id, (si, pi)).is_some() {
                    return Err(Error::DuplicateImage(image.image_id.clone()));
                }
                if pi > 0 && image.timestamp < last_ts {
                    return Err(Error::NonMonotonicTimestamp {
                        stream: stream.stream_id.clone(),
                        image: image.image_id.clone(),
                    });
                }
                last_ts = image.timestamp;
            }
        }

        let mut event_ids = HashSet::new();
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for event in &self.events {
            if !event_ids.insert(event.event_id.as_str()) {
                return Err(Error::DuplicateEvent(event.event_id.clone()));
            }
            if event.image_ids.is_empty() {
                return Err(Error::EmptyEvent(event.event_id.clone()));
            }
            let &stream_index =
                stream_ids
                    .get(event.stream_id.as_str())
                    .ok_or_else(|| Error::UnknownStream {
                        event: event.event_id.clone(),
                        stream: event.stream_id.clone(),
                    })?;
            let mut seen = HashSet::new();
            let mut prev: Option<usize> = None;
            for image in &event.image_ids {
                if !seen.insert(image.as_str()) {
                    return Err(Error::DuplicateImage(image.clone()));
                }
                let &(si, pi) =
                    position
                        .get(image.as_str())
                        .ok_or_else(|| Error::UnknownImage {
                            event: event.event_id.clone(),
                            image: image.clone(),
                        })?;
                if si != stream_index {
                    return Err(Error::NonContiguous(format!(
                        "image `{image}` of event `{}` is not in stream `{}`",
                        event.event_id, event.stream_id
                    )));
                }
                if let Some(p) = prev {
                    if pi != p + 1 {
                        return Err(Error::NonContiguous(format!(
                            "event `{}` skips or reorders images at `{image}`",
                            event.event_id
                        )));
                    }
                }
                prev = Some(pi);
                if let Some(first) = owner.insert(image.as_str(), event.event_id.as_str()) {
                    return Err(Error::OverlappingEvents {
                        image: image.clone(),
                        first: first.to_string(),
                        second: event.event_id.clone(),
                    });
                }
            }
        }

        for image in &self.discarded {
            if !position.contains_key(image.as_str()) {
                return Err(Error::InvalidManifest(format!(
                    "discard list names unknown image `{image}`"
                )));
            }
        }
        Ok(())
    }
}

/// Read and validate a manifest file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DatasetManifest::from_json_str(&text)
}

pub fn save_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = manifest.to_json_string();
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Resolve a manifest-relative file reference.
pub fn resolve_ref(manifest_path: &Path, file: &FileRef) -> PathBuf {
    let p = Path::new(&file.path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(p)
    }
}

/// Remove events shorter than `min_event_size`, moving their images to the
/// discard list.
pub fn filter_short_events(manifest: &DatasetManifest) -> (DatasetManifest, FilterReport) {
    let mut out = manifest.clone();
    let mut report = FilterReport::default();
    let min = manifest.min_event_size;
    out.events.clear();
    for event in &manifest.events {
        if event.len() < min {
            report.removed_events += 1;
            report.discarded_images += event.len();
            out.discarded.extend(event.image_ids.iter().cloned());
        } else {
            out.events.push(event.clone());
        }
    }
    (out, report)
}
