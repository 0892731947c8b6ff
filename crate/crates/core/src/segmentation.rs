//! Temporal segmentation of a photostream into events.
//!
//! Greedy agglomerative clustering under a contiguity constraint: only
//! neighbouring segments may merge, and at every step the neighbouring pair
//! with the smallest centroid cosine distance merges first. Manifests that
//! already carry event boundaries (e.g. from an external clusterer) can be
//! used as-is through [`apply_manifest_boundaries`].

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::datamodel::{DatasetManifest, Event, DEFAULT_MIN_EVENT_SIZE};
use crate::error::{Error, Result};

pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    /// Merging stops once the closest neighbouring pair is farther than this
    /// (cosine distance, so `[0, 2]`).
    pub merge_threshold: f64,
    pub min_event_size: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams {
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            min_event_size: DEFAULT_MIN_EVENT_SIZE,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.merge_threshold) {
            return Err(Error::InvalidParameter(format!(
                "merge threshold must lie in [0, 2], got {}",
                self.merge_threshold
            )));
        }
        if self.min_event_size == 0 {
            return Err(Error::InvalidParameter(
                "min_event_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

struct Segment {
    start: usize,
    end: usize,
    sum: Vec<f64>,
}

/// Cosine distance between two (unnormalized) centroids, clamped to `[0, 2]`.
/// A zero vector is at distance 0 from another zero vector and 1 from
/// anything else.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    match (na > 0.0, nb > 0.0) {
        (false, false) => 0.0,
        (true, true) => (1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 2.0),
        _ => 1.0,
    }
}

/// Segment an ordered stream of vectors into contiguous index ranges.
pub fn segment_ranges<V: AsRef<[f64]>>(
    vectors: &[V],
    params: &SegmentationParams,
) -> Result<Vec<Range<usize>>> {
    params.validate()?;
    if vectors.is_empty() {
        return Err(Error::EmptyStream);
    }
    let dim = vectors[0].as_ref().len();
    let mut segments = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        if let Some(j) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        segments.push(Segment {
            start: i,
            end: i + 1,
            sum: v.to_vec(),
        });
    }

    // gaps[i] is the distance between segments[i] and segments[i + 1]
    let mut gaps: Vec<f64> = segments
        .windows(2)
        .map(|w| cosine_distance(&w[0].sum, &w[1].sum))
        .collect();

    while !gaps.is_empty() {
        // first minimum wins ties
        let (best, &d) = gaps
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, &f64)>, (i, g)| match acc {
                Some((_, m)) if *m <= *g => acc,
                _ => Some((i, g)),
            })
            .expect("non-empty gaps");
        if d > params.merge_threshold {
            break;
        }
        let right = segments.remove(best + 1);
        let left = &mut segments[best];
        left.end = right.end;
        for (x, y) in left.sum.iter_mut().zip(&right.sum) {
            *x += y;
        }
        gaps.remove(best);
        if best > 0 {
            gaps[best - 1] = cosine_distance(&segments[best - 1].sum, &segments[best].sum);
        }
        if best < gaps.len() {
            gaps[best] = cosine_distance(&segments[best].sum, &segments[best + 1].sum);
        }
    }
    Ok(segments.into_iter().map(|s| s.start..s.end).collect())
}

/// Segment one stream into unlabeled events named `<stream_id>-e<index>`.
pub fn segment_stream<V: AsRef<[f64]>>(
    stream_id: &str,
    image_ids: &[String],
    vectors: &[V],
    params: &SegmentationParams,
) -> Result<Vec<Event>> {
    if image_ids.len() != vectors.len() {
        return Err(Error::LengthMismatch {
            expected: image_ids.len(),
            found: vectors.len(),
        });
    }
    let ranges = segment_ranges(vectors, params)?;
    Ok(ranges
        .into_iter()
        .enumerate()
        .map(|(k, r)| Event {
            event_id: format!("{stream_id}-e{k:04}"),
            stream_id: stream_id.to_string(),
            image_ids: image_ids[r].to_vec(),
            label: None,
        })
        .collect())
}

/// Use the manifest's own events, checking that within every stream they
/// appear in stream order without overlap.
pub fn apply_manifest_boundaries(manifest: &DatasetManifest) -> Result<Vec<Event>> {
    if manifest.events.is_empty() {
        return Err(Error::NoBoundaries);
    }
    let mut position: HashMap<&str, usize> = HashMap::new();
    for stream in &manifest.streams {
        for (i, image) in stream.images.iter().enumerate() {
            position.insert(&image.image_id, i);
        }
    }
    let mut last_end: HashMap<&str, usize> = HashMap::new();
    for event in &manifest.events {
        let first = event
            .image_ids
            .first()
            .ok_or_else(|| Error::EmptyEvent(event.event_id.clone()))?;
        let start = *position
            .get(first.as_str())
            .ok_or_else(|| Error::UnknownImage {
                event: event.event_id.clone(),
                image: first.clone(),
            })?;
        if let Some(&end) = last_end.get(event.stream_id.as_str()) {
            if start < end {
                return Err(Error::NonContiguous(format!(
                    "event `{}` starts before the previous event of stream `{}` ends",
                    event.event_id, event.stream_id
                )));
            }
        }
        last_end.insert(&event.stream_id, start + event.len());
    }
    Ok(manifest.events.clone())
}

fn boundaries(events: &[Event]) -> (Vec<usize>, usize) {
    let mut out = Vec::new();
    let mut pos = 0;
    for (k, e) in events.iter().enumerate() {
        if k > 0 {
            out.push(pos);
        }
        pos += e.len();
    }
    (out, pos)
}

/// F1 score of predicted event boundaries against the truth, where a
/// predicted boundary within `slack` frames of an unmatched true boundary
/// counts as a hit. Both segmentations must cover the same number of frames.
pub fn boundary_f1(predicted: &[Event], truth: &[Event], slack: usize) -> Result<f64> {
    let (pred, n_pred) = boundaries(predicted);
    let (gold, n_gold) = boundaries(truth);
    if n_pred != n_gold {
        return Err(Error::LengthMismatch {
            expected: n_gold,
            found: n_pred,
        });
    }
    if pred.is_empty() && gold.is_empty() {
        return Ok(1.0);
    }
    if pred.is_empty() || gold.is_empty() {
        return Ok(0.0);
    }
    // both lists are sorted; greedy two-pointer matching is maximal
    let (mut i, mut j, mut hits) = (0, 0, 0usize);
    while i < pred.len() && j < gold.len() {
        if pred[i].abs_diff(gold[j]) <= slack {
            hits += 1;
            i += 1;
            j += 1;
        } else if pred[i] < gold[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    if hits == 0 {
        return Ok(0.0);
    }
    let precision = hits as f64 / pred.len() as f64;
    let recall = hits as f64 / gold.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}
