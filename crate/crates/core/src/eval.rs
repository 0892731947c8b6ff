//! Event-level majority vote and event-stratified k-fold cross-validation.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{
    filter_short_events, DatasetManifest, Event, SentimentLabel, SolverDiagnostics, SvmModel,
};
use crate::error::{Error, Result};
use crate::features::{FusedVector, NormalizationConfig};
use crate::segmentation::{segment_stream, SegmentationParams};
use crate::svm::{argmax_label, decision_values, train_multiclass, TrainConfig};

pub const DEFAULT_FOLDS: usize = 10;

/// Outcome of the majority vote over one event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventVote {
    pub label: SentimentLabel,
    /// Images predicted as each class, in [`SentimentLabel::ALL`] order.
    pub votes: [usize; 3],
    /// For each class, the summed decision value of the images that voted for it.
    pub margin_sums: [f64; 3],
}

/// Majority vote over per-image `(predicted label, winning decision value)`
/// pairs. Vote ties go to the larger margin sum, then Neutral > Positive >
/// Negative.
pub fn aggregate_votes(predictions: &[(SentimentLabel, f64)]) -> Result<EventVote> {
    if predictions.is_empty() {
        return Err(Error::EmptyEvent(String::new()));
    }
    let mut votes = [0usize; 3];
    let mut margins: [Vec<f64>; 3] = Default::default();
    for &(label, margin) in predictions {
        votes[label.index()] += 1;
        margins[label.index()].push(margin);
    }
    // sum in sorted order so the result does not depend on image order
    let mut margin_sums = [0.0; 3];
    for (k, m) in margins.iter_mut().enumerate() {
        m.sort_by(f64::total_cmp);
        margin_sums[k] = m.iter().sum();
    }
    let mut best = SentimentLabel::ALL[0];
    for label in &SentimentLabel::ALL[1..] {
        let (k, b) = (label.index(), best.index());
        let better = votes[k] > votes[b]
            || (votes[k] == votes[b]
                && (margin_sums[k] > margin_sums[b]
                    || (margin_sums[k] == margin_sums[b]
                        && label.tie_priority() > best.tie_priority())));
        if better {
            best = *label;
        }
    }
    Ok(EventVote {
        label: best,
        votes,
        margin_sums,
    })
}

/// Classify every image of an event and aggregate by majority vote.
pub fn classify_event<V: AsRef<[f64]>>(model: &SvmModel, vectors: &[V]) -> Result<EventVote> {
    let predictions = vectors
        .iter()
        .map(|v| {
            let scores = decision_values(model, v.as_ref())?;
            let label = argmax_label(&scores);
            Ok((label, scores[label.index()]))
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate_votes(&predictions)
}

/// Event-to-fold map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, event_id: &str) -> Option<usize> {
        self.assignment.get(event_id).copied()
    }

    /// Split `events` into (training, held-out) for `fold`. Events without
    /// an assignment are left out of both.
    pub fn split<'e>(&self, events: &'e [Event], fold: usize) -> (Vec<&'e Event>, Vec<&'e Event>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for e in events {
            match self.fold_of(&e.event_id) {
                Some(f) if f == fold => test.push(e),
                Some(_) => train.push(e),
                None => {}
            }
        }
        (train, test)
    }
}

/// Stratified fold assignment: within each class the events are shuffled
/// with a seeded RNG and dealt round-robin, the deal continuing across
/// classes so fold sizes stay balanced. Returns warnings for classes with
/// fewer than `k` events.
pub fn make_folds(events: &[Event], k: usize, seed: u64) -> Result<(FoldAssignment, Vec<String>)> {
    if k < 2 {
        return Err(Error::BadFoldCount(k));
    }
    let mut by_class: [Vec<&str>; 3] = Default::default();
    for e in events {
        if let Some(label) = e.label {
            by_class[label.index()].push(&e.event_id);
        }
    }
    if by_class.iter().all(|c| c.is_empty()) {
        return Err(Error::NoLabels);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut next = 0usize;
    for (class, ids) in by_class.iter_mut().enumerate() {
        if ids.len() < k {
            warnings.push(format!(
                "class {} has {} events, fewer than {k} folds",
                SentimentLabel::ALL[class],
                ids.len()
            ));
        }
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            assignment.insert(id.to_string(), next % k);
            next += 1;
        }
    }
    Ok((FoldAssignment { k, assignment }, warnings))
}

/// Per-class accuracy (class-conditional recall, percent) and confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    /// `None` where the class does not occur in the truth.
    pub accuracy: [Option<f64>; 3],
    /// Unweighted mean over the classes that occur.
    pub macro_mean: Option<f64>,
    /// Rows: truth, columns: prediction, both in [`SentimentLabel::ALL`] order.
    pub confusion: [[usize; 3]; 3],
}

impl ClassMetrics {
    fn from_confusion(confusion: [[usize; 3]; 3]) -> Self {
        let mut accuracy = [None; 3];
        for k in 0..3 {
            let total: usize = confusion[k].iter().sum();
            if total > 0 {
                accuracy[k] = Some(confusion[k][k] as f64 / total as f64 * 100.0);
            }
        }
        let defined: Vec<f64> = accuracy.iter().flatten().copied().collect();
        let macro_mean = if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        };
        ClassMetrics {
            accuracy,
            macro_mean,
            confusion,
        }
    }
}

pub fn compute_metrics(
    truth: &[SentimentLabel],
    predicted: &[SentimentLabel],
) -> Result<ClassMetrics> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidParameter("no items to score".into()));
    }
    let mut confusion = [[0usize; 3]; 3];
    for (t, p) in truth.iter().zip(predicted) {
        confusion[t.index()][p.index()] += 1;
    }
    Ok(ClassMetrics::from_confusion(confusion))
}

/// Where the evaluated events come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "source")]
pub enum EventSource {
    /// The manifest's labeled events (short ones filtered out).
    Manifest,
    /// Segment every stream, drop short segments, and label each segment by
    /// the majority ground-truth label of its images.
    Segmented(SegmentationParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub train: TrainConfig,
    pub normalization: NormalizationConfig,
    pub events: EventSource,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: DEFAULT_FOLDS,
            seed: 0,
            train: TrainConfig::default(),
            normalization: NormalizationConfig::default(),
            events: EventSource::Manifest,
        }
    }
}

/// Per-event record kept for the event-basis spread statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventOutcome {
    pub event_id: String,
    pub truth: SentimentLabel,
    pub predicted: SentimentLabel,
    /// Percent of the event's images classified correctly.
    pub image_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_images: usize,
    pub test_images: usize,
    pub test_events: usize,
    pub image: ClassMetrics,
    pub event: ClassMetrics,
    /// One entry per one-vs-all problem, in class order.
    pub solver: Vec<SolverDiagnostics>,
    #[serde(skip)]
    pub outcomes: Vec<EventOutcome>,
}

/// Score a fixed model on labeled events, each paired with the vectors of
/// its images.
pub fn evaluate_events(
    model: &SvmModel,
    events: &[(&Event, Vec<&[f64]>)],
) -> Result<(ClassMetrics, ClassMetrics, Vec<EventOutcome>)> {
    let mut image_truth = Vec::new();
    let mut image_pred = Vec::new();
    let mut event_truth = Vec::new();
    let mut event_pred = Vec::new();
    let mut outcomes = Vec::new();
    for (event, vectors) in events {
        let truth = event.label.ok_or_else(|| {
            Error::InvalidParameter(format!("event `{}` is unlabeled", event.event_id))
        })?;
        let mut predictions = Vec::with_capacity(vectors.len());
        for v in vectors {
            let scores = decision_values(model, v)?;
            let label = argmax_label(&scores);
            predictions.push((label, scores[label.index()]));
            image_truth.push(truth);
            image_pred.push(label);
        }
        let vote =
            aggregate_votes(&predictions).map_err(|_| Error::EmptyEvent(event.event_id.clone()))?;
        let correct = predictions.iter().filter(|(l, _)| *l == truth).count();
        outcomes.push(EventOutcome {
            event_id: event.event_id.clone(),
            truth,
            predicted: vote.label,
            image_accuracy: correct as f64 / predictions.len() as f64 * 100.0,
        });
        event_truth.push(truth);
        event_pred.push(vote.label);
    }
    Ok((
        compute_metrics(&image_truth, &image_pred)?,
        compute_metrics(&event_truth, &event_pred)?,
        outcomes,
    ))
}

/// Labeled events used for evaluation, per [`EventSource`].
pub fn evaluation_events<V: AsRef<[f64]>>(
    manifest: &DatasetManifest,
    vectors: &[V],
    source: &EventSource,
) -> Result<Vec<Event>> {
    match source {
        EventSource::Manifest => {
            let (filtered, _) = filter_short_events(manifest);
            Ok(filtered
                .events
                .into_iter()
                .filter(|e| e.label.is_some())
                .collect())
        }
        EventSource::Segmented(params) => {
            let mut truth: HashMap<&str, SentimentLabel> = HashMap::new();
            for e in manifest.labeled_events() {
                for id in &e.image_ids {
                    truth.insert(id, e.label.unwrap());
                }
            }
            let mut out = Vec::new();
            let mut row = 0usize;
            for stream in &manifest.streams {
                let n = stream.images.len();
                if n == 0 {
                    continue;
                }
                let ids: Vec<String> = stream.images.iter().map(|i| i.image_id.clone()).collect();
                let segs = segment_stream(&stream.stream_id, &ids, &vectors[row..row + n], params)?;
                row += n;
                for mut seg in segs {
                    if seg.len() < params.min_event_size {
                        continue;
                    }
                    let mut counts = [0usize; 3];
                    for id in &seg.image_ids {
                        if let Some(l) = truth.get(id.as_str()) {
                            counts[l.index()] += 1;
                        }
                    }
                    if counts.iter().all(|&c| c == 0) {
                        continue;
                    }
                    seg.label = Some(argmax_label(&counts.map(|c| c as f64)));
                    out.push(seg);
                }
            }
            Ok(out)
        }
    }
}

/// Mean entry for one class column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSummary {
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllSummary {
    pub mean: Option<f64>,
    /// Sample standard deviation of the per-fold macro accuracy.
    pub std: Option<f64>,
    pub std_basis: &'static str,
    /// Sample standard deviation over held-out events (per-event image
    /// accuracy at image level, 0/100 correctness at event level).
    pub std_events: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub positive: ClassSummary,
    pub negative: ClassSummary,
    pub neutral: ClassSummary,
    pub all: AllSummary,
}

impl LevelSummary {
    fn class(&self, label: SentimentLabel) -> Option<f64> {
        match label {
            SentimentLabel::Positive => self.positive.mean,
            SentimentLabel::Neutral => self.neutral.mean,
            SentimentLabel::Negative => self.negative.mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PooledConfusion {
    pub image: [[usize; 3]; 3],
    pub event: [[usize; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub image: LevelSummary,
    pub event: LevelSummary,
    pub confusion: PooledConfusion,
    pub folds: Vec<FoldResult>,
    pub warnings: Vec<String>,
    pub config: CvConfig,
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

fn sample_std(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

fn summarize(per_fold: &[&ClassMetrics], per_event: &[f64]) -> LevelSummary {
    let class_mean = |k: usize| ClassSummary {
        mean: mean(
            &per_fold
                .iter()
                .filter_map(|m| m.accuracy[k])
                .collect::<Vec<_>>(),
        ),
    };
    let positive = class_mean(0);
    let neutral = class_mean(1);
    let negative = class_mean(2);
    let defined: Vec<f64> = [positive.mean, neutral.mean, negative.mean]
        .iter()
        .flatten()
        .copied()
        .collect();
    let fold_macros: Vec<f64> = per_fold.iter().filter_map(|m| m.macro_mean).collect();
    LevelSummary {
        positive,
        negative,
        neutral,
        all: AllSummary {
            mean: mean(&defined),
            std: sample_std(&fold_macros),
            std_basis: "folds",
            std_events: sample_std(per_event),
        },
    }
}

fn add_confusion(into: &mut [[usize; 3]; 3], from: &[[usize; 3]; 3]) {
    for (r, s) in into.iter_mut().zip(from) {
        for (a, b) in r.iter_mut().zip(s) {
            *a += b;
        }
    }
}

/// Run k-fold cross-validation: per fold, train on the images of the
/// out-of-fold events and score the held-out events at image and event level.
pub fn run_cv(
    manifest: &DatasetManifest,
    vectors: &[FusedVector],
    config: &CvConfig,
) -> Result<EvalReport> {
    config.train.validate()?;
    if config.folds < 2 {
        return Err(Error::BadFoldCount(config.folds));
    }
    if vectors.len() != manifest.image_count() {
        return Err(Error::CountMismatch {
            expected: manifest.image_count(),
            found: vectors.len(),
        });
    }
    let layout = manifest.feature_dims;
    let events = evaluation_events(manifest, vectors, &config.events)?;
    let (folds, warnings) = make_folds(&events, config.folds, config.seed)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let rows = manifest.row_index();
    let event_rows: HashMap<&str, Vec<&[f64]>> = events
        .iter()
        .map(|e| {
            let v = e
                .image_ids
                .iter()
                .map(|id| vectors[rows[id.as_str()]].as_slice())
                .collect();
            (e.event_id.as_str(), v)
        })
        .collect();

    let results = (0..config.folds)
        .into_par_iter()
        .map(|fold| {
            let (train, test) = folds.split(&events, fold);
            let mut samples: Vec<&[f64]> = Vec::new();
            let mut labels = Vec::new();
            for e in &train {
                let v = &event_rows[e.event_id.as_str()];
                samples.extend(v.iter().copied());
                labels.extend(std::iter::repeat_n(e.label.unwrap(), v.len()));
            }
            let model = train_multiclass(&samples, &labels, layout, &config.train).map_err(
                |err| match err {
                    Error::MissingClass { label, .. } => Error::MissingClass {
                        label,
                        fold: Some(fold),
                    },
                    other => other,
                },
            )?;
            let held_out: Vec<(&Event, Vec<&[f64]>)> = test
                .iter()
                .map(|e| (*e, event_rows[e.event_id.as_str()].clone()))
                .collect();
            let test_images = held_out.iter().map(|(_, v)| v.len()).sum();
            let (image, event, outcomes) = evaluate_events(&model, &held_out)?;
            Ok(FoldResult {
                fold,
                train_images: samples.len(),
                test_images,
                test_events: held_out.len(),
                image,
                event,
                solver: model.diagnostics.clone(),
                outcomes,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut confusion = PooledConfusion {
        image: [[0; 3]; 3],
        event: [[0; 3]; 3],
    };
    for r in &results {
        add_confusion(&mut confusion.image, &r.image.confusion);
        add_confusion(&mut confusion.event, &r.event.confusion);
    }
    let image_per_event: Vec<f64> = results
        .iter()
        .flat_map(|r| r.outcomes.iter().map(|o| o.image_accuracy))
        .collect();
    let event_per_event: Vec<f64> = results
        .iter()
        .flat_map(|r| {
            r.outcomes
                .iter()
                .map(|o| if o.truth == o.predicted { 100.0 } else { 0.0 })
        })
        .collect();
    let image = summarize(
        &results.iter().map(|r| &r.image).collect::<Vec<_>>(),
        &image_per_event,
    );
    let event = summarize(
        &results.iter().map(|r| &r.event).collect::<Vec<_>>(),
        &event_per_event,
    );
    Ok(EvalReport {
        image,
        event,
        confusion,
        folds: results,
        warnings,
        config: *config,
    })
}

impl EvalReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table: per-class means and the overall mean/std.
    pub fn render_table(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "level", "Pos", "Neg", "Neu", "All", "std"
        );
        for (name, level) in [("image", &self.image), ("event", &self.event)] {
            let _ = writeln!(
                out,
                "{:<8} {:>8} {:>8} {:>8} {:>8} {:>8}",
                name,
                cell(level.class(SentimentLabel::Positive)),
                cell(level.class(SentimentLabel::Negative)),
                cell(level.class(SentimentLabel::Neutral)),
                cell(level.all.mean),
                cell(level.all.std),
            );
        }
        out
    }
}
