use std::fs;
use std::path::Path;

use egosenti::datamodel::{
    filter_short_events, load_model, save_model, Event, FeatureLayout, SentimentLabel,
};
use egosenti::eval::{classify_event, run_cv, CvConfig, EventSource, EventVote};
use egosenti::features::{FusedVector, NormalizationConfig};
use egosenti::pipeline::{Dataset, PathOverrides};
use egosenti::segmentation::{segment_stream, SegmentationParams};
use egosenti::svm::{argmax_label, decision_values, train_multiclass, TrainConfig};
use egosenti::synth::{generate_dataset, write_dataset, SynthConfig};
use egosenti::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{
    EvaluateArgs, EventsFrom, Inputs, PredictArgs, SegmentArgs, SynthArgs, TrainArgs, TrainFlags,
};

fn load(inputs: &Inputs) -> Result<Dataset> {
    let overrides = PathOverrides {
        cnn: inputs.cnn_features.clone(),
        anp: inputs.anp_features.clone(),
        catalog: inputs.catalog.clone(),
    };
    Dataset::load(&inputs.manifest, &overrides)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn train_config(flags: &TrainFlags, seed: u64) -> Result<(TrainConfig, NormalizationConfig)> {
    let train = TrainConfig {
        c: flags.c,
        class_weights: flags.class_weights,
        tolerance: flags.tolerance,
        max_epochs: flags.max_epochs,
        seed,
        bias_scale: flags.bias_scale,
    };
    train.validate()?;
    let normalization = NormalizationConfig {
        srn_exponent: flags.srn_alpha,
        ..NormalizationConfig::default()
    };
    normalization.validate()?;
    Ok((train, normalization))
}

pub fn segment(args: SegmentArgs) -> Result<()> {
    let params = SegmentationParams {
        merge_threshold: args.threshold,
        min_event_size: args.min_event_size,
    };
    params.validate()?;
    let data = load(&args.inputs)?;
    log::info!("fusing features");
    let vectors = data.fuse(&NormalizationConfig::default())?;
    let rows = data.manifest.row_index();

    log::info!("segmenting {} streams", data.manifest.streams.len());
    let mut events = Vec::new();
    for stream in &data.manifest.streams {
        let ids: Vec<String> = stream.images.iter().map(|i| i.image_id.clone()).collect();
        let stream_vectors: Vec<&[f64]> = ids
            .iter()
            .map(|id| vectors[rows[id.as_str()]].as_slice())
            .collect();
        if stream_vectors.is_empty() {
            continue;
        }
        events.extend(segment_stream(
            &stream.stream_id,
            &ids,
            &stream_vectors,
            &params,
        )?);
    }
    let mut segmented = data.manifest.clone();
    segmented.events = events;
    segmented.min_event_size = params.min_event_size;
    let (kept, report) = filter_short_events(&segmented);
    let discarded = &kept.discarded[data.manifest.discarded.len()..];

    let output = json!({
        "config": {
            "command": "segment",
            "inputs": args.inputs,
            "segmentation": params,
            "out": args.out,
        },
        "summary": {
            "events": kept.events.len(),
            "removed_events": report.removed_events,
            "discarded_images": report.discarded_images,
        },
        "events": kept.events,
        "discarded": discarded,
    });
    write_json(&args.out, &output)?;
    println!(
        "{} events, {} images discarded",
        kept.events.len(),
        report.discarded_images
    );
    Ok(())
}

pub fn train(args: TrainArgs) -> Result<()> {
    let (config, normalization) = train_config(&args.train, args.seed)?;
    let data = load(&args.inputs)?;
    let (manifest, report) = filter_short_events(&data.manifest);
    if report.removed_events > 0 {
        log::info!(
            "dropped {} events ({} images) below {} images",
            report.removed_events,
            report.discarded_images,
            manifest.min_event_size
        );
    }
    log::info!("fusing features");
    let vectors = data.fuse(&normalization)?;
    let rows = manifest.row_index();
    let mut samples: Vec<&[f64]> = Vec::new();
    let mut labels = Vec::new();
    let mut events = 0;
    for event in manifest.labeled_events() {
        events += 1;
        for id in &event.image_ids {
            samples.push(vectors[rows[id.as_str()]].as_slice());
            labels.push(event.label.expect("labeled"));
        }
    }
    if samples.is_empty() {
        return Err(Error::NoLabels);
    }
    log::info!("training on {} images from {events} events", samples.len());
    let mut model = train_multiclass(&samples, &labels, manifest.feature_dims, &config)?;
    model.normalization_config = normalization;
    model.anp_catalog_hash = data.catalog.sha256().to_string();
    save_model(&model, &args.out)?;

    let echo = json!({
        "command": "train",
        "inputs": args.inputs,
        "train": config,
        "normalization": normalization,
        "anp_catalog_hash": model.anp_catalog_hash,
        "images": samples.len(),
        "events": events,
        "diagnostics": model.diagnostics,
        "out": args.out,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&echo).expect("echo serializes")
    );
    Ok(())
}

#[derive(Serialize)]
struct ImagePrediction<'a> {
    image_id: &'a str,
    label: SentimentLabel,
    /// Decision values in class order.
    scores: [f64; 3],
}

#[derive(Serialize)]
struct EventPrediction<'a> {
    event_id: &'a str,
    truth: Option<SentimentLabel>,
    #[serde(flatten)]
    vote: EventVote,
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let data = load(&args.inputs)?;
    let (model, warnings) = load_model(&args.model, Some(data.catalog.sha256()))?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    check_layout(model.feature_dims, data.manifest.feature_dims)?;
    log::info!("fusing features");
    let vectors: Vec<FusedVector> = data.fuse(&model.normalization_config)?;

    let mut images = Vec::with_capacity(vectors.len());
    for (id, v) in data.manifest.image_ids().zip(&vectors) {
        let scores = decision_values(&model, v.as_slice())?;
        images.push(ImagePrediction {
            image_id: id,
            label: argmax_label(&scores),
            scores,
        });
    }
    let rows = data.manifest.row_index();
    let mut events = Vec::with_capacity(data.manifest.events.len());
    for event in &data.manifest.events {
        events.push(predict_event(&model, event, &rows, &vectors)?);
    }
    log::info!(
        "labeled {} images and {} events",
        images.len(),
        events.len()
    );

    let output = json!({
        "config": {
            "command": "predict",
            "model": args.model,
            "inputs": args.inputs,
            "hyperparams": model.hyperparams,
            "normalization": model.normalization_config,
            "anp_catalog_hash": model.anp_catalog_hash,
            "out": args.out,
        },
        "warnings": warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "images": images,
        "events": events,
    });
    write_json(&args.out, &output)
}

fn check_layout(model: FeatureLayout, data: FeatureLayout) -> Result<()> {
    if model != data {
        return Err(Error::DimMismatch {
            expected: model.fused(),
            found: data.fused(),
        });
    }
    Ok(())
}

fn predict_event<'a>(
    model: &egosenti::datamodel::SvmModel,
    event: &'a Event,
    rows: &std::collections::HashMap<&str, usize>,
    vectors: &[FusedVector],
) -> Result<EventPrediction<'a>> {
    let members: Vec<&[f64]> = event
        .image_ids
        .iter()
        .map(|id| vectors[rows[id.as_str()]].as_slice())
        .collect();
    let vote =
        classify_event(model, &members).map_err(|_| Error::EmptyEvent(event.event_id.clone()))?;
    Ok(EventPrediction {
        event_id: &event.event_id,
        truth: event.label,
        vote,
    })
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let (train, normalization) = train_config(&args.train, args.seed)?;
    let events = match args.events {
        EventsFrom::Manifest => EventSource::Manifest,
        EventsFrom::Segmented => {
            let params = SegmentationParams {
                merge_threshold: args.threshold,
                ..SegmentationParams::default()
            };
            params.validate()?;
            EventSource::Segmented(params)
        }
    };
    let config = CvConfig {
        folds: args.folds,
        seed: args.seed,
        train,
        normalization,
        events,
    };
    if config.folds < 2 {
        return Err(Error::BadFoldCount(config.folds));
    }
    let data = load(&args.inputs)?;
    let min_size = match events {
        EventSource::Manifest => data.manifest.min_event_size,
        EventSource::Segmented(p) => p.min_event_size,
    };
    log::info!("fusing features");
    let vectors = data.fuse(&normalization)?;
    log::info!(
        "running {}-fold cross-validation (min event size {min_size})",
        config.folds
    );
    let report = run_cv(&data.manifest, &vectors, &config)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["inputs"] = serde_json::to_value(&args.inputs).expect("inputs serialize");
    value["anp_catalog_hash"] = Value::from(data.catalog.sha256());
    write_json(&args.out, &value)?;
    print!("{}", report.render_table());
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| match source.kind() {
                std::io::ErrorKind::NotFound => Error::FileNotFound(path.clone()),
                _ => Error::Io {
                    path: path.clone(),
                    source,
                },
            })?;
            serde_json::from_str::<SynthConfig>(&text).map_err(|e| Error::Parse {
                what: "synth config".into(),
                message: e.to_string(),
            })?
        }
        None => SynthConfig::default(),
    };
    config.seed = args.seed;
    if let Some(v) = args.events_per_class {
        config.events_per_class = v;
    }
    if let Some(v) = args.class_signal {
        config.class_signal = v;
    }
    if let Some(v) = args.event_signal {
        config.event_signal = v;
    }
    if let Some(v) = args.noise_sigma {
        config.noise_sigma = v;
    }
    if let Some(v) = args.streams {
        config.streams = v;
    }
    if args.full_dims {
        config.dims = FeatureLayout::FULL;
    }
    if let Some(v) = args.cnn_dim {
        config.dims.cnn = v;
    }
    if let Some(v) = args.anp_dim {
        config.dims.anp = v;
    }
    let dataset = generate_dataset(&config)?;
    fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    let manifest = write_dataset(&dataset, &args.out)?;
    println!(
        "{} images in {} events written to {}",
        dataset.manifest.image_count(),
        dataset.manifest.events.len(),
        manifest.display()
    );
    Ok(())
}
